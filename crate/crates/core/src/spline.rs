//! Cubic spline interpolation on uniform grids: natural and periodic
//! boundary conditions, plus the tensor-product surface used by the
//! generating-function machinery.

use crate::error::{Error, Result};

/// Solve a tridiagonal system in place (Thomas algorithm).
/// `a` sub-, `b` main, `c` super-diagonal; `d` right-hand side.
fn solve_tridiag(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64]) {
    let n = d.len();
    let mut cp = vec![0.0; n];
    let mut bp = b[0];
    d[0] /= bp;
    for i in 1..n {
        cp[i - 1] = c[i - 1] / bp;
        bp = b[i] - a[i] * cp[i - 1];
        d[i] = (d[i] - a[i] * d[i - 1]) / bp;
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
}

/// Cubic spline on a uniform grid.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x0: f64,
    h: f64,
    values: Vec<f64>,
    /// second derivatives at the nodes
    m: Vec<f64>,
    periodic: bool,
    period: f64,
}

impl CubicSpline {
    /// Natural cubic spline through `values` at `x0 + i h`.
    pub fn natural(x0: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 3 {
            return Err(Error::invalid("spline needs at least 3 nodes"));
        }
        if !(h > 0.0) {
            return Err(Error::invalid("spline step must be positive"));
        }
        // natural: m[0] = m[n-1] = 0; interior from the standard system
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let a = vec![1.0; k];
            let b = vec![4.0; k];
            let c = vec![1.0; k];
            let mut d = vec![0.0; k];
            for i in 0..k {
                d[i] = 6.0 * (values[i] - 2.0 * values[i + 1] + values[i + 2]) / (h * h);
            }
            solve_tridiag(&a, &b, &c, &mut d);
            m[1..=k].copy_from_slice(&d);
        }
        Ok(CubicSpline {
            x0,
            h,
            values,
            m,
            periodic: false,
            period: 0.0,
        })
    }

    /// Periodic cubic spline: `values[i]` at `x0 + i h` for `i = 0..n`,
    /// wrapping with period `n h` (do not repeat the first node).
    pub fn periodic(x0: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 3 {
            return Err(Error::invalid("periodic spline needs at least 3 nodes"));
        }
        // cyclic system via Sherman-Morrison
        let mut d = vec![0.0; n];
        for i in 0..n {
            let prev = values[(i + n - 1) % n];
            let next = values[(i + 1) % n];
            d[i] = 6.0 * (prev - 2.0 * values[i] + next) / (h * h);
        }
        let a = vec![1.0; n];
        let gamma = -4.0;
        let b: Vec<f64> = {
            let mut b = vec![4.0; n];
            b[0] = 4.0 - gamma;
            b[n - 1] = 4.0 - 1.0 / gamma;
            b
        };
        let c = vec![1.0; n];
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = 1.0;
        let mut y = d.clone();
        solve_tridiag(&a, &b, &c, &mut y);
        let mut z = u;
        solve_tridiag(&a, &b, &c, &mut z);
        let fact = (y[0] + y[n - 1] / gamma) / (1.0 + z[0] + z[n - 1] / gamma);
        let m: Vec<f64> = y.iter().zip(&z).map(|(yi, zi)| yi - fact * zi).collect();
        Ok(CubicSpline {
            x0,
            h,
            values,
            m,
            periodic: true,
            period: h * n as f64,
        })
    }

    fn locate(&self, x: f64) -> (usize, usize, f64) {
        let n = self.values.len();
        if self.periodic {
            let mut t = (x - self.x0).rem_euclid(self.period) / self.h;
            let mut i = t.floor() as usize;
            if i >= n {
                i = n - 1;
            }
            t -= i as f64;
            (i, (i + 1) % n, t)
        } else {
            let t = ((x - self.x0) / self.h).clamp(0.0, (n - 1) as f64 - 1e-12);
            let i = (t.floor() as usize).min(n - 2);
            (i, i + 1, t - i as f64)
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (i, j, t) = self.locate(x);
        let (h, y0, y1, m0, m1) = (self.h, self.values[i], self.values[j], self.m[i], self.m[j]);
        let a = 1.0 - t;
        a * y0 + t * y1 + h * h / 6.0 * ((a * a * a - a) * m0 + (t * t * t - t) * m1)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let (i, j, t) = self.locate(x);
        let (h, y0, y1, m0, m1) = (self.h, self.values[i], self.values[j], self.m[i], self.m[j]);
        let a = 1.0 - t;
        (y1 - y0) / h + h / 6.0 * ((3.0 * t * t - 1.0) * m1 - (3.0 * a * a - 1.0) * m0)
    }
}

/// Tensor-product cubic surface on a grid periodic in the first variable and
/// natural in the second: the storage for generating functions `A(theta, r)`.
#[derive(Debug, Clone)]
pub struct TensorSpline {
    /// one periodic spline in theta per r-node row
    rows: Vec<CubicSpline>,
    r0: f64,
    hr: f64,
}

impl TensorSpline {
    /// `values[j][i]` is the sample at `(theta_i, r_j)`, `theta_i = i/n_theta`
    /// (periodic, first node not repeated), `r_j = r0 + j hr`.
    pub fn new(values: Vec<Vec<f64>>, r0: f64, hr: f64) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::invalid("tensor spline needs at least 4 r-rows"));
        }
        let n_theta = values[0].len();
        if values.iter().any(|row| row.len() != n_theta) {
            return Err(Error::invalid("tensor spline rows must be equal length"));
        }
        let h_theta = 1.0 / n_theta as f64;
        let rows = values
            .into_iter()
            .map(|row| CubicSpline::periodic(0.0, h_theta, row))
            .collect::<Result<Vec<_>>>()?;
        Ok(TensorSpline { rows, r0, hr })
    }

    pub fn r_range(&self) -> (f64, f64) {
        (self.r0, self.r0 + self.hr * (self.rows.len() - 1) as f64)
    }

    fn column(&self, theta: f64) -> CubicSpline {
        let vals: Vec<f64> = self.rows.iter().map(|s| s.eval(theta)).collect();
        CubicSpline::natural(self.r0, self.hr, vals).expect("column spline")
    }

    fn column_dtheta(&self, theta: f64) -> CubicSpline {
        let vals: Vec<f64> = self.rows.iter().map(|s| s.deriv(theta)).collect();
        CubicSpline::natural(self.r0, self.hr, vals).expect("column spline")
    }

    pub fn eval(&self, theta: f64, r: f64) -> f64 {
        self.column(theta).eval(r)
    }

    /// Partial derivative with respect to the periodic variable.
    pub fn d_theta(&self, theta: f64, r: f64) -> f64 {
        self.column_dtheta(theta).eval(r)
    }

    /// Partial derivative with respect to the second variable.
    pub fn d_r(&self, theta: f64, r: f64) -> f64 {
        self.column(theta).deriv(r)
    }
}
