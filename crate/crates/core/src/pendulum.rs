//! Quantitative analysis of the pseudo-pendulum `H = r^2/2 + V(theta)/N^2`:
//! the period function of the upper rotation zone, the periodic-orbit solver,
//! adapted boxes, the local twist normal form of the return map, and the
//! linearization data that controls island sizes.
//!
//! The period integral
//! `T(e) = int_0^1 du / sqrt(2 (e - V(u)/N^2))`
//! is split at the structural breakpoints of `V`; the plateau pieces are
//! closed-form, the quartic window around `theta = 1/2` is computed after the
//! substitution `u = 1/2 + (e N^2)^{1/4} s` which removes the near-peak, and
//! the transition pieces go to adaptive quadrature. Derivatives up to third
//! order differentiate under the integral sign (the differentiated integrands
//! are better conditioned near `e -> 0` than differenced periods).

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gevrey::SampledFunction;
use crate::maps::{pendulum_flow_lift, FlowSettings, SymplecticMap};
use crate::quad;

/// Period function of the pseudo-pendulum on the upper rotation zone.
#[derive(Debug, Clone)]
pub struct PeriodFunction {
    v: SampledFunction,
    n_div: u32,
    l0: f64,
    /// start of the exact quartic window in `dist(theta, Z)`
    window_start: f64,
    rho0: f64,
    rel_tol: f64,
}

impl PeriodFunction {
    pub fn new(v: SampledFunction, n_div: u32) -> Result<Self> {
        let (l0, window_start, rho0) = v.well_params().ok_or_else(|| {
            Error::invalid("period function needs a pseudo-pendulum potential")
        })?;
        if n_div == 0 {
            return Err(Error::invalid("period function needs N >= 1"));
        }
        Ok(PeriodFunction {
            v,
            n_div,
            l0,
            window_start,
            rho0,
            rel_tol: 1e-11,
        })
    }

    /// Half-width of the exact quartic window around `theta = 1/2`.
    pub fn window_half_width(&self) -> f64 {
        0.5 - self.window_start
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn potential(&self) -> &SampledFunction {
        &self.v
    }

    pub fn n_div(&self) -> u32 {
        self.n_div
    }

    /// Separatrix height `rho_N = rho0 / N` above the well bottom.
    pub fn rho_n(&self) -> f64 {
        self.rho0 / self.n_div as f64
    }

    /// Energy on the vertical axis: `P(0, r) = r^2/2 - rho_N^2/2`.
    pub fn energy_on_axis(&self, r: f64) -> f64 {
        0.5 * r * r - 0.5 * self.rho_n() * self.rho_n()
    }

    /// Action on the axis for energy `e > 0` (upper branch).
    pub fn action_for_energy(&self, e: f64) -> f64 {
        (2.0 * e + self.rho_n() * self.rho_n()).sqrt()
    }

    /// `T(e)`: period of the energy-`e` rotation, `e > 0`.
    pub fn period(&self, e: f64) -> Result<f64> {
        self.period_derivative(0, e)
    }

    /// `T^(k)(e)` for `k <= 3`, by differentiating under the integral:
    /// `T^(k)(e) = c_k 2^{-1/2} int (e - V/N^2)^{-(k+1/2)} du`,
    /// `c_k = prod_{i<k} (-1/2 - i)`.
    pub fn period_derivative(&self, k: usize, e: f64) -> Result<f64> {
        if !(e > 0.0) {
            return Err(Error::regime(format!(
                "period diverges on the separatrix: e = {e} must be positive"
            )));
        }
        if k > 3 {
            return Err(Error::invalid("period derivatives supported up to order 3"));
        }
        let mut ck = 1.0;
        for i in 0..k {
            ck *= -0.5 - i as f64;
        }
        let n2 = (self.n_div as f64).powi(2);
        let pow = k as f64 + 0.5;
        let integrand = |u: f64| (e - self.v.value(u) / n2).powf(-pow);

        // plateau [-L0, L0]: V = -rho0^2/2 exactly
        let plateau_val = (e + 0.5 * self.rho0 * self.rho0 / n2).powf(-pow);
        let mut total = 2.0 * self.l0 * plateau_val;

        // transitions on both sides (v is even)
        total += 2.0 * quad::adaptive(integrand, self.l0, self.window_start, self.rel_tol);

        // quartic window: 2 * int_0^{w} (e + x^4/N^2)^{-pow} dx,
        // substituted x = (e N^2)^{1/4} s
        let scale = (e * n2).powf(0.25);
        let s_max = self.window_half_width() / scale;
        let window = |s: f64| (1.0 + s * s * s * s).powf(-pow);
        let win_int = if s_max <= 8.0 {
            quad::tanh_sinh(window, 0.0, s_max, self.rel_tol)
        } else {
            // the integrand decays like s^{-4 pow}; split the long tail
            quad::tanh_sinh(window, 0.0, 8.0, self.rel_tol)
                + quad::adaptive(window, 8.0, s_max, self.rel_tol)
        };
        total += 2.0 * scale * e.powf(-pow) * win_int;

        Ok(ck * total / 2.0_f64.sqrt())
    }

    /// Truncated-window reference value for the small-energy law: the
    /// substituted quartic integral
    /// `y(e) = sqrt(2) int_0^{theta*/ (e N^2)^{1/4}} ds / sqrt(1 + s^4)`,
    /// against which `e^{1/4} T(e)` converges; its own limit is the full
    /// quartic-tail constant.
    pub fn quartic_window_reference(&self, e: f64) -> f64 {
        let n2 = (self.n_div as f64).powi(2);
        let s_max = self.window_half_width() / (e * n2).powf(0.25);
        let f = |s: f64| 1.0 / (1.0 + s * s * s * s).sqrt();
        let value = if s_max <= 8.0 {
            quad::adaptive(f, 0.0, s_max, 1e-12)
        } else {
            quad::adaptive(f, 0.0, 8.0, 1e-12) + quad::adaptive(f, 8.0, s_max, 1e-12)
        };
        2.0_f64.sqrt() * value
    }

    /// The limit constant `sqrt(2) int_0^inf dx / sqrt(1 + x^4)`,
    /// computed through the reflection `int_0^inf = 2 int_0^1`.
    pub fn quartic_tail_constant() -> f64 {
        let f = |t: f64| 1.0 / (1.0 + t.powi(4)).sqrt();
        2.0_f64.sqrt() * 2.0 * quad::adaptive(f, 0.0, 1.0, 1e-13)
    }
}

/// The `q`-periodic point data on the vertical axis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PeriodicOrbit {
    pub q: f64,
    pub energy: f64,
    pub action: f64,
    pub residual: f64,
}

/// Solve `T(e) = q` for the unique `e > 0`; returns energy, the axis action
/// `r = sqrt(2 e + rho_N^2)` and the residual `|T(e) - q|`.
pub fn solve_periodic_orbit(pf: &PeriodFunction, q: f64) -> Result<PeriodicOrbit> {
    if !(q > 0.0) {
        return Err(Error::invalid("periodic orbit needs q > 0"));
    }
    // bracket the decreasing T
    let mut e_lo = 1.0;
    let mut e_hi = 1.0;
    let mut guard = 0;
    while pf.period(e_lo)? < q {
        e_lo /= 16.0;
        guard += 1;
        if guard > 80 {
            return Err(Error::solver(format!(
                "periodic orbit: failed to bracket T(e) = {q} from below"
            )));
        }
    }
    guard = 0;
    while pf.period(e_hi)? > q {
        e_hi *= 16.0;
        guard += 1;
        if guard > 80 {
            return Err(Error::solver(format!(
                "periodic orbit: failed to bracket T(e) = {q} from above"
            )));
        }
    }
    let f = |e: f64| pf.period(e).map(|t| t - q).unwrap_or(f64::NAN);
    let e = quad::brent(f, e_lo, e_hi, e_lo.min(e_hi) * 1e-14, 300)
        .ok_or_else(|| Error::solver("periodic orbit: bracketing failure in Brent"))?;
    let residual = (pf.period(e)? - q).abs();
    if residual > 1e-9 {
        return Err(Error::solver(format!(
            "periodic orbit residual {residual:.3e} exceeds 1e-9"
        )));
    }
    Ok(PeriodicOrbit {
        q,
        energy: e,
        action: pf.action_for_energy(e),
        residual,
    })
}

/// A `q`-adapted box `[-l, l] x [r_q - l', r_q + l']` for the pendulum and
/// the band of half-width `delta/N`.
#[derive(Debug, Clone, Serialize)]
pub struct AdaptedBox {
    pub q: u32,
    pub n_div: u32,
    pub delta: f64,
    pub half_width: f64,
    pub half_height: f64,
    pub center_action: f64,
    pub energy: f64,
}

/// Outcome of the box verification with measured margins.
#[derive(Debug, Clone, Serialize)]
pub struct BoxReport {
    pub pass: bool,
    pub first_violation: Option<String>,
    /// min over 1 <= t <= q-1 of the distance from the band `B_{delta/N}`
    pub band_clearance: f64,
    /// margin of the final containment in `B_{delta/(2N)}`
    pub return_margin: f64,
}

/// Verify the two box conditions by transporting a boundary+interior grid
/// through `q` unit-time flow steps:
/// 1. for `1 <= t <= q-1` the image avoids the closed band of half-width
///    `delta/N`;
/// 2. the time-`q` image lands in the closed band of half-width
///    `delta/(2 N)` around `theta = 1` (in the lift).
pub fn verify_adapted_box(
    pf: &PeriodFunction,
    b: &AdaptedBox,
    grid: usize,
    settings: &FlowSettings,
) -> Result<BoxReport> {
    let d = b.delta / b.n_div as f64;
    // containment pre-check
    if b.half_width > 0.5 * d {
        return Ok(BoxReport {
            pass: false,
            first_violation: Some(format!(
                "box not contained in the band: half-width {} > delta/(2N) = {}",
                b.half_width,
                0.5 * d
            )),
            band_clearance: 0.0,
            return_margin: 0.0,
        });
    }
    if b.center_action - b.half_height <= pf.rho_n() {
        return Ok(BoxReport {
            pass: false,
            first_violation: Some("box dips to or below the separatrix".into()),
            band_clearance: 0.0,
            return_margin: 0.0,
        });
    }

    let g = grid.max(2);
    let mut points = Vec::with_capacity(g * g);
    for i in 0..g {
        for j in 0..g {
            let x = -b.half_width + 2.0 * b.half_width * i as f64 / (g - 1) as f64;
            let y = b.center_action - b.half_height
                + 2.0 * b.half_height * j as f64 / (g - 1) as f64;
            points.push((x, y));
        }
    }

    let n2 = b.n_div;
    let v = pf.potential().clone();
    let per_point = crate::exec::map_items(&points, |&start| -> Result<(f64, f64)> {
        let mut state = start;
        let mut clearance = f64::INFINITY;
        for _t in 1..b.q {
            state = pendulum_flow_lift(&v, n2, 1.0, state, settings)?;
            // distance from the closed band [-d, d] mod 1, via the lift in [0, 1]
            let pos = state.0 - state.0.floor();
            let c = if pos <= d || pos >= 1.0 - d {
                -(d - pos.min(1.0 - pos)).abs()
            } else {
                (pos - d).min(1.0 - d - pos)
            };
            clearance = clearance.min(c);
        }
        state = pendulum_flow_lift(&v, n2, 1.0, state, settings)?;
        let ret = 0.5 * d - (state.0 - 1.0).abs();
        Ok((clearance, ret))
    });

    let mut band_clearance = f64::INFINITY;
    let mut return_margin = f64::INFINITY;
    for r in per_point {
        let (c, m) = r?;
        band_clearance = band_clearance.min(c);
        return_margin = return_margin.min(m);
    }
    let mut first_violation = None;
    if band_clearance <= 0.0 {
        first_violation = Some(format!(
            "intermediate iterate enters the closed band (clearance {band_clearance:.3e})"
        ));
    } else if return_margin < 0.0 {
        first_violation = Some(format!(
            "time-q image misses the half band (margin {return_margin:.3e})"
        ));
    }
    Ok(BoxReport {
        pass: first_violation.is_none(),
        first_violation,
        band_clearance,
        return_margin,
    })
}

/// Build a `q`-adapted box: width `delta/(4N)`, height started at
/// `N^3 delta / q^5` and halved until verification passes.
pub fn build_adapted_box(
    pf: &PeriodFunction,
    q: u32,
    delta: f64,
    grid: usize,
    settings: &FlowSettings,
) -> Result<AdaptedBox> {
    if q < 2 {
        return Err(Error::invalid("adapted box needs q >= 2"));
    }
    if !(delta > 0.0 && delta < pf.rho0_value() / 2.0) {
        return Err(Error::regime(format!(
            "adapted box needs 0 < delta < rho0/2, got delta = {delta}"
        )));
    }
    let n = pf.n_div();
    // the band B_{delta/N} must sit inside the flat well bottom (the
    // time-energy chart needs V constant there, and a band of half-width
    // >= 1/2 is the whole annulus)
    let d = delta / n as f64;
    if d > pf.l0() {
        return Err(Error::regime(format!(
            "adapted box needs delta/N <= L0: delta/N = {d} > L0 = {}; \
             reduce delta or increase N",
            pf.l0()
        )));
    }
    let orbit = solve_periodic_orbit(pf, q as f64)?;
    let half_width = 0.25 * delta / n as f64;
    let mut half_height = (n as f64).powi(3) * delta / (q as f64).powi(5);
    // never start above the band/separatrix limits
    half_height = half_height.min(0.5 * (orbit.action - pf.rho_n()));
    for _ in 0..=20 {
        let candidate = AdaptedBox {
            q,
            n_div: n,
            delta,
            half_width,
            half_height,
            center_action: orbit.action,
            energy: orbit.energy,
        };
        let report = verify_adapted_box(pf, &candidate, grid, settings)?;
        if report.pass {
            return Ok(candidate);
        }
        half_height *= 0.5;
    }
    Err(Error::regime(format!(
        "no q-adapted box after 20 halvings (q = {q}, N = {n}, delta = {delta}); \
         parameters outside the regime"
    )))
}

/// The twist normal form `A(r) = int_{e_q}^{P(0,r)} (q - T(h)) dh` of the
/// `q`-th return, with derivatives from the closed chain rules.
#[derive(Debug, Clone)]
pub struct NormalForm<'a> {
    pf: &'a PeriodFunction,
    pub orbit: PeriodicOrbit,
}

impl<'a> NormalForm<'a> {
    pub fn new(pf: &'a PeriodFunction, q: f64) -> Result<Self> {
        let orbit = solve_periodic_orbit(pf, q)?;
        Ok(NormalForm { pf, orbit })
    }

    fn check_r(&self, r: f64) -> Result<f64> {
        let e = self.pf.energy_on_axis(r);
        if e <= 0.0 {
            return Err(Error::regime(format!(
                "normal form evaluated at or below the separatrix (r = {r})"
            )));
        }
        Ok(e)
    }

    /// `A(r)` by quadrature in the energy variable.
    pub fn a(&self, r: f64) -> Result<f64> {
        let e = self.check_r(r)?;
        let q = self.orbit.q;
        let pf = self.pf;
        Ok(quad::adaptive(
            |h| q - pf.period(h).unwrap_or(f64::NAN),
            self.orbit.energy,
            e,
            1e-11,
        ))
    }

    /// `A'(r) = r (q - T(P(0, r)))`.
    pub fn a1(&self, r: f64) -> Result<f64> {
        let e = self.check_r(r)?;
        Ok(r * (self.orbit.q - self.pf.period(e)?))
    }

    /// `A''(r) = (q - T) - r^2 T'`.
    pub fn a2(&self, r: f64) -> Result<f64> {
        let e = self.check_r(r)?;
        let t = self.pf.period(e)?;
        let t1 = self.pf.period_derivative(1, e)?;
        Ok((self.orbit.q - t) - r * r * t1)
    }

    /// `A'''(r) = -3 r T' - r^3 T''`.
    pub fn a3(&self, r: f64) -> Result<f64> {
        let e = self.check_r(r)?;
        let t1 = self.pf.period_derivative(1, e)?;
        let t2 = self.pf.period_derivative(2, e)?;
        Ok(-3.0 * r * t1 - r.powi(3) * t2)
    }

    /// `A''''(r) = -3 T' - 6 r^2 T'' - r^4 T'''`.
    pub fn a4(&self, r: f64) -> Result<f64> {
        let e = self.check_r(r)?;
        let t1 = self.pf.period_derivative(1, e)?;
        let t2 = self.pf.period_derivative(2, e)?;
        let t3 = self.pf.period_derivative(3, e)?;
        Ok(-3.0 * t1 - 6.0 * r * r * t2 - r.powi(4) * t3)
    }

    /// The twist shear `Phi^A` as a map, with `A'` interpolated on a spline
    /// over `[r_q - span, r_q + span]` so iteration does not re-run the
    /// period quadrature.
    pub fn twist_shear(&self, span: f64, nodes: usize) -> Result<SymplecticMap> {
        let n = nodes.max(16);
        let r0 = self.orbit.action - span;
        let h = 2.0 * span / (n - 1) as f64;
        let mut vals = Vec::with_capacity(n);
        for i in 0..n {
            vals.push(self.a1(r0 + i as f64 * h)?);
        }
        let spline = crate::spline::CubicSpline::natural(r0, h, vals)?;
        Ok(SymplecticMap::CustomShear {
            label: format!("A'_{{q={}, N={}}}", self.orbit.q, self.pf.n_div()),
            grad: std::sync::Arc::new(move |r| spline.eval(r)),
        })
    }
}

impl PeriodFunction {
    fn rho0_value(&self) -> f64 {
        self.rho0
    }
}

/// Linearization data of the kicked return map at the periodic point.
#[derive(Debug, Clone, Serialize)]
pub struct IslandLinearData {
    pub alpha: f64,
    pub mu: f64,
    pub gamma0: f64,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub a2: f64,
    pub a3: f64,
    pub b1_re: f64,
    pub b1_im: f64,
    pub omega: f64,
}

/// Compute the eigenvalue, the normalized Taylor coefficients and the first
/// twist coefficient of the return map `Phi^{mu W} o Phi^A` at the periodic
/// point:
/// `lambda + 1/lambda = 2 - mu alpha`, `a_nu = mu S^(nu)(0) / (2 nu! |l-1| sin g0)`
/// with `S''(0) = A'''(r_q)`, `S'''(0) = A''''(r_q)`, and
/// `b_1 = |l-1| (3 a_3 + 2 a_2^2 |l-1| R(l))`,
/// `R(l) = i (1+l)/(1-l) * (2 + l + 2 l^2)/(1 + l + l^2)`.
pub fn island_linear_data(nf: &NormalForm<'_>, mu: f64) -> Result<IslandLinearData> {
    let r_q = nf.orbit.action;
    let alpha = nf.a2(r_q)?;
    let mu_alpha = mu * alpha;
    if !(mu_alpha > 0.0 && mu_alpha < 1.0) {
        return Err(Error::regime(format!(
            "ellipticity lost: mu * alpha = {mu_alpha} not in (0, 1)"
        )));
    }
    let gamma0 = -(1.0 - 0.5 * mu_alpha).acos();
    let lambda = Complex64::new(gamma0.cos(), gamma0.sin());
    let lam_minus_1 = (lambda - 1.0).norm();
    let sin_g0 = gamma0.sin();

    let s2 = nf.a3(r_q)?; // S''(0)
    let s3 = nf.a4(r_q)?; // S'''(0)
    let a2 = mu * s2 / (2.0 * 2.0 * lam_minus_1 * sin_g0);
    let a3 = mu * s3 / (2.0 * 6.0 * lam_minus_1 * sin_g0);

    let r_lambda = Complex64::i() * (1.0 + lambda) / (1.0 - lambda)
        * (2.0 + lambda + 2.0 * lambda * lambda)
        / (1.0 + lambda + lambda * lambda);
    let b1 = lam_minus_1 * (3.0 * a3 + 2.0 * a2 * a2 * lam_minus_1 * r_lambda);

    let q = nf.orbit.q;
    let n = nf.pf.n_div() as f64;
    Ok(IslandLinearData {
        alpha,
        mu,
        gamma0,
        lambda_re: lambda.re,
        lambda_im: lambda.im,
        a2,
        a3,
        b1_re: b1.re,
        b1_im: b1.im,
        omega: q.powi(4) / n.powi(3),
    })
}

/// The constants `beta_k` of the small-energy derivative law
/// `|T^(k)(e_q)| -> beta_k q^{4k+1}` (at `N = 1`): with
/// `I_k = int_0^inf (1 + x^4)^{-(k + 1/2)} dx` and
/// `c_k = prod_{i<k} |1/2 + i|`,
/// `beta_k = c_k sqrt(2) I_k / (sqrt(2) I_0)^{4k+1}`.
/// (The period behaves like `T(e) = sqrt(2) I_0 e^{-1/4} (1 + o(1))` and its
/// derivatives differentiate the window integral.) Reported as reference
/// values, not asserted against any quoted number.
pub fn beta_constant(k: usize) -> f64 {
    let ik = |k: usize| {
        let pow = k as f64 + 0.5;
        // reflect the tail: int_1^inf (1+x^4)^{-p} dx = int_0^1 t^{4p-2} (1+t^4)^{-p} dt
        let head = quad::adaptive(|x: f64| (1.0 + x.powi(4)).powf(-pow), 0.0, 1.0, 1e-13);
        let tail = quad::adaptive(
            |t: f64| t.powf(4.0 * pow - 2.0) * (1.0 + t.powi(4)).powf(-pow),
            0.0,
            1.0,
            1e-13,
        );
        head + tail
    };
    let mut ck = 1.0;
    for i in 0..k {
        ck *= 0.5 + i as f64;
    }
    let sqrt2 = 2.0_f64.sqrt();
    ck * sqrt2 * ik(k) / (sqrt2 * ik(0)).powi(4 * k as i32 + 1)
}
