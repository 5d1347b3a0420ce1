//! Flat-top bump functions and the smooth profiles built from them.
//!
//! Every profile here is a 1-periodic function of one torus variable with
//! exact plateau / support pieces and a Gevrey-class `C^inf` transition in
//! between. The transition is the standard partition-of-unity quotient of
//! `x -> exp(-x^{-1/(alpha-1)})`, which is non-quasianalytic exactly when
//! `alpha > 1`.
//!
//! Values and first derivatives are analytic everywhere; higher derivatives
//! are analytic on the closed-form pieces and fall back to central finite
//! differences with Richardson extrapolation inside transitions.

use std::sync::Arc;

use crate::annulus::torus_lift;
use crate::error::{Error, Result};

/// Highest derivative order supported by `derivative`.
pub const MAX_DERIVATIVE_ORDER: usize = 6;

/// Support of a bump ends at this fraction of the nominal `1/p` half-width;
/// the gap `(0.7/p, 1/p]` keeps first and last box iterates clear of the
/// kick support, which the exact affine identities rely on.
pub const SUPPORT_FRACTION: f64 = 0.7;

/// `exp(-x^{-beta})` for `x > 0`, zero otherwise.
fn sigma(x: f64, beta: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let e = x.powf(-beta);
    if e > 700.0 {
        0.0
    } else {
        (-e).exp()
    }
}

fn sigma_d1(x: f64, beta: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let e = x.powf(-beta);
    if e > 700.0 {
        0.0
    } else {
        (-e).exp() * beta * x.powf(-beta - 1.0)
    }
}

/// `C^inf` ramp: 0 on `(-inf, 0]`, 1 on `[1, inf)`, monotone in between,
/// with all derivatives vanishing at both ends.
pub fn ramp(u: f64, beta: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let s = sigma(u, beta);
    let t = sigma(1.0 - u, beta);
    s / (s + t)
}

/// Analytic first derivative of [`ramp`].
pub fn ramp_d1(u: f64, beta: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let s = sigma(u, beta);
    let t = sigma(1.0 - u, beta);
    let sp = sigma_d1(u, beta);
    let tp = sigma_d1(1.0 - u, beta);
    let den = (s + t) * (s + t);
    (sp * t + s * tp) / den
}

#[derive(Clone)]
enum Kernel {
    /// Even bump of `x = dist(theta, Z)`: 1 for `x <= plateau_end`, 0 for
    /// `x >= support_end`.
    Bump { plateau_end: f64, support_end: f64, beta: f64 },
    /// `W(theta) = 1/2 eta(theta) dist(theta, Z)^2`.
    PlateauKick { plateau_end: f64, support_end: f64, beta: f64 },
    /// Pseudo-pendulum well: `-rho0^2/2` around 0, `-(theta - 1/2)^4` for
    /// `dist(theta, Z) >= q_start`, strictly negative elsewhere.
    Well { l0: f64, q_start: f64, rho0: f64, beta: f64 },
    /// Standard-map profile `eta_3(theta) (-x + x^2/2)`, `x` the lift.
    StandardProfile { plateau_end: f64, support_end: f64, beta: f64 },
    /// Arbitrary smooth 1-periodic function, optional analytic derivatives.
    Analytic {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        df: Option<Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>>,
    },
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::Bump { plateau_end, support_end, .. } => {
                write!(f, "Bump[{plateau_end}, {support_end}]")
            }
            Kernel::PlateauKick { plateau_end, support_end, .. } => {
                write!(f, "PlateauKick[{plateau_end}, {support_end}]")
            }
            Kernel::Well { l0, q_start, rho0, .. } => {
                write!(f, "Well[l0={l0}, window from {q_start}, rho0={rho0}]")
            }
            Kernel::StandardProfile { .. } => write!(f, "StandardProfile"),
            Kernel::Analytic { .. } => write!(f, "Analytic"),
        }
    }
}

/// A smooth 1-periodic scalar function with exact plateau/support metadata
/// and derivative evaluation up to order [`MAX_DERIVATIVE_ORDER`].
#[derive(Debug, Clone)]
pub struct SampledFunction {
    pub label: String,
    pub alpha: f64,
    /// Interval of `x = dist(theta, Z)` on which a stated closed form holds.
    pub plateau: Option<(f64, f64)>,
    /// Interval of `x` outside of which the function vanishes identically.
    pub support: Option<(f64, f64)>,
    kernel: Kernel,
    /// Characteristic transition width, used to scale finite-difference steps.
    fd_scale: f64,
}

impl SampledFunction {
    pub fn value(&self, theta: f64) -> f64 {
        let x = torus_lift(theta);
        match &self.kernel {
            Kernel::Bump { plateau_end, support_end, beta } => {
                bump_value(x.abs(), *plateau_end, *support_end, *beta)
            }
            Kernel::PlateauKick { plateau_end, support_end, beta } => {
                0.5 * bump_value(x.abs(), *plateau_end, *support_end, *beta) * x * x
            }
            Kernel::Well { l0, q_start, rho0, beta } => {
                well_value(x.abs(), *l0, *q_start, *rho0, *beta)
            }
            Kernel::StandardProfile { plateau_end, support_end, beta } => {
                bump_value(x.abs(), *plateau_end, *support_end, *beta) * (-x + 0.5 * x * x)
            }
            Kernel::Analytic { f, .. } => f(theta),
        }
    }

    /// k-th derivative with respect to `theta`; analytic on closed-form
    /// pieces, finite differences with Richardson extrapolation elsewhere.
    pub fn derivative(&self, k: usize, theta: f64) -> Result<f64> {
        if k == 0 {
            return Ok(self.value(theta));
        }
        if k > MAX_DERIVATIVE_ORDER {
            return Err(Error::invalid(format!(
                "derivative order {k} exceeds supported maximum {MAX_DERIVATIVE_ORDER}"
            )));
        }
        if let Some(v) = self.analytic_derivative(k, theta) {
            return Ok(v);
        }
        Ok(self.fd_derivative(k, theta))
    }

    /// Analytic derivative where a closed form is available.
    pub fn analytic_derivative(&self, k: usize, theta: f64) -> Option<f64> {
        let x = torus_lift(theta);
        let ax = x.abs();
        let sg = if x >= 0.0 { 1.0 } else { -1.0 };
        match &self.kernel {
            Kernel::Bump { plateau_end, support_end, beta } => {
                if ax <= *plateau_end || ax >= *support_end {
                    return Some(0.0); // constant pieces
                }
                if k == 1 {
                    let w = support_end - plateau_end;
                    let u = (ax - plateau_end) / w;
                    return Some(-ramp_d1(u, *beta) / w * sg);
                }
                None
            }
            Kernel::PlateauKick { plateau_end, support_end, beta } => {
                if ax <= *plateau_end {
                    // exactly x^2/2
                    return Some(match k {
                        1 => x,
                        2 => 1.0,
                        _ => 0.0,
                    });
                }
                if ax >= *support_end {
                    return Some(0.0);
                }
                if k == 1 {
                    let w = support_end - plateau_end;
                    let u = (ax - plateau_end) / w;
                    let eta = 1.0 - ramp(u, *beta);
                    let etap = -ramp_d1(u, *beta) / w * sg;
                    return Some(eta * x + 0.5 * etap * x * x);
                }
                None
            }
            Kernel::Well { l0, q_start, rho0: _, beta } => {
                if ax <= *l0 {
                    return Some(0.0); // constant well bottom
                }
                if ax >= *q_start {
                    // V = -(1/2 - x)^4 in x, with x = |lift|; chain in theta
                    let y = 0.5 - ax;
                    let v = match k {
                        1 => 4.0 * y.powi(3) * sg,
                        2 => -12.0 * y * y,
                        3 => 24.0 * y * sg,
                        4 => -24.0,
                        _ => 0.0,
                    };
                    return Some(v);
                }
                if k == 1 {
                    let w = *q_start - l0;
                    let u = (ax - l0) / w;
                    let m = ramp(u, *beta);
                    let mp = ramp_d1(u, *beta) / w;
                    let rho0 = match &self.kernel {
                        Kernel::Well { rho0, .. } => *rho0,
                        _ => unreachable!(),
                    };
                    let y = 0.5 - ax;
                    // V = -(1-m) rho0^2/2 - m y^4
                    let dv_dx = mp * 0.5 * rho0 * rho0 - mp * y.powi(4) + m * 4.0 * y.powi(3);
                    return Some(dv_dx * sg);
                }
                None
            }
            Kernel::StandardProfile { plateau_end, support_end, beta } => {
                if ax <= *plateau_end {
                    // exactly -x + x^2/2
                    return Some(match k {
                        1 => -1.0 + x,
                        2 => 1.0,
                        _ => 0.0,
                    });
                }
                if ax >= *support_end {
                    return Some(0.0);
                }
                if k == 1 {
                    let w = support_end - plateau_end;
                    let u = (ax - plateau_end) / w;
                    let eta = 1.0 - ramp(u, *beta);
                    let etap = -ramp_d1(u, *beta) / w * sg;
                    return Some(etap * (-x + 0.5 * x * x) + eta * (-1.0 + x));
                }
                None
            }
            Kernel::Analytic { df, .. } => df.as_ref().map(|d| d(k, theta)),
        }
    }

    /// Central finite difference of order `k` with two-level Richardson
    /// extrapolation. Step sizes grow with the order to keep the alternating
    /// sums above roundoff, and shrink with the transition width.
    pub fn fd_derivative(&self, k: usize, theta: f64) -> f64 {
        // Steps grow with the order so alternating sums stay above roundoff;
        // the clamp keeps narrow transitions from shrinking h below that.
        let (base, lo) = match k {
            1 | 2 => (1e-4, 0.3),
            3 | 4 => (4e-2, 0.5),
            _ => (1.2e-1, 0.5),
        };
        let h = base * self.fd_scale.clamp(lo, 1.0);
        let d1 = central_diff(|t| self.value(t), k, theta, h);
        let d2 = central_diff(|t| self.value(t), k, theta, 0.5 * h);
        (4.0 * d2 - d1) / 3.0
    }

    pub fn max_derivative_order(&self) -> usize {
        MAX_DERIVATIVE_ORDER
    }

    /// `(L0, window start, rho0)` when this is a pseudo-pendulum well; the
    /// quartic closed form holds exactly for `dist(theta, Z)` in
    /// `[window start, 1/2]`.
    pub fn well_params(&self) -> Option<(f64, f64, f64)> {
        match &self.kernel {
            Kernel::Well { l0, q_start, rho0, .. } => Some((*l0, *q_start, *rho0)),
            _ => None,
        }
    }

    /// Uniform-grid dump rows `(theta, f, f', f'')` for plotting.
    pub fn dump_rows(&self, n: usize) -> Result<Vec<(f64, f64, f64, f64)>> {
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let t = i as f64 / n as f64;
            rows.push((
                t,
                self.value(t),
                self.derivative(1, t)?,
                self.derivative(2, t)?,
            ));
        }
        Ok(rows)
    }
}

fn bump_value(ax: f64, plateau_end: f64, support_end: f64, beta: f64) -> f64 {
    if ax <= plateau_end {
        1.0
    } else if ax >= support_end {
        0.0
    } else {
        1.0 - ramp((ax - plateau_end) / (support_end - plateau_end), beta)
    }
}

fn well_value(ax: f64, l0: f64, q_start: f64, rho0: f64, beta: f64) -> f64 {
    if ax <= l0 {
        -0.5 * rho0 * rho0
    } else if ax >= q_start {
        -(0.5 - ax).powi(4)
    } else {
        let m = ramp((ax - l0) / (q_start - l0), beta);
        let y = 0.5 - ax;
        -(1.0 - m) * 0.5 * rho0 * rho0 - m * y.powi(4)
    }
}

/// Central difference of order `k` (error `O(h^2)`).
fn central_diff<F: Fn(f64) -> f64>(f: F, k: usize, x: f64, h: f64) -> f64 {
    let mut num = 0.0;
    let mut binom = 1.0f64;
    for i in 0..=k {
        let node = x + (k as f64 / 2.0 - i as f64) * h;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        num += sign * binom * f(node);
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    num / h.powi(k as i32)
}

fn beta_for(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::invalid(format!(
            "Gevrey exponent alpha = {alpha} must exceed 1 (no flat-top bump exists otherwise)"
        )));
    }
    Ok(1.0 / (alpha - 1.0))
}

/// Bump with a plateau `|theta| <= plateau_end` and support
/// `|theta| <= support_end`, in Gevrey class `alpha`.
pub fn make_bump(alpha: f64, plateau_end: f64, support_end: f64, label: &str) -> Result<SampledFunction> {
    let beta = beta_for(alpha)?;
    if !(0.0 < plateau_end && plateau_end < support_end && support_end <= 0.5) {
        return Err(Error::invalid(format!(
            "bump intervals invalid: plateau {plateau_end}, support {support_end}"
        )));
    }
    Ok(SampledFunction {
        label: label.to_string(),
        alpha,
        plateau: Some((-plateau_end, plateau_end)),
        support: Some((-support_end, support_end)),
        kernel: Kernel::Bump { plateau_end, support_end, beta },
        fd_scale: support_end - plateau_end,
    })
}

/// The bump `eta_p`: 1 on `|theta| <= 1/(2p)`, 0 on `[1/p, 1 - 1/p]`.
pub fn make_eta(alpha: f64, p: f64) -> Result<SampledFunction> {
    if !(p > 2.0) {
        return Err(Error::invalid(format!("eta_p needs p > 2, got {p}")));
    }
    make_bump(alpha, 0.5 / p, SUPPORT_FRACTION / p, &format!("eta_{p}"))
}

/// Plateau-quadratic kick `W_N(theta) = eta(theta) dist(theta, Z)^2 / 2`:
/// exactly `theta^2/2` on `|theta| <= delta/(2N)` and exactly zero on
/// `[delta/N, 1 - delta/N]`.
pub fn make_w(alpha: f64, n: u32, delta: f64) -> Result<SampledFunction> {
    if n < 1 {
        return Err(Error::invalid("W_N needs N >= 1"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("W_N needs delta in (0,1], got {delta}")));
    }
    let beta = beta_for(alpha)?;
    let plateau_end = 0.5 * delta / n as f64;
    let support_end = SUPPORT_FRACTION * delta / n as f64;
    if support_end > 0.5 {
        return Err(Error::invalid(format!(
            "W_N support {support_end} exceeds the half-torus; reduce delta (N = {n}, delta = {delta})"
        )));
    }
    Ok(SampledFunction {
        label: format!("W_{n}(delta={delta})"),
        alpha,
        plateau: Some((-plateau_end, plateau_end)),
        support: Some((-support_end, support_end)),
        kernel: Kernel::PlateauKick { plateau_end, support_end, beta },
        fd_scale: support_end - plateau_end,
    })
}

/// Pseudo-pendulum potential: `-rho0^2/2` on `[-L0, L0]`,
/// `-(theta - 1/2)^4` for `|theta - 1/2| <= theta_star`, negative elsewhere.
///
/// The quartic closed form is extended to the widest window the blend
/// allows (`|theta - 1/2| <= 1/2 - L0 - w` with a blend of width
/// `w <= 0.04`): a narrow transition keeps the non-window contribution to
/// the period integral small, which the small-energy law checks rely on.
pub fn make_v(alpha: f64, l0: f64, theta_star: f64, rho0: f64) -> Result<SampledFunction> {
    let beta = beta_for(alpha)?;
    if !(l0 > 0.0 && theta_star > 0.0 && rho0 > 0.0) {
        return Err(Error::invalid("V parameters must be positive"));
    }
    if l0 >= 0.5 - theta_star {
        return Err(Error::invalid(format!(
            "V needs L0 < 1/2 - theta*: got L0 = {l0}, theta* = {theta_star}"
        )));
    }
    let gap = 0.5 - theta_star - l0;
    let blend = (0.4 * gap).min(0.04);
    let q_start = l0 + blend;
    Ok(SampledFunction {
        label: format!("V(L0={l0}, theta*={theta_star}, rho0={rho0})"),
        alpha,
        plateau: Some((-l0, l0)),
        support: None,
        kernel: Kernel::Well { l0, q_start, rho0, beta },
        fd_scale: blend,
    })
}

/// Standard-map profile `U = eta_3(theta)(-x + x^2/2)`, with
/// `U'(x) = -1 + x` on `[-rho, rho]` for `rho <= 1/6`.
pub fn make_u(alpha: f64, rho: f64) -> Result<SampledFunction> {
    let beta = beta_for(alpha)?;
    if !(rho > 0.0) {
        return Err(Error::invalid("U needs rho > 0"));
    }
    if rho > 1.0 / 6.0 {
        return Err(Error::invalid(format!(
            "the eta_3 realization of U covers only rho <= 1/6, got {rho}"
        )));
    }
    let plateau_end = 1.0 / 6.0;
    let support_end = SUPPORT_FRACTION / 3.0;
    Ok(SampledFunction {
        label: format!("U(rho={rho})"),
        alpha,
        plateau: Some((-plateau_end, plateau_end)),
        support: Some((-support_end, support_end)),
        kernel: Kernel::StandardProfile { plateau_end, support_end, beta },
        fd_scale: support_end - plateau_end,
    })
}

/// Wrap an arbitrary smooth 1-periodic closure.
pub fn from_closure(
    label: &str,
    alpha: f64,
    f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    df: Option<Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>>,
) -> SampledFunction {
    SampledFunction {
        label: label.to_string(),
        alpha,
        plateau: None,
        support: None,
        kernel: Kernel::Analytic { f: Arc::new(f), df },
        fd_scale: 1.0,
    }
}

/// Constant function.
pub fn constant(c: f64) -> SampledFunction {
    from_closure(
        &format!("const {c}"),
        2.0,
        move |_| c,
        Some(Arc::new(|_k, _t| 0.0)),
    )
}

/// Truncated Gevrey norm: partial sum of
/// `sum_l L^{l alpha} / (l!)^alpha * sup |f^(l)|` up to `max_order`,
/// with the sup taken over a uniform grid.
pub fn gevrey_norm_estimate(
    f: &SampledFunction,
    alpha: f64,
    l: f64,
    max_order: usize,
) -> Result<f64> {
    if max_order > f.max_derivative_order() {
        return Err(Error::invalid(format!(
            "norm truncation order {max_order} exceeds available derivative order {}",
            f.max_derivative_order()
        )));
    }
    let grid = 2048;
    let mut total = 0.0;
    let mut fact = 1.0f64;
    for k in 0..=max_order {
        if k > 0 {
            fact *= k as f64;
        }
        let mut sup: f64 = 0.0;
        for i in 0..grid {
            let t = i as f64 / grid as f64;
            sup = sup.max(f.derivative(k, t)?.abs());
        }
        total += l.powf(k as f64 * alpha) / fact.powf(alpha) * sup;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const ALPHA: f64 = 2.0;

    #[test]
    fn eta_plateau_and_support() {
        let p = 4.0;
        let eta = make_eta(ALPHA, p).unwrap();
        assert_eq!(eta.value(0.0), 1.0);
        assert_eq!(eta.value(0.5), 0.0);
        assert_eq!(eta.value(1.0 / (2.0 * p)), 1.0);
        assert_eq!(eta.value(1.0 / p), 0.0);
        // range [0, 1] and 1-periodicity on a fine grid
        for i in 0..1000 {
            let t = i as f64 / 1000.0;
            let v = eta.value(t);
            assert!((0.0..=1.0).contains(&v), "eta out of range at {t}: {v}");
            assert_relative_eq!(v, eta.value(t + 1.0), epsilon = 1e-13, max_relative = 1e-12);
        }
        assert!(make_eta(1.0, 4.0).is_err());
        assert!(make_eta(0.5, 4.0).is_err());
    }

    #[test]
    fn plateau_identities_exact() {
        // 1000 sampled points per stated interval, error < 1e-14
        let p = 8.0;
        let eta = make_eta(ALPHA, p).unwrap();
        for i in 0..=1000 {
            let x = -0.5 / p + i as f64 / 1000.0 / p;
            assert!((eta.value(x) - 1.0).abs() < 1e-14);
        }
        for i in 0..=1000 {
            let x = 1.0 / p + i as f64 / 1000.0 * (1.0 - 2.0 / p);
            assert!(eta.value(x).abs() < 1e-14);
        }

        let w = make_w(ALPHA, 3, 0.8).unwrap();
        for i in 0..=1000 {
            let x = (i as f64 / 1000.0 - 0.5) * 0.8 / 3.0; // |x| <= delta/(2N)
            assert!((w.value(x) - 0.5 * x * x).abs() < 1e-16);
        }
    }

    #[test]
    fn w_examples() {
        let n = 5u32;
        let delta = 0.9;
        let w = make_w(ALPHA, n, delta).unwrap();
        let x = delta / (4.0 * n as f64);
        assert_relative_eq!(w.value(x), delta * delta / (32.0 * (n as f64).powi(2)), max_relative = 1e-14);
        assert_eq!(w.value(0.5), 0.0);
        assert_eq!(w.value(0.0), 0.0);
        assert_eq!(w.derivative(1, 0.0).unwrap(), 0.0);
        // W >= 0 everywhere
        for i in 0..10_000 {
            let t = i as f64 / 10_000.0;
            assert!(w.value(t) >= 0.0);
        }
    }

    #[test]
    fn v_conditions() {
        let (l0, ts, rho0) = (0.2, 0.2, 2.5);
        let v = make_v(ALPHA, l0, ts, rho0).unwrap();
        assert_relative_eq!(v.value(0.0), -0.5 * rho0 * rho0);
        assert_eq!(v.value(0.5), 0.0);
        let x = 0.5 + ts / 2.0;
        assert_relative_eq!(v.value(x), -(ts / 2.0_f64).powi(4), max_relative = 1e-14);
        // V < 0 off theta = 1/2 (grid check, 10^4 points)
        for i in 0..10_000 {
            let t = i as f64 / 10_000.0;
            if (t - 0.5).abs() > 1e-9 {
                assert!(v.value(t) < 0.0, "V not negative at {t}");
            }
        }
        // 1-periodic
        for i in 0..100 {
            let t = i as f64 / 100.0;
            assert_relative_eq!(v.value(t), v.value(t + 1.0), epsilon = 1e-13, max_relative = 1e-12);
        }
        assert!(make_v(ALPHA, 0.3, 0.2, 2.5).is_err());
    }

    #[test]
    fn u_conditions() {
        let u = make_u(ALPHA, 1.0 / 6.0).unwrap();
        assert_relative_eq!(u.derivative(1, 0.0).unwrap(), -1.0);
        let rho = 1.0 / 6.0;
        assert_relative_eq!(u.derivative(1, rho / 2.0).unwrap(), -1.0 + rho / 2.0);
        assert_eq!(u.value(0.0), 0.0);
        assert!(make_u(ALPHA, 0.3).is_err());
    }

    #[test]
    fn norm_estimate_examples() {
        // constant function: only the l = 0 term
        let c = constant(1.0);
        assert_relative_eq!(gevrey_norm_estimate(&c, 1.5, 0.4, 4).unwrap(), 1.0);

        // sin(2 pi theta), alpha = 1, L = 0.1, orders 0..2:
        // 1 + 0.1 * 2pi + (0.01/2) * 4pi^2
        let tau = 2.0 * std::f64::consts::PI;
        let f = from_closure(
            "sin",
            1.0,
            move |t: f64| (tau * t).sin(),
            Some(Arc::new(move |k: usize, t: f64| {
                let tau = 2.0 * std::f64::consts::PI;
                let phase = tau * t + k as f64 * std::f64::consts::FRAC_PI_2;
                tau.powi(k as i32) * phase.sin()
            })),
        );
        let v = gevrey_norm_estimate(&f, 1.0, 0.1, 2).unwrap();
        let expect = 1.0 + 0.1 * tau + 0.005 * tau * tau;
        assert_relative_eq!(v, expect, max_relative = 1e-3);
        assert!((v - 1.8257).abs() < 2e-3);

        // monotone nondecreasing in max_order
        let v3 = gevrey_norm_estimate(&f, 1.0, 0.1, 3).unwrap();
        assert!(v3 >= v);

        // order above the supported maximum errors out
        assert!(gevrey_norm_estimate(&f, 1.0, 0.1, 7).is_err());
    }

    #[test]
    fn eta_norm_growth_rate() {
        // fitted c over p in {4, 8, 16}: norms stay below exp(c p^{1/(alpha-1)})
        let l = 0.25;
        let ps = [4.0, 8.0, 16.0];
        let mut lns = Vec::new();
        for &p in &ps {
            let eta = make_eta(ALPHA, p).unwrap();
            let norm = gevrey_norm_estimate(&eta, ALPHA, l, 6).unwrap();
            assert!(norm.is_finite() && norm >= 1.0);
            lns.push(norm.ln());
        }
        // norms increase with p
        assert!(lns[1] > lns[0] && lns[2] > lns[1]);
        let c = ps
            .iter()
            .zip(&lns)
            .map(|(p, ln)| ln / p) // exponent 1/(alpha-1) = 1 here
            .fold(f64::NEG_INFINITY, f64::max);
        for (p, ln) in ps.iter().zip(&lns) {
            assert!(*ln <= c * p + 1e-12);
        }
    }

    #[test]
    fn fd_matches_analytic_on_plateaus() {
        // numeric derivatives of order <= 4 agree with closed forms to 1e-8
        let w = make_w(ALPHA, 2, 1.0).unwrap();
        for k in 1..=4usize {
            for &x in &[0.0, 0.05, 0.1, -0.08] {
                let exact = w.analytic_derivative(k, x).unwrap();
                let fd = w.fd_derivative(k, x);
                assert!(
                    (fd - exact).abs() < 1e-8,
                    "W: order {k} at {x}: fd {fd} vs exact {exact}"
                );
            }
        }
        let v = make_v(ALPHA, 0.2, 0.2, 2.5).unwrap();
        for k in 1..=4usize {
            for &x in &[0.0, 0.1, 0.45, 0.5, 0.55] {
                let exact = v.analytic_derivative(k, x).unwrap();
                let fd = v.fd_derivative(k, x);
                assert!(
                    (fd - exact).abs() < 1e-8,
                    "V: order {k} at {x}: fd {fd} vs exact {exact}"
                );
            }
        }
    }

    #[test]
    fn transition_derivative_consistency() {
        // analytic d1 inside the transition matches finite differences
        let eta = make_eta(ALPHA, 4.0).unwrap();
        for i in 0..50 {
            let x = 0.125 + (0.175 - 0.125) * (i as f64 + 0.5) / 50.0;
            let a = eta.derivative(1, x).unwrap();
            let fd = eta.fd_derivative(1, x);
            assert!(
                (a - fd).abs() < 1e-6 * (1.0 + a.abs()),
                "eta' mismatch at {x}: {a} vs {fd}"
            );
        }
    }
}
