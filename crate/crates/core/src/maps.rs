//! Elementary exact symplectic maps and their composition pipelines.
//!
//! Everything is built from pieces whose symplecticity is exact by
//! construction: action shears `(theta, r) -> (theta + grad h(r), r)`, angle
//! kicks `(theta, r) -> (theta, r - grad u(theta))`, the integrated pendulum
//! flow (a symmetric composition of exact shears and kicks, so symplectic to
//! machine precision with only the time-1 accuracy left to control), the
//! coupling device, and the action-rescaling conjugation.

use std::sync::Arc;

use crate::annulus::AnnulusPoint;
use crate::coupling::CoupledMap;
use crate::error::{Error, Result};
use crate::gevrey::{gevrey_norm_estimate, SampledFunction};

/// Integrator settings for the pendulum flow.
#[derive(Debug, Clone, Copy)]
pub struct FlowSettings {
    /// Initial step count per unit time.
    pub base_steps_per_unit: usize,
    /// Energy drift allowed per unit time before the step count doubles.
    pub energy_tol: f64,
    /// When set, refinement also continues until two successive step
    /// doublings land within this distance (phase accuracy costs about one
    /// extra integration; energy alone does not control it).
    pub position_tol: Option<f64>,
    /// Give up after this many doublings.
    pub max_doublings: u32,
}

impl Default for FlowSettings {
    fn default() -> Self {
        FlowSettings {
            base_steps_per_unit: 64,
            energy_tol: 1e-11,
            position_tol: None,
            max_doublings: 14,
        }
    }
}

impl FlowSettings {
    /// Settings for verification runs: phase accuracy controlled directly.
    pub fn precise(position_tol: f64) -> Self {
        FlowSettings {
            base_steps_per_unit: 64,
            energy_tol: 1e-12,
            position_tol: Some(position_tol),
            max_doublings: 18,
        }
    }
}

/// One factor of an angle kick: `r -> r - scale * profile'(theta)`.
#[derive(Clone)]
pub struct FactorKick {
    pub scale: f64,
    pub profile: SampledFunction,
}

impl std::fmt::Debug for FactorKick {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} * {}", self.scale, self.profile.label)
    }
}

/// A composable exact symplectic map of `A^n`.
#[derive(Clone)]
pub enum SymplecticMap {
    /// Integrable shear for `h = sum_i c_i r_i^2 / 2`: `theta_i += c_i r_i`.
    QuadShear { coeffs: Vec<f64> },
    /// One-factor shear `theta += grad(r)` with an arbitrary action profile.
    CustomShear {
        label: String,
        grad: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
    /// Angle kick, factor by factor; `None` leaves a factor untouched.
    Kick { profiles: Vec<Option<FactorKick>> },
    /// Time-`time` flow of `r^2/2 + V(theta)/N^2` on one annulus factor.
    PendulumFlow {
        v: SampledFunction,
        n_div: u32,
        time: f64,
        settings: FlowSettings,
    },
    /// The coupling device `Phi^{f (x) g} o (F x G)`.
    Coupled(Box<CoupledMap>),
    /// `sigma^{-1} o inner o sigma` with `sigma(theta, r) = (theta, q r)`.
    Conjugated { inner: Box<SymplecticMap>, q: f64 },
    /// Block-diagonal product; each factor map acts on its own coordinates.
    Product { factors: Vec<SymplecticMap> },
    /// Composition; `stages[0]` is applied first.
    Pipeline { stages: Vec<SymplecticMap> },
}

impl std::fmt::Debug for SymplecticMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.describe())
    }
}

impl SymplecticMap {
    /// Number of annulus factors the map acts on.
    pub fn dim(&self) -> usize {
        match self {
            SymplecticMap::QuadShear { coeffs } => coeffs.len(),
            SymplecticMap::CustomShear { .. } => 1,
            SymplecticMap::Kick { profiles } => profiles.len(),
            SymplecticMap::PendulumFlow { .. } => 1,
            SymplecticMap::Coupled(c) => c.dim(),
            SymplecticMap::Conjugated { inner, .. } => inner.dim(),
            SymplecticMap::Product { factors } => factors.iter().map(|m| m.dim()).sum(),
            SymplecticMap::Pipeline { stages } => stages.first().map_or(0, |m| m.dim()),
        }
    }

    /// Apply the map to a point.
    pub fn apply(&self, p: &AnnulusPoint) -> Result<AnnulusPoint> {
        self.apply_signed(p, false)
    }

    /// Apply the exact inverse.
    pub fn apply_inv(&self, p: &AnnulusPoint) -> Result<AnnulusPoint> {
        self.apply_signed(p, true)
    }

    fn apply_signed(&self, p: &AnnulusPoint, inverse: bool) -> Result<AnnulusPoint> {
        if p.dim() != self.dim() {
            return Err(Error::invalid(format!(
                "map on {} factors applied to point of dimension {}",
                self.dim(),
                p.dim()
            )));
        }
        match self {
            SymplecticMap::QuadShear { coeffs } => {
                let sign = if inverse { -1.0 } else { 1.0 };
                let angles = p
                    .angles
                    .iter()
                    .zip(coeffs)
                    .zip(&p.actions)
                    .map(|((t, c), r)| t + sign * c * r)
                    .collect();
                AnnulusPoint::new(angles, p.actions.clone())
            }
            SymplecticMap::CustomShear { grad, .. } => {
                let sign = if inverse { -1.0 } else { 1.0 };
                let r = p.actions[0];
                AnnulusPoint::new(vec![p.angles[0] + sign * grad(r)], vec![r])
            }
            SymplecticMap::Kick { profiles } => {
                let sign = if inverse { -1.0 } else { 1.0 };
                let mut actions = p.actions.clone();
                for (i, slot) in profiles.iter().enumerate() {
                    if let Some(k) = slot {
                        actions[i] -= sign * k.scale * k.profile.derivative(1, p.angles[i])?;
                    }
                }
                AnnulusPoint::new(p.angles.clone(), actions)
            }
            SymplecticMap::PendulumFlow {
                v,
                n_div,
                time,
                settings,
            } => {
                let t = if inverse { -time } else { *time };
                let (theta, r) =
                    pendulum_flow_lift(v, *n_div, t, (p.angles[0], p.actions[0]), settings)?;
                AnnulusPoint::new(vec![theta], vec![r])
            }
            SymplecticMap::Coupled(c) => {
                if inverse {
                    c.apply_inv(p)
                } else {
                    c.apply(p)
                }
            }
            SymplecticMap::Conjugated { inner, q } => {
                let scaled = AnnulusPoint::new(
                    p.angles.clone(),
                    p.actions.iter().map(|r| r * q).collect(),
                )?;
                let out = inner.apply_signed(&scaled, inverse)?;
                AnnulusPoint::new(out.angles, out.actions.iter().map(|r| r / q).collect())
            }
            SymplecticMap::Product { factors } => {
                let mut angles = Vec::with_capacity(p.dim());
                let mut actions = Vec::with_capacity(p.dim());
                let mut offset = 0;
                for m in factors {
                    let d = m.dim();
                    let part = AnnulusPoint::new(
                        p.angles[offset..offset + d].to_vec(),
                        p.actions[offset..offset + d].to_vec(),
                    )?;
                    let out = m.apply_signed(&part, inverse)?;
                    angles.extend(out.angles);
                    actions.extend(out.actions);
                    offset += d;
                }
                AnnulusPoint::new(angles, actions)
            }
            SymplecticMap::Pipeline { stages } => {
                let mut cur = p.clone();
                if inverse {
                    for m in stages.iter().rev() {
                        cur = m.apply_signed(&cur, true)?;
                    }
                } else {
                    for m in stages {
                        cur = m.apply_signed(&cur, false)?;
                    }
                }
                Ok(cur)
            }
        }
    }

    /// `k`-th iterate; negative `k` uses the exact inverse.
    pub fn iterate(&self, p: &AnnulusPoint, k: i64) -> Result<AnnulusPoint> {
        let mut cur = p.clone();
        for _ in 0..k.unsigned_abs() {
            cur = if k >= 0 {
                self.apply(&cur)?
            } else {
                self.apply_inv(&cur)?
            };
        }
        Ok(cur)
    }

    /// JSON description of the pipeline (kind, parameters, order).
    pub fn describe(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            SymplecticMap::QuadShear { coeffs } => json!({"kind": "quad_shear", "coeffs": coeffs}),
            SymplecticMap::CustomShear { label, .. } => {
                json!({"kind": "custom_shear", "label": label})
            }
            SymplecticMap::Kick { profiles } => json!({
                "kind": "kick",
                "factors": profiles
                    .iter()
                    .map(|s| s.as_ref().map(|k| json!({"scale": k.scale, "profile": k.profile.label})))
                    .collect::<Vec<_>>(),
            }),
            SymplecticMap::PendulumFlow { v, n_div, time, .. } => json!({
                "kind": "pendulum_flow", "potential": v.label, "n": n_div, "time": time,
            }),
            SymplecticMap::Coupled(c) => c.describe(),
            SymplecticMap::Conjugated { inner, q } => {
                json!({"kind": "conjugated", "q": q, "inner": inner.describe()})
            }
            SymplecticMap::Product { factors } => json!({
                "kind": "product",
                "factors": factors.iter().map(|m| m.describe()).collect::<Vec<_>>(),
            }),
            SymplecticMap::Pipeline { stages } => json!({
                "kind": "pipeline",
                "stages": stages.iter().map(|m| m.describe()).collect::<Vec<_>>(),
            }),
        }
    }
}

/// Shear for `h = sum_i r_i^2 / 2` in dimension `n`.
pub fn unit_quad_shear(n: usize) -> SymplecticMap {
    SymplecticMap::QuadShear { coeffs: vec![1.0; n] }
}

/// One-factor kick `Phi^{scale * u}`.
pub fn kick1(scale: f64, profile: SampledFunction) -> SymplecticMap {
    SymplecticMap::Kick {
        profiles: vec![Some(FactorKick { scale, profile })],
    }
}

/// Compose maps; `maps[0]` applies first. Dimensions must agree.
pub fn compose(maps: Vec<SymplecticMap>) -> Result<SymplecticMap> {
    if maps.is_empty() {
        return Err(Error::invalid("compose: empty stage list"));
    }
    let d = maps[0].dim();
    if maps.iter().any(|m| m.dim() != d) {
        return Err(Error::invalid("compose: inconsistent dimensions"));
    }
    Ok(SymplecticMap::Pipeline { stages: maps })
}

/// Yoshida 6th-order composition weights (solution A); `W[0]` is the middle
/// weight, the sweep is `w3 w2 w1 w0 w1 w2 w3`.
const YOSHIDA_W: [f64; 4] = [
    1.0 - 2.0 * (-1.177_679_984_178_87 + 0.235_573_213_359_357 + 0.784_513_610_477_56),
    -1.177_679_984_178_87,
    0.235_573_213_359_357,
    0.784_513_610_477_56,
];

/// Time-`t` flow of `H = r^2/2 + V(theta)/N^2` on the lift `R^2`
/// (the angle is not wrapped, which the box machinery relies on).
///
/// Symmetric splitting of exact shears and exact kicks; the step count
/// doubles until the energy drift per unit time drops below the tolerance.
pub fn pendulum_flow_lift(
    v: &SampledFunction,
    n_div: u32,
    t: f64,
    start: (f64, f64),
    settings: &FlowSettings,
) -> Result<(f64, f64)> {
    if t == 0.0 {
        return Ok(start);
    }
    let inv_n2 = 1.0 / (n_div as f64 * n_div as f64);
    let energy = |theta: f64, r: f64| -> f64 { 0.5 * r * r + v.value(theta) * inv_n2 };
    let e0 = energy(start.0, start.1);

    let dv = |theta: f64| -> f64 {
        v.analytic_derivative(1, theta)
            .unwrap_or_else(|| v.fd_derivative(1, theta))
    };

    let energy_scale = 1.0 + e0.abs() + 0.5 * start.1 * start.1;
    let mut steps_per_unit = settings.base_steps_per_unit;
    let mut doublings = 0;
    let mut prev: Option<(f64, f64)> = None;
    loop {
        let n_steps = ((t.abs() * steps_per_unit as f64).ceil() as usize).max(1);
        let h = t / n_steps as f64;
        let (mut theta, mut r) = start;
        for _ in 0..n_steps {
            for idx in [3usize, 2, 1, 0, 1, 2, 3] {
                // leapfrog with step w*h: half kick, drift, half kick
                let tau = YOSHIDA_W[idx] * h;
                r -= 0.5 * tau * dv(theta) * inv_n2;
                theta += tau * r;
                r -= 0.5 * tau * dv(theta) * inv_n2;
            }
        }
        let drift = (energy(theta, r) - e0).abs() / t.abs().max(1.0);
        // rounding accumulates ~ sqrt(substeps); the tolerance cannot go below it
        let floor = 32.0 * f64::EPSILON * energy_scale * ((21 * n_steps) as f64).sqrt();
        let energy_ok = drift <= settings.energy_tol.max(floor);
        match settings.position_tol {
            None => {
                if energy_ok {
                    return Ok((theta, r));
                }
            }
            Some(ptol) => {
                // position roundoff grows linearly with the substep count
                let pos_floor =
                    f64::EPSILON * (1.0 + theta.abs() + r.abs()) * (21 * n_steps) as f64;
                if let Some((pt, pr)) = prev {
                    if energy_ok && (theta - pt).hypot(r - pr) <= ptol.max(pos_floor) {
                        return Ok((theta, r));
                    }
                }
                prev = Some((theta, r));
            }
        }
        doublings += 1;
        steps_per_unit *= 2;
        if doublings > settings.max_doublings {
            return Err(Error::regime(format!(
                "pendulum flow step-size underflow: energy drift {drift:.3e} after {doublings} \
                 doublings (orbit too close to the degenerate fixed point at (1/2, 0); \
                 start = ({}, {}), t = {t})",
                start.0, start.1
            )));
        }
    }
}

/// Pendulum energy `r^2/2 + V(theta)/N^2`.
pub fn pendulum_energy(v: &SampledFunction, n_div: u32, theta: f64, r: f64) -> f64 {
    0.5 * r * r + v.value(theta) / (n_div as f64 * n_div as f64)
}

/// Rescaling conjugation `sigma^{-1} o map o sigma`, `sigma(theta, r) = (theta, q r)`.
///
/// For the pieces used by the constructions the result is closed-form:
/// quadratic shears pick up a factor `q`, kicks are divided by `q`, and the
/// pendulum flow becomes the time-`q t` flow with `N` replaced by `q N`.
/// Anything else is wrapped as a pointwise conjugation.
pub fn rescale_conjugate(map: &SymplecticMap, q: u32) -> Result<SymplecticMap> {
    if q == 0 {
        return Err(Error::invalid("rescale_conjugate: q must be positive"));
    }
    let qf = q as f64;
    Ok(match map {
        SymplecticMap::QuadShear { coeffs } => SymplecticMap::QuadShear {
            coeffs: coeffs.iter().map(|c| c * qf).collect(),
        },
        SymplecticMap::Kick { profiles } => SymplecticMap::Kick {
            profiles: profiles
                .iter()
                .map(|s| {
                    s.as_ref().map(|k| FactorKick {
                        scale: k.scale / qf,
                        profile: k.profile.clone(),
                    })
                })
                .collect(),
        },
        SymplecticMap::PendulumFlow {
            v,
            n_div,
            time,
            settings,
        } => SymplecticMap::PendulumFlow {
            v: v.clone(),
            n_div: n_div * q,
            time: time * qf,
            settings: *settings,
        },
        SymplecticMap::Pipeline { stages } => SymplecticMap::Pipeline {
            stages: stages
                .iter()
                .map(|m| rescale_conjugate(m, q))
                .collect::<Result<_>>()?,
        },
        SymplecticMap::Product { factors } => SymplecticMap::Product {
            factors: factors
                .iter()
                .map(|m| rescale_conjugate(m, q))
                .collect::<Result<_>>()?,
        },
        other => SymplecticMap::Conjugated {
            inner: Box::new(other.clone()),
            q: qf,
        },
    })
}

/// One perturbation term of a deviation ledger.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DeviationTerm {
    pub label: String,
    pub norm_estimate: f64,
}

/// Upper bound for the deviation from the integrable part, computed from the
/// exhibited decomposition (no infimum search).
#[derive(Debug, Clone, serde::Serialize)]
pub struct DeviationLedger {
    pub terms: Vec<DeviationTerm>,
    pub total: f64,
}

impl DeviationLedger {
    fn push(&mut self, label: String, norm: f64) {
        self.terms.push(DeviationTerm {
            label,
            norm_estimate: norm,
        });
        self.total += norm;
    }
}

/// Build the deviation ledger of a pipeline in perturbation form: one
/// integrable head (shear, pendulum flow, or a product of those), followed by
/// kicks and coupling kicks. Every non-integrable term contributes its
/// truncated Gevrey-norm estimate.
pub fn deviation(
    pipeline: &SymplecticMap,
    alpha: f64,
    l: f64,
    max_order: usize,
) -> Result<DeviationLedger> {
    let mut ledger = DeviationLedger {
        terms: Vec::new(),
        total: 0.0,
    };
    accumulate_deviation(pipeline, true, alpha, l, max_order, &mut ledger)?;
    Ok(ledger)
}

fn accumulate_deviation(
    map: &SymplecticMap,
    head_allowed: bool,
    alpha: f64,
    l: f64,
    max_order: usize,
    ledger: &mut DeviationLedger,
) -> Result<()> {
    match map {
        SymplecticMap::QuadShear { .. } => Ok(()),
        SymplecticMap::CustomShear { label, .. } => {
            if head_allowed {
                Ok(())
            } else {
                Err(Error::Prerequisite(format!(
                    "pipeline not in perturbation form: shear `{label}` after the head"
                )))
            }
        }
        SymplecticMap::PendulumFlow { v, n_div, time, .. } => {
            if !head_allowed {
                return Err(Error::Prerequisite(
                    "pipeline not in perturbation form: flow after the head".into(),
                ));
            }
            let norm = gevrey_norm_estimate(v, alpha, l, max_order)?;
            let n2 = (*n_div as f64).powi(2);
            ledger.push(
                format!("{} / {}^2 (time {})", v.label, n_div, time),
                norm * time.abs() / n2,
            );
            Ok(())
        }
        SymplecticMap::Kick { profiles } => {
            for k in profiles.iter().flatten() {
                let norm = gevrey_norm_estimate(&k.profile, alpha, l, max_order)?;
                ledger.push(
                    format!("{} * {}", k.scale, k.profile.label),
                    k.scale.abs() * norm,
                );
            }
            Ok(())
        }
        SymplecticMap::Coupled(c) => {
            // the product head F x G plus the coupling kick f (x) g
            accumulate_deviation(c.inner_f(), head_allowed, alpha, l, max_order, ledger)?;
            accumulate_deviation(c.inner_g(), head_allowed, alpha, l, max_order, ledger)?;
            let nf = c.f_norm_estimate(alpha, l, max_order)?;
            let ng = c.g_norm_estimate(alpha, l, max_order)?;
            ledger.push(format!("{} (x) {}", c.f_label(), c.g_label()), nf * ng);
            Ok(())
        }
        SymplecticMap::Conjugated { .. } => Err(Error::Prerequisite(
            "pipeline not in perturbation form: unresolved conjugation".into(),
        )),
        SymplecticMap::Product { factors } => {
            for m in factors {
                accumulate_deviation(m, head_allowed, alpha, l, max_order, ledger)?;
            }
            Ok(())
        }
        SymplecticMap::Pipeline { stages } => {
            for (i, m) in stages.iter().enumerate() {
                accumulate_deviation(m, head_allowed && i == 0, alpha, l, max_order, ledger)?;
            }
            Ok(())
        }
    }
}

/// Determinant of the Jacobian at `p` by central finite differences with one
/// Richardson level (near-separatrix maps have third derivatives large
/// enough that the plain h^2 error swamps tight tolerances).
pub fn jacobian_det(map: &SymplecticMap, p: &AnnulusPoint, h: f64) -> Result<f64> {
    let coarse = jacobian_matrix(map, p, h)?;
    let fine = jacobian_matrix(map, p, 0.5 * h)?;
    let dim = coarse.len();
    let mut m = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            m[i][j] = (4.0 * fine[i][j] - coarse[i][j]) / 3.0;
        }
    }
    Ok(lu_det(m))
}

fn jacobian_matrix(map: &SymplecticMap, p: &AnnulusPoint, h: f64) -> Result<Vec<Vec<f64>>> {
    let n = p.dim();
    let dim = 2 * n;
    let coord = |p: &AnnulusPoint, i: usize| {
        if i < n {
            p.angles[i]
        } else {
            p.actions[i - n]
        }
    };
    let perturb = |i: usize, eps: f64| -> Result<AnnulusPoint> {
        let mut angles = p.angles.clone();
        let mut actions = p.actions.clone();
        if i < n {
            angles[i] += eps;
        } else {
            actions[i - n] += eps;
        }
        AnnulusPoint::new(angles, actions)
    };
    let mut m = vec![vec![0.0; dim]; dim];
    for j in 0..dim {
        let plus = map.apply(&perturb(j, h)?)?;
        let minus = map.apply(&perturb(j, -h)?)?;
        for (i, row) in m.iter_mut().enumerate() {
            let mut d = coord(&plus, i) - coord(&minus, i);
            if i < n {
                // angle differences live on the torus
                d = crate::annulus::torus_lift(d);
            }
            row[j] = d / (2.0 * h);
        }
    }
    Ok(m)
}

fn lu_det(mut m: Vec<Vec<f64>>) -> f64 {
    let dim = m.len();
    let mut det = 1.0;
    for k in 0..dim {
        let piv = (k..dim)
            .max_by(|&a, &b| m[a][k].abs().partial_cmp(&m[b][k].abs()).unwrap())
            .unwrap();
        if m[piv][k] == 0.0 {
            return 0.0;
        }
        if piv != k {
            m.swap(piv, k);
            det = -det;
        }
        det *= m[k][k];
        for i in k + 1..dim {
            let f = m[i][k] / m[k][k];
            for j in k..dim {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gevrey::{make_v, make_w};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    const ALPHA: f64 = 2.0;

    #[test]
    fn shear_examples() {
        let shear = unit_quad_shear(1);
        let p = AnnulusPoint::planar(0.2, 0.5);
        let out = shear.apply(&p).unwrap();
        assert_relative_eq!(out.angles[0], 0.7);
        assert_relative_eq!(out.actions[0], 0.5);

        // integer shift wraps
        let out = shear.apply(&AnnulusPoint::planar(0.2, 1.0)).unwrap();
        assert_relative_eq!(out.angles[0], 0.2);

        // componentwise in two factors
        let shear2 = unit_quad_shear(2);
        let p = AnnulusPoint::new(vec![0.0, 0.0], vec![0.25, 0.5]).unwrap();
        let out = shear2.apply(&p).unwrap();
        assert_eq!(out.angles, vec![0.25, 0.5]);
        assert_eq!(out.actions, vec![0.25, 0.5]);
    }

    #[test]
    fn kick_examples() {
        let w = make_w(ALPHA, 4, 1.0).unwrap();
        let kick = kick1(0.3, w);
        // dead zone [delta/N, 1-delta/N]: W_N vanishes identically there
        let p = AnnulusPoint::planar(0.5, 1.3);
        let out = kick.apply(&p).unwrap();
        assert_eq!(out.actions[0], 1.3);
        assert_eq!(out.angles[0], 0.5);

        // plateau: u = nu * theta^2/2 gives r -> r - nu*theta
        let w = make_w(ALPHA, 4, 1.0).unwrap();
        let nu = 0.3;
        let kick = kick1(nu, w);
        let x = 0.05;
        let out = kick.apply(&AnnulusPoint::planar(x, 0.7)).unwrap();
        assert_relative_eq!(out.actions[0], 0.7 - nu * x, max_relative = 1e-14);
        assert_eq!(out.angles[0], x);
    }

    #[test]
    fn iterate_and_inverse() {
        let shear = unit_quad_shear(1);
        let p = AnnulusPoint::planar(0.0, 0.5);
        assert_eq!(shear.iterate(&p, 0).unwrap(), p);
        // 4 * 0.5 = 2 wraps to 0
        let out = shear.iterate(&p, 4).unwrap();
        assert_relative_eq!(out.angles[0], 0.0);

        let w = make_w(ALPHA, 3, 1.0).unwrap();
        let map = compose(vec![unit_quad_shear(1), kick1(0.2, w)]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = AnnulusPoint::planar(rng.gen::<f64>(), rng.gen::<f64>() * 2.0 - 1.0);
            for k in [1i64, 3, 7] {
                let back = map.iterate(&map.iterate(&p, -k).unwrap(), k).unwrap();
                assert!(back.dist(&p) < 1e-10, "inverse consistency at k={k}");
            }
        }
    }

    #[test]
    fn shear_kick_closed_form_inverses() {
        let w = make_w(ALPHA, 5, 0.9).unwrap();
        let stages = [unit_quad_shear(1), kick1(0.7, w)];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for map in &stages {
            for _ in 0..50 {
                let p = AnnulusPoint::planar(rng.gen::<f64>(), rng.gen::<f64>() * 4.0 - 2.0);
                let round = map.apply_inv(&map.apply(&p).unwrap()).unwrap();
                assert!(round.dist(&p) < 1e-13);
            }
        }
    }

    #[test]
    fn pendulum_flow_conserves_energy() {
        let v = make_v(ALPHA, 0.2, 0.2, 2.5).unwrap();
        let settings = FlowSettings::default();
        let start = (0.1, 2.8); // energy well above the separatrix
        let e0 = pendulum_energy(&v, 1, start.0, start.1);
        assert!(e0 > 0.0);
        let (theta, r) = pendulum_flow_lift(&v, 1, 1.0, start, &settings).unwrap();
        let e1 = pendulum_energy(&v, 1, theta, r);
        assert!((e1 - e0).abs() < 1e-10, "drift {}", (e1 - e0).abs());
    }

    #[test]
    fn pendulum_flow_is_free_shear_on_plateau() {
        // where V is constant the flow is theta -> theta + t r
        let v = make_v(ALPHA, 0.2, 0.2, 2.5).unwrap();
        let settings = FlowSettings::default();
        let (theta, r) = pendulum_flow_lift(&v, 2, 0.05, (0.0, 1.0), &settings).unwrap();
        assert_relative_eq!(r, 1.0, epsilon = 1e-13);
        assert_relative_eq!(theta, 0.05, epsilon = 1e-12);
    }

    #[test]
    fn flow_group_property() {
        let v = make_v(ALPHA, 0.2, 0.2, 2.5).unwrap();
        let settings = FlowSettings::default();
        let start = (0.3, 1.9);
        let one = pendulum_flow_lift(&v, 1, 1.0, start, &settings).unwrap();
        let two_a = pendulum_flow_lift(&v, 1, 1.0, one, &settings).unwrap();
        let two_b = pendulum_flow_lift(&v, 1, 2.0, start, &settings).unwrap();
        assert!((two_a.0 - two_b.0).abs() < 1e-9);
        assert!((two_a.1 - two_b.1).abs() < 1e-9);

        // reversibility
        let back = pendulum_flow_lift(&v, 1, -1.0, one, &settings).unwrap();
        assert!((back.0 - start.0).abs() < 1e-10);
        assert!((back.1 - start.1).abs() < 1e-10);
    }

    #[test]
    fn rescale_conjugate_closed_forms() {
        // h = r^2/2, q = 3: conjugate is theta -> theta + 3 r
        let q = 3u32;
        let conj = rescale_conjugate(&unit_quad_shear(1), q).unwrap();
        let p = AnnulusPoint::planar(0.1, 0.21);
        let out = conj.apply(&p).unwrap();
        assert_relative_eq!(out.angles[0], (0.1 + 3.0 * 0.21) % 1.0, max_relative = 1e-12);

        // kick u -> u/q
        let w = make_w(ALPHA, 4, 1.0).unwrap();
        let kick = kick1(1.0, w);
        let conj = rescale_conjugate(&kick, 5).unwrap();
        let x = 0.04;
        let out = conj.apply(&AnnulusPoint::planar(x, 0.3)).unwrap();
        assert_relative_eq!(out.actions[0], 0.3 - x / 5.0, max_relative = 1e-12);

        assert!(rescale_conjugate(&kick, 0).is_err());
    }

    #[test]
    fn conjugation_matches_pointwise_oracle() {
        // direct sigma^{-1} o Phi o sigma vs closed form at random points
        let v = make_v(ALPHA, 0.2, 0.2, 2.5).unwrap();
        let tight = FlowSettings::precise(1e-12);
        let flow = SymplecticMap::PendulumFlow {
            v,
            n_div: 1,
            time: 1.0,
            settings: tight,
        };
        let q = 5u32;
        let closed = rescale_conjugate(&flow, q).unwrap();
        let direct = SymplecticMap::Conjugated {
            inner: Box::new(flow),
            q: q as f64,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let p = AnnulusPoint::planar(rng.gen::<f64>(), 0.52 + 0.3 * rng.gen::<f64>());
            let a = closed.apply(&p).unwrap();
            let b = direct.apply(&p).unwrap();
            assert!(a.dist(&b) < 1e-10, "mismatch {}", a.dist(&b));
        }
    }

    #[test]
    fn deviation_ledger() {
        // pure shear: zero deviation
        let ledger = deviation(&unit_quad_shear(2), ALPHA, 0.25, 4).unwrap();
        assert_eq!(ledger.terms.len(), 0);
        assert_eq!(ledger.total, 0.0);

        // G_{N,mu} = Phi^{mu W_N} o Phi^{P_{V/N^2}}:
        // total <= ||V||/N^2 + mu ||W_N||
        let n = 4u32;
        let mu = 1e-3;
        let v = make_v(ALPHA, 0.2, 0.2, 2.5).unwrap();
        let w = make_w(ALPHA, n, 1.0).unwrap();
        let nv = gevrey_norm_estimate(&v, ALPHA, 0.25, 4).unwrap();
        let nw = gevrey_norm_estimate(&w, ALPHA, 0.25, 4).unwrap();
        let g = compose(vec![
            SymplecticMap::PendulumFlow {
                v,
                n_div: n,
                time: 1.0,
                settings: FlowSettings::default(),
            },
            kick1(mu, w),
        ])
        .unwrap();
        let ledger = deviation(&g, ALPHA, 0.25, 4).unwrap();
        assert_eq!(ledger.terms.len(), 2);
        assert_relative_eq!(
            ledger.total,
            nv / (n as f64).powi(2) + mu * nw,
            max_relative = 1e-12
        );

        // a flow after the head is not perturbation form
        let v2 = make_v(ALPHA, 0.2, 0.2, 2.5).unwrap();
        let bad = compose(vec![
            kick1(mu, make_w(ALPHA, 4, 1.0).unwrap()),
            SymplecticMap::PendulumFlow {
                v: v2,
                n_div: 1,
                time: 1.0,
                settings: FlowSettings::default(),
            },
        ])
        .unwrap();
        assert!(deviation(&bad, ALPHA, 0.25, 4).is_err());
    }

    #[test]
    fn area_preservation_finite_difference() {
        // exact pieces (shears, kicks, compositions) certify to 1e-8 at
        // 1000 random points
        let w = make_w(ALPHA, 2, 1.0).unwrap();
        let exact = compose(vec![unit_quad_shear(1), kick1(0.4, w)]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let p = AnnulusPoint::planar(rng.gen::<f64>(), 2.0 * rng.gen::<f64>() - 1.0);
            let det = jacobian_det(&exact, &p, 1e-5).unwrap();
            assert!(
                (det - 1.0).abs() < 1e-8,
                "Jacobian determinant {det} at {p:?}"
            );
        }

        // the integrated flow is symplectic by construction (a composition
        // of exact shears and kicks); the finite-difference measurement of
        // det is noise-limited for it: sqrt(substeps) * eps / h roundoff
        // against stencil nonlinearity where the trajectory crosses the
        // narrow potential blend, so the certification tolerance is looser
        let fixed = FlowSettings {
            base_steps_per_unit: 256,
            energy_tol: f64::INFINITY,
            position_tol: None,
            max_doublings: 0,
        };
        let v = make_v(ALPHA, 0.2, 0.2, 2.5).unwrap();
        let w = make_w(ALPHA, 2, 1.0).unwrap();
        let g = compose(vec![
            SymplecticMap::PendulumFlow {
                v,
                n_div: 2,
                time: 1.0,
                settings: fixed,
            },
            kick1(1e-2, w),
        ])
        .unwrap();
        for _ in 0..40 {
            let p = AnnulusPoint::planar(rng.gen::<f64>(), 1.5 + 0.4 * rng.gen::<f64>());
            let det = jacobian_det(&g, &p, 1e-6).unwrap();
            assert!(
                (det - 1.0).abs() < 1e-6,
                "Jacobian determinant {det} at {p:?}"
            );
        }
    }
}




