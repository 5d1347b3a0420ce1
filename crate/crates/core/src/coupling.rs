//! The coupling device `Phi^{f (x) g} o (F x G)` and its closed-form iterate
//! predictions.
//!
//! `f (x) g` denotes the product Hamiltonian `(x, x') -> f(x) g(x')`. When
//! both profiles depend on angles only, the time-one map of `f (x) g` is
//! exact: angles are frozen by such a Hamiltonian, so
//! `Phi^{f(x)g}(x, x') = (Phi^{g(x') f}(x), Phi^{f(x) g}(x'))` with the
//! coefficients read off at the input point, and each scaled kick is
//! closed-form.

use serde::Serialize;

use crate::annulus::AnnulusPoint;
use crate::error::{Error, Result};
use crate::gevrey::{gevrey_norm_estimate, SampledFunction};
use crate::maps::SymplecticMap;

/// Tensor product of per-factor angle profiles:
/// `f(theta_1, ..., theta_m) = prod_i f_i(theta_i)`.
#[derive(Clone)]
pub struct TensorProfile {
    pub factors: Vec<SampledFunction>,
}

impl std::fmt::Debug for TensorProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl TensorProfile {
    pub fn new(factors: Vec<SampledFunction>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::invalid("tensor profile needs at least one factor"));
        }
        Ok(TensorProfile { factors })
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn label(&self) -> String {
        self.factors
            .iter()
            .map(|f| f.label.clone())
            .collect::<Vec<_>>()
            .join(" (x) ")
    }

    pub fn value(&self, angles: &[f64]) -> f64 {
        self.factors
            .iter()
            .zip(angles)
            .map(|(f, &t)| f.value(t))
            .product()
    }

    /// Gradient with respect to the angles.
    pub fn grad(&self, angles: &[f64]) -> Result<Vec<f64>> {
        let values: Vec<f64> = self
            .factors
            .iter()
            .zip(angles)
            .map(|(f, &t)| f.value(t))
            .collect();
        let mut out = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let mut g = self.factors[i].derivative(1, angles[i])?;
            for (j, v) in values.iter().enumerate() {
                if j != i {
                    g *= v;
                }
            }
            out.push(g);
        }
        Ok(out)
    }

    /// Truncated Gevrey-norm bound: the product of factor norms
    /// (the norm is a Banach-algebra norm).
    pub fn norm_estimate(&self, alpha: f64, l: f64, max_order: usize) -> Result<f64> {
        let mut prod = 1.0;
        for f in &self.factors {
            prod *= gevrey_norm_estimate(f, alpha, l, max_order)?;
        }
        Ok(prod)
    }
}

/// The coupled map `F_c = Phi^{f (x) g} o (F x G)` on `A^{m + m'}`.
#[derive(Clone)]
pub struct CoupledMap {
    f: TensorProfile,
    g: TensorProfile,
    inner_f: SymplecticMap,
    inner_g: SymplecticMap,
    /// Period of the synchronizing orbit in the second factor.
    pub q: u32,
}

impl CoupledMap {
    pub fn new(
        f: TensorProfile,
        inner_f: SymplecticMap,
        g: TensorProfile,
        inner_g: SymplecticMap,
        q: u32,
    ) -> Result<Self> {
        if f.dim() != inner_f.dim() {
            return Err(Error::invalid(format!(
                "coupling: f has {} factors but F acts on {}",
                f.dim(),
                inner_f.dim()
            )));
        }
        if g.dim() != inner_g.dim() {
            return Err(Error::invalid(format!(
                "coupling: g has {} factors but G acts on {}",
                g.dim(),
                inner_g.dim()
            )));
        }
        if q == 0 {
            return Err(Error::invalid("coupling: q must be positive"));
        }
        Ok(CoupledMap {
            f,
            g,
            inner_f,
            inner_g,
            q,
        })
    }

    pub fn dim(&self) -> usize {
        self.f.dim() + self.g.dim()
    }

    pub fn m(&self) -> usize {
        self.f.dim()
    }

    pub fn inner_f(&self) -> &SymplecticMap {
        &self.inner_f
    }

    pub fn inner_g(&self) -> &SymplecticMap {
        &self.inner_g
    }

    pub fn f_label(&self) -> String {
        self.f.label()
    }

    pub fn g_label(&self) -> String {
        self.g.label()
    }

    pub fn f_norm_estimate(&self, alpha: f64, l: f64, max_order: usize) -> Result<f64> {
        self.f.norm_estimate(alpha, l, max_order)
    }

    pub fn g_norm_estimate(&self, alpha: f64, l: f64, max_order: usize) -> Result<f64> {
        self.g.norm_estimate(alpha, l, max_order)
    }

    /// `Phi^f o F^q` acting on the first block: the map whose periodic or
    /// wandering sets the coupling transports to the product.
    pub fn first_block_return_map(&self) -> Result<SymplecticMap> {
        let mut stages = vec![self.inner_f.clone(); self.q as usize];
        stages.push(SymplecticMap::Kick {
            profiles: self
                .f
                .factors
                .iter()
                .map(|p| {
                    Some(crate::maps::FactorKick {
                        scale: 1.0,
                        profile: p.clone(),
                    })
                })
                .collect(),
        });
        crate::maps::compose(stages)
    }

    /// One application of the coupled map.
    pub fn apply(&self, p: &AnnulusPoint) -> Result<AnnulusPoint> {
        let (x, xp) = p.split(self.m());
        let fx = self.inner_f.apply(&x)?;
        let gxp = self.inner_g.apply(&xp)?;
        self.coupling_kick(&fx, &gxp, 1.0)
    }

    /// Exact inverse: undo the angle-only kick (angles are unchanged by it),
    /// then the inner maps.
    pub fn apply_inv(&self, p: &AnnulusPoint) -> Result<AnnulusPoint> {
        let (y, yp) = p.split(self.m());
        let unkicked = self.coupling_kick(&y, &yp, -1.0)?;
        let (fx, gxp) = unkicked.split(self.m());
        let x = self.inner_f.apply_inv(&fx)?;
        let xp = self.inner_g.apply_inv(&gxp)?;
        Ok(x.product(&xp))
    }

    /// The kick `Phi^{sign * f (x) g}` at `(x, x')`, exact for angle-only
    /// profiles.
    fn coupling_kick(
        &self,
        x: &AnnulusPoint,
        xp: &AnnulusPoint,
        sign: f64,
    ) -> Result<AnnulusPoint> {
        let cf = self.g.value(&xp.angles); // coefficient for the first block
        let cg = self.f.value(&x.angles); // coefficient for the second block
        let gf = self.f.grad(&x.angles)?;
        let gg = self.g.grad(&xp.angles)?;
        let mut out = x.product(xp);
        for i in 0..self.m() {
            out.actions[i] -= sign * cf * gf[i];
        }
        for j in 0..self.g.dim() {
            out.actions[self.m() + j] -= sign * cg * gg[j];
        }
        Ok(out)
    }

    pub fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": "coupled",
            "f": self.f.label(),
            "g": self.g.label(),
            "q": self.q,
            "inner_f": self.inner_f.describe(),
            "inner_g": self.inner_g.describe(),
        })
    }
}

/// Apply the coupled map to a pair of points.
pub fn coupled_apply(c: &CoupledMap, x: &AnnulusPoint, xp: &AnnulusPoint) -> Result<AnnulusPoint> {
    c.apply(&x.product(xp))
}

/// Margins measured by [`check_sync`].
#[derive(Debug, Clone, Serialize)]
pub struct SyncReport {
    pub pass: bool,
    pub tolerance: f64,
    /// max |g - 1| over the sample set itself
    pub value_margin_on_set: f64,
    /// max |grad g| over the sample set itself
    pub grad_margin_on_set: f64,
    /// per-iterate max |g| for s = 1..q-1
    pub value_margins: Vec<f64>,
    /// per-iterate max |grad g| for s = 1..q-1
    pub grad_margins: Vec<f64>,
}

/// Check the synchronization conditions of `g` along the orbit of the
/// candidate periodic set: `g = 1, dg = 0` on the samples and `g = 0, dg = 0`
/// on their first `q - 1` images under `G`.
pub fn check_sync(
    g: &TensorProfile,
    inner_g: &SymplecticMap,
    samples: &[AnnulusPoint],
    q: u32,
    tolerance: f64,
) -> Result<SyncReport> {
    if samples.is_empty() {
        return Err(Error::invalid("check_sync: empty sample set"));
    }
    let sup_norm = |v: &[f64]| v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));

    let mut value_on_set: f64 = 0.0;
    let mut grad_on_set: f64 = 0.0;
    for p in samples {
        value_on_set = value_on_set.max((g.value(&p.angles) - 1.0).abs());
        grad_on_set = grad_on_set.max(sup_norm(&g.grad(&p.angles)?));
    }

    let mut value_margins = Vec::with_capacity(q as usize - 1);
    let mut grad_margins = Vec::with_capacity(q as usize - 1);
    let mut current: Vec<AnnulusPoint> = samples.to_vec();
    for _s in 1..q {
        for p in current.iter_mut() {
            *p = inner_g.apply(p)?;
        }
        let mut vmax: f64 = 0.0;
        let mut gmax: f64 = 0.0;
        for p in &current {
            vmax = vmax.max(g.value(&p.angles).abs());
            gmax = gmax.max(sup_norm(&g.grad(&p.angles)?));
        }
        value_margins.push(vmax);
        grad_margins.push(gmax);
    }

    let worst = value_on_set
        .max(grad_on_set)
        .max(sup_norm(&value_margins))
        .max(sup_norm(&grad_margins));
    Ok(SyncReport {
        pass: worst < tolerance,
        tolerance,
        value_margin_on_set: value_on_set,
        grad_margin_on_set: grad_on_set,
        value_margins,
        grad_margins,
    })
}

/// Closed-form prediction of the `(l q + s)`-th iterate of the coupled map
/// on `x x x'` with `x'` in the synchronized set:
/// `F_c^{l q + s}(x, x') = (F^s (Phi^f F^q)^l (x), G^{l q + s}(x'))`.
///
/// The caller must have verified the synchronization conditions for the set
/// containing `x'` (pass the report).
pub fn predict_iterate(
    c: &CoupledMap,
    sync: &SyncReport,
    x: &AnnulusPoint,
    xp: &AnnulusPoint,
    l: i64,
    s: u32,
) -> Result<AnnulusPoint> {
    if !sync.pass {
        return Err(Error::Prerequisite(
            "predict_iterate: synchronization check did not pass".into(),
        ));
    }
    if s >= c.q {
        return Err(Error::invalid(format!(
            "predict_iterate: s = {s} must satisfy 0 <= s < q = {}",
            c.q
        )));
    }
    let psi = c.first_block_return_map()?;
    let mut first = psi.iterate(x, l)?;
    first = c.inner_f.iterate(&first, s as i64)?;
    let second = c.inner_g.iterate(xp, l * c.q as i64 + s as i64)?;
    Ok(first.product(&second))
}
