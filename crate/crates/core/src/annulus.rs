//! Annulus geometry: points of `T^n x R^n`, vertical bands, the upper strip,
//! filled ellipses and polydiscs, with capacity and measure bookkeeping.
//!
//! Angles are stored wrapped into `[0, 1)` at construction and every map
//! output re-wraps, so a single canonical representative survives long
//! iteration. Torus distance is `min(|d|, 1 - |d|)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wrap a real number into `[0, 1)`.
pub fn wrap_angle(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("wrap_angle: non-finite input {x}")));
    }
    let mut y = x - x.floor();
    // x.floor() can round so that y == 1.0 for x just below an integer.
    if y >= 1.0 {
        y -= 1.0;
    }
    Ok(y)
}

/// Distance from `x` to the nearest integer, i.e. the torus distance to 0.
pub fn torus_dist(x: f64) -> f64 {
    let y = x - x.floor();
    y.min(1.0 - y).abs()
}

/// Signed representative of `x` in `[-1/2, 1/2)`.
pub fn torus_lift(x: f64) -> f64 {
    let y = x - x.floor();
    if y >= 0.5 {
        y - 1.0
    } else {
        y
    }
}

/// A point of the annulus `T^n x R^n`, angles wrapped to `[0,1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusPoint {
    pub angles: Vec<f64>,
    pub actions: Vec<f64>,
}

impl AnnulusPoint {
    pub fn new(angles: Vec<f64>, actions: Vec<f64>) -> Result<Self> {
        if angles.len() != actions.len() {
            return Err(Error::invalid(format!(
                "annulus point: {} angles vs {} actions",
                angles.len(),
                actions.len()
            )));
        }
        if angles.is_empty() {
            return Err(Error::invalid("annulus point: empty coordinates"));
        }
        let wrapped = angles.into_iter().map(wrap_angle).collect::<Result<_>>()?;
        Ok(AnnulusPoint {
            angles: wrapped,
            actions,
        })
    }

    /// One-factor point.
    pub fn planar(theta: f64, r: f64) -> Self {
        AnnulusPoint::new(vec![theta], vec![r]).expect("planar point")
    }

    pub fn dim(&self) -> usize {
        self.angles.len()
    }

    /// Concatenate two points into a point of the product annulus.
    pub fn product(&self, other: &AnnulusPoint) -> AnnulusPoint {
        let mut angles = self.angles.clone();
        angles.extend_from_slice(&other.angles);
        let mut actions = self.actions.clone();
        actions.extend_from_slice(&other.actions);
        AnnulusPoint { angles, actions }
    }

    /// Split off the first `m` factors.
    pub fn split(&self, m: usize) -> (AnnulusPoint, AnnulusPoint) {
        (
            AnnulusPoint {
                angles: self.angles[..m].to_vec(),
                actions: self.actions[..m].to_vec(),
            },
            AnnulusPoint {
                angles: self.angles[m..].to_vec(),
                actions: self.actions[m..].to_vec(),
            },
        )
    }

    /// Euclidean distance using torus distance on the angle coordinates.
    pub fn dist(&self, other: &AnnulusPoint) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim() {
            let da = torus_dist(self.angles[i] - other.angles[i]);
            let dr = self.actions[i] - other.actions[i];
            s += da * da + dr * dr;
        }
        s.sqrt()
    }
}

/// Vertical band `B_d = { (<theta>, r) : theta in [-d, d] }`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BandRegion {
    pub half_width: f64,
}

impl BandRegion {
    pub fn new(d: f64) -> Result<Self> {
        if !(d > 0.0 && d < 0.5) {
            return Err(Error::invalid(format!("band half-width {d} not in (0, 1/2)")));
        }
        Ok(BandRegion { half_width: d })
    }

    pub fn contains_angle(&self, theta: f64) -> bool {
        torus_dist(theta) <= self.half_width
    }
}

/// Upper strip `A^+_d = T x [0, d]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct UpperStrip {
    pub height: f64,
}

impl UpperStrip {
    pub fn new(d: f64) -> Result<Self> {
        if !(d > 0.0) {
            return Err(Error::invalid(format!("strip height {d} must be positive")));
        }
        Ok(UpperStrip { height: d })
    }

    pub fn contains(&self, r: f64) -> bool {
        (0.0..=self.height).contains(&r)
    }
}

/// Is the planar point inside the band `B_d`?
pub fn in_band(p: &AnnulusPoint, b: &BandRegion) -> bool {
    debug_assert_eq!(p.dim(), 1);
    b.contains_angle(p.angles[0])
}

/// Symmetric 2x2 matrix `[[a, b], [b, c]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl SymMat2 {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        SymMat2 { a, b, c }
    }

    pub fn det(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > 0.0 && self.det() > 0.0
    }

    /// Quadratic form `v^T M v`.
    pub fn quad(&self, x: f64, y: f64) -> f64 {
        self.a * x * x + 2.0 * self.b * x * y + self.c * y * y
    }

    /// Eigen-decomposition `M = Q diag(l1, l2) Q^T` with `Q` a rotation.
    pub fn eigen(&self) -> (f64, f64, f64) {
        // returns (l1, l2, rotation angle)
        let tr = self.a + self.c;
        let disc = ((self.a - self.c) * 0.5).hypot(self.b);
        let l1 = 0.5 * tr + disc;
        let l2 = 0.5 * tr - disc;
        let phi = 0.5 * (2.0 * self.b).atan2(self.a - self.c);
        (l1, l2, phi)
    }
}

/// A filled ellipse `{ center + v : v^T M v <= 1 }` in one annulus factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ellipse2D {
    pub center: AnnulusPoint,
    pub shape: SymMat2,
    pub boundary_samples: usize,
}

pub const DEFAULT_BOUNDARY_SAMPLES: usize = 256;

impl Ellipse2D {
    pub fn new(center: AnnulusPoint, shape: SymMat2) -> Result<Self> {
        Self::with_samples(center, shape, DEFAULT_BOUNDARY_SAMPLES)
    }

    pub fn with_samples(center: AnnulusPoint, shape: SymMat2, n: usize) -> Result<Self> {
        if center.dim() != 1 {
            return Err(Error::invalid("ellipse center must be a planar point"));
        }
        if !shape.is_positive_definite() {
            return Err(Error::invalid(format!(
                "ellipse shape matrix not positive definite: {shape:?}"
            )));
        }
        if n < 8 {
            return Err(Error::invalid("ellipse needs at least 8 boundary samples"));
        }
        Ok(Ellipse2D {
            center,
            shape,
            boundary_samples: n,
        })
    }

    /// Disc of the given area centred at `center`.
    pub fn disc(center: AnnulusPoint, area: f64) -> Result<Self> {
        if !(area > 0.0) {
            return Err(Error::invalid("disc area must be positive"));
        }
        let r2 = area / std::f64::consts::PI;
        let m = 1.0 / r2;
        Ellipse2D::new(center, SymMat2::new(m, 0.0, m))
    }

    /// Area `pi / sqrt(det M)`.
    pub fn area(&self) -> f64 {
        std::f64::consts::PI / self.shape.det().sqrt()
    }

    /// Boundary points `center + M^{-1/2} (cos t, sin t)`.
    pub fn boundary(&self) -> Vec<(f64, f64)> {
        let (l1, l2, phi) = self.shape.eigen();
        let (s, c) = (phi.sin(), phi.cos());
        let (u, v) = (1.0 / l1.sqrt(), 1.0 / l2.sqrt());
        let (tc, rc) = (self.center.angles[0], self.center.actions[0]);
        (0..self.boundary_samples)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * (k as f64) / (self.boundary_samples as f64);
                // eigenvector frame: e1 = (cos phi, sin phi), e2 = (-sin phi, cos phi)
                let x = u * t.cos();
                let y = v * t.sin();
                (tc + c * x - s * y, rc + s * x + c * y)
            })
            .collect()
    }

    /// Half-extent of the ellipse in the angle direction.
    pub fn angle_extent(&self) -> f64 {
        // max x over v^T M v <= 1 equals sqrt((M^{-1})_{11})
        (self.shape.c / self.shape.det()).sqrt()
    }

    /// Half-extent of the ellipse in the action direction.
    pub fn action_extent(&self) -> f64 {
        (self.shape.a / self.shape.det()).sqrt()
    }

    /// Distance from a planar point to the boundary curve, to first order in
    /// the residual of the quadratic form. Exact enough for the sub-1e-8
    /// tolerances used by the verification engines.
    pub fn boundary_distance(&self, theta: f64, r: f64) -> f64 {
        let x = torus_lift(theta - self.center.angles[0]);
        let y = r - self.center.actions[0];
        let q = self.shape.quad(x, y);
        let gx = 2.0 * (self.shape.a * x + self.shape.b * y);
        let gy = 2.0 * (self.shape.b * x + self.shape.c * y);
        let g = gx.hypot(gy);
        if g == 0.0 {
            // center of the ellipse: distance is the smallest semi-axis
            let (l1, _, _) = self.shape.eigen();
            return 1.0 / l1.sqrt();
        }
        (q - 1.0).abs() / g
    }

    pub fn contains(&self, theta: f64, r: f64) -> bool {
        let x = torus_lift(theta - self.center.angles[0]);
        let y = r - self.center.actions[0];
        self.shape.quad(x, y) <= 1.0
    }
}

/// A product of filled ellipses, one per annulus factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Polydisc {
    pub factors: Vec<Ellipse2D>,
}

impl Polydisc {
    pub fn new(factors: Vec<Ellipse2D>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::invalid("polydisc needs at least one factor"));
        }
        Ok(Polydisc { factors })
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    /// Gromov capacity of a polydisc: the minimum factor area.
    pub fn capacity(&self) -> f64 {
        self.factors.iter().map(Ellipse2D::area).fold(f64::INFINITY, f64::min)
    }

    /// Lebesgue measure of the product set: the product of factor areas.
    pub fn measure(&self) -> f64 {
        self.factors.iter().map(Ellipse2D::area).product()
    }

    /// Center of the product set as one point of `A^n`.
    pub fn center(&self) -> AnnulusPoint {
        let angles = self.factors.iter().map(|e| e.center.angles[0]).collect();
        let actions = self.factors.iter().map(|e| e.center.actions[0]).collect();
        AnnulusPoint { angles, actions }
    }
}

/// Gromov capacity of a polydisc (minimum factor area).
pub fn polydisc_capacity(p: &Polydisc) -> f64 {
    p.capacity()
}

/// Volume of the unit ball in dimension `2n`: `pi^n / n!`.
pub fn unit_ball_volume(two_n: usize) -> f64 {
    debug_assert!(two_n % 2 == 0);
    let n = two_n / 2;
    let mut v = 1.0;
    for k in 1..=n {
        v *= std::f64::consts::PI / k as f64;
    }
    v
}

/// Capacity vs measure: `C_G(W) <= pi (mu(W) / Vol(B^{2n}(1)))^{1/n}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CapacityMeasure {
    pub capacity: f64,
    pub measure_product: f64,
    pub rhs: f64,
    pub bound_ok: bool,
}

pub fn capacity_measure_bound(p: &Polydisc) -> CapacityMeasure {
    let n = p.dim();
    let capacity = p.capacity();
    let measure_product = p.measure();
    let rhs = std::f64::consts::PI
        * (measure_product / unit_ball_volume(2 * n)).powf(1.0 / n as f64);
    let bound_ok = capacity <= rhs * (1.0 + 1e-12);
    CapacityMeasure {
        capacity,
        measure_product,
        rhs,
        bound_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn wrap_angle_basic() {
        assert_eq!(wrap_angle(0.0).unwrap(), 0.0);
        assert_relative_eq!(wrap_angle(1.25).unwrap(), 0.25);
        assert_relative_eq!(wrap_angle(-0.3).unwrap(), 0.7);
        assert!(wrap_angle(f64::NAN).is_err());
        assert!(wrap_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn in_band_cases() {
        let b = BandRegion::new(0.1).unwrap();
        assert!(in_band(&AnnulusPoint::planar(0.0, 3.0), &b));
        assert!(!in_band(&AnnulusPoint::planar(0.5, 0.0), &b));
        // wrap-around: torus distance of 0.95 is 0.05
        assert!(in_band(&AnnulusPoint::planar(0.95, -1.0), &b));
    }

    #[test]
    fn capacity_is_min_of_areas() {
        let mk = |area: f64| Ellipse2D::disc(AnnulusPoint::planar(0.0, 0.0), area).unwrap();
        let single = Polydisc::new(vec![mk(0.37)]).unwrap();
        assert_relative_eq!(polydisc_capacity(&single), 0.37, max_relative = 1e-14);

        let p = Polydisc::new(vec![mk(0.3), mk(0.1), mk(0.2)]).unwrap();
        assert_relative_eq!(polydisc_capacity(&p), 0.1, max_relative = 1e-14);

        let unit = Polydisc::new(vec![mk(1.0), mk(1.0), mk(1.0)]).unwrap();
        assert_relative_eq!(polydisc_capacity(&unit), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn capacity_measure_examples() {
        let mk = |area: f64| Ellipse2D::disc(AnnulusPoint::planar(0.0, 0.0), area).unwrap();

        // n = 1: equality case, Vol(B^2(1)) = pi.
        let p = Polydisc::new(vec![mk(0.42)]).unwrap();
        let cm = capacity_measure_bound(&p);
        assert!(cm.bound_ok);
        assert_relative_eq!(cm.capacity, cm.rhs, max_relative = 1e-12);

        // two unit-area discs: bound is sqrt(2), since Vol(B^4(1)) = pi^2/2.
        let p = Polydisc::new(vec![mk(1.0), mk(1.0)]).unwrap();
        let cm = capacity_measure_bound(&p);
        assert!(cm.bound_ok);
        assert_relative_eq!(cm.rhs, 2.0_f64.sqrt(), max_relative = 1e-12);

        // areas {0.3, 0.1}: capacity 0.1, rhs = pi (0.03 * 2/pi^2)^{1/2}
        let p = Polydisc::new(vec![mk(0.3), mk(0.1)]).unwrap();
        let cm = capacity_measure_bound(&p);
        assert!(cm.bound_ok);
        assert_relative_eq!(cm.capacity, 0.1, max_relative = 1e-12);
        let expect = std::f64::consts::PI * (0.03 * 2.0 / std::f64::consts::PI.powi(2)).sqrt();
        assert_relative_eq!(cm.rhs, expect, max_relative = 1e-12);
        assert!((cm.rhs - 0.245).abs() < 0.001);
    }

    #[test]
    fn unit_ball_volumes() {
        assert_relative_eq!(unit_ball_volume(2), std::f64::consts::PI);
        assert_relative_eq!(unit_ball_volume(4), std::f64::consts::PI.powi(2) / 2.0);
    }

    #[test]
    fn ellipse_area_and_boundary() {
        // tilted ellipse with semi-axes 0.02 and 0.005
        let base = SymMat2::new(1.0 / 4e-4, 0.0, 1.0 / 2.5e-5);
        let e = Ellipse2D::new(AnnulusPoint::planar(0.3, 1.0), base).unwrap();
        assert_relative_eq!(
            e.area(),
            std::f64::consts::PI * 0.02 * 0.005,
            max_relative = 1e-12
        );
        for (t, r) in e.boundary() {
            let x = torus_lift(t - 0.3);
            let y = r - 1.0;
            assert_relative_eq!(base.quad(x, y), 1.0, max_relative = 1e-10);
        }
        assert_relative_eq!(e.angle_extent(), 0.02, max_relative = 1e-12);
        assert_relative_eq!(e.action_extent(), 0.005, max_relative = 1e-12);

        let m = SymMat2::new(1.0 / 4e-4, 150.0, 1.0 / 2.5e-5);
        let tilted = Ellipse2D::new(AnnulusPoint::planar(0.0, 0.0), m).unwrap();
        for (t, r) in tilted.boundary() {
            assert_relative_eq!(m.quad(torus_lift(t), r), 1.0, max_relative = 1e-10);
        }
        assert_relative_eq!(
            tilted.area(),
            std::f64::consts::PI / m.det().sqrt(),
            max_relative = 1e-12
        );
    }

    proptest! {
        #[test]
        fn wrap_is_idempotent(x in -1e6..1e6f64) {
            let w = wrap_angle(x).unwrap();
            prop_assert_eq!(wrap_angle(w).unwrap(), w);
            prop_assert!((0.0..1.0).contains(&w));
        }

        #[test]
        fn band_invariant_under_shift(theta in -5.0..5.0f64, d in 0.01..0.49f64) {
            let b = BandRegion::new(d).unwrap();
            let p = AnnulusPoint::planar(theta, 0.0);
            let q = AnnulusPoint::planar(theta + 1.0, 0.0);
            prop_assert_eq!(in_band(&p, &b), in_band(&q, &b));
        }

        #[test]
        fn capacity_monotone_under_shrinking(
            areas in proptest::collection::vec(0.01..10.0f64, 1..5),
            shrink in 0.05..1.0f64,
        ) {
            let mk = |a: f64| Ellipse2D::disc(AnnulusPoint::planar(0.0, 0.0), a).unwrap();
            let p = Polydisc::new(areas.iter().map(|&a| mk(a)).collect()).unwrap();
            let q = Polydisc::new(areas.iter().map(|&a| mk(a * shrink)).collect()).unwrap();
            prop_assert!(polydisc_capacity(&q) <= polydisc_capacity(&p) + 1e-15);
        }

        #[test]
        fn capacity_measure_bound_holds(
            shapes in proptest::collection::vec((0.1..10.0f64, -0.9..0.9f64, 0.1..10.0f64), 1..5)
        ) {
            let factors: Vec<Ellipse2D> = shapes
                .iter()
                .map(|&(a, b01, c)| {
                    // b chosen as a fraction of sqrt(ac) keeps M positive definite
                    let b = b01 * (a * c).sqrt();
                    Ellipse2D::new(AnnulusPoint::planar(0.0, 0.0), SymMat2::new(a, b, c)).unwrap()
                })
                .collect();
            let p = Polydisc::new(factors).unwrap();
            prop_assert!(capacity_measure_bound(&p).bound_ok);
        }
    }
}
