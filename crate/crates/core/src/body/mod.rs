//! Centrally symmetric convex bodies with support and membership oracles.

mod descriptor;
mod ellipsoid;
mod longbody;
mod polytope;

use std::f64::consts::PI;

pub use descriptor::{BodyDescriptor, BodyDocument, RegionDescriptor, BODY_SCHEMA};
pub use ellipsoid::{support_of_ellipsoid, Ellipsoid, SupportValue};
pub use longbody::{cut, glue, CutBody, CutRegion, GluedBody, LongBodyOp, MINIMIZING_REL_TOL};
pub use polytope::{Cylinder, HalfspacePolytope};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::linalg::{dot, norm};
use crate::sampling::{covering_radius, line_directions, rng, sphere_directions};

/// Volume of the unit ball in R^d, `π^(d/2) / Γ(d/2 + 1)`.
pub fn ball_volume(d: usize) -> f64 {
    if d % 2 == 0 {
        let k = d / 2;
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        PI.powi(k as i32) / fact
    } else {
        let k = (d - 1) / 2;
        let double_fact: f64 = (1..=d).step_by(2).map(|i| i as f64).product();
        2f64.powi(k as i32 + 1) * PI.powi(k as i32) / double_fact
    }
}

/// Default number of sphere directions used by sampled oracles in R^d.
pub fn default_direction_budget(d: usize) -> usize {
    2000 * (d * d.saturating_sub(1) / 2).max(1)
}

/// Relative size of the boundary band, as a fraction of the diameter.
pub const BOUNDARY_TOL_REL: f64 = 1e-6;

/// A support function evaluated on unit vectors.
pub trait SupportFunction: Sync {
    fn dim(&self) -> usize;
    fn support(&self, nu: &[f64]) -> f64;
}

/// Support function given by a closure.
pub struct FnSupport<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnSupport<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> SupportFunction for FnSupport<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn support(&self, nu: &[f64]) -> f64 {
        (self.f)(nu)
    }
}

impl SupportFunction for Ellipsoid {
    fn dim(&self) -> usize {
        Ellipsoid::dim(self)
    }
    fn support(&self, nu: &[f64]) -> f64 {
        Ellipsoid::support(self, nu)
    }
}

impl SupportFunction for HalfspacePolytope {
    fn dim(&self) -> usize {
        HalfspacePolytope::dim(self)
    }
    fn support(&self, nu: &[f64]) -> f64 {
        HalfspacePolytope::support(self, nu)
    }
}

/// `ν ↦ Φ(R ν)` for a frame `R`: the support function of the projection.
pub struct RestrictedSupport<'a, S: ?Sized> {
    inner: &'a S,
    frame: Frame,
}

impl<S: SupportFunction + ?Sized> RestrictedSupport<'_, S> {
    pub fn frame(&self) -> &Frame {
        &self.frame
    }
}

impl<S: SupportFunction + ?Sized> SupportFunction for RestrictedSupport<'_, S> {
    fn dim(&self) -> usize {
        self.frame.sub_dim()
    }
    fn support(&self, nu: &[f64]) -> f64 {
        self.inner.support(&self.frame.embed(nu))
    }
}

/// Restriction of `phi` to the subspace spanned by `frame`.
pub fn support_restrict<'a, S: SupportFunction + ?Sized>(
    phi: &'a S,
    frame: &Frame,
) -> Result<RestrictedSupport<'a, S>> {
    if frame.ambient_dim() != phi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), got: frame.ambient_dim() });
    }
    Ok(RestrictedSupport { inner: phi, frame: frame.clone() })
}

/// Largest violation of subadditivity `Φ(ν₁+ν₂) <= Φ(ν₁) + Φ(ν₂)` over
/// random pairs of unit vectors.
pub fn convexity_defect(phi: &dyn SupportFunction, pairs: usize, seed: u64) -> f64 {
    use rand_distr::{Distribution, StandardNormal};
    let d = phi.dim();
    let mut r = rng(seed);
    let mut unit = || {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut r)).collect();
        crate::linalg::normalized(&g)
    };
    let mut worst = f64::MIN;
    for _ in 0..pairs {
        let (a, b) = (unit(), unit());
        let s = crate::linalg::add(&a, &b);
        let l = norm(&s);
        if l < 1e-8 {
            continue;
        }
        let lhs = phi.support(&crate::linalg::scaled(&s, 1.0 / l)) * l;
        worst = worst.max(lhs - phi.support(&a) - phi.support(&b));
    }
    worst
}

/// Three-way membership answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    In,
    Out,
    Boundary,
}

/// Membership answer with the margin it was decided on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MembershipReport {
    pub class: Membership,
    /// `max_ν (x·ν - Φ(ν))` over the sampled directions.
    pub margin: f64,
    /// Margin threshold separating `in`/`out` from `boundary`.
    pub tol: f64,
    /// Width of the band next to the boundary inside which sampled
    /// directions may accept points of the outer approximation.
    pub band: f64,
}

fn classify_margin(margin: f64, tol: f64) -> Membership {
    if margin <= -tol {
        Membership::In
    } else if margin >= tol {
        Membership::Out
    } else {
        Membership::Boundary
    }
}

/// Outer polytope approximation `{x : x·ν_k <= Φ(ν_k)}` of a Wulff shape
/// over a symmetric set of sampled directions.
#[derive(Clone, Debug)]
pub struct WulffOracle {
    dim: usize,
    dirs: Vec<Vec<f64>>,
    values: Vec<f64>,
    band: f64,
}

impl WulffOracle {
    /// Samples `budget` directions (rounded up to `±` pairs); `Φ(-ν)` is
    /// copied from `Φ(ν)` so the oracle is exactly symmetric.
    pub fn new(phi: &dyn SupportFunction, budget: usize, seed: u64) -> Self {
        let d = phi.dim();
        let half = if d == 1 { 1 } else { budget.div_ceil(2).max(d) };
        let base = if d == 1 { vec![vec![1.0]] } else { line_directions(d, half, seed) };
        let vals: Vec<f64> = base.iter().map(|u| phi.support(u)).collect();
        Self::from_half_table(d, base, vals)
    }

    /// Builds the symmetric table from one representative of each `±` pair.
    pub fn from_half_table(dim: usize, half_dirs: Vec<Vec<f64>>, half_values: Vec<f64>) -> Self {
        let mut dirs = Vec::with_capacity(2 * half_dirs.len());
        let mut values = Vec::with_capacity(2 * half_dirs.len());
        for (u, v) in half_dirs.into_iter().zip(half_values) {
            dirs.push(u.iter().map(|x| -x).collect());
            values.push(v);
            dirs.push(u);
            values.push(v);
        }
        let theta = if dim <= 1 { 0.0 } else { covering_radius(dim, dirs.len()).min(1.0) };
        let (rmax, rmin) = values
            .iter()
            .fold((0.0f64, f64::MAX), |(a, b), &v| (a.max(v), b.min(v)));
        let band = if theta == 0.0 { 0.0 } else { rmax * (1.0 / theta.cos() - 1.0) * rmax / rmin };
        Self { dim, dirs, values, band }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.dirs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Outer-approximation band width (length units).
    pub fn band(&self) -> f64 {
        self.band
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.values.iter().fold(0.0f64, |a, &v| a.max(v))
    }

    /// Gauge of the outer polytope, `max_k (x·ν_k) / Φ(ν_k)`.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        self.dirs
            .iter()
            .zip(&self.values)
            .map(|(u, v)| dot(u, x) / v)
            .fold(0.0, f64::max)
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        self.dirs
            .iter()
            .zip(&self.values)
            .map(|(u, v)| dot(u, x) - v)
            .fold(f64::MIN, f64::max)
    }

    pub fn classify(&self, x: &[f64]) -> MembershipReport {
        let margin = self.margin(x);
        let tol = BOUNDARY_TOL_REL * self.diameter();
        MembershipReport { class: classify_margin(margin, tol), margin, tol, band: self.band }
    }
}

/// Membership in the Wulff shape of `phi` decided on `dirs` sampled
/// directions.
pub fn wulff_membership(phi: &dyn SupportFunction, x: &[f64], dirs: usize) -> Result<MembershipReport> {
    if x.len() != phi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), got: x.len() });
    }
    Ok(WulffOracle::new(phi, dirs, 0).classify(x))
}

/// A centrally symmetric convex body.
#[derive(Clone, Debug)]
pub enum ConvexBody {
    Ellipsoid(Ellipsoid),
    Polytope(HalfspacePolytope),
    Cylinder(Cylinder),
    Glue(GluedBody),
    Cut(CutBody),
}

impl From<Ellipsoid> for ConvexBody {
    fn from(e: Ellipsoid) -> Self {
        ConvexBody::Ellipsoid(e)
    }
}

impl From<HalfspacePolytope> for ConvexBody {
    fn from(p: HalfspacePolytope) -> Self {
        ConvexBody::Polytope(p)
    }
}

impl From<Cylinder> for ConvexBody {
    fn from(c: Cylinder) -> Self {
        ConvexBody::Cylinder(c)
    }
}

impl ConvexBody {
    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Ellipsoid(e) => e.dim(),
            ConvexBody::Polytope(p) => p.dim(),
            ConvexBody::Cylinder(c) => c.dim(),
            ConvexBody::Glue(g) => g.dim(),
            ConvexBody::Cut(c) => c.dim(),
        }
    }

    /// Support value at a unit vector.
    pub fn support(&self, nu: &[f64]) -> f64 {
        match self {
            ConvexBody::Ellipsoid(e) => e.support(nu),
            ConvexBody::Polytope(p) => p.support(nu),
            ConvexBody::Cylinder(c) => c.support(nu),
            ConvexBody::Glue(g) => g.support(nu),
            ConvexBody::Cut(c) => c.support(nu),
        }
    }

    /// A point of the body maximizing `ν·x` (approximate for cut bodies).
    pub fn support_point(&self, nu: &[f64]) -> Vec<f64> {
        match self {
            ConvexBody::Ellipsoid(e) => e.support_point(nu),
            ConvexBody::Polytope(p) => p.support_point(nu),
            ConvexBody::Cylinder(c) => c.support_point(nu),
            ConvexBody::Glue(g) => g.support_point(nu),
            ConvexBody::Cut(c) => c.support_point(nu),
        }
    }

    /// Minkowski gauge; the body is `{gauge <= 1}`.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        match self {
            ConvexBody::Ellipsoid(e) => e.gauge(x),
            ConvexBody::Polytope(p) => p.gauge(x),
            ConvexBody::Cylinder(c) => c.gauge(x),
            ConvexBody::Glue(g) => g.gauge(x),
            ConvexBody::Cut(c) => c.gauge(x),
        }
    }

    /// Distance from the origin to the boundary along unit direction `u`.
    pub fn radial(&self, u: &[f64]) -> f64 {
        1.0 / self.gauge(u)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.gauge(x) <= 1.0
    }

    /// Error bound on the support oracle (zero when it is closed-form).
    pub fn support_tol(&self) -> f64 {
        match self {
            ConvexBody::Ellipsoid(_) | ConvexBody::Cylinder(_) => 0.0,
            ConvexBody::Polytope(p) => {
                if p.vertices().is_some() {
                    0.0
                } else {
                    1e-9 * p.circumradius()
                }
            }
            ConvexBody::Glue(g) => g.base().support_tol().max(g.with().support_tol()),
            ConvexBody::Cut(c) => c.support_tol(),
        }
    }

    /// Width of the band next to the boundary in which the membership
    /// oracle may disagree with the exact body.
    pub fn membership_band(&self) -> f64 {
        match self {
            ConvexBody::Ellipsoid(_) | ConvexBody::Polytope(_) | ConvexBody::Cylinder(_) => 0.0,
            ConvexBody::Glue(g) => g.oracle().band(),
            ConvexBody::Cut(c) => c.membership_band(),
        }
    }

    pub fn circumradius(&self) -> f64 {
        match self {
            ConvexBody::Ellipsoid(e) => *e.semi_axes().last().unwrap(),
            ConvexBody::Polytope(p) => p.circumradius(),
            ConvexBody::Cylinder(c) => {
                let slab = (c.dim() - c.disk_dim()) as f64 * c.half_height().powi(2);
                (c.radius().powi(2) + slab).sqrt()
            }
            ConvexBody::Glue(g) => g.base().circumradius().max(g.with().circumradius()),
            ConvexBody::Cut(c) => c.circumradius(),
        }
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.circumradius()
    }

    pub fn boundary_tol(&self) -> f64 {
        BOUNDARY_TOL_REL * self.diameter()
    }

    /// Classifies `x` by its radial distance to the boundary.
    pub fn classify(&self, x: &[f64]) -> MembershipReport {
        let tol = self.boundary_tol();
        let r = norm(x);
        let g = self.gauge(x);
        let margin = if r == 0.0 { -r.max(tol) * 2.0 } else { r * (1.0 - 1.0 / g) };
        MembershipReport {
            class: if r == 0.0 { Membership::In } else { classify_margin(margin, tol) },
            margin,
            tol,
            band: self.membership_band(),
        }
    }

    /// Half-widths `h(e_i)` of the axis-aligned bounding box.
    pub fn bounding_half_widths(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|i| self.support(&crate::linalg::unit(d, i))).collect()
    }

    /// The ellipsoid at the root of the glue/cut tree, if any.
    pub fn root_ellipsoid(&self) -> Option<&Ellipsoid> {
        match self {
            ConvexBody::Ellipsoid(e) => Some(e),
            ConvexBody::Glue(g) => g.base().root_ellipsoid(),
            ConvexBody::Cut(c) => c.base().root_ellipsoid(),
            _ => None,
        }
    }

    /// Halfspace form `{|a_i·x| <= b_i}` when the body is a polytope.
    pub fn halfspaces(&self) -> Option<(&[Vec<f64>], &[f64])> {
        match self {
            ConvexBody::Polytope(p) => Some((p.normals(), p.offsets())),
            _ => None,
        }
    }

    /// Short constructor-tree description, e.g. `cut(glue(ellipsoid, cylinder))`.
    pub fn provenance(&self) -> String {
        match self {
            ConvexBody::Ellipsoid(_) => "ellipsoid".into(),
            ConvexBody::Polytope(_) => "polytope".into(),
            ConvexBody::Cylinder(_) => "cylinder".into(),
            ConvexBody::Glue(g) => format!("glue({}, {})", g.base().provenance(), g.with().provenance()),
            ConvexBody::Cut(c) => format!("cut({})", c.base().provenance()),
        }
    }

    /// Exact volume where a closed form exists.
    pub fn exact_volume(&self) -> Option<f64> {
        match self {
            ConvexBody::Ellipsoid(e) => Some(e.volume()),
            ConvexBody::Cylinder(c) => Some(c.volume()),
            ConvexBody::Polytope(p) if p.is_axis_box() => {
                Some(p.offsets().iter().map(|b| 2.0 * b).product())
            }
            _ => None,
        }
    }

    /// Largest `|support(ν) - support(-ν)|` over sampled directions.
    pub fn symmetry_defect(&self, count: usize, seed: u64) -> f64 {
        sphere_directions(self.dim(), count, seed)
            .iter()
            .map(|u| {
                let m: Vec<f64> = u.iter().map(|x| -x).collect();
                (self.support(u) - self.support(&m)).abs()
            })
            .fold(0.0, f64::max)
    }
}

impl SupportFunction for ConvexBody {
    fn dim(&self) -> usize {
        ConvexBody::dim(self)
    }
    fn support(&self, nu: &[f64]) -> f64 {
        ConvexBody::support(self, nu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unit;

    fn ball_volume_recursive(d: usize) -> f64 {
        match d {
            0 => 1.0,
            1 => 2.0,
            _ => ball_volume_recursive(d - 2) * 2.0 * PI / d as f64,
        }
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(ball_volume(1), 2.0);
        assert!((ball_volume(2) - PI).abs() < 1e-15);
        assert!((ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        for d in 0..12 {
            assert!((ball_volume(d) - ball_volume_recursive(d)).abs() < 1e-13 * ball_volume(d));
        }
    }

    #[test]
    fn wulff_membership_examples() {
        let ball = Ellipsoid::ball(3, 1.0).unwrap();
        let r = wulff_membership(&ball, &[0.0, 0.0, 0.0], 6000).unwrap();
        assert_eq!(r.class, Membership::In);

        let cube = FnSupport::new(3, |nu: &[f64]| nu.iter().map(|x| x.abs()).sum());
        let r = wulff_membership(&cube, &[1.0, 1.0, 1.0], 6000).unwrap();
        assert_eq!(r.class, Membership::Boundary);

        let e = Ellipsoid::axis_aligned(&[1.0, 2.0, 3.0]).unwrap();
        assert!(e.gauge(&[0.0, 0.0, 3.01]) > 1.0);
        let r = wulff_membership(&e, &[0.0, 0.0, 3.01], 6000).unwrap();
        assert_eq!(r.class, Membership::Out);
    }

    #[test]
    fn restricted_ellipsoid_support_is_projected_ellipse() {
        let e = Ellipsoid::axis_aligned(&[1.0, 2.0, 3.0]).unwrap();
        let p = Frame::coordinate(3, &[0, 1]).unwrap();
        let r = support_restrict(&e, &p).unwrap();
        let ellipse = Ellipsoid::axis_aligned(&[1.0, 2.0]).unwrap();
        for u in sphere_directions(2, 100, 1) {
            assert!((r.support(&u) - ellipse.support(&u)).abs() < 1e-14);
        }
    }

    #[test]
    fn restricted_ball_support_is_one() {
        let b = Ellipsoid::ball(4, 1.0).unwrap();
        let mut g = rng(2);
        let f = Frame::new(crate::sampling::random_frame(4, 2, &mut g)).unwrap();
        let r = support_restrict(&b, &f).unwrap();
        for u in sphere_directions(2, 50, 3) {
            assert!((r.support(&u) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn restrict_rejects_dimension_mismatch() {
        let b = Ellipsoid::ball(3, 1.0).unwrap();
        let f = Frame::coordinate(4, &[0, 1]).unwrap();
        assert!(support_restrict(&b, &f).is_err());
    }

    #[test]
    fn closed_form_supports_are_convex() {
        let bodies: Vec<ConvexBody> = vec![
            Ellipsoid::axis_aligned(&[0.3, 1.0, 2.5]).unwrap().into(),
            HalfspacePolytope::cross_polytope(3, 1.0).unwrap().into(),
            Cylinder::new(3, 2, 1.0, 0.05).unwrap().into(),
        ];
        for b in &bodies {
            assert!(convexity_defect(b, 2000, 5) <= 1e-9);
        }
    }

    #[test]
    fn classify_matches_gauge() {
        let b: ConvexBody = HalfspacePolytope::cube(3, 1.0).unwrap().into();
        assert_eq!(b.classify(&[0.5, 0.5, 0.5]).class, Membership::In);
        assert_eq!(b.classify(&[1.0, 1.0, 1.0]).class, Membership::Boundary);
        assert_eq!(b.classify(&[1.1, 0.0, 0.0]).class, Membership::Out);
        assert_eq!(b.classify(&[0.0; 3]).class, Membership::In);
        assert_eq!(b.bounding_half_widths(), vec![1.0; 3]);
        assert_eq!(b.support(&unit(3, 2)), 1.0);
    }
}
