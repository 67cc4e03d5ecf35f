//! Gluing and cutting along an area-minimizing projection.

use nalgebra::DMatrix;

use super::{default_direction_budget, support_restrict, ConvexBody, HalfspacePolytope, WulffOracle};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::linalg::{dot, norm, normalized};
use crate::sampling::{covering_radius, line_directions, sphere_directions};

/// Relative slack allowed when checking that a plane is area-minimizing.
pub const MINIMIZING_REL_TOL: f64 = 1e-3;

/// Number of in-plane directions used to compare projections.
const PLANE_CHECK_DIRECTIONS: usize = 4000;

/// A gluing or cutting step along the plane `P`.
#[derive(Clone, Debug)]
pub enum LongBodyOp {
    Glue { plane: Frame, with: ConvexBody },
    Cut { plane: Frame, region: CutRegion },
}

impl LongBodyOp {
    pub fn apply(self, body: ConvexBody) -> Result<ConvexBody> {
        match self {
            LongBodyOp::Glue { plane, with } => glue(body, plane, with),
            LongBodyOp::Cut { plane, region } => cut(body, plane, region),
        }
    }
}

/// Hull of two bodies given by the pointwise maximum of their supports.
#[derive(Clone, Debug)]
pub struct GluedBody {
    base: Box<ConvexBody>,
    with: Box<ConvexBody>,
    plane: Frame,
    oracle: WulffOracle,
}

impl GluedBody {
    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn base(&self) -> &ConvexBody {
        &self.base
    }

    pub fn with(&self) -> &ConvexBody {
        &self.with
    }

    pub fn plane(&self) -> &Frame {
        &self.plane
    }

    pub fn oracle(&self) -> &WulffOracle {
        &self.oracle
    }

    pub fn support(&self, nu: &[f64]) -> f64 {
        self.base.support(nu).max(self.with.support(nu))
    }

    pub fn support_point(&self, nu: &[f64]) -> Vec<f64> {
        if self.with.support(nu) > self.base.support(nu) {
            self.with.support_point(nu)
        } else {
            self.base.support_point(nu)
        }
    }

    pub fn gauge(&self, x: &[f64]) -> f64 {
        self.oracle.gauge(x)
    }
}

/// Region kept by a cut, in plane coordinates.
#[derive(Clone, Debug)]
pub enum CutRegion {
    /// `σ · proj_P(W)` for `σ ∈ (0, 1]`.
    Shrink(f64),
    /// A symmetric polytope in the plane.
    Polytope(HalfspacePolytope),
}

#[derive(Clone, Debug)]
enum ShadowGauge {
    /// `sqrt(yᵀ S⁻¹ y)` with `S = Rᵀ M R` the projected shape matrix.
    Quadratic(DMatrix<f64>),
    Sampled(WulffOracle),
}

impl ShadowGauge {
    fn eval(&self, y: &[f64]) -> f64 {
        match self {
            ShadowGauge::Quadratic(s_inv) => {
                let k = y.len();
                let mut q = 0.0;
                for i in 0..k {
                    for j in 0..k {
                        q += y[i] * s_inv[(i, j)] * y[j];
                    }
                }
                q.max(0.0).sqrt()
            }
            ShadowGauge::Sampled(o) => o.gauge(y),
        }
    }

    fn band(&self) -> f64 {
        match self {
            ShadowGauge::Quadratic(_) => 0.0,
            ShadowGauge::Sampled(o) => o.band(),
        }
    }
}

/// `W ∩ proj_P⁻¹(S)`.
#[derive(Clone, Debug)]
pub struct CutBody {
    base: Box<ConvexBody>,
    plane: Frame,
    region: CutRegion,
    shadow: ShadowGauge,
    cloud: Vec<Vec<f64>>,
    circumradius: f64,
    support_tol: f64,
}

impl CutBody {
    fn build(base: ConvexBody, plane: Frame, region: CutRegion) -> Self {
        let shadow = shadow_gauge(&base, &plane);
        let mut body = Self {
            base: Box::new(base),
            plane,
            region,
            shadow,
            cloud: Vec::new(),
            circumradius: 0.0,
            support_tol: 0.0,
        };
        let d = body.dim();
        let dirs = line_directions(d, default_direction_budget(d) / 2, 17);
        let mut cloud = Vec::with_capacity(2 * dirs.len());
        for u in dirs {
            let p: Vec<f64> = u.iter().map(|x| x / body.gauge(&u)).collect();
            cloud.push(p.iter().map(|x| -x).collect());
            cloud.push(p);
        }
        body.circumradius = cloud.iter().map(|p| norm(p)).fold(0.0, f64::max);
        body.cloud = cloud;
        body.support_tol = 1e-8 * body.circumradius + body.shadow.band();
        body
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn base(&self) -> &ConvexBody {
        &self.base
    }

    pub fn plane(&self) -> &Frame {
        &self.plane
    }

    pub fn region(&self) -> &CutRegion {
        &self.region
    }

    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    pub fn support_tol(&self) -> f64 {
        self.support_tol
    }

    pub fn membership_band(&self) -> f64 {
        self.base.membership_band().max(self.shadow.band())
    }

    /// Gauge of the kept region at plane coordinates `y`.
    pub fn region_gauge(&self, y: &[f64]) -> f64 {
        match &self.region {
            CutRegion::Shrink(s) => self.shadow.eval(y) / s,
            CutRegion::Polytope(p) => p.gauge(y),
        }
    }

    pub fn gauge(&self, x: &[f64]) -> f64 {
        self.base.gauge(x).max(self.region_gauge(&self.plane.coords(x)))
    }

    pub fn support(&self, nu: &[f64]) -> f64 {
        dot(&self.support_point(nu), nu)
    }

    /// Best boundary point of the cloud, refined by a pattern search over
    /// boundary directions.
    pub fn support_point(&self, nu: &[f64]) -> Vec<f64> {
        let start = self
            .cloud
            .iter()
            .max_by(|a, b| dot(a, nu).total_cmp(&dot(b, nu)))
            .expect("cloud is never empty");
        let value = |u: &[f64]| dot(u, nu) / self.gauge(u);
        let mut u = normalized(start);
        let mut best = value(&u);
        let d = self.dim();
        let mut step = covering_radius(d, self.cloud.len()).max(1e-3);
        while step > 1e-10 {
            let tangents = tangent_basis(&u);
            let mut improved = false;
            for t in &tangents {
                for s in [step, -step] {
                    let cand = normalized(&crate::linalg::axpy(&u, s, t));
                    let v = value(&cand);
                    if v > best {
                        best = v;
                        u = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if best >= dot(start, nu) {
            let g = self.gauge(&u);
            u.iter().map(|x| x / g).collect()
        } else {
            start.clone()
        }
    }
}

fn tangent_basis(u: &[f64]) -> Vec<Vec<f64>> {
    let d = u.len();
    let m = DMatrix::from_column_slice(d, 1, u);
    let full = crate::linalg::complete_basis(&m);
    (1..d).map(|j| full.column(j).iter().copied().collect()).collect()
}

fn shadow_gauge(base: &ConvexBody, plane: &Frame) -> ShadowGauge {
    if let ConvexBody::Ellipsoid(e) = base {
        let r = plane.basis();
        let s = r.transpose() * e.shape_matrix() * r;
        if let Some(inv) = s.try_inverse() {
            return ShadowGauge::Quadratic(inv);
        }
    }
    let n = plane.sub_dim();
    let restricted = support_restrict(base, plane).expect("plane dimension checked by caller");
    ShadowGauge::Sampled(WulffOracle::new(&restricted, default_direction_budget(n), 29))
}

fn check_plane(body: &ConvexBody, plane: &Frame) -> Result<()> {
    if plane.ambient_dim() != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), got: plane.ambient_dim() });
    }
    if plane.sub_dim() >= body.dim() {
        return Err(Error::InvalidInput("plane must be a proper subspace".into()));
    }
    let area = crate::projection::projection_area_fast(body, plane);
    let best = crate::projection::reference_min_area(body, plane.sub_dim())?;
    if area > best * (1.0 + MINIMIZING_REL_TOL) {
        return Err(Error::NotMinimizing { area, best });
    }
    Ok(())
}

/// Glues `with` onto `body` along `plane`: the result has support
/// `max(h_body, h_with)` and the same projection onto `plane`.
pub fn glue(body: ConvexBody, plane: Frame, with: ConvexBody) -> Result<ConvexBody> {
    if with.dim() != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), got: with.dim() });
    }
    check_plane(&body, &plane)?;
    let n = plane.sub_dim();
    let scale = body.circumradius();
    let tol = 1e-9 * scale + body.support_tol() + with.support_tol();
    let dirs = if n == 1 { vec![vec![1.0], vec![-1.0]] } else { sphere_directions(n, PLANE_CHECK_DIRECTIONS, 3) };
    let discrepancy = dirs
        .iter()
        .map(|y| {
            let nu = plane.embed(y);
            with.support(&nu) - body.support(&nu)
        })
        .fold(0.0, f64::max);
    if discrepancy > tol {
        return Err(Error::ProjectionChanged { discrepancy });
    }
    let d = body.dim();
    let max_support = super::FnSupport::new(d, |nu: &[f64]| body.support(nu).max(with.support(nu)));
    let oracle = WulffOracle::new(&max_support, default_direction_budget(d), 11);
    Ok(ConvexBody::Glue(GluedBody { base: Box::new(body), with: Box::new(with), plane, oracle }))
}

/// Keeps the part of `body` projecting into `region`.
pub fn cut(body: ConvexBody, plane: Frame, region: CutRegion) -> Result<ConvexBody> {
    check_plane(&body, &plane)?;
    let n = plane.sub_dim();
    match &region {
        CutRegion::Shrink(s) => {
            if !(*s > 0.0 && *s <= 1.0) {
                return Err(Error::InvalidInput(format!("shrink factor {s} outside (0, 1]")));
            }
        }
        CutRegion::Polytope(p) => {
            if p.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.dim() });
            }
            let shadow = shadow_gauge(&body, &plane);
            let probe: Vec<Vec<f64>> = match p.vertices() {
                Some(vs) => vs.to_vec(),
                None => sphere_directions(n, PLANE_CHECK_DIRECTIONS, 5)
                    .into_iter()
                    .map(|u| {
                        let g = p.gauge(&u);
                        u.iter().map(|x| x / g).collect()
                    })
                    .collect(),
            };
            let tol = 1e-9 + shadow.band() / body.circumradius();
            let excess = probe.iter().map(|v| shadow.eval(v) - 1.0).fold(f64::MIN, f64::max);
            if excess > tol {
                return Err(Error::RegionNotContained { excess });
            }
        }
    }
    Ok(ConvexBody::Cut(CutBody::build(body, plane, region)))
}
