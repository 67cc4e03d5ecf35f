//! Explicit X-ray feasible densities on ellipsoids and long bodies: the
//! inverse square-root density for codimension one, normalized shell
//! indicators for higher codimension, their restrictions, and fiber audits.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{ball_volume, ConvexBody, Ellipsoid};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::linalg::{dot, mat_vec, norm};
use crate::quadrature::{ball_integral_sine, integrate_adaptive, sphere_rule, LineChord};
use crate::sampling::{gaussian_points, grassmann_frames, rng};

/// Below this value of `max_t (1 - |Λx(t)|²)` a line counts as tangent.
pub const TANGENCY_TOL: f64 = 1e-12;

/// Absolute tolerance for numerical fiber integrals.
pub const FIBER_QUAD_TOL: f64 = 1e-9;

/// Coefficients of `-at² + bt + c = 0`, the intersection of the line
/// `tα + ω` with the boundary `|Λx| = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChordCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ChordCoefficients {
    pub fn new(e: &Ellipsoid, alpha: &[f64], omega: &[f64]) -> Result<Self> {
        check_dim(e.dim(), alpha.len())?;
        check_dim(e.dim(), omega.len())?;
        let la = e.normalize_point(alpha);
        let lw = e.normalize_point(omega);
        Ok(Self { a: dot(&la, &la), b: -2.0 * dot(&la, &lw), c: 1.0 - dot(&lw, &lw) })
    }

    pub fn discriminant(&self) -> f64 {
        self.b * self.b + 4.0 * self.a * self.c
    }

    /// `max_t (-at² + bt + c)`, which is positive exactly when the line
    /// crosses the interior.
    pub fn peak(&self) -> f64 {
        self.discriminant() / (4.0 * self.a)
    }

    /// Chord endpoints `T₁ <= T₂` when the line meets the ellipsoid.
    pub fn roots(&self) -> Option<(f64, f64)> {
        let disc = self.discriminant();
        if disc < 0.0 {
            return None;
        }
        let s = disc.sqrt();
        // stable form: one root from the sum, the other from the product
        let q = 0.5 * (self.b + self.b.signum() * s);
        if q == 0.0 {
            return Some((0.0, 0.0));
        }
        let (r1, r2) = (q / self.a, -self.c / q);
        Some((r1.min(r2), r1.max(r2)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contact {
    Crossing,
    Tangent,
    Miss,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChordIntegral {
    pub value: f64,
    pub contact: Contact,
}

/// `∫ dt / sqrt(1 - |Λ(tα + ω)|²)` over the chord: `π/|Λα|` for crossing
/// lines, zero otherwise.
pub fn chord_integral(e: &Ellipsoid, alpha: &[f64], omega: &[f64]) -> Result<ChordIntegral> {
    let l = norm(alpha);
    if !((l - 1.0).abs() <= 1e-9) {
        return Err(Error::InvalidInput(format!("chord direction must be a unit vector (norm {l})")));
    }
    let co = ChordCoefficients::new(e, alpha, omega)?;
    let peak = co.peak();
    Ok(if peak > TANGENCY_TOL {
        ChordIntegral { value: std::f64::consts::PI / co.a.sqrt(), contact: Contact::Crossing }
    } else if peak >= -TANGENCY_TOL {
        ChordIntegral { value: 0.0, contact: Contact::Tangent }
    } else {
        ChordIntegral { value: 0.0, contact: Contact::Miss }
    })
}

/// Section of the shell `E \ σE` by the affine plane `q + span(R)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShellSection {
    pub sigma: f64,
    /// Squared distance from the origin to `ΛP`.
    pub d: f64,
    /// `det(G)^{-1/2}` with `G = (ΛR)ᵀ(ΛR)`; equal to `∏|Λr_j|^{-1}` when
    /// the `r_j` are principal axes.
    pub axis_factors: f64,
    pub m: usize,
    gram: DMatrix<f64>,
}

impl ShellSection {
    pub fn new(e: &Ellipsoid, sigma: f64, point: &[f64], plane: &Frame) -> Result<Self> {
        check_sigma(sigma)?;
        check_dim(e.dim(), point.len())?;
        check_dim(e.dim(), plane.ambient_dim())?;
        let n = e.normalizing_matrix();
        let nr = &n * plane.basis();
        let gram = nr.transpose() * &nr;
        let nq = DVector::from_vec(mat_vec(&n, point));
        let lin = nr.transpose() * &nq;
        let chol = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("singular section Gram matrix".into()))?;
        // the determinant comes from the Cholesky factor, so it stays positive
        let det: f64 = chol.l().diagonal().iter().map(|x| x * x).product();
        let d = (nq.norm_squared() - lin.dot(&chol.solve(&lin))).max(0.0);
        Ok(Self { sigma, d, axis_factors: 1.0 / det.sqrt(), m: plane.sub_dim(), gram })
    }

    pub fn is_empty(&self) -> bool {
        self.d > 1.0
    }

    /// `|B^m| [(1-d)^{m/2} - (σ²-d)_+^{m/2}] det(G)^{-1/2}`.
    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let h = 0.5 * self.m as f64;
        let outer = (1.0 - self.d).powf(h);
        let inner = (self.sigma * self.sigma - self.d).max(0.0).powf(h);
        ball_volume(self.m) * (outer - inner) * self.axis_factors
    }

    /// The same volume by polar quadrature in the plane around the section
    /// centre: along each ray the shell is an explicit radial interval.
    pub fn volume_by_rays(&self, angular: usize) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let m = self.m as i32;
        let g = &self.gram;
        let rule = sphere_rule(self.m, angular);
        rule.iter()
            .map(|(u, w)| {
                let uv = DVector::from_column_slice(u);
                let rho = (uv.transpose() * g * &uv)[(0, 0)];
                let r2 = ((1.0 - self.d) / rho).sqrt();
                let r1 = ((self.sigma * self.sigma - self.d).max(0.0) / rho).sqrt();
                w * (r2.powi(m) - r1.powi(m)) / m as f64
            })
            .sum()
    }
}

/// `|(E \ σE) ∩ P|` for the affine plane `P = point + span(plane)`.
pub fn shell_section_volume(e: &Ellipsoid, sigma: f64, point: &[f64], plane: &Frame) -> Result<f64> {
    Ok(ShellSection::new(e, sigma, point, plane)?.volume())
}

/// `C_σ = |B^m| (m/2) (1-σ²) ∏` of the `m` largest semi-axes.
pub fn shell_normalizer(e: &Ellipsoid, sigma: f64, m: usize) -> f64 {
    let ax = e.semi_axes();
    let top: f64 = ax[ax.len() - m..].iter().product();
    ball_volume(m) * 0.5 * m as f64 * (1.0 - sigma * sigma) * top
}

/// `(c̃_{n,m}, c_{n,m})`.
pub fn constants(n: usize, m: usize) -> Result<(f64, f64)> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("constants need n >= 1 and m >= 1".into()));
    }
    let tilde = if m <= 2 {
        1.0
    } else {
        ((n + m) as f64 * ball_volume(n + m) / (m as f64 * ball_volume(m) * ball_volume(n))).powf(1.0 / n as f64)
    };
    Ok((tilde, tilde / ((n + m) as f64).sqrt()))
}

/// `|E*|`: the smallest `n`-dimensional shadow of an ellipsoid.
pub fn ellipsoid_shadow_area(e: &Ellipsoid, n: usize) -> f64 {
    ball_volume(n) * e.semi_axes()[..n].iter().product::<f64>()
}

/// `c̃^n |E*|` with `E` the John ellipsoid of `body`: a lower bound for the
/// supremum of `∫f` over X-ray feasible densities supported in `body`.
pub fn lower_bound_sup(body: &ConvexBody, n: usize, m: usize) -> Result<f64> {
    if n + m != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), got: n + m });
    }
    let (tilde, _) = constants(n, m)?;
    let e_star = match body {
        // an ellipsoid is its own John ellipsoid
        ConvexBody::Ellipsoid(e) => ellipsoid_shadow_area(e, n),
        _ => ellipsoid_shadow_area(&crate::john::john_of_body(body, &Default::default())?.ellipsoid, n),
    };
    Ok(tilde.powi(n as i32) * e_star)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Codim1Ellipsoid,
    Codim2Shell,
    Restricted,
}

/// An affine `m`-plane `point + span(frame)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFiber {
    pub point: Vec<f64>,
    pub frame: Frame,
}

impl AffineFiber {
    pub fn line(point: Vec<f64>, direction: &[f64]) -> Result<Self> {
        Ok(Self { point, frame: Frame::from_vectors(&[direction.to_vec()])? })
    }
}

#[derive(Clone, Debug)]
enum Base {
    Codim1,
    Shell { sigma: f64, m: usize },
}

/// A nonnegative density supported in a convex body.
#[derive(Clone, Debug)]
pub struct DensityField {
    ellipsoid: Ellipsoid,
    base: Base,
    normalizer: f64,
    carrier: Option<ConvexBody>,
}

/// `f̃ = 1 / (π λ_max sqrt(1 - |Λx|²))` on the ellipsoid.
pub fn density_codim1(e: &Ellipsoid) -> DensityField {
    let lmax = e.semi_axes()[e.dim() - 1];
    DensityField { ellipsoid: e.clone(), base: Base::Codim1, normalizer: std::f64::consts::PI * lmax, carrier: None }
}

/// `f_σ = 1_{E \ σE} / C_σ` for fibers of dimension `m >= 2`.
pub fn density_codim2(e: &Ellipsoid, sigma: f64, m: usize) -> Result<DensityField> {
    check_sigma(sigma)?;
    if m < 2 || m >= e.dim() {
        return Err(Error::InvalidInput(format!("shell density needs 2 <= m < {}, got {m}", e.dim())));
    }
    Ok(DensityField {
        ellipsoid: e.clone(),
        base: Base::Shell { sigma, m },
        normalizer: shell_normalizer(e, sigma, m),
        carrier: None,
    })
}

/// `f · 1_W` for a long body `W` grown from the density's ellipsoid.
pub fn restrict_density(f: &DensityField, body: &ConvexBody) -> Result<DensityField> {
    if f.carrier.is_some() {
        return Err(Error::InvalidInput("density is already restricted".into()));
    }
    check_dim(f.ellipsoid.dim(), body.dim())?;
    let root = body.root_ellipsoid().ok_or(Error::ProvenanceMismatch)?;
    if !same_ellipsoid(root, &f.ellipsoid) {
        return Err(Error::ProvenanceMismatch);
    }
    if matches!(body, ConvexBody::Ellipsoid(_)) {
        return Ok(f.clone());
    }
    Ok(DensityField { carrier: Some(body.clone()), ..f.clone() })
}

fn same_ellipsoid(a: &Ellipsoid, b: &Ellipsoid) -> bool {
    let scale = a.semi_axes().iter().fold(0.0f64, |s, x| s.max(*x));
    a.semi_axes().iter().zip(b.semi_axes()).all(|(x, y)| (x - y).abs() <= 1e-12 * scale)
        && (a.shape_matrix() - b.shape_matrix()).amax() <= 1e-10 * scale * scale
}

impl DensityField {
    pub fn kind(&self) -> DensityKind {
        match (&self.carrier, &self.base) {
            (Some(_), _) => DensityKind::Restricted,
            (None, Base::Codim1) => DensityKind::Codim1Ellipsoid,
            (None, Base::Shell { .. }) => DensityKind::Codim2Shell,
        }
    }

    pub fn ellipsoid(&self) -> &Ellipsoid {
        &self.ellipsoid
    }

    pub fn dim(&self) -> usize {
        self.ellipsoid.dim()
    }

    /// Fiber dimension `m`.
    pub fn codim(&self) -> usize {
        match self.base {
            Base::Codim1 => 1,
            Base::Shell { m, .. } => m,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self.base {
            Base::Codim1 => None,
            Base::Shell { sigma, .. } => Some(sigma),
        }
    }

    /// `π λ_max` for codimension one, `C_σ` for shells.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn carrier(&self) -> Option<&ConvexBody> {
        self.carrier.as_ref()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        if let Some(body) = &self.carrier {
            if !body.contains(x) {
                return 0.0;
            }
        }
        let y = self.ellipsoid.normalize_point(x);
        let r2 = dot(&y, &y);
        match self.base {
            Base::Codim1 if r2 < 1.0 => 1.0 / (self.normalizer * (1.0 - r2).sqrt()),
            Base::Shell { sigma, .. } if r2 <= 1.0 && r2 >= sigma * sigma => 1.0 / self.normalizer,
            _ => 0.0,
        }
    }

    /// Closed-form fiber integral of an unrestricted field.
    pub fn fiber_integral_exact(&self, fiber: &AffineFiber) -> Result<Option<f64>> {
        self.check_fiber(fiber)?;
        if self.carrier.is_some() {
            return Ok(None);
        }
        Ok(Some(match self.base {
            Base::Codim1 => chord_integral(&self.ellipsoid, &fiber.frame.vector(0), &fiber.point)?.value / self.normalizer,
            Base::Shell { sigma, .. } => {
                shell_section_volume(&self.ellipsoid, sigma, &fiber.point, &fiber.frame)? / self.normalizer
            }
        }))
    }

    /// Fiber integral by quadrature: adaptive along lines, polar product
    /// rules on planes.
    pub fn fiber_integral(&self, fiber: &AffineFiber) -> Result<f64> {
        self.check_fiber(fiber)?;
        match self.base {
            Base::Codim1 => Ok(self.line_integral(fiber)),
            Base::Shell { sigma, .. } => self.plane_integral(fiber, sigma),
        }
    }

    fn check_fiber(&self, fiber: &AffineFiber) -> Result<()> {
        check_dim(self.dim(), fiber.point.len())?;
        check_dim(self.dim(), fiber.frame.ambient_dim())?;
        if fiber.frame.sub_dim() != self.codim() {
            return Err(Error::DimensionMismatch { expected: self.codim(), got: fiber.frame.sub_dim() });
        }
        Ok(())
    }

    fn line_integral(&self, fiber: &AffineFiber) -> f64 {
        let alpha = fiber.frame.vector(0);
        let Some(chord) = LineChord::new(&self.ellipsoid, &alpha, &fiber.point) else {
            return 0.0;
        };
        let (t1, t2) = chord.endpoints();
        let (ta, tb) = match &self.carrier {
            None => (t1, t2),
            Some(body) => {
                let g = |t: f64| body.gauge(&crate::linalg::axpy(&fiber.point, t, &alpha));
                match convex_sublevel(g, t1, t2) {
                    Some(iv) => iv,
                    None => return 0.0,
                }
            }
        };
        let tol = FIBER_QUAD_TOL * 1e-3 * self.normalizer;
        chord.integrate_weighted(ta, tb, tol, |_| 1.0).value / self.normalizer
    }

    fn plane_integral(&self, fiber: &AffineFiber, sigma: f64) -> Result<f64> {
        let section = ShellSection::new(&self.ellipsoid, sigma, &fiber.point, &fiber.frame)?;
        let Some(body) = &self.carrier else {
            return Ok(section.volume_by_rays(48) / self.normalizer);
        };
        if section.is_empty() {
            return Ok(0.0);
        }
        // rays from the section centre; each meets the shell and the body in
        // one interval apiece
        let n = self.ellipsoid.normalizing_matrix();
        let nr = &n * fiber.frame.basis();
        let nq = DVector::from_vec(mat_vec(&n, &fiber.point));
        let lin = nr.transpose() * &nq;
        let centre = -section
            .gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("singular section Gram matrix".into()))?
            .solve(&lin);
        let c_amb = crate::linalg::add(&fiber.point, &fiber.frame.embed(centre.as_slice()));
        let m = section.m as i32;
        let mut total = 0.0;
        for (u, w) in sphere_rule(section.m, 48) {
            let uv = DVector::from_column_slice(&u);
            let rho = (uv.transpose() * &section.gram * &uv)[(0, 0)];
            let r2 = ((1.0 - section.d) / rho).sqrt();
            let r1 = ((sigma * sigma - section.d).max(0.0) / rho).sqrt();
            let dir = fiber.frame.embed(&u);
            let g = |r: f64| body.gauge(&crate::linalg::axpy(&c_amb, r, &dir));
            if let Some((a, b)) = convex_sublevel(g, 0.0, r2) {
                let (lo, hi) = (a.max(r1), b.min(r2));
                if hi > lo {
                    total += w * (hi.powi(m) - lo.powi(m)) / m as f64;
                }
            }
        }
        Ok(total / self.normalizer)
    }

    /// Total mass of an unrestricted field in closed form: `|W*|` for
    /// codimension one, `|U_σ| / C_σ` for shells.
    pub fn total_mass_exact(&self) -> Option<f64> {
        if self.carrier.is_some() {
            return None;
        }
        let e = &self.ellipsoid;
        let d = e.dim();
        Some(match self.base {
            Base::Codim1 => ellipsoid_shadow_area(e, d - 1),
            Base::Shell { sigma, .. } => (1.0 - sigma.powi(d as i32)) * e.volume() / self.normalizer,
        })
    }

    /// `∫ f̃` over the ellipsoid by hyperspherical product quadrature.
    pub fn total_mass_quadrature(&self, order: usize) -> Option<f64> {
        if self.carrier.is_some() || !matches!(self.base, Base::Codim1) {
            return None;
        }
        let e = &self.ellipsoid;
        let jac: f64 = e.semi_axes().iter().product();
        Some(jac / self.normalizer * ball_integral_sine(e.dim(), order, order, |_, c| 1.0 / c))
    }

    /// Shell mass by integrating closed-form section volumes over all planes
    /// parallel to the span of the `m` longest axes.
    pub fn total_mass_by_slices(&self) -> Option<f64> {
        let Base::Shell { sigma, m } = self.base else {
            return None;
        };
        if self.carrier.is_some() {
            return None;
        }
        let e = &self.ellipsoid;
        let d = e.dim();
        let n = d - m;
        let ax = e.semi_axes();
        let h = 0.5 * m as f64;
        let section = |r: f64| {
            let d2 = r * r;
            let outer = (1.0 - d2).max(0.0).powf(h);
            let inner = (sigma * sigma - d2).max(0.0).powf(h);
            ball_volume(m) * (outer - inner) * r.powi(n as i32 - 1)
        };
        let q1 = integrate_adaptive(section, 0.0, sigma, 1e-15, 200);
        let q2 = integrate_adaptive(section, sigma, 1.0, 1e-15, 400);
        let sphere = crate::sampling::sphere_area(n);
        let jac: f64 = ax.iter().product();
        Some(sphere * jac * (q1.value + q2.value) / self.normalizer)
    }

    /// `∫ f` by Fubini along the longest principal axis (codimension one):
    /// fiber integrals are integrated over the shadow ellipse in polar form.
    pub fn total_mass_by_fibers(&self, angular: usize, tol: f64) -> Result<f64> {
        if !matches!(self.base, Base::Codim1) {
            return Err(Error::InvalidInput("fiber mass is for codimension-one densities".into()));
        }
        let e = &self.ellipsoid;
        let d = e.dim();
        let n = d - 1;
        let axis = e.principal_axis(d - 1);
        let span: Vec<Vec<f64>> = (0..n).map(|i| e.principal_axis(i)).collect();
        let ax = e.semi_axes();
        let jac: f64 = ax[..n].iter().product();
        let mut total = 0.0;
        for (u, w) in sphere_rule(n, angular) {
            let radial = |r: f64| {
                let mut p = vec![0.0; d];
                for (i, v) in span.iter().enumerate() {
                    for (pk, vk) in p.iter_mut().zip(v) {
                        *pk += r * u[i] * ax[i] * vk;
                    }
                }
                let fiber = AffineFiber { point: p, frame: Frame::from_vectors(&[axis.clone()]).expect("unit axis") };
                self.line_integral(&fiber) * r.powi(n as i32 - 1)
            };
            total += w * integrate_adaptive(radial, 0.0, 1.0, tol, 200).value;
        }
        Ok(jac * total)
    }
}

/// The interval where a convex function along `[lo, hi]` is at most one.
fn convex_sublevel(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    for _ in 0..100 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if g(x1) < g(x2) {
            b = x2;
        } else {
            a = x1;
        }
        if b - a <= 1e-15 * (hi - lo).abs().max(1.0) {
            break;
        }
    }
    let best = 0.5 * (a + b);
    if g(best) > 1.0 {
        return None;
    }
    let edge = |mut inside: f64, mut outside: f64| {
        if g(outside) <= 1.0 {
            return outside;
        }
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if g(mid) <= 1.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    };
    Some((edge(best, lo), edge(best, hi)))
}

/// One audited fiber.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberRecord {
    pub id: usize,
    pub direction: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    pub integral: f64,
}

impl FiberRecord {
    pub const CSV_HEADER: &'static str = "fiber_id,direction,offset,integral,slack";

    pub fn slack(&self) -> f64 {
        1.0 - self.integral
    }

    pub fn csv_row(&self) -> String {
        let dir = self
            .direction
            .iter()
            .map(|v| join(v, " "))
            .collect::<Vec<_>>()
            .join(";");
        format!("{},{},{},{:.12e},{:.12e}", self.id, dir, join(&self.offset, " "), self.integral, self.slack())
    }
}

fn join(v: &[f64], sep: &str) -> String {
    v.iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(sep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub records: Vec<FiberRecord>,
    pub max_integral: f64,
    pub tol: f64,
    pub violations: usize,
}

impl AuditReport {
    fn from_records(records: Vec<FiberRecord>, tol: f64) -> Self {
        let max_integral = records.iter().map(|r| r.integral).fold(0.0, f64::max);
        let violations = records.iter().filter(|r| r.integral > 1.0 + tol).count();
        Self { records, max_integral, tol, violations }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(FiberRecord::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}

/// Uniform point in the ellipsoid from a Gaussian vector and a radius draw.
fn interior_point(e: &Ellipsoid, g: &[f64], u: f64) -> Vec<f64> {
    let d = e.dim();
    let s = u.powf(1.0 / d as f64) / norm(g);
    e.radial_point(&g.iter().map(|x| x * s).collect::<Vec<_>>())
}

/// Audits `count` quasi-random affine fibers whose offsets are interior
/// points of the ellipsoid projected onto the orthogonal complement.
pub fn audit_fibers(field: &DensityField, count: usize, seed: u64, tol: f64) -> Result<AuditReport> {
    let d = field.dim();
    let frames = grassmann_frames(d, field.codim(), count, seed);
    audit_with_frames(field, &frames, seed, tol)
}

/// Audits fibers that all share one direction frame.
pub fn audit_fibers_along(field: &DensityField, frame: &Frame, count: usize, seed: u64, tol: f64) -> Result<AuditReport> {
    let frames = vec![frame.basis().clone(); count];
    audit_with_frames(field, &frames, seed, tol)
}

fn audit_with_frames(field: &DensityField, frames: &[DMatrix<f64>], seed: u64, tol: f64) -> Result<AuditReport> {
    use rand::Rng;
    let d = field.dim();
    let count = frames.len();
    let gauss = gaussian_points(d, count, seed.wrapping_add(1));
    let mut r = rng(seed.wrapping_add(2));
    let radii: Vec<f64> = (0..count).map(|_| r.random::<f64>()).collect();
    let records: Result<Vec<FiberRecord>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let frame = Frame::new(frames[i].clone())?;
            let x = interior_point(&field.ellipsoid, &gauss[i], radii[i]);
            let offset = crate::linalg::sub(&x, &frame.project(&x));
            let fiber = AffineFiber { point: offset.clone(), frame };
            let integral = field.fiber_integral(&fiber)?;
            Ok(FiberRecord { id: i, direction: fiber.frame.vectors(), offset, integral })
        })
        .collect();
    Ok(AuditReport::from_records(records?, tol))
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidInput(format!("shell parameter must lie in (0, 1), got {sigma}")));
    }
    Ok(())
}
