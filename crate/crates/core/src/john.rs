//! Maximal-volume inscribed ellipsoids of centrally symmetric bodies and the
//! shadow-area sandwich they induce.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{ConvexBody, Ellipsoid, HalfspacePolytope};
use crate::density::{constants, ellipsoid_shadow_area};
use crate::error::{Error, Result};
use crate::projection::{min_projection, SearchOptions};
use crate::sampling::{line_directions, sphere_directions};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JohnOptions {
    /// Stop once `max_i κ_i / d - 1` falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Tangent halfspaces used for bodies without a halfspace form.
    pub facet_budget: usize,
    /// Directions / boundary points used by the containment checks.
    pub samples: usize,
    pub seed: u64,
}

impl Default for JohnOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 200_000, facet_budget: 4000, samples: 10_000, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct JohnResult {
    pub ellipsoid: Ellipsoid,
    /// Final `max κ / d - 1` of the design iteration.
    pub gap: f64,
    pub iterations: usize,
    /// `log det X(u)` after every iteration.
    pub logdet_trace: Vec<f64>,
    /// Factor applied to the solver ellipsoid to make it fit inside the body.
    pub shrink: f64,
    pub containment_checked: bool,
    /// Sampled boundary points of E outside K.
    pub inner_violations: usize,
    /// Sampled directions with `h_K > √d h_E`.
    pub dilation_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JohnReport {
    pub q: Vec<Vec<f64>>,
    pub semi_axes: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
    pub shrink: f64,
    pub containment_checked: bool,
    pub inner_violations: usize,
    pub dilation_violations: usize,
    pub samples: usize,
}

impl JohnResult {
    pub fn report(&self, samples: usize) -> JohnReport {
        let q = self.ellipsoid.shape_matrix();
        let d = q.nrows();
        JohnReport {
            q: (0..d).map(|i| (0..d).map(|j| q[(i, j)]).collect()).collect(),
            semi_axes: self.ellipsoid.semi_axes().to_vec(),
            gap: self.gap,
            iterations: self.iterations,
            shrink: self.shrink,
            containment_checked: self.containment_checked,
            inner_violations: self.inner_violations,
            dilation_violations: self.dilation_violations,
            samples,
        }
    }
}

struct Design {
    q: DMatrix<f64>,
    gap: f64,
    iterations: usize,
    logdet_trace: Vec<f64>,
}

/// Symmetric D-optimal design on the rows `c_i` (Khachiyan updates with
/// Todd-Yildirim away steps). Returns `Q` with `{xᵀQ⁻¹x <= 1}` inscribed in
/// `{|c_i·x| <= 1}` after scaling by the final gap.
fn design(rows: &[DVector<f64>], d: usize, tol: f64, max_iter: usize) -> Result<Design> {
    let n = rows.len();
    let mut u = vec![1.0 / n as f64; n];
    let mut trace = Vec::new();
    let df = d as f64;
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        let mut x = DMatrix::zeros(d, d);
        for (ui, c) in u.iter().zip(rows) {
            if *ui > 0.0 {
                x.ger(*ui, c, c, 1.0);
            }
        }
        let chol = x.clone().cholesky().ok_or_else(|| Error::Unbounded("halfspace normals do not span".into()))?;
        trace.push(chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum());
        let kappa: Vec<f64> = rows.par_iter().map(|c| c.dot(&chol.solve(c))).collect();
        let (jmax, kmax) = argmax(&kappa);
        gap = kmax / df - 1.0;
        if gap <= tol {
            break;
        }
        iterations += 1;
        let (jmin, kmin) = kappa
            .iter()
            .enumerate()
            .filter(|(i, _)| u[*i] > 0.0)
            .map(|(i, &k)| (i, k))
            .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        if jmin != usize::MAX && 1.0 - kmin / df > gap {
            // away step
            let cap = u[jmin] / (1.0 - u[jmin]);
            let beta = if kmin > 1.0 { ((df - kmin) / (df * (kmin - 1.0))).min(cap) } else { cap };
            for ui in u.iter_mut() {
                *ui *= 1.0 + beta;
            }
            u[jmin] -= beta;
            if u[jmin] < 1e-300 {
                u[jmin] = 0.0;
            }
        } else {
            let beta = (kmax - df) / (df * (kmax - 1.0));
            for ui in u.iter_mut() {
                *ui *= 1.0 - beta;
            }
            u[jmax] += beta;
        }
    }
    let mut x = DMatrix::zeros(d, d);
    for (ui, c) in u.iter().zip(rows) {
        x.ger(*ui, c, c, 1.0);
    }
    let inv = (x * df)
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular design matrix".into()))?;
    // scaling by 1/(1+gap) makes every constraint hold
    let q = inv / (1.0 + gap.max(0.0));
    Ok(Design { q: symmetrize(q), gap: gap.max(0.0), iterations, logdet_trace: trace })
}

fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, (i, &k)| if k > a.1 { (i, k) } else { a })
}

fn symmetrize(q: DMatrix<f64>) -> DMatrix<f64> {
    (&q + q.transpose()) * 0.5
}

fn scaled_rows(normals: &[Vec<f64>], offsets: &[f64]) -> Result<Vec<DVector<f64>>> {
    normals
        .iter()
        .zip(offsets)
        .map(|(a, &b)| {
            if !(b > 0.0) {
                return Err(Error::InvalidInput("halfspace offsets must be positive".into()));
            }
            Ok(DVector::from_iterator(a.len(), a.iter().map(|x| x / b)))
        })
        .collect()
}

/// John ellipsoid of `{x : |a_i·x| <= b_i}`.
pub fn john_of_polytope(poly: &HalfspacePolytope, opts: &JohnOptions) -> Result<JohnResult> {
    let body = ConvexBody::from(poly.clone());
    let rows = scaled_rows(poly.normals(), poly.offsets())?;
    let design = design(&rows, poly.dim(), opts.tol, opts.max_iter)?;
    finish(&body, design, 1.0, opts)
}

/// John ellipsoid of a general symmetric body: the native halfspaces when
/// the body has them, otherwise `facet_budget` tangent halfspaces, followed
/// by a sampled shrink so that the ellipsoid lies inside the body.
pub fn john_of_body(body: &ConvexBody, opts: &JohnOptions) -> Result<JohnResult> {
    if let ConvexBody::Polytope(p) = body {
        return john_of_polytope(p, opts);
    }
    let d = body.dim();
    let dirs = line_directions(d, opts.facet_budget, opts.seed);
    let offsets: Vec<f64> = dirs.par_iter().map(|u| body.support(u)).collect();
    let rows = scaled_rows(&dirs, &offsets)?;
    let design = design(&rows, d, opts.tol, opts.max_iter)?;
    let trial = Ellipsoid::from_shape_matrix(&design.q)?;
    // largest gauge of the body over boundary points of the trial ellipsoid
    let probes = sphere_directions(d, opts.samples, opts.seed.wrapping_add(11));
    let worst = probes
        .par_iter()
        .map(|s| body.gauge(&trial.boundary_from_sphere(s)))
        .reduce(|| 0.0, f64::max);
    let shrink = if worst > 1.0 { 1.0 / (worst * (1.0 + body.boundary_tol() / body.circumradius())) } else { 1.0 };
    finish(body, design, shrink, opts)
}

fn finish(body: &ConvexBody, design: Design, shrink: f64, opts: &JohnOptions) -> Result<JohnResult> {
    let q = design.q * (shrink * shrink);
    let ellipsoid = Ellipsoid::from_shape_matrix(&q)?;
    let d = body.dim();
    let tol = 1e-6 * body.circumradius();
    let probes = sphere_directions(d, opts.samples, opts.seed.wrapping_add(23));
    let inner_violations = probes
        .par_iter()
        .filter(|s| body.gauge(&ellipsoid.boundary_from_sphere(s)) > 1.0 + 1e-6)
        .count();
    let root_d = (d as f64).sqrt();
    let support_slack = body.support_tol();
    let dilation_violations = probes
        .par_iter()
        .filter(|u| body.support(u) > root_d * ellipsoid.support(u) + tol + support_slack)
        .count();
    Ok(JohnResult {
        ellipsoid,
        gap: design.gap,
        iterations: design.iterations,
        logdet_trace: design.logdet_trace,
        shrink,
        containment_checked: inner_violations == 0 && dilation_violations == 0,
        inner_violations,
        dilation_violations,
    })
}

/// Sandwich `|E*| <= |W*| <= (n+m)^{n/2} |E*|` and the resulting constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonsharpReport {
    pub n: usize,
    pub m: usize,
    pub e_star: f64,
    pub w_star: f64,
    pub w_star_certified: bool,
    /// `|W*| / |E*|`, to be compared with 1 and `(n+m)^{n/2}`.
    pub ratio: f64,
    pub upper_factor: f64,
    pub c_tilde: f64,
    pub c: f64,
    /// `c n |W*|^{1/n}`.
    pub bound_from_w: f64,
    /// `n (c̃^n |E*|)^{1/n}`.
    pub bound_from_e: f64,
    pub sandwich_holds: bool,
}

pub fn nonsharp_chain(body: &ConvexBody, n: usize, m: usize, john: &JohnResult, search: SearchOptions) -> Result<NonsharpReport> {
    if n + m != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), got: n + m });
    }
    let (c_tilde, c) = constants(n, m)?;
    let e_star = ellipsoid_shadow_area(&john.ellipsoid, n);
    let w = min_projection(body, n, search)?;
    let upper_factor = ((n + m) as f64).powf(0.5 * n as f64);
    let slack = 1e-6 + w.area_tol / w.area.max(f64::MIN_POSITIVE);
    let ratio = w.area / e_star;
    Ok(NonsharpReport {
        n,
        m,
        e_star,
        w_star: w.area,
        w_star_certified: w.is_certified_min,
        ratio,
        upper_factor,
        c_tilde,
        c,
        bound_from_w: c * n as f64 * w.area.powf(1.0 / n as f64),
        bound_from_e: n as f64 * (c_tilde.powi(n as i32) * e_star).powf(1.0 / n as f64),
        sandwich_holds: ratio >= 1.0 - slack && ratio <= upper_factor * (1.0 + slack),
    })
}
