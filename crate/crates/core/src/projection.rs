//! Projections onto linear subspaces, shadow areas and the search for
//! area-minimizing projections.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::body::{ball_volume, support_restrict, ConvexBody, Ellipsoid, WulffOracle};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::sampling::{random_rotation, rng, Kronecker};

/// Default number of quasi-random points for Monte Carlo shadow areas.
pub const DEFAULT_AREA_POINTS: usize = 200_000;

/// Support samples used for the tangent-polygon area of planar shadows.
const POLYGON_ANGLES: usize = 720;

/// `|B^n| sqrt(det(Rᵀ M R))`: exact shadow area of an ellipsoid.
pub fn ellipsoid_projection_area_exact(e: &Ellipsoid, frame: &Frame) -> f64 {
    let r = frame.basis();
    let s = r.transpose() * e.shape_matrix() * r;
    ball_volume(frame.sub_dim()) * s.determinant().max(0.0).sqrt()
}

/// Smallest shadow of an ellipsoid: the span of its `n` shortest axes.
pub fn ellipsoid_min_projection(e: &Ellipsoid, n: usize) -> (Frame, f64) {
    let d = e.dim();
    let basis = DMatrix::from_fn(d, n, |i, j| e.rotation()[(i, j)]);
    let frame = Frame::new(basis).expect("rotation columns are orthonormal");
    let area = ball_volume(n) * e.semi_axes()[..n].iter().product::<f64>();
    (frame, area)
}

/// Monte Carlo area with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AreaEstimate {
    pub area: f64,
    pub std_err: f64,
    /// The shadow has zero width in some direction of the plane.
    pub degenerate: bool,
}

/// Shadow area by quasi-random sampling of the bounding box of the
/// restricted support, with membership decided by the Wulff shape of the
/// restricted support on `dirs` sampled directions.
pub fn projection_area(
    body: &ConvexBody,
    frame: &Frame,
    points: usize,
    dirs: usize,
    seed: u64,
) -> Result<AreaEstimate> {
    let restricted = support_restrict(body, frame)?;
    let n = frame.sub_dim();
    let half: Vec<f64> = (0..n)
        .map(|i| crate::body::SupportFunction::support(&restricted, &crate::linalg::unit(n, i)))
        .collect();
    if half.iter().any(|&w| w <= 1e-300) {
        return Ok(AreaEstimate { area: 0.0, std_err: 0.0, degenerate: true });
    }
    let oracle = WulffOracle::new(&restricted, dirs, seed);
    Ok(box_monte_carlo(&half, points, seed, |y| oracle.gauge(y) <= 1.0))
}

fn box_monte_carlo(half: &[f64], points: usize, seed: u64, inside: impl Fn(&[f64]) -> bool + Sync) -> AreaEstimate {
    let n = half.len();
    let box_vol: f64 = half.iter().map(|w| 2.0 * w).product();
    let pts = Kronecker::new(n, seed).take_points(points);
    let hits: usize = pts
        .par_chunks(4096)
        .map(|chunk| {
            chunk
                .iter()
                .filter(|u| {
                    let y: Vec<f64> = u.iter().zip(half).map(|(t, w)| (2.0 * t - 1.0) * w).collect();
                    inside(&y)
                })
                .count()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let p = hits as f64 / points as f64;
    AreaEstimate {
        area: box_vol * p,
        std_err: box_vol * (p * (1.0 - p) / points as f64).sqrt(),
        degenerate: false,
    }
}

/// Shadow area used as the search objective: exact for ellipsoids, planar
/// convex hull for enumerated polytopes, width for lines, the tangent
/// polygon of the support for other planar shadows and Monte Carlo above.
pub fn projection_area_fast(body: &ConvexBody, frame: &Frame) -> f64 {
    let n = frame.sub_dim();
    match body {
        ConvexBody::Ellipsoid(e) => return ellipsoid_projection_area_exact(e, frame),
        ConvexBody::Polytope(p) if n == 2 => {
            if let Some(vs) = p.vertices() {
                let pts: Vec<[f64; 2]> = vs
                    .iter()
                    .map(|v| {
                        let y = frame.coords(v);
                        [y[0], y[1]]
                    })
                    .collect();
                return hull_area(pts);
            }
        }
        _ => {}
    }
    match n {
        1 => 2.0 * body.support(&frame.vector(0)),
        2 => planar_shadow_bracket(body, frame, POLYGON_ANGLES).0,
        _ => projection_area(body, frame, 20_000, crate::body::default_direction_budget(n) / 4, 0)
            .map(|e| e.area)
            .unwrap_or(f64::NAN),
    }
}

/// Inscribed and circumscribed polygon areas of a planar shadow from
/// `count` support points and tangent lines.
pub fn planar_shadow_bracket(body: &ConvexBody, frame: &Frame, count: usize) -> (f64, f64) {
    let (a, b) = (frame.vector(0), frame.vector(1));
    let mut inner = Vec::with_capacity(count);
    let mut h = Vec::with_capacity(count);
    for k in 0..count {
        let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
        let (c, s) = (t.cos(), t.sin());
        let nu: Vec<f64> = a.iter().zip(&b).map(|(x, y)| c * x + s * y).collect();
        let x = body.support_point(&nu);
        let y = frame.coords(&x);
        h.push(c * y[0] + s * y[1]);
        inner.push([y[0], y[1]]);
    }
    (shoelace(&inner).abs(), tangent_polygon_from_values(&h))
}

/// Area of the polygon cut out by the tangent lines at `count` equally
/// spaced angles (a circumscribed approximation of a planar convex body).
pub fn tangent_polygon_area(count: usize, support: impl Fn(f64, f64) -> f64) -> f64 {
    let h: Vec<f64> = (0..count)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            support(t.cos(), t.sin())
        })
        .collect();
    tangent_polygon_from_values(&h)
}

/// Tangent polygon for support values `h[k]` at angles `2πk/K`.
fn tangent_polygon_from_values(h: &[f64]) -> f64 {
    let count = h.len();
    let angles: Vec<(f64, f64)> = (0..count)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            (t.cos(), t.sin())
        })
        .collect();
    let verts: Vec<[f64; 2]> = (0..count)
        .map(|k| {
            let j = (k + 1) % count;
            let (a1, b1, h1) = (angles[k].0, angles[k].1, h[k]);
            let (a2, b2, h2) = (angles[j].0, angles[j].1, h[j]);
            let det = a1 * b2 - a2 * b1;
            [(h1 * b2 - h2 * b1) / det, (a1 * h2 - a2 * h1) / det]
        })
        .collect();
    shoelace(&verts).abs()
}

fn shoelace(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            v[i][0] * v[j][1] - v[j][0] * v[i][1]
        })
        .sum::<f64>()
}

/// Area of the convex hull of planar points (monotone chain).
pub fn hull_area(mut pts: Vec<[f64; 2]>) -> f64 {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    if pts.len() < 3 {
        return 0.0;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    shoelace(&hull).abs()
}

/// Result of a minimal-projection search.
#[derive(Clone, Debug)]
pub struct ProjectionResult {
    pub frame: Frame,
    pub area: f64,
    pub area_tol: f64,
    /// True only when the minimum is known analytically.
    pub is_certified_min: bool,
    /// False when the final, smallest step still improved the area.
    pub stationary: bool,
}

impl ProjectionResult {
    pub const CSV_HEADER: &'static str = "frame,area,area_tol,certified,stationary";

    /// One CSV row; frame entries are the basis vectors joined by `;`.
    pub fn csv_row(&self) -> String {
        let frame: Vec<String> = self
            .frame
            .vectors()
            .iter()
            .map(|v| v.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(" "))
            .collect();
        format!(
            "{},{:.12},{:.3e},{},{}",
            frame.join(";"),
            self.area,
            self.area_tol,
            self.is_certified_min,
            self.stationary
        )
    }
}

/// Parameters of the Givens-rotation descent.
#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub starts: usize,
    pub rounds: usize,
    pub decay: f64,
    pub initial_step: f64,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { starts: 32, rounds: 40, decay: 0.7, initial_step: 0.5, seed: 0 }
    }
}

/// Multi-start descent over the Grassmannian.
///
/// Each start is a random rotation whose first `n` columns span the plane;
/// steps rotate one plane column against one complement column.
pub fn search_min_projection(body: &ConvexBody, n: usize, opts: SearchOptions) -> Result<ProjectionResult> {
    let d = body.dim();
    if n == 0 || n >= d {
        return Err(Error::InvalidInput(format!("projection dimension {n} must lie in 1..{d}")));
    }
    let objective = |q: &DMatrix<f64>| {
        let f = Frame::new(q.columns(0, n).into_owned()).expect("rotation stays orthonormal");
        projection_area_fast(body, &f)
    };
    let runs: Vec<(f64, DMatrix<f64>, bool)> = (0..opts.starts)
        .into_par_iter()
        .map(|s| {
            let mut r = rng(opts.seed.wrapping_mul(1_000_003).wrapping_add(s as u64));
            let mut q = random_rotation(d, &mut r);
            let mut best = objective(&q);
            let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (n..d).map(move |j| (i, j))).collect();
            let mut step = opts.initial_step;
            let mut last_improved = false;
            for _ in 0..opts.rounds {
                last_improved = false;
                q = remix(&q, n, &mut r);
                for _ in 0..25 {
                    pairs.shuffle(&mut r);
                    let mut improved = false;
                    for &(i, j) in &pairs {
                        for t in [step, -step] {
                            let cand = givens(&q, i, j, t);
                            let v = objective(&cand);
                            if v < best {
                                best = v;
                                q = cand;
                                improved = true;
                                break;
                            }
                        }
                    }
                    if !improved {
                        break;
                    }
                    last_improved = true;
                }
                step *= opts.decay;
            }
            (best, q, !last_improved)
        })
        .collect();
    let (area, q, stationary) = runs
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one start");
    let frame = Frame::new(q.columns(0, n).into_owned())?;
    Ok(ProjectionResult { frame, area, area_tol: objective_tol(body, n, area), is_certified_min: false, stationary })
}

fn objective_tol(body: &ConvexBody, n: usize, area: f64) -> f64 {
    match body {
        ConvexBody::Ellipsoid(_) => 1e-12 * area,
        ConvexBody::Polytope(p) if n == 2 && p.vertices().is_some() => 1e-12 * area,
        _ if n == 1 => body.support_tol() * 2.0,
        _ if n == 2 => {
            // inscribed polygon deficit for a smooth boundary: area (1 - sinc(2π/K))
            let t = 2.0 * std::f64::consts::PI / POLYGON_ANGLES as f64;
            area * (1.0 - t.sin() / t) + 2.0 * std::f64::consts::PI * body.circumradius() * body.support_tol()
        }
        _ => 3.0 * area / (20_000f64).sqrt(),
    }
}

/// Rotates the plane columns among themselves and the complement columns
/// among themselves: the subspace is unchanged but the coordinate pairs
/// available to the next sweep are fresh.
fn remix(q: &DMatrix<f64>, n: usize, r: &mut impl rand::Rng) -> DMatrix<f64> {
    let d = q.nrows();
    let a = random_rotation(n, r);
    let b = random_rotation(d - n, r);
    let mut out = q.clone();
    out.columns_mut(0, n).copy_from(&(q.columns(0, n) * a));
    if d - n > 0 {
        out.columns_mut(n, d - n).copy_from(&(q.columns(n, d - n) * b));
    }
    out
}

fn givens(q: &DMatrix<f64>, i: usize, j: usize, t: f64) -> DMatrix<f64> {
    let (c, s) = (t.cos(), t.sin());
    let mut out = q.clone();
    let ci = q.column(i).into_owned();
    let cj = q.column(j).into_owned();
    out.set_column(i, &(&ci * c + &cj * s));
    out.set_column(j, &(&cj * c - &ci * s));
    out
}

/// Minimal projection: heuristic search, replaced by the analytic minimum
/// for ellipsoids and axis-aligned boxes.
pub fn min_projection(body: &ConvexBody, n: usize, opts: SearchOptions) -> Result<ProjectionResult> {
    let d = body.dim();
    if n == 0 || n >= d {
        return Err(Error::InvalidInput(format!("projection dimension {n} must lie in 1..{d}")));
    }
    if let Some((frame, area)) = analytic_min(body, n) {
        return Ok(ProjectionResult { frame, area, area_tol: 1e-12 * area, is_certified_min: true, stationary: true });
    }
    search_min_projection(body, n, opts)
}

fn analytic_min(body: &ConvexBody, n: usize) -> Option<(Frame, f64)> {
    match body {
        ConvexBody::Ellipsoid(e) => Some(ellipsoid_min_projection(e, n)),
        ConvexBody::Polytope(p) if p.is_axis_box() => {
            // Cauchy-Binet: the shadow area is Σ_S |det R_S| ∏_{i∈S} 2w_i over
            // n-subsets of axes, minimized by the n narrowest axes.
            let d = p.dim();
            let mut widths = vec![f64::INFINITY; d];
            for (a, &b) in p.normals().iter().zip(p.offsets()) {
                let i = a.iter().position(|x| x.abs() > 1e-14).unwrap();
                widths[i] = widths[i].min(b);
            }
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| widths[a].total_cmp(&widths[b]));
            let axes: Vec<usize> = order[..n].to_vec();
            let area = axes.iter().map(|&i| 2.0 * widths[i]).product();
            Some((Frame::coordinate(d, &axes).ok()?, area))
        }
        _ => None,
    }
}

/// Best known minimal shadow area, used to validate glue/cut planes.
pub fn reference_min_area(body: &ConvexBody, n: usize) -> Result<f64> {
    if let Some((_, a)) = analytic_min(body, n) {
        return Ok(a);
    }
    let opts = SearchOptions { starts: 8, rounds: 25, ..SearchOptions::default() };
    Ok(search_min_projection(body, n, opts)?.area)
}

/// `n |W*|^(1/n)`, the right-hand side of the sharp inequality (the Wulff
/// perimeter of the minimal shadow over its area to the power (n-1)/n).
pub fn ratio_rhs_from_area(min_area: f64, n: usize) -> f64 {
    n as f64 * min_area.powf(1.0 / n as f64)
}

pub fn ratio_rhs(body: &ConvexBody, n: usize, opts: SearchOptions) -> Result<f64> {
    Ok(ratio_rhs_from_area(min_projection(body, n, opts)?.area, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{Cylinder, HalfspacePolytope};
    use std::f64::consts::PI;

    fn e123() -> Ellipsoid {
        Ellipsoid::axis_aligned(&[1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn exact_ellipsoid_shadows() {
        let p12 = Frame::coordinate(3, &[0, 1]).unwrap();
        let p13 = Frame::coordinate(3, &[0, 2]).unwrap();
        assert!((ellipsoid_projection_area_exact(&e123(), &p12) - 2.0 * PI).abs() < 1e-12);
        assert!((ellipsoid_projection_area_exact(&e123(), &p13) - 3.0 * PI).abs() < 1e-12);
        let ball = Ellipsoid::ball(3, 1.0).unwrap();
        let mut r = rng(1);
        let f = Frame::new(crate::sampling::random_frame(3, 2, &mut r)).unwrap();
        assert!((ellipsoid_projection_area_exact(&ball, &f) - PI).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_matches_exact_within_three_errors() {
        let body: ConvexBody = e123().into();
        let p13 = Frame::coordinate(3, &[0, 2]).unwrap();
        let est = projection_area(&body, &p13, DEFAULT_AREA_POINTS, 2000, 3).unwrap();
        assert!((est.area - 3.0 * PI).abs() < 3.0 * est.std_err + 3.0 * PI * 1e-3, "{est:?}");
    }

    #[test]
    fn cube_diagonal_shadow_is_hexagon() {
        // Cauchy: shadow along unit u = Σ_faces (1/2)|ν·u| area = 4(|u1|+|u2|+|u3|)
        let cube: ConvexBody = HalfspacePolytope::cube(3, 1.0).unwrap().into();
        let u = [1.0 / 3f64.sqrt(); 3];
        let f = Frame::new(DMatrix::from_column_slice(3, 1, &u)).unwrap().complement().unwrap();
        let exact = 4.0 * 3f64.sqrt();
        assert!((projection_area_fast(&cube, &f) - exact).abs() < 1e-12);
        let est = projection_area(&cube, &f, DEFAULT_AREA_POINTS, 2000, 5).unwrap();
        assert!((est.area - exact).abs() < 3.0 * est.std_err + exact * 2e-3, "{est:?}");
    }

    #[test]
    fn tangent_polygon_of_disk() {
        let a = tangent_polygon_area(720, |_, _| 1.0);
        assert!(a > PI && a - PI < 1e-4);
    }

    #[test]
    fn search_finds_short_axes() {
        let body: ConvexBody = e123().into();
        let r = search_min_projection(&body, 2, SearchOptions::default()).unwrap();
        assert!((r.area - 2.0 * PI).abs() < 1e-6 * 2.0 * PI);
        let m = min_projection(&body, 2, SearchOptions::default()).unwrap();
        assert!(m.is_certified_min);
        assert!(ratio_rhs_from_area(m.area, 2) - 2.0 * (2.0 * PI).sqrt() < 1e-12);
    }

    #[test]
    fn short_cylinder_prefers_horizontal_shadow() {
        let body: ConvexBody = Cylinder::new(3, 2, 1.0, 0.05).unwrap().into();
        let r = search_min_projection(&body, 2, SearchOptions { starts: 8, ..SearchOptions::default() }).unwrap();
        assert!((r.area - 0.2).abs() < 1e-3, "area {}", r.area);
        // the minimizing plane contains the axis e3
        let e3 = [0.0, 0.0, 1.0];
        let proj = r.frame.project(&e3);
        assert!((crate::linalg::norm(&proj) - 1.0).abs() < 1e-3);
        assert!(!r.is_certified_min);
    }

    #[test]
    fn cube_ratio_rhs_is_four() {
        let cube: ConvexBody = HalfspacePolytope::cube(3, 1.0).unwrap().into();
        assert!((ratio_rhs(&cube, 2, SearchOptions::default()).unwrap() - 4.0).abs() < 1e-12);
        let heur = search_min_projection(&cube, 2, SearchOptions { starts: 8, ..SearchOptions::default() }).unwrap();
        assert!((heur.area - 4.0).abs() < 1e-6);
    }

    #[test]
    fn hull_area_of_square() {
        let pts = vec![[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [0.0, 0.0], [0.5, 0.2]];
        assert!((hull_area(pts) - 4.0).abs() < 1e-15);
    }
}
