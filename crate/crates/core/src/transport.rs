//! Neumann–Poisson solve on a triangulated surface and the covering check
//! for the transport map `x ↦ ∇u(x) + y`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::{ConvexBody, SupportFunction};
use crate::error::{Error, Result};
use crate::linalg::{dot, scaled, sub};
use crate::mesh::MeshSurface;
use crate::sampling::rng;

/// Relative residual target of the conjugate-gradient solve.
pub const CG_TOL: f64 = 1e-10;

/// Symmetric sparse matrix in compressed rows.
#[derive(Clone, Debug)]
pub struct SymmetricCsr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymmetricCsr {
    fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *vals.last_mut().expect("entry exists") += v;
                continue;
            }
            last = Some((i, j));
            cols.push(j);
            vals.push(v);
            row_ptr[i + 1] = cols.len();
        }
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i + 1].max(row_ptr[i]);
        }
        Self { row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.vals[k] * x[self.cols[k]]).sum())
            .collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        (self.row_ptr[i]..self.row_ptr[i + 1]).find(|&k| self.cols[k] == j).map_or(0.0, |k| self.vals[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0f64;
        for i in 0..self.dim() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                worst = worst.max((self.vals[k] - self.get(self.cols[k], i)).abs());
            }
        }
        worst
    }
}

#[derive(Clone, Debug)]
pub struct NeumannProblem {
    /// `P_Φ(Σ) / |Σ|`, the constant Laplacian.
    pub rhs: f64,
    /// `Φ(ν)` per boundary edge (mesh order).
    pub boundary_flux: Vec<f64>,
    pub stiffness: SymmetricCsr,
    pub mass: Vec<f64>,
    /// Boundary flux split to edge endpoints minus `rhs · mass`.
    pub load: Vec<f64>,
}

impl NeumannProblem {
    pub fn new(mesh: &MeshSurface, phi: &dyn SupportFunction) -> Result<Self> {
        let perimeter = mesh.anisotropic_perimeter(phi)?;
        let area = mesh.area();
        let rhs = perimeter / area;
        let nv = mesh.vertices().len();
        let mut trip = Vec::new();
        for (i, j, w) in mesh.cotangent_weights() {
            trip.push((i, i, w));
            trip.push((j, j, w));
            trip.push((i, j, -w));
            trip.push((j, i, -w));
        }
        let stiffness = SymmetricCsr::from_triplets(nv, trip);
        let mass = mesh.lumped_mass();
        let mut load: Vec<f64> = mass.iter().map(|m| -rhs * m).collect();
        let mut boundary_flux = Vec::with_capacity(mesh.boundary_edges().len());
        for e in mesh.boundary_edges() {
            let f = phi.support(&e.conormal);
            boundary_flux.push(f);
            load[e.a] += 0.5 * f * e.length;
            load[e.b] += 0.5 * f * e.length;
        }
        Ok(Self { rhs, boundary_flux, stiffness, mass, load })
    }

    /// `Σ rhs·mass - Σ Φ(ν)·length` (zero up to rounding).
    pub fn compatibility_defect(&self, mesh: &MeshSurface) -> f64 {
        let interior: f64 = self.mass.iter().map(|m| self.rhs * m).sum();
        let flux: f64 = self.boundary_flux.iter().zip(mesh.boundary_edges()).map(|(f, e)| f * e.length).sum();
        interior - flux
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannSolution {
    pub u: Vec<f64>,
    pub rhs: f64,
    pub iterations: usize,
    /// `‖K u - load‖ / ‖load‖`.
    pub relative_residual: f64,
}

fn mass_mean(u: &[f64], mass: &[f64]) -> f64 {
    u.iter().zip(mass).map(|(a, m)| a * m).sum::<f64>() / mass.iter().sum::<f64>()
}

fn centre(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Solves `K u = load` by Jacobi-preconditioned conjugate gradients on the
/// complement of the constants; the returned `u` has zero area-weighted mean.
pub fn solve_neumann(mesh: &MeshSurface, phi: &dyn SupportFunction) -> Result<NeumannSolution> {
    let prob = NeumannProblem::new(mesh, phi)?;
    let k = &prob.stiffness;
    let n = k.dim();
    let mut b = prob.load.clone();
    centre(&mut b);
    let bnorm = dot(&b, &b).sqrt();
    let diag = k.diagonal();
    if diag.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Numerical("stiffness has a nonpositive diagonal entry (isolated vertex or obtuse fan)".into()));
    }
    let precond = |r: &[f64]| {
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, d)| a / d).collect();
        centre(&mut z);
        z
    };
    let mut u = vec![0.0; n];
    let mut r = b.clone();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    let max_iter = 20 * n + 100;
    while dot(&r, &r).sqrt() > CG_TOL * bnorm && iterations < max_iter {
        let kp = k.mul(&p);
        let pkp = dot(&p, &kp);
        if !(pkp > 0.0) {
            return Err(Error::Numerical(format!("conjugate gradients lost positivity at step {iterations}")));
        }
        let alpha = rz / pkp;
        for i in 0..n {
            u[i] += alpha * p[i];
            r[i] -= alpha * kp[i];
        }
        centre(&mut r);
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iterations += 1;
    }
    let shift = mass_mean(&u, &prob.mass);
    u.iter_mut().for_each(|x| *x -= shift);
    let ku = k.mul(&u);
    let res: f64 = ku.iter().zip(&prob.load).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let lnorm = dot(&prob.load, &prob.load).sqrt().max(f64::MIN_POSITIVE);
    let relative_residual = res / lnorm;
    if relative_residual > 1e-8 {
        return Err(Error::Numerical(format!(
            "Neumann solve stalled at relative residual {relative_residual:e} after {iterations} iterations; the mesh may be badly conditioned"
        )));
    }
    Ok(NeumannSolution { u, rhs: prob.rhs, iterations, relative_residual })
}

/// Gradient of the linear interpolant of `w` on triangle `t`.
pub fn triangle_gradient(mesh: &MeshSurface, t: usize, w: &[f64]) -> Vec<f64> {
    let p = mesh.vertices();
    let tri = mesh.triangles()[t];
    let e1 = sub(&p[tri[1]], &p[tri[0]]);
    let e2 = sub(&p[tri[2]], &p[tri[0]]);
    let (g11, g12, g22) = (dot(&e1, &e1), dot(&e1, &e2), dot(&e2, &e2));
    let det = g11 * g22 - g12 * g12;
    let (d1, d2) = (w[tri[1]] - w[tri[0]], w[tri[2]] - w[tri[0]]);
    let c1 = (g22 * d1 - g12 * d2) / det;
    let c2 = (g11 * d2 - g12 * d1) / det;
    e1.iter().zip(&e2).map(|(a, b)| c1 * a + c2 * b).collect()
}

/// Area-weighted mean of the gradients of the triangles around vertex `v`.
pub fn vertex_gradient(mesh: &MeshSurface, w: &[f64], v: usize) -> Vec<f64> {
    let mut acc = vec![0.0; mesh.ambient_dim()];
    let mut weight = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if tri.contains(&v) {
            let a = mesh.triangle_area(t);
            for (s, g) in acc.iter_mut().zip(triangle_gradient(mesh, t, w)) {
                *s += a * g;
            }
            weight += a;
        }
    }
    scaled(&acc, 1.0 / weight)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringOptions {
    pub samples: usize,
    /// Shrinkage of the sample region; defaults to `2 · mesh_h / width`.
    pub delta: Option<f64>,
    /// Sample from `scale · W` instead of `(1 - δ) · W`.
    pub region_scale: Option<f64>,
    /// Gradient tolerance at the minimizer; defaults to `2 · mesh_h · rhs / n`.
    pub tol: Option<f64>,
    pub seed: u64,
}

impl Default for CoveringOptions {
    fn default() -> Self {
        Self { samples: 1000, delta: None, region_scale: None, tol: None, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub samples: usize,
    pub hits: usize,
    pub hit_rate: f64,
    pub tol: f64,
    pub region_scale: f64,
    /// Minimizers on the boundary.
    pub boundary_minimizers: usize,
}

/// Width of a symmetric body: twice its smallest support value over many directions.
fn width(body: &ConvexBody) -> f64 {
    if let ConvexBody::Ellipsoid(e) = body {
        return 2.0 * e.semi_axes()[0];
    }
    2.0 * crate::sampling::sphere_directions(body.dim(), 4000, 5)
        .iter()
        .map(|v| body.support(v))
        .fold(f64::INFINITY, f64::min)
}

pub fn covering_check(
    mesh: &MeshSurface,
    sol: &NeumannSolution,
    body: &ConvexBody,
    opts: &CoveringOptions,
) -> Result<CoveringReport> {
    let d = mesh.ambient_dim();
    if body.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: body.dim() });
    }
    if sol.u.len() != mesh.vertices().len() {
        return Err(Error::DimensionMismatch { expected: mesh.vertices().len(), got: sol.u.len() });
    }
    let h = mesh.mesh_h();
    let delta = opts.delta.unwrap_or(2.0 * h / width(body));
    let scale = opts.region_scale.unwrap_or(1.0 - delta);
    if !(scale > 0.0) {
        return Err(Error::InvalidInput(format!("shrinkage δ = {delta} leaves no sample region; use a finer mesh")));
    }
    let tol = opts.tol.unwrap_or(2.0 * h * sol.rhs / 2.0);
    let half = body.bounding_half_widths();
    let mut r = rng(opts.seed);
    let mut xis = Vec::with_capacity(opts.samples);
    let mut tries = 0usize;
    while xis.len() < opts.samples {
        tries += 1;
        if tries > 1000 * opts.samples.max(1) {
            return Err(Error::InvalidInput("no samples accepted in the region; widen δ".into()));
        }
        let x: Vec<f64> = half.iter().map(|w| scale * w * (2.0 * r.random::<f64>() - 1.0)).collect();
        if body.contains(&scaled(&x, 1.0 / scale)) {
            xis.push(x);
        }
    }
    let verts = mesh.vertices();
    let outcome: Vec<(bool, bool)> = xis
        .par_iter()
        .map(|xi| {
            let w: Vec<f64> = sol.u.iter().zip(verts).map(|(u, x)| u - dot(x, xi)).collect();
            let (arg, _) = w.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &v)| if v < b.1 { (i, v) } else { b });
            if mesh.is_boundary_vertex(arg) {
                return (false, true);
            }
            let g = vertex_gradient(mesh, &w, arg);
            (dot(&g, &g).sqrt() <= tol, false)
        })
        .collect();
    let hits = outcome.iter().filter(|o| o.0).count();
    let boundary_minimizers = outcome.iter().filter(|o| o.1).count();
    Ok(CoveringReport {
        samples: xis.len(),
        hits,
        hit_rate: hits as f64 / xis.len().max(1) as f64,
        tol,
        region_scale: scale,
        boundary_minimizers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::Ellipsoid;
    use crate::mesh::generate::{flat_disk, flat_wulff_homothet};

    fn ball(d: usize) -> ConvexBody {
        ConvexBody::from(Ellipsoid::ball(d, 1.0).unwrap())
    }

    fn disk_error(h: f64) -> f64 {
        let mesh = flat_disk(3, 1.0, h).unwrap();
        let sol = solve_neumann(&mesh, &ball(3)).unwrap();
        let exact: Vec<f64> = mesh.vertices().iter().map(|x| 0.5 * dot(x, x)).collect();
        let mass = mesh.lumped_mass();
        let diff: Vec<f64> = sol.u.iter().zip(&exact).map(|(a, b)| a - b).collect();
        let c = mass_mean(&diff, &mass);
        diff.iter().map(|e| (e - c).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn stiffness_is_symmetric_with_constant_kernel() {
        let mesh = flat_disk(3, 1.0, 0.2).unwrap();
        let p = NeumannProblem::new(&mesh, &ball(3)).unwrap();
        assert!(p.stiffness.asymmetry() < 1e-14);
        let k1 = p.stiffness.mul(&vec![1.0; mesh.vertices().len()]);
        assert!(k1.iter().all(|x| x.abs() < 1e-12));
        assert!(p.compatibility_defect(&mesh).abs() < 1e-10);
        assert!(p.load.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn disk_matches_radial_solution() {
        assert!(disk_error(0.05) <= 1e-2);
    }

    #[test]
    fn solution_has_zero_mean() {
        let mesh = flat_disk(3, 1.0, 0.1).unwrap();
        let sol = solve_neumann(&mesh, &ball(3)).unwrap();
        assert!(mass_mean(&sol.u, &mesh.lumped_mass()).abs() < 1e-12);
        assert!(sol.relative_residual <= 1e-8);
    }

    #[test]
    fn ellipse_homothet_solution_is_quadratic() {
        let e = Ellipsoid::axis_aligned(&[1.0, 2.0, 3.0]).unwrap();
        let s = 1.5;
        let mesh = flat_wulff_homothet(&e, s, 0.1).unwrap();
        let body = ConvexBody::from(e);
        let sol = solve_neumann(&mesh, &body).unwrap();
        assert!((sol.rhs - 2.0 / s).abs() < 1e-2);
        let exact: Vec<f64> = mesh.vertices().iter().map(|x| dot(x, x) / (2.0 * s)).collect();
        let diff: Vec<f64> = sol.u.iter().zip(&exact).map(|(a, b)| a - b).collect();
        let c = mass_mean(&diff, &mesh.lumped_mass());
        assert!(diff.iter().all(|e| (e - c).abs() < 2e-2));
    }

    #[test]
    fn origin_is_covered_and_far_points_are_not() {
        let mesh = flat_disk(3, 1.0, 0.1).unwrap();
        let sol = solve_neumann(&mesh, &ball(3)).unwrap();
        let inside = covering_check(&mesh, &sol, &ball(3), &CoveringOptions { samples: 200, delta: Some(0.2), ..Default::default() }).unwrap();
        assert!(inside.hit_rate >= 0.99);
        let far = covering_check(&mesh, &sol, &ball(3), &CoveringOptions { samples: 200, region_scale: Some(1.5), ..Default::default() }).unwrap();
        assert!(far.hit_rate < inside.hit_rate);
    }
}
