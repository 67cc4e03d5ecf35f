//! Mesh generators: flat disks and ellipses, catenoid, Enneper and
//! holomorphic-curve patches.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::MeshSurface;
use crate::body::Ellipsoid;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeshKind {
    /// Disk of `radius` in `span(e₁, e₂) ⊂ R^dim`.
    FlatDisk { dim: usize, radius: f64 },
    /// `scale · W*` for the axis-aligned ellipsoid with these semi-axes.
    FlatWulffHomothet { semi_axes: Vec<f64>, scale: f64 },
    /// `(cosh z cos θ, cosh z sin θ, z)` for `|z| <= half_height`.
    CatenoidPatch { dim: usize, half_height: f64 },
    /// Enneper surface over the parameter disk of `radius`.
    EnneperPatch { dim: usize, radius: f64 },
    /// Graph `(z, z^power)` over `|z| <= radius`, in `R^dim` with `dim >= 4`.
    HolomorphicCurve { dim: usize, power: u32, radius: f64 },
}

pub fn generate(kind: &MeshKind, h: f64) -> Result<MeshSurface> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("mesh size must be positive, got {h}")));
    }
    let need = |dim: usize, min: usize| {
        if dim < min {
            Err(Error::InvalidInput(format!("this surface needs ambient dimension >= {min}")))
        } else {
            Ok(())
        }
    };
    let positive = |x: f64, what: &str| {
        if x > 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("{what} must be positive")))
        }
    };
    match kind {
        MeshKind::FlatDisk { dim, radius } => {
            need(*dim, 2)?;
            positive(*radius, "radius")?;
            flat_disk(*dim, *radius, h)
        }
        MeshKind::FlatWulffHomothet { semi_axes, scale } => {
            positive(*scale, "scale")?;
            let e = Ellipsoid::axis_aligned(semi_axes)?;
            flat_wulff_homothet(&e, *scale, h)
        }
        MeshKind::CatenoidPatch { dim, half_height } => {
            need(*dim, 3)?;
            positive(*half_height, "half height")?;
            catenoid_patch(*dim, *half_height, h)
        }
        MeshKind::EnneperPatch { dim, radius } => {
            need(*dim, 3)?;
            positive(*radius, "radius")?;
            let d = *dim;
            disk_map(*radius, h, |u, v| {
                let mut x = vec![0.0; d];
                x[0] = u - u * u * u / 3.0 + u * v * v;
                x[1] = v - v * v * v / 3.0 + v * u * u;
                x[2] = u * u - v * v;
                x
            })
        }
        MeshKind::HolomorphicCurve { dim, power, radius } => {
            need(*dim, 4)?;
            positive(*radius, "radius")?;
            if *power == 0 {
                return Err(Error::InvalidInput("power must be at least 1".into()));
            }
            let (d, k) = (*dim, *power as i32);
            disk_map(*radius, h, |u, v| {
                let (rho, th) = ((u * u + v * v).sqrt(), v.atan2(u));
                let mut x = vec![0.0; d];
                x[0] = u;
                x[1] = v;
                x[2] = rho.powi(k) * (k as f64 * th).cos();
                x[3] = rho.powi(k) * (k as f64 * th).sin();
                x
            })
        }
    }
}

pub fn flat_disk(dim: usize, radius: f64, h: f64) -> Result<MeshSurface> {
    disk_map(radius, h, |u, v| {
        let mut x = vec![0.0; dim];
        x[0] = u;
        x[1] = v;
        x
    })
}

/// `scale · W*` for an ellipsoid: the ellipse on its two shortest principal axes.
pub fn flat_wulff_homothet(e: &Ellipsoid, scale: f64, h: f64) -> Result<MeshSurface> {
    if e.dim() < 3 {
        return Err(Error::InvalidInput("homothets are planar domains in R^d with d >= 3".into()));
    }
    let (q1, q2) = (e.principal_axis(0), e.principal_axis(1));
    let (a, b) = (scale * e.semi_axes()[0], scale * e.semi_axes()[1]);
    // parameter disk of the long semi-axis so that image edges never exceed parameter edges
    let r = a.max(b);
    disk_map(r, h, |u, v| q1.iter().zip(&q2).map(|(x, y)| a * u / r * x + b * v / r * y).collect())
}

fn catenoid_patch(dim: usize, half: f64, h: f64) -> Result<MeshSurface> {
    let stretch = half.cosh();
    let mut step = h / (std::f64::consts::SQRT_2 * stretch);
    loop {
        let nt = ((2.0 * PI / step).ceil() as usize).max(3);
        let nz = ((2.0 * half / step).ceil() as usize).max(1);
        let mut verts = Vec::with_capacity(nt * (nz + 1));
        for j in 0..=nz {
            let z = -half + 2.0 * half * j as f64 / nz as f64;
            for i in 0..nt {
                let t = 2.0 * PI * i as f64 / nt as f64;
                let mut x = vec![0.0; dim];
                x[0] = z.cosh() * t.cos();
                x[1] = z.cosh() * t.sin();
                x[2] = z;
                verts.push(x);
            }
        }
        let id = |i: usize, j: usize| j * nt + i % nt;
        let mut tris = Vec::with_capacity(2 * nt * nz);
        for j in 0..nz {
            for i in 0..nt {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            }
        }
        let mesh = MeshSurface::new(verts, tris)?;
        if mesh.mesh_h() <= h {
            return Ok(mesh);
        }
        step *= 0.9;
    }
}

/// Concentric-ring triangulation of the parameter disk of `radius`, pushed
/// through `map`; refined until every image edge is at most `h`.
fn disk_map(radius: f64, h: f64, map: impl Fn(f64, f64) -> Vec<f64>) -> Result<MeshSurface> {
    let mut rings = ((1.45 * radius / h).ceil() as usize).max(1);
    loop {
        let (params, tris) = ring_disk(radius, rings);
        let verts = params.iter().map(|&(u, v)| map(u, v)).collect();
        let mesh = MeshSurface::new(verts, tris)?;
        if mesh.mesh_h() <= h {
            return Ok(mesh);
        }
        rings = (rings as f64 * 1.1).ceil() as usize + 1;
    }
}

/// Centre plus rings `k = 1..=rings` of `6k` points; counter-clockwise triangles.
pub fn ring_disk(radius: f64, rings: usize) -> (Vec<(f64, f64)>, Vec<[usize; 3]>) {
    let mut pts = vec![(0.0, 0.0)];
    let mut start = vec![0usize];
    for k in 1..=rings {
        start.push(pts.len());
        let r = radius * k as f64 / rings as f64;
        let n = 6 * k;
        for i in 0..n {
            let t = 2.0 * PI * i as f64 / n as f64;
            pts.push((r * t.cos(), r * t.sin()));
        }
    }
    let count = |k: usize| if k == 0 { 1 } else { 6 * k };
    let mut tris = Vec::new();
    for k in 0..rings {
        let (n1, n2) = (count(k), count(k + 1));
        let inner = |i: usize| start[k] + i % n1;
        let outer = |j: usize| start[k + 1] + j % n2;
        if k == 0 {
            for j in 0..n2 {
                tris.push([inner(0), outer(j), outer(j + 1)]);
            }
            continue;
        }
        let (mut i, mut j) = (0, 0);
        while i < n1 || j < n2 {
            let next_inner = (i + 1) as f64 / n1 as f64;
            let next_outer = (j + 1) as f64 / n2 as f64;
            if j < n2 && (i >= n1 || next_outer <= next_inner) {
                tris.push([inner(i), outer(j), outer(j + 1)]);
                j += 1;
            } else {
                tris.push([inner(i), outer(j), inner(i + 1)]);
                i += 1;
            }
        }
    }
    for t in tris.iter_mut() {
        let (a, b, c) = (pts[t[0]], pts[t[1]], pts[t[2]]);
        if (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0) < 0.0 {
            t.swap(1, 2);
        }
    }
    (pts, tris)
}
