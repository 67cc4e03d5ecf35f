//! Triangulated surfaces with boundary in `R^d`.

pub mod generate;
pub mod inequality;
pub mod off;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::body::SupportFunction;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sub};

pub use generate::{generate, MeshKind};
pub use inequality::{verify_inequality, InequalityReport};

/// Triangles below this area are rejected as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    /// Edge from `a` to `b`, oriented like its triangle.
    pub a: usize,
    pub b: usize,
    pub triangle: usize,
    pub length: f64,
    /// Unit outward conormal in the triangle plane.
    pub conormal: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct MeshSurface {
    vertices: Vec<Vec<f64>>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    loops: Vec<Vec<usize>>,
    on_boundary: Vec<bool>,
}

fn tri_area(p: &[f64], q: &[f64], r: &[f64]) -> f64 {
    let u = sub(q, p);
    let v = sub(r, p);
    let uv = dot(&u, &v);
    (dot(&u, &u) * dot(&v, &v) - uv * uv).max(0.0).sqrt() / 2.0
}

impl MeshSurface {
    /// Validates an oriented triangle list and derives its boundary.
    pub fn new(vertices: Vec<Vec<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let d = vertices.first().map_or(0, |v| v.len());
        if d < 2 || triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh needs vertices of dimension >= 2 and triangles".into()));
        }
        if vertices.iter().any(|v| v.len() != d || v.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidMesh("vertices must share one finite dimension".into()));
        }
        let mut half: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= vertices.len()) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} has bad indices {tri:?}")));
            }
            let area = tri_area(&vertices[tri[0]], &vertices[tri[1]], &vertices[tri[2]]);
            if area < DEGENERATE_AREA {
                return Err(Error::InvalidMesh(format!("triangle {t} is degenerate (area {area:e})")));
            }
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if half.insert(e, t).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "half-edge {e:?} repeated: non-manifold or inconsistently oriented mesh"
                    )));
                }
            }
        }
        let mut boundary = Vec::new();
        let mut next: HashMap<usize, usize> = HashMap::new();
        let mut on_boundary = vec![false; vertices.len()];
        let mut keys: Vec<_> = half.iter().filter(|(e, _)| !half.contains_key(&(e.1, e.0))).collect();
        keys.sort();
        for (&(a, b), &t) in keys {
            if next.insert(a, b).is_some() {
                return Err(Error::InvalidMesh(format!("vertex {a} starts two boundary edges")));
            }
            on_boundary[a] = true;
            on_boundary[b] = true;
            let tri = triangles[t];
            let c = *tri.iter().find(|&&i| i != a && i != b).expect("triangle has a third vertex");
            let (pa, pb, pc) = (&vertices[a], &vertices[b], &vertices[c]);
            let e = sub(pb, pa);
            let len = norm(&e);
            let w = sub(pc, pa);
            let s = dot(&w, &e) / (len * len);
            let inward: Vec<f64> = w.iter().zip(&e).map(|(wi, ei)| wi - s * ei).collect();
            let nw = norm(&inward);
            boundary.push(BoundaryEdge { a, b, triangle: t, length: len, conormal: inward.iter().map(|x| -x / nw).collect() });
        }
        let mut loops = Vec::new();
        let mut seen: HashMap<usize, bool> = HashMap::new();
        let mut starts: Vec<usize> = next.keys().cloned().collect();
        starts.sort_unstable();
        for s in starts {
            if seen.contains_key(&s) {
                continue;
            }
            let mut cycle = vec![s];
            seen.insert(s, true);
            let mut v = s;
            loop {
                let Some(&w) = next.get(&v) else {
                    return Err(Error::InvalidMesh(format!("boundary chain breaks at vertex {v}")));
                };
                if w == s {
                    break;
                }
                if seen.insert(w, true).is_some() {
                    return Err(Error::InvalidMesh(format!("boundary chain revisits vertex {w}")));
                }
                cycle.push(w);
                v = w;
            }
            loops.push(cycle);
        }
        Ok(Self { vertices, triangles, boundary, loops, on_boundary })
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.loops
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.on_boundary[v]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [i, j, k] = self.triangles[t];
        tri_area(&self.vertices[i], &self.vertices[j], &self.vertices[k])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary.iter().map(|e| e.length).sum()
    }

    /// Longest edge.
    pub fn mesh_h(&self) -> f64 {
        let mut h = 0f64;
        for tri in &self.triangles {
            for k in 0..3 {
                h = h.max(norm(&sub(&self.vertices[tri[k]], &self.vertices[tri[(k + 1) % 3]])));
            }
        }
        h
    }

    /// `Σ_edges Φ(ν) · length`.
    pub fn anisotropic_perimeter(&self, phi: &dyn SupportFunction) -> Result<f64> {
        if phi.dim() != self.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), got: phi.dim() });
        }
        Ok(self.boundary.iter().map(|e| phi.support(&e.conormal) * e.length).sum())
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        let v = self.vertices.iter().map(|p| p.iter().map(|x| x * t).collect()).collect();
        Self::new(v, self.triangles.clone())
    }

    /// Connected components (through shared vertices).
    pub fn components(&self) -> Result<Vec<MeshSurface>> {
        let nv = self.vertices.len();
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for tri in &self.triangles {
            let r0 = find(&mut parent, tri[0]);
            for &v in &tri[1..] {
                let r = find(&mut parent, v);
                parent[r] = r0;
            }
        }
        let mut groups: Vec<(usize, Vec<[usize; 3]>)> = Vec::new();
        let mut slot: HashMap<usize, usize> = HashMap::new();
        for tri in &self.triangles {
            let r = find(&mut parent, tri[0]);
            let k = *slot.entry(r).or_insert_with(|| {
                groups.push((r, Vec::new()));
                groups.len() - 1
            });
            groups[k].1.push(*tri);
        }
        groups
            .into_iter()
            .map(|(_, tris)| {
                let mut remap: HashMap<usize, usize> = HashMap::new();
                let mut verts = Vec::new();
                let tris = tris
                    .iter()
                    .map(|t| {
                        t.map(|v| {
                            *remap.entry(v).or_insert_with(|| {
                                verts.push(self.vertices[v].clone());
                                verts.len() - 1
                            })
                        })
                    })
                    .collect();
                MeshSurface::new(verts, tris)
            })
            .collect()
    }

    /// Symmetric cotangent weights per edge `(i, j, w)` with `i < j`.
    pub fn cotangent_weights(&self) -> Vec<(usize, usize, f64)> {
        let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (i, j, o) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let u = sub(&self.vertices[i], &self.vertices[o]);
                let v = sub(&self.vertices[j], &self.vertices[o]);
                let c = dot(&u, &v);
                let s2 = dot(&u, &u) * dot(&v, &v) - c * c;
                let cot = c / s2.max(f64::MIN_POSITIVE).sqrt();
                *acc.entry((i.min(j), i.max(j))).or_insert(0.0) += 0.5 * cot;
            }
        }
        let mut out: Vec<_> = acc.into_iter().map(|((i, j), w)| (i, j, w)).collect();
        out.sort_by_key(|e| (e.0, e.1));
        out
    }

    /// Lumped (one third of adjacent triangle area) vertex masses.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = self.triangle_area(t) / 3.0;
            for &v in tri {
                m[v] += a;
            }
        }
        m
    }

    /// Largest `|Δ x|` over interior vertices (discrete mean curvature).
    pub fn mean_curvature_residual(&self) -> f64 {
        let d = self.ambient_dim();
        let mut lap = vec![vec![0.0; d]; self.vertices.len()];
        for (i, j, w) in self.cotangent_weights() {
            for k in 0..d {
                let diff = self.vertices[j][k] - self.vertices[i][k];
                lap[i][k] += w * diff;
                lap[j][k] -= w * diff;
            }
        }
        let mass = self.lumped_mass();
        (0..self.vertices.len())
            .filter(|&v| !self.on_boundary[v])
            .map(|v| norm(&lap[v]) / mass[v])
            .fold(0.0, f64::max)
    }
}
