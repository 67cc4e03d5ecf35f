//! Axis-aligned voxel grids over a body's bounding box, with inner/outer
//! classification and exact line traversal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum VoxelClass {
    Out,
    Partial,
    In,
}

/// Grid of `res^d` voxels on `∏ [-h(e_i), h(e_i)]`.
#[derive(Clone, Debug)]
pub struct VoxelGrid {
    dim: usize,
    res: usize,
    lo: Vec<f64>,
    size: Vec<f64>,
    mask: Vec<VoxelClass>,
    var_of: Vec<u32>,
    vars: Vec<u32>,
}

pub const NOT_A_VARIABLE: u32 = u32::MAX;

impl VoxelGrid {
    pub fn new(body: &ConvexBody, res: usize) -> Result<Self> {
        let d = body.dim();
        if res == 0 {
            return Err(Error::InvalidInput("grid resolution must be positive".into()));
        }
        let total = res
            .checked_pow(d as u32)
            .filter(|&t| t < u32::MAX as usize)
            .ok_or_else(|| Error::InvalidInput(format!("grid {res}^{d} is too large")))?;
        // pad by the support tolerance so the box really contains the body
        let half: Vec<f64> = body.bounding_half_widths().iter().map(|h| h + body.support_tol()).collect();
        let lo: Vec<f64> = half.iter().map(|h| -h).collect();
        let size: Vec<f64> = half.iter().map(|h| 2.0 * h / res as f64).collect();
        let corners = res + 1;
        let band = body.membership_band();
        let corner_in: Vec<bool> = (0..corners.pow(d as u32))
            .into_par_iter()
            .map(|c| {
                let x: Vec<f64> = (0..d).map(|i| lo[i] + size[i] * digit(c, corners, i) as f64).collect();
                certainly_inside(body, &x, band)
            })
            .collect();
        let tol = body.support_tol();
        let mask: Vec<VoxelClass> = (0..total)
            .into_par_iter()
            .map(|v| {
                let idx: Vec<usize> = (0..d).map(|i| digit(v, res, i)).collect();
                let all_in = (0..1usize << d).all(|bits| {
                    let c: usize = (0..d).map(|i| (idx[i] + ((bits >> i) & 1)) * corners.pow(i as u32)).sum();
                    corner_in[c]
                });
                if all_in {
                    return VoxelClass::In;
                }
                let centre: Vec<f64> = (0..d).map(|i| lo[i] + size[i] * (idx[i] as f64 + 0.5)).collect();
                if separated(body, &centre, &size, tol) {
                    VoxelClass::Out
                } else {
                    VoxelClass::Partial
                }
            })
            .collect();
        let mut var_of = vec![NOT_A_VARIABLE; total];
        let mut vars = Vec::new();
        for (v, class) in mask.iter().enumerate() {
            if *class == VoxelClass::In {
                var_of[v] = vars.len() as u32;
                vars.push(v as u32);
            }
        }
        Ok(Self { dim: d, res, lo, size, mask, var_of, vars })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn res(&self) -> usize {
        self.res
    }

    pub fn lower_corner(&self) -> &[f64] {
        &self.lo
    }

    pub fn voxel_size(&self) -> &[f64] {
        &self.size
    }

    pub fn voxel_volume(&self) -> f64 {
        self.size.iter().product()
    }

    pub fn voxel_diameter(&self) -> f64 {
        norm(&self.size)
    }

    pub fn mask(&self) -> &[VoxelClass] {
        &self.mask
    }

    pub fn count(&self, class: VoxelClass) -> usize {
        self.mask.iter().filter(|c| **c == class).count()
    }

    /// Number of support variables (inner voxels).
    pub fn variable_count(&self) -> usize {
        self.vars.len()
    }

    /// Voxel id of each variable.
    pub fn variables(&self) -> &[u32] {
        &self.vars
    }

    pub fn variable_of(&self, voxel: usize) -> Option<usize> {
        match self.var_of[voxel] {
            NOT_A_VARIABLE => None,
            k => Some(k as usize),
        }
    }

    pub fn voxel_index(&self, voxel: usize) -> Vec<usize> {
        (0..self.dim).map(|i| digit(voxel, self.res, i)).collect()
    }

    pub fn voxel_centre(&self, voxel: usize) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.lo[i] + self.size[i] * (digit(voxel, self.res, i) as f64 + 0.5))
            .collect()
    }

    /// Voxel containing `x`, if inside the box.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut v = 0;
        let mut stride = 1;
        for i in 0..self.dim {
            let k = ((x[i] - self.lo[i]) / self.size[i]).floor();
            if !(k >= 0.0 && k < self.res as f64) {
                return None;
            }
            v += k as usize * stride;
            stride *= self.res;
        }
        Some(v)
    }

    /// Visits every voxel crossed by the line `p + tα` with the length of the
    /// crossing (parametric slab traversal; `α` must be a unit vector).
    pub fn traverse(&self, p: &[f64], alpha: &[f64], mut visit: impl FnMut(usize, f64)) {
        let d = self.dim;
        let (mut t_in, mut t_out) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..d {
            let hi = self.lo[i] + self.size[i] * self.res as f64;
            if alpha[i] == 0.0 {
                if p[i] < self.lo[i] || p[i] >= hi {
                    return;
                }
            } else {
                let (a, b) = ((self.lo[i] - p[i]) / alpha[i], (hi - p[i]) / alpha[i]);
                t_in = t_in.max(a.min(b));
                t_out = t_out.min(a.max(b));
            }
        }
        if !(t_in < t_out) {
            return;
        }
        let mut idx = vec![0usize; d];
        let mut next = vec![f64::INFINITY; d];
        let mut delta = vec![f64::INFINITY; d];
        let mut step = vec![0isize; d];
        let probe = t_in + 1e-12 * (t_out - t_in);
        for i in 0..d {
            let x = p[i] + probe * alpha[i];
            let k = (((x - self.lo[i]) / self.size[i]).floor() as isize).clamp(0, self.res as isize - 1);
            idx[i] = k as usize;
            if alpha[i] > 0.0 {
                step[i] = 1;
                next[i] = (self.lo[i] + (k + 1) as f64 * self.size[i] - p[i]) / alpha[i];
                delta[i] = self.size[i] / alpha[i];
            } else if alpha[i] < 0.0 {
                step[i] = -1;
                next[i] = (self.lo[i] + k as f64 * self.size[i] - p[i]) / alpha[i];
                delta[i] = -self.size[i] / alpha[i];
            }
        }
        let strides: Vec<usize> = (0..d).map(|i| self.res.pow(i as u32)).collect();
        let mut voxel: usize = (0..d).map(|i| idx[i] * strides[i]).sum();
        let mut t = t_in;
        loop {
            let (k, tk) = next
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |a, (i, &v)| if v < a.1 { (i, v) } else { a });
            let t1 = tk.min(t_out);
            if t1 > t {
                visit(voxel, t1 - t);
                t = t1;
            }
            if t >= t_out {
                break;
            }
            let ni = idx[k] as isize + step[k];
            if ni < 0 || ni >= self.res as isize {
                break;
            }
            idx[k] = ni as usize;
            if step[k] > 0 {
                voxel += strides[k];
            } else {
                voxel -= strides[k];
            }
            next[k] += delta[k];
        }
    }
}

fn digit(v: usize, base: usize, i: usize) -> usize {
    (v / base.pow(i as u32)) % base
}

/// Radial distance from `x` to the boundary is at least `band`.
fn certainly_inside(body: &ConvexBody, x: &[f64], band: f64) -> bool {
    let r = norm(x);
    if r == 0.0 {
        return true;
    }
    let g = body.gauge(x);
    g < 1.0 && r * (1.0 - g) / g >= band.max(1e-12 * body.circumradius())
}

/// Some direction separates the voxel around `centre` from the body.
fn separated(body: &ConvexBody, centre: &[f64], size: &[f64], tol: f64) -> bool {
    let d = centre.len();
    let mut normals: Vec<Vec<f64>> = Vec::with_capacity(d + 2);
    if norm(centre) > 0.0 {
        normals.push(crate::linalg::normalized(centre));
        // subgradient of the gauge: the normal of its level set through the centre
        let h = 1e-7 * body.circumradius().max(norm(centre));
        let grad: Vec<f64> = (0..d)
            .map(|i| {
                let mut a = centre.to_vec();
                let mut b = centre.to_vec();
                a[i] += h;
                b[i] -= h;
                body.gauge(&a) - body.gauge(&b)
            })
            .collect();
        if norm(&grad) > 0.0 {
            normals.push(crate::linalg::normalized(&grad));
        }
    }
    if let Some((ns, _)) = body.halfspaces() {
        normals.extend(ns.iter().cloned());
    }
    normals.iter().any(|nu| {
        let reach: f64 = nu.iter().zip(size).map(|(a, s)| 0.5 * a.abs() * s).sum();
        let c = dot(nu, centre);
        let h = body.support(nu) + tol;
        c - reach > h || c + reach < -h
    })
}
