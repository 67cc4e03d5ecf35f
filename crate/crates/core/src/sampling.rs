//! Deterministic quasi-uniform sampling: Kronecker (R_d) sequences, sphere
//! directions, Grassmannian frames and seeded pseudo-random streams.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{dot, norm};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generalized golden ratio: the positive root of `x^(d+1) = x + 1`.
fn harmonious(d: usize) -> f64 {
    let mut x = 2.0f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (d as f64 + 1.0));
    }
    x
}

/// Additive-recurrence low-discrepancy points in `[0,1)^d`.
#[derive(Clone, Debug)]
pub struct Kronecker {
    alpha: Vec<f64>,
    state: Vec<f64>,
}

impl Kronecker {
    pub fn new(d: usize, seed: u64) -> Self {
        let g = harmonious(d);
        let alpha = (1..=d).map(|i| (1.0 / g.powi(i as i32)).fract()).collect();
        let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
        let state = (0..d).map(|_| r.random::<f64>()).collect();
        Self { alpha, state }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        for (s, a) in self.state.iter_mut().zip(&self.alpha) {
            *s = (*s + a).fract();
        }
        self.state.clone()
    }

    pub fn take_points(&mut self, count: usize) -> Vec<Vec<f64>> {
        (0..count).map(|_| self.next_point()).collect()
    }
}

/// Low-discrepancy standard Gaussian vectors via Box-Muller on a Kronecker stream.
pub fn gaussian_points(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let pairs = d.div_ceil(2);
    let mut k = Kronecker::new(2 * pairs, seed);
    (0..count)
        .map(|_| {
            let u = k.next_point();
            let mut g = Vec::with_capacity(2 * pairs);
            for p in 0..pairs {
                let r = (-2.0 * (1.0 - u[2 * p]).max(1e-300).ln()).sqrt();
                let t = 2.0 * PI * u[2 * p + 1];
                g.push(r * t.cos());
                g.push(r * t.sin());
            }
            g.truncate(d);
            g
        })
        .collect()
}

/// Quasi-uniform unit vectors on `S^{d-1}`.
///
/// `d = 2` uses equally spaced angles, `d = 3` a spherical Fibonacci
/// lattice, higher dimensions normalized low-discrepancy Gaussians. The seed
/// rotates the pattern so different seeds give fresh samples.
pub fn sphere_directions(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    match d {
        0 => Vec::new(),
        1 => (0..count).map(|k| vec![if k % 2 == 0 { 1.0 } else { -1.0 }]).collect(),
        2 => {
            let off: f64 = r.random();
            (0..count)
                .map(|k| {
                    let t = 2.0 * PI * (k as f64 + off) / count as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        }
        3 => {
            let rot = random_rotation(3, &mut r);
            let golden = (1.0 + 5f64.sqrt()) / 2.0;
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let phi = 2.0 * PI * k as f64 / golden;
                    let p = [rho * phi.cos(), rho * phi.sin(), z];
                    (0..3).map(|i| (0..3).map(|j| rot[(i, j)] * p[j]).sum()).collect()
                })
                .collect()
        }
        _ => gaussian_points(d, count, seed)
            .into_iter()
            .map(|g| {
                let n = norm(&g).max(1e-300);
                g.iter().map(|x| x / n).collect()
            })
            .collect(),
    }
}

/// Quasi-uniform line directions (points of projective space, one per `±` pair).
pub fn line_directions(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match d {
        2 => {
            let off: f64 = rng(seed).random();
            (0..count)
                .map(|k| {
                    let t = PI * (k as f64 + off) / count as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        }
        _ => sphere_directions(d, 2 * count, seed)
            .into_iter()
            .filter(|v| {
                let lead = v.iter().find(|x| x.abs() > 1e-14).copied().unwrap_or(1.0);
                lead > 0.0
            })
            .take(count)
            .collect(),
    }
}

/// Random rotation (Haar-ish via Gram-Schmidt of a Gaussian matrix).
pub fn random_rotation(d: usize, r: &mut impl Rng) -> DMatrix<f64> {
    random_frame(d, d, r)
}

/// `d x k` matrix with orthonormal columns drawn from Gaussian columns.
pub fn random_frame(d: usize, k: usize, r: &mut impl Rng) -> DMatrix<f64> {
    use rand_distr::StandardNormal;
    loop {
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        if let Some(m) = orthonormalize(&cols, d) {
            return m;
        }
    }
}

/// Quasi-uniform `k`-frames in R^d built from low-discrepancy Gaussians.
pub fn grassmann_frames(d: usize, k: usize, count: usize, seed: u64) -> Vec<DMatrix<f64>> {
    if k == 1 {
        return line_directions(d, count, seed)
            .into_iter()
            .map(|v| DMatrix::from_column_slice(d, 1, &v))
            .collect();
    }
    gaussian_points(d * k, count * 2, seed)
        .into_iter()
        .filter_map(|g| {
            let cols: Vec<Vec<f64>> = g.chunks(d).map(|c| c.to_vec()).collect();
            orthonormalize(&cols, d)
        })
        .take(count)
        .collect()
}

pub(crate) fn orthonormalize(cols: &[Vec<f64>], d: usize) -> Option<DMatrix<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for c in cols {
        let mut v = c.clone();
        for _ in 0..2 {
            for o in &out {
                let p = dot(&v, o);
                for (vi, oi) in v.iter_mut().zip(o) {
                    *vi -= p * oi;
                }
            }
        }
        let n = norm(&v);
        if n < 1e-8 {
            return None;
        }
        out.push(v.iter().map(|x| x / n).collect());
    }
    Some(DMatrix::from_fn(d, out.len(), |i, j| out[j][i]))
}

/// Estimated covering radius (geodesic, radians) of `count` quasi-uniform
/// points on `S^{d-1}`.
pub fn covering_radius(d: usize, count: usize) -> f64 {
    match d {
        0 | 1 => 0.0,
        2 => PI / count as f64,
        _ => {
            let area = sphere_area(d);
            // cap of angular radius r has area ~ |B^{d-1}| r^{d-1}
            let cap = area / count as f64;
            let unit_cap = crate::body::ball_volume(d - 1);
            2.0 * (cap / unit_cap).powf(1.0 / (d as f64 - 1.0))
        }
    }
}

/// Surface area of the unit sphere `S^{d-1}`.
pub fn sphere_area(d: usize) -> f64 {
    d as f64 * crate::body::ball_volume(d)
}
