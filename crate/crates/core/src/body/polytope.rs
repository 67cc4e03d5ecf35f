use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

/// Vertex enumeration is attempted only when the number of candidate
/// `d`-subsets times half the sign patterns stays below this.
const VERTEX_CANDIDATE_CAP: u128 = 400_000;

/// Symmetric polytope `{x : |a_i · x| <= b_i}` with unit normals `a_i`.
#[derive(Clone, Debug)]
pub struct HalfspacePolytope {
    dim: usize,
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    vertices: Option<Vec<Vec<f64>>>,
    circumradius: f64,
}

impl PartialEq for HalfspacePolytope {
    fn eq(&self, other: &Self) -> bool {
        self.normals == other.normals && self.offsets == other.offsets
    }
}

impl HalfspacePolytope {
    /// Normals need not be unit; each row is rescaled together with its offset.
    pub fn new(normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if normals.len() != offsets.len() {
            return Err(Error::InvalidInput(format!(
                "{} normals but {} offsets",
                normals.len(),
                offsets.len()
            )));
        }
        let dim = normals.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::InvalidInput("polytope needs at least one constraint".into()));
        }
        let mut ns = Vec::with_capacity(normals.len());
        let mut bs = Vec::with_capacity(normals.len());
        for (a, b) in normals.into_iter().zip(offsets) {
            if a.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: a.len() });
            }
            let l = norm(&a);
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidInput("zero or non-finite normal".into()));
            }
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidInput("offsets must be positive".into()));
            }
            ns.push(a.iter().map(|x| x / l).collect::<Vec<f64>>());
            bs.push(b / l);
        }
        let rank = DMatrix::from_fn(ns.len(), dim, |i, j| ns[i][j]).rank(1e-10);
        if rank < dim {
            return Err(Error::Unbounded(format!(
                "normals span only a {rank}-dimensional subspace of R^{dim}"
            )));
        }
        let mut p = Self { dim, normals: ns, offsets: bs, vertices: None, circumradius: 0.0 };
        p.vertices = p.enumerate_vertices();
        p.circumradius = match &p.vertices {
            Some(vs) => vs.iter().map(|v| norm(v)).fold(0.0, f64::max),
            None => crate::sampling::sphere_directions(dim, 256, 0)
                .iter()
                .map(|u| p.support_lp(u))
                .fold(0.0, f64::max),
        };
        Ok(p)
    }

    /// Axis-aligned box `∏ [-w_i, w_i]`.
    pub fn axis_box(half_widths: &[f64]) -> Result<Self> {
        let d = half_widths.len();
        let normals = (0..d).map(|i| crate::linalg::unit(d, i)).collect();
        Self::new(normals, half_widths.to_vec())
    }

    pub fn cube(d: usize, half_width: f64) -> Result<Self> {
        Self::axis_box(&vec![half_width; d])
    }

    /// `{x : |x|_1 <= r}` written with the `2^(d-1)` sign normals.
    pub fn cross_polytope(d: usize, radius: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let s = (d as f64).sqrt();
        let normals: Vec<Vec<f64>> = (0..1usize << (d - 1))
            .map(|mask| {
                (0..d)
                    .map(|i| if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 / s } else { 1.0 / s })
                    .collect()
            })
            .collect();
        let k = normals.len();
        Self::new(normals, vec![radius / s; k])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// All vertices (both of each `±` pair), when enumeration was affordable.
    pub fn vertices(&self) -> Option<&[Vec<f64>]> {
        self.vertices.as_deref()
    }

    /// Largest distance from the origin to a point of the body (estimated
    /// from sampled supports when vertices were not enumerated).
    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    /// True when all normals are coordinate axes.
    pub fn is_axis_box(&self) -> bool {
        self.normals
            .iter()
            .all(|a| a.iter().filter(|x| x.abs() > 1e-14).count() == 1)
    }

    pub fn gauge(&self, x: &[f64]) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(a, b)| dot(a, x).abs() / b)
            .fold(0.0, f64::max)
    }

    pub fn support(&self, nu: &[f64]) -> f64 {
        match &self.vertices {
            Some(vs) => vs.iter().map(|v| dot(v, nu)).fold(f64::MIN, f64::max),
            None => self.support_lp(nu),
        }
    }

    /// A maximizer of `ν·x` over the polytope.
    pub fn support_point(&self, nu: &[f64]) -> Vec<f64> {
        match &self.vertices {
            Some(vs) => vs
                .iter()
                .max_by(|a, b| dot(a, nu).total_cmp(&dot(b, nu)))
                .cloned()
                .expect("bounded polytopes have vertices"),
            None => self.solve_lp(nu).map(|(_, x)| x).unwrap_or_else(|| vec![f64::NAN; self.dim]),
        }
    }

    /// `max ν·x` over the polytope by the simplex method.
    pub fn support_lp(&self, nu: &[f64]) -> f64 {
        self.solve_lp(nu).map_or(f64::NAN, |(v, _)| v)
    }

    fn solve_lp(&self, nu: &[f64]) -> Option<(f64, Vec<f64>)> {
        use microlp::{ComparisonOp, OptimizationDirection, Problem};
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = nu
            .iter()
            .map(|&c| lp.add_var(c, (f64::NEG_INFINITY, f64::INFINITY)))
            .collect();
        for (a, &b) in self.normals.iter().zip(&self.offsets) {
            let row: Vec<_> = vars.iter().copied().zip(a.iter().copied()).collect();
            lp.add_constraint(row.as_slice(), ComparisonOp::Le, b);
            lp.add_constraint(row.as_slice(), ComparisonOp::Ge, -b);
        }
        let s = lp.solve().ok()?.into_solution().ok()?;
        Some((s.objective(), vars.iter().map(|&v| s.var_value(v)).collect()))
    }

    fn enumerate_vertices(&self) -> Option<Vec<Vec<f64>>> {
        let (d, k) = (self.dim, self.normals.len());
        let candidates = binomial(k, d).saturating_mul(1u128 << (d - 1).min(100));
        if candidates > VERTEX_CANDIDATE_CAP {
            return None;
        }
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut subset: Vec<usize> = (0..d).collect();
        loop {
            let a = DMatrix::from_fn(d, d, |i, j| self.normals[subset[i]][j]);
            if let Some(lu) = a.clone().lu().try_inverse() {
                for mask in 0..1usize << (d - 1) {
                    let rhs = DVector::from_fn(d, |i, _| {
                        let s = if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 };
                        s * self.offsets[subset[i]]
                    });
                    let x: Vec<f64> = (&lu * rhs).iter().copied().collect();
                    if self.gauge(&x) <= 1.0 + 1e-10 && !out.iter().any(|v| near(v, &x)) {
                        out.push(x.iter().map(|t| -t).collect());
                        out.push(x);
                    }
                }
            }
            if !next_subset(&mut subset, k) {
                break;
            }
        }
        Some(out)
    }
}

fn near(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k.min(n - k) {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

fn next_subset(s: &mut [usize], n: usize) -> bool {
    let k = s.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if s[i] < n - k + i {
            s[i] += 1;
            for j in i + 1..k {
                s[j] = s[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Product `B^k(r) x [-h, h]^(d-k)`: the disk factor lives on the first `k`
/// coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Cylinder {
    dim: usize,
    disk_dim: usize,
    radius: f64,
    half_height: f64,
}

impl Cylinder {
    pub fn new(dim: usize, disk_dim: usize, radius: f64, half_height: f64) -> Result<Self> {
        if disk_dim == 0 || disk_dim >= dim {
            return Err(Error::InvalidInput(format!(
                "disk dimension {disk_dim} must lie in 1..{dim}"
            )));
        }
        if !(radius > 0.0 && half_height > 0.0 && radius.is_finite() && half_height.is_finite()) {
            return Err(Error::InvalidInput("cylinder radius and height must be positive".into()));
        }
        Ok(Self { dim, disk_dim, radius, half_height })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn disk_dim(&self) -> usize {
        self.disk_dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn half_height(&self) -> f64 {
        self.half_height
    }

    pub fn gauge(&self, x: &[f64]) -> f64 {
        let k = self.disk_dim;
        let disk = norm(&x[..k]) / self.radius;
        let slab = x[k..].iter().fold(0.0f64, |m, t| m.max(t.abs())) / self.half_height;
        disk.max(slab)
    }

    pub fn support(&self, nu: &[f64]) -> f64 {
        let k = self.disk_dim;
        self.radius * norm(&nu[..k]) + self.half_height * nu[k..].iter().map(|t| t.abs()).sum::<f64>()
    }

    pub fn support_point(&self, nu: &[f64]) -> Vec<f64> {
        let k = self.disk_dim;
        let l = norm(&nu[..k]);
        let mut x: Vec<f64> = nu[..k]
            .iter()
            .map(|t| if l > 0.0 { self.radius * t / l } else { 0.0 })
            .collect();
        x.extend(nu[k..].iter().map(|t| if *t >= 0.0 { self.half_height } else { -self.half_height }));
        x
    }

    pub fn volume(&self) -> f64 {
        super::ball_volume(self.disk_dim)
            * self.radius.powi(self.disk_dim as i32)
            * (2.0 * self.half_height).powi((self.dim - self.disk_dim) as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_has_eight_vertices_and_l1_support() {
        let c = HalfspacePolytope::cube(3, 1.0).unwrap();
        assert_eq!(c.vertices().unwrap().len(), 8);
        let nu = [0.6, -0.8, 0.0];
        assert!((c.support(&nu) - 1.4).abs() < 1e-14);
        assert!((c.support_lp(&nu) - 1.4).abs() < 1e-9);
    }

    #[test]
    fn cross_polytope_vertices_are_signed_axes() {
        let c = HalfspacePolytope::cross_polytope(3, 1.0).unwrap();
        let vs = c.vertices().unwrap();
        assert_eq!(vs.len(), 6);
        for v in vs {
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
        assert!((c.support(&[0.0, 0.0, 1.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normals_get_normalized_with_offsets() {
        let p = HalfspacePolytope::new(vec![vec![2.0, 0.0], vec![0.0, 3.0]], vec![2.0, 3.0]).unwrap();
        assert_eq!(p.offsets(), &[1.0, 1.0]);
    }

    #[test]
    fn rank_deficient_normals_are_unbounded() {
        let e = HalfspacePolytope::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], vec![1.0, 1.0]);
        assert!(matches!(e, Err(Error::Unbounded(_))));
    }

    #[test]
    fn cylinder_support_and_gauge_agree_on_boundary() {
        let c = Cylinder::new(3, 2, 1.0, 0.05).unwrap();
        assert!((c.support(&[0.0, 0.0, 1.0]) - 0.05).abs() < 1e-15);
        assert!((c.support(&[1.0, 0.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((c.gauge(&[0.6, 0.8, 0.05]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn subsets_enumerate_binomial_count() {
        let mut s = vec![0, 1];
        let mut count = 1;
        while next_subset(&mut s, 5) {
            count += 1;
        }
        assert_eq!(count as u128, binomial(5, 2));
    }
}
