use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{mat_t_vec, mat_vec, norm, orthonormality_defect};

/// Origin-centred ellipsoid `{x : |Λ Qᵀ x| <= 1}` with `Λ = diag(1/λ_i)`.
///
/// Semi-axes are kept sorted nondecreasing; column `i` of `rotation` is the
/// principal axis carrying `λ_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid {
    semi_axes: Vec<f64>,
    rotation: DMatrix<f64>,
}

impl Ellipsoid {
    pub fn new(semi_axes: Vec<f64>, rotation: DMatrix<f64>) -> Result<Self> {
        let d = semi_axes.len();
        if d == 0 {
            return Err(Error::InvalidInput("ellipsoid needs at least one semi-axis".into()));
        }
        if rotation.shape() != (d, d) {
            return Err(Error::DimensionMismatch { expected: d, got: rotation.nrows() });
        }
        if semi_axes.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidInput("semi-axes must be positive and finite".into()));
        }
        let defect = orthonormality_defect(&rotation);
        if defect > 1e-12 {
            return Err(Error::NonOrthonormalFrame { deviation: defect });
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| semi_axes[a].total_cmp(&semi_axes[b]));
        let sorted = order.iter().map(|&i| semi_axes[i]).collect();
        let rot = DMatrix::from_fn(d, d, |i, j| rotation[(i, order[j])]);
        Ok(Self { semi_axes: sorted, rotation: rot })
    }

    pub fn axis_aligned(semi_axes: &[f64]) -> Result<Self> {
        let d = semi_axes.len();
        Self::new(semi_axes.to_vec(), DMatrix::identity(d, d))
    }

    pub fn ball(d: usize, radius: f64) -> Result<Self> {
        Self::axis_aligned(&vec![radius; d])
    }

    pub fn dim(&self) -> usize {
        self.semi_axes.len()
    }

    pub fn semi_axes(&self) -> &[f64] {
        &self.semi_axes
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn principal_axis(&self, i: usize) -> Vec<f64> {
        self.rotation.column(i).iter().copied().collect()
    }

    /// `Λ Qᵀ x`: the point mapped into the unit ball.
    pub fn normalize_point(&self, x: &[f64]) -> Vec<f64> {
        let mut y = mat_t_vec(&self.rotation, x);
        for (yi, l) in y.iter_mut().zip(&self.semi_axes) {
            *yi /= l;
        }
        y
    }

    /// Gauge `|Λ Qᵀ x|`; the body is its unit sublevel set.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        norm(&self.normalize_point(x))
    }

    /// Support value `|diag(λ) Qᵀ ν|` (not normalized for non-unit `ν`).
    pub fn support(&self, nu: &[f64]) -> f64 {
        let y = mat_t_vec(&self.rotation, nu);
        y.iter()
            .zip(&self.semi_axes)
            .map(|(a, l)| (a * l) * (a * l))
            .sum::<f64>()
            .sqrt()
    }

    /// The boundary point maximizing `ν·x`, `M ν / h(ν)`.
    pub fn support_point(&self, nu: &[f64]) -> Vec<f64> {
        let y = mat_t_vec(&self.rotation, nu);
        let scaled: Vec<f64> = y.iter().zip(&self.semi_axes).map(|(a, l)| a * l * l).collect();
        let h = self.support(nu);
        mat_vec(&self.rotation, &scaled).iter().map(|x| x / h).collect()
    }

    /// Shape matrix `M = Q diag(λ²) Qᵀ`, so the body is `{x : xᵀ M⁻¹ x <= 1}`.
    pub fn shape_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        let l2 = DMatrix::from_fn(d, d, |i, j| if i == j { self.semi_axes[i].powi(2) } else { 0.0 });
        &self.rotation * l2 * self.rotation.transpose()
    }

    /// `Λ Qᵀ` as a matrix (the map sending the body to the unit ball).
    pub fn normalizing_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        let inv = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 / self.semi_axes[i] } else { 0.0 });
        inv * self.rotation.transpose()
    }

    pub fn volume(&self) -> f64 {
        super::ball_volume(self.dim()) * self.semi_axes.iter().product::<f64>()
    }

    /// Boundary point of the ray through unit direction `u`.
    pub fn radial_point(&self, u: &[f64]) -> Vec<f64> {
        let g = self.gauge(u);
        u.iter().map(|x| x / g).collect()
    }

    /// Uniform point on the boundary image of a unit sphere point `s`
    /// (i.e. `Q diag(λ) s`).
    pub fn boundary_from_sphere(&self, s: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = s.iter().zip(&self.semi_axes).map(|(a, l)| a * l).collect();
        mat_vec(&self.rotation, &scaled)
    }

    /// Scale all semi-axes by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.semi_axes.iter().map(|l| l * s).collect(), self.rotation.clone())
    }

    /// Ellipsoid from a symmetric positive-definite shape matrix `M`
    /// (body `{x : xᵀ M⁻¹ x <= 1}`).
    pub fn from_shape_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let sym = (m + m.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::new(sym);
        if eig.eigenvalues.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Numerical("shape matrix is not positive definite".into()));
        }
        let axes = eig.eigenvalues.iter().map(|v| v.sqrt()).collect();
        let mut q = eig.eigenvectors;
        if q.determinant() < 0.0 {
            let mut c = q.column_mut(0);
            c.neg_mut();
        }
        // re-orthonormalize to machine precision
        let q = crate::frame::Frame::new(q)?.basis().clone();
        Self::new(axes, q)
    }
}

/// Signed support evaluation result for possibly non-unit query directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportValue {
    pub value: f64,
    /// Set when the query direction was not unit length and got normalized.
    pub normalized: bool,
}

/// Support function of an ellipsoid at `nu`, normalizing `nu` when needed.
pub fn support_of_ellipsoid(e: &Ellipsoid, nu: &[f64]) -> Result<SupportValue> {
    if nu.len() != e.dim() {
        return Err(Error::DimensionMismatch { expected: e.dim(), got: nu.len() });
    }
    let n = norm(nu);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::InvalidInput("zero direction".into()));
    }
    let normalized = (n - 1.0).abs() > 1e-12;
    let value = if normalized { e.support(nu) / n } else { e.support(nu) };
    Ok(SupportValue { value, normalized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::sphere_directions;

    #[test]
    fn unit_ball_support_is_one() {
        let b = Ellipsoid::ball(3, 1.0).unwrap();
        let s = support_of_ellipsoid(&b, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.value, 1.0);
        assert!(!s.normalized);
    }

    #[test]
    fn axis_support_is_semi_axis() {
        let e = Ellipsoid::axis_aligned(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(support_of_ellipsoid(&e, &[0.0, 0.0, 1.0]).unwrap().value, 3.0);
    }

    #[test]
    fn diagonal_support_matches_boundary_maximization() {
        let e = Ellipsoid::axis_aligned(&[1.0, 2.0, 3.0]).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let nu = [s, 0.0, s];
        let v = support_of_ellipsoid(&e, &nu).unwrap().value;
        assert!((v - 5f64.sqrt()).abs() < 1e-14);
        // brute force over 10^6 boundary points
        let best = sphere_directions(3, 1_000_000, 1)
            .iter()
            .map(|p| crate::linalg::dot(&e.boundary_from_sphere(p), &nu))
            .fold(f64::MIN, f64::max);
        assert!(best <= v + 1e-12 && v - best < 1e-4, "best {best} v {v}");
    }

    #[test]
    fn non_unit_direction_is_normalized_and_flagged() {
        let e = Ellipsoid::axis_aligned(&[1.0, 2.0, 3.0]).unwrap();
        let r = support_of_ellipsoid(&e, &[0.0, 0.0, 2.0]).unwrap();
        assert!(r.normalized);
        assert!((r.value - 3.0).abs() < 1e-15);
    }

    #[test]
    fn unsorted_axes_are_sorted_with_rotation() {
        let e = Ellipsoid::axis_aligned(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(e.semi_axes(), &[1.0, 2.0, 3.0]);
        assert_eq!(e.principal_axis(2), vec![1.0, 0.0, 0.0]);
        assert!((e.support(&[1.0, 0.0, 0.0]) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn shape_matrix_round_trip() {
        let mut r = crate::sampling::rng(4);
        let q = crate::sampling::random_rotation(3, &mut r);
        let e = Ellipsoid::new(vec![0.5, 1.5, 2.0], q).unwrap();
        let back = Ellipsoid::from_shape_matrix(&e.shape_matrix()).unwrap();
        for (a, b) in back.semi_axes().iter().zip(e.semi_axes()) {
            assert!((a - b).abs() < 1e-12);
        }
        for nu in sphere_directions(3, 50, 2) {
            assert!((back.support(&nu) - e.support(&nu)).abs() < 1e-12);
        }
    }
}
