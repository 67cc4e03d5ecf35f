//! Small dense helpers on `&[f64]` vectors; matrices go through nalgebra.

use nalgebra::DMatrix;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + t * b`
pub fn axpy(a: &[f64], t: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * y).collect()
}

pub fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

/// Matrix-vector product with an nalgebra matrix and slice vector.
pub fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let (r, c) = m.shape();
    debug_assert_eq!(c, v.len());
    (0..r)
        .map(|i| (0..c).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

/// `mᵀ v`
pub fn mat_t_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let (r, c) = m.shape();
    debug_assert_eq!(r, v.len());
    (0..c)
        .map(|j| (0..r).map(|i| m[(i, j)] * v[i]).sum())
        .collect()
}

/// Largest absolute entry of `mᵀm - I`.
pub fn orthonormality_defect(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    let k = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

/// Gram-Schmidt completion of the orthonormal columns of `basis` to a full
/// orthonormal basis of R^d. The given columns come first.
pub fn complete_basis(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let (d, k) = basis.shape();
    let mut cols: Vec<Vec<f64>> = (0..k).map(|j| basis.column(j).iter().copied().collect()).collect();
    for i in 0..d {
        if cols.len() == d {
            break;
        }
        let mut v = unit(d, i);
        for _ in 0..2 {
            for c in &cols {
                let p = dot(&v, c);
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= p * ci;
                }
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            cols.push(scaled(&v, 1.0 / n));
        }
    }
    DMatrix::from_fn(d, d, |i, j| cols[j][i])
}

/// Gram determinant of the vectors (rows of `vs`): `det(V Vᵀ)`.
pub fn gram_det(vs: &[&[f64]]) -> f64 {
    let k = vs.len();
    let g = DMatrix::from_fn(k, k, |i, j| dot(vs[i], vs[j]));
    g.determinant()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completion_is_orthonormal() {
        let b = DMatrix::from_column_slice(3, 1, &[1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt(), 0.0]);
        let full = complete_basis(&b);
        assert!(orthonormality_defect(&full) < 1e-12);
        assert!((full[(0, 0)] - b[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn gram_det_of_unit_square() {
        let u = [1.0, 0.0, 0.0, 0.0];
        let v = [0.0, 2.0, 0.0, 0.0];
        assert!((gram_det(&[&u, &v]) - 4.0).abs() < 1e-12);
    }
}
