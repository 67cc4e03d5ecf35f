//! Orthonormal frames spanning linear subspaces of R^d.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{complete_basis, orthonormality_defect};

/// Frames whose columns deviate from orthonormal by more than this are rejected.
pub const FRAME_REJECT_TOL: f64 = 1e-9;

/// A `d x k` matrix with orthonormal columns; the columns span the subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    basis: DMatrix<f64>,
}

impl Frame {
    /// Accepts a basis whose columns are orthonormal to within
    /// [`FRAME_REJECT_TOL`] and polishes it to machine precision.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let (d, k) = basis.shape();
        if k == 0 || k > d {
            return Err(Error::InvalidInput(format!("frame of {k} vectors in R^{d}")));
        }
        let deviation = orthonormality_defect(&basis);
        if !deviation.is_finite() || deviation > FRAME_REJECT_TOL {
            return Err(Error::NonOrthonormalFrame { deviation });
        }
        Ok(Self { basis: polish(basis) })
    }

    /// Frame from a list of basis vectors (each of length `d`).
    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self> {
        let k = vectors.len();
        let d = vectors.first().map_or(0, Vec::len);
        if vectors.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidInput("frame vectors of unequal length".into()));
        }
        Self::new(DMatrix::from_fn(d, k, |i, j| vectors[j][i]))
    }

    /// Span of the given coordinate axes.
    pub fn coordinate(d: usize, axes: &[usize]) -> Result<Self> {
        if axes.iter().any(|&a| a >= d) {
            return Err(Error::InvalidInput(format!("axis out of range for R^{d}")));
        }
        Self::new(DMatrix::from_fn(d, axes.len(), |i, j| if i == axes[j] { 1.0 } else { 0.0 }))
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn sub_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.basis.column(j).iter().copied().collect()
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        (0..self.sub_dim()).map(|j| self.vector(j)).collect()
    }

    /// Subspace coordinates `y` to the ambient point `R y`.
    pub fn embed(&self, y: &[f64]) -> Vec<f64> {
        let (d, k) = self.basis.shape();
        (0..d).map(|i| (0..k).map(|j| self.basis[(i, j)] * y[j]).sum()).collect()
    }

    /// Ambient point to subspace coordinates `Rᵀ x`.
    pub fn coords(&self, x: &[f64]) -> Vec<f64> {
        let (d, k) = self.basis.shape();
        (0..k).map(|j| (0..d).map(|i| self.basis[(i, j)] * x[i]).sum()).collect()
    }

    /// Orthogonal projection of `x` onto the subspace, as an ambient point.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.embed(&self.coords(x))
    }

    /// Orthonormal frame of the orthogonal complement (`None` if full rank).
    pub fn complement(&self) -> Option<Frame> {
        let (d, k) = self.basis.shape();
        if k == d {
            return None;
        }
        let full = complete_basis(&self.basis);
        Some(Frame { basis: full.columns(k, d - k).into_owned() })
    }

    /// Full orthogonal matrix whose first `k` columns are this frame.
    pub fn completed(&self) -> DMatrix<f64> {
        complete_basis(&self.basis)
    }
}

fn polish(mut b: DMatrix<f64>) -> DMatrix<f64> {
    let k = b.ncols();
    for j in 0..k {
        for _ in 0..2 {
            for p in 0..j {
                let proj = b.column(j).dot(&b.column(p));
                let cp = b.column(p).into_owned();
                let mut cj = b.column_mut(j);
                cj.axpy(-proj, &cp, 1.0);
            }
        }
        let n = b.column(j).norm();
        b.column_mut(j).scale_mut(1.0 / n);
    }
    b
}

/// Serialized form: a list of basis vectors.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct FrameDescriptor(pub Vec<Vec<f64>>);

impl From<&Frame> for FrameDescriptor {
    fn from(f: &Frame) -> Self {
        FrameDescriptor(f.vectors())
    }
}

impl TryFrom<&FrameDescriptor> for Frame {
    type Error = Error;
    fn try_from(d: &FrameDescriptor) -> Result<Self> {
        Frame::from_vectors(&d.0)
    }
}
