//! Both sides of the anisotropic isoperimetric inequalities on a mesh.

use serde::{Deserialize, Serialize};

use super::MeshSurface;
use crate::body::ConvexBody;
use crate::density::constants;
use crate::error::{Error, Result};
use crate::projection::{min_projection, SearchOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub n: usize,
    pub m: usize,
    pub area: f64,
    pub perimeter: f64,
    /// `P_Φ(Σ) / |Σ|^{(n-1)/n}`.
    pub lhs: f64,
    pub w_star: f64,
    pub rhs_sharp: f64,
    pub rhs_bound: f64,
    pub rhs_nonsharp: f64,
    pub slack_sharp: f64,
    pub slack_bound: f64,
    pub slack_nonsharp: f64,
    pub mesh_h: f64,
    /// Expected size of discretization error in `lhs`.
    pub allowance: f64,
    /// `|slack_sharp| <= allowance`.
    pub homothet_candidate: bool,
    pub mean_curvature_residual: f64,
}

impl InequalityReport {
    /// The certified form `lhs >= rhs_bound - allowance`.
    pub fn holds(&self) -> bool {
        self.slack_bound >= -self.allowance
    }
}

pub fn verify_inequality(
    mesh: &MeshSurface,
    body: &ConvexBody,
    n: usize,
    m: usize,
    sup_lower: f64,
) -> Result<InequalityReport> {
    let d = mesh.ambient_dim();
    if body.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: body.dim() });
    }
    if n != 2 || n + m != d {
        return Err(Error::DimensionMismatch { expected: d, got: n + m });
    }
    if !(sup_lower >= 0.0) {
        return Err(Error::InvalidInput("sup lower bound must be nonnegative".into()));
    }
    let area = mesh.area();
    let perimeter = mesh.anisotropic_perimeter(body)?;
    let nf = n as f64;
    let lhs = perimeter / area.powf((nf - 1.0) / nf);
    let w_star = min_projection(body, n, SearchOptions::default())?.area;
    let (_, c) = constants(n, m)?;
    let rhs_sharp = nf * w_star.powf(1.0 / nf);
    let rhs_bound = nf * sup_lower.powf(1.0 / nf);
    let rhs_nonsharp = c * rhs_sharp;
    let h = mesh.mesh_h();
    // chord error of the boundary against its mean radius of curvature
    let loops = mesh.boundary_loops().len().max(1) as f64;
    let radius = mesh.boundary_length() / (2.0 * std::f64::consts::PI * loops);
    let allowance = rhs_sharp * (h / radius).powi(2);
    let slack_sharp = lhs - rhs_sharp;
    Ok(InequalityReport {
        n,
        m,
        area,
        perimeter,
        lhs,
        w_star,
        rhs_sharp,
        rhs_bound,
        rhs_nonsharp,
        slack_sharp,
        slack_bound: lhs - rhs_bound,
        slack_nonsharp: lhs - rhs_nonsharp,
        mesh_h: h,
        allowance,
        homothet_candidate: slack_sharp.abs() <= allowance,
        mean_curvature_residual: mesh.mean_curvature_residual(),
    })
}
