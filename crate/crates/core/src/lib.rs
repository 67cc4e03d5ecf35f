//! Convex bodies, Wulff shapes, X-ray constrained densities and mesh-based
//! checks of anisotropic isoperimetric inequalities for minimal submanifolds.

pub mod body;
pub mod density;
pub mod error;
pub mod frame;
pub mod john;
pub mod linalg;
pub mod mesh;
pub mod projection;
pub mod quadrature;
pub mod sampling;
pub mod transport;
pub mod xray;

pub use body::{ConvexBody, Ellipsoid, HalfspacePolytope, Membership, SupportFunction};
pub use error::{Error, Result};
pub use frame::Frame;
pub use mesh::{InequalityReport, MeshSurface};
pub use transport::{CoveringReport, NeumannSolution};
pub use xray::{LpSolution, VoxelGrid, VoxelProgram};
