//! Voxel linear programs for the supremum of `∫f` over X-ray feasible densities.

pub mod grid;
pub mod program;
pub mod solve;
pub mod audit;

pub use grid::{VoxelClass, VoxelGrid};
pub use program::{build_program, FiberSpec, ProgramOptions, SparseRows, VoxelProgram};
pub use solve::{solve, LpSolution, SolveMethod, SolveOptions};
pub use audit::{audit, densify, run_xray, strictness_experiment, Certificate, GapTrend, StrictnessReport, XrayOptions, XrayRun};
