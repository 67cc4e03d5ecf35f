//! Shared fixtures for the benchmarks.

use anisoperi::body::{ConvexBody, Ellipsoid};
use anisoperi::mesh::{generate, MeshKind, MeshSurface};

pub fn ellipse() -> Ellipsoid {
    Ellipsoid::axis_aligned(&[0.8, 1.4]).unwrap()
}

pub fn ball3() -> ConvexBody {
    Ellipsoid::ball(3, 1.0).unwrap().into()
}

pub fn disk_mesh(h: f64) -> MeshSurface {
    generate(&MeshKind::FlatDisk { dim: 3, radius: 1.0 }, h).unwrap()
}
