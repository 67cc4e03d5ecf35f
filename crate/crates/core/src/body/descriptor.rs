//! JSON descriptors for bodies (schema `anisoperi-body/1`).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{cut, glue, ConvexBody, CutRegion, Cylinder, Ellipsoid, HalfspacePolytope};
use crate::error::{Error, Result};
use crate::frame::{Frame, FrameDescriptor};

pub const BODY_SCHEMA: &str = "anisoperi-body/1";

/// Top-level document: a schema tag plus the descriptor tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyDocument {
    pub schema: String,
    #[serde(flatten)]
    pub body: BodyDescriptor,
}

impl BodyDocument {
    pub fn new(body: BodyDescriptor) -> Self {
        Self { schema: BODY_SCHEMA.to_string(), body }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        if doc.schema != BODY_SCHEMA {
            return Err(Error::Schema(format!("unsupported schema '{}', expected '{BODY_SCHEMA}'", doc.schema)));
        }
        Ok(doc)
    }

    pub fn build(&self) -> Result<ConvexBody> {
        self.body.build()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodyDescriptor {
    Ellipsoid {
        semi_axes: Vec<f64>,
        /// Row-major orthogonal matrix; identity when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<Vec<Vec<f64>>>,
    },
    Ball {
        dim: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    Polytope {
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
    Box {
        half_widths: Vec<f64>,
    },
    CrossPolytope {
        dim: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    Cylinder {
        dim: usize,
        disk_dim: usize,
        radius: f64,
        half_height: f64,
    },
    /// Wulff shape of a sampled support table; `Φ(-ν)` is taken equal to `Φ(ν)`.
    Wulff {
        directions: Vec<Vec<f64>>,
        values: Vec<f64>,
    },
    Glue {
        base: std::boxed::Box<BodyDescriptor>,
        with: std::boxed::Box<BodyDescriptor>,
        plane: FrameDescriptor,
    },
    Cut {
        base: std::boxed::Box<BodyDescriptor>,
        plane: FrameDescriptor,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shrink: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        region: Option<RegionDescriptor>,
    },
}

fn one() -> f64 {
    1.0
}

/// Polytope region `{y : |a_i · y| <= b_i}` in plane coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionDescriptor {
    pub normals: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

impl BodyDescriptor {
    pub fn build(&self) -> Result<ConvexBody> {
        Ok(match self {
            BodyDescriptor::Ellipsoid { semi_axes, rotation } => {
                let d = semi_axes.len();
                let q = match rotation {
                    None => DMatrix::identity(d, d),
                    Some(rows) => {
                        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                            return Err(Error::Schema(format!("rotation must be {d}x{d}")));
                        }
                        DMatrix::from_fn(d, d, |i, j| rows[i][j])
                    }
                };
                Ellipsoid::new(semi_axes.clone(), q)?.into()
            }
            BodyDescriptor::Ball { dim, radius } => Ellipsoid::ball(*dim, *radius)?.into(),
            BodyDescriptor::Polytope { normals, offsets } => {
                HalfspacePolytope::new(normals.clone(), offsets.clone())?.into()
            }
            BodyDescriptor::Box { half_widths } => HalfspacePolytope::axis_box(half_widths)?.into(),
            BodyDescriptor::CrossPolytope { dim, radius } => HalfspacePolytope::cross_polytope(*dim, *radius)?.into(),
            BodyDescriptor::Cylinder { dim, disk_dim, radius, half_height } => {
                Cylinder::new(*dim, *disk_dim, *radius, *half_height)?.into()
            }
            BodyDescriptor::Wulff { directions, values } => {
                if directions.len() != values.len() {
                    return Err(Error::Schema("wulff table: directions and values differ in length".into()));
                }
                let mut normals = Vec::with_capacity(directions.len());
                let mut offsets = Vec::with_capacity(values.len());
                for (u, &v) in directions.iter().zip(values) {
                    let l = crate::linalg::norm(u);
                    if !(l > 0.0) {
                        return Err(Error::Schema("wulff table: zero direction".into()));
                    }
                    normals.push(u.clone());
                    offsets.push(v);
                }
                // a non-unit direction u with value v means Φ(u/|u|) = v/|u|,
                // which is how the polytope constructor rescales rows
                HalfspacePolytope::new(normals, offsets)?.into()
            }
            BodyDescriptor::Glue { base, with, plane } => {
                glue(base.build()?, Frame::try_from(plane)?, with.build()?)?
            }
            BodyDescriptor::Cut { base, plane, shrink, region } => {
                let region = match (shrink, region) {
                    (Some(s), None) => CutRegion::Shrink(*s),
                    (None, Some(r)) => CutRegion::Polytope(HalfspacePolytope::new(r.normals.clone(), r.offsets.clone())?),
                    _ => return Err(Error::Schema("cut needs exactly one of 'shrink' or 'region'".into())),
                };
                cut(base.build()?, Frame::try_from(plane)?, region)?
            }
        })
    }
}
