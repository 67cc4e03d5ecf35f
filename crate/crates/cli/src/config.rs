//! Experiment configuration (schema `anisoperi-experiment/1`).

use serde::{Deserialize, Serialize};

use anisoperi::body::BodyDescriptor;
use anisoperi::mesh::MeshKind;

pub const CONFIG_SCHEMA: &str = "anisoperi-experiment/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<BodyDescriptor>,
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub body_info: BodyInfoConfig,
    #[serde(default)]
    pub density: DensityConfig,
    #[serde(default)]
    pub xray: XrayConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshSource>,
    /// Lower bound on the density supremum used by `verify`; computed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_lower: Option<f64>,
    #[serde(default)]
    pub transport: TransportConfig,
    #[serde(default)]
    pub john: JohnConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BodyInfoConfig {
    pub support_samples: usize,
    pub membership_samples: usize,
}

impl Default for BodyInfoConfig {
    fn default() -> Self {
        Self { support_samples: 16, membership_samples: 1000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityChoice {
    Codim1,
    Codim2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensityConfig {
    pub kind: DensityChoice,
    pub sigma: f64,
    pub fibers: usize,
    pub tol: f64,
    pub quadrature_order: usize,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self { kind: DensityChoice::Codim1, sigma: 0.999, fibers: 10_000, tol: 1e-6, quadrature_order: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct XrayConfig {
    pub res: usize,
    pub fibers: usize,
    pub method: String,
    pub iterations: usize,
    pub audit_fibers: usize,
    pub densify: bool,
    pub offset_spacing: f64,
    pub bundle_spacing: f64,
    pub memory_cap_mb: usize,
    /// Resolutions for the strictness table; empty runs a single solve.
    pub ladder: Vec<usize>,
    /// Also write the program rows (CSR) to the output directory.
    pub write_program: bool,
}

impl Default for XrayConfig {
    fn default() -> Self {
        Self {
            res: 64,
            fibers: 360,
            method: "mw".into(),
            iterations: 1500,
            audit_fibers: 10_000,
            densify: true,
            offset_spacing: 0.5,
            bundle_spacing: 0.5,
            memory_cap_mb: 2048,
            ladder: Vec::new(),
            write_program: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    Generate {
        surface: MeshKind,
        h: f64,
    },
    Off {
        path: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportConfig {
    pub samples: usize,
    pub delta: Option<f64>,
    pub region_scale: Option<f64>,
    pub tol: Option<f64>,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self { samples: 1000, delta: None, region_scale: None, tol: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JohnConfig {
    pub tol: f64,
    pub samples: usize,
    pub facet_budget: usize,
}

impl Default for JohnConfig {
    fn default() -> Self {
        Self { tol: 1e-6, samples: 10_000, facet_budget: 4000 }
    }
}
