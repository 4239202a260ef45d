//! JSON persistence for a trained color table and linear heuristic.

use serde::{Deserialize, Serialize};

use crate::ccwl::{CcwlModel, ColorTable, ColorTableError, Pooling};
use crate::training::{LinearHeuristic, Method};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub domain: String,
    pub training_instances: Vec<String>,
    #[serde(default)]
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub ccwl: CcwlModel,
    pub heuristic: LinearHeuristic,
    pub provenance: Provenance,
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("malformed model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("color table: {0}")]
    Table(#[from] ColorTableError),
    #[error("{0}")]
    Field(String),
    #[error("expected {expected} weights for {colors} colors, found {found}")]
    WeightLength { expected: usize, colors: usize, found: usize },
    #[error("weights and bias must be finite")]
    NonFinite,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCcwl {
    #[serde(rename = "L")]
    iterations: usize,
    pooling: String,
    color_table: Vec<(String, u32)>,
}

#[derive(Serialize, Deserialize)]
struct RawHeuristic {
    method: String,
    weights: Vec<f64>,
    bias: f64,
    #[serde(default)]
    objective: f64,
    #[serde(default)]
    iterations: usize,
    #[serde(default = "yes")]
    converged: bool,
}

fn yes() -> bool {
    true
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    format_version: u32,
    ccwl: RawCcwl,
    heuristic: RawHeuristic,
    #[serde(default)]
    provenance: Provenance,
}

impl ModelFile {
    pub fn to_json(&self) -> String {
        let raw = RawModel {
            format_version: FORMAT_VERSION,
            ccwl: RawCcwl {
                iterations: self.ccwl.iterations,
                pooling: self.ccwl.pooling.name().to_string(),
                color_table: self.ccwl.table.entries(),
            },
            heuristic: RawHeuristic {
                method: self.heuristic.method.name().to_string(),
                weights: self.heuristic.weights.clone(),
                bias: self.heuristic.bias,
                objective: self.heuristic.objective,
                iterations: self.heuristic.iterations,
                converged: self.heuristic.converged,
            },
            provenance: self.provenance.clone(),
        };
        let mut text = serde_json::to_string_pretty(&raw).expect("model serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let raw: RawModel = serde_json::from_str(text)?;
        if raw.format_version != FORMAT_VERSION {
            return Err(ModelError::Version(raw.format_version));
        }
        let pooling: Pooling = raw.ccwl.pooling.parse().map_err(ModelError::Field)?;
        let method: Method = raw.heuristic.method.parse().map_err(ModelError::Field)?;
        let table = ColorTable::from_entries(&raw.ccwl.color_table)?;
        let ccwl = CcwlModel { iterations: raw.ccwl.iterations, table, pooling };
        let h = raw.heuristic;
        if h.weights.len() != ccwl.feature_len() {
            return Err(ModelError::WeightLength {
                expected: ccwl.feature_len(),
                colors: ccwl.num_colors(),
                found: h.weights.len(),
            });
        }
        if !h.bias.is_finite() || h.weights.iter().any(|w| !w.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        Ok(ModelFile {
            ccwl,
            heuristic: LinearHeuristic {
                weights: h.weights,
                bias: h.bias,
                method,
                objective: h.objective,
                iterations: h.iterations,
                converged: h.converged,
            },
            provenance: raw.provenance,
        })
    }
}
