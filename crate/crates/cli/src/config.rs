use std::path::{Path, PathBuf};

use schrod_core::fsm::{CompactVector, SectionScheme};
use schrod_core::Potential;
use serde::{Deserialize, Serialize};

use crate::exit::Failure;

/// Reproductions known to `schrod reproduce`.
pub const REPRODUCTIONS: [&str; 4] = ["example-4-1", "example-4-2", "fibonacci-prefix", "integer-avoidance"];

pub const VERDICTS: [&str; 3] = ["applicable_observed", "failure_observed", "inconclusive"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_edge_width: Option<f64>,
}

/// One experiment. Command-line flags override the matching fields; the
/// resolved config is written next to the outputs as `config.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Potential>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SectionScheme>,
    /// Right-hand side for `fsm`; defaults to `e_0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<CompactVector>,
    /// Reproduction name for `reproduce`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Potentials drawn by `integer-avoidance`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potentials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub exploratory: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn check_command(&self, command: &str) -> Result<(), Failure> {
        match &self.command {
            Some(c) if c != command => Err(Failure::Usage(format!("config is for `{c}`, not `{command}`"))),
            _ => Ok(()),
        }
    }

    pub fn require_potential(&self) -> Result<&Potential, Failure> {
        self.potential.as_ref().ok_or_else(|| Failure::Usage("config has no `potential`".into()))
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances.clone().unwrap_or_default()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}
