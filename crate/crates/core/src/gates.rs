//! Tolerance gates, kept as data in a TOML file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// The built-in gate file.
pub const DEFAULT_GATES: &str = include_str!("../gates/default.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gates {
    pub bessel: BesselGates,
    pub trace: TraceGates,
    pub nystrom: NystromGates,
    pub residual: ResidualGates,
    pub frequency: FrequencyGates,
    pub structure: StructureGates,
    pub engines: EngineGates,
    pub mu: MuGates,
    pub kappa: KappaGates,
    pub decay: DecayGates,
    pub power_law: PowerLawGates,
    pub determinism: DeterminismGates,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesselGates {
    pub first_zero: f64,
    pub first_zero_tol: f64,
    pub residual_max: f64,
    pub zero_count: usize,
    pub spacing_at: usize,
    pub spacing_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceGates {
    pub terms: usize,
    pub trace_tol: f64,
    pub trace_sq_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NystromGates {
    pub cutoff: f64,
    pub grid: usize,
    pub count: usize,
    pub rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualGates {
    pub count: usize,
    pub rel_tol: f64,
    pub probe_factor: f64,
    pub probe_min: f64,
    pub grid_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGates {
    pub n: usize,
    pub samples: u64,
    pub z_max: f64,
    pub mismatch_z_min: f64,
    pub mismatch_max_vertex: usize,
    pub visit_probes: Vec<usize>,
    pub edge_probes: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureGates {
    pub n_small: usize,
    pub n_large: usize,
    pub alpha: f64,
    pub replicates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineGates {
    pub n: usize,
    pub alpha: f64,
    pub runs: u64,
    pub poisson_n: usize,
    pub poisson_samples: u64,
    pub level: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuGates {
    pub n: usize,
    pub alpha: f64,
    pub replicates: usize,
    pub ranks: usize,
    pub finite_rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaGates {
    pub n_grid: Vec<usize>,
    pub alpha: f64,
    pub eps_exponent: String,
    pub replicates: usize,
    pub ranks: usize,
    pub finite_rel_tol: f64,
    pub limit_rel_tol: f64,
    /// Allowed growth of the limit error between sweep points, in
    /// standard errors of the difference.
    pub trend_sigmas: f64,
    pub robust_sigmas: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayGates {
    pub k_check: usize,
    pub k_max: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawGates {
    pub n: usize,
    pub alpha: f64,
    pub decades: f64,
    pub slope_min: f64,
    pub slope_max: f64,
    pub zipf_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeterminismGates {
    pub n: usize,
    pub alpha: f64,
    pub replicates: usize,
    pub threads: Vec<usize>,
}

impl Gates {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

impl Default for Gates {
    fn default() -> Self {
        Gates::parse(DEFAULT_GATES).expect("built-in gate file parses")
    }
}

/// Outcome of one gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl GateResult {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        GateResult {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}
