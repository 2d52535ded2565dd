//! Experiment configuration and instance loading.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crystal_qaoa::{IsingModel, LatticeInstanceSpec, LinearRampParams};

/// Angle-setting strategies available to `run` sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Instance-independent linear schedule, no optimization.
    Fixed,
    /// Quasi-Newton optimization of all 2p angles from the fixed-angle start.
    FullOpt,
    /// Derivative-free search over the four linear-ramp parameters.
    LinearRamp,
    /// Derivative-free search over the two γ parameters, β held fixed.
    GammaOnly,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Fixed => "fixed",
            Strategy::FullOpt => "full-opt",
            Strategy::LinearRamp => "linear-ramp",
            Strategy::GammaOnly => "gamma-only",
        }
    }
}

/// One experiment sweep: instances × strategies × depths. The JSON config
/// file mirrors this struct field for field.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Instance files or lattice spec files (distinguished by content).
    pub instances: Vec<PathBuf>,
    pub strategies: Vec<Strategy>,
    pub depths: Vec<usize>,
    pub shots: u64,
    /// Master seed; every RNG stream is derived from it and a stream label.
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Concurrent sweep cells; defaults to the number of cores.
    pub workers: Option<usize>,
    /// Qubit ceiling for both simulation and exhaustive search.
    pub max_qubits: usize,
    /// Also emit the uniform random-sampling baseline per instance.
    pub random_baseline: bool,
    pub budget_full: usize,
    pub budget_ramp: usize,
    pub budget_gamma_only: usize,
    /// Fixed-angle schedule parameters (also the optimizer starting point).
    pub ramp_params: LinearRampParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            instances: Vec::new(),
            strategies: Vec::new(),
            depths: Vec::new(),
            shots: 100_000,
            seed: 1,
            out_dir: PathBuf::from("out"),
            workers: None,
            max_qubits: crystal_qaoa::DEFAULT_QUBIT_LIMIT,
            random_baseline: false,
            budget_full: crystal_qaoa::DEFAULT_BUDGET_FULL,
            budget_ramp: crystal_qaoa::DEFAULT_BUDGET_RAMP,
            budget_gamma_only: crystal_qaoa::DEFAULT_BUDGET_GAMMA_ONLY,
            ramp_params: LinearRampParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances.is_empty() {
            bail!("no instances given");
        }
        if self.strategies.is_empty() {
            bail!("no strategies given");
        }
        if self.depths.is_empty() || self.depths.contains(&0) {
            bail!("depths must be a nonempty list of p >= 1");
        }
        if self.shots < 1 {
            bail!("shots must be >= 1");
        }
        Ok(())
    }
}

/// Instance file stem reduced to filename-safe characters.
pub fn instance_id(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".to_string());
    stem.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' || c == '_' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

/// Load a model from either an instance file or a lattice spec file,
/// sniffing the schema by its fields.
pub fn load_model(path: &Path) -> Result<IsingModel> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    let model = if value.get("lattice_constant").is_some() {
        LatticeInstanceSpec::from_json_str(&text)
            .and_then(|spec| spec.assemble())
            .with_context(|| format!("compiling lattice spec {}", path.display()))?
    } else {
        IsingModel::from_json_str(&text)
            .with_context(|| format!("loading instance {}", path.display()))?
    };
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip_with_defaults() {
        let json = r#"{ "instances": ["a.json"], "strategies": ["fixed", "full-opt"], "depths": [5] }"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.shots, 100_000);
        assert_eq!(cfg.strategies, vec![Strategy::Fixed, Strategy::FullOpt]);
        cfg.validate().unwrap();
    }

    #[test]
    fn ids_are_filename_safe() {
        assert_eq!(instance_id(Path::new("dir/fcc 2x2x2.json")), "fcc-2x2x2");
        assert_eq!(instance_id(Path::new("n10_seed1.json")), "n10_seed1");
    }
}
