//! Run configuration: scenario selection, per-scenario defaults, config-file
//! parsing, command-line overrides, and validation.
//!
//! Precedence is flags > file > defaults. List parameters (`theta_list`,
//! `sigma_list`) have no defaults: a scenario that consumes a list rejects an
//! empty one by field name, so every threshold that shaped a report was
//! spelled out by the caller and lands verbatim in the provenance header.

use crate::{CliError, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// The five named studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Exact end-to-end pipeline on a short homogeneous chain: synthesized
    /// end-site signal, FFT peak extraction, reconstruction.
    Demo,
    /// Weight-threshold truncation sweep on a homogeneous chain.
    Truncation,
    /// Random couplings in fixed ranges [0.9, 1.1] and [0.8, 1.2], light
    /// truncation, median distance over ground-truth seeds.
    CouplingDisorder,
    /// Gaussian eigenvalue jitter, ensemble-averaged reconstruction, median
    /// distance over ground-truth seeds; a sigma = 0 control is always run.
    EigenvalueJitter,
    /// Long disordered chains, exact spectra, reorthogonalized recursion;
    /// reports the worst relative error per chain.
    Roundtrip,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Demo,
        Scenario::Truncation,
        Scenario::CouplingDisorder,
        Scenario::EigenvalueJitter,
        Scenario::Roundtrip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Demo => "demo",
            Scenario::Truncation => "truncation",
            Scenario::CouplingDisorder => "coupling-disorder",
            Scenario::EigenvalueJitter => "eigenvalue-jitter",
            Scenario::Roundtrip => "roundtrip",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| {
                let known: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
                CliError::Config(format!(
                    "unknown scenario `{name}`: expected one of {}",
                    known.join(", ")
                ))
            })
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Fully resolved parameters for one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Chain length N; the chain has N-1 bonds.
    pub n_sites: usize,
    /// Coupling range. Homogeneous scenarios (demo, truncation) require
    /// j_low = j_high and use that value; coupling-disorder ignores the pair
    /// in favor of its fixed range comparison.
    pub j_low: f64,
    pub j_high: f64,
    /// Anisotropy of the spin-chain mapping; 0 gives zero site energies,
    /// nonzero gives coupling-dependent diagonal entries.
    pub delta: f64,
    /// Relative weight thresholds for truncation-style scenarios.
    pub theta_list: Vec<f64>,
    /// Jitter standard deviations for the ensemble scenario.
    pub sigma_list: Vec<f64>,
    /// Ensemble size per jitter condition, or the number of random chains
    /// for roundtrip.
    pub n_samples: usize,
    /// Ground-truth chains drawn per condition in the disorder and jitter
    /// scenarios; distances are aggregated by the median over these.
    pub n_seeds: usize,
    pub base_seed: u64,
    /// Relative error tolerance of the reconstruction-distance metric.
    pub distance_tol: f64,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
}

impl ExperimentConfig {
    /// Per-scenario defaults; list parameters stay empty on purpose.
    pub fn defaults(scenario: Scenario) -> Self {
        let (n_sites, j_low, j_high, n_samples, n_seeds) = match scenario {
            Scenario::Demo => (6, 1.0, 1.0, 1, 1),
            Scenario::Truncation => (100, 1.0, 1.0, 1, 1),
            Scenario::CouplingDisorder => (50, 0.9, 1.1, 1, 20),
            Scenario::EigenvalueJitter => (100, 0.9, 1.1, 2000, 20),
            Scenario::Roundtrip => (1000, 0.5, 1.5, 20, 1),
        };
        ExperimentConfig {
            scenario,
            n_sites,
            j_low,
            j_high,
            delta: 0.0,
            theta_list: Vec::new(),
            sigma_list: Vec::new(),
            n_samples,
            n_seeds,
            base_seed: 42,
            distance_tol: 0.05,
            output_dir: PathBuf::from("out"),
            emit_plots: false,
        }
    }

    /// Checks every scenario precondition; error messages name the field.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.n_sites < 2 {
            return fail(format!("n_sites = {} must be at least 2", self.n_sites));
        }
        if !(self.j_low > 0.0) || !self.j_low.is_finite() {
            return fail(format!("j_low = {} must be positive and finite", self.j_low));
        }
        if !(self.j_high >= self.j_low) || !self.j_high.is_finite() {
            return fail(format!(
                "j_high = {} must be finite and at least j_low = {}",
                self.j_high, self.j_low
            ));
        }
        if !self.delta.is_finite() {
            return fail(format!("delta = {} must be finite", self.delta));
        }
        if !(self.distance_tol > 0.0) || !self.distance_tol.is_finite() {
            return fail(format!(
                "distance_tol = {} must be positive and finite",
                self.distance_tol
            ));
        }
        for &theta in &self.theta_list {
            if !theta.is_finite() || !(0.0..1.0).contains(&theta) {
                return fail(format!("theta_list entry {theta} must lie in [0, 1)"));
            }
        }
        for &sigma in &self.sigma_list {
            if !sigma.is_finite() || sigma < 0.0 {
                return fail(format!(
                    "sigma_list entry {sigma} must be finite and nonnegative"
                ));
            }
        }
        let homogeneous = matches!(self.scenario, Scenario::Demo | Scenario::Truncation);
        if homogeneous && self.j_low != self.j_high {
            return fail(format!(
                "scenario {} is homogeneous: j_low must equal j_high, got {} and {}",
                self.scenario, self.j_low, self.j_high
            ));
        }
        let needs_theta = matches!(
            self.scenario,
            Scenario::Truncation | Scenario::CouplingDisorder
        );
        if needs_theta && self.theta_list.is_empty() {
            return fail(format!(
                "theta_list must be nonempty for scenario {}",
                self.scenario
            ));
        }
        if self.scenario == Scenario::EigenvalueJitter && self.sigma_list.is_empty() {
            return fail(format!(
                "sigma_list must be nonempty for scenario {}",
                self.scenario
            ));
        }
        let needs_seeds = matches!(
            self.scenario,
            Scenario::CouplingDisorder | Scenario::EigenvalueJitter
        );
        if needs_seeds && self.n_seeds == 0 {
            return fail(format!(
                "n_seeds = 0: scenario {} aggregates over at least one ground-truth seed",
                self.scenario
            ));
        }
        let needs_samples = matches!(
            self.scenario,
            Scenario::EigenvalueJitter | Scenario::Roundtrip
        );
        if needs_samples && self.n_samples == 0 {
            return fail(format!(
                "n_samples = 0: scenario {} needs at least one sample",
                self.scenario
            ));
        }
        Ok(())
    }
}

/// On-disk configuration: every field optional, unknown keys rejected. Field
/// names match [`ExperimentConfig`] exactly, so a provenance header echo
/// parses back through this type.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_high: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_seeds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emit_plots: Option<bool>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

impl From<&ExperimentConfig> for ConfigFile {
    fn from(config: &ExperimentConfig) -> Self {
        ConfigFile {
            scenario: Some(config.scenario.name().to_string()),
            n_sites: Some(config.n_sites),
            j_low: Some(config.j_low),
            j_high: Some(config.j_high),
            delta: Some(config.delta),
            theta_list: Some(config.theta_list.clone()),
            sigma_list: Some(config.sigma_list.clone()),
            n_samples: Some(config.n_samples),
            n_seeds: Some(config.n_seeds),
            base_seed: Some(config.base_seed),
            distance_tol: Some(config.distance_tol),
            output_dir: Some(config.output_dir.clone()),
            emit_plots: Some(config.emit_plots),
        }
    }
}

/// Command-line overrides; any field set here beats the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub scenario: Option<Scenario>,
    pub n_sites: Option<usize>,
    pub j_low: Option<f64>,
    pub j_high: Option<f64>,
    pub delta: Option<f64>,
    pub theta_list: Option<Vec<f64>>,
    pub sigma_list: Option<Vec<f64>>,
    pub n_samples: Option<usize>,
    pub n_seeds: Option<usize>,
    pub base_seed: Option<u64>,
    pub distance_tol: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub emit_plots: Option<bool>,
}

/// Merges flags over file over per-scenario defaults and validates the
/// result. The scenario itself must come from a flag or the file.
pub fn resolve(file: Option<ConfigFile>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let file = file.unwrap_or_default();
    let file_scenario = file.scenario.as_deref().map(Scenario::parse).transpose()?;
    let scenario = overrides.scenario.or(file_scenario).ok_or_else(|| {
        CliError::Config(
            "missing required field scenario: pass --scenario or set it in the config file"
                .to_string(),
        )
    })?;
    let d = ExperimentConfig::defaults(scenario);
    let config = ExperimentConfig {
        scenario,
        n_sites: overrides.n_sites.or(file.n_sites).unwrap_or(d.n_sites),
        j_low: overrides.j_low.or(file.j_low).unwrap_or(d.j_low),
        j_high: overrides.j_high.or(file.j_high).unwrap_or(d.j_high),
        delta: overrides.delta.or(file.delta).unwrap_or(d.delta),
        theta_list: overrides
            .theta_list
            .clone()
            .or(file.theta_list)
            .unwrap_or(d.theta_list),
        sigma_list: overrides
            .sigma_list
            .clone()
            .or(file.sigma_list)
            .unwrap_or(d.sigma_list),
        n_samples: overrides.n_samples.or(file.n_samples).unwrap_or(d.n_samples),
        n_seeds: overrides.n_seeds.or(file.n_seeds).unwrap_or(d.n_seeds),
        base_seed: overrides.base_seed.or(file.base_seed).unwrap_or(d.base_seed),
        distance_tol: overrides
            .distance_tol
            .or(file.distance_tol)
            .unwrap_or(d.distance_tol),
        output_dir: overrides
            .output_dir
            .clone()
            .or(file.output_dir)
            .unwrap_or(d.output_dir),
        emit_plots: overrides.emit_plots.or(file.emit_plots).unwrap_or(d.emit_plots),
    };
    config.validate()?;
    Ok(config)
}
