//! Experiment configuration: a TOML file merged with command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use lrperc::estimators::ConductanceLaw;
use lrperc::model::ModelConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Sample,
    Conductance,
    Project,
    Decay,
    DeltaEff,
    LongEdges,
    EdgesAboveZero,
    Walk,
    Verdict,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Conductance => "conductance",
            Command::Project => "project",
            Command::Decay => "decay",
            Command::DeltaEff => "delta-eff",
            Command::LongEdges => "long-edges",
            Command::EdgesAboveZero => "edges-above-zero",
            Command::Walk => "walk",
            Command::Verdict => "verdict",
        }
    }

    fn default_replicas(self) -> u64 {
        match self {
            Command::Decay => 1000,
            Command::LongEdges | Command::EdgesAboveZero => 10_000,
            Command::Walk => 100_000,
            Command::Verdict => 2000,
            _ => 1,
        }
    }
}

/// `[estimator]` section. Every field is optional in the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub radii: Option<Vec<i64>>,
    #[serde(alias = "n_grid")]
    pub scales: Option<Vec<f64>>,
    pub replicas: Option<u64>,
    pub decay_replicas: Option<u64>,
    pub max_steps: Option<u64>,
    pub quadrature_resolution: Option<usize>,
    /// Dyadic scale indices for the long-edge ladder.
    pub ks: Option<Vec<u32>>,
    /// Edge-list file to read instead of sampling the model.
    pub input: Option<PathBuf>,
    pub source: Option<Vec<i64>>,
    pub sink: Option<Vec<i64>>,
    pub origin: Option<i64>,
    pub radius: Option<i64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub master_seed: Option<u64>,
    pub model: Option<ModelConfig>,
    pub law: Option<ConductanceLaw>,
    #[serde(default)]
    pub estimator: EstimatorSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }
}

/// Values given on the command line; each overrides the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicas: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Fully resolved parameters. Everything except the output path and the
/// worker count goes into the digest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub master_seed: u64,
    pub model: ModelConfig,
    pub law: Option<ConductanceLaw>,
    pub radii: Vec<i64>,
    pub scales: Vec<f64>,
    pub replicas: u64,
    pub decay_replicas: u64,
    pub max_steps: u64,
    pub quadrature_resolution: usize,
    pub ks: Vec<u32>,
    pub input: Option<PathBuf>,
    pub source: Option<Vec<i64>>,
    pub sink: Option<Vec<i64>>,
    pub origin: i64,
    pub radius: Option<i64>,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn resolve(command: Command, file: FileConfig, flags: Overrides) -> Result<ExperimentConfig, CliError> {
        let master_seed = flags.seed.or(file.master_seed).unwrap_or(0);
        let mut model = file.model.unwrap_or_else(|| ModelConfig::homogeneous(64, 1.0, 3.0, 0));
        model.seed = master_seed;
        let est = file.estimator;
        let config = ExperimentConfig {
            command,
            master_seed,
            model,
            law: file.law,
            radii: est.radii.unwrap_or_else(|| vec![4, 8, 16, 32, 64]),
            scales: est.scales.unwrap_or_else(|| lrperc::estimators::delta_eff::DEFAULT_SCALES.to_vec()),
            replicas: flags.replicas.or(est.replicas).unwrap_or(command.default_replicas()),
            decay_replicas: est.decay_replicas.unwrap_or(200),
            max_steps: est.max_steps.unwrap_or(1_000_000),
            quadrature_resolution: est
                .quadrature_resolution
                .unwrap_or(lrperc::estimators::delta_eff::DEFAULT_RESOLUTION),
            ks: est.ks.unwrap_or_else(|| (1..=6).collect()),
            input: est.input,
            source: est.source,
            sink: est.sink,
            origin: est.origin.unwrap_or(0),
            radius: est.radius,
            format: flags.format.or(file.output.format).unwrap_or(Format::Csv),
            out: flags.out.or(file.output.path),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |what: &str| Err(CliError::Config(format!("{what} must be positive")));
        if self.replicas == 0 {
            return bad("replicas");
        }
        if self.decay_replicas == 0 {
            return bad("decay_replicas");
        }
        if self.max_steps == 0 {
            return bad("max_steps");
        }
        if self.quadrature_resolution == 0 {
            return bad("quadrature_resolution");
        }
        if self.radii.iter().any(|&r| r < 1) || self.radius.is_some_and(|r| r < 1) {
            return bad("radii");
        }
        if self.scales.iter().any(|&s| !(s > 0.0)) {
            return bad("scales");
        }
        self.model.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(law) = &self.law {
            law.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))[..16].to_string()
    }
}
