use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use coalisure::compression::CompressionOptions;
use coalisure::risk::{BetaSplit, CampiScale, Method, SplitStrategy};
use coalisure::zeta_core::SlackForm;
use coalisure::{Distribution, DistributionSpec, GameSpec};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Bad input: malformed or inconsistent configuration, unknown method,
/// invalid flag value. Reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum SampleCounts {
    Uniform(usize),
    PerAgent(Vec<usize>),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationSettings {
    pub trials: usize,
    pub fresh: usize,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        ValidationSettings {
            trials: 200,
            fresh: 100_000,
        }
    }
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("coalisure-out")
}

/// On-disk experiment description.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub game: GameSpec,
    pub distribution: DistributionSpec,
    pub samples_per_agent: SampleCounts,
    pub seed: u64,
    pub beta: f64,
    #[serde(default)]
    pub split: SplitStrategy,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Total violation level for the support-rank certificate.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub validation: ValidationSettings,
    #[serde(default)]
    pub compression: CompressionOptions,
    #[serde(default)]
    pub campi_scale: CampiScale,
    #[serde(default)]
    pub slack_form: SlackForm,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub methods: Option<String>,
    pub trials: Option<usize>,
    pub fresh: Option<usize>,
    pub samples: Option<PathBuf>,
}

/// A checked configuration with overrides applied.
pub struct Settings {
    pub game: GameSpec,
    pub distribution: Distribution,
    pub samples_per_agent: Vec<usize>,
    pub seed: u64,
    pub beta: f64,
    pub split: SplitStrategy,
    pub methods: Vec<Method>,
    pub epsilon: Option<f64>,
    pub validation: ValidationSettings,
    pub compression: CompressionOptions,
    pub campi_scale: CampiScale,
    pub slack_form: SlackForm,
    pub output_dir: PathBuf,
    pub samples_path: PathBuf,
}

pub fn parse_methods(list: &str) -> anyhow::Result<Vec<Method>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m: Method = item
            .parse()
            .map_err(|_| config_err(format!("unknown method {item:?}")))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(config_err("empty method list"));
    }
    Ok(out)
}

impl Settings {
    pub fn load(path: &Path, ov: &Overrides) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Settings::from_config(cfg, ov)
    }

    pub fn from_config(cfg: ExperimentConfig, ov: &Overrides) -> anyhow::Result<Self> {
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(config_err(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        let n = cfg.game.n_agents();
        let distribution =
            Distribution::new(cfg.distribution).map_err(|e| config_err(e.to_string()))?;
        if distribution.dim() != cfg.game.uncertainty_dim() {
            return Err(config_err(format!(
                "distribution dimension {} differs from the game's {}",
                distribution.dim(),
                cfg.game.uncertainty_dim()
            )));
        }
        let samples_per_agent = match cfg.samples_per_agent {
            SampleCounts::Uniform(k) => vec![k; n],
            SampleCounts::PerAgent(v) => v,
        };
        if samples_per_agent.len() != n || samples_per_agent.contains(&0) {
            return Err(config_err(format!(
                "samples_per_agent needs {n} positive entries"
            )));
        }
        BetaSplit::new(cfg.beta, cfg.split.clone(), &samples_per_agent)
            .map_err(|e| config_err(e.to_string()))?;
        let methods = match &ov.methods {
            Some(list) => parse_methods(list)?,
            None => cfg.methods,
        };
        if methods.contains(&Method::Thm3) && !cfg.epsilon.is_some_and(|e| e > 0.0 && e < 1.0) {
            return Err(config_err("thm3 needs an epsilon in (0, 1)"));
        }
        let validation = ValidationSettings {
            trials: ov.trials.unwrap_or(cfg.validation.trials),
            fresh: ov.fresh.unwrap_or(cfg.validation.fresh),
        };
        if validation.trials == 0 || validation.fresh == 0 {
            return Err(config_err("trials and fresh must be positive"));
        }
        let output_dir = ov.out.clone().unwrap_or(cfg.output_dir);
        let samples_path = ov
            .samples
            .clone()
            .unwrap_or_else(|| output_dir.join("samples.csv"));
        Ok(Settings {
            game: cfg.game,
            distribution,
            samples_per_agent,
            seed: ov.seed.unwrap_or(cfg.seed),
            beta: cfg.beta,
            split: cfg.split,
            methods,
            epsilon: cfg.epsilon,
            validation,
            compression: cfg.compression,
            campi_scale: cfg.campi_scale,
            slack_form: cfg.slack_form,
            output_dir,
            samples_path,
        })
    }
}
