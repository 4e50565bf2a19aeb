//! TOML run configuration. Every section rejects unknown keys and every
//! field has a default, so an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use avpref_core::policy::{ModelDims, TrainConfig};
use avpref_core::prefcore::{BetaCalibrator, RobustConfig, TextPairing, Tilt};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub tilt: Tilt,
    /// `(λ_y, λ_V, λ_A)`.
    pub lambdas: [f64; 3],
    pub beta: BetaSettings,
    pub dims: ModelDims,
    /// Half-width of the uniform weight initialization.
    pub init_scale: f64,
    pub train: TrainConfig,
    pub paths: Paths,
    /// Upper bound on worker threads; 0 means one per core.
    pub parallelism: usize,
    pub extractor: ClientSettings,
    pub responder: ClientSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tilt: Tilt::Theorem,
            lambdas: [1.0, 1.0, 0.8],
            beta: BetaSettings::default(),
            dims: ModelDims {
                vocab_size: 8,
                feature_dim: 4,
                context_window: 1,
            },
            init_scale: 0.1,
            train: TrainConfig::default(),
            paths: Paths::default(),
            parallelism: 0,
            extractor: ClientSettings::default(),
            responder: ClientSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    /// Seeded cosine similarity over toy token and feature embeddings.
    #[default]
    Cosine,
    /// Every pair scores 0.5, so β is constant.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaSettings {
    pub slope: f64,
    pub intercept: f64,
    pub similarity: SimilarityKind,
    pub text_pairing: TextPairing,
}

impl Default for BetaSettings {
    fn default() -> Self {
        Self {
            slope: 0.9,
            intercept: 0.1,
            similarity: SimilarityKind::Cosine,
            text_pairing: TextPairing::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub manifest: Option<PathBuf>,
    pub tables: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Non-secret settings of an HTTP client. URLs and tokens come from the
/// environment only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientSettings {
    pub model: Option<String>,
    pub timeout_secs: u64,
    pub max_attempts: u32,
}

impl Default for ClientSettings {
    fn default() -> Self {
        Self {
            model: None,
            timeout_secs: 60,
            max_attempts: 3,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn robust(&self) -> RobustConfig {
        RobustConfig {
            lambda_y: self.lambdas[0],
            lambda_v: self.lambdas[1],
            lambda_a: self.lambdas[2],
            tilt: self.tilt,
            rho_note: None,
        }
    }

    pub fn calibrator(&self) -> BetaCalibrator {
        let mut cal = match self.beta.similarity {
            SimilarityKind::Cosine => BetaCalibrator::cosine(
                self.dims.vocab_size,
                self.dims.feature_dim,
                avpref_core::rng::derive_seed(self.seed, "similarity"),
            ),
            SimilarityKind::Constant => BetaCalibrator::constant(),
        };
        cal.slope = self.beta.slope;
        cal.intercept = self.beta.intercept;
        cal.text_pairing = self.beta.text_pairing;
        cal
    }

    pub fn validate(&self) -> Result<()> {
        self.robust().validate().map_err(CliError::validation)?;
        self.dims.validate().map_err(CliError::validation)?;
        let (lo, hi) = (self.beta.intercept, self.beta.intercept + self.beta.slope);
        if !(lo > 0.0 && lo.is_finite() && hi.is_finite() && self.beta.slope >= 0.0) {
            return Err(CliError::validation(format!(
                "beta slope/intercept must give positive finite β, got slope {} intercept {}",
                self.beta.slope, self.beta.intercept
            )));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(CliError::validation(format!("init_scale must be >= 0, got {}", self.init_scale)));
        }
        if !(self.train.lr >= 0.0 && self.train.lr.is_finite()) || self.train.batch_size == 0 {
            return Err(CliError::validation("train.lr must be >= 0 and train.batch_size positive"));
        }
        if self.extractor.max_attempts == 0 || self.responder.max_attempts == 0 {
            return Err(CliError::validation("max_attempts must be at least 1"));
        }
        Ok(())
    }

    /// A rayon pool capped at `parallelism` threads.
    pub fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.parallelism)
            .build()
            .map_err(|e| CliError::Runtime(e.into()))
    }
}
