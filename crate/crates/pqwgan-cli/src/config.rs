//! The JSON configuration document.
//!
//! One flat object mirrors the generator and trainer configuration field
//! names; every field is optional and falls back to the MNIST 0/1 defaults.
//! Unknown keys are rejected so a typo cannot silently revert a
//! hyperparameter to its default.

use std::path::Path;

use serde::Deserialize;
use serde::Serialize;

use pqwgan::generator::{GeneratorConfig, PriorKind};
use pqwgan::trainer::TrainConfig;
use pqwgan::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorDoc {
    Uniform01,
    StandardNormal,
}

impl From<PriorDoc> for PriorKind {
    fn from(p: PriorDoc) -> Self {
        match p {
            PriorDoc::Uniform01 => PriorKind::Uniform01,
            PriorDoc::StandardNormal => PriorKind::StandardNormal,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigDoc {
    pub n_patches: usize,
    pub n_data: usize,
    pub n_ancilla: usize,
    pub n_layers: usize,
    pub image_height: usize,
    pub image_width: usize,
    pub patch_height: usize,
    pub patch_width: usize,
    pub prior_kind: PriorDoc,
    pub lambda_gp: f64,
    pub n_critic: usize,
    pub batch_size: usize,
    pub generator_iterations: usize,
    pub lr_generator: f64,
    pub lr_critic: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    pub checkpoint_every: usize,
}

impl Default for ConfigDoc {
    fn default() -> Self {
        let g = GeneratorConfig::default_28x28();
        let t = TrainConfig::default();
        Self {
            n_patches: g.n_patches,
            n_data: g.n_data,
            n_ancilla: g.n_ancilla,
            n_layers: g.n_layers,
            image_height: g.image_height,
            image_width: g.image_width,
            patch_height: g.patch_height,
            patch_width: g.patch_width,
            prior_kind: PriorDoc::Uniform01,
            lambda_gp: t.lambda_gp,
            n_critic: t.n_critic,
            batch_size: t.batch_size,
            generator_iterations: t.generator_iterations,
            lr_generator: t.lr_generator,
            lr_critic: t.lr_critic,
            beta1: t.beta1,
            beta2: t.beta2,
            adam_epsilon: t.adam_epsilon,
            seed: t.seed,
            checkpoint_every: t.checkpoint_every,
        }
    }
}

impl ConfigDoc {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    /// Apply a JSON object of overrides on top of this document.
    pub fn merged(&self, overrides: &serde_json::Value) -> Result<Self> {
        let mut value = serde_json::to_value(self)
            .map_err(|e| Error::Config(format!("config serialization: {e}")))?;
        let obj = value
            .as_object_mut()
            .expect("a struct serializes to an object");
        let overrides = overrides.as_object().ok_or_else(|| {
            Error::Config("overrides must be a JSON object".into())
        })?;
        for (k, v) in overrides {
            obj.insert(k.clone(), v.clone());
        }
        serde_json::from_value(value).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn generator_config(&self) -> GeneratorConfig {
        GeneratorConfig {
            n_patches: self.n_patches,
            n_data: self.n_data,
            n_ancilla: self.n_ancilla,
            n_layers: self.n_layers,
            image_height: self.image_height,
            image_width: self.image_width,
            patch_height: self.patch_height,
            patch_width: self.patch_width,
            prior: self.prior_kind.into(),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lambda_gp: self.lambda_gp,
            n_critic: self.n_critic,
            batch_size: self.batch_size,
            generator_iterations: self.generator_iterations,
            lr_generator: self.lr_generator,
            lr_critic: self.lr_critic,
            beta1: self.beta1,
            beta2: self.beta2,
            adam_epsilon: self.adam_epsilon,
            seed: self.seed,
            checkpoint_every: self.checkpoint_every,
        }
    }

    /// Validate both halves, surfacing generator errors first.
    pub fn validate(&self) -> Result<()> {
        self.generator_config().validate()?;
        self.train_config().validate()
    }
}
