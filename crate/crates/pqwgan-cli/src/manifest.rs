//! The reproducibility record written before training starts.

use std::path::Path;

use serde::Serialize;

use pqwgan::critic::Mlp;
use pqwgan::generator::count_parameters;
use pqwgan::{Error, Result};

use crate::config::ConfigDoc;

/// Everything needed to re-run or audit a training invocation. Contains no
/// timestamps or host details, so identical invocations write identical
/// bytes.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub config_path: &'a str,
    pub output_directory: &'a str,
    pub seed: u64,
    pub generator_parameters: usize,
    pub critic_parameters: usize,
    pub dataset: DatasetManifest<'a>,
    pub config: &'a ConfigDoc,
}

#[derive(Debug, Serialize)]
pub struct DatasetManifest<'a> {
    pub images: &'a str,
    pub labels: &'a str,
    pub classes: &'a [u8],
    pub per_class: usize,
}

impl<'a> RunManifest<'a> {
    pub fn for_training(
        config_path: &'a str,
        output_directory: &'a str,
        doc: &'a ConfigDoc,
        dataset: DatasetManifest<'a>,
    ) -> Result<Self> {
        let gen_cfg = doc.generator_config();
        let critic = Mlp::critic(gen_cfg.image_height * gen_cfg.image_width)?;
        Ok(Self {
            command: "train",
            config_path,
            output_directory,
            seed: doc.seed,
            generator_parameters: count_parameters(&gen_cfg),
            critic_parameters: critic.n_params(),
            dataset,
            config: doc,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
