//! Multi-configuration sweeps over a shared dataset.
//!
//! A sweep spec is a JSON document with a `base` config-override object, a
//! `dataset` selector, and a list of named runs, each carrying its own
//! overrides on top of `base`. Every run is validated before the first one
//! starts. Runs with `generator_iterations: 0` only report parameter
//! counts, which keeps architecture comparisons instant and dataset-free.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use pqwgan::data::{self, LabeledDataset, RangeConvention};
use pqwgan::generator::{count_parameters, GeneratorParams};
use pqwgan::trainer::{self, TrainingLog};
use pqwgan::{Error, Result};

use crate::config::ConfigDoc;
use crate::params_io;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "empty_object")]
    pub base: serde_json::Value,
    pub dataset: DatasetSpec,
    pub runs: Vec<RunSpec>,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(serde_json::Map::new())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub name: String,
    #[serde(default = "empty_object")]
    pub overrides: serde_json::Value,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// No dataset; only valid when no run actually trains.
    None,
    SyntheticBars {
        size: usize,
        per_class: usize,
        seed: u64,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
        classes: Vec<u8>,
        per_class: usize,
    },
}

pub fn load_spec(path: &Path) -> Result<SweepSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("sweep spec: {e}")))
}

#[derive(Debug)]
struct ResolvedRun {
    name: String,
    doc: ConfigDoc,
}

/// Merge and validate every run up front, so a typo in run 7 is caught
/// before run 1 spends minutes training.
fn resolve_runs(spec: &SweepSpec) -> Result<Vec<ResolvedRun>> {
    if spec.runs.is_empty() {
        return Err(Error::Config("sweep spec lists no runs".into()));
    }
    let base = ConfigDoc::default().merged(&spec.base)?;
    let mut resolved = Vec::with_capacity(spec.runs.len());
    let mut names = std::collections::HashSet::new();
    for run in &spec.runs {
        if run.name.is_empty()
            || !run
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(Error::Config(format!(
                "run name {:?} must be non-empty and use only [A-Za-z0-9_-]",
                run.name
            )));
        }
        if !names.insert(run.name.clone()) {
            return Err(Error::Config(format!("duplicate run name {:?}", run.name)));
        }
        let doc = base
            .merged(&run.overrides)
            .map_err(|e| Error::Config(format!("run {:?}: {e}", run.name)))?;
        doc.validate()
            .map_err(|e| Error::Config(format!("run {:?}: {e}", run.name)))?;
        if matches!(spec.dataset, DatasetSpec::None) && doc.generator_iterations > 0 {
            return Err(Error::Config(format!(
                "run {:?} trains for {} iterations but the sweep has no dataset",
                run.name, doc.generator_iterations
            )));
        }
        resolved.push(ResolvedRun {
            name: run.name.clone(),
            doc,
        });
    }
    Ok(resolved)
}

fn load_dataset(spec: &DatasetSpec) -> Result<Option<LabeledDataset>> {
    match spec {
        DatasetSpec::None => Ok(None),
        DatasetSpec::SyntheticBars {
            size,
            per_class,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok(Some(data::synthetic_bars(*size, *per_class, &mut rng)))
        }
        DatasetSpec::Idx {
            images,
            labels,
            classes,
            per_class,
        } => {
            let images = data::load_idx_images(images, RangeConvention::Unit)?;
            let labels = data::load_idx_labels(labels)?;
            let (images, labels) = data::filter_classes(&images, &labels, classes, *per_class)?;
            Ok(Some(LabeledDataset {
                images,
                labels,
                range: RangeConvention::Unit,
            }))
        }
    }
}

fn format_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// Execute the sweep, producing one sub-directory per run plus
/// `summary.csv` in `out`.
pub fn run_sweep(spec: &SweepSpec, out: &Path) -> Result<()> {
    let runs = resolve_runs(spec)?;
    let dataset = load_dataset(&spec.dataset)?;

    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut summary =
        String::from("name,n_patches,n_data,n_ancilla,n_layers,parameter_count,final_wasserstein\n");

    for run in &runs {
        let run_dir = out.join(&run.name);
        std::fs::create_dir_all(&run_dir).map_err(|e| Error::io(&run_dir, e))?;
        let gen_cfg = run.doc.generator_config();
        let tcfg = run.doc.train_config();

        let (params, log, wasserstein) = if tcfg.generator_iterations == 0 {
            // Architecture-only run: report the initialized parameters.
            let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
            let params = GeneratorParams::init_uniform(&gen_cfg, &mut rng);
            (params, TrainingLog::default(), None)
        } else {
            let dataset = dataset
                .as_ref()
                .expect("validated: training runs need a dataset");
            let output = trainer::train(&tcfg, &gen_cfg, dataset, |_| Ok(()))?;
            let w = output.log.last_wasserstein();
            (output.generator, output.log, w)
        };

        params_io::write_params(&params, &gen_cfg, &run_dir.join("final.params"))?;
        data::write_csv_log(&log, &run_dir.join("log.csv"))?;
        summary.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            run.name,
            gen_cfg.n_patches,
            gen_cfg.n_data,
            gen_cfg.n_ancilla,
            gen_cfg.n_layers,
            count_parameters(&gen_cfg),
            format_opt(wasserstein)
        ));
    }

    let summary_path = out.join("summary.csv");
    std::fs::write(&summary_path, summary).map_err(|e| Error::io(&summary_path, e))
}
