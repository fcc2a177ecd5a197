//! Command-line interface: train, generate, interpolate, sweep, and
//! count-params, all driven by one JSON configuration document.
//!
//! Exit codes: 0 on success, 2 for usage/configuration problems, 3 for
//! runtime failures (I/O, post-selection failure, training aborts).

mod config;
mod manifest;
mod params_io;
mod sweep;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pqwgan::critic::Mlp;
use pqwgan::data::{self, LabeledDataset, RangeConvention};
use pqwgan::generator::{self, count_parameters, GeneratorConfig, GeneratorParams, ImageTensor};
use pqwgan::trainer::{self, sample_prior, Checkpoint};
use pqwgan::{Error, Result};

use config::ConfigDoc;
use manifest::{DatasetManifest, RunManifest};

#[derive(Parser)]
#[command(
    name = "pqwgan",
    version,
    about = "Patch quantum generator with WGAN-GP training"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a generator and critic on an IDX dataset.
    Train {
        /// JSON configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for manifest, checkpoints, grids, and logs.
        #[arg(long)]
        out: PathBuf,
        /// Override the seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// IDX image file (magic 0x00000803).
        #[arg(long)]
        dataset_images: PathBuf,
        /// IDX label file (magic 0x00000801).
        #[arg(long)]
        dataset_labels: PathBuf,
        /// Classes to keep, comma-separated.
        #[arg(long, value_delimiter = ',', default_values_t = [0u8, 1u8])]
        classes: Vec<u8>,
        /// Samples kept per class, in file order.
        #[arg(long, default_value_t = 1000)]
        per_class: usize,
    },
    /// Sample images from a trained parameter file into a PGM grid.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Parameter file written by train or sweep.
        #[arg(long)]
        params: PathBuf,
        /// Number of images to sample.
        #[arg(long, default_value_t = 25)]
        n: usize,
        /// Seed for the latent draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output PGM path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render the latent-space line between two points as an image strip.
    Interpolate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        params: PathBuf,
        /// Seed drawing the first endpoint from the prior.
        #[arg(long, conflicts_with = "z_a")]
        seed_a: Option<u64>,
        /// Seed drawing the second endpoint from the prior.
        #[arg(long, conflicts_with = "z_b")]
        seed_b: Option<u64>,
        /// Explicit first endpoint, comma-separated angles.
        #[arg(long)]
        z_a: Option<String>,
        /// Explicit second endpoint, comma-separated angles.
        #[arg(long)]
        z_b: Option<String>,
        /// Number of equal segments between the endpoints.
        #[arg(long, default_value_t = 10)]
        segments: usize,
        /// Output PGM path (a 1 x segments+1 strip).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every configuration in a sweep spec and summarize.
    Sweep {
        /// JSON sweep specification.
        #[arg(long)]
        sweep_spec: PathBuf,
        /// Output directory; one sub-directory per run plus summary.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print parameter counts for a configuration.
    CountParams {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        let code = match e {
            Error::Config(_) | Error::Parse { .. } | Error::Shape(_) => 2,
            _ => 3,
        };
        std::process::exit(code);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train {
            config,
            out,
            seed,
            dataset_images,
            dataset_labels,
            classes,
            per_class,
        } => cmd_train(
            &config,
            &out,
            seed,
            &dataset_images,
            &dataset_labels,
            &classes,
            per_class,
        ),
        Command::Generate {
            config,
            params,
            n,
            seed,
            out,
        } => cmd_generate(&config, &params, n, seed, &out),
        Command::Interpolate {
            config,
            params,
            seed_a,
            seed_b,
            z_a,
            z_b,
            segments,
            out,
        } => cmd_interpolate(&config, &params, seed_a, seed_b, z_a, z_b, segments, &out),
        Command::Sweep { sweep_spec, out } => {
            let spec = sweep::load_spec(&sweep_spec)?;
            sweep::run_sweep(&spec, &out)
        }
        Command::CountParams { config } => cmd_count_params(&config),
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Generate a fixed 5x5 grid of samples with a seed derived from the
/// training seed and iteration, independent of the training RNG stream.
fn write_sample_grid(
    params: &GeneratorParams,
    cfg: &GeneratorConfig,
    seed: u64,
    path: &Path,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = Vec::with_capacity(25);
    for _ in 0..25 {
        let z = sample_prior(cfg.prior, cfg.n_qubits(), &mut rng);
        images.push(generator::generate(params, &z, cfg)?);
    }
    data::write_image_grid(&images, 5, 5, RangeConvention::Unit, path)
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
    dataset_images: &Path,
    dataset_labels: &Path,
    classes: &[u8],
    per_class: usize,
) -> Result<()> {
    let mut doc = ConfigDoc::load(config_path)?;
    if let Some(seed) = seed {
        doc.seed = seed;
    }
    doc.validate()?;
    if classes.is_empty() {
        return Err(Error::Config("at least one class is required".into()));
    }
    if per_class == 0 {
        return Err(Error::Config("per_class must be positive".into()));
    }
    for path in [dataset_images, dataset_labels] {
        if !path.exists() {
            return Err(Error::Config(format!(
                "dataset path {} does not exist",
                path.display()
            )));
        }
    }

    create_dir(out)?;
    create_dir(&out.join("checkpoints"))?;
    create_dir(&out.join("grids"))?;

    let config_str = config_path.display().to_string();
    let out_str = out.display().to_string();
    let images_str = dataset_images.display().to_string();
    let labels_str = dataset_labels.display().to_string();
    RunManifest::for_training(
        &config_str,
        &out_str,
        &doc,
        DatasetManifest {
            images: &images_str,
            labels: &labels_str,
            classes,
            per_class,
        },
    )?
    .write(&out.join("manifest.json"))?;

    let images = data::load_idx_images(dataset_images, RangeConvention::Unit)?;
    let labels = data::load_idx_labels(dataset_labels)?;
    let (images, labels) = data::filter_classes(&images, &labels, classes, per_class)?;
    let dataset = LabeledDataset {
        images,
        labels,
        range: RangeConvention::Unit,
    };

    let gen_cfg = doc.generator_config();
    let tcfg = doc.train_config();
    let log_path = out.join("log.csv");
    let checkpoint = |cp: &Checkpoint| -> Result<()> {
        let tag = format!("iter_{:06}", cp.iteration);
        params_io::write_params(
            cp.generator,
            &gen_cfg,
            &out.join("checkpoints").join(format!("{tag}.params")),
        )?;
        write_sample_grid(
            cp.generator,
            &gen_cfg,
            tcfg.seed.wrapping_add(cp.iteration as u64),
            &out.join("grids").join(format!("{tag}.pgm")),
        )?;
        data::write_csv_log(cp.log, &log_path)
    };

    let output = trainer::train(&tcfg, &gen_cfg, &dataset, checkpoint)?;

    params_io::write_params(&output.generator, &gen_cfg, &out.join("final.params"))?;
    data::write_csv_log(&output.log, &log_path)?;

    match output.log.last_wasserstein() {
        Some(w) => println!(
            "trained {} generator iterations; final Wasserstein estimate {w:.6}",
            tcfg.generator_iterations
        ),
        None => println!(
            "trained {} generator iterations",
            tcfg.generator_iterations
        ),
    }
    Ok(())
}

/// Smallest grid that fits `n` cells, as near to square as possible.
fn grid_shape(n: usize) -> (usize, usize) {
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    (rows, cols)
}

fn cmd_generate(
    config_path: &Path,
    params_path: &Path,
    n: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("n must be positive".into()));
    }
    let doc = ConfigDoc::load(config_path)?;
    doc.validate()?;
    let cfg = doc.generator_config();
    let params = params_io::read_params_for(&cfg, params_path)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = Vec::with_capacity(n);
    for _ in 0..n {
        let z = sample_prior(cfg.prior, cfg.n_qubits(), &mut rng);
        images.push(generator::generate(&params, &z, &cfg)?);
    }
    let (rows, cols) = grid_shape(n);
    // Pad a ragged last row with black tiles.
    while images.len() < rows * cols {
        images.push(ImageTensor::zeros(cfg.image_height, cfg.image_width));
    }
    data::write_image_grid(&images, rows, cols, RangeConvention::Unit, out)?;
    println!("wrote {rows}x{cols} grid of {n} samples to {}", out.display());
    Ok(())
}

fn parse_latent(text: &str, n_qubits: usize) -> Result<Vec<f64>> {
    let z: Vec<f64> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid latent component {t:?}")))
        })
        .collect::<Result<_>>()?;
    if z.len() != n_qubits {
        return Err(Error::Config(format!(
            "latent vector has {} components, config requires {n_qubits}",
            z.len()
        )));
    }
    Ok(z)
}

#[allow(clippy::too_many_arguments)]
fn cmd_interpolate(
    config_path: &Path,
    params_path: &Path,
    seed_a: Option<u64>,
    seed_b: Option<u64>,
    z_a: Option<String>,
    z_b: Option<String>,
    segments: usize,
    out: &Path,
) -> Result<()> {
    let doc = ConfigDoc::load(config_path)?;
    doc.validate()?;
    let cfg = doc.generator_config();
    let params = params_io::read_params_for(&cfg, params_path)?;
    let n = cfg.n_qubits();

    let endpoint = |seed: Option<u64>, z: Option<String>, which: &str| -> Result<Vec<f64>> {
        match (seed, z) {
            (_, Some(text)) => parse_latent(&text, n),
            (Some(seed), None) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok(sample_prior(cfg.prior, n, &mut rng))
            }
            (None, None) => Err(Error::Config(format!(
                "endpoint {which} needs either --seed-{which} or --z-{which}"
            ))),
        }
    };
    let z_a = endpoint(seed_a, z_a, "a")?;
    let z_b = endpoint(seed_b, z_b, "b")?;

    let frames = trainer::interpolate_latents(&z_a, &z_b, segments)?;
    let mut images = Vec::with_capacity(frames.len());
    for z in &frames {
        images.push(generator::generate(&params, z, &cfg)?);
    }
    data::write_image_grid(&images, 1, images.len(), RangeConvention::Unit, out)?;
    println!("wrote {}-frame strip to {}", images.len(), out.display());
    Ok(())
}

fn cmd_count_params(config_path: &Path) -> Result<()> {
    let doc = ConfigDoc::load(config_path)?;
    doc.validate()?;
    let cfg = doc.generator_config();
    let pixels = cfg.image_height * cfg.image_width;
    let critic = Mlp::critic(pixels)?;
    let baseline = Mlp::baseline_generator(cfg.n_qubits(), pixels)?;
    println!("generator parameters: {}", count_parameters(&cfg));
    println!("critic parameters: {}", critic.n_params());
    println!("baseline generator parameters: {}", baseline.n_params());
    Ok(())
}
