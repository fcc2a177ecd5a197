//! Patch-based quantum generator trained adversarially against a classical
//! critic.
//!
//! The crate is organized bottom-up:
//!
//! - [`qsim`]: dense statevector simulation with rotation gates, CNOTs,
//!   ancilla post-selection, and exact reverse-mode gradients.
//! - [`generator`]: the patch pipeline mapping latent vectors through
//!   parameterized sub-circuits to images.
//! - [`critic`]: leaky-ReLU MLPs with hand-derived first- and second-order
//!   gradients, including the gradient penalty.
//! - [`trainer`]: the WGAN-GP loop with Adam, deterministic for a fixed
//!   seed.
//! - [`data`]: IDX datasets, synthetic bars, PGM grids, and CSV logs.

pub mod critic;
pub mod data;
pub mod error;
pub mod generator;
pub mod qsim;
pub mod trainer;

pub use error::{Error, Result};
