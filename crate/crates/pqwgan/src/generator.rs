//! Patch-based quantum image generator.
//!
//! An image is produced by `n_patches` sub-generators that share one latent
//! vector. Each sub-generator encodes the latent entries as `R_y` rotations,
//! applies `n_layers` layers of per-qubit general rotations followed by a
//! CNOT chain over adjacent wires, post-selects the ancilla wires on zero,
//! and reads out the data-register basis probabilities. Probabilities are
//! normalized by their maximum, truncated to the patch's pixel count, and
//! the patches tile the image on a fixed grid.

use rand::Rng;

use crate::error::{Error, Result};
use crate::qsim::{self, Circuit, StateVector};

/// Distribution the latent vector is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    /// Independent draws from `[0, 1)`.
    Uniform01,
    /// Independent standard normal draws.
    StandardNormal,
}

/// Architecture of the patch generator.
///
/// `n_qubits = n_ancilla + n_data` per sub-generator; every sub-generator
/// carries `n_layers · n_qubits` general rotations (3 angles each).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_patches: usize,
    pub n_data: usize,
    pub n_ancilla: usize,
    pub n_layers: usize,
    pub image_height: usize,
    pub image_width: usize,
    pub patch_height: usize,
    pub patch_width: usize,
    pub prior: PriorKind,
}

impl GeneratorConfig {
    /// The 28×28 two-class default: 28 one-row patches, 7 data + 1 ancilla
    /// qubits, 8 layers, uniform prior.
    pub fn default_28x28() -> Self {
        Self {
            n_patches: 28,
            n_data: 7,
            n_ancilla: 1,
            n_layers: 8,
            image_height: 28,
            image_width: 28,
            patch_height: 1,
            patch_width: 28,
            prior: PriorKind::Uniform01,
        }
    }

    /// Wires per sub-generator.
    pub fn n_qubits(&self) -> usize {
        self.n_ancilla + self.n_data
    }

    /// Pixels per patch (`image_height · image_width / n_patches`).
    pub fn patch_pixels(&self) -> usize {
        self.patch_height * self.patch_width
    }

    /// Checks every structural constraint, naming the violated one.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_patches == 0 {
            return fail("n_patches must be at least 1".into());
        }
        if self.n_data == 0 {
            return fail("n_data must be at least 1".into());
        }
        if self.image_height == 0 || self.image_width == 0 {
            return fail(format!(
                "image dimensions must be positive, got {}x{}",
                self.image_height, self.image_width
            ));
        }
        if self.patch_height == 0 || self.patch_width == 0 {
            return fail(format!(
                "patch dimensions must be positive, got {}x{}",
                self.patch_height, self.patch_width
            ));
        }
        let n_qubits = self.n_qubits();
        if n_qubits > qsim::MAX_QUBITS {
            return fail(format!(
                "n_ancilla + n_data = {n_qubits} exceeds the register limit of {}",
                qsim::MAX_QUBITS
            ));
        }
        let pixels = self.image_height * self.image_width;
        if !pixels.is_multiple_of(self.n_patches) {
            return fail(format!(
                "n_patches ({}) must divide the pixel count ({pixels})",
                self.n_patches
            ));
        }
        let per_patch = pixels / self.n_patches;
        if self.patch_pixels() != per_patch {
            return fail(format!(
                "patch shape {}x{} covers {} pixels but each of the {} patches must cover {per_patch}",
                self.patch_height,
                self.patch_width,
                self.patch_pixels(),
                self.n_patches
            ));
        }
        if !self.image_height.is_multiple_of(self.patch_height) {
            return fail(format!(
                "patch_height ({}) must divide image_height ({})",
                self.patch_height, self.image_height
            ));
        }
        if !self.image_width.is_multiple_of(self.patch_width) {
            return fail(format!(
                "patch_width ({}) must divide image_width ({})",
                self.patch_width, self.image_width
            ));
        }
        if (1usize << self.n_data) < per_patch {
            return fail(format!(
                "2^n_data = {} basis states cannot cover {per_patch} pixels per patch",
                1usize << self.n_data
            ));
        }
        Ok(())
    }
}

/// A real-valued image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl ImageTensor {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            pixels: vec![0.0; height * width],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.pixels[row * self.width + col] = value;
    }
}

/// All trainable rotation angles, flat, ordered by
/// (patch, layer, qubit, phi/theta/omega).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub angles: Vec<f64>,
}

impl GeneratorParams {
    /// Draws every angle i.i.d. uniform from `[0, π)`.
    pub fn init_uniform(config: &GeneratorConfig, rng: &mut impl Rng) -> Self {
        let angles = (0..count_parameters(config))
            .map(|_| rng.random::<f64>() * std::f64::consts::PI)
            .collect();
        Self { angles }
    }

    pub fn zeros(config: &GeneratorConfig) -> Self {
        Self {
            angles: vec![0.0; count_parameters(config)],
        }
    }

    /// The angles of one sub-generator (contiguous slice).
    pub fn patch_params(&self, config: &GeneratorConfig, patch: usize) -> &[f64] {
        let per_patch = 3 * config.n_layers * config.n_qubits();
        &self.angles[patch * per_patch..(patch + 1) * per_patch]
    }

    fn check_len(&self, config: &GeneratorConfig) -> Result<()> {
        let expected = count_parameters(config);
        if self.angles.len() != expected {
            return Err(Error::Shape(format!(
                "parameter vector has {} angles, config requires {expected}",
                self.angles.len()
            )));
        }
        Ok(())
    }
}

/// Trainable angle count: `n_patches · n_layers · (n_ancilla + n_data) · 3`.
pub fn count_parameters(config: &GeneratorConfig) -> usize {
    config.n_patches * config.n_layers * config.n_qubits() * 3
}

/// Prepares `R_y(z_1) ⊗ … ⊗ R_y(z_n) |0…0⟩`; latent entries are used as
/// rotation angles in radians without rescaling.
pub fn encode_latent(z: &[f64], n_qubits: usize) -> Result<StateVector> {
    if z.len() != n_qubits {
        return Err(Error::Shape(format!(
            "latent vector has {} entries, register has {n_qubits} qubits",
            z.len()
        )));
    }
    let mut state = StateVector::new_zero(n_qubits)?;
    for (q, &angle) in z.iter().enumerate() {
        state.apply_ry(q, angle)?;
    }
    Ok(state)
}

/// The shared circuit shape of every sub-generator: latent encoding, then
/// `n_layers` of rotations on every wire followed by the adjacent CNOT
/// chain. Parameter slots are latent entries first, then the trainable
/// angles in (layer, qubit, phi/theta/omega) order.
fn build_circuit(config: &GeneratorConfig) -> Circuit {
    let n = config.n_qubits();
    let mut circuit = Circuit::new(n);
    for q in 0..n {
        circuit.ry(q);
    }
    for _ in 0..config.n_layers {
        for q in 0..n {
            circuit.rot(q);
        }
        for q in 0..n.saturating_sub(1) {
            circuit.cnot(q, q + 1);
        }
    }
    circuit
}

fn circuit_angles(patch_params: &[f64], z: &[f64]) -> Vec<f64> {
    let mut angles = Vec::with_capacity(z.len() + patch_params.len());
    angles.extend_from_slice(z);
    angles.extend_from_slice(patch_params);
    angles
}

/// Runs one sub-generator and returns the `2^n_data` basis probabilities of
/// its post-selected data register.
pub fn sub_generator_forward(
    patch_params: &[f64],
    z: &[f64],
    config: &GeneratorConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    let expected = 3 * config.n_layers * config.n_qubits();
    if patch_params.len() != expected {
        return Err(Error::Shape(format!(
            "sub-generator has {expected} angles, got {}",
            patch_params.len()
        )));
    }
    if z.len() != config.n_qubits() {
        return Err(Error::Shape(format!(
            "latent vector has {} entries, expected {}",
            z.len(),
            config.n_qubits()
        )));
    }
    let circuit = build_circuit(config);
    let angles = circuit_angles(patch_params, z);
    let (probs, _success) = circuit.postselected_probabilities(&angles, config.n_ancilla)?;
    Ok(probs)
}

/// Normalizes probabilities by their maximum and keeps the first `keep`
/// entries, in that order. Ties in the maximum resolve to the lowest index.
///
/// Fails with [`Error::DegeneratePatch`] when every probability is zero.
pub fn postprocess_patch(probs: &[f64], keep: usize) -> Result<Vec<f64>> {
    if keep > probs.len() {
        return Err(Error::Shape(format!(
            "cannot keep {keep} entries of {}",
            probs.len()
        )));
    }
    let max = probs.iter().fold(0.0f64, |m, &p| if p > m { p } else { m });
    if max <= 0.0 {
        return Err(Error::DegeneratePatch);
    }
    Ok(probs[..keep].iter().map(|&p| p / max).collect())
}

/// Row and column of pixel `j` of patch `patch`: patches fill a
/// `(H/patch_height) × (W/patch_width)` grid of cells in row-major order,
/// and pixels fill their cell row-major.
fn pixel_position(config: &GeneratorConfig, patch: usize, j: usize) -> (usize, usize) {
    let cells_per_row = config.image_width / config.patch_width;
    let cell_row = patch / cells_per_row;
    let cell_col = patch % cells_per_row;
    let row = cell_row * config.patch_height + j / config.patch_width;
    let col = cell_col * config.patch_width + j % config.patch_width;
    (row, col)
}

/// Tiles the patches into a full image. Every pixel is written exactly once.
pub fn assemble_image(patches: &[Vec<f64>], config: &GeneratorConfig) -> Result<ImageTensor> {
    config.validate()?;
    if patches.len() != config.n_patches {
        return Err(Error::Shape(format!(
            "got {} patches, config has {}",
            patches.len(),
            config.n_patches
        )));
    }
    let per_patch = config.patch_pixels();
    let mut image = ImageTensor::zeros(config.image_height, config.image_width);
    for (i, patch) in patches.iter().enumerate() {
        if patch.len() != per_patch {
            return Err(Error::Shape(format!(
                "patch {i} has {} pixels, expected {per_patch}",
                patch.len()
            )));
        }
        for (j, &value) in patch.iter().enumerate() {
            let (row, col) = pixel_position(config, i, j);
            image.set(row, col, value);
        }
    }
    Ok(image)
}

/// Generates one image: every sub-generator sees the same latent vector.
pub fn generate(
    params: &GeneratorParams,
    z: &[f64],
    config: &GeneratorConfig,
) -> Result<ImageTensor> {
    config.validate()?;
    params.check_len(config)?;
    let keep = config.patch_pixels();
    let mut patches = Vec::with_capacity(config.n_patches);
    for i in 0..config.n_patches {
        let probs = sub_generator_forward(params.patch_params(config, i), z, config)
            .map_err(|e| e.in_patch(i))?;
        patches.push(postprocess_patch(&probs, keep).map_err(|e| e.in_patch(i))?);
    }
    assemble_image(&patches, config)
}

/// Exact gradient of a scalar loss with respect to every trainable angle,
/// given the loss gradient with respect to the output pixels.
///
/// Chains through patch assembly, truncation (dropped entries get zero
/// upstream), max-normalization (the argmax is held constant, matching the
/// forward tie rule), post-selection, and the circuits themselves via
/// [`qsim::reverse_grad`]. Returns a vector shaped like
/// [`GeneratorParams::angles`].
pub fn generator_backward(
    params: &GeneratorParams,
    z: &[f64],
    config: &GeneratorConfig,
    upstream: &ImageTensor,
) -> Result<Vec<f64>> {
    config.validate()?;
    params.check_len(config)?;
    if upstream.height != config.image_height || upstream.width != config.image_width {
        return Err(Error::Shape(format!(
            "upstream image is {}x{}, config is {}x{}",
            upstream.height, upstream.width, config.image_height, config.image_width
        )));
    }
    if z.len() != config.n_qubits() {
        return Err(Error::Shape(format!(
            "latent vector has {} entries, expected {}",
            z.len(),
            config.n_qubits()
        )));
    }

    let circuit = build_circuit(config);
    let n_latent = config.n_qubits();
    let per_patch = 3 * config.n_layers * n_latent;
    let keep = config.patch_pixels();
    let dim = 1usize << config.n_data;
    let mut grad = vec![0.0; params.angles.len()];

    for i in 0..config.n_patches {
        let angles = circuit_angles(params.patch_params(config, i), z);
        let (probs, _success) = circuit
            .postselected_probabilities(&angles, config.n_ancilla)
            .map_err(|e| e.in_patch(i))?;

        // argmax with ties to the lowest index, as in the forward pass.
        let mut m = 0;
        for (k, &p) in probs.iter().enumerate() {
            if p > probs[m] {
                m = k;
            }
        }
        let max = probs[m];
        if max <= 0.0 {
            return Err(Error::DegeneratePatch.in_patch(i));
        }

        // Backward through truncation and max-normalization: for out_k =
        // p_k / p_m (argmax m fixed), ∂L/∂p_k = u_k/p_m for k ≠ m and
        // ∂L/∂p_m = u_m/p_m - Σ_j u_j p_j / p_m².
        let mut u_probs = vec![0.0; dim];
        let mut udotp = 0.0;
        for j in 0..keep {
            let (row, col) = pixel_position(config, i, j);
            let u = upstream.get(row, col);
            u_probs[j] = u / max;
            udotp += u * probs[j];
        }
        u_probs[m] -= udotp / (max * max);

        let circuit_grad = qsim::reverse_grad(&circuit, &angles, config.n_ancilla, &u_probs)
            .map_err(|e| e.in_patch(i))?;
        grad[i * per_patch..(i + 1) * per_patch].copy_from_slice(&circuit_grad[n_latent..]);
    }
    Ok(grad)
}
