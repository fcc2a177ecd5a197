//! Fully connected critic and the classical reference generator.
//!
//! Both networks are plain multilayer perceptrons with leaky-ReLU hidden
//! activations, stored as one flat `f64` parameter vector (per layer: the
//! `out × in` weight matrix row-major, then the bias). The critic ends in a
//! linear scalar score; the reference generator ends in `tanh`. Gradients
//! are exact and hand-derived, including the second-order pass needed by
//! the gradient penalty.

use rand::Rng;

use crate::error::{Error, Result};

/// Activation applied to the final layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Identity,
    Tanh,
}

/// A multilayer perceptron with leaky-ReLU hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    slope: f64,
    output: OutputActivation,
    params: Vec<f64>,
}

/// Leaky-ReLU slope used by both standard architectures.
pub const LEAKY_SLOPE: f64 = 0.2;

impl Mlp {
    /// A zero-initialized network with the given layer widths
    /// (`dims[0]` inputs, `dims.last()` outputs).
    pub fn new(dims: Vec<usize>, slope: f64, output: OutputActivation) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Config(format!(
                "an MLP needs at least input and output widths, got {dims:?}"
            )));
        }
        if dims.contains(&0) {
            return Err(Error::Config(format!("layer widths must be positive: {dims:?}")));
        }
        let n_params = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Self {
            dims,
            slope,
            output,
            params: vec![0.0; n_params],
        })
    }

    /// The critic architecture: `input → 512 → 256 → 1`, leaky ReLU 0.2,
    /// linear output.
    pub fn critic(input_dim: usize) -> Result<Self> {
        Self::new(vec![input_dim, 512, 256, 1], LEAKY_SLOPE, OutputActivation::Identity)
    }

    /// The classical reference generator: `latent → 256 → 512 → 1024 →
    /// n_pixels`, leaky ReLU 0.2, `tanh` output.
    pub fn baseline_generator(latent_dim: usize, n_pixels: usize) -> Result<Self> {
        Self::new(
            vec![latent_dim, 256, 512, 1024, n_pixels],
            LEAKY_SLOPE,
            OutputActivation::Tanh,
        )
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Glorot-uniform weights (`±sqrt(6 / (fan_in + fan_out))`), zero
    /// biases, drawn row-major layer by layer.
    pub fn init_glorot(&mut self, rng: &mut impl Rng) {
        for l in 0..self.n_layers() {
            let (inp, out) = (self.dims[l], self.dims[l + 1]);
            let bound = (6.0 / (inp + out) as f64).sqrt();
            let (w_off, b_off) = self.layer_offsets(l);
            for w in &mut self.params[w_off..b_off] {
                *w = (rng.random::<f64>() * 2.0 - 1.0) * bound;
            }
            for b in &mut self.params[b_off..b_off + out] {
                *b = 0.0;
            }
        }
    }

    /// Start of layer `l`'s weights and of its bias in the flat vector.
    fn layer_offsets(&self, layer: usize) -> (usize, usize) {
        let mut off = 0;
        for l in 0..layer {
            off += self.dims[l] * self.dims[l + 1] + self.dims[l + 1];
        }
        (off, off + self.dims[layer] * self.dims[layer + 1])
    }

    fn weights(&self, layer: usize) -> &[f64] {
        let (w, b) = self.layer_offsets(layer);
        &self.params[w..b]
    }

    fn bias(&self, layer: usize) -> &[f64] {
        let (_, b) = self.layer_offsets(layer);
        &self.params[b..b + self.dims[layer + 1]]
    }

    fn hidden_deriv(&self, z: f64) -> f64 {
        // The kink at exactly zero takes the positive-side derivative.
        if z >= 0.0 {
            1.0
        } else {
            self.slope
        }
    }

    fn activate(&self, layer: usize, z: f64) -> f64 {
        if layer + 1 == self.n_layers() {
            match self.output {
                OutputActivation::Identity => z,
                OutputActivation::Tanh => z.tanh(),
            }
        } else if z >= 0.0 {
            z
        } else {
            self.slope * z
        }
    }

    /// Derivative of layer `layer`'s activation at pre-activation `z`.
    fn deriv(&self, layer: usize, z: f64) -> f64 {
        if layer + 1 == self.n_layers() {
            match self.output {
                OutputActivation::Identity => 1.0,
                OutputActivation::Tanh => {
                    let t = z.tanh();
                    1.0 - t * t
                }
            }
        } else {
            self.hidden_deriv(z)
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} entries, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Pre-activations of every layer for `x`.
    fn forward_trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut pre = Vec::with_capacity(self.n_layers());
        let mut a = x.to_vec();
        for l in 0..self.n_layers() {
            let (inp, out) = (self.dims[l], self.dims[l + 1]);
            let w = self.weights(l);
            let b = self.bias(l);
            let mut z = vec![0.0; out];
            for o in 0..out {
                let row = &w[o * inp..(o + 1) * inp];
                let mut acc = b[o];
                for (wi, ai) in row.iter().zip(&a) {
                    acc += wi * ai;
                }
                z[o] = acc;
            }
            a = z.iter().map(|&v| self.activate(l, v)).collect();
            pre.push(z);
        }
        pre
    }

    /// Full output vector for `x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let pre = self.forward_trace(x);
        let last = self.n_layers() - 1;
        Ok(pre[last].iter().map(|&z| self.activate(last, z)).collect())
    }

    /// Scalar score; the network must have one output.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if self.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "score requires a scalar output, network has {}",
                self.output_dim()
            )));
        }
        Ok(self.forward(x)?[0])
    }

    /// Exact gradient of the scalar score with respect to the input.
    pub fn input_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "input_grad requires a scalar output, network has {}",
                self.output_dim()
            )));
        }
        self.check_input(x)?;
        let pre = self.forward_trace(x);
        let mut g = vec![1.0];
        for l in (0..self.n_layers()).rev() {
            let (inp, out) = (self.dims[l], self.dims[l + 1]);
            let w = self.weights(l);
            let gz: Vec<f64> = (0..out).map(|o| self.deriv(l, pre[l][o]) * g[o]).collect();
            let mut prev = vec![0.0; inp];
            for o in 0..out {
                let row = &w[o * inp..(o + 1) * inp];
                for (p, wi) in prev.iter_mut().zip(row) {
                    *p += wi * gz[o];
                }
            }
            g = prev;
        }
        Ok(g)
    }

    /// Exact gradient, with respect to every parameter, of the weighted
    /// mean of scores `(1/n) Σ_i upstream_i · D(x_i)`.
    pub fn batch_score_grad(&self, xs: &[&[f64]], upstream: &[f64]) -> Result<Vec<f64>> {
        if self.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "batch_score_grad requires a scalar output, network has {}",
                self.output_dim()
            )));
        }
        if xs.len() != upstream.len() {
            return Err(Error::Shape(format!(
                "{} inputs but {} upstream weights",
                xs.len(),
                upstream.len()
            )));
        }
        if xs.is_empty() {
            return Err(Error::Shape("batch must be non-empty".into()));
        }
        let mut grad = vec![0.0; self.n_params()];
        let scale = 1.0 / xs.len() as f64;
        for (x, &u) in xs.iter().zip(upstream) {
            self.check_input(x)?;
            let pre = self.forward_trace(x);
            // Activations are cheap to rebuild from the trace.
            let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.n_layers() + 1);
            acts.push(x.to_vec());
            for (l, pre_l) in pre.iter().enumerate() {
                acts.push(pre_l.iter().map(|&z| self.activate(l, z)).collect());
            }
            let mut g = vec![u * scale];
            for l in (0..self.n_layers()).rev() {
                let (inp, out) = (self.dims[l], self.dims[l + 1]);
                let (w_off, b_off) = self.layer_offsets(l);
                let w = self.weights(l).to_vec();
                let gz: Vec<f64> = (0..out).map(|o| self.deriv(l, pre[l][o]) * g[o]).collect();
                for o in 0..out {
                    let a_prev = &acts[l];
                    let row = &mut grad[w_off + o * inp..w_off + (o + 1) * inp];
                    for (gw, ai) in row.iter_mut().zip(a_prev) {
                        *gw += gz[o] * ai;
                    }
                    grad[b_off + o] += gz[o];
                }
                let mut prev = vec![0.0; inp];
                for o in 0..out {
                    let row = &w[o * inp..(o + 1) * inp];
                    for (p, wi) in prev.iter_mut().zip(row) {
                        *p += wi * gz[o];
                    }
                }
                g = prev;
            }
        }
        Ok(grad)
    }

    /// Gradient-penalty value and its exact parameter gradient for one
    /// interpolate `x̂ = ε·x + (1-ε)·x_fake`:
    ///
    /// `penalty = lambda · (‖∇_x̂ D(x̂)‖₂ - 1)²`
    ///
    /// Differentiating the input-gradient program again reaches the weights
    /// only through their explicit appearances in the backward sweep; the
    /// activation masks are piecewise constant (the leaky-ReLU kink
    /// contributes zero second derivative), so bias entries of the returned
    /// gradient are identically zero. A zero input-gradient norm yields
    /// `penalty = lambda` with a zero gradient (the subgradient choice).
    pub fn gradient_penalty(
        &self,
        x: &[f64],
        x_fake: &[f64],
        epsilon: f64,
        lambda: f64,
    ) -> Result<(f64, Vec<f64>)> {
        if self.output != OutputActivation::Identity {
            return Err(Error::Config(
                "gradient penalty requires a piecewise-linear network (linear output)".into(),
            ));
        }
        if self.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "gradient penalty requires a scalar output, network has {}",
                self.output_dim()
            )));
        }
        self.check_input(x)?;
        self.check_input(x_fake)?;

        let x_hat: Vec<f64> = x
            .iter()
            .zip(x_fake)
            .map(|(a, b)| epsilon * a + (1.0 - epsilon) * b)
            .collect();

        // Forward to collect the activation masks.
        let pre = self.forward_trace(&x_hat);
        let masks: Vec<Vec<f64>> = (0..self.n_layers())
            .map(|l| pre[l].iter().map(|&z| self.deriv(l, z)).collect())
            .collect();

        // Input-gradient sweep, keeping each layer's h = mask ⊙ s.
        let k = self.n_layers();
        let mut hs: Vec<Vec<f64>> = vec![Vec::new(); k];
        let mut s = vec![1.0];
        for l in (0..k).rev() {
            let (inp, out) = (self.dims[l], self.dims[l + 1]);
            let w = self.weights(l);
            let h: Vec<f64> = (0..out).map(|o| masks[l][o] * s[o]).collect();
            let mut prev = vec![0.0; inp];
            for o in 0..out {
                let row = &w[o * inp..(o + 1) * inp];
                for (p, wi) in prev.iter_mut().zip(row) {
                    *p += wi * h[o];
                }
            }
            hs[l] = h;
            s = prev;
        }
        let v = s; // ∇_x̂ D(x̂)
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let penalty = lambda * (norm - 1.0) * (norm - 1.0);

        let mut grad = vec![0.0; self.n_params()];
        if norm < 1e-12 {
            return Ok((penalty, grad));
        }

        // Second sweep, forwards through the layers: with t_{l-1} = ∂P/∂s_{l-1},
        // ∂P/∂W_l = h_l ⊗ t_{l-1} and t_l = mask_l ⊙ (W_l t_{l-1}).
        let coeff = 2.0 * lambda * (norm - 1.0) / norm;
        let mut t: Vec<f64> = v.iter().map(|&vi| coeff * vi).collect();
        for l in 0..k {
            let (inp, out) = (self.dims[l], self.dims[l + 1]);
            let (w_off, _) = self.layer_offsets(l);
            let w = self.weights(l).to_vec();
            for o in 0..out {
                let h_o = hs[l][o];
                let row = &mut grad[w_off + o * inp..w_off + (o + 1) * inp];
                for (gw, ti) in row.iter_mut().zip(&t) {
                    *gw += h_o * ti;
                }
            }
            let mut next = vec![0.0; out];
            for o in 0..out {
                let row = &w[o * inp..(o + 1) * inp];
                let mut acc = 0.0;
                for (wi, ti) in row.iter().zip(&t) {
                    acc += wi * ti;
                }
                next[o] = masks[l][o] * acc;
            }
            t = next;
        }
        Ok((penalty, grad))
    }
}
