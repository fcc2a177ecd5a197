//! Parametrized circuits and gradients of losses defined on their output
//! probabilities.
//!
//! A [`Circuit`] is a gate list over a fixed register; every rotation angle
//! is a slot in one flat parameter vector, assigned in push order. Three
//! gradient routes are provided:
//!
//! * [`reverse_grad`]: exact reverse-mode (adjoint) differentiation through
//!   the simulated amplitudes, including post-selection renormalization and
//!   probability extraction. This is the training path.
//! * [`parameter_shift_grad`]: the two-point shift rule
//!   `(L(a + π/2) - L(a - π/2)) / 2`, exact for plain expectation values
//!   and used to cross-validate the reverse path.
//! * [`finite_difference_grad`]: central differences, the oracle of last
//!   resort for tests.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qsim::{GateAngles, StateVector, POST_SELECTION_THRESHOLD};

/// One gate of a parametrized circuit. Parametrized variants store indices
/// into the circuit's flat angle vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Ry { qubit: usize, param: usize },
    Rot { qubit: usize, params: [usize; 3] },
    Cnot { control: usize, target: usize },
}

/// A gate list over `n_qubits` wires with `n_params` rotation angles.
#[derive(Debug, Clone)]
pub struct Circuit {
    n_qubits: usize,
    n_params: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    /// An empty circuit on `n_qubits` wires.
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            n_params: 0,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Appends `R_y` on `qubit`, returning the index of its angle.
    ///
    /// Panics if `qubit` is out of range; building a circuit that does not
    /// fit its register is a programming error.
    pub fn ry(&mut self, qubit: usize) -> usize {
        assert!(qubit < self.n_qubits, "ry qubit {qubit} out of range");
        let param = self.n_params;
        self.n_params += 1;
        self.gates.push(Gate::Ry { qubit, param });
        param
    }

    /// Appends the general rotation on `qubit`, returning the indices of its
    /// `(phi, theta, omega)` angles.
    pub fn rot(&mut self, qubit: usize) -> [usize; 3] {
        assert!(qubit < self.n_qubits, "rot qubit {qubit} out of range");
        let params = [self.n_params, self.n_params + 1, self.n_params + 2];
        self.n_params += 3;
        self.gates.push(Gate::Rot { qubit, params });
        params
    }

    /// Appends a CNOT.
    pub fn cnot(&mut self, control: usize, target: usize) {
        assert!(
            control < self.n_qubits && target < self.n_qubits && control != target,
            "cnot wires ({control}, {target}) invalid"
        );
        self.gates.push(Gate::Cnot { control, target });
    }

    /// Runs the circuit on `|0…0⟩` with the given angle vector.
    pub fn run(&self, angles: &[f64]) -> Result<StateVector> {
        if angles.len() != self.n_params {
            return Err(Error::Shape(format!(
                "circuit has {} parameters, got {} angles",
                self.n_params,
                angles.len()
            )));
        }
        let mut state = StateVector::new_zero(self.n_qubits)?;
        for gate in &self.gates {
            match *gate {
                Gate::Ry { qubit, param } => state.apply_ry(qubit, angles[param])?,
                Gate::Rot { qubit, params } => state.apply_rot(
                    qubit,
                    &GateAngles::new(angles[params[0]], angles[params[1]], angles[params[2]]),
                )?,
                Gate::Cnot { control, target } => state.apply_cnot(control, target)?,
            }
        }
        Ok(state)
    }

    /// Runs the circuit, post-selects the leading `n_ancilla` wires on zero,
    /// and returns the basis probabilities of the data register together
    /// with the post-selection success probability.
    pub fn postselected_probabilities(
        &self,
        angles: &[f64],
        n_ancilla: usize,
    ) -> Result<(Vec<f64>, f64)> {
        let state = self.run(angles)?;
        let (data, success) = state.postselect_ancilla_zero(n_ancilla)?;
        Ok((data.probabilities(), success))
    }
}

fn stride_of(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

/// Applies a 2×2 matrix to one qubit of a raw amplitude buffer.
fn apply_mat(amps: &mut [Complex64], stride: usize, m: &[[Complex64; 2]; 2]) {
    let mut base = 0;
    while base < amps.len() {
        for i0 in base..base + stride {
            let i1 = i0 + stride;
            let a0 = amps[i0];
            let a1 = amps[i1];
            amps[i0] = m[0][0] * a0 + m[0][1] * a1;
            amps[i1] = m[1][0] * a0 + m[1][1] * a1;
        }
        base += 2 * stride;
    }
}

/// Applies the real rotation `[[c, -s], [s, c]]` to one qubit of a raw
/// amplitude buffer.
fn apply_real_rotation(amps: &mut [Complex64], stride: usize, c: f64, s: f64) {
    let mut base = 0;
    while base < amps.len() {
        for i0 in base..base + stride {
            let i1 = i0 + stride;
            let a0 = amps[i0];
            let a1 = amps[i1];
            amps[i0] = a0 * c - a1 * s;
            amps[i1] = a0 * s + a1 * c;
        }
        base += 2 * stride;
    }
}

fn apply_cnot_raw(amps: &mut [Complex64], cbit: usize, tbit: usize) {
    for i in 0..amps.len() {
        if i & cbit != 0 && i & tbit == 0 {
            amps.swap(i, i | tbit);
        }
    }
}

/// `Σ_pairs conj(λ)·(M ψ)` over one qubit's amplitude pairs; the building
/// block of each gate's angle gradient.
fn pair_inner(
    psi: &[Complex64],
    lambda: &[Complex64],
    stride: usize,
    m: &[[Complex64; 2]; 2],
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut base = 0;
    while base < psi.len() {
        for i0 in base..base + stride {
            let i1 = i0 + stride;
            let d0 = m[0][0] * psi[i0] + m[0][1] * psi[i1];
            let d1 = m[1][0] * psi[i0] + m[1][1] * psi[i1];
            acc += lambda[i0].conj() * d0 + lambda[i1].conj() * d1;
        }
        base += 2 * stride;
    }
    acc
}

fn dagger(m: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

/// Exact gradient, with respect to every circuit angle, of a loss whose
/// derivative with respect to the post-selected output probabilities is
/// `upstream`.
///
/// The chain runs loss → data-register probabilities → post-selection
/// renormalization → amplitudes → gates, using the adjoint method: one
/// forward pass, then one sweep backwards over the gates carrying the state
/// and the cotangent, at `O(gates · 2^n)` total cost. `upstream[k]` is
/// `∂loss/∂p_k` for the `2^(n - n_ancilla)` data-basis probabilities.
///
/// Fails like the forward pass does (invalid shapes, post-selection failure
/// below [`POST_SELECTION_THRESHOLD`]).
pub fn reverse_grad(
    circuit: &Circuit,
    angles: &[f64],
    n_ancilla: usize,
    upstream: &[f64],
) -> Result<Vec<f64>> {
    let n = circuit.n_qubits();
    if n_ancilla >= n {
        return Err(Error::Config(format!(
            "n_ancilla must be < n_qubits ({n}), got {n_ancilla}"
        )));
    }
    let keep = 1usize << (n - n_ancilla);
    if upstream.len() != keep {
        return Err(Error::Shape(format!(
            "upstream has {} entries, expected {} data-basis probabilities",
            upstream.len(),
            keep
        )));
    }

    let mut psi = circuit.run(angles)?.into_amplitudes();

    // Seed the cotangent from the probability/renormalization chain:
    // p_k = |ψ_k|² / s with s = Σ_{kept} |ψ_j|², so
    // ∂L/∂|ψ_k|² = (upstream_k - Σ_j upstream_j p_j) / s on the kept block.
    let s: f64 = psi[..keep].iter().map(|a| a.norm_sqr()).sum();
    if s < POST_SELECTION_THRESHOLD {
        return Err(Error::PostSelectionFailure { prob: s });
    }
    let udotp: f64 = psi[..keep]
        .iter()
        .zip(upstream)
        .map(|(a, u)| u * (a.norm_sqr() / s))
        .sum();
    let mut lambda = vec![Complex64::new(0.0, 0.0); psi.len()];
    for k in 0..keep {
        let g = (upstream[k] - udotp) / s;
        lambda[k] = psi[k] * g;
    }

    let mut grad = vec![0.0; circuit.n_params()];
    for gate in circuit.gates().iter().rev() {
        match *gate {
            Gate::Ry { qubit, param } => {
                let stride = stride_of(n, qubit);
                let a = angles[param];
                let c = (a / 2.0).cos();
                let sn = (a / 2.0).sin();
                // Un-apply the gate to recover the pre-gate state.
                apply_real_rotation(&mut psi, stride, c, -sn);
                // dU/da = ½ [[-sin, -cos], [cos, -sin]]; the ½ cancels the
                // 2 in 2·Re(λ† dU ψ).
                let d = [
                    [Complex64::new(-sn, 0.0), Complex64::new(-c, 0.0)],
                    [Complex64::new(c, 0.0), Complex64::new(-sn, 0.0)],
                ];
                grad[param] += pair_inner(&psi, &lambda, stride, &d).re;
                apply_real_rotation(&mut lambda, stride, c, -sn);
            }
            Gate::Rot { qubit, params } => {
                let stride = stride_of(n, qubit);
                let ga = GateAngles::new(
                    angles[params[0]],
                    angles[params[1]],
                    angles[params[2]],
                );
                let inv = dagger(&ga.matrix());
                apply_mat(&mut psi, stride, &inv);
                let ds = ga.derivative_matrices();
                for (k, d) in ds.iter().enumerate() {
                    grad[params[k]] += 2.0 * pair_inner(&psi, &lambda, stride, d).re;
                }
                apply_mat(&mut lambda, stride, &inv);
            }
            Gate::Cnot { control, target } => {
                let cbit = stride_of(n, control);
                let tbit = stride_of(n, target);
                apply_cnot_raw(&mut psi, cbit, tbit);
                apply_cnot_raw(&mut lambda, cbit, tbit);
            }
        }
    }
    Ok(grad)
}

/// Parameter-shift gradient of a scalar loss over an angle vector:
/// `grad_k = (loss(a + π/2·e_k) - loss(a - π/2·e_k)) / 2`.
///
/// Exact for losses that are plain expectation values of a fixed observable
/// under circuits built from the gates in this module; post-selection breaks
/// the two-eigenvalue structure the rule relies on, so validate against
/// [`reverse_grad`] only in the plain-expectation regime.
pub fn parameter_shift_grad<F>(mut loss: F, angles: &[f64]) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut shifted = angles.to_vec();
    let mut grad = vec![0.0; angles.len()];
    for k in 0..angles.len() {
        shifted[k] = angles[k] + std::f64::consts::FRAC_PI_2;
        let plus = loss(&shifted)?;
        shifted[k] = angles[k] - std::f64::consts::FRAC_PI_2;
        let minus = loss(&shifted)?;
        shifted[k] = angles[k];
        grad[k] = 0.5 * (plus - minus);
    }
    Ok(grad)
}

/// Central finite-difference gradient of a scalar loss:
/// `grad_k = (loss(a + h·e_k) - loss(a - h·e_k)) / (2h)`.
pub fn finite_difference_grad<F>(mut loss: F, angles: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if step <= 0.0 || step.is_nan() {
        return Err(Error::Config(format!("step must be positive, got {step}")));
    }
    let mut shifted = angles.to_vec();
    let mut grad = vec![0.0; angles.len()];
    for k in 0..angles.len() {
        shifted[k] = angles[k] + step;
        let plus = loss(&shifted)?;
        shifted[k] = angles[k] - step;
        let minus = loss(&shifted)?;
        shifted[k] = angles[k];
        grad[k] = (plus - minus) / (2.0 * step);
    }
    Ok(grad)
}
