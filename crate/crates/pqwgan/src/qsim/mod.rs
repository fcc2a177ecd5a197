//! Dense statevector simulation of small qubit registers.
//!
//! A register of `n` qubits is stored as all `2^n` complex amplitudes in
//! basis order. Qubit 0 is the *most significant* bit of the basis index:
//! the amplitude at index `k` belongs to `|b_0 b_1 … b_{n-1}⟩` where `b_q`
//! is bit `n-1-q` of `k`. Ancilla wires are by convention the leading
//! qubits, which makes the all-zero ancilla outcome a contiguous prefix of
//! the amplitude vector and post-selection a prefix filter plus a
//! renormalization.

mod circuit;

pub use circuit::{
    finite_difference_grad, parameter_shift_grad, reverse_grad, Circuit, Gate,
};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the simulator accepts (`2^20` amplitudes, 16 MiB).
pub const MAX_QUBITS: usize = 20;

/// Ancilla-zero probability below which post-selection is reported as failed.
pub const POST_SELECTION_THRESHOLD: f64 = 1e-12;

/// Euler angles `(phi, theta, omega)` of the general single-qubit rotation
/// `R(phi, theta, omega) = R_z(omega) · R_y(theta) · R_z(phi)`.
///
/// Angles are plain radians; the gate is periodic in each angle with period
/// `4π` (period `2π` up to global phase).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateAngles {
    pub phi: f64,
    pub theta: f64,
    pub omega: f64,
}

impl GateAngles {
    pub fn new(phi: f64, theta: f64, omega: f64) -> Self {
        Self { phi, theta, omega }
    }

    /// The 2×2 matrix of the rotation, row-major:
    ///
    /// ```text
    /// [ e^{-i(phi+omega)/2} cos(theta/2)   -e^{ i(phi-omega)/2} sin(theta/2) ]
    /// [ e^{-i(phi-omega)/2} sin(theta/2)    e^{ i(phi+omega)/2} cos(theta/2) ]
    /// ```
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let c = (self.theta / 2.0).cos();
        let s = (self.theta / 2.0).sin();
        let sum = (self.phi + self.omega) / 2.0;
        let dif = (self.phi - self.omega) / 2.0;
        let e_sum = Complex64::new(0.0, -sum).exp();
        let e_dif = Complex64::new(0.0, -dif).exp();
        [
            [e_sum * c, -e_dif.conj() * s],
            [e_dif * s, e_sum.conj() * c],
        ]
    }

    /// Entrywise derivatives of [`Self::matrix`] with respect to
    /// `(phi, theta, omega)`, in that order.
    ///
    /// Since `R = R_z(omega) R_y(theta) R_z(phi)`, the phi derivative scales
    /// the columns by `∓i/2` and the omega derivative scales the rows; the
    /// theta derivative swaps `cos(theta/2) -> -sin(theta/2)/2` and
    /// `sin(theta/2) -> cos(theta/2)/2` while keeping each entry's phase.
    pub(crate) fn derivative_matrices(&self) -> [[[Complex64; 2]; 2]; 3] {
        let c = (self.theta / 2.0).cos();
        let s = (self.theta / 2.0).sin();
        let sum = (self.phi + self.omega) / 2.0;
        let dif = (self.phi - self.omega) / 2.0;
        let e_sum = Complex64::new(0.0, -sum).exp();
        let e_dif = Complex64::new(0.0, -dif).exp();
        let m = self.matrix();
        let half_i = Complex64::new(0.0, 0.5);
        let d_phi = [
            [-half_i * m[0][0], half_i * m[0][1]],
            [-half_i * m[1][0], half_i * m[1][1]],
        ];
        let d_theta = [
            [e_sum * (-s / 2.0), -e_dif.conj() * (c / 2.0)],
            [e_dif * (c / 2.0), e_sum.conj() * (-s / 2.0)],
        ];
        let d_omega = [
            [-half_i * m[0][0], -half_i * m[0][1]],
            [half_i * m[1][0], half_i * m[1][1]],
        ];
        [d_phi, d_theta, d_omega]
    }
}

/// A pure state of `n_qubits` qubits as a dense vector of `2^n` amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Creates the computational-basis state `|0…0⟩`.
    ///
    /// Fails with [`Error::Config`] unless `1 <= n_qubits <= MAX_QUBITS`.
    pub fn new_zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Builds a state from explicit amplitudes.
    ///
    /// The length must be `2^n_qubits` and the squared norm must be 1 within
    /// `1e-6`; this is meant for tests and tools, not hot paths.
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::Shape(format!(
                "expected {} amplitudes for {} qubits, got {}",
                1usize << n_qubits,
                n_qubits,
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "amplitudes are not normalized: squared norm {norm}"
            )));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Sum of squared amplitude magnitudes (1 for any valid state, up to
    /// floating-point drift).
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitIndex {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Distance (in index space) between the two halves of a qubit's pairs;
    /// qubit 0 is the most significant bit.
    fn stride(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    /// Applies an arbitrary 2×2 matrix to one qubit. Used by every
    /// single-qubit gate; not unitary-checked.
    pub(crate) fn apply_one_qubit(&mut self, qubit: usize, m: &[[Complex64; 2]; 2]) {
        let stride = self.stride(qubit);
        let len = self.amplitudes.len();
        let mut base = 0;
        while base < len {
            for i0 in base..base + stride {
                let i1 = i0 + stride;
                let a0 = self.amplitudes[i0];
                let a1 = self.amplitudes[i1];
                self.amplitudes[i0] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i1] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += 2 * stride;
        }
    }

    /// Applies `R_y(angle) = [[cos(a/2), -sin(a/2)], [sin(a/2), cos(a/2)]]`
    /// to one qubit.
    pub fn apply_ry(&mut self, qubit: usize, angle: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let c = (angle / 2.0).cos();
        let s = (angle / 2.0).sin();
        let stride = self.stride(qubit);
        let len = self.amplitudes.len();
        let mut base = 0;
        // Real rotation: scale the complex pairs with real coefficients.
        while base < len {
            for i0 in base..base + stride {
                let i1 = i0 + stride;
                let a0 = self.amplitudes[i0];
                let a1 = self.amplitudes[i1];
                self.amplitudes[i0] = a0 * c - a1 * s;
                self.amplitudes[i1] = a0 * s + a1 * c;
            }
            base += 2 * stride;
        }
        Ok(())
    }

    /// Applies the general rotation `R(phi, theta, omega)` to one qubit.
    pub fn apply_rot(&mut self, qubit: usize, angles: &GateAngles) -> Result<()> {
        self.check_qubit(qubit)?;
        let m = angles.matrix();
        self.apply_one_qubit(qubit, &m);
        Ok(())
    }

    /// Applies a controlled-NOT with the given control and target wires.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Config(format!(
                "cnot control and target must differ, both are {control}"
            )));
        }
        let cbit = self.stride(control);
        let tbit = self.stride(target);
        for i in 0..self.amplitudes.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amplitudes.swap(i, i | tbit);
            }
        }
        Ok(())
    }

    /// Measurement probabilities of all `2^n` basis states, in basis order.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Projects onto the all-zero outcome of the first `n_ancilla` qubits
    /// and renormalizes, returning the state of the remaining data qubits
    /// together with the success probability of the projection.
    ///
    /// Because ancillas are the leading (most significant) wires, the kept
    /// amplitudes are exactly the first `2^(n-n_ancilla)` entries.
    ///
    /// Fails with [`Error::PostSelectionFailure`] when the success
    /// probability is below [`POST_SELECTION_THRESHOLD`].
    pub fn postselect_ancilla_zero(&self, n_ancilla: usize) -> Result<(StateVector, f64)> {
        if n_ancilla >= self.n_qubits {
            return Err(Error::Config(format!(
                "n_ancilla must be < n_qubits ({}), got {n_ancilla}",
                self.n_qubits
            )));
        }
        let keep = 1usize << (self.n_qubits - n_ancilla);
        let success: f64 = self.amplitudes[..keep].iter().map(|a| a.norm_sqr()).sum();
        if success < POST_SELECTION_THRESHOLD {
            return Err(Error::PostSelectionFailure { prob: success });
        }
        let scale = 1.0 / success.sqrt();
        let amplitudes = self.amplitudes[..keep].iter().map(|a| a * scale).collect();
        Ok((
            StateVector {
                n_qubits: self.n_qubits - n_ancilla,
                amplitudes,
            },
            success,
        ))
    }
}
