//! Shared test oracle: a deliberately naive dense simulator.
//!
//! Gates are embedded as full `2^n × 2^n` matrices via Kronecker products
//! and applied by dense matrix-vector multiplication; the composite
//! rotation is built by multiplying the three elementary factors rather
//! than from a closed form. Post-selected probabilities come from the
//! reduced block of the density matrix `ρ = ψψ†`. Slow, but a completely
//! separate code path from the library's strided kernels.

// Each integration-test binary compiles this module separately and uses
// its own subset of the helpers.
#![allow(dead_code)]

use num_complex::Complex64;

pub type Mat2 = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rz(a: f64) -> Mat2 {
    [
        [Complex64::from_polar(1.0, -a / 2.0), c(0.0, 0.0)],
        [c(0.0, 0.0), Complex64::from_polar(1.0, a / 2.0)],
    ]
}

pub fn ry(a: f64) -> Mat2 {
    let (s, co) = (a / 2.0).sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}

pub fn matmul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `RZ(omega) · RY(theta) · RZ(phi)` as an explicit matrix product.
pub fn rot(phi: f64, theta: f64, omega: f64) -> Mat2 {
    matmul2(&rz(omega), &matmul2(&ry(theta), &rz(phi)))
}

type Mat = Vec<Vec<Complex64>>;

fn identity(dim: usize) -> Mat {
    let mut m = vec![vec![c(0.0, 0.0); dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = c(1.0, 0.0);
    }
    m
}

fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ar, ac) = (a.len(), a[0].len());
    let (br, bc) = (b.len(), b[0].len());
    let mut out = vec![vec![c(0.0, 0.0); ac * bc]; ar * br];
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[i * br + k][j * bc + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// Embed a single-qubit gate on wire `q` (qubit 0 = most significant).
fn embed_single(n: usize, q: usize, m: &Mat2) -> Mat {
    let small: Mat = vec![
        vec![m[0][0], m[0][1]],
        vec![m[1][0], m[1][1]],
    ];
    let left = identity(1 << q);
    let right = identity(1 << (n - 1 - q));
    kron(&kron(&left, &small), &right)
}

/// CNOT as an explicit permutation matrix built from index arithmetic.
fn cnot_matrix(n: usize, control: usize, target: usize) -> Mat {
    let dim = 1 << n;
    let cbit = 1usize << (n - 1 - control);
    let tbit = 1usize << (n - 1 - target);
    let mut m = vec![vec![c(0.0, 0.0); dim]; dim];
    // The permutation is an involution, so row->col uses the same rule
    // as col->row.
    for (row, m_row) in m.iter_mut().enumerate() {
        let col = if row & cbit != 0 { row ^ tbit } else { row };
        m_row[col] = c(1.0, 0.0);
    }
    m
}

fn matvec(m: &Mat, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Naive statevector driven entirely by full-matrix multiplication.
pub struct DenseOracle {
    n: usize,
    pub psi: Vec<Complex64>,
}

impl DenseOracle {
    pub fn new(n: usize) -> Self {
        let mut psi = vec![c(0.0, 0.0); 1 << n];
        psi[0] = c(1.0, 0.0);
        Self { n, psi }
    }

    pub fn from_state(n: usize, psi: Vec<Complex64>) -> Self {
        assert_eq!(psi.len(), 1 << n);
        Self { n, psi }
    }

    pub fn apply_single(&mut self, q: usize, m: &Mat2) {
        let full = embed_single(self.n, q, m);
        self.psi = matvec(&full, &self.psi);
    }

    pub fn apply_ry(&mut self, q: usize, a: f64) {
        self.apply_single(q, &ry(a));
    }

    pub fn apply_rot(&mut self, q: usize, phi: f64, theta: f64, omega: f64) {
        self.apply_single(q, &rot(phi, theta, omega));
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let full = cnot_matrix(self.n, control, target);
        self.psi = matvec(&full, &self.psi);
    }

    /// Probabilities of every basis state via the density-matrix diagonal.
    pub fn probabilities(&self) -> Vec<f64> {
        let rho = self.density();
        (0..self.psi.len()).map(|i| rho[i][i].re).collect()
    }

    fn density(&self) -> Mat {
        let dim = self.psi.len();
        let mut rho = vec![vec![c(0.0, 0.0); dim]; dim];
        for (row, &a) in rho.iter_mut().zip(&self.psi) {
            for (entry, &b) in row.iter_mut().zip(&self.psi) {
                *entry = a * b.conj();
            }
        }
        rho
    }

    /// Outcome probabilities and success probability of projecting the
    /// leading `n_ancilla` wires onto `|0…0⟩`, from the reduced density
    /// block.
    pub fn postselected_probs(&self, n_ancilla: usize) -> (Vec<f64>, f64) {
        let keep = 1usize << (self.n - n_ancilla);
        let rho = self.density();
        let success: f64 = (0..keep).map(|i| rho[i][i].re).sum();
        let probs = (0..keep).map(|i| rho[i][i].re / success).collect();
        (probs, success)
    }
}

/// Relative error with an absolute floor, so finite-difference noise near
/// zero does not dominate the comparison.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}
