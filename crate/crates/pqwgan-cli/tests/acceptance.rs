//! Acceptance suite: seven end-to-end criteria, one test each. Every test
//! prints a single `criterion N: PASS` line with its measured numbers and
//! asserts both the quantitative tolerance and its runtime budget.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pqwgan::critic::{Mlp, OutputActivation};
use pqwgan::data;
use pqwgan::generator::{self, GeneratorConfig, GeneratorParams, ImageTensor, PriorKind};
use pqwgan::qsim::{self, Circuit};
use pqwgan::trainer::{self, sample_prior, AdamState, RecordKind, TrainConfig};

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .ancestors()
        .nth(2)
        .expect("crates/<name> lives two levels under the root")
        .to_path_buf()
}

fn run_bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqwgan"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.code() == Some(0),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn report(criterion: usize, start: Instant, budget_secs: u64, detail: &str) {
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_secs);
    assert!(
        elapsed < budget,
        "criterion {criterion} took {elapsed:?}, budget {budget_secs} s"
    );
    println!("criterion {criterion}: PASS — {detail} [{elapsed:.2?} of {budget_secs} s]");
}

/// Relative error with an absolute floor, so near-zero entries are compared
/// absolutely at the 1e-3 scale instead of blowing up the ratio.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Parse a binary PGM into (width, height, pixels).
fn read_pgm(path: &Path) -> (usize, usize, Vec<u8>) {
    let bytes = std::fs::read(path).unwrap();
    let header_end = bytes.windows(4).position(|w| w == b"255\n").unwrap() + 4;
    let header = std::str::from_utf8(&bytes[..header_end]).unwrap();
    let mut lines = header.lines();
    assert_eq!(lines.next(), Some("P5"));
    let dims: Vec<usize> = lines
        .next()
        .unwrap()
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    let pixels = bytes[header_end..].to_vec();
    assert_eq!(pixels.len(), dims[0] * dims[1]);
    (dims[0], dims[1], pixels)
}

/// Read a `.params` file directly from its bytes, independently of the
/// writer: checks magic, version, and shape, and returns the angles.
fn read_params_file(path: &Path, expect_plq: (u16, u16, u16)) -> GeneratorParams {
    let bytes = std::fs::read(path).unwrap();
    assert_eq!(&bytes[0..4], b"PQWG", "magic");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
    let p = u16::from_le_bytes(bytes[8..10].try_into().unwrap());
    let l = u16::from_le_bytes(bytes[10..12].try_into().unwrap());
    let q = u16::from_le_bytes(bytes[12..14].try_into().unwrap());
    assert_eq!(&bytes[14..16], &[0, 0], "reserved bytes");
    assert_eq!((p, l, q), expect_plq, "header shape");
    let count = p as usize * l as usize * q as usize * 3;
    assert_eq!(bytes.len(), 16 + 8 * count, "payload length");
    let angles = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GeneratorParams { angles }
}

/// The byte a unit-range pixel maps to in a PGM grid.
fn quantize(p: f64) -> u8 {
    (255.0 * p.clamp(0.0, 1.0)).round() as u8
}

fn summary_param_counts(path: &Path) -> Vec<usize> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("name,n_patches,n_data,n_ancilla,n_layers,parameter_count,final_wasserstein")
    );
    lines
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn criterion_1_parameter_counts_are_reproduced_exactly() {
    let start = Instant::now();
    let root = workspace_root();
    let dir = tempfile::tempdir().unwrap();

    let out = run_bin(&[
        "count-params",
        "--config",
        root.join("configs/mnist01.json").to_str().unwrap(),
    ]);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(text.contains("generator parameters: 5376"), "{text}");
    assert!(text.contains("critic parameters: 533505"), "{text}");
    assert!(
        text.contains("baseline generator parameters: 1462800"),
        "{text}"
    );

    let patches_out = dir.path().join("patches");
    assert_ok(&run_bin(&[
        "sweep",
        "--sweep-spec",
        root.join("configs/sweep_patches.json").to_str().unwrap(),
        "--out",
        patches_out.to_str().unwrap(),
    ]));
    assert_eq!(
        summary_param_counts(&patches_out.join("summary.csv")),
        vec![5049, 5040, 5076, 5040, 4998, 5040]
    );

    let qubits_out = dir.path().join("qubits");
    assert_ok(&run_bin(&[
        "sweep",
        "--sweep-spec",
        root.join("configs/sweep_qubits.json").to_str().unwrap(),
        "--out",
        qubits_out.to_str().unwrap(),
    ]));
    assert_eq!(
        summary_param_counts(&qubits_out.join("summary.csv")),
        vec![7560, 7644, 7392, 7560]
    );

    report(
        1,
        start,
        1,
        "5376 / 533505 / 1462800 and both sweep tables exact",
    );
}

/// Dense-matrix reference for criterion 2: full `2^n x 2^n` gate matrices
/// built by Kronecker products, applied by matrix-vector products, and
/// post-selected through the explicit density matrix. No code shared with
/// the statevector kernels.
mod dense {
    use num_complex::Complex64;

    type M = Vec<Vec<Complex64>>;

    fn zero(r: usize, c: usize) -> M {
        vec![vec![Complex64::ZERO; c]; r]
    }

    fn eye(d: usize) -> M {
        let mut m = zero(d, d);
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = Complex64::ONE;
        }
        m
    }

    fn kron(a: &M, b: &M) -> M {
        let (ar, ac, br, bc) = (a.len(), a[0].len(), b.len(), b[0].len());
        let mut m = zero(ar * br, ac * bc);
        for i in 0..ar {
            for j in 0..ac {
                for k in 0..br {
                    for l in 0..bc {
                        m[i * br + k][j * bc + l] = a[i][j] * b[k][l];
                    }
                }
            }
        }
        m
    }

    fn mul(a: &M, b: &M) -> M {
        let (r, inner, c) = (a.len(), b.len(), b[0].len());
        let mut m = zero(r, c);
        for i in 0..r {
            for k in 0..inner {
                let aik = a[i][k];
                for j in 0..c {
                    m[i][j] += aik * b[k][j];
                }
            }
        }
        m
    }

    fn rz(a: f64) -> M {
        vec![
            vec![Complex64::from_polar(1.0, -a / 2.0), Complex64::ZERO],
            vec![Complex64::ZERO, Complex64::from_polar(1.0, a / 2.0)],
        ]
    }

    fn ry(a: f64) -> M {
        let (s, c) = (a / 2.0).sin_cos();
        vec![
            vec![Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            vec![Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ]
    }

    /// `R(phi, theta, omega) = RZ(omega) · RY(theta) · RZ(phi)`.
    fn rot(phi: f64, theta: f64, omega: f64) -> M {
        mul(&rz(omega), &mul(&ry(theta), &rz(phi)))
    }

    /// Embed a single-qubit gate on wire `q` of `n` (wire 0 = most
    /// significant bit): `I(2^q) ⊗ g ⊗ I(2^(n-1-q))`.
    fn embed(n: usize, q: usize, g: &M) -> M {
        kron(&kron(&eye(1 << q), g), &eye(1 << (n - 1 - q)))
    }

    fn cnot(n: usize, control: usize, target: usize) -> M {
        let d = 1usize << n;
        let cbit = 1usize << (n - 1 - control);
        let tbit = 1usize << (n - 1 - target);
        let mut m = zero(d, d);
        // The CNOT permutation is an involution, so row->col uses the
        // same XOR rule as col->row.
        for (row, m_row) in m.iter_mut().enumerate() {
            let col = if row & cbit != 0 { row ^ tbit } else { row };
            m_row[col] = Complex64::ONE;
        }
        m
    }

    fn matvec(m: &M, v: &[Complex64]) -> Vec<Complex64> {
        m.iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub enum Op {
        Ry(usize, f64),
        Rot(usize, f64, f64, f64),
        Cnot(usize, usize),
    }

    /// Run the op list on `|0…0⟩` and return the post-selected data-basis
    /// probabilities (diagonal of the normalized top-left density-matrix
    /// block) together with the block's trace.
    pub fn postselected_probs(n: usize, ops: &[Op], n_ancilla: usize) -> (Vec<f64>, f64) {
        let d = 1usize << n;
        let mut psi = vec![Complex64::ZERO; d];
        psi[0] = Complex64::ONE;
        for op in ops {
            let m = match *op {
                Op::Ry(q, a) => embed(n, q, &ry(a)),
                Op::Rot(q, phi, theta, omega) => embed(n, q, &rot(phi, theta, omega)),
                Op::Cnot(c, t) => cnot(n, c, t),
            };
            psi = matvec(&m, &psi);
        }
        let keep = 1usize << (n - n_ancilla);
        let mut rho = vec![vec![Complex64::ZERO; keep]; keep];
        for i in 0..keep {
            for j in 0..keep {
                rho[i][j] = psi[i] * psi[j].conj();
            }
        }
        let trace: f64 = (0..keep).map(|i| rho[i][i].re).sum();
        let probs = (0..keep).map(|i| rho[i][i].re / trace).collect();
        (probs, trace)
    }
}

#[test]
fn criterion_2_simulator_matches_the_density_matrix_oracle() {
    const TOL: f64 = 1e-12;
    let start = Instant::now();

    let mut compared = 0;
    let mut seed = 2000u64;
    while compared < 100 {
        seed += 1;
        assert!(seed < 2200, "too many skipped circuits");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=4);
        let n_ancilla = if n >= 2 { rng.random_range(0..=1) } else { 0 };
        let layers = rng.random_range(0..=3);

        let mut circuit = Circuit::new(n);
        let mut angles = Vec::new();
        let mut ops = Vec::new();
        let angle =
            |rng: &mut ChaCha8Rng| 2.0 * std::f64::consts::PI * (rng.random::<f64>() - 0.5);
        for q in 0..n {
            let a = angle(&mut rng);
            circuit.ry(q);
            angles.push(a);
            ops.push(dense::Op::Ry(q, a));
        }
        for _ in 0..layers {
            for q in 0..n {
                let (phi, theta, omega) = (angle(&mut rng), angle(&mut rng), angle(&mut rng));
                circuit.rot(q);
                angles.extend([phi, theta, omega]);
                ops.push(dense::Op::Rot(q, phi, theta, omega));
            }
            for q in 0..n.saturating_sub(1) {
                circuit.cnot(q, q + 1);
                ops.push(dense::Op::Cnot(q, q + 1));
            }
        }

        let (oracle_probs, oracle_success) = dense::postselected_probs(n, &ops, n_ancilla);
        if oracle_success < 1e-6 {
            continue;
        }
        let (probs, success) = circuit
            .postselected_probabilities(&angles, n_ancilla)
            .unwrap();
        assert_eq!(probs.len(), oracle_probs.len());
        assert!(
            (success - oracle_success).abs() <= TOL,
            "seed {seed}: success {success} vs oracle {oracle_success}"
        );
        for (k, (&a, &b)) in probs.iter().zip(&oracle_probs).enumerate() {
            assert!(
                (a - b).abs() <= TOL,
                "seed {seed}, entry {k}: {a} vs {b}, diff {}",
                (a - b).abs()
            );
        }
        compared += 1;
    }

    report(2, start, 30, "100 random circuits elementwise within 1e-12");
}

#[test]
fn criterion_3_gradient_suite() {
    const FD_STEP: f64 = 1e-5;
    const TOL_FIRST_ORDER: f64 = 1e-6;
    const TOL_SECOND_ORDER: f64 = 1e-5;
    const TOL_SHIFT: f64 = 1e-10;
    let start = Instant::now();

    // (a) Full generator pipeline on a 1-patch, 3 data + 1 ancilla config,
    // with truncation, normalization, and assembly all in the chain.
    let cfg = GeneratorConfig {
        n_patches: 1,
        n_data: 3,
        n_ancilla: 1,
        n_layers: 2,
        image_height: 2,
        image_width: 3,
        patch_height: 2,
        patch_width: 3,
        prior: PriorKind::Uniform01,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(301);
    let params = GeneratorParams::init_uniform(&cfg, &mut rng);
    let z = sample_prior(cfg.prior, cfg.n_qubits(), &mut rng);
    let mut upstream = ImageTensor::zeros(2, 3);
    for p in &mut upstream.pixels {
        *p = 2.0 * rng.random::<f64>() - 1.0;
    }

    let analytic = generator::generator_backward(&params, &z, &cfg, &upstream).unwrap();
    let loss = |angles: &[f64]| -> pqwgan::Result<f64> {
        let candidate = GeneratorParams {
            angles: angles.to_vec(),
        };
        let img = generator::generate(&candidate, &z, &cfg)?;
        Ok(img
            .pixels
            .iter()
            .zip(&upstream.pixels)
            .map(|(a, b)| a * b)
            .sum())
    };
    let fd = qsim::finite_difference_grad(loss, &params.angles, FD_STEP).unwrap();
    let worst_a = analytic
        .iter()
        .zip(&fd)
        .map(|(&a, &b)| rel_err(a, b))
        .fold(0.0, f64::max);
    assert!(worst_a < TOL_FIRST_ORDER, "pipeline gradient: {worst_a}");

    // (b) Critic first-order gradient, small network plus a spot check at
    // the full 784-input scale.
    let mut critic = Mlp::new(vec![12, 16, 8, 1], 0.2, OutputActivation::Identity).unwrap();
    critic.init_glorot(&mut rng);
    let xs: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..12).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
        .collect();
    let weights = [1.0, -0.5, 2.0];
    let refs: Vec<&[f64]> = xs.iter().map(|x| x.as_slice()).collect();
    let analytic = critic.batch_score_grad(&refs, &weights).unwrap();
    let base = critic.clone();
    let loss = |p: &[f64]| -> pqwgan::Result<f64> {
        let mut c = base.clone();
        c.params_mut().copy_from_slice(p);
        let mut total = 0.0;
        for (x, w) in xs.iter().zip(weights) {
            total += w * c.score(x)?;
        }
        Ok(total / xs.len() as f64)
    };
    let fd = qsim::finite_difference_grad(loss, critic.params(), FD_STEP).unwrap();
    let worst_b = analytic
        .iter()
        .zip(&fd)
        .map(|(&a, &b)| rel_err(a, b))
        .fold(0.0, f64::max);
    assert!(worst_b < TOL_FIRST_ORDER, "critic gradient: {worst_b}");

    let mut big = Mlp::critic(784).unwrap();
    big.init_glorot(&mut rng);
    let x_big: Vec<f64> = (0..784).map(|_| rng.random::<f64>()).collect();
    let analytic_big = big.batch_score_grad(&[&x_big], &[1.0]).unwrap();
    let mut worst_big = 0.0f64;
    for _ in 0..40 {
        let k = rng.random_range(0..big.n_params());
        let saved = big.params()[k];
        big.params_mut()[k] = saved + FD_STEP;
        let plus = big.score(&x_big).unwrap();
        big.params_mut()[k] = saved - FD_STEP;
        let minus = big.score(&x_big).unwrap();
        big.params_mut()[k] = saved;
        worst_big = worst_big.max(rel_err(analytic_big[k], (plus - minus) / (2.0 * FD_STEP)));
    }
    assert!(worst_big < TOL_FIRST_ORDER, "784-scale spot check: {worst_big}");

    // (c) Gradient-penalty second-order gradient, and exactly-zero bias rows.
    let mut critic = Mlp::new(vec![9, 11, 7, 1], 0.2, OutputActivation::Identity).unwrap();
    critic.init_glorot(&mut rng);
    let x: Vec<f64> = (0..9).map(|_| rng.random::<f64>()).collect();
    let x_fake: Vec<f64> = (0..9).map(|_| rng.random::<f64>()).collect();
    let (eps, lambda) = (0.37, 10.0);
    let (_, analytic) = critic.gradient_penalty(&x, &x_fake, eps, lambda).unwrap();
    let base = critic.clone();
    let loss = |p: &[f64]| -> pqwgan::Result<f64> {
        let mut c = base.clone();
        c.params_mut().copy_from_slice(p);
        Ok(c.gradient_penalty(&x, &x_fake, eps, lambda)?.0)
    };
    let fd = qsim::finite_difference_grad(loss, critic.params(), FD_STEP).unwrap();
    let worst_c = analytic
        .iter()
        .zip(&fd)
        .map(|(&a, &b)| rel_err(a, b))
        .fold(0.0, f64::max);
    assert!(worst_c < TOL_SECOND_ORDER, "penalty gradient: {worst_c}");
    let mut off = 0;
    for (l, pair) in critic.dims().windows(2).enumerate() {
        let (inp, out) = (pair[0], pair[1]);
        for (b, &g) in analytic[off + out * inp..off + out * inp + out].iter().enumerate() {
            assert_eq!(g, 0.0, "bias {b} of layer {l} has nonzero penalty gradient");
        }
        off += out * inp + out;
    }

    // (d) Parameter shift equals reverse mode on plain expectations.
    let mut worst_d = 0.0f64;
    for trial in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(3500 + trial);
        let n = rng.random_range(1..=3);
        let layers = rng.random_range(0..=2);
        let mut circuit = Circuit::new(n);
        for q in 0..n {
            circuit.ry(q);
        }
        for _ in 0..layers {
            for q in 0..n {
                circuit.rot(q);
            }
            for q in 0..n.saturating_sub(1) {
                circuit.cnot(q, q + 1);
            }
        }
        let angles: Vec<f64> = (0..circuit.n_params())
            .map(|_| 2.0 * std::f64::consts::PI * rng.random::<f64>())
            .collect();
        let obs: Vec<f64> = (0..1 << n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let reverse = qsim::reverse_grad(&circuit, &angles, 0, &obs).unwrap();
        let shift = qsim::parameter_shift_grad(
            |a| {
                Ok(circuit
                    .run(a)?
                    .probabilities()
                    .iter()
                    .zip(&obs)
                    .map(|(p, w)| p * w)
                    .sum())
            },
            &angles,
        )
        .unwrap();
        for (a, b) in reverse.iter().zip(&shift) {
            worst_d = worst_d.max((a - b).abs());
        }
    }
    assert!(worst_d <= TOL_SHIFT, "parameter shift vs reverse: {worst_d}");

    report(
        3,
        start,
        120,
        &format!(
            "pipeline {worst_a:.1e}, critic {worst_b:.1e}/{worst_big:.1e}, penalty {worst_c:.1e}, shift {worst_d:.1e}"
        ),
    );
}

#[test]
fn criterion_4_wasserstein_estimate_on_point_masses() {
    const ANALYTIC_W: f64 = 4.0;
    const REL_TOL: f64 = 0.2;
    const STEPS: usize = 500;
    const GP_DRAWS: usize = 16;
    const LR: f64 = 1e-3;
    let start = Instant::now();

    let real = vec![1.0; 16];
    let fake = vec![0.0; 16];
    let mut critic = Mlp::critic(16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    critic.init_glorot(&mut rng);
    let mut adam = AdamState::new(critic.n_params());
    let lambda = 10.0;

    for _ in 0..STEPS {
        let mut grad = critic.batch_score_grad(&[&fake], &[1.0]).unwrap();
        let neg = critic.batch_score_grad(&[&real], &[-1.0]).unwrap();
        for (g, n) in grad.iter_mut().zip(&neg) {
            *g += n;
        }
        for _ in 0..GP_DRAWS {
            let eps = rng.random::<f64>();
            let (_, pg) = critic.gradient_penalty(&real, &fake, eps, lambda).unwrap();
            for (g, p) in grad.iter_mut().zip(&pg) {
                *g += p / GP_DRAWS as f64;
            }
        }
        adam.update(critic.params_mut(), &grad, LR, 0.0, 0.9, 1e-8);
    }

    let estimate = critic.score(&real).unwrap() - critic.score(&fake).unwrap();
    let rel = (estimate - ANALYTIC_W).abs() / ANALYTIC_W;
    assert!(
        rel <= REL_TOL,
        "estimate {estimate} vs analytic {ANALYTIC_W}: off by {:.1}%",
        rel * 100.0
    );

    report(
        4,
        start,
        60,
        &format!("estimate {estimate:.4} vs analytic 4 ({:.1}% off)", rel * 100.0),
    );
}

/// Regression bound for the bars run. The first verified run of this suite
/// reached 1.4573; the bound sits a few percent above that to absorb libm
/// differences across platforms while still catching any real regression
/// (a broken optimizer plateaus near 3.4 on this dataset).
const BARS_W300_BOUND: f64 = 1.55;

#[test]
fn criterion_5_bars_training_converges() {
    let start = Instant::now();

    let gen_cfg = GeneratorConfig {
        n_patches: 8,
        n_data: 3,
        n_ancilla: 1,
        n_layers: 4,
        image_height: 8,
        image_width: 8,
        patch_height: 1,
        patch_width: 8,
        prior: PriorKind::Uniform01,
    };
    let tcfg = TrainConfig {
        generator_iterations: 300,
        checkpoint_every: 0,
        seed: 5,
        ..TrainConfig::default()
    };
    // One image per class: a two-point dataset (one vertical bar, one
    // horizontal bar) keeps the run inside the desk-scale time budget and
    // gives the optimizer a target it can close most of the distance to.
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let dataset = data::synthetic_bars(8, 1, &mut rng);
    let output = trainer::train(&tcfg, &gen_cfg, &dataset, |_| Ok(())).unwrap();

    let w_at = |iter: usize| -> f64 {
        output
            .log
            .records
            .iter()
            .find(|r| r.kind == RecordKind::Generator && r.iteration == iter)
            .and_then(|r| r.wasserstein)
            .unwrap()
    };
    let w10 = w_at(10);
    let w300 = w_at(300);
    assert!(
        w300 <= 0.5 * w10,
        "wasserstein at 300 ({w300}) is not half of its value at 10 ({w10})"
    );
    assert!(
        w300 <= BARS_W300_BOUND,
        "wasserstein at 300 ({w300}) regressed past the frozen bound {BARS_W300_BOUND}"
    );

    report(
        5,
        start,
        600,
        &format!("wasserstein {w10:.4} at iter 10 → {w300:.4} at iter 300"),
    );
}

/// MNIST IDX files if the user supplied any (via `MNIST_DATA_DIR` or
/// `data/mnist/` in the workspace root), else a synthetic 28x28 stand-in
/// written through the same IDX writer the tool reads back.
fn smoke_dataset(dir: &Path) -> (PathBuf, PathBuf, &'static str) {
    let candidates = [
        std::env::var("MNIST_DATA_DIR").ok().map(PathBuf::from),
        Some(workspace_root().join("data/mnist")),
    ];
    for base in candidates.into_iter().flatten() {
        let images = base.join("train-images-idx3-ubyte");
        let labels = base.join("train-labels-idx1-ubyte");
        if images.is_file() && labels.is_file() {
            return (images, labels, "user-supplied MNIST IDX files");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    let set = data::synthetic_bars(28, 100, &mut rng);
    let images = dir.join("images.idx");
    let labels = dir.join("labels.idx");
    data::write_idx_images(&set.images, set.range, &images).unwrap();
    data::write_idx_labels(&set.labels, &labels).unwrap();
    (images, labels, "synthetic 28x28 fallback (no MNIST files found)")
}

#[test]
fn criterion_6_full_training_smoke_is_deterministic() {
    const ITERATIONS: usize = 50;
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    let (images, labels, source) = smoke_dataset(dir.path());
    println!("criterion 6: data source: {source}");

    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        format!(
            r#"{{
  "n_patches": 28, "n_data": 7, "n_ancilla": 1, "n_layers": 8,
  "image_height": 28, "image_width": 28,
  "patch_height": 1, "patch_width": 28,
  "generator_iterations": {ITERATIONS}, "checkpoint_every": {ITERATIONS},
  "seed": 6
}}"#
        ),
    )
    .unwrap();

    for name in ["r1", "r2"] {
        let out = run_bin(&[
            "train",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.path().join(name).to_str().unwrap(),
            "--dataset-images",
            images.to_str().unwrap(),
            "--dataset-labels",
            labels.to_str().unwrap(),
            "--classes",
            "0,1",
            "--per-class",
            "100",
        ]);
        assert_ok(&out);
    }

    let r1 = dir.path().join("r1");
    let artifacts = [
        "final.params",
        "log.csv",
        &format!("checkpoints/iter_{ITERATIONS:06}.params"),
        &format!("grids/iter_{ITERATIONS:06}.pgm"),
    ];
    for rel in artifacts {
        let a = std::fs::read(r1.join(rel)).unwrap();
        let b = std::fs::read(dir.path().join("r2").join(rel)).unwrap();
        assert!(!a.is_empty(), "{rel} is empty");
        assert_eq!(a, b, "{rel} differs between identical-seed runs");
    }

    let log = std::fs::read_to_string(r1.join("log.csv")).unwrap();
    assert_eq!(log.lines().count(), 1 + ITERATIONS * 6, "log record count");

    // Invariants on freshly generated batches from the trained parameters.
    let params = read_params_file(&r1.join("final.params"), (28, 8, 8));
    let cfg = GeneratorConfig::default_28x28();
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for _ in 0..3 {
        for _ in 0..25 {
            let z = sample_prior(cfg.prior, cfg.n_qubits(), &mut rng);
            let img = generator::generate(&params, &z, &cfg).unwrap();
            assert_eq!((img.height, img.width), (28, 28));
            for &p in &img.pixels {
                assert!(p.is_finite() && (0.0..=1.0).contains(&p), "pixel {p}");
            }
        }
    }

    report(
        6,
        start,
        3600,
        &format!("two {ITERATIONS}-iteration runs byte-identical, invariants hold ({source})"),
    );
}

#[test]
fn criterion_7_interpolation_frames_and_continuity() {
    const SEGMENTS: usize = 10;
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    let cfg = GeneratorConfig {
        n_patches: 8,
        n_data: 3,
        n_ancilla: 1,
        n_layers: 4,
        image_height: 8,
        image_width: 8,
        patch_height: 1,
        patch_width: 8,
        prior: PriorKind::Uniform01,
    };
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{
  "n_patches": 8, "n_data": 3, "n_ancilla": 1, "n_layers": 4,
  "image_height": 8, "image_width": 8,
  "patch_height": 1, "patch_width": 8,
  "generator_iterations": 0, "seed": 70
}"#,
    )
    .unwrap();
    let spec = dir.path().join("sweep.json");
    std::fs::write(
        &spec,
        r#"{
  "base": { "n_patches": 8, "n_data": 3, "n_ancilla": 1, "n_layers": 4,
            "image_height": 8, "image_width": 8,
            "patch_height": 1, "patch_width": 8,
            "generator_iterations": 0, "seed": 70 },
  "dataset": { "kind": "none" },
  "runs": [ { "name": "init" } ]
}"#,
    )
    .unwrap();
    assert_ok(&run_bin(&[
        "sweep",
        "--sweep-spec",
        spec.to_str().unwrap(),
        "--out",
        dir.path().join("sweep").to_str().unwrap(),
    ]));
    let params_path = dir.path().join("sweep/init/final.params");

    let strip_path = dir.path().join("strip.pgm");
    assert_ok(&run_bin(&[
        "interpolate",
        "--config",
        config_path.to_str().unwrap(),
        "--params",
        params_path.to_str().unwrap(),
        "--seed-a",
        "71",
        "--seed-b",
        "72",
        "--segments",
        "10",
        "--out",
        strip_path.to_str().unwrap(),
    ]));

    let (w, h, pixels) = read_pgm(&strip_path);
    let frames = SEGMENTS + 1;
    assert_eq!((w, h), (frames * 8 + (frames - 1) * 2, 8), "strip geometry");
    let frame = |f: usize| -> Vec<u8> {
        let x0 = f * 10;
        (0..8)
            .flat_map(|r| pixels[r * w + x0..r * w + x0 + 8].to_vec())
            .collect()
    };

    // Endpoint frames must equal direct generation bit for bit.
    let params = read_params_file(&params_path, (8, 4, 4));
    let direct = |seed: u64| -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = sample_prior(cfg.prior, cfg.n_qubits(), &mut rng);
        let img = generator::generate(&params, &z, &cfg).unwrap();
        img.pixels.iter().map(|&p| quantize(p)).collect()
    };
    assert_eq!(frame(0), direct(71), "first frame vs direct generation");
    assert_eq!(frame(SEGMENTS), direct(72), "last frame vs direct generation");

    // Continuity: shrinking a coordinate step by 10x shrinks the response
    // by at least ~10x (ratio bound 0.11) at 20 random base points.
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    let mut worst_ratio = 0.0f64;
    for _ in 0..20 {
        let z: Vec<f64> = (0..cfg.n_qubits()).map(|_| rng.random::<f64>()).collect();
        let base = generator::generate(&params, &z, &cfg).unwrap();
        for k in 0..cfg.n_qubits() {
            let d_at = |delta: f64| -> f64 {
                let mut zk = z.clone();
                zk[k] += delta;
                let img = generator::generate(&params, &zk, &cfg).unwrap();
                img.pixels
                    .iter()
                    .zip(&base.pixels)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            };
            let coarse = d_at(1e-3);
            let fine = d_at(1e-4);
            assert!(
                fine <= 0.11 * coarse + 1e-14,
                "coordinate {k}: |Δ|∞ {fine} at 1e-4 vs {coarse} at 1e-3"
            );
            if coarse > 0.0 {
                worst_ratio = worst_ratio.max(fine / coarse);
            }
        }
    }

    report(
        7,
        start,
        60,
        &format!("11 frames, endpoints bit-identical, worst step ratio {worst_ratio:.4}"),
    );
}
