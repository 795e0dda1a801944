//! Independent brute-force references for the test suites: a seeded
//! Monte Carlo estimator of the spherical angular-kernel integral, and a
//! dense scaling-and-squaring matrix exponential for master-equation
//! trajectories. Nothing here shares code with the engine paths it checks.

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Monte Carlo estimate of one kernel entry with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEntry {
    pub mean: f64,
    pub stderr: f64,
    pub imag_mean: f64,
    pub imag_stderr: f64,
}

/// Full Monte Carlo kernel estimate; entries indexed as [3i+h][3j+l].
#[derive(Debug)]
pub struct McKernel {
    pub entries: Vec<Vec<McEntry>>,
    pub samples: usize,
    pub seed: u64,
}

/// Unbiased estimator of
/// ∫ dΩ e^{i u·(r_i−r_j) ω/c} (δ_hl − u_h u_l)
/// by uniform sphere sampling (uniform in cosθ and φ), seeded and
/// reproducible.
pub fn kernel_mc(
    positions: &[Vector3<f64>],
    omega: f64,
    c: f64,
    samples: usize,
    seed: u64,
) -> McKernel {
    assert!(samples >= 10_000, "too few samples for a stable stderr");
    let n = positions.len();
    let dim = 3 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    let mut sum_sq_re = vec![vec![0.0f64; dim]; dim];
    let mut sum_sq_im = vec![vec![0.0f64; dim]; dim];
    for _ in 0..samples {
        let ct: f64 = rng.gen_range(-1.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        let u = [st * phi.cos(), st * phi.sin(), ct];
        let phases: Vec<Complex64> = positions
            .iter()
            .map(|r| Complex64::from_polar(1.0, (u[0] * r.x + u[1] * r.y + u[2] * r.z) * omega / c))
            .collect();
        for i in 0..n {
            for j in 0..n {
                let pair = phases[i] * phases[j].conj();
                for h in 0..3 {
                    for l in 0..3 {
                        let proj = if h == l { 1.0 } else { 0.0 } - u[h] * u[l];
                        // integrand scaled by sphere area 4π
                        let v = pair * proj * 4.0 * PI;
                        let (a, b) = (3 * i + h, 3 * j + l);
                        sum[a][b] += v;
                        sum_sq_re[a][b] += v.re * v.re;
                        sum_sq_im[a][b] += v.im * v.im;
                    }
                }
            }
        }
    }
    let ns = samples as f64;
    let entries = (0..dim)
        .map(|a| {
            (0..dim)
                .map(|b| {
                    let mean = sum[a][b] / ns;
                    let var_re = (sum_sq_re[a][b] / ns - mean.re * mean.re).max(0.0);
                    let var_im = (sum_sq_im[a][b] / ns - mean.im * mean.im).max(0.0);
                    McEntry {
                        mean: mean.re,
                        stderr: (var_re / ns).sqrt(),
                        imag_mean: mean.im,
                        imag_stderr: (var_im / ns).sqrt(),
                    }
                })
                .collect()
        })
        .collect();
    McKernel {
        entries,
        samples,
        seed,
    }
}

/// Dense matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = a.nrows();
    assert_eq!(dim, a.ncols());
    let norm = a.amax() * dim as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut result = DMatrix::<f64>::identity(dim, dim);
    let mut term = DMatrix::<f64>::identity(dim, dim);
    for k in 1..=30 {
        term = &term * &scaled / k as f64;
        result += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Reference evolution p(t) = e^{Gt} p0. Dense, for M <= 256.
pub fn evolve_expm(generator: &DMatrix<f64>, p0: &DVector<f64>, t: f64) -> DVector<f64> {
    assert!(generator.nrows() <= 256, "dense reference only");
    expm(&(generator * t)) * p0
}

/// Engine/oracle comparison record, serializable for CI artifacts.
#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub quantity: String,
    pub reference_value: f64,
    pub engine_value: f64,
    pub absolute_deviation: f64,
    pub relative_deviation: f64,
    pub method: String,
}

impl OracleReport {
    pub fn new(quantity: &str, reference: f64, engine: f64, method: String) -> Self {
        let absolute = (reference - engine).abs();
        let scale = reference.abs().max(engine.abs());
        OracleReport {
            quantity: quantity.to_string(),
            reference_value: reference,
            engine_value: engine,
            absolute_deviation: absolute,
            relative_deviation: if scale > 0.0 { absolute / scale } else { 0.0 },
            method,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}
