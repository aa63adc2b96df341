//! Monte Carlo check of the strong-regime two-block zero-forcing scheme.
//!
//! Codewords are i.i.d. unit-variance Gaussian samples. Only receiver 0 is
//! measured; by symmetry every user sees the same statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::rates::{classify, GaussParams, GaussRegime};

/// Name of the generator, recorded in every output.
pub const RNG_NAME: &str = "chacha8";

/// Standard-error multiple used by every statistical gate.
pub const SE_GATE: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("zero-forcing scheme needs INR >= 2 max(SNR, 1); got SNR={snr}, INR={inr}")]
    RegimeMismatch { snr: f64, inr: f64 },
    #[error("block length and trial count must be positive")]
    EmptyRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCConfig {
    pub params: GaussParams<f64>,
    pub block_len: usize,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveChannelStats {
    pub config: MCConfig,
    pub signal_power_hat: f64,
    pub noise_power_hat: f64,
    pub predicted_noise_power: f64,
    pub predicted_signal_lb: f64,
    pub samples: usize,
    pub rng: String,
    pub signal_power_se: f64,
    pub noise_power_se: f64,
    pub tx_power_hat: f64,
    pub tx_power_se: f64,
    pub noise_ok: bool,
    pub signal_ok: bool,
    pub tx_power_ok: bool,
}

impl EffectiveChannelStats {
    pub fn gates_pass(&self) -> bool {
        self.noise_ok && self.signal_ok && self.tx_power_ok
    }
}

/// `γ (√SNR + (K-1)√INR)(√INR - √SNR)`, the coefficient of the intended
/// codeword after zero-forcing. Exactly zero when `INR = SNR`.
pub fn zero_forcing_gain(p: &GaussParams<f64>) -> f64 {
    let (ss, si) = (p.snr.sqrt(), p.inr.sqrt());
    let gamma = 1.0 / (p.k as f64 * p.inr + 1.0).sqrt();
    gamma * (ss + (p.k as f64 - 1.0) * si) * (si - ss)
}

/// `(K² INR + 1) / (K INR + 1)`.
pub fn predicted_noise_power(p: &GaussParams<f64>) -> f64 {
    let k = p.k as f64;
    (k * k * p.inr + 1.0) / (k * p.inr + 1.0)
}

/// `(INR - SNR)² / (K INR + 1)`.
pub fn predicted_signal_lb(p: &GaussParams<f64>) -> f64 {
    let d = p.inr - p.snr;
    d * d / (p.k as f64 * p.inr + 1.0)
}

/// Pairwise summation with a fixed split, so the result depends only on the
/// input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Per-trial sums: signal², residual², residual⁴, x², x⁴, signal⁴.
type Sums = [f64; 6];

fn run_trial(p: &GaussParams<f64>, block_len: usize, seed: u64, trial: u64) -> Sums {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ trial);
    let k = p.k;
    let (ss, si) = (p.snr.sqrt(), p.inr.sqrt());
    let gamma = 1.0 / (k as f64 * p.inr + 1.0).sqrt();
    let combiner = gamma * (ss + (k as f64 - 1.0) * si);
    let gain = zero_forcing_gain(p);

    let mut cols: [Vec<f64>; 6] = Default::default();
    for col in cols.iter_mut() {
        col.reserve(block_len);
    }
    let mut cw = vec![0.0; k];
    let mut z1 = vec![0.0; k];
    let mut x2 = vec![0.0; k];
    for _ in 0..block_len {
        for i in 0..k {
            cw[i] = rng.sample(StandardNormal);
            z1[i] = rng.sample(StandardNormal);
        }
        let z02: f64 = rng.sample(StandardNormal);
        let total: f64 = cw.iter().sum();
        let y1: Vec<f64> = (0..k).map(|i| ss * cw[i] + si * (total - cw[i]) + z1[i]).collect();
        for i in 0..k {
            x2[i] = gamma * (y1[i] + (si - ss) * cw[i]);
        }
        let others: f64 = x2[1..].iter().sum();
        let y02 = ss * x2[0] + si * others + z02;
        let tilde = y02 - combiner * y1[0];
        let signal = gain * cw[0];
        let resid = tilde - signal;
        let (s2, r2, x) = (signal * signal, resid * resid, x2[0] * x2[0]);
        for (col, v) in cols.iter_mut().zip([s2, r2, r2 * r2, x, x * x, s2 * s2]) {
            col.push(v);
        }
    }
    cols.map(|c| pairwise_sum(&c))
}

fn mean_and_se(sum: f64, sum_sq: f64, n: f64) -> (f64, f64) {
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

/// Runs the two-block scheme and measures receiver 0's effective channel.
pub fn simulate_strong_two_block(cfg: &MCConfig) -> Result<EffectiveChannelStats, McError> {
    let p = &cfg.params;
    if classify(p) != GaussRegime::Strong {
        return Err(McError::RegimeMismatch { snr: p.snr, inr: p.inr });
    }
    if cfg.block_len == 0 || cfg.trials == 0 {
        return Err(McError::EmptyRun);
    }
    let per_trial: Vec<Sums> =
        (0..cfg.trials as u64).into_par_iter().map(|t| run_trial(p, cfg.block_len, cfg.seed, t)).collect();
    let total: Vec<f64> = (0..6)
        .map(|j| pairwise_sum(&per_trial.iter().map(|s| s[j]).collect::<Vec<_>>()))
        .collect();
    let n = (cfg.block_len * cfg.trials) as f64;
    let (signal, signal_se) = mean_and_se(total[0], total[5], n);
    let (noise, noise_se) = mean_and_se(total[1], total[2], n);
    let (tx, tx_se) = mean_and_se(total[3], total[4], n);
    let predicted_noise = predicted_noise_power(p);
    let lb = predicted_signal_lb(p);
    Ok(EffectiveChannelStats {
        config: *cfg,
        signal_power_hat: signal,
        noise_power_hat: noise,
        predicted_noise_power: predicted_noise,
        predicted_signal_lb: lb,
        samples: cfg.block_len * cfg.trials,
        rng: format!("{RNG_NAME}/{}", cfg.seed),
        signal_power_se: signal_se,
        noise_power_se: noise_se,
        tx_power_hat: tx,
        tx_power_se: tx_se,
        noise_ok: (noise - predicted_noise).abs() <= SE_GATE * noise_se,
        signal_ok: signal >= lb - SE_GATE * signal_se,
        tx_power_ok: tx <= 1.0 + SE_GATE * tx_se,
    })
}
