//! One-dimensional nested lattice pair `cZ ⊂ (c/M)Z` with dithering and
//! modulo-sum decoding.

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::function::erf::erfc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("coarse step must be positive and finite")]
    BadStep,
    #[error("refinement must be at least 2, got {0}")]
    BadRefinement(usize),
    #[error("need at least two users, got {0}")]
    TooFewUsers(usize),
    #[error("noise standard deviation must be finite and non-negative")]
    BadSigma,
}

/// Coarse lattice `cZ`, fine lattice `(c/M)Z`, codebook = fine points in the
/// coarse cell `[-c/2, c/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NestedLattice1D<T> {
    coarse: T,
    refinement: usize,
}

pub fn make_lattice<T: Float>(c: T, m: usize) -> Result<NestedLattice1D<T>, LatticeError> {
    if !(c.is_finite() && c > T::zero()) {
        return Err(LatticeError::BadStep);
    }
    if m < 2 {
        return Err(LatticeError::BadRefinement(m));
    }
    Ok(NestedLattice1D { coarse: c, refinement: m })
}

impl<T: Float> NestedLattice1D<T> {
    pub fn coarse_step(&self) -> T {
        self.coarse
    }

    pub fn refinement(&self) -> usize {
        self.refinement
    }

    pub fn fine_step(&self) -> T {
        self.coarse / self.m()
    }

    fn m(&self) -> T {
        T::from(self.refinement).expect("small integer")
    }

    /// Smallest fine index whose point lies in the coarse cell.
    fn first_index(&self) -> i64 {
        -((self.refinement / 2) as i64)
    }

    /// `j c / M` for `j = ⌈-M/2⌉, …, ⌈M/2⌉ - 1`, in increasing order.
    pub fn codebook(&self) -> Vec<T> {
        (0..self.refinement as i64).map(|i| self.point(self.first_index() + i)).collect()
    }

    pub fn point(&self, j: i64) -> T {
        T::from(j).expect("small integer") * self.fine_step()
    }

    /// Second moment of the coarse cell, `c²/12`.
    pub fn second_moment(&self) -> T {
        self.coarse * self.coarse / T::from(12.0).expect("constant")
    }

    /// `x - Q(x)` with `Q` rounding to the nearest coarse point. The result
    /// lies in `[-c/2, c/2)`; a tie goes to the upper coarse point.
    pub fn mod_lattice(&self, x: T) -> T {
        let half = T::from(0.5).expect("constant");
        let r = x - self.coarse * (x / self.coarse + half).floor();
        // guards against r == c/2 after rounding
        if r >= self.coarse * half {
            r - self.coarse
        } else {
            r
        }
    }

    /// Nearest fine index, reduced to `0..M`.
    pub fn fine_class(&self, x: T) -> usize {
        let j = (x / self.fine_step()).round().to_i64().expect("finite input");
        j.rem_euclid(self.refinement as i64) as usize
    }

    /// Codebook position `0..M` of fine index `j`, inverse of `codebook()[pos]`.
    pub fn class_of_index(&self, j: i64) -> usize {
        j.rem_euclid(self.refinement as i64) as usize
    }

    pub fn first_fine_index(&self) -> i64 {
        self.first_index()
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Probability that Gaussian noise of deviation `sigma` rounds to a multiple
/// of `c` on the fine lattice, i.e. that modulo-sum decoding succeeds.
pub fn sum_decode_prediction(lat: &NestedLattice1D<f64>, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    let c = lat.coarse_step();
    let delta = lat.fine_step() / 2.0;
    let reach = ((12.0 * sigma + delta) / c).ceil() as i64 + 1;
    (-reach..=reach)
        .map(|j| {
            let centre = j as f64 * c;
            std_normal_cdf((centre + delta) / sigma) - std_normal_cdf((centre - delta) / sigma)
        })
        .sum::<f64>()
        .min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumDecodeStats {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub predicted: f64,
    /// Binomial standard error at the predicted rate.
    pub se: f64,
}

/// Dithered modulo-sum decoding of `K` codewords in additive Gaussian noise.
pub fn sum_decode_check(
    k: usize,
    lat: &NestedLattice1D<f64>,
    noise_sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<SumDecodeStats, LatticeError> {
    if k < 2 {
        return Err(LatticeError::TooFewUsers(k));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(LatticeError::BadSigma);
    }
    let c = lat.coarse_step();
    let m = lat.refinement() as i64;
    let mut successes = 0;
    for trial in 0..trials as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ trial);
        let mut index_sum = 0i64;
        let mut dither_sum = 0.0;
        let mut received = 0.0;
        for _ in 0..k {
            let j = lat.first_fine_index() + rng.random_range(0..m);
            let d = (rng.random::<f64>() - 0.5) * c;
            index_sum += j;
            dither_sum += d;
            received += lat.mod_lattice(lat.point(j) - d);
        }
        if noise_sigma > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            received += noise_sigma * z;
        }
        let estimate = lat.mod_lattice(received + dither_sum);
        if lat.fine_class(estimate) == lat.class_of_index(index_sum) {
            successes += 1;
        }
    }
    let predicted = sum_decode_prediction(lat, noise_sigma);
    Ok(SumDecodeStats {
        trials,
        successes,
        success_rate: successes as f64 / trials as f64,
        predicted,
        se: (predicted * (1.0 - predicted) / trials as f64).sqrt(),
    })
}

/// Kolmogorov–Smirnov distance between `samples` and the uniform law on
/// `[lo, hi)`.
pub fn ks_uniform(samples: &[f64], lo: f64, hi: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Dithered transmit values `[s - d] mod cZ` for `n` random codewords and
/// dithers.
pub fn dithered_samples(lat: &NestedLattice1D<f64>, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = lat.refinement() as i64;
    let c = lat.coarse_step();
    (0..n)
        .map(|_| {
            let j = lat.first_fine_index() + rng.random_range(0..m);
            let d = (rng.random::<f64>() - 0.5) * c;
            lat.mod_lattice(lat.point(j) - d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codebook_shape() {
        let l = make_lattice(1.0, 4).unwrap();
        assert_eq!(l.codebook(), vec![-0.5, -0.25, 0.0, 0.25]);
        let l3 = make_lattice(3.0, 3).unwrap();
        assert_eq!(l3.codebook(), vec![-1.0, 0.0, 1.0]);
        assert!(make_lattice(0.0, 4).is_err());
        assert!(make_lattice(1.0, 1).is_err());
    }

    #[test]
    fn codewords_are_fixed_points() {
        for m in [2, 3, 4, 7, 8] {
            let l = make_lattice(1.0, m).unwrap();
            for x in l.codebook() {
                assert_eq!(l.mod_lattice(x), x);
            }
        }
    }

    #[test]
    fn mod_examples() {
        let l = make_lattice(1.0, 4).unwrap();
        assert_eq!(l.mod_lattice(0.75), -0.25);
        assert_eq!(l.mod_lattice(0.5), -0.5);
        assert_eq!(l.mod_lattice(-0.5), -0.5);
        for k in -5..=5 {
            assert_eq!(l.mod_lattice(k as f64), 0.0);
        }
        assert_eq!(l.second_moment(), 1.0 / 12.0);
    }

    #[test]
    fn works_in_single_precision() {
        let l = make_lattice(2.0f32, 8).unwrap();
        assert_eq!(l.mod_lattice(1.5f32), -0.5);
        assert_eq!(l.codebook().len(), 8);
    }

    #[test]
    fn prediction_limits() {
        let l = make_lattice(1.0, 8).unwrap();
        assert_eq!(sum_decode_prediction(&l, 0.0), 1.0);
        assert!(sum_decode_prediction(&l, 1.0 / 800.0) > 1.0 - 1e-12);
        assert!((sum_decode_prediction(&l, 50.0) - 1.0 / 8.0).abs() < 1e-6);
        // δ/σ = 2: two-sided tail 2Q(2) ≈ 0.0455
        let p = sum_decode_prediction(&l, 1.0 / 32.0);
        assert!((p - (1.0 - 0.045_500_263_896)).abs() < 1e-9);
    }

    #[test]
    fn noiseless_decoding_is_exact() {
        let l = make_lattice(1.0, 8).unwrap();
        let s = sum_decode_check(3, &l, 0.0, 2000, 5).unwrap();
        assert_eq!(s.successes, 2000);
    }

    #[test]
    fn huge_noise_approaches_uniform_guess() {
        let l = make_lattice(1.0, 4).unwrap();
        let s = sum_decode_check(2, &l, 100.0, 20_000, 1).unwrap();
        assert!((s.success_rate - 0.25).abs() < 0.02, "{}", s.success_rate);
    }

    #[test]
    fn ks_detects_non_uniform() {
        let skewed: Vec<f64> = (0..1000).map(|i| (i as f64 / 1000.0).powi(2) - 0.5).collect();
        assert!(ks_uniform(&skewed, -0.5, 0.5) > ks_critical_1pct(1000));
        let even: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0 - 0.5).collect();
        assert!(ks_uniform(&even, -0.5, 0.5) < 1e-3);
    }
}
