//! Closed-form rates, bounds and GDoF curves.
//!
//! Deterministic-model rates are exact rationals. Gaussian expressions are
//! generic over a floating scalar; all logarithms are base 2 and rates are in
//! bits per real channel use.

use std::cmp::Ordering;
use std::fmt;

use num_traits::Float;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::SignMatrix;
use crate::Rational;

/// Absolute tolerance for rate comparisons.
pub const RATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("INR/SNR = {ratio} lies in the excluded band (1/2, 2)")]
    ExcludedRegime { ratio: f64 },
    #[error("{0}")]
    DomainError(String),
}

#[inline]
fn c<T: Float>(x: f64) -> T {
    T::from(x).expect("representable constant")
}

/// Symmetric capacity of the deterministic channel.
pub fn det_converse(n: usize, m: usize, k: usize) -> Rational {
    let (n, m, k) = (n as i64, m as i64, k as i64);
    match m.cmp(&n) {
        Ordering::Less => Rational::new(2 * n - m, 2),
        Ordering::Equal => Rational::new(n, k),
        Ordering::Greater => Rational::new(m, 2),
    }
}

/// Symmetric capacity of the three-user signed channel.
pub fn qsym_converse(n: usize, m: usize, signs: &SignMatrix) -> Result<Rational, RateError> {
    if signs.k() != 3 {
        return Err(RateError::DomainError(format!(
            "signed-channel capacity is known for K = 3 only, got K = {}",
            signs.k()
        )));
    }
    Ok(match m.cmp(&n) {
        Ordering::Less | Ordering::Greater => det_converse(n, m, 3),
        Ordering::Equal if signs.plus_identity_rank() == 3 => Rational::new(n as i64, 2),
        Ordering::Equal => Rational::new(n as i64, 3),
    })
}

/// Per-user GDoF with feedback; `None` at `alpha = 1`.
pub fn gdof_fb<T: Float>(alpha: T) -> Option<T> {
    let one = T::one();
    let two = c::<T>(2.0);
    match alpha.partial_cmp(&one)? {
        Ordering::Less => Some(one - alpha / two),
        Ordering::Equal => None,
        Ordering::Greater => Some(alpha / two),
    }
}

/// Per-user GDoF without feedback.
pub fn gdof_nofb<T: Float>(alpha: T, k: usize) -> T {
    let one = T::one();
    let two = c::<T>(2.0);
    if alpha <= c(0.5) {
        one - alpha
    } else if alpha <= c(2.0 / 3.0) {
        alpha
    } else if alpha < one {
        one - alpha / two
    } else if alpha == one {
        one / c(k as f64)
    } else if alpha <= two {
        alpha / two
    } else {
        one
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussParams<T> {
    pub snr: T,
    pub inr: T,
    pub k: usize,
}

impl<T: Float> GaussParams<T> {
    pub fn new(snr: T, inr: T, k: usize) -> Result<Self, RateError> {
        if k < 2 {
            return Err(RateError::DomainError(format!("K must be at least 2, got {k}")));
        }
        if !(snr.is_finite() && inr.is_finite()) || snr <= T::zero() || inr < T::zero() {
            return Err(RateError::DomainError("need finite SNR > 0 and INR >= 0".into()));
        }
        Ok(GaussParams { snr, inr, k })
    }

    fn kf(&self) -> T {
        c(self.k as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GaussRegime {
    Negligible,
    Weak,
    Strong,
    Excluded,
}

impl fmt::Display for GaussRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GaussRegime::Negligible => "negligible",
            GaussRegime::Weak => "weak",
            GaussRegime::Strong => "strong",
            GaussRegime::Excluded => "excluded",
        })
    }
}

/// Closed intervals, first match in the order negligible, weak, strong.
pub fn classify<T: Float>(p: &GaussParams<T>) -> GaussRegime {
    let two = c::<T>(2.0);
    if p.inr < two {
        GaussRegime::Negligible
    } else if p.inr <= p.snr / two {
        GaussRegime::Weak
    } else if p.inr >= two * p.snr.max(T::one()) {
        GaussRegime::Strong
    } else {
        GaussRegime::Excluded
    }
}

/// `¼ log(1 + SNR + INR) + ¼ log(1 + SNR / (1 + INR))`.
pub fn c_sym_tilde<T: Float>(p: &GaussParams<T>) -> T {
    let one = T::one();
    let q = c::<T>(0.25);
    q * (one + p.snr + p.inr).log2() + q * (one + p.snr / (one + p.inr)).log2()
}

/// `C̃ + (K - 1)/4 + ½ log K`.
pub fn gauss_upper<T: Float>(p: &GaussParams<T>) -> T {
    let k = p.kf();
    c_sym_tilde(p) + (k - T::one()) / c(4.0) + c::<T>(0.5) * k.log2()
}

/// Right-hand sides of the five weak-regime decodability constraints and
/// the chosen rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakConstraints<T> {
    pub r0_bound_1: T,
    pub r0_bound_2: T,
    pub r0_bound_3: T,
    pub r1_bound: T,
    pub r2_bound: T,
    pub r0_star: T,
    pub r1_star: T,
    pub r2_star: T,
}

impl<T: Float> WeakConstraints<T> {
    pub fn evaluate(p: &GaussParams<T>) -> Self {
        let one = T::one();
        let half = c::<T>(0.5);
        let k = p.kf();
        let (snr, inr) = (p.snr, p.inr);
        let (ss, si) = (snr.sqrt(), inr.sqrt());
        let denom = snr + k * inr;
        let r_user = half * (one + snr / (k * inr)).log2();
        let lift = ss + (k - one) * si;
        WeakConstraints {
            r0_bound_1: half * ((inr - one) / (k + one)).log2(),
            r0_bound_2: half * ((inr - one) * lift * lift / denom).log2(),
            r0_bound_3: half * ((inr - one) * (ss - si) * (ss - si) / denom).log2(),
            r1_bound: r_user,
            r2_bound: r_user,
            r0_star: half * ((inr - one) / (c::<T>(8.0) * (k + one))).log2(),
            r1_star: r_user,
            r2_star: r_user,
        }
    }

    pub fn hold(&self) -> bool {
        let tol = c::<T>(RATE_TOL);
        self.r0_star <= self.r0_bound_1 + tol
            && self.r0_star <= self.r0_bound_2 + tol
            && self.r0_star <= self.r0_bound_3 + tol
            && self.r1_star <= self.r1_bound + tol
            && self.r2_star <= self.r2_bound + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Achievable<T> {
    pub rate: T,
    pub regime: GaussRegime,
    /// Weak regime only: whether the chosen rates meet all five constraints.
    pub constraints_ok: Option<bool>,
}

/// Rate of the scheme matched to the regime.
pub fn gauss_achievable<T: Float>(p: &GaussParams<T>) -> Result<Achievable<T>, RateError> {
    let one = T::one();
    let half = c::<T>(0.5);
    let k = p.kf();
    let regime = classify(p);
    let (rate, constraints_ok) = match regime {
        GaussRegime::Negligible => (half * (one + p.snr / (one + (k - one) * p.inr)).log2(), None),
        GaussRegime::Weak => {
            let w = WeakConstraints::evaluate(p);
            (half * (w.r0_star + w.r1_star + w.r2_star), Some(w.hold()))
        }
        GaussRegime::Strong => {
            let d = p.inr - p.snr;
            (c::<T>(0.25) * (one + d * d / (k * (k * p.inr + one))).log2(), None)
        }
        GaussRegime::Excluded => {
            return Err(RateError::ExcludedRegime { ratio: (p.inr / p.snr).to_f64().unwrap_or(f64::NAN) })
        }
    };
    Ok(Achievable { rate, regime, constraints_ok })
}

/// Upper bound on the symmetric rate at `INR = SNR`.
pub fn alpha_one_upper<T: Float>(snr: T, k: usize) -> T {
    let kf = c::<T>(k as f64);
    let two = c::<T>(2.0);
    (T::one() + kf * kf * snr).log2() / (two * kf) + (kf - T::one()) / (two * kf)
}

/// Gap constant for the weak and strong regimes, `¼ log(16 K² (K + 1))`.
pub fn gap_coded<T: Float>(k: usize) -> T {
    let kf = c::<T>(k as f64);
    c::<T>(0.25) * (c::<T>(16.0) * kf * kf * (kf + T::one())).log2()
}

/// Gap constant for treating interference as noise, `¼ log(3 (K - 1)²)`.
pub fn gap_tin<T: Float>(k: usize) -> T {
    let km1 = c::<T>(k as f64 - 1.0);
    c::<T>(0.25) * (c::<T>(3.0) * km1 * km1).log2()
}

/// One grid point of the gap sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint<T> {
    pub params: GaussParams<T>,
    pub regime: GaussRegime,
    /// NaN in the excluded band.
    pub achievable: T,
    pub upper: T,
    pub c_tilde: T,
    pub gap_ok: bool,
    /// Names of failed checks; empty when `gap_ok`.
    pub violations: Vec<&'static str>,
}

/// Evaluates every gap claim that applies at `p`. Excluded points make no
/// claim and report `gap_ok = true`.
pub fn gap_point<T: Float>(p: &GaussParams<T>) -> RatePoint<T> {
    let tol = c::<T>(RATE_TOL);
    let one = T::one();
    let kf = p.kf();
    let c_tilde = c_sym_tilde(p);
    let upper = gauss_upper(p);
    let mut violations = Vec::new();
    let (regime, achievable) = match gauss_achievable(p) {
        Ok(a) => (a.regime, a.rate),
        Err(_) => (GaussRegime::Excluded, T::nan()),
    };
    match regime {
        GaussRegime::Excluded => {}
        GaussRegime::Negligible => {
            if achievable < c_tilde - gap_tin::<T>(p.k) - tol {
                violations.push("tin_gap");
            }
        }
        GaussRegime::Weak | GaussRegime::Strong => {
            if achievable < c_tilde - gap_coded::<T>(p.k) - tol {
                violations.push("coded_gap");
            }
        }
    }
    if regime != GaussRegime::Excluded && achievable > upper + tol {
        violations.push("above_upper");
    }
    if regime == GaussRegime::Weak {
        let lhs = (p.inr - one) / (c::<T>(8.0) * (kf + one)) * (one + p.snr / (kf * p.inr));
        let rhs = (one + p.inr + p.snr) / (c::<T>(16.0) * kf * (kf + one));
        if lhs < rhs - tol {
            violations.push("weak_simplify");
        }
        if gauss_achievable(p).ok().and_then(|a| a.constraints_ok) != Some(true) {
            violations.push("weak_constraints");
        }
    }
    if p.inr >= c::<T>(2.0) * p.snr {
        let d = p.inr - p.snr;
        let lhs = one + d * d / (kf * (kf * p.inr + one));
        let rhs = (one + p.snr + p.inr) / (c::<T>(8.0) * kf * kf);
        if lhs < rhs - tol {
            violations.push("strong_simplify");
        }
    }
    RatePoint { params: *p, regime, achievable, upper, c_tilde, gap_ok: violations.is_empty(), violations }
}

/// [`gap_point`] over a grid, in parallel, sorted by `(snr, inr, k)`.
pub fn gap_report<T: Float + Send + Sync>(grid: &[GaussParams<T>]) -> Vec<RatePoint<T>> {
    let mut out: Vec<RatePoint<T>> = grid.par_iter().map(gap_point).collect();
    out.sort_by(|a, b| {
        let (x, y) = (&a.params, &b.params);
        x.snr
            .partial_cmp(&y.snr)
            .unwrap_or(Ordering::Equal)
            .then(x.inr.partial_cmp(&y.inr).unwrap_or(Ordering::Equal))
            .then(x.k.cmp(&y.k))
    });
    out
}

/// Leakage bound on any unintended message at a receiver, with its
/// decomposition into two Gaussian terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecrecyBound<T> {
    /// `½ log(K / (K - 1))` per channel use.
    pub per_use: T,
    /// Per-use share of each Gaussian term, `¼ log(1 + 1/(K - 1))`.
    pub gaussian_terms: [T; 2],
}

pub fn secrecy_bound<T: Float>(k: usize) -> Result<SecrecyBound<T>, RateError> {
    if k < 3 {
        return Err(RateError::DomainError(format!("leakage bound needs K >= 3, got {k}")));
    }
    let kf = c::<T>(k as f64);
    let one = T::one();
    let term = c::<T>(0.25) * (one + one / (kf - one)).log2();
    Ok(SecrecyBound { per_use: c::<T>(0.5) * (kf / (kf - one)).log2(), gaussian_terms: [term, term] })
}
