//! Two-block feedback schemes for the deterministic channel, the
//! quasi-symmetric alignment solver, and randomized end-to-end verification.
//!
//! Every coded scheme has the same skeleton. Block one sends `q` fresh
//! symbols `a`. From feedback each transmitter strips its own contribution
//! and keeps the bottom `m` levels, the combined interference `I_k`. Block
//! two sends `A_k a + B_k w` where `w` is `I_k` (weak regime: `I_k` on top of
//! `n - m` further fresh symbols). The receiver solves a `2q x 2q` system in
//! `(a, w)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{
    run_feedback_session, DecodeError, DetParams, DetRegime, Feedback, FeedbackCode, SessionError, SignMatrix,
    Transcript,
};
use crate::field::{Field, GfElem, Prime};
use crate::matrix::{shift_matrix, Matrix};
use crate::rates::{det_converse, qsym_converse};
use crate::{GfMatrix, Rational};

/// Field sizes tried, in order, when the caller leaves `p` open.
pub const CANDIDATE_PRIMES: [u32; 6] = [2, 3, 5, 7, 11, 13];

/// Upper bound on candidate points visited by [`qsym_solve`].
pub const MAX_CANDIDATES: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("scheme needs {expected} but n={n}, m={m}")]
    RegimeMismatch { expected: &'static str, n: usize, m: usize },
    #[error("decode matrix of user {user} is singular (rank {rank} of {dim})")]
    SingularSystem { user: usize, rank: usize, dim: usize, matrix: GfMatrix },
    #[error(
        "no alignment solution over GF({p}) for the {regime:?} regime after {candidates} candidates; \
         user {worst_user} failed most often ({failures} times)"
    )]
    NoSolution { regime: DetRegime, p: u32, candidates: u64, worst_user: usize, failures: u64 },
    #[error("this construction is for the symmetric channel; drop the sign matrix")]
    SignsNotAllowed,
    #[error("a sign matrix is required")]
    SignsRequired,
    #[error("Λ+I is singular, so the aligned moderate scheme does not apply")]
    SingularLambdaPlusI,
    #[error("alignment solution does not satisfy ΛA+ΛBΛ = U+VΛ")]
    InvalidSolution,
    #[error("no candidate prime gives a decodable scheme")]
    NoPrime { last: Box<SchemeError> },
}

/// Diagonal alignment coefficients, one entry per user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlignmentSolution {
    pub a: Vec<GfElem>,
    pub b: Vec<GfElem>,
    pub u: Vec<GfElem>,
    pub v: Vec<GfElem>,
}

impl AlignmentSolution {
    /// `A = 0, B = 1, U = K - 1, V = K - 2`, which satisfies the identity for
    /// the all-ones sign matrix.
    pub fn symmetric(k: usize, p: Prime) -> Self {
        AlignmentSolution {
            a: vec![p.zero(); k],
            b: vec![p.one(); k],
            u: vec![p.elem(k as i64 - 1); k],
            v: vec![p.elem(k as i64 - 2); k],
        }
    }

    /// Checks `ΛA + ΛBΛ = U + VΛ` by explicit matrix products.
    pub fn satisfies(&self, signs: &SignMatrix, p: Prime) -> bool {
        let k = signs.k();
        if [&self.a, &self.b, &self.u, &self.v].iter().any(|d| d.len() != k) {
            return false;
        }
        let lam = signs.to_gf(p);
        let diag = |d: &[GfElem]| Matrix::from_fn(k, k, p.zero(), |i, j| if i == j { d[i] } else { p.zero() });
        let (a, b, u, v) = (diag(&self.a), diag(&self.b), diag(&self.u), diag(&self.v));
        let lhs = lam.mul(&a).and_then(|la| lam.mul(&b)?.mul(&lam)?.add(&la));
        let rhs = v.mul(&lam).and_then(|vl| u.add(&vl));
        matches!((lhs, rhs), (Ok(l), Ok(r)) if l == r)
    }

    /// Per-user value whose nonvanishing makes the decode matrix invertible.
    pub fn pivot(&self, regime: DetRegime, user: usize) -> GfElem {
        let k = user;
        match regime {
            DetRegime::Weak => self.b[k],
            DetRegime::Strong => self.u[k],
            DetRegime::Moderate => self.b[k] - self.a[k] + self.v[k] - self.u[k],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemeKind {
    Aligned { regime: DetRegime, solution: AlignmentSolution },
    TimeSharing,
}

/// Encoder and decoder for all users, with the rate it claims.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    pub params: DetParams,
    pub kind: SchemeKind,
    pub blocks: usize,
    pub msg_symbols: usize,
    pub declared_rate: Rational,
    decoders: Vec<GfMatrix>,
}

impl Scheme {
    pub fn decoder(&self, user: usize) -> Option<&GfMatrix> {
        self.decoders.get(user)
    }

    /// Swaps in a different decode matrix for `user`. Meant for fault
    /// injection in tests.
    pub fn with_decoder(mut self, user: usize, matrix: GfMatrix) -> Self {
        if let Some(slot) = self.decoders.get_mut(user) {
            *slot = matrix;
        }
        self
    }

    fn aligned(&self) -> Option<(DetRegime, &AlignmentSolution)> {
        match &self.kind {
            SchemeKind::Aligned { regime, solution } => Some((*regime, solution)),
            SchemeKind::TimeSharing => None,
        }
    }
}

impl FeedbackCode for Scheme {
    fn params(&self) -> &DetParams {
        &self.params
    }

    fn blocks(&self) -> usize {
        self.blocks
    }

    fn msg_symbols(&self) -> usize {
        self.msg_symbols
    }

    fn encode(&self, user: usize, message: &[GfElem], fb: &Feedback<'_>) -> Result<Vec<GfElem>, SessionError> {
        let params = &self.params;
        let (q, n, m, p) = (params.q(), params.n, params.m, params.p);
        let t = fb.block();
        let Some((regime, sol)) = self.aligned() else {
            return Ok(if t == user { message.to_vec() } else { vec![p.zero(); q] });
        };
        let first = &message[..q];
        if t == 0 {
            return Ok(first.to_vec());
        }
        let y1 = fb.output(0)?;
        let own = shift_matrix(q, q - n, p).mul_vec(first).expect("length q");
        let interference: Vec<GfElem> = y1.iter().zip(&own).skip(q - m).map(|(y, o)| *y - *o).collect();
        let mut w = interference;
        if regime == DetRegime::Weak {
            w.extend_from_slice(&message[q..]);
        }
        Ok(first.iter().zip(&w).map(|(x, wi)| sol.a[user] * *x + sol.b[user] * *wi).collect())
    }

    fn decode(&self, user: usize, outputs: &[Vec<GfElem>]) -> Result<Vec<GfElem>, DecodeError> {
        let params = &self.params;
        let (q, n, m) = (params.q(), params.n, params.m);
        let err = |reason: String| DecodeError { user, reason };
        if outputs.len() != self.blocks {
            return Err(err(format!("expected {} outputs, got {}", self.blocks, outputs.len())));
        }
        let Some((regime, _)) = self.aligned() else {
            return Ok(outputs[user][..n].to_vec());
        };
        let y: Vec<GfElem> = outputs.iter().flatten().copied().collect();
        let x = self.decoders[user].solve(&y).map_err(|e| err(e.to_string()))?;
        Ok(match regime {
            DetRegime::Weak => x[..n].iter().chain(&x[n + m..2 * n]).copied().collect(),
            DetRegime::Moderate | DetRegime::Strong => x[..q].to_vec(),
        })
    }
}

/// The `2q x 2q` matrix mapping `(a, w)` to user `user`'s two outputs.
///
/// Weak and moderate: `[[I, D], [A I + U D, B I + V D]]` with `D = D^{n-m}`.
/// Strong: `[[D, I], [U I + A D, V I + B D]]` with `D = D^{m-n}`.
pub fn decode_matrix(params: &DetParams, sol: &AlignmentSolution, user: usize) -> GfMatrix {
    let (q, p) = (params.q(), params.p);
    let (a, b, u, v) = (sol.a[user], sol.b[user], sol.u[user], sol.v[user]);
    let id = Matrix::identity(q, p.zero());
    let lin = |x: GfElem, y: GfElem, d: &GfMatrix| id.scale(&x).add(&d.scale(&y)).expect("same shape");
    let m = match params.regime() {
        DetRegime::Weak | DetRegime::Moderate => {
            let d = shift_matrix(q, q - params.m, p);
            Matrix::block2x2(&id, &d, &lin(a, u, &d), &lin(b, v, &d))
        }
        DetRegime::Strong => {
            let d = shift_matrix(q, q - params.n, p);
            Matrix::block2x2(&d, &id, &lin(u, a, &d), &lin(v, b, &d))
        }
    };
    m.expect("blocks are q x q")
}

fn build_aligned(params: &DetParams, sol: AlignmentSolution) -> Result<Scheme, SchemeError> {
    let regime = params.regime();
    let (n, m, q) = (params.n, params.m, params.q());
    let mut decoders = Vec::with_capacity(params.k);
    for user in 0..params.k {
        let mat = decode_matrix(params, &sol, user);
        let rank = mat.rank();
        if rank < 2 * q {
            return Err(SchemeError::SingularSystem { user, rank, dim: 2 * q, matrix: mat });
        }
        decoders.push(mat);
    }
    let msg_symbols = match regime {
        DetRegime::Weak => 2 * n - m,
        DetRegime::Moderate => n,
        DetRegime::Strong => m,
    };
    Ok(Scheme {
        params: params.clone(),
        kind: SchemeKind::Aligned { regime, solution: sol },
        blocks: 2,
        msg_symbols,
        declared_rate: Rational::new(msg_symbols as i64, 2),
        decoders,
    })
}

/// Weak-regime (`m < n`) scheme for the symmetric channel, rate `n - m/2`.
pub fn weak_scheme(params: &DetParams) -> Result<Scheme, SchemeError> {
    if params.signs.is_some() {
        return Err(SchemeError::SignsNotAllowed);
    }
    if params.m >= params.n {
        return Err(SchemeError::RegimeMismatch { expected: "m < n", n: params.n, m: params.m });
    }
    build_aligned(params, AlignmentSolution::symmetric(params.k, params.p))
}

/// Strong-regime (`m > n`) scheme for the symmetric channel, rate `m/2`.
pub fn strong_scheme(params: &DetParams) -> Result<Scheme, SchemeError> {
    if params.signs.is_some() {
        return Err(SchemeError::SignsNotAllowed);
    }
    if params.m <= params.n {
        return Err(SchemeError::RegimeMismatch { expected: "m > n", n: params.n, m: params.m });
    }
    build_aligned(params, AlignmentSolution::symmetric(params.k, params.p))
}

/// Time-sharing over `K` blocks for `m = n`, rate `n/K`. No feedback used.
pub fn moderate_scheme(params: &DetParams) -> Result<Scheme, SchemeError> {
    if params.m != params.n {
        return Err(SchemeError::RegimeMismatch { expected: "m = n", n: params.n, m: params.m });
    }
    Ok(Scheme {
        params: params.clone(),
        kind: SchemeKind::TimeSharing,
        blocks: params.k,
        msg_symbols: params.n,
        declared_rate: Rational::new(params.n as i64, params.k as i64),
        decoders: Vec::new(),
    })
}

/// Searches for diagonal `(A, B, U, V)` with `ΛA + ΛBΛ = U + VΛ` that is
/// non-degenerate for `regime`.
///
/// The off-diagonal entries give `K(K-1)` linear equations in `(A, B, V)`;
/// the diagonal entries fix `U_k = Σ_j λ_kj B_j λ_jk`. Points of the solution
/// space are visited by assigning free coordinates in the order
/// `1, 2, …, p-1, 0`, last coordinate fastest.
pub fn qsym_solve(signs: &SignMatrix, regime: DetRegime, p: Prime) -> Result<AlignmentSolution, SchemeError> {
    let k = signs.k();
    let lam = |r: usize, c: usize| p.elem(signs.get(r, c));
    let mut rows = Vec::with_capacity(k * (k - 1));
    for r in 0..k {
        for c in (0..k).filter(|&c| c != r) {
            let mut row = vec![p.zero(); 3 * k];
            row[c] = lam(r, c);
            for j in 0..k {
                row[k + j] = lam(r, j) * lam(j, c);
            }
            row[2 * k + r] = -lam(r, c);
            rows.push(row);
        }
    }
    let basis = Matrix::from_rows(rows, p.zero()).expect("rectangular").nullspace();

    let order: Vec<GfElem> = p.elements().skip(1).chain(std::iter::once(p.zero())).collect();
    let base = p.value() as u64;
    let total = (0..basis.len()).try_fold(1u64, |acc, _| acc.checked_mul(base)).unwrap_or(u64::MAX);
    let total = total.min(MAX_CANDIDATES);

    let mut failures = vec![0u64; k];
    for idx in 0..total {
        let mut point = vec![p.zero(); 3 * k];
        let mut rest = idx;
        for vec in basis.iter().rev() {
            let coef = order[(rest % base) as usize];
            rest /= base;
            for (x, b) in point.iter_mut().zip(vec) {
                *x = *x + coef * *b;
            }
        }
        let a = point[..k].to_vec();
        let b = point[k..2 * k].to_vec();
        let v = point[2 * k..].to_vec();
        let u = (0..k)
            .map(|r| (0..k).fold(p.zero(), |acc, j| acc + lam(r, j) * b[j] * lam(j, r)))
            .collect();
        let sol = AlignmentSolution { a, b, u, v };
        let mut ok = true;
        for (user, f) in failures.iter_mut().enumerate() {
            if sol.pivot(regime, user).is_zero() {
                *f += 1;
                ok = false;
            }
        }
        if ok {
            debug_assert!(sol.satisfies(signs, p));
            return Ok(sol);
        }
    }
    let (worst_user, &fails) = failures.iter().enumerate().max_by_key(|&(u, f)| (*f, std::cmp::Reverse(u))).expect("k >= 2");
    Err(SchemeError::NoSolution { regime, p: p.value(), candidates: total, worst_user, failures: fails })
}

/// Aligned scheme for a signed channel and a given alignment solution.
pub fn qsym_scheme(params: &DetParams, sol: &AlignmentSolution) -> Result<Scheme, SchemeError> {
    let signs = params.signs.as_ref().ok_or(SchemeError::SignsRequired)?;
    if params.regime() == DetRegime::Moderate && signs.plus_identity_rank() < params.k {
        return Err(SchemeError::SingularLambdaPlusI);
    }
    if !sol.satisfies(signs, params.p) {
        return Err(SchemeError::InvalidSolution);
    }
    build_aligned(params, sol.clone())
}

/// The scheme for `params` as the theory prescribes: symmetric constructions
/// without signs, alignment with signs, and time-sharing wherever `m = n`
/// leaves nothing to align (always for the symmetric channel, and for signed
/// channels with singular `Λ + I`).
pub fn construct(params: &DetParams) -> Result<Scheme, SchemeError> {
    let regime = params.regime();
    match &params.signs {
        None => match regime {
            DetRegime::Weak => weak_scheme(params),
            DetRegime::Strong => strong_scheme(params),
            DetRegime::Moderate => moderate_scheme(params),
        },
        Some(signs) => {
            if regime == DetRegime::Moderate && signs.plus_identity_rank() < params.k {
                return moderate_scheme(params);
            }
            let sol = qsym_solve(signs, regime, params.p)?;
            qsym_scheme(params, &sol)
        }
    }
}

/// [`construct`] over the first prime in [`CANDIDATE_PRIMES`] that works.
pub fn construct_auto(
    k: usize,
    n: usize,
    m: usize,
    signs: Option<SignMatrix>,
) -> Result<Scheme, SchemeError> {
    let mut last = None;
    for &pv in &CANDIDATE_PRIMES {
        let p = Prime::new(pv).expect("candidate list holds primes");
        let params = DetParams::new(k, n, m, p, signs.clone()).map_err(|_| SchemeError::RegimeMismatch {
            expected: "K >= 2 and n + m >= 1",
            n,
            m,
        })?;
        match construct(&params) {
            Ok(s) => return Ok(s),
            Err(e @ (SchemeError::RegimeMismatch { .. } | SchemeError::SignsRequired | SchemeError::SignsNotAllowed)) => {
                return Err(e)
            }
            Err(e) => last = Some(e),
        }
    }
    Err(SchemeError::NoPrime { last: Box::new(last.expect("at least one prime tried")) })
}

/// Exact rational serialized as `{num, den}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RateJson {
    pub num: i64,
    pub den: i64,
}

impl From<Rational> for RateJson {
    fn from(r: Rational) -> Self {
        RateJson { num: *r.numer(), den: *r.denom() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub params: DetParams,
    pub declared_rate: RateJson,
    pub trials: usize,
    pub successes: usize,
    pub converse_rate: Option<RateJson>,
    pub matches_converse: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<Transcript>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.successes == self.trials && self.matches_converse
    }
}

/// Uniform messages for trial `trial`, drawn from a stream seeded with
/// `seed ^ trial`.
pub fn trial_messages(params: &DetParams, msg_symbols: usize, seed: u64, trial: u64) -> Vec<Vec<GfElem>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ trial);
    let p = params.p;
    (0..params.k)
        .map(|_| (0..msg_symbols).map(|_| GfElem::new(rng.random_range(0..p.value()), p)).collect())
        .collect()
}

/// The converse for `params`, if one is known.
pub fn converse_for(params: &DetParams) -> Option<Rational> {
    match &params.signs {
        None => Some(det_converse(params.n, params.m, params.k)),
        Some(s) => qsym_converse(params.n, params.m, s).ok(),
    }
}

/// Runs `trials` sessions with random messages and counts exact decodes.
pub fn verify_scheme(
    params: &DetParams,
    scheme: &Scheme,
    trials: usize,
    seed: u64,
) -> Result<VerifyReport, SessionError> {
    let mut successes = 0;
    let mut first_failure = None;
    for trial in 0..trials {
        let msgs = trial_messages(params, scheme.msg_symbols, seed, trial as u64);
        let tr = run_feedback_session(params, scheme, &msgs, scheme.blocks)?;
        if tr.decoded_ok() {
            successes += 1;
        } else if first_failure.is_none() {
            first_failure = Some(tr);
        }
    }
    let converse = converse_for(params);
    Ok(VerifyReport {
        params: params.clone(),
        declared_rate: scheme.declared_rate.into(),
        trials,
        successes,
        converse_rate: converse.map(RateJson::from),
        matches_converse: converse == Some(scheme.declared_rate),
        first_failure,
    })
}

/// One row of the strong-regime singularity survey.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SingularityRow {
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub p: u32,
    pub rank: usize,
    pub singular: bool,
    /// `K ≡ 1 (mod p)`.
    pub predicted_mod_p: bool,
    /// `K ≡ 1 (mod max(n, m))`.
    pub predicted_mod_q: bool,
}

/// Rank of the symmetric strong-regime decode matrix over a parameter grid,
/// side by side with the two readings of the congruence condition.
pub fn strong_singularity_survey(ks: &[usize], ns: &[usize], ms: &[usize], primes: &[u32]) -> Vec<SingularityRow> {
    let mut out = Vec::new();
    for &k in ks {
        for &n in ns {
            for &m in ms.iter().filter(|&&m| m > n) {
                for &pv in primes {
                    let p = Prime::new(pv).expect("prime");
                    let params = DetParams::symmetric(k, n, m, p).expect("valid");
                    let mat = decode_matrix(&params, &AlignmentSolution::symmetric(k, p), 0);
                    let rank = mat.rank();
                    out.push(SingularityRow {
                        k,
                        n,
                        m,
                        p: pv,
                        rank,
                        singular: rank < 2 * m,
                        predicted_mod_p: (k - 1) % pv as usize == 0,
                        predicted_mod_q: (k - 1) % m == 0,
                    });
                }
            }
        }
    }
    out
}
