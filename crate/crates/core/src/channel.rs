//! Linear deterministic K-user interference channel and the feedback session
//! driver.
//!
//! Signal levels are indexed top-down: index 0 is the most significant level.
//! Each block is one use of the channel with `q = max(n, m)` levels per user.

use num_rational::Ratio;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::field::{GfElem, Prime};
use crate::matrix::{gf_matrix, Matrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("need at least two users, got {0}")]
    TooFewUsers(usize),
    #[error("n and m cannot both be zero")]
    NoLevels,
    #[error("sign matrix is {rows}x{cols}, expected {k}x{k}")]
    SignShape { rows: usize, cols: usize, k: usize },
    #[error("sign matrix entry ({row},{col}) = {value} is invalid")]
    SignEntry { row: usize, col: usize, value: i64 },
    #[error("cannot parse sign matrix: {0}")]
    SignParse(String),
}

/// Off-diagonal channel signs: zero diagonal, ±1 elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignMatrix {
    k: usize,
    entries: Vec<i8>,
}

impl SignMatrix {
    pub fn new(rows: &[Vec<i64>]) -> Result<Self, ModelError> {
        let k = rows.len();
        if k < 2 {
            return Err(ModelError::TooFewUsers(k));
        }
        let mut entries = Vec::with_capacity(k * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(ModelError::SignShape { rows: k, cols: row.len(), k });
            }
            for (j, &v) in row.iter().enumerate() {
                let ok = if i == j { v == 0 } else { v == 1 || v == -1 };
                if !ok {
                    return Err(ModelError::SignEntry { row: i, col: j, value: v });
                }
                entries.push(v as i8);
            }
        }
        Ok(SignMatrix { k, entries })
    }

    pub fn all_ones(k: usize) -> Self {
        let entries = (0..k * k).map(|idx| if idx / k == idx % k { 0 } else { 1 }).collect();
        SignMatrix { k, entries }
    }

    /// Every sign matrix of size `k`, `2^(k(k-1))` in total. Bit `b` of the
    /// index sets the `b`-th off-diagonal entry (row-major) to −1.
    pub fn enumerate(k: usize) -> impl Iterator<Item = SignMatrix> {
        let off = k * (k - 1);
        (0u64..1 << off).map(move |mask| {
            let mut entries = vec![0i8; k * k];
            let mut bit = 0;
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        entries[i * k + j] = if mask >> bit & 1 == 1 { -1 } else { 1 };
                        bit += 1;
                    }
                }
            }
            SignMatrix { k, entries }
        })
    }

    /// Parses whitespace-separated rows, one row per non-empty line.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let rows = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split_whitespace()
                    .map(|t| t.parse::<i64>().map_err(|e| ModelError::SignParse(format!("{t:?}: {e}"))))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(&rows)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.entries[row * self.k + col] as i64
    }

    pub fn is_all_ones(&self) -> bool {
        *self == Self::all_ones(self.k)
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.k).map(|i| (0..self.k).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn to_gf(&self, p: Prime) -> Matrix<GfElem> {
        gf_matrix(&self.to_rows(), p)
    }

    /// Rank of `Λ + I` over the rationals.
    pub fn plus_identity_rank(&self) -> usize {
        let zero = Ratio::from_integer(0i64);
        Matrix::from_fn(self.k, self.k, zero, |i, j| {
            Ratio::from_integer(self.get(i, j) + i64::from(i == j))
        })
        .rank()
    }
}

impl Serialize for SignMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

/// Which of the three deterministic regimes `(n, m)` falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DetRegime {
    Weak,
    Moderate,
    Strong,
}

impl DetRegime {
    pub fn of(n: usize, m: usize) -> Self {
        match m.cmp(&n) {
            std::cmp::Ordering::Less => DetRegime::Weak,
            std::cmp::Ordering::Equal => DetRegime::Moderate,
            std::cmp::Ordering::Greater => DetRegime::Strong,
        }
    }
}

/// Channel configuration. `signs == None` is the fully symmetric channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DetParams {
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub p: Prime,
    pub signs: Option<SignMatrix>,
}

impl DetParams {
    pub fn new(k: usize, n: usize, m: usize, p: Prime, signs: Option<SignMatrix>) -> Result<Self, ModelError> {
        if k < 2 {
            return Err(ModelError::TooFewUsers(k));
        }
        if n == 0 && m == 0 {
            return Err(ModelError::NoLevels);
        }
        if let Some(s) = &signs {
            if s.k() != k {
                return Err(ModelError::SignShape { rows: s.k(), cols: s.k(), k });
            }
        }
        Ok(DetParams { k, n, m, p, signs })
    }

    pub fn symmetric(k: usize, n: usize, m: usize, p: Prime) -> Result<Self, ModelError> {
        Self::new(k, n, m, p, None)
    }

    pub fn q(&self) -> usize {
        self.n.max(self.m)
    }

    pub fn regime(&self) -> DetRegime {
        DetRegime::of(self.n, self.m)
    }

    /// λ_ki, with the symmetric channel reading as all ones off the diagonal.
    pub fn lambda(&self, k: usize, i: usize) -> i64 {
        match &self.signs {
            Some(s) => s.get(k, i),
            None => i64::from(k != i),
        }
    }

    pub fn sign_matrix(&self) -> SignMatrix {
        self.signs.clone().unwrap_or_else(|| SignMatrix::all_ones(self.k))
    }

    pub fn with_prime(&self, p: Prime) -> Self {
        DetParams { p, ..self.clone() }
    }
}

/// One channel use: a length-`q` vector per user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct BlockSignal {
    pub users: Vec<Vec<GfElem>>,
}

impl BlockSignal {
    pub fn zeros(params: &DetParams) -> Self {
        BlockSignal { users: vec![vec![params.p.zero(); params.q()]; params.k] }
    }

    fn conforms(&self, params: &DetParams) -> bool {
        self.users.len() == params.k
            && self
                .users
                .iter()
                .all(|u| u.len() == params.q() && u.iter().all(|e| e.modulus() == params.p))
    }
}

/// `Y_k = D^{q-n} X_k + Σ_{i≠k} λ_ki D^{q-m} X_i` over GF(p).
///
/// # Panics
/// If `x` does not have `K` vectors of length `q` over the channel's field.
pub fn apply_channel(params: &DetParams, x: &BlockSignal) -> BlockSignal {
    assert!(x.conforms(params), "block signal does not match channel parameters");
    let q = params.q();
    let (sd, sc) = (q - params.n, q - params.m);
    let p = params.p;
    let users = (0..params.k)
        .map(|k| {
            (0..q)
                .map(|lvl| {
                    let mut acc = if lvl >= sd { x.users[k][lvl - sd] } else { p.zero() };
                    if lvl >= sc {
                        for i in (0..params.k).filter(|&i| i != k) {
                            acc = acc + p.elem(params.lambda(k, i)) * x.users[i][lvl - sc];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    BlockSignal { users }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("user {user} requested output of block {requested} while encoding block {block}")]
    CausalityViolation { user: usize, requested: usize, block: usize },
    #[error("user {user} message has {got} symbols, scheme expects {expected}")]
    MessageLength { user: usize, expected: usize, got: usize },
    #[error("expected {expected} messages, got {got}")]
    MessageCount { expected: usize, got: usize },
    #[error("session length {got} does not match the scheme's {expected} blocks")]
    BlockCount { expected: usize, got: usize },
    #[error("scheme was built for different channel parameters")]
    ParamsMismatch,
    #[error("user {user} encoder produced an invalid signal at block {block}")]
    BadSignal { user: usize, block: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("user {user} could not decode: {reason}")]
pub struct DecodeError {
    pub user: usize,
    pub reason: String,
}

/// The only view of the past an encoder gets: its own outputs from earlier
/// blocks.
#[derive(Debug, Clone, Copy)]
pub struct Feedback<'a> {
    user: usize,
    block: usize,
    outputs: &'a [Vec<GfElem>],
}

impl<'a> Feedback<'a> {
    pub fn new(user: usize, block: usize, outputs: &'a [Vec<GfElem>]) -> Self {
        Feedback { user, block, outputs }
    }

    /// Current block index (0-based).
    pub fn block(&self) -> usize {
        self.block
    }

    /// Own output at block `t`, which must precede the current block.
    pub fn output(&self, t: usize) -> Result<&'a [GfElem], SessionError> {
        if t >= self.block {
            return Err(SessionError::CausalityViolation { user: self.user, requested: t, block: self.block });
        }
        self.outputs
            .get(t)
            .map(Vec::as_slice)
            .ok_or(SessionError::CausalityViolation { user: self.user, requested: t, block: self.block })
    }
}

/// A block-coded feedback scheme: per-user encoders and decoders.
pub trait FeedbackCode {
    fn params(&self) -> &DetParams;
    fn blocks(&self) -> usize;
    fn msg_symbols(&self) -> usize;
    /// Input of `user` at `feedback.block()`.
    fn encode(&self, user: usize, message: &[GfElem], feedback: &Feedback<'_>) -> Result<Vec<GfElem>, SessionError>;
    /// Message estimate of `user` from its outputs over all blocks.
    fn decode(&self, user: usize, outputs: &[Vec<GfElem>]) -> Result<Vec<GfElem>, DecodeError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockRecord {
    pub inputs: BlockSignal,
    pub outputs: BlockSignal,
}

/// Full record of one session. A `null` entry in `messages_out` is a decoder
/// that reported failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub params: DetParams,
    pub blocks: Vec<BlockRecord>,
    pub messages_in: Vec<Vec<GfElem>>,
    pub messages_out: Vec<Option<Vec<GfElem>>>,
}

impl Transcript {
    pub fn decoded_ok(&self) -> bool {
        self.messages_in
            .iter()
            .zip(&self.messages_out)
            .all(|(i, o)| o.as_deref() == Some(i.as_slice()))
    }

    /// Outputs seen by `user`, in block order.
    pub fn outputs_of(&self, user: usize) -> Vec<Vec<GfElem>> {
        self.blocks.iter().map(|b| b.outputs.users[user].clone()).collect()
    }
}

/// Runs `blocks` channel uses. Each encoder sees only its own message and its
/// own earlier outputs; the driver holds every other piece of state.
pub fn run_feedback_session<C: FeedbackCode + ?Sized>(
    params: &DetParams,
    scheme: &C,
    messages: &[Vec<GfElem>],
    blocks: usize,
) -> Result<Transcript, SessionError> {
    if scheme.params() != params {
        return Err(SessionError::ParamsMismatch);
    }
    if blocks != scheme.blocks() {
        return Err(SessionError::BlockCount { expected: scheme.blocks(), got: blocks });
    }
    if messages.len() != params.k {
        return Err(SessionError::MessageCount { expected: params.k, got: messages.len() });
    }
    for (user, msg) in messages.iter().enumerate() {
        if msg.len() != scheme.msg_symbols() {
            return Err(SessionError::MessageLength { user, expected: scheme.msg_symbols(), got: msg.len() });
        }
    }

    let mut own_outputs: Vec<Vec<Vec<GfElem>>> = vec![Vec::with_capacity(blocks); params.k];
    let mut records = Vec::with_capacity(blocks);
    for t in 0..blocks {
        let mut users = Vec::with_capacity(params.k);
        for (user, msg) in messages.iter().enumerate() {
            let fb = Feedback::new(user, t, &own_outputs[user]);
            let x = scheme.encode(user, msg, &fb)?;
            if x.len() != params.q() || x.iter().any(|e| e.modulus() != params.p) {
                return Err(SessionError::BadSignal { user, block: t });
            }
            users.push(x);
        }
        let inputs = BlockSignal { users };
        let outputs = apply_channel(params, &inputs);
        for (user, y) in outputs.users.iter().enumerate() {
            own_outputs[user].push(y.clone());
        }
        records.push(BlockRecord { inputs, outputs });
    }

    let messages_out = (0..params.k).map(|user| scheme.decode(user, &own_outputs[user]).ok()).collect();
    Ok(Transcript { params: params.clone(), blocks: records, messages_in: messages.to_vec(), messages_out })
}
