//! Scalar fields for exact linear algebra.
//!
//! The [`Field`] trait is what the elimination routines in [`crate::matrix`]
//! are written against. Two families implement it: prime fields GF(p) through
//! [`GfElem`], and the rationals through [`num_rational::Ratio`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

/// Largest modulus accepted by [`Prime::new`].
pub const MAX_PRIME: u32 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not a prime")]
    NotPrime(u32),
    #[error("modulus {0} exceeds the supported maximum {MAX_PRIME}")]
    TooLarge(u32),
}

/// Exact field arithmetic with a runtime-known field.
///
/// Elements carry whatever context they need (for GF(p), the modulus), so
/// additive and multiplicative identities are produced from an existing
/// element rather than from a global constant.
pub trait Field:
    Clone
    + PartialEq
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn is_zero(&self) -> bool;
    /// Multiplicative inverse, `None` for zero.
    fn inverse(&self) -> Option<Self>;
}

/// A prime modulus, checked by trial division.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Prime(u32);

impl Prime {
    pub fn new(value: u32) -> Result<Self, FieldError> {
        if value > MAX_PRIME {
            return Err(FieldError::TooLarge(value));
        }
        if !is_prime(value) {
            return Err(FieldError::NotPrime(value));
        }
        Ok(Prime(value))
    }

    pub fn value(self) -> u32 {
        self.0
    }

    /// The element `v mod p`, with negative integers mapped to their
    /// canonical representative.
    pub fn elem(self, v: i64) -> GfElem {
        GfElem::from_i64(v, self)
    }

    pub fn zero(self) -> GfElem {
        GfElem { value: 0, modulus: self }
    }

    pub fn one(self) -> GfElem {
        GfElem { value: 1, modulus: self }
    }

    /// All field elements in increasing order of representative.
    pub fn elements(self) -> impl Iterator<Item = GfElem> {
        (0..self.0).map(move |value| GfElem { value, modulus: self })
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// An element of GF(p), stored as its canonical representative in `[0, p)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct GfElem {
    value: u32,
    modulus: Prime,
}

impl GfElem {
    pub fn new(value: u32, modulus: Prime) -> Self {
        GfElem { value: value % modulus.0, modulus }
    }

    pub fn from_i64(v: i64, modulus: Prime) -> Self {
        let value = v.rem_euclid(modulus.0 as i64) as u32;
        GfElem { value, modulus }
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn modulus(self) -> Prime {
        self.modulus
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let p = self.modulus.0 as u64;
        let mut base = self.value as u64;
        let mut acc = 1u64 % p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            exp >>= 1;
        }
        GfElem { value: acc as u32, modulus: self.modulus }
    }

    #[inline]
    fn check(self, other: GfElem) {
        assert_eq!(
            self.modulus, other.modulus,
            "mixed moduli in GF(p) arithmetic"
        );
    }
}

impl fmt::Debug for GfElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl fmt::Display for GfElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Serialize for GfElem {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u32(self.value)
    }
}

impl Add for GfElem {
    type Output = GfElem;
    fn add(self, rhs: GfElem) -> GfElem {
        self.check(rhs);
        let s = self.value as u64 + rhs.value as u64;
        GfElem { value: (s % self.modulus.0 as u64) as u32, modulus: self.modulus }
    }
}

impl Sub for GfElem {
    type Output = GfElem;
    fn sub(self, rhs: GfElem) -> GfElem {
        self.check(rhs);
        let p = self.modulus.0 as u64;
        let s = self.value as u64 + p - rhs.value as u64;
        GfElem { value: (s % p) as u32, modulus: self.modulus }
    }
}

impl Mul for GfElem {
    type Output = GfElem;
    fn mul(self, rhs: GfElem) -> GfElem {
        self.check(rhs);
        let s = self.value as u64 * rhs.value as u64;
        GfElem { value: (s % self.modulus.0 as u64) as u32, modulus: self.modulus }
    }
}

impl Neg for GfElem {
    type Output = GfElem;
    fn neg(self) -> GfElem {
        let p = self.modulus.0;
        GfElem { value: (p - self.value) % p, modulus: self.modulus }
    }
}

impl Field for GfElem {
    fn zero_like(&self) -> Self {
        self.modulus.zero()
    }

    fn one_like(&self) -> Self {
        self.modulus.one()
    }

    fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn inverse(&self) -> Option<Self> {
        if self.value == 0 {
            None
        } else {
            // Fermat: a^(p-2) = a^-1
            Some(self.pow(self.modulus.0 as u64 - 2))
        }
    }
}

impl<T> Field for Ratio<T>
where
    T: Clone + Integer + fmt::Debug + Neg<Output = T>,
{
    fn zero_like(&self) -> Self {
        Ratio::zero()
    }

    fn one_like(&self) -> Self {
        Ratio::one()
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn inverse(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
}
