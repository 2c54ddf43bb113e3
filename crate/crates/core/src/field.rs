//! Elements of the BN254 scalar field and their canonical encodings.
//!
//! Nonces, object ids and hash outputs all live here. Three encodings are
//! supported: 32-byte big-endian (binary formats), `0x`-prefixed lowercase hex
//! (JSON blobs) and unsigned decimal (human-readable ids).

use std::fmt;
use std::str::FromStr;

use ark_bn254::Fr;
use ark_ff::{BigInteger, PrimeField, Zero};
use num_bigint::BigUint;
use rand::{CryptoRng, RngCore};
use thiserror::Error;
use zeroize::Zeroize;

/// Decimal form of the field modulus.
pub const MODULUS_DECIMAL: &str =
    "21888242871839275222246405745257275088548364400416034343698204186575808495617";

/// Length of the canonical byte encoding.
pub const FIELD_BYTES: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("value is not below the field modulus")]
    OutOfRange,
    #[error("expected {FIELD_BYTES} bytes, got {0}")]
    BadLength(usize),
    #[error("not a canonical decimal field element: {0:?}")]
    BadDecimal(String),
    #[error("not a canonical 0x-prefixed lowercase hex field element: {0:?}")]
    BadHex(String),
    #[error("nonce must be nonzero (zero is reserved for the genesis parent)")]
    ZeroNonce,
}

/// A fully reduced element of the BN254 scalar field.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FieldElement(Fr);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(ark_ff::MontFp!("0"));
    pub const ONE: FieldElement = FieldElement(ark_ff::MontFp!("1"));

    pub fn from_u64(v: u64) -> Self {
        FieldElement(Fr::from(v))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Canonical 32-byte big-endian encoding.
    pub fn to_bytes(&self) -> [u8; FIELD_BYTES] {
        let v = self.0.into_bigint().to_bytes_be();
        let mut out = [0u8; FIELD_BYTES];
        out[FIELD_BYTES - v.len()..].copy_from_slice(&v);
        out
    }

    /// Decodes a 32-byte big-endian value, rejecting anything `>= P`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FieldError> {
        if bytes.len() != FIELD_BYTES {
            return Err(FieldError::BadLength(bytes.len()));
        }
        let modulus = Fr::MODULUS.to_bytes_be();
        // Lexicographic comparison equals numeric comparison for equal-width big-endian.
        if bytes >= modulus.as_slice() {
            return Err(FieldError::OutOfRange);
        }
        Ok(FieldElement(Fr::from_be_bytes_mod_order(bytes)))
    }

    pub fn to_decimal(&self) -> String {
        BigUint::from_bytes_be(&self.to_bytes()).to_string()
    }

    /// Parses the canonical unsigned decimal form (no sign, no leading zeros).
    pub fn from_decimal(s: &str) -> Result<Self, FieldError> {
        let bad = || FieldError::BadDecimal(s.to_owned());
        if s.is_empty()
            || !s.bytes().all(|b| b.is_ascii_digit())
            || (s.len() > 1 && s.starts_with('0'))
        {
            return Err(bad());
        }
        let n = BigUint::from_str(s).map_err(|_| bad())?;
        let bytes = n.to_bytes_be();
        if bytes.len() > FIELD_BYTES {
            return Err(FieldError::OutOfRange);
        }
        let mut buf = [0u8; FIELD_BYTES];
        buf[FIELD_BYTES - bytes.len()..].copy_from_slice(&bytes);
        Self::from_bytes(&buf)
    }

    pub fn to_hex(&self) -> String {
        format!("0x{}", hex::encode(self.to_bytes()))
    }

    pub fn from_hex(s: &str) -> Result<Self, FieldError> {
        let bytes = crate::encoding::decode_hex(s).map_err(|_| FieldError::BadHex(s.to_owned()))?;
        Self::from_bytes(&bytes)
    }

    pub(crate) fn from_fr(f: Fr) -> Self {
        FieldElement(f)
    }

    pub(crate) fn fr(&self) -> Fr {
        self.0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal())
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldElement({})", self.to_decimal())
    }
}

impl FromStr for FieldElement {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_decimal(s)
    }
}

impl std::ops::Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: Self) -> Self {
        FieldElement(self.0 + rhs.0)
    }
}

impl std::ops::Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: Self) -> Self {
        FieldElement(self.0 * rhs.0)
    }
}

/// Public identifier of an object: the hash of its nonce.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ObjectId(pub FieldElement);

impl ObjectId {
    pub fn value(&self) -> FieldElement {
        self.0
    }

    pub fn to_bytes(&self) -> [u8; FIELD_BYTES] {
        self.0.to_bytes()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::Debug for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ObjectId({})", self.0)
    }
}

impl FromStr for ObjectId {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FieldElement::from_decimal(s).map(ObjectId)
    }
}

/// Secret per-object nonce. Always nonzero; wiped from this value on drop.
///
/// Wiping is best effort: copies handed out by [`Nonce::expose`] are the
/// caller's responsibility.
#[derive(Clone, PartialEq, Eq)]
pub struct Nonce(FieldElement);

impl Nonce {
    pub fn new(value: FieldElement) -> Result<Self, FieldError> {
        if value.is_zero() {
            return Err(FieldError::ZeroNonce);
        }
        Ok(Nonce(value))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FieldError> {
        Self::new(FieldElement::from_bytes(bytes)?)
    }

    pub fn expose(&self) -> FieldElement {
        self.0
    }

    pub fn to_bytes(&self) -> [u8; FIELD_BYTES] {
        self.0.to_bytes()
    }
}

impl fmt::Debug for Nonce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Nonce(<redacted>)")
    }
}

impl Drop for Nonce {
    fn drop(&mut self) {
        self.0 .0.zeroize();
    }
}

/// Draws a nonce uniformly from `[1, P)` by rejection sampling.
pub fn random_nonce<R: RngCore + CryptoRng>(rng: &mut R) -> Nonce {
    loop {
        let mut buf = [0u8; FIELD_BYTES];
        rng.fill_bytes(&mut buf);
        // P has 254 bits, so masking keeps the acceptance rate above 3/4.
        buf[0] &= 0x3f;
        let candidate = FieldElement::from_bytes(&buf);
        buf.zeroize();
        if let Ok(v) = candidate {
            if let Ok(n) = Nonce::new(v) {
                return n;
            }
        }
    }
}
