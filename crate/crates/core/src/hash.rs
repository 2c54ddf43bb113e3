//! The identity hash: MiMC-7 with 91 rounds and a zero key over BN254.
//!
//! Round constants follow the circomlib convention: `c[0] = 0` and
//! `c[i] = keccak256^i("mimc") mod P` for `i >= 1`, where each step hashes the
//! previous 32-byte digest. With these parameters `hash1(0)` reproduces the
//! genesis id used throughout the ledger.

use std::sync::OnceLock;

use ark_bn254::Fr;
use ark_ff::{Field, PrimeField};
use sha3::{Digest, Keccak256};

use crate::field::{FieldElement, FieldError, Nonce, ObjectId};

pub const MIMC_ROUNDS: usize = 91;
pub const MIMC_SEED: &[u8] = b"mimc";

/// Decimal form of `hash1(0)`.
pub const GENESIS_ID_DECIMAL: &str =
    "11730251359286723731141466095709901450170369094578288842486979042586033922425";

pub(crate) fn round_constants() -> &'static [Fr; MIMC_ROUNDS] {
    static CONSTANTS: OnceLock<[Fr; MIMC_ROUNDS]> = OnceLock::new();
    CONSTANTS.get_or_init(|| {
        let mut out = [Fr::from(0u64); MIMC_ROUNDS];
        let mut digest: [u8; 32] = Keccak256::digest(MIMC_SEED).into();
        for c in out.iter_mut().skip(1) {
            digest = Keccak256::digest(digest).into();
            *c = Fr::from_be_bytes_mod_order(&digest);
        }
        out
    })
}

pub(crate) fn mimc7(x: Fr) -> Fr {
    let constants = round_constants();
    let mut r = x;
    for (i, c) in constants.iter().enumerate() {
        let t = if i == 0 { r } else { r + c };
        r = t.pow([7u64]);
    }
    r
}

/// Single-input algebraic hash.
pub fn hash1(x: FieldElement) -> FieldElement {
    FieldElement::from_fr(mimc7(x.fr()))
}

/// The public id of an object with the given nonce.
pub fn id_of(nonce: &Nonce) -> ObjectId {
    ObjectId(hash1(nonce.expose()))
}

/// Like [`id_of`] but for a raw value; zero is refused.
pub fn id_of_value(value: FieldElement) -> Result<ObjectId, FieldError> {
    if value.is_zero() {
        return Err(FieldError::ZeroNonce);
    }
    Ok(ObjectId(hash1(value)))
}

/// Id of the synthetic parent of every root object: `hash1(0)`.
pub fn genesis_id() -> ObjectId {
    static GENESIS: OnceLock<ObjectId> = OnceLock::new();
    *GENESIS.get_or_init(|| ObjectId(hash1(FieldElement::ZERO)))
}
