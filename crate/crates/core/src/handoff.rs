//! Text encoding of the `(parent id, parent nonce)` pair passed from a
//! parent's custodian to whoever derives a child object.
//!
//! Format: `WHND1.` followed by unpadded base64url of `p_id ‖ p_nonce`
//! (32 bytes each, big-endian), 92 characters in total. The string carries a
//! secret nonce and must only travel over a private channel.

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use thiserror::Error;

use crate::field::{FieldElement, ObjectId, FIELD_BYTES};
use crate::hash::hash1;

pub const HANDOFF_PREFIX: &str = "WHND1.";
pub const HANDOFF_LEN: usize = HANDOFF_PREFIX.len() + 86;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HandoffError {
    #[error("parent nonce does not hash to the parent id")]
    InconsistentPayload,
    #[error("handoff string must start with {HANDOFF_PREFIX:?}")]
    BadPrefix,
    #[error("handoff string is not valid base64url of two field elements")]
    BadEncoding,
    #[error("handoff nonce does not hash to its id (tampered or mistyped)")]
    ConsistencyError,
}

#[derive(Clone, PartialEq, Eq)]
pub struct HandoffPayload {
    pub p_id: ObjectId,
    pub p_nonce: FieldElement,
}

impl std::fmt::Debug for HandoffPayload {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HandoffPayload")
            .field("p_id", &self.p_id)
            .finish_non_exhaustive()
    }
}

pub fn encode_handoff(payload: &HandoffPayload) -> Result<String, HandoffError> {
    if hash1(payload.p_nonce) != payload.p_id.value() {
        return Err(HandoffError::InconsistentPayload);
    }
    let mut buf = zeroize::Zeroizing::new([0u8; 2 * FIELD_BYTES]);
    buf[..FIELD_BYTES].copy_from_slice(&payload.p_id.to_bytes());
    buf[FIELD_BYTES..].copy_from_slice(&payload.p_nonce.to_bytes());
    Ok(format!(
        "{HANDOFF_PREFIX}{}",
        URL_SAFE_NO_PAD.encode(buf.as_slice())
    ))
}

pub fn decode_handoff(s: &str) -> Result<HandoffPayload, HandoffError> {
    let body = s
        .strip_prefix(HANDOFF_PREFIX)
        .ok_or(HandoffError::BadPrefix)?;
    // The default engine rejects non-zero trailing bits, so each payload has
    // exactly one accepted spelling.
    let bytes = zeroize::Zeroizing::new(
        URL_SAFE_NO_PAD
            .decode(body)
            .map_err(|_| HandoffError::BadEncoding)?,
    );
    if bytes.len() != 2 * FIELD_BYTES {
        return Err(HandoffError::BadEncoding);
    }
    let p_id =
        FieldElement::from_bytes(&bytes[..FIELD_BYTES]).map_err(|_| HandoffError::BadEncoding)?;
    let p_nonce =
        FieldElement::from_bytes(&bytes[FIELD_BYTES..]).map_err(|_| HandoffError::BadEncoding)?;
    if hash1(p_nonce) != p_id {
        return Err(HandoffError::ConsistencyError);
    }
    Ok(HandoffPayload {
        p_id: ObjectId(p_id),
        p_nonce,
    })
}
