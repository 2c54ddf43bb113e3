//! `0x`-prefixed lowercase hex used for byte blobs in JSON files.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("not canonical 0x-prefixed lowercase hex")]
pub struct HexError;

pub fn encode_hex(bytes: &[u8]) -> String {
    format!("0x{}", hex::encode(bytes))
}

/// Strict decoder: requires the `0x` prefix and lowercase digits, so every
/// byte string has exactly one accepted spelling.
pub fn decode_hex(s: &str) -> Result<Vec<u8>, HexError> {
    let body = s.strip_prefix("0x").ok_or(HexError)?;
    if body.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(HexError);
    }
    hex::decode(body).map_err(|_| HexError)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strictness() {
        assert_eq!(decode_hex("0xabcd").unwrap(), vec![0xab, 0xcd]);
        assert_eq!(decode_hex("0x").unwrap(), Vec::<u8>::new());
        assert!(decode_hex("abcd").is_err());
        assert!(decode_hex("0XABCD").is_err());
        assert!(decode_hex("0xABcd").is_err());
        assert!(decode_hex("0xabc").is_err());
        assert!(decode_hex("0xzz").is_err());
        assert_eq!(encode_hex(&[0, 255]), "0x00ff");
    }
}
