//! Emulated NFC tag image holding an object's id and its encrypted nonce.
//!
//! Layout of the 1024-byte image:
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 4    | magic `WTAG`                              |
//! | 4      | 1    | version `0x01`                            |
//! | 5      | 3    | zero                                      |
//! | 8      | 32   | object id, big-endian                     |
//! | 40     | 2    | ciphertext length, big-endian             |
//! | 42     | n    | ciphertext (ephemeral ‖ iv ‖ body ‖ tag)  |
//! | 42+n   | ..   | zero fill                                 |
//!
//! The payload (through the end of the ciphertext) may not exceed 720 bytes,
//! the usable share of a 1 KiB MIFARE Classic chip once sector trailers are
//! set aside.

use std::path::Path;

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::crypto::{self, CryptoError, HybridCiphertext, KeyPair};
use crate::field::{FieldElement, Nonce, ObjectId, FIELD_BYTES};
use crate::hash::id_of;

pub const TAG_CAPACITY: usize = 1024;
pub const TAG_USABLE_BYTES: usize = 720;
pub const TAG_MAGIC: &[u8; 4] = b"WTAG";
pub const TAG_VERSION: u8 = 0x01;

const ID_OFFSET: usize = 8;
const LEN_OFFSET: usize = 40;
const CT_OFFSET: usize = 42;

#[derive(Debug, Error)]
pub enum TagError {
    #[error("tag payload of {0} bytes exceeds the {TAG_USABLE_BYTES}-byte usable capacity")]
    PayloadTooLarge(usize),
    #[error("tag image must be exactly {TAG_CAPACITY} bytes, got {0}")]
    BadSize(usize),
    #[error("bad tag magic")]
    BadMagic,
    #[error("unsupported tag version {0:#04x}")]
    UnsupportedVersion(u8),
    #[error("tag payload is truncated or its declared length is out of range")]
    TruncatedPayload,
    #[error("tag id field is not a field element")]
    BadId,
    #[error("tag decryption failed authentication")]
    AuthFailure,
    #[error("decrypted nonce does not hash to the tag id")]
    IdMismatch,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// The raw 1024-byte tag contents.
#[derive(Clone, PartialEq, Eq)]
pub struct TagImage {
    raw: Box<[u8; TAG_CAPACITY]>,
}

impl TagImage {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TagError> {
        let raw: [u8; TAG_CAPACITY] = bytes
            .try_into()
            .map_err(|_| TagError::BadSize(bytes.len()))?;
        Ok(TagImage { raw: Box::new(raw) })
    }

    pub fn as_bytes(&self) -> &[u8; TAG_CAPACITY] {
        &self.raw
    }

    /// Builds an image from an id and ciphertext.
    pub fn encode(id: &ObjectId, ct: &HybridCiphertext) -> Result<Self, TagError> {
        let ct_bytes = ct.to_bytes();
        let payload = CT_OFFSET + ct_bytes.len();
        if payload > TAG_USABLE_BYTES {
            return Err(TagError::PayloadTooLarge(payload));
        }
        let mut raw = Box::new([0u8; TAG_CAPACITY]);
        raw[..4].copy_from_slice(TAG_MAGIC);
        raw[4] = TAG_VERSION;
        raw[ID_OFFSET..ID_OFFSET + FIELD_BYTES].copy_from_slice(&id.to_bytes());
        raw[LEN_OFFSET..CT_OFFSET].copy_from_slice(&(ct_bytes.len() as u16).to_be_bytes());
        raw[CT_OFFSET..payload].copy_from_slice(&ct_bytes);
        Ok(TagImage { raw })
    }

    pub fn load(path: &Path) -> Result<Self, TagError> {
        let bytes = std::fs::read(path).map_err(|source| TagError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

impl std::fmt::Debug for TagImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match read_tag(self) {
            Ok((id, ct)) => write!(f, "TagImage {{ id: {id}, ciphertext: {} bytes }}", ct.len()),
            Err(e) => write!(f, "TagImage(<invalid: {e}>)"),
        }
    }
}

/// Writes `id_of(nonce)` and the nonce encrypted to `device_public_key`.
/// The caller should drop `nonce` once the tag is written.
pub fn provision_tag<R: RngCore + CryptoRng>(
    rng: &mut R,
    device_public_key: &[u8],
    nonce: &Nonce,
) -> Result<TagImage, TagError> {
    let plaintext = zeroize::Zeroizing::new(nonce.to_bytes());
    let ct = crypto::encrypt(rng, device_public_key, plaintext.as_slice())?;
    TagImage::encode(&id_of(nonce), &ct)
}

pub fn read_tag(tag: &TagImage) -> Result<(ObjectId, HybridCiphertext), TagError> {
    let raw = tag.as_bytes();
    if &raw[..4] != TAG_MAGIC {
        return Err(TagError::BadMagic);
    }
    if raw[4] != TAG_VERSION {
        return Err(TagError::UnsupportedVersion(raw[4]));
    }
    let id = FieldElement::from_bytes(&raw[ID_OFFSET..ID_OFFSET + FIELD_BYTES])
        .map_err(|_| TagError::BadId)?;
    let len = u16::from_be_bytes([raw[LEN_OFFSET], raw[LEN_OFFSET + 1]]) as usize;
    let end = CT_OFFSET + len;
    if end > TAG_USABLE_BYTES {
        return Err(TagError::TruncatedPayload);
    }
    let ct = HybridCiphertext::from_bytes(&raw[CT_OFFSET..end])
        .map_err(|_| TagError::TruncatedPayload)?;
    Ok((ObjectId(id), ct))
}

/// Decrypts the nonce and checks that it hashes to the stored id.
pub fn recover_nonce(device: &KeyPair, tag: &TagImage) -> Result<Nonce, TagError> {
    let (id, ct) = read_tag(tag)?;
    let plaintext =
        zeroize::Zeroizing::new(device.decrypt(&ct).map_err(|_| TagError::AuthFailure)?);
    let nonce = Nonce::from_bytes(&plaintext).map_err(|_| TagError::IdMismatch)?;
    if id_of(&nonce) != id {
        return Err(TagError::IdMismatch);
    }
    Ok(nonce)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::random_nonce;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn setup(seed: u64) -> (ChaCha20Rng, KeyPair, Nonce) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let kp = KeyPair::generate(&mut rng);
        let n = random_nonce(&mut rng);
        (rng, kp, n)
    }

    #[test]
    fn layout_and_round_trip() {
        let (mut rng, kp, n) = setup(1);
        let tag = provision_tag(&mut rng, &kp.public_key(), &n).unwrap();
        let raw = tag.as_bytes();
        assert_eq!(&raw[..5], b"WTAG\x01");
        assert_eq!(&raw[5..8], &[0, 0, 0]);
        assert_eq!(&raw[8..40], &id_of(&n).to_bytes());
        // 33 + 12 + 32 + 16
        assert_eq!(&raw[40..42], &[0, 93]);
        assert!(raw[42 + 93..].iter().all(|&b| b == 0));
        let (id, _) = read_tag(&tag).unwrap();
        assert_eq!(id, id_of(&n));
        assert_eq!(recover_nonce(&kp, &tag).unwrap(), n);
    }

    #[test]
    fn reprovisioning_changes_ciphertext() {
        let (mut rng, kp, n) = setup(2);
        let a = provision_tag(&mut rng, &kp.public_key(), &n).unwrap();
        let b = provision_tag(&mut rng, &kp.public_key(), &n).unwrap();
        assert_eq!(a.as_bytes()[..42], b.as_bytes()[..42]);
        assert_ne!(a.as_bytes()[42..], b.as_bytes()[42..]);
    }

    #[test]
    fn parse_errors() {
        let (mut rng, kp, n) = setup(3);
        let tag = provision_tag(&mut rng, &kp.public_key(), &n).unwrap();

        let mut raw = *tag.as_bytes();
        raw[0] = b'X';
        assert!(matches!(
            read_tag(&TagImage::from_bytes(&raw).unwrap()),
            Err(TagError::BadMagic)
        ));

        let mut raw = *tag.as_bytes();
        raw[4] = 2;
        assert!(matches!(
            read_tag(&TagImage::from_bytes(&raw).unwrap()),
            Err(TagError::UnsupportedVersion(2))
        ));

        let mut raw = *tag.as_bytes();
        raw[40..42].copy_from_slice(&2000u16.to_be_bytes());
        assert!(matches!(
            read_tag(&TagImage::from_bytes(&raw).unwrap()),
            Err(TagError::TruncatedPayload)
        ));

        let mut raw = *tag.as_bytes();
        raw[40..42].copy_from_slice(&10u16.to_be_bytes());
        assert!(matches!(
            read_tag(&TagImage::from_bytes(&raw).unwrap()),
            Err(TagError::TruncatedPayload)
        ));

        assert!(matches!(
            TagImage::from_bytes(&[0u8; 100]),
            Err(TagError::BadSize(100))
        ));
    }

    #[test]
    fn wrong_key_and_overwritten_id() {
        let (mut rng, kp, n) = setup(4);
        let tag = provision_tag(&mut rng, &kp.public_key(), &n).unwrap();
        let stranger = KeyPair::generate(&mut rng);
        assert!(matches!(
            recover_nonce(&stranger, &tag),
            Err(TagError::AuthFailure)
        ));

        let other = random_nonce(&mut rng);
        let mut raw = *tag.as_bytes();
        raw[8..40].copy_from_slice(&id_of(&other).to_bytes());
        let forged = TagImage::from_bytes(&raw).unwrap();
        assert!(matches!(
            recover_nonce(&kp, &forged),
            Err(TagError::IdMismatch)
        ));
    }

    #[test]
    fn oversized_payload_is_refused() {
        let (mut rng, kp, _) = setup(5);
        let ct = crypto::encrypt(&mut rng, &kp.public_key(), &[0u8; 700]).unwrap();
        let id = ObjectId(FieldElement::ONE);
        assert!(matches!(
            TagImage::encode(&id, &ct),
            Err(TagError::PayloadTooLarge(_))
        ));
    }

    #[test]
    fn plaintext_nonce_never_on_tag() {
        let (mut rng, kp, _) = setup(6);
        for _ in 0..120 {
            let n = random_nonce(&mut rng);
            let tag = provision_tag(&mut rng, &kp.public_key(), &n).unwrap();
            let needle = n.to_bytes();
            assert!(!tag.as_bytes().windows(32).any(|w| w == needle));
        }
    }

    proptest! {
        #[test]
        fn read_tag_is_total(bytes in proptest::collection::vec(any::<u8>(), TAG_CAPACITY)) {
            let tag = TagImage::from_bytes(&bytes).unwrap();
            let _ = read_tag(&tag);
        }

        #[test]
        fn read_tag_is_total_with_valid_header(body in proptest::collection::vec(any::<u8>(), TAG_CAPACITY - 5)) {
            let mut bytes = b"WTAG\x01".to_vec();
            bytes.extend(body);
            let tag = TagImage::from_bytes(&bytes).unwrap();
            let _ = read_tag(&tag);
        }
    }
}
