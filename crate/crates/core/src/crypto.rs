//! Actor identities on secp256k1: key pairs, 20-byte addresses, recoverable
//! ECDSA signatures and ECIES-style hybrid encryption.
//!
//! Addresses are the last 20 bytes of Keccak-256 over the uncompressed public
//! key without its `0x04` prefix. Signatures are computed over the Keccak-256
//! digest of the message and always carry a low `s`.
//!
//! Hybrid encryption: ephemeral-static ECDH, HKDF-SHA-256 over the shared x
//! coordinate (salted with the ephemeral key), then AES-256-GCM with a random
//! 12-byte IV. Wire form is `ephemeral(33) || iv(12) || body || tag(16)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use aes_gcm::aead::{AeadInPlace, KeyInit};
use aes_gcm::{Aes256Gcm, Nonce as GcmNonce, Tag};
use hkdf::Hkdf;
use k256::ecdh::EphemeralSecret;
use k256::ecdsa::{RecoveryId, Signature as EcdsaSignature, SigningKey, VerifyingKey};
use k256::elliptic_curve::sec1::ToEncodedPoint;
use k256::{PublicKey, SecretKey};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use sha3::{Digest, Keccak256};
use thiserror::Error;
use zeroize::Zeroizing;

use crate::encoding::{decode_hex, encode_hex};
use crate::field::ObjectId;

pub const PUBLIC_KEY_BYTES: usize = 33;
pub const ADDRESS_BYTES: usize = 20;
pub const SIGNATURE_BYTES: usize = 65;
pub const IV_BYTES: usize = 12;
pub const TAG_BYTES: usize = 16;
/// Smallest possible serialized ciphertext (empty plaintext).
pub const MIN_CIPHERTEXT_BYTES: usize = PUBLIC_KEY_BYTES + IV_BYTES + TAG_BYTES;

/// Domain separator prefixed to every signed ledger submission.
pub const SIGNED_MESSAGE_DOMAIN: &[u8] = b"WTRACE1";

const HKDF_INFO: &[u8] = b"woodtrace/ecies/aes-256-gcm";

#[derive(Debug, Error)]
pub enum CryptoError {
    #[error("invalid curve point")]
    InvalidPoint,
    #[error("invalid private key")]
    InvalidPrivateKey,
    #[error("malformed signature")]
    MalformedSignature,
    #[error("malformed ciphertext")]
    MalformedCiphertext,
    #[error("decryption failed authentication")]
    AuthFailure,
    #[error("key file: {0}")]
    KeyFile(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A 20-byte account identifier derived from a public key.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Address(pub [u8; ADDRESS_BYTES]);

impl Address {
    pub fn as_bytes(&self) -> &[u8; ADDRESS_BYTES] {
        &self.0
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&encode_hex(&self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({self})")
    }
}

impl FromStr for Address {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes =
            decode_hex(s).map_err(|_| CryptoError::KeyFile(format!("bad address {s:?}")))?;
        let arr: [u8; ADDRESS_BYTES] = bytes
            .try_into()
            .map_err(|_| CryptoError::KeyFile(format!("address must be 20 bytes: {s:?}")))?;
        Ok(Address(arr))
    }
}

/// Derives the address of a SEC1-encoded (compressed or uncompressed) public key.
pub fn address_of(public_key: &[u8]) -> Result<Address, CryptoError> {
    let pk = PublicKey::from_sec1_bytes(public_key).map_err(|_| CryptoError::InvalidPoint)?;
    Ok(address_of_key(&pk))
}

fn address_of_key(pk: &PublicKey) -> Address {
    let uncompressed = pk.to_encoded_point(false);
    let digest = Keccak256::digest(&uncompressed.as_bytes()[1..]);
    let mut out = [0u8; ADDRESS_BYTES];
    out.copy_from_slice(&digest[12..]);
    Address(out)
}

/// A secp256k1 key pair.
#[derive(Clone)]
pub struct KeyPair {
    secret: SigningKey,
}

impl KeyPair {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        KeyPair {
            secret: SigningKey::random(rng),
        }
    }

    pub fn from_private_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let secret = SigningKey::from_slice(bytes).map_err(|_| CryptoError::InvalidPrivateKey)?;
        Ok(KeyPair { secret })
    }

    pub fn private_bytes(&self) -> Zeroizing<[u8; 32]> {
        Zeroizing::new(self.secret.to_bytes().into())
    }

    /// Compressed SEC1 public key.
    pub fn public_key(&self) -> [u8; PUBLIC_KEY_BYTES] {
        let point = self.secret.verifying_key().to_encoded_point(true);
        let mut out = [0u8; PUBLIC_KEY_BYTES];
        out.copy_from_slice(point.as_bytes());
        out
    }

    pub fn address(&self) -> Address {
        address_of_key(&PublicKey::from(self.secret.verifying_key()))
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        sign(self, message)
    }

    pub fn decrypt(&self, ct: &HybridCiphertext) -> Result<Vec<u8>, CryptoError> {
        decrypt(self, ct)
    }

    pub fn to_key_file(&self) -> KeyFile {
        KeyFile {
            private_key: encode_hex(self.private_bytes().as_slice()),
            public_key: encode_hex(&self.public_key()),
            address: self.address().to_string(),
        }
    }

    pub fn from_key_file(file: &KeyFile) -> Result<Self, CryptoError> {
        let sk = Zeroizing::new(
            decode_hex(&file.private_key)
                .map_err(|_| CryptoError::KeyFile("private_key is not hex".into()))?,
        );
        let kp = Self::from_private_bytes(&sk)?;
        if encode_hex(&kp.public_key()) != file.public_key {
            return Err(CryptoError::KeyFile(
                "public_key does not match private_key".into(),
            ));
        }
        if kp.address().to_string() != file.address {
            return Err(CryptoError::KeyFile(
                "address does not match private_key".into(),
            ));
        }
        Ok(kp)
    }

    pub fn load(path: &Path) -> Result<Self, CryptoError> {
        let io = |source| CryptoError::Io {
            path: path.display().to_string(),
            source,
        };
        let text = std::fs::read_to_string(path).map_err(io)?;
        let file: KeyFile =
            serde_json::from_str(&text).map_err(|e| CryptoError::KeyFile(e.to_string()))?;
        Self::from_key_file(&file)
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("address", &self.address())
            .finish_non_exhaustive()
    }
}

/// On-disk key file. Stored unencrypted; protect it with file permissions.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct KeyFile {
    pub private_key: String,
    pub public_key: String,
    pub address: String,
}

/// Recoverable ECDSA signature `r || s || v` with low `s`.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub r: [u8; 32],
    pub s: [u8; 32],
    pub recovery_id: u8,
}

impl Signature {
    pub fn to_bytes(&self) -> [u8; SIGNATURE_BYTES] {
        let mut out = [0u8; SIGNATURE_BYTES];
        out[..32].copy_from_slice(&self.r);
        out[32..64].copy_from_slice(&self.s);
        out[64] = self.recovery_id;
        out
    }

    /// Parses the 65-byte form. Only structure is checked here; high `s`
    /// and invalid scalars are rejected by [`verify_sig`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != SIGNATURE_BYTES {
            return Err(CryptoError::MalformedSignature);
        }
        let mut r = [0u8; 32];
        let mut s = [0u8; 32];
        r.copy_from_slice(&bytes[..32]);
        s.copy_from_slice(&bytes[32..64]);
        Ok(Signature {
            r,
            s,
            recovery_id: bytes[64],
        })
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({})", encode_hex(&self.to_bytes()))
    }
}

pub fn sign(key: &KeyPair, message: &[u8]) -> Signature {
    let digest = Keccak256::digest(message);
    let (sig, recid) = key
        .secret
        .sign_prehash_recoverable(&digest)
        .expect("32-byte prehash is always signable");
    // k256 already emits low-s; normalising again keeps the invariant local.
    let (sig, recid) = match sig.normalize_s() {
        Some(low) => (
            low,
            RecoveryId::new(!recid.is_y_odd(), recid.is_x_reduced()),
        ),
        None => (sig, recid),
    };
    let (r, s) = sig.split_bytes();
    Signature {
        r: r.into(),
        s: s.into(),
        recovery_id: recid.to_byte(),
    }
}

/// True iff `sig` over `message` recovers to the key whose address is `address`.
pub fn verify_sig(address: &Address, message: &[u8], sig: &Signature) -> bool {
    let Ok(ecdsa) = EcdsaSignature::from_scalars(sig.r, sig.s) else {
        return false;
    };
    if ecdsa.normalize_s().is_some() {
        return false;
    }
    let Some(recid) = RecoveryId::from_byte(sig.recovery_id) else {
        return false;
    };
    let digest = Keccak256::digest(message);
    match VerifyingKey::recover_from_prehash(&digest, &ecdsa, recid) {
        Ok(vk) => address_of_key(&PublicKey::from(&vk)) == *address,
        Err(_) => false,
    }
}

/// The byte string an actor signs when submitting a custody record:
/// `"WTRACE1" || w_id || p_id || SHA-256(proof)`.
pub fn custody_message(w_id: &ObjectId, p_id: &ObjectId, proof: &[u8]) -> Vec<u8> {
    let mut msg = Vec::with_capacity(SIGNED_MESSAGE_DOMAIN.len() + 96);
    msg.extend_from_slice(SIGNED_MESSAGE_DOMAIN);
    msg.extend_from_slice(&w_id.to_bytes());
    msg.extend_from_slice(&p_id.to_bytes());
    msg.extend_from_slice(&Sha256::digest(proof));
    msg
}

/// Output of [`encrypt`].
#[derive(Clone, PartialEq, Eq)]
pub struct HybridCiphertext {
    pub ephemeral_public_key: [u8; PUBLIC_KEY_BYTES],
    pub iv: [u8; IV_BYTES],
    pub body: Vec<u8>,
    pub auth_tag: [u8; TAG_BYTES],
}

impl HybridCiphertext {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(MIN_CIPHERTEXT_BYTES + self.body.len());
        out.extend_from_slice(&self.ephemeral_public_key);
        out.extend_from_slice(&self.iv);
        out.extend_from_slice(&self.body);
        out.extend_from_slice(&self.auth_tag);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() < MIN_CIPHERTEXT_BYTES {
            return Err(CryptoError::MalformedCiphertext);
        }
        let (eph, rest) = bytes.split_at(PUBLIC_KEY_BYTES);
        let (iv, rest) = rest.split_at(IV_BYTES);
        let (body, tag) = rest.split_at(rest.len() - TAG_BYTES);
        Ok(HybridCiphertext {
            ephemeral_public_key: eph.try_into().expect("split length"),
            iv: iv.try_into().expect("split length"),
            body: body.to_vec(),
            auth_tag: tag.try_into().expect("split length"),
        })
    }

    pub fn len(&self) -> usize {
        MIN_CIPHERTEXT_BYTES + self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }
}

impl fmt::Debug for HybridCiphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HybridCiphertext({})", encode_hex(&self.to_bytes()))
    }
}

fn derive_cipher(shared_x: &[u8], ephemeral: &[u8]) -> Aes256Gcm {
    let hk = Hkdf::<Sha256>::new(Some(ephemeral), shared_x);
    let mut okm = Zeroizing::new([0u8; 32]);
    hk.expand(HKDF_INFO, okm.as_mut_slice())
        .expect("32 bytes is a valid HKDF length");
    Aes256Gcm::new_from_slice(okm.as_slice()).expect("32-byte key")
}

pub fn encrypt<R: RngCore + CryptoRng>(
    rng: &mut R,
    recipient_public_key: &[u8],
    plaintext: &[u8],
) -> Result<HybridCiphertext, CryptoError> {
    let recipient =
        PublicKey::from_sec1_bytes(recipient_public_key).map_err(|_| CryptoError::InvalidPoint)?;
    let ephemeral = EphemeralSecret::random(rng);
    let mut ephemeral_public_key = [0u8; PUBLIC_KEY_BYTES];
    ephemeral_public_key.copy_from_slice(ephemeral.public_key().to_encoded_point(true).as_bytes());
    let shared = ephemeral.diffie_hellman(&recipient);
    let cipher = derive_cipher(shared.raw_secret_bytes(), &ephemeral_public_key);

    let mut iv = [0u8; IV_BYTES];
    rng.fill_bytes(&mut iv);
    let mut body = plaintext.to_vec();
    let tag = cipher
        .encrypt_in_place_detached(GcmNonce::from_slice(&iv), &ephemeral_public_key, &mut body)
        .map_err(|_| CryptoError::MalformedCiphertext)?;
    Ok(HybridCiphertext {
        ephemeral_public_key,
        iv,
        body,
        auth_tag: tag.into(),
    })
}

pub fn decrypt(key: &KeyPair, ct: &HybridCiphertext) -> Result<Vec<u8>, CryptoError> {
    // An unparseable ephemeral key is indistinguishable from tampering.
    let ephemeral = PublicKey::from_sec1_bytes(&ct.ephemeral_public_key)
        .map_err(|_| CryptoError::AuthFailure)?;
    let secret = SecretKey::from(key.secret.as_nonzero_scalar());
    let shared = k256::ecdh::diffie_hellman(secret.to_nonzero_scalar(), ephemeral.as_affine());
    let cipher = derive_cipher(shared.raw_secret_bytes(), &ct.ephemeral_public_key);
    let mut body = ct.body.clone();
    cipher
        .decrypt_in_place_detached(
            GcmNonce::from_slice(&ct.iv),
            &ct.ephemeral_public_key,
            &mut body,
            Tag::from_slice(&ct.auth_tag),
        )
        .map_err(|_| CryptoError::AuthFailure)?;
    Ok(body)
}
