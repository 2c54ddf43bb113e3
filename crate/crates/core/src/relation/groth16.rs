//! Groth16 over BN254 for the custody circuit.

use std::path::Path;

use ark_bn254::Bn254;
use ark_groth16::{Groth16, PreparedVerifyingKey};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use ark_snark::SNARK;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use super::{build_relation, ConstraintSystem, CustodyCircuit, PublicIO, RelationError, Witness};
use crate::encoding::encode_hex;
use crate::field::ObjectId;

pub const PROVING_KEY_MAGIC: &[u8; 8] = b"WZKPK\0\0\0";
pub const VERIFICATION_KEY_MAGIC: &[u8; 8] = b"WZKVK\0\0\0";
pub const KEY_FILE_VERSION: u8 = 1;
pub const SCHEME_ID: &str = "groth16-bn254/mimc7-custody";
/// Compressed Groth16 proof: A (G1) + B (G2) + C (G1).
pub const PROOF_BYTES: usize = 32 + 64 + 32;

#[derive(Clone)]
pub struct ProvingKey {
    inner: ark_groth16::ProvingKey<Bn254>,
}

#[derive(Clone)]
pub struct VerificationKey {
    inner: ark_groth16::VerifyingKey<Bn254>,
    prepared: PreparedVerifyingKey<Bn254>,
}

/// Opaque proof bytes as stored in ledger records.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Proof(pub Vec<u8>);

impl Proof {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

fn encode_key_file(magic: &[u8; 8], body: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(10 + SCHEME_ID.len() + body.len());
    out.extend_from_slice(magic);
    out.push(KEY_FILE_VERSION);
    out.push(SCHEME_ID.len() as u8);
    out.extend_from_slice(SCHEME_ID.as_bytes());
    out.extend_from_slice(body);
    out
}

fn decode_key_file<'a>(magic: &[u8; 8], bytes: &'a [u8]) -> Result<&'a [u8], RelationError> {
    let bad = |m: &str| RelationError::MalformedKey(m.to_owned());
    if bytes.len() < 10 || &bytes[..8] != magic {
        return Err(bad("bad magic"));
    }
    if bytes[8] != KEY_FILE_VERSION {
        return Err(bad("unsupported version"));
    }
    let id_len = bytes[9] as usize;
    let id = bytes
        .get(10..10 + id_len)
        .ok_or_else(|| bad("truncated scheme id"))?;
    if id != SCHEME_ID.as_bytes() {
        return Err(bad("unknown scheme"));
    }
    Ok(&bytes[10 + id_len..])
}

fn read_file(path: &Path) -> Result<Vec<u8>, RelationError> {
    std::fs::read(path).map_err(|source| RelationError::Io {
        path: path.display().to_string(),
        source,
    })
}

impl ProvingKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut body = Vec::new();
        self.inner
            .serialize_compressed(&mut body)
            .expect("vec write");
        encode_key_file(PROVING_KEY_MAGIC, &body)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RelationError> {
        let mut body = decode_key_file(PROVING_KEY_MAGIC, bytes)?;
        let inner = ark_groth16::ProvingKey::deserialize_compressed(&mut body)
            .map_err(|e| RelationError::MalformedKey(e.to_string()))?;
        if !body.is_empty() {
            return Err(RelationError::MalformedKey("trailing bytes".into()));
        }
        Ok(ProvingKey { inner })
    }

    pub fn load(path: &Path) -> Result<Self, RelationError> {
        Self::from_bytes(&read_file(path)?)
    }

    /// The verification key embedded in the proving key.
    pub fn verification_key(&self) -> VerificationKey {
        VerificationKey::new(self.inner.vk.clone())
    }

    fn matches(&self, cs: &ConstraintSystem) -> bool {
        let instance = cs.num_public_inputs + 1;
        self.inner.vk.gamma_abc_g1.len() == instance
            && self.inner.a_query.len() == instance + cs.num_witness_variables
            && self.inner.l_query.len() == cs.num_witness_variables
    }
}

impl VerificationKey {
    fn new(inner: ark_groth16::VerifyingKey<Bn254>) -> Self {
        let prepared = ark_groth16::prepare_verifying_key(&inner);
        VerificationKey { inner, prepared }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut body = Vec::new();
        self.inner
            .serialize_compressed(&mut body)
            .expect("vec write");
        encode_key_file(VERIFICATION_KEY_MAGIC, &body)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RelationError> {
        let mut body = decode_key_file(VERIFICATION_KEY_MAGIC, bytes)?;
        let inner = ark_groth16::VerifyingKey::deserialize_compressed(&mut body)
            .map_err(|e| RelationError::MalformedKey(e.to_string()))?;
        if !body.is_empty() {
            return Err(RelationError::MalformedKey("trailing bytes".into()));
        }
        if inner.gamma_abc_g1.len() != super::circuit::NUM_PUBLIC_INPUTS + 1 {
            return Err(RelationError::MalformedKey(
                "wrong number of public inputs".into(),
            ));
        }
        Ok(Self::new(inner))
    }

    pub fn load(path: &Path) -> Result<Self, RelationError> {
        Self::from_bytes(&read_file(path)?)
    }

    /// `0x`-hex SHA-256 of the key file bytes.
    pub fn fingerprint(&self) -> String {
        encode_hex(&Sha256::digest(self.to_bytes()))
    }
}

impl PartialEq for VerificationKey {
    fn eq(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

impl std::fmt::Debug for VerificationKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "VerificationKey({})", self.fingerprint())
    }
}

/// Generates a matched key pair for the custody circuit.
pub fn setup<R: RngCore + CryptoRng>(
    rng: &mut R,
) -> Result<(ProvingKey, VerificationKey), RelationError> {
    let (pk, vk) = Groth16::<Bn254>::circuit_specific_setup(CustodyCircuit::blank(), rng)?;
    Ok((ProvingKey { inner: pk }, VerificationKey::new(vk)))
}

/// Proves one transition. The returned `w_id` is whatever the relation
/// outputs, so a wrong parent nonce yields a valid proof of `w_id = 0`.
pub fn prove<R: RngCore + CryptoRng>(
    pk: &ProvingKey,
    p_id: ObjectId,
    witness: &Witness,
    rng: &mut R,
) -> Result<(Proof, PublicIO), RelationError> {
    if !pk.matches(&build_relation()) {
        return Err(RelationError::KeyMismatch);
    }
    let w_nonce = witness.w_nonce.expose();
    let w_id = super::relation_output(p_id.value(), witness.p_nonce, w_nonce);
    let circuit = CustodyCircuit::honest(p_id.value(), witness.p_nonce, w_nonce);
    let proof = Groth16::<Bn254>::prove(&pk.inner, circuit, rng)?;
    let mut bytes = Vec::with_capacity(PROOF_BYTES);
    proof.serialize_compressed(&mut bytes).expect("vec write");
    Ok((
        Proof(bytes),
        PublicIO {
            p_id,
            w_id: ObjectId(w_id),
        },
    ))
}

/// Checks a proof against public values. Malformed or non-canonical proof
/// bytes verify as false.
pub fn verify(vk: &VerificationKey, proof: &Proof, io: &PublicIO) -> bool {
    if proof.0.len() != PROOF_BYTES {
        return false;
    }
    let Ok(parsed) = ark_groth16::Proof::<Bn254>::deserialize_compressed(proof.0.as_slice()) else {
        return false;
    };
    let mut canonical = Vec::with_capacity(PROOF_BYTES);
    if parsed.serialize_compressed(&mut canonical).is_err() || canonical != proof.0 {
        return false;
    }
    Groth16::<Bn254>::verify_with_processed_vk(&vk.prepared, &io.as_inputs(), &parsed)
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{random_nonce, FieldElement};
    use crate::hash::{genesis_id, id_of};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use std::sync::OnceLock;

    fn keys() -> &'static (ProvingKey, VerificationKey) {
        static KEYS: OnceLock<(ProvingKey, VerificationKey)> = OnceLock::new();
        KEYS.get_or_init(|| setup(&mut ChaCha20Rng::seed_from_u64(99)).unwrap())
    }

    #[test]
    fn genesis_proof_verifies() {
        let (pk, vk) = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let n = random_nonce(&mut rng);
        let expected = id_of(&n);
        let (proof, io) = prove(pk, genesis_id(), &Witness::genesis(n), &mut rng).unwrap();
        assert_eq!(io.w_id, expected);
        assert_eq!(io.p_id, genesis_id());
        assert_eq!(proof.0.len(), PROOF_BYTES);
        assert!(verify(vk, &proof, &io));
    }

    #[test]
    fn wrong_parent_nonce_proves_zero() {
        let (pk, vk) = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let parent = random_nonce(&mut rng);
        let witness = Witness {
            p_nonce: random_nonce(&mut rng).expose(),
            w_nonce: random_nonce(&mut rng),
        };
        let (proof, io) = prove(pk, id_of(&parent), &witness, &mut rng).unwrap();
        assert!(io.w_id.is_zero());
        assert!(verify(vk, &proof, &io));
        let claimed = PublicIO {
            w_id: id_of(&witness.w_nonce),
            ..io
        };
        assert!(!verify(vk, &proof, &claimed));
    }

    #[test]
    fn substituted_public_values_fail() {
        let (pk, vk) = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let n = random_nonce(&mut rng);
        let (proof, io) = prove(pk, genesis_id(), &Witness::genesis(n), &mut rng).unwrap();
        let other = ObjectId(FieldElement::from_u64(rng.gen()));
        assert!(!verify(vk, &proof, &PublicIO { w_id: other, ..io }));
        assert!(!verify(vk, &proof, &PublicIO { p_id: other, ..io }));
    }

    #[test]
    fn byte_flips_in_proof_fail() {
        let (pk, vk) = keys();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let n = random_nonce(&mut rng);
        let (proof, io) = prove(pk, genesis_id(), &Witness::genesis(n), &mut rng).unwrap();
        for _ in 0..100 {
            let mut bad = proof.clone();
            let i = rng.gen_range(0..bad.0.len());
            bad.0[i] ^= rng.gen_range(1..=255u8);
            assert!(!verify(vk, &bad, &io), "byte {i}");
        }
        assert!(!verify(vk, &Proof(vec![]), &io));
        assert!(!verify(
            vk,
            &Proof(proof.0[..PROOF_BYTES - 1].to_vec()),
            &io
        ));
    }

    #[test]
    fn independent_setup_rejects() {
        let (pk, _) = keys();
        let (_, other_vk) = setup(&mut ChaCha20Rng::seed_from_u64(100)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let n = random_nonce(&mut rng);
        let (proof, io) = prove(pk, genesis_id(), &Witness::genesis(n), &mut rng).unwrap();
        assert!(!verify(&other_vk, &proof, &io));
    }

    #[test]
    fn key_files_round_trip_and_are_seeded() {
        let (pk, vk) = keys();
        let pk_bytes = pk.to_bytes();
        let vk_bytes = vk.to_bytes();
        assert_eq!(&pk_bytes[..8], PROVING_KEY_MAGIC);
        assert_eq!(&vk_bytes[..8], VERIFICATION_KEY_MAGIC);
        assert_eq!(pk_bytes[8], KEY_FILE_VERSION);
        assert_eq!(
            ProvingKey::from_bytes(&pk_bytes).unwrap().to_bytes(),
            pk_bytes
        );
        assert_eq!(&VerificationKey::from_bytes(&vk_bytes).unwrap(), vk);
        assert_eq!(pk.verification_key(), *vk);
        assert!(VerificationKey::from_bytes(&pk_bytes).is_err());
        assert!(ProvingKey::from_bytes(&vk_bytes).is_err());
        let (_, again) = setup(&mut ChaCha20Rng::seed_from_u64(99)).unwrap();
        assert_eq!(again.to_bytes(), vk_bytes);
    }
}
