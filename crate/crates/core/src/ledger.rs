//! Append-only custody ledger.
//!
//! A record is admitted only if its proof verifies against `(p_id, w_id)`,
//! its signature verifies under the registrant address, `w_id` is nonzero
//! and new, and (in strict mode) its parent is genesis or already present.
//! Any stored ledger can be re-audited from its bytes alone.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{custody_message, verify_sig, Address, KeyPair, Signature};
use crate::encoding::{decode_hex, encode_hex};
use crate::field::ObjectId;
use crate::hash::genesis_id;
use crate::relation::{verify, Proof, PublicIO, VerificationKey};

pub const LEDGER_FILE_VERSION: u32 = 1;

/// Why a record was refused. A refused record leaves the ledger untouched.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    #[error("proof does not verify against (p_id, w_id)")]
    ProofInvalid,
    #[error("signature does not verify under the registrant address")]
    SignatureInvalid,
    #[error("w_id is zero (parent check failed inside the relation)")]
    ZeroId,
    #[error("w_id is already registered")]
    DuplicateId,
    #[error("p_id is neither genesis nor a registered object")]
    UnknownParent,
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("record rejected: {0}")]
    Rejected(#[from] Rejection),
    #[error("no record for id {0}")]
    NotFound(ObjectId),
    #[error("chain is broken: parent {missing} of {child} is not registered")]
    BrokenChain { child: ObjectId, missing: ObjectId },
    #[error("cycle detected at id {0}")]
    CycleDetected(ObjectId),
    #[error("corrupt ledger at record {w_id}: {reason}")]
    CorruptLedger { w_id: String, reason: String },
    #[error("ledger was written under verification key {found}, expected {expected}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One ledger row.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CustodyRecord {
    pub w_id: ObjectId,
    pub p_id: ObjectId,
    pub proof: Proof,
    pub signature: Signature,
    pub registrant: Address,
}

impl CustodyRecord {
    /// Signs a freshly proven transition as `key`.
    pub fn signed(key: &KeyPair, proof: Proof, io: PublicIO) -> Self {
        let signature = key.sign(&custody_message(&io.w_id, &io.p_id, proof.as_bytes()));
        CustodyRecord {
            w_id: io.w_id,
            p_id: io.p_id,
            proof,
            signature,
            registrant: key.address(),
        }
    }

    /// The proof's public values are exactly the record's ids.
    pub fn public_io(&self) -> PublicIO {
        PublicIO {
            p_id: self.p_id,
            w_id: self.w_id,
        }
    }

    pub fn signed_message(&self) -> Vec<u8> {
        custody_message(&self.w_id, &self.p_id, self.proof.as_bytes())
    }

    fn check_crypto(&self, vk: &VerificationKey) -> Result<(), Rejection> {
        if !verify_sig(&self.registrant, &self.signed_message(), &self.signature) {
            return Err(Rejection::SignatureInvalid);
        }
        if !verify(vk, &self.proof, &self.public_io()) {
            return Err(Rejection::ProofInvalid);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LedgerPolicy {
    pub strict_parent: bool,
}

impl Default for LedgerPolicy {
    fn default() -> Self {
        LedgerPolicy {
            strict_parent: true,
        }
    }
}

impl LedgerPolicy {
    pub fn permissive() -> Self {
        LedgerPolicy {
            strict_parent: false,
        }
    }
}

/// Provenance of one object, from the object back to its root.
#[derive(Clone, Debug)]
pub struct TraceResult {
    pub chain: Vec<CustodyRecord>,
    pub verified: bool,
    pub registrants: Vec<Address>,
}

#[derive(Clone, Debug)]
pub struct Ledger {
    records: Vec<CustodyRecord>,
    by_id: HashMap<ObjectId, usize>,
    children: HashMap<ObjectId, Vec<usize>>,
    verification_key: VerificationKey,
    policy: LedgerPolicy,
}

impl Ledger {
    pub fn new(verification_key: VerificationKey, policy: LedgerPolicy) -> Self {
        Ledger {
            records: Vec::new(),
            by_id: HashMap::new(),
            children: HashMap::new(),
            verification_key,
            policy,
        }
    }

    pub fn policy(&self) -> LedgerPolicy {
        self.policy
    }

    pub fn verification_key(&self) -> &VerificationKey {
        &self.verification_key
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in registration order.
    pub fn records(&self) -> &[CustodyRecord] {
        &self.records
    }

    fn admissible(&self, record: &CustodyRecord) -> Result<(), Rejection> {
        if record.w_id.is_zero() {
            return Err(Rejection::ZeroId);
        }
        if self.by_id.contains_key(&record.w_id) {
            return Err(Rejection::DuplicateId);
        }
        if self.policy.strict_parent
            && record.p_id != genesis_id()
            && !self.by_id.contains_key(&record.p_id)
        {
            return Err(Rejection::UnknownParent);
        }
        record.check_crypto(&self.verification_key)
    }

    pub fn register(&mut self, record: CustodyRecord) -> Result<(), Rejection> {
        self.admissible(&record)?;
        let idx = self.records.len();
        self.by_id.insert(record.w_id, idx);
        self.children.entry(record.p_id).or_default().push(idx);
        self.records.push(record);
        Ok(())
    }

    pub fn get(&self, w_id: &ObjectId) -> Result<&CustodyRecord, LedgerError> {
        self.by_id
            .get(w_id)
            .map(|&i| &self.records[i])
            .ok_or(LedgerError::NotFound(*w_id))
    }

    /// Records whose parent is `p_id`, in registration order.
    pub fn children(&self, p_id: &ObjectId) -> Vec<&CustodyRecord> {
        self.children
            .get(p_id)
            .map(|idx| idx.iter().map(|&i| &self.records[i]).collect())
            .unwrap_or_default()
    }

    /// Walks parent links to genesis, re-verifying every record on the way.
    pub fn trace(&self, w_id: &ObjectId) -> Result<TraceResult, LedgerError> {
        let genesis = genesis_id();
        let mut chain = Vec::new();
        let mut seen = HashSet::new();
        let mut verified = true;
        let mut current = self.get(w_id)?;
        loop {
            if !seen.insert(current.w_id) {
                return Err(LedgerError::CycleDetected(current.w_id));
            }
            verified &=
                !current.w_id.is_zero() && current.check_crypto(&self.verification_key).is_ok();
            chain.push(current.clone());
            if current.p_id == genesis {
                break;
            }
            current = match self.by_id.get(&current.p_id) {
                Some(&i) => &self.records[i],
                None => {
                    return Err(LedgerError::BrokenChain {
                        child: current.w_id,
                        missing: current.p_id,
                    })
                }
            };
        }
        let registrants = chain.iter().map(|r| r.registrant).collect();
        Ok(TraceResult {
            chain,
            verified,
            registrants,
        })
    }

    /// Re-runs every admission check over the stored records.
    pub fn audit(&self) -> Result<(), LedgerError> {
        let mut fresh = Ledger::new(self.verification_key.clone(), self.policy);
        for r in &self.records {
            fresh
                .register(r.clone())
                .map_err(|e| LedgerError::CorruptLedger {
                    w_id: r.w_id.to_string(),
                    reason: e.to_string(),
                })?;
        }
        Ok(())
    }

    pub fn to_file(&self) -> LedgerFile {
        LedgerFile {
            version: LEDGER_FILE_VERSION,
            verification_key_fingerprint: self.verification_key.fingerprint(),
            records: self.records.iter().map(RecordJson::from).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("ledger serializes")
    }

    /// Rebuilds a ledger from JSON, re-verifying every record in order.
    pub fn from_json(
        json: &str,
        verification_key: VerificationKey,
        policy: LedgerPolicy,
    ) -> Result<Self, LedgerError> {
        let corrupt = |w_id: &str, reason: String| LedgerError::CorruptLedger {
            w_id: w_id.to_owned(),
            reason,
        };
        let file: LedgerFile =
            serde_json::from_str(json).map_err(|e| corrupt("<file>", e.to_string()))?;
        if file.version != LEDGER_FILE_VERSION {
            return Err(corrupt(
                "<file>",
                format!("unsupported version {}", file.version),
            ));
        }
        let expected = verification_key.fingerprint();
        if file.verification_key_fingerprint != expected {
            return Err(LedgerError::FingerprintMismatch {
                expected,
                found: file.verification_key_fingerprint,
            });
        }
        let mut ledger = Ledger::new(verification_key, policy);
        for row in &file.records {
            let record = row.parse().map_err(|reason| corrupt(&row.w_id, reason))?;
            ledger
                .register(record)
                .map_err(|e| corrupt(&row.w_id, e.to_string()))?;
        }
        Ok(ledger)
    }

    /// Writes the ledger atomically (temp file in the same directory, then rename).
    pub fn save(&self, path: &Path) -> Result<(), LedgerError> {
        write_atomic(path, self.to_json().as_bytes()).map_err(|source| LedgerError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(
        path: &Path,
        verification_key: VerificationKey,
        policy: LedgerPolicy,
    ) -> Result<Self, LedgerError> {
        let json = std::fs::read_to_string(path).map_err(|source| LedgerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&json, verification_key, policy)
    }
}

/// Replaces `path` with `bytes` via a sibling temp file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// On-disk ledger document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct LedgerFile {
    pub version: u32,
    pub verification_key_fingerprint: String,
    pub records: Vec<RecordJson>,
}

/// Ids in decimal, byte blobs in `0x` hex.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct RecordJson {
    pub w_id: String,
    pub p_id: String,
    pub proof: String,
    pub signature: String,
    pub registrant: String,
}

impl From<&CustodyRecord> for RecordJson {
    fn from(r: &CustodyRecord) -> Self {
        RecordJson {
            w_id: r.w_id.to_string(),
            p_id: r.p_id.to_string(),
            proof: encode_hex(r.proof.as_bytes()),
            signature: encode_hex(&r.signature.to_bytes()),
            registrant: r.registrant.to_string(),
        }
    }
}

impl RecordJson {
    fn parse(&self) -> Result<CustodyRecord, String> {
        let w_id = self
            .w_id
            .parse::<ObjectId>()
            .map_err(|e| format!("w_id: {e}"))?;
        let p_id = self
            .p_id
            .parse::<ObjectId>()
            .map_err(|e| format!("p_id: {e}"))?;
        let proof = Proof(decode_hex(&self.proof).map_err(|e| format!("proof: {e}"))?);
        let sig_bytes = decode_hex(&self.signature).map_err(|e| format!("signature: {e}"))?;
        let signature = Signature::from_bytes(&sig_bytes).map_err(|e| format!("signature: {e}"))?;
        let registrant = self
            .registrant
            .parse::<Address>()
            .map_err(|e| format!("registrant: {e}"))?;
        Ok(CustodyRecord {
            w_id,
            p_id,
            proof,
            signature,
            registrant,
        })
    }
}
