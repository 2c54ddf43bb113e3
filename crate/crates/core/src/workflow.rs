//! Actor workflows behind the command-line interface.
//!
//! Each command loads what it needs from a [`WorkspaceConfig`], does its work
//! in memory, and only then replaces files on disk (temp file plus rename),
//! so a failing command leaves ledger and tag files as they were.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{CryptoRng, RngCore};
use serde::Serialize;
use thiserror::Error;

use crate::crypto::{Address, CryptoError, KeyPair};
use crate::field::{random_nonce, FieldElement, FieldError, ObjectId};
use crate::handoff::{decode_handoff, encode_handoff, HandoffError, HandoffPayload};
use crate::hash::genesis_id;
use crate::ledger::{
    write_atomic, CustodyRecord, Ledger, LedgerError, LedgerPolicy, Rejection, TraceResult,
};
use crate::relation::{
    build_relation, prove, setup, verify, ProvingKey, RelationError, VerificationKey, Witness,
};
use crate::tag::{provision_tag, read_tag, recover_nonce, TagError, TagImage};

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Tag(#[from] TagError),
    #[error(transparent)]
    Handoff(#[from] HandoffError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("{path} already exists; refusing to overwrite")]
    AlreadyExists { path: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl From<Rejection> for WorkflowError {
    fn from(r: Rejection) -> Self {
        WorkflowError::Ledger(LedgerError::Rejected(r))
    }
}

impl WorkflowError {
    /// 1 for verification or validation failures, 2 for usage and I/O errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            WorkflowError::Io { .. } | WorkflowError::AlreadyExists { .. } => 2,
            WorkflowError::Crypto(CryptoError::Io { .. } | CryptoError::KeyFile(_)) => 2,
            WorkflowError::Relation(RelationError::Io { .. } | RelationError::MalformedKey(_)) => 2,
            WorkflowError::Tag(TagError::Io { .. } | TagError::BadSize(_)) => 2,
            WorkflowError::Ledger(LedgerError::Io { .. }) => 2,
            WorkflowError::Field(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WorkflowError + '_ {
    move |source| WorkflowError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// File locations for one actor's workspace.
#[derive(Debug, Clone, Serialize)]
pub struct WorkspaceConfig {
    pub ledger_path: PathBuf,
    pub keys_path: PathBuf,
    pub proving_key_path: PathBuf,
    pub verification_key_path: PathBuf,
    pub strict_parent: bool,
}

impl Default for WorkspaceConfig {
    fn default() -> Self {
        WorkspaceConfig {
            ledger_path: "ledger.json".into(),
            keys_path: "keys.json".into(),
            proving_key_path: "custody.pk".into(),
            verification_key_path: "custody.vk".into(),
            strict_parent: true,
        }
    }
}

impl WorkspaceConfig {
    pub fn policy(&self) -> LedgerPolicy {
        LedgerPolicy {
            strict_parent: self.strict_parent,
        }
    }

    pub fn load_keys(&self) -> Result<KeyPair, WorkflowError> {
        Ok(KeyPair::load(&self.keys_path)?)
    }

    pub fn load_proving_key(&self) -> Result<ProvingKey, WorkflowError> {
        Ok(ProvingKey::load(&self.proving_key_path)?)
    }

    pub fn load_verification_key(&self) -> Result<VerificationKey, WorkflowError> {
        Ok(VerificationKey::load(&self.verification_key_path)?)
    }

    /// Loads the ledger, or starts an empty one if the file does not exist yet.
    pub fn load_or_create_ledger(&self) -> Result<Ledger, WorkflowError> {
        let vk = self.load_verification_key()?;
        if self.ledger_path.exists() {
            Ok(Ledger::load(&self.ledger_path, vk, self.policy())?)
        } else {
            Ok(Ledger::new(vk, self.policy()))
        }
    }

    pub fn load_ledger(&self) -> Result<Ledger, WorkflowError> {
        let vk = self.load_verification_key()?;
        Ok(Ledger::load(&self.ledger_path, vk, self.policy())?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SetupReport {
    pub verification_key_fingerprint: String,
    pub constraints: usize,
}

/// Runs the single-party setup and writes both key files.
pub fn cmd_setup<R: RngCore + CryptoRng>(
    cfg: &WorkspaceConfig,
    rng: &mut R,
) -> Result<SetupReport, WorkflowError> {
    let (pk, vk) = setup(rng)?;
    write_atomic(&cfg.proving_key_path, &pk.to_bytes()).map_err(io_err(&cfg.proving_key_path))?;
    write_atomic(&cfg.verification_key_path, &vk.to_bytes())
        .map_err(io_err(&cfg.verification_key_path))?;
    Ok(SetupReport {
        verification_key_fingerprint: vk.fingerprint(),
        constraints: build_relation().constraint_count(),
    })
}

/// Generates a key pair and writes it to `cfg.keys_path` (never overwrites).
pub fn cmd_keygen<R: RngCore + CryptoRng>(
    cfg: &WorkspaceConfig,
    rng: &mut R,
) -> Result<Address, WorkflowError> {
    if cfg.keys_path.exists() {
        return Err(WorkflowError::AlreadyExists {
            path: cfg.keys_path.display().to_string(),
        });
    }
    let kp = KeyPair::generate(rng);
    let json = serde_json::to_string_pretty(&kp.to_key_file()).expect("key file serializes");
    write_atomic(&cfg.keys_path, json.as_bytes()).map_err(io_err(&cfg.keys_path))?;
    Ok(kp.address())
}

#[derive(Debug, Clone, Serialize)]
pub struct RegisterReport {
    pub w_id: String,
    pub p_id: String,
    pub registrant: String,
    pub ledger_records: usize,
}

fn ensure_absent(path: &Path) -> Result<(), WorkflowError> {
    if path.exists() {
        return Err(WorkflowError::AlreadyExists {
            path: path.display().to_string(),
        });
    }
    Ok(())
}

/// Shared tail of plant and derive: fresh nonce, proof, ledger admission,
/// tag provisioning, then the two file writes.
fn register_new_object<R: RngCore + CryptoRng>(
    cfg: &WorkspaceConfig,
    parent: HandoffPayload,
    tag_out: &Path,
    rng: &mut R,
) -> Result<RegisterReport, WorkflowError> {
    ensure_absent(tag_out)?;
    let keys = cfg.load_keys()?;
    let pk = cfg.load_proving_key()?;
    let mut ledger = cfg.load_or_create_ledger()?;

    let nonce = random_nonce(rng);
    let witness = Witness {
        p_nonce: parent.p_nonce,
        w_nonce: nonce,
    };
    let (proof, io) = prove(&pk, parent.p_id, &witness, rng)?;
    let record = CustodyRecord::signed(&keys, proof, io);
    ledger.register(record)?;
    let tag = provision_tag(rng, &keys.public_key(), &witness.w_nonce)?;
    // The plaintext nonce ends here; only the encrypted copy on the tag survives.
    drop(witness);

    write_atomic(tag_out, tag.as_bytes()).map_err(io_err(tag_out))?;
    ledger.save(&cfg.ledger_path)?;
    Ok(RegisterReport {
        w_id: io.w_id.to_string(),
        p_id: io.p_id.to_string(),
        registrant: keys.address().to_string(),
        ledger_records: ledger.len(),
    })
}

/// Registers a new root object (a tree) whose parent is genesis.
pub fn cmd_plant<R: RngCore + CryptoRng>(
    cfg: &WorkspaceConfig,
    tag_out: &Path,
    rng: &mut R,
) -> Result<RegisterReport, WorkflowError> {
    let genesis = HandoffPayload {
        p_id: genesis_id(),
        p_nonce: FieldElement::ZERO,
    };
    register_new_object(cfg, genesis, tag_out, rng)
}

/// Reads a tag with this workspace's key and emits its handoff string.
pub fn cmd_handoff(cfg: &WorkspaceConfig, tag_in: &Path) -> Result<String, WorkflowError> {
    let keys = cfg.load_keys()?;
    let tag = TagImage::load(tag_in)?;
    let (id, _) = read_tag(&tag)?;
    let nonce = recover_nonce(&keys, &tag)?;
    Ok(encode_handoff(&HandoffPayload {
        p_id: id,
        p_nonce: nonce.expose(),
    })?)
}

/// Registers a child of the object described by `handoff`.
pub fn cmd_derive<R: RngCore + CryptoRng>(
    cfg: &WorkspaceConfig,
    handoff: &str,
    tag_out: &Path,
    rng: &mut R,
) -> Result<RegisterReport, WorkflowError> {
    let parent = decode_handoff(handoff.trim())?;
    register_new_object(cfg, parent, tag_out, rng)
}

pub fn cmd_trace(cfg: &WorkspaceConfig, w_id: &str) -> Result<TraceResult, WorkflowError> {
    let id: ObjectId = w_id.trim().parse()?;
    let ledger = cfg.load_ledger()?;
    Ok(ledger.trace(&id)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub trials: usize,
    pub timings_ms: Vec<f64>,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub constraints: usize,
    pub all_verified: bool,
}

/// Times `trials` child proofs against a synthetic parent.
pub fn cmd_bench<R: RngCore + CryptoRng>(
    cfg: &WorkspaceConfig,
    trials: usize,
    rng: &mut R,
) -> Result<BenchReport, WorkflowError> {
    let pk = cfg.load_proving_key()?;
    let vk = cfg.load_verification_key()?;
    let mut timings_ms = Vec::with_capacity(trials);
    let mut all_verified = true;
    for _ in 0..trials {
        let parent = random_nonce(rng);
        let p_id = crate::hash::id_of(&parent);
        let witness = Witness {
            p_nonce: parent.expose(),
            w_nonce: random_nonce(rng),
        };
        let start = Instant::now();
        let (proof, io) = prove(&pk, p_id, &witness, rng)?;
        timings_ms.push(start.elapsed().as_secs_f64() * 1000.0);
        all_verified &= !io.w_id.is_zero() && verify(&vk, &proof, &io);
    }
    let mut sorted = timings_ms.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (mean_ms, median_ms, min_ms, max_ms) = if n == 0 {
        (0.0, 0.0, 0.0, 0.0)
    } else {
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        (
            sorted.iter().sum::<f64>() / n as f64,
            median,
            sorted[0],
            sorted[n - 1],
        )
    };
    Ok(BenchReport {
        trials,
        timings_ms,
        mean_ms,
        median_ms,
        min_ms,
        max_ms,
        constraints: build_relation().constraint_count(),
        all_verified,
    })
}
