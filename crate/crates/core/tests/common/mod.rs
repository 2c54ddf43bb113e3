#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use woodtrace::crypto::KeyPair;
use woodtrace::field::{random_nonce, FieldElement, Nonce};
use woodtrace::ledger::CustodyRecord;
use woodtrace::relation::{prove, setup, ProvingKey, VerificationKey, Witness};
use woodtrace::ObjectId;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn keys(seed: u64) -> (ProvingKey, VerificationKey) {
    setup(&mut rng(seed)).expect("setup")
}

/// Proves and signs a child of `(p_id, p_nonce)`; returns the record and the child's nonce.
pub fn child(
    pk: &ProvingKey,
    key: &KeyPair,
    p_id: ObjectId,
    p_nonce: FieldElement,
    rng: &mut ChaCha20Rng,
) -> (CustodyRecord, Nonce) {
    let nonce = random_nonce(rng);
    let witness = Witness {
        p_nonce,
        w_nonce: nonce.clone(),
    };
    let (proof, io) = prove(pk, p_id, &witness, rng).expect("prove");
    (CustodyRecord::signed(key, proof, io), nonce)
}

/// True if `needle`'s 32-byte encoding appears in `haystack` as raw bytes,
/// lowercase hex, or decimal text.
pub fn leaks(haystack: &[u8], needle: &Nonce) -> bool {
    let raw = needle.to_bytes();
    let hex = hex::encode(raw);
    let dec = needle.expose().to_decimal();
    haystack.windows(32).any(|w| w == raw)
        || haystack.windows(hex.len()).any(|w| w == hex.as_bytes())
        || haystack.windows(dec.len()).any(|w| w == dec.as_bytes())
}

pub fn woodtrace(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_woodtrace"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn woodtrace")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Value after `label:` on the first matching output line.
pub fn field(out: &Output, label: &str) -> String {
    stdout(out)
        .lines()
        .find_map(|l| {
            l.strip_prefix(label)
                .map(|v| v.trim_start_matches(':').trim().to_owned())
        })
        .unwrap_or_else(|| panic!("no {label} in output:\n{}", stdout(out)))
}
