//! The custody relation: knowledge of a parent nonce and a child nonce such
//! that the parent nonce hashes to a public parent id. The output is the
//! child's id, or zero when the parent check fails.
//!
//! [`eval_relation`] is the plain evaluator and the reference for the
//! circuit in [`circuit`]. [`groth16`] wraps the circuit in a preprocessing
//! SNARK with a single-party setup. That setup is test-grade trust: whoever
//! runs it can forge proofs, so it does not replace a multi-party ceremony.

pub mod circuit;
pub mod groth16;

use ark_bn254::Fr;
use ark_relations::r1cs::{
    ConstraintSynthesizer, ConstraintSystem as ArkConstraintSystem, SynthesisMode,
};
use thiserror::Error;

use crate::field::{FieldElement, Nonce, ObjectId};
use crate::hash::hash1;

pub use circuit::CustodyCircuit;
pub use groth16::{prove, setup, verify, Proof, ProvingKey, VerificationKey};

#[derive(Debug, Error)]
pub enum RelationError {
    #[error("nonce must be nonzero")]
    ZeroNonce,
    #[error("proving key does not match the custody relation")]
    KeyMismatch,
    #[error("malformed key file: {0}")]
    MalformedKey(String),
    #[error("constraint synthesis failed: {0}")]
    Synthesis(#[from] ark_relations::r1cs::SynthesisError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Public values of one custody transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PublicIO {
    /// Public input: parent id.
    pub p_id: ObjectId,
    /// Public output: child id, zero when the parent check failed.
    pub w_id: ObjectId,
}

impl PublicIO {
    pub fn to_bytes(&self) -> [u8; 64] {
        let mut out = [0u8; 64];
        out[..32].copy_from_slice(&self.p_id.to_bytes());
        out[32..].copy_from_slice(&self.w_id.to_bytes());
        out
    }

    pub(crate) fn as_inputs(&self) -> [Fr; 2] {
        [self.p_id.value().fr(), self.w_id.value().fr()]
    }
}

/// Private inputs. `p_nonce` is zero only for root objects.
#[derive(Clone, Debug)]
pub struct Witness {
    pub p_nonce: FieldElement,
    pub w_nonce: Nonce,
}

impl Witness {
    /// Witness for a root object whose parent is genesis.
    pub fn genesis(w_nonce: Nonce) -> Self {
        Witness {
            p_nonce: FieldElement::ZERO,
            w_nonce,
        }
    }
}

pub(crate) fn relation_output(
    p_id: FieldElement,
    p_nonce: FieldElement,
    w_nonce: FieldElement,
) -> FieldElement {
    let w_hash = hash1(w_nonce);
    if hash1(p_nonce) == p_id {
        w_hash
    } else {
        FieldElement::ZERO
    }
}

/// `hash1(w_nonce)` if `hash1(p_nonce) == p_id`, else zero.
pub fn eval_relation(
    p_id: ObjectId,
    p_nonce: FieldElement,
    w_nonce: FieldElement,
) -> Result<FieldElement, RelationError> {
    if w_nonce.is_zero() {
        return Err(RelationError::ZeroNonce);
    }
    Ok(relation_output(p_id.value(), p_nonce, w_nonce))
}

/// Shape of the compiled relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstraintSystem {
    pub num_constraints: usize,
    /// Public inputs, excluding the constant-one wire.
    pub num_public_inputs: usize,
    pub num_witness_variables: usize,
}

/// Values for a satisfiability check: all four wires of the relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub p_id: FieldElement,
    pub p_nonce: FieldElement,
    pub w_nonce: FieldElement,
    pub w_id: FieldElement,
}

impl ConstraintSystem {
    pub fn constraint_count(&self) -> usize {
        self.num_constraints
    }

    /// Synthesizes the circuit with concrete values and checks `A·z ∘ B·z = C·z`
    /// row by row.
    pub fn is_satisfied(&self, assignment: &Assignment) -> Result<bool, RelationError> {
        let cs = ArkConstraintSystem::<Fr>::new_ref();
        CustodyCircuit::claiming(
            assignment.p_id,
            assignment.p_nonce,
            assignment.w_nonce,
            assignment.w_id,
        )
        .generate_constraints(cs.clone())?;
        cs.finalize();
        let m = cs
            .to_matrices()
            .expect("constraint matrices are recorded in prove mode");
        debug_assert_eq!(m.num_constraints, self.num_constraints);
        let inner = cs.borrow().expect("constraint system is live");
        let z: Vec<Fr> = inner
            .instance_assignment
            .iter()
            .chain(&inner.witness_assignment)
            .copied()
            .collect();
        let row = |r: &[(Fr, usize)]| r.iter().map(|(coeff, i)| *coeff * z[*i]).sum::<Fr>();
        Ok(m.a
            .iter()
            .zip(&m.b)
            .zip(&m.c)
            .all(|((a, b), c)| row(a) * row(b) == row(c)))
    }
}

/// Compiles the relation and reports its dimensions.
pub fn build_relation() -> ConstraintSystem {
    let cs = ArkConstraintSystem::<Fr>::new_ref();
    cs.set_mode(SynthesisMode::Setup);
    CustodyCircuit::blank()
        .generate_constraints(cs.clone())
        .expect("blank synthesis in setup mode cannot fail");
    ConstraintSystem {
        num_constraints: cs.num_constraints(),
        num_public_inputs: cs.num_instance_variables() - 1,
        num_witness_variables: cs.num_witness_variables(),
    }
}
