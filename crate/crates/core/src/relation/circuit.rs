//! R1CS encoding of the custody relation.
//!
//! Public inputs, in order: `p_id`, `w_id`. Private: `p_nonce`, `w_nonce`.
//!
//! ```text
//! p_hash = mimc7(p_nonce)           364 constraints
//! w_hash = mimc7(w_nonce)           364 constraints
//! p_eq   = is_zero(p_hash - p_id)     2 constraints
//! w_id   = w_hash * p_eq              1 constraint
//! ```

use ark_bn254::Fr;
use ark_ff::{Field, One, Zero};
use ark_relations::lc;
use ark_relations::r1cs::{
    self, ConstraintSynthesizer, ConstraintSystemRef, LinearCombination, SynthesisError, Variable,
};

use crate::field::FieldElement;
use crate::hash::{round_constants, MIMC_ROUNDS};

/// Constraints emitted per MiMC-7 round (`t^2, t^4, t^6, t^7`).
pub const CONSTRAINTS_PER_ROUND: usize = 4;
pub const NUM_PUBLIC_INPUTS: usize = 2;

/// Values for every input wire. All `None` during key generation.
///
/// `w_id` is normally derived from the other inputs; setting it explicitly
/// models a prover claiming an arbitrary output.
#[derive(Clone, Copy, Debug, Default)]
pub struct CustodyCircuit {
    pub p_id: Option<Fr>,
    pub p_nonce: Option<Fr>,
    pub w_nonce: Option<Fr>,
    pub w_id: Option<Fr>,
}

impl CustodyCircuit {
    pub fn blank() -> Self {
        Self::default()
    }

    /// Honest assignment whose `w_id` is what the relation computes.
    pub fn honest(p_id: FieldElement, p_nonce: FieldElement, w_nonce: FieldElement) -> Self {
        let w_id = super::relation_output(p_id, p_nonce, w_nonce);
        CustodyCircuit {
            p_id: Some(p_id.fr()),
            p_nonce: Some(p_nonce.fr()),
            w_nonce: Some(w_nonce.fr()),
            w_id: Some(w_id.fr()),
        }
    }

    /// Assignment with an arbitrary claimed output.
    pub fn claiming(
        p_id: FieldElement,
        p_nonce: FieldElement,
        w_nonce: FieldElement,
        w_id: FieldElement,
    ) -> Self {
        CustodyCircuit {
            p_id: Some(p_id.fr()),
            p_nonce: Some(p_nonce.fr()),
            w_nonce: Some(w_nonce.fr()),
            w_id: Some(w_id.fr()),
        }
    }
}

fn value(v: Option<Fr>) -> Result<Fr, SynthesisError> {
    v.ok_or(SynthesisError::AssignmentMissing)
}

/// Allocates `a * b` as a new witness and constrains it.
fn mul(
    cs: &ConstraintSystemRef<Fr>,
    a: (LinearCombination<Fr>, Option<Fr>),
    b: (LinearCombination<Fr>, Option<Fr>),
) -> Result<(Variable, Option<Fr>), SynthesisError> {
    let product = a.1.zip(b.1).map(|(x, y)| x * y);
    let var = cs.new_witness_variable(|| value(product))?;
    cs.enforce_constraint(a.0, b.0, lc!() + var)?;
    Ok((var, product))
}

/// MiMC-7 with zero key: `r_0 = x`, `r_{i+1} = (r_i + c_i)^7`.
fn mimc7_gadget(
    cs: &ConstraintSystemRef<Fr>,
    input: Variable,
    input_value: Option<Fr>,
) -> Result<(Variable, Option<Fr>), SynthesisError> {
    let constants = round_constants();
    let mut state = (input, input_value);
    for (i, c) in constants.iter().enumerate().take(MIMC_ROUNDS) {
        let t_lc = if i == 0 {
            lc!() + state.0
        } else {
            lc!() + state.0 + (*c, Variable::One)
        };
        let t_val = state.1.map(|v| if i == 0 { v } else { v + c });
        let (t2, t2v) = mul(cs, (t_lc.clone(), t_val), (t_lc.clone(), t_val))?;
        let (t4, t4v) = mul(cs, (lc!() + t2, t2v), (lc!() + t2, t2v))?;
        let (t6, t6v) = mul(cs, (lc!() + t4, t4v), (lc!() + t2, t2v))?;
        state = mul(cs, (lc!() + t6, t6v), (t_lc, t_val))?;
    }
    Ok(state)
}

impl ConstraintSynthesizer<Fr> for CustodyCircuit {
    fn generate_constraints(self, cs: ConstraintSystemRef<Fr>) -> r1cs::Result<()> {
        let p_id = cs.new_input_variable(|| value(self.p_id))?;
        let w_id = cs.new_input_variable(|| value(self.w_id))?;
        let p_nonce = cs.new_witness_variable(|| value(self.p_nonce))?;
        let w_nonce = cs.new_witness_variable(|| value(self.w_nonce))?;

        let (p_hash, p_hash_val) = mimc7_gadget(&cs, p_nonce, self.p_nonce)?;
        let (w_hash, _) = mimc7_gadget(&cs, w_nonce, self.w_nonce)?;

        // is_zero(diff): diff * inv = 1 - eq, diff * eq = 0.
        let diff_val = p_hash_val.zip(self.p_id).map(|(h, id)| h - id);
        let eq_val = diff_val.map(|d| if d.is_zero() { Fr::one() } else { Fr::zero() });
        let inv_val = diff_val.map(|d| d.inverse().unwrap_or_else(Fr::zero));
        let inv = cs.new_witness_variable(|| value(inv_val))?;
        let eq = cs.new_witness_variable(|| value(eq_val))?;
        let diff = lc!() + p_hash - p_id;
        cs.enforce_constraint(diff.clone(), lc!() + inv, lc!() + Variable::One - eq)?;
        cs.enforce_constraint(diff, lc!() + eq, lc!())?;

        cs.enforce_constraint(lc!() + w_hash, lc!() + eq, lc!() + w_id)?;
        Ok(())
    }
}
