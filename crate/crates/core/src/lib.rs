//! Zero-knowledge chain of custody for physical objects.
//!
//! Every object (tree, log, board, product) is identified by the hash of a
//! secret nonce. Deriving a child object means proving, in zero knowledge,
//! knowledge of the parent's nonce; the ledger admits a record only when that
//! proof and the registrant's signature both verify, so provenance can be
//! checked from ledger contents alone.

pub mod crypto;
pub mod encoding;
pub mod field;
pub mod handoff;
pub mod hash;
pub mod ledger;
pub mod relation;
pub mod tag;
pub mod workflow;

pub use field::{FieldElement, Nonce, ObjectId};
pub use hash::{genesis_id, hash1, id_of};
