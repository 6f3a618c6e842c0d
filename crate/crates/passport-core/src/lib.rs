//! Verification engine and simulator for two-party warhead-passport
//! monitoring.
//!
//! Each warhead's lifecycle is a chain of event rows. The owner never
//! ships a row; it ships a hiding commitment to the row plus a receipt
//! that the transition obeys the negotiated rulebook, and later answers
//! selective-opening challenges against commitments already on file.
//!
//! The layers, bottom up:
//!
//! - [`hash`] — SHA-256 beside GOST R 34.11-94 (both S-box sets), a
//!   64-byte concatenation combiner that stays collision-resistant while
//!   either half does, and the keyed PRF that derives per-cell blinding.
//! - [`commitment`] — rows become sixteen blinded cells (eleven fields,
//!   five constant-shape padding cells) under a Merkle root, with
//!   aggregated multi-leaf inclusion proofs for selective opening.
//! - [`passport`] — the row model, the byte-level field encodings, and
//!   the per-country profiles (locations, statuses, operations, transport
//!   windows) the encodings validate against.
//! - [`rules`] — the negotiated rulebook: enumerated transition checks
//!   per side, transport-window timing, whole-passport audits, and the
//!   deductions a verifier may draw about hidden neighbor rows.
//! - [`proof`] — statement/witness layer that refuses to attest
//!   rule-breaking transitions. The bundled backend is *transparent*: a
//!   keyed attestation that binds statements and gates on the rules, with
//!   no zero-knowledge claim. It holds the seam where a succinct
//!   zero-knowledge backend would plug in; wire sizes are capped so the
//!   substitution stays drop-in.
//! - [`protocol`] — two-party state machines over an at-least-once
//!   channel: commitment exchange, periodic challenges, exception
//!   disclosures, append-only ledgers, and a deterministic simulator
//!   with seeded fault injection (drops, duplication, reordering).
//!
//! The receiver's ledger never stores peer warhead identities or row
//! values beyond what an opening disclosed; chain links are recorded only
//! when an opened previous-hash cell matches a stored root.

pub mod commitment;
pub mod hash;
pub mod passport;
pub mod proof;
pub mod protocol;
pub mod rules;

pub use commitment::{
    commit, open_cells, row_leaves, CellOpening, Commitment, InclusionProof, LeafVector,
};
pub use hash::{combined_hash, prf_sigma, Digest32, Digest64, GostParamSet, PrfKey};
pub use passport::{
    CountryProfile, Field, FieldValue, Passport, PassportRow, Side,
};
pub use proof::{
    prove, required_exception_openings, ruleset_id, verify, BackendId, ProofMode, ProofObject,
    ProveError, SessionParams, Statement, Witness,
};
pub use protocol::{
    run_scenario, setup, FaultPlan, Ledger, LedgerRecord, Message, PartyConfig, PartyState,
    ProtocolError, Scenario, ScenarioError, TranscriptBundle,
};
pub use rules::{
    audit_dataset, check_transport_window, infer_adjacent, validate_transition, RuleCatalog,
    Severity, Violation,
};
