//! Statement/witness/proof layer with a transparent reference backend.
//!
//! A statement binds a ruleset fingerprint and the previous/new
//! commitment roots; a witness holds the two plaintext rows and the
//! blinding key. `prove` recomputes both commitments and replays the
//! treaty rules, then emits a small attested receipt; `verify` needs only
//! the statement and the shared session secret, never witness data.
//!
//! Security model, stated plainly: the transparent backend is a trusted
//! proving oracle, not a succinct argument. The verifier learns nothing
//! beyond the statement (the receipt carries only digests), but soundness
//! against a dishonest prover is organizational, not cryptographic — it
//! rests on prover-side refusal plus the attestation key both parties
//! share at setup. The `backend_id` field exists so a real proof system
//! can drop in behind the same interface; nothing in the protocol layer
//! depends on how the receipt was produced.

use std::collections::BTreeSet;

use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

use crate::commitment::commit;
use crate::hash::{combined_hash, Digest64, PrfKey};
use crate::passport::{CountryProfile, EncodeError, Field, PassportRow};
use crate::rules::{validate_transition, RuleCatalog, Severity, Violation};

/// Largest serialized receipt the wire format permits.
pub const PROOF_MAX_BYTES: usize = 160;

const PROOF_WIRE_BYTES: usize = 2 + Digest64::LEN + 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProofMode {
    /// The transition satisfies every reject-severity rule.
    Normal,
    /// The row declares an exception: the prover could not produce a
    /// normal proof and says so on the record, with a reason.
    Exception,
}

impl ProofMode {
    fn to_byte(self) -> u8 {
        match self {
            ProofMode::Normal => 0,
            ProofMode::Exception => 1,
        }
    }

    fn from_byte(byte: u8) -> Option<Self> {
        match byte {
            0 => Some(ProofMode::Normal),
            1 => Some(ProofMode::Exception),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendId {
    Transparent,
}

impl BackendId {
    fn to_byte(self) -> u8 {
        match self {
            BackendId::Transparent => 1,
        }
    }

    fn from_byte(byte: u8) -> Option<Self> {
        match byte {
            1 => Some(BackendId::Transparent),
            _ => None,
        }
    }
}

/// Fingerprint of the rule regime a statement is proved under: the dual
/// hash of the catalog and profile, serialized canonically. Two parties
/// agree on a ruleset exactly when these match.
pub fn ruleset_id(catalog: &RuleCatalog, profile: &CountryProfile) -> Digest64 {
    let document = serde_json::to_vec(&(catalog, profile))
        .expect("catalog and profile serialize infallibly");
    combined_hash(&document)
}

/// The public claim one proof attests to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub ruleset_id: Digest64,
    /// Absent exactly on a chain's first update.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prev_commitment: Option<Digest64>,
    pub new_commitment: Digest64,
    pub mode: ProofMode,
}

impl Statement {
    /// Fixed-order byte serialization: ruleset, length-prefixed previous
    /// root (empty at chain start), length-prefixed new root, mode byte.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(3 * Digest64::LEN + 9);
        out.extend_from_slice(self.ruleset_id.as_bytes());
        match &self.prev_commitment {
            Some(root) => {
                out.extend_from_slice(&(Digest64::LEN as u32).to_be_bytes());
                out.extend_from_slice(root.as_bytes());
            }
            None => out.extend_from_slice(&0u32.to_be_bytes()),
        }
        out.extend_from_slice(&(Digest64::LEN as u32).to_be_bytes());
        out.extend_from_slice(self.new_commitment.as_bytes());
        out.push(self.mode.to_byte());
        out
    }

    pub fn digest(&self) -> Digest64 {
        combined_hash(&self.canonical_bytes())
    }
}

/// Secret inputs behind one statement: the plaintext rows and the
/// blinding key. `update_index` is the new row's position; the previous
/// row, when present, sits immediately before it.
#[derive(Clone)]
pub struct Witness {
    pub prev_row: Option<PassportRow>,
    pub new_row: PassportRow,
    pub key: PrfKey,
    pub update_index: u64,
}

/// Session-wide proving parameters fixed at setup. The attestation key
/// is shared between the two parties and never appears in transcripts.
#[derive(Clone, PartialEq, Eq)]
pub struct SessionParams {
    pub crs_tag: String,
    attestation_key: [u8; 32],
    pub backend_id: BackendId,
}

impl SessionParams {
    pub fn transparent(crs_tag: &str, attestation_key: [u8; 32]) -> Self {
        SessionParams {
            crs_tag: crs_tag.to_string(),
            attestation_key,
            backend_id: BackendId::Transparent,
        }
    }
}

impl std::fmt::Debug for SessionParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionParams")
            .field("crs_tag", &self.crs_tag)
            .field("attestation_key", &"<redacted>")
            .field("backend_id", &self.backend_id)
            .finish()
    }
}

/// The attested receipt. Serialized form stays under
/// [`PROOF_MAX_BYTES`]: two tag bytes, the statement digest, and the
/// 32-byte keyed attestation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofObject {
    pub backend_id: BackendId,
    pub mode: ProofMode,
    pub statement_digest: Digest64,
    #[serde(with = "attestation_hex")]
    pub attestation: [u8; 32],
}

impl ProofObject {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(PROOF_WIRE_BYTES);
        out.push(self.backend_id.to_byte());
        out.push(self.mode.to_byte());
        out.extend_from_slice(self.statement_digest.as_bytes());
        out.extend_from_slice(&self.attestation);
        debug_assert!(out.len() <= PROOF_MAX_BYTES);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<ProofObject> {
        if bytes.len() != PROOF_WIRE_BYTES {
            return None;
        }
        let mut digest = [0u8; Digest64::LEN];
        digest.copy_from_slice(&bytes[2..2 + Digest64::LEN]);
        let mut attestation = [0u8; 32];
        attestation.copy_from_slice(&bytes[2 + Digest64::LEN..]);
        Some(ProofObject {
            backend_id: BackendId::from_byte(bytes[0])?,
            mode: ProofMode::from_byte(bytes[1])?,
            statement_digest: Digest64(digest),
            attestation,
        })
    }
}

mod attestation_hex {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let text = String::deserialize(d)?;
        let raw = hex::decode(&text).map_err(serde::de::Error::custom)?;
        raw.try_into()
            .map_err(|_| serde::de::Error::custom("attestation must be 32 bytes"))
    }
}

#[derive(Debug, Error)]
pub enum ProveError {
    #[error("statement's ruleset fingerprint does not match the supplied catalog and profile")]
    RulesetMismatch,
    #[error("witness rows do not reproduce the statement's commitments")]
    CommitmentMismatch,
    #[error("refusing to attest: {} reject-severity violation(s)", .0.len())]
    RuleViolations(Vec<Violation>),
    #[error("exception statement needs exception=true and a nonempty reason on the new row")]
    MalformedException,
    #[error("witness row does not encode: {0}")]
    Encode(#[from] EncodeError),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("statement mode is not Exception")]
pub struct NotException;

fn attest(key: &[u8; 32], statement_digest: &Digest64) -> [u8; 32] {
    let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("HMAC accepts 32-byte keys");
    mac.update(statement_digest.as_bytes());
    mac.finalize().into_bytes().into()
}

/// Produce an attested receipt for `statement`, or refuse.
///
/// The backend recomputes both commitments from the witness and replays
/// the transition rules, so a receipt exists only for statements whose
/// hidden rows actually satisfy the claim: normal mode demands zero
/// reject-severity violations; exception mode demands the row declare
/// the exception with a reason. That refusal is the soundness mechanism.
pub fn prove(
    statement: &Statement,
    witness: &Witness,
    session: &SessionParams,
    catalog: &RuleCatalog,
    profile: &CountryProfile,
) -> Result<ProofObject, ProveError> {
    if statement.ruleset_id != ruleset_id(catalog, profile) {
        return Err(ProveError::RulesetMismatch);
    }

    let new_commitment = commit(&witness.key, witness.update_index, &witness.new_row, profile)?;
    if new_commitment.root != statement.new_commitment {
        return Err(ProveError::CommitmentMismatch);
    }
    match (&witness.prev_row, &statement.prev_commitment) {
        (None, None) => {}
        (Some(prev_row), Some(expected)) => {
            if witness.update_index == 0 {
                return Err(ProveError::CommitmentMismatch);
            }
            let prev = commit(&witness.key, witness.update_index - 1, prev_row, profile)?;
            if prev.root != *expected {
                return Err(ProveError::CommitmentMismatch);
            }
        }
        _ => return Err(ProveError::CommitmentMismatch),
    }

    match statement.mode {
        ProofMode::Normal => {
            let rejects: Vec<Violation> =
                validate_transition(catalog, profile, witness.prev_row.as_ref(), &witness.new_row)
                    .into_iter()
                    .filter(|v| v.severity == Severity::Reject)
                    .collect();
            if !rejects.is_empty() {
                return Err(ProveError::RuleViolations(rejects));
            }
        }
        ProofMode::Exception => {
            if !witness.new_row.exception || witness.new_row.exception_reason.is_empty() {
                return Err(ProveError::MalformedException);
            }
        }
    }

    let statement_digest = statement.digest();
    Ok(ProofObject {
        backend_id: session.backend_id,
        mode: statement.mode,
        statement_digest,
        attestation: attest(&session.attestation_key, &statement_digest),
    })
}

/// Check a receipt against a statement: the backend must match, the
/// receipt's digest and mode must be the statement's own, and the keyed
/// attestation must validate under this session's shared secret. Needs
/// no witness data.
pub fn verify(proof: &ProofObject, statement: &Statement, session: &SessionParams) -> bool {
    proof.backend_id == session.backend_id
        && proof.mode == statement.mode
        && proof.statement_digest == statement.digest()
        && proof.attestation == attest(&session.attestation_key, &proof.statement_digest)
}

/// The field positions a prover must open alongside an exception
/// receipt: the exception flag and its reason, so the verifier can read
/// the declaration the receipt attests to.
pub fn required_exception_openings(statement: &Statement) -> Result<BTreeSet<u32>, NotException> {
    if statement.mode != ProofMode::Exception {
        return Err(NotException);
    }
    Ok(BTreeSet::from([
        Field::Exception.index(),
        Field::ExceptionReason.index(),
    ]))
}
