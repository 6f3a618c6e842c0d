//! Hiding commitments over passport records.
//!
//! A record is encoded into a fixed vector of byte-string cells, each cell
//! is blinded by hashing it together with a per-cell secret, and the
//! blinded cells become the leaves of a complete binary Merkle tree. The
//! published commitment is the tree root. Opening a cell means revealing
//! its value and blinding secret; a multi-proof carries exactly the
//! off-path digests the verifier cannot recompute from the openings.
//!
//! Trees are laid out as a 1-indexed array heap: leaves occupy positions
//! `1..=n`, the parent of positions `2i-1` and `2i` sits at `n + i`, and
//! the root is position `2n - 1`. Interior nodes hash the concatenation of
//! their children with the same dual hash used for the leaves.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::{combined_hash, prf_sigma, Digest64, PrfKey};
use crate::passport::{encode_row, CountryProfile, EncodeError, Field, PassportRow};

/// Leaf count of every passport commitment tree: eleven record fields plus
/// five always-hidden padding cells, so the tree shape itself reveals
/// nothing about which fields a record populates.
pub const PASSPORT_LEAF_COUNT: usize = 16;

/// Number of cells that carry record fields (positions `1..=11`).
pub const FIELD_CELL_COUNT: usize = 11;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CommitmentError {
    #[error("leaf count {0} is not a nonzero power of two")]
    NonPowerOfTwoLeaves(usize),
    #[error("position {position} is out of range for a tree with {leaf_count} leaves")]
    PositionOutOfRange { position: u32, leaf_count: u32 },
    #[error("no cells selected for opening")]
    EmptyOpeningSet,
    #[error("malformed proof: {0}")]
    MalformedProof(String),
}

// ---------------------------------------------------------------------------
// Blinding and tree construction
// ---------------------------------------------------------------------------

/// Blind one cell: hash the per-cell secret followed by the cell value.
/// Hiding rests on the secret being unpredictable; binding rests on
/// collision resistance of the dual hash.
pub fn hide_with_sigma(sigma: &Digest64, value: &[u8]) -> Digest64 {
    let mut input = Vec::with_capacity(Digest64::LEN + value.len());
    input.extend_from_slice(sigma.as_bytes());
    input.extend_from_slice(value);
    combined_hash(&input)
}

/// Blind one cell under the owner's key, deriving the per-cell secret
/// from the update and field indices.
pub fn hide(key: &PrfKey, update_index: u64, field_index: u32, value: &[u8]) -> Digest64 {
    hide_with_sigma(&prf_sigma(key, update_index, field_index), value)
}

fn check_leaf_count(leaf_count: usize) -> Result<(), CommitmentError> {
    if leaf_count == 0 || !leaf_count.is_power_of_two() {
        return Err(CommitmentError::NonPowerOfTwoLeaves(leaf_count));
    }
    Ok(())
}

/// Fill the heap array `y[1..=2n-1]` (index 0 unused) from the leaves.
fn build_tree(leaves: &[Digest64]) -> Result<Vec<Digest64>, CommitmentError> {
    check_leaf_count(leaves.len())?;
    let n = leaves.len();
    let mut y = vec![Digest64([0u8; 64]); 2 * n];
    y[1..=n].copy_from_slice(leaves);
    for i in 1..n {
        y[n + i] = hash_pair(&y[2 * i - 1], &y[2 * i]);
    }
    Ok(y)
}

fn hash_pair(left: &Digest64, right: &Digest64) -> Digest64 {
    let mut input = [0u8; 2 * Digest64::LEN];
    input[..Digest64::LEN].copy_from_slice(left.as_bytes());
    input[Digest64::LEN..].copy_from_slice(right.as_bytes());
    combined_hash(&input)
}

/// Root of the complete binary tree over `leaves` (a leaf itself when
/// there is exactly one).
pub fn merkle_root(leaves: &[Digest64]) -> Result<Digest64, CommitmentError> {
    let y = build_tree(leaves)?;
    Ok(y[y.len() - 1])
}

/// A published commitment: the tree root over one record, labeled with the
/// record's position in its passport (0-based update index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commitment {
    pub root: Digest64,
    pub update_index: u64,
}

/// The prover-side leaf vector behind one commitment. Held privately: the
/// leaves are blinded cells, and the prover needs them to build proofs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafVector {
    pub update_index: u64,
    pub leaves: Vec<Digest64>,
}

impl LeafVector {
    pub fn commitment(&self) -> Result<Commitment, CommitmentError> {
        Ok(Commitment {
            root: merkle_root(&self.leaves)?,
            update_index: self.update_index,
        })
    }

    pub fn prove(&self, open_positions: &[u32]) -> Result<InclusionProof, CommitmentError> {
        prove_inclusion(&self.leaves, open_positions)
    }
}

/// Build the sixteen blinded leaves for one record: the eleven encoded
/// field cells in canonical order, then five empty padding cells, every
/// cell blinded under the per-(update, position) secret. The constant
/// shape keeps the tree from revealing which optional fields are set.
pub fn row_leaves(
    key: &PrfKey,
    update_index: u64,
    row: &PassportRow,
    profile: &CountryProfile,
) -> Result<LeafVector, EncodeError> {
    let cells = encode_row(row, profile)?;
    let mut leaves = Vec::with_capacity(PASSPORT_LEAF_COUNT);
    for (i, cell) in cells.iter().enumerate() {
        leaves.push(hide(key, update_index, i as u32 + 1, cell));
    }
    for position in FIELD_CELL_COUNT as u32 + 1..=PASSPORT_LEAF_COUNT as u32 {
        leaves.push(hide(key, update_index, position, &[]));
    }
    Ok(LeafVector {
        update_index,
        leaves,
    })
}

/// Commit to one record. The companion [`row_leaves`] keeps the material a
/// prover needs to answer later challenges.
pub fn commit(
    key: &PrfKey,
    update_index: u64,
    row: &PassportRow,
    profile: &CountryProfile,
) -> Result<Commitment, EncodeError> {
    let leaves = row_leaves(key, update_index, row, profile)?;
    Ok(leaves
        .commitment()
        .expect("sixteen leaves always form a tree"))
}

/// Openings for the requested record fields, ready to ship alongside an
/// inclusion proof.
pub fn open_cells(
    key: &PrfKey,
    update_index: u64,
    row: &PassportRow,
    profile: &CountryProfile,
    fields: &[Field],
) -> Result<Vec<CellOpening>, EncodeError> {
    fields
        .iter()
        .map(|&field| {
            let value = crate::passport::encode_field(row, field, profile)?;
            Ok(CellOpening {
                field_index: field.index(),
                sigma: prf_sigma(key, update_index, field.index()),
                value,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Selective openings
// ---------------------------------------------------------------------------

/// A revealed cell: its 1-based leaf position, the cell value, and the
/// blinding secret. For passport trees the position is the field index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellOpening {
    pub field_index: u32,
    #[serde(with = "hex_bytes")]
    pub value: Vec<u8>,
    pub sigma: Digest64,
}

/// One off-path digest of a multi-proof.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofEntry {
    pub position: u32,
    pub digest: Digest64,
}

/// Multi-proof for a set of openings: the sibling digests of the combined
/// root path, sorted by heap position. Opening every leaf needs no
/// entries at all. `tree_size` is the leaf count of the committed tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionProof {
    pub tree_size: u32,
    pub entries: Vec<ProofEntry>,
}

fn parent(position: usize, n: usize) -> usize {
    n + position.div_ceil(2)
}

fn sibling(position: usize) -> usize {
    if position % 2 == 1 {
        position + 1
    } else {
        position - 1
    }
}

/// Positions on the paths from the opened leaves to the root, including
/// the opened leaves themselves.
fn path_closure(opened: &BTreeSet<usize>, n: usize) -> BTreeSet<usize> {
    let root = 2 * n - 1;
    let mut closure = BTreeSet::new();
    for &leaf in opened {
        let mut position = leaf;
        while closure.insert(position) && position != root {
            position = parent(position, n);
        }
    }
    closure
}

/// Heap positions a verifier of `opened` needs supplied: siblings of the
/// path closure that are not themselves on a path.
fn required_proof_positions(opened: &BTreeSet<usize>, n: usize) -> BTreeSet<usize> {
    let root = 2 * n - 1;
    let closure = path_closure(opened, n);
    closure
        .iter()
        .filter(|&&position| position != root)
        .map(|&position| sibling(position))
        .filter(|position| !closure.contains(position))
        .collect()
}

/// Build the multi-proof that lets a holder of the root check openings at
/// the given 1-based leaf positions (duplicates are tolerated).
pub fn prove_inclusion(
    leaves: &[Digest64],
    open_positions: &[u32],
) -> Result<InclusionProof, CommitmentError> {
    let y = build_tree(leaves)?;
    let n = leaves.len();
    let mut opened = BTreeSet::new();
    for &position in open_positions {
        if position == 0 || position as usize > n {
            return Err(CommitmentError::PositionOutOfRange {
                position,
                leaf_count: n as u32,
            });
        }
        opened.insert(position as usize);
    }
    if opened.is_empty() {
        return Err(CommitmentError::EmptyOpeningSet);
    }
    let entries = required_proof_positions(&opened, n)
        .into_iter()
        .map(|position| ProofEntry {
            position: position as u32,
            digest: y[position],
        })
        .collect();
    Ok(InclusionProof {
        tree_size: n as u32,
        entries,
    })
}

/// Check openings against a commitment root. Returns `Ok(false)` when the
/// root cannot be reconstructed or does not match; structural defects
/// (bad positions, duplicate or conflicting entries) are errors.
pub fn verify_inclusion(
    root: &Digest64,
    openings: &[CellOpening],
    proof: &InclusionProof,
) -> Result<bool, CommitmentError> {
    let n = proof.tree_size as usize;
    check_leaf_count(n)?;
    if openings.is_empty() {
        return Err(CommitmentError::EmptyOpeningSet);
    }

    // Seed the known digests from the openings...
    let mut known: BTreeMap<usize, Digest64> = BTreeMap::new();
    for opening in openings {
        let position = opening.field_index as usize;
        if position == 0 || position > n {
            return Err(CommitmentError::PositionOutOfRange {
                position: opening.field_index,
                leaf_count: n as u32,
            });
        }
        let leaf = hide_with_sigma(&opening.sigma, &opening.value);
        if let Some(existing) = known.insert(position, leaf) {
            if existing != leaf {
                return Err(CommitmentError::MalformedProof(format!(
                    "conflicting openings for position {position}"
                )));
            }
        }
    }

    // ...then from the supplied proof entries.
    for entry in &proof.entries {
        let position = entry.position as usize;
        if position == 0 || position >= 2 * n {
            return Err(CommitmentError::PositionOutOfRange {
                position: entry.position,
                leaf_count: n as u32,
            });
        }
        if known.insert(position, entry.digest).is_some() {
            return Err(CommitmentError::MalformedProof(format!(
                "duplicate digest supplied for position {position}"
            )));
        }
    }

    // Work upward; a supplied digest at a computable position must agree.
    for i in 1..n {
        let position = n + i;
        let (left, right) = (known.get(&(2 * i - 1)), known.get(&(2 * i)));
        if let (Some(left), Some(right)) = (left, right) {
            let computed = hash_pair(left, right);
            match known.get(&position) {
                Some(supplied) if *supplied != computed => return Ok(false),
                _ => {
                    known.insert(position, computed);
                }
            }
        }
    }

    Ok(known.get(&(2 * n - 1)) == Some(root))
}

// ---------------------------------------------------------------------------

/// Serde adapter storing byte strings as lowercase hex.
pub(crate) mod hex_bytes {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(deserializer)?;
        hex::decode(&s).map_err(D::Error::custom)
    }
}
