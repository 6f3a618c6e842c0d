//! Append-only party ledgers: one structured JSON record per line.
//!
//! A ledger is the audit trail each party keeps of everything it sent,
//! received, verified, learned, and decided. Records never carry the
//! counterpart's hidden data — a receiver's ledger names commitments by
//! id and root only, until openings reveal specific cells. Serialization
//! is deterministic (fixed field order, sorted maps) so two runs of the
//! same scenario produce byte-identical files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::Digest64;
use crate::passport::{Field, Side};
use crate::proof::ProofMode;
use crate::rules::DeducedStatement;

/// One ledger line. `kind` tags the record in the serialized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LedgerRecord {
    /// Own update committed and sent. The only record kind that names a
    /// warhead: it describes the sender's own data.
    Commit {
        commitment_id: u64,
        warhead_id: String,
        update_index: u64,
        root: Digest64,
        mode: ProofMode,
    },
    /// Peer commitment received and its proof checked.
    Verify {
        commitment_id: u64,
        sender: Side,
        update_index: u64,
        root: Digest64,
        mode: ProofMode,
        result: bool,
    },
    /// Challenge issued against a peer commitment.
    Challenge {
        target: u64,
        columns: Vec<Field>,
    },
    /// Challenge response: `Sent` when answering, `Received` when the
    /// answer came back and its openings were checked.
    Response {
        target: u64,
        direction: Direction,
        columns: Vec<Field>,
        valid: bool,
        /// Decoded cell values by field name, present on received
        /// responses that verified.
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        values: BTreeMap<String, String>,
        /// Rule-licensed deductions about the neighboring hidden row.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        facts: Vec<DeducedStatement>,
    },
    /// An opened previous-hash cell matched a stored root: the newer
    /// commitment `from` chains to the older `to`.
    Link {
        from: u64,
        to: u64,
    },
    /// Peer declared an exception on a commitment; openings checked.
    Exception {
        commitment_id: u64,
        sender: Side,
        valid: bool,
        reason: String,
    },
    /// Scripted adjudication of a received exception.
    Decision {
        commitment_id: u64,
        outcome: DecisionOutcome,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionOutcome {
    Accept,
    Escalate,
}

impl DecisionOutcome {
    pub fn name(self) -> &'static str {
        match self {
            DecisionOutcome::Accept => "accept",
            DecisionOutcome::Escalate => "escalate",
        }
    }
}

/// A party's append-only record sequence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ledger {
    records: Vec<LedgerRecord>,
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("transcript corrupt at byte offset {offset}: {reason}")]
    Corrupt { offset: usize, reason: String },
    #[error("cannot read transcript: {0}")]
    Io(#[from] std::io::Error),
}

impl Ledger {
    pub fn append(&mut self, record: LedgerRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[LedgerRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// One JSON object per line, newline-terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("ledger records serialize"));
            out.push('\n');
        }
        out
    }

    /// Parse a JSON-lines transcript. A malformed line reports the byte
    /// offset where that line starts.
    pub fn from_jsonl(text: &str) -> Result<Ledger, TranscriptError> {
        let mut records = Vec::new();
        let mut offset = 0usize;
        for line in text.split_inclusive('\n') {
            let body = line.trim_end_matches('\n').trim_end_matches('\r');
            if !body.trim().is_empty() {
                let record: LedgerRecord =
                    serde_json::from_str(body).map_err(|e| TranscriptError::Corrupt {
                        offset,
                        reason: e.to_string(),
                    })?;
                records.push(record);
            }
            offset += line.len();
        }
        // A nonempty transcript must end in a newline: a missing
        // terminator means the final record was cut off mid-write.
        if !text.is_empty() && !text.ends_with('\n') {
            return Err(TranscriptError::Corrupt {
                offset: text.rfind('\n').map_or(0, |p| p + 1),
                reason: "final line is not newline-terminated; file looks truncated".into(),
            });
        }
        Ok(Ledger { records })
    }
}
