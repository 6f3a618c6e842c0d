//! Two-party exchange state machines.
//!
//! Each party runs a [`PartyState`]: it emits commitment-chained passport
//! updates with attested rule receipts, verifies what the counterpart
//! sends, answers cell challenges against its own hidden rows, and checks
//! the openings that come back. Every consequential action lands in the
//! party's [`Ledger`].
//!
//! Delivery is at-least-once: every non-ack message is acked, senders
//! retransmit until acked, and receivers deduplicate on (sender, sequence
//! number), re-acking duplicates without reprocessing them. The handlers
//! are therefore idempotent — duplicated or shuffled deliveries change
//! the ledger not at all, and lost copies only delay it.
//!
//! What a receiver learns is deliberately narrow. A received commitment
//! contributes an id, a root, an update index, and a proof-check verdict.
//! Cell values appear only when the counterpart answers a challenge, and
//! chain edges are recorded only when an opened previous-hash cell
//! matches a root already on file — never inferred from timing, ordering,
//! or the statement metadata that rides along with a proof.

pub mod ledger;
pub mod simulation;
pub mod transport;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commitment::{
    commit, open_cells, row_leaves, verify_inclusion, CellOpening, CommitmentError,
    InclusionProof,
};
use crate::hash::{Digest64, PrfKey};
use crate::passport::{
    decode_field, CountryProfile, EncodeError, Field, FieldValue, Passport, PassportRow, Side,
};
use crate::proof::{
    prove, required_exception_openings, ruleset_id, verify, ProofMode, ProofObject, ProveError,
    SessionParams, Statement, Witness,
};
use crate::rules::{infer_adjacent, DeducedStatement, RuleCatalog};

pub use ledger::{DecisionOutcome, Direction, Ledger, LedgerRecord, TranscriptError};
pub use simulation::{run_scenario, Scenario, ScenarioError, TranscriptBundle};
pub use transport::{Envelope, FaultPlan, Pipe};

// ---------------------------------------------------------------------------
// Wire messages
// ---------------------------------------------------------------------------

/// Commitment metadata as published to the counterpart: a per-sender
/// monotone id, the update's position in its (unnamed) chain, and the
/// root. Deliberately no warhead id and no link to prior commitments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentRecord {
    pub commitment_id: u64,
    pub update_index: u64,
    pub root: Digest64,
}

/// A published update: the record, the claim made about it, and the
/// attested receipt for that claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentMsg {
    pub record: CommitmentRecord,
    pub statement: Statement,
    pub proof: ProofObject,
}

/// Mandatory disclosure accompanying an exception-mode update: openings
/// of the exception flag and reason cells, with their inclusion proof.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionMsg {
    pub commitment_id: u64,
    pub openings: Vec<CellOpening>,
    pub inclusion: InclusionProof,
}

/// Demand to open the named columns of a received commitment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    pub target: u64,
    pub columns: Vec<Field>,
}

/// Answer to a [`Challenge`]: the requested cell openings and one
/// multi-proof placing them under the committed root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeResponse {
    pub target: u64,
    pub openings: Vec<CellOpening>,
    pub inclusion: InclusionProof,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body", rename_all = "snake_case")]
pub enum MessageKind {
    Commitment(CommitmentMsg),
    Exception(ExceptionMsg),
    Challenge(Challenge),
    Response(ChallengeResponse),
    Ack { of: u64 },
}

/// One protocol message. `sequence_no` is per-sender monotone and is the
/// deduplication and acknowledgement handle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub sender: Side,
    pub sequence_no: u64,
    pub kind: MessageKind,
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("parties disagree on the rule catalog or profiles")]
    RulesetMismatch,
    #[error("challenge at step {step} falls outside the negotiated schedule")]
    ScheduleViolation { step: u64 },
    #[error("parties hold different session parameters")]
    SessionMismatch,
    #[error("both parties claim the same side")]
    SideConflict,
    #[error("initial exchange: counterpart rejected commitment {commitment_id}")]
    SetupVerifyFailure { commitment_id: u64 },
    #[error("no commitment with id {commitment_id} on file")]
    UnknownTarget { commitment_id: u64 },
    #[error("a challenge must name at least one column")]
    EmptyColumns,
    #[error("update for {warhead_id} does not link to the passport's latest commitment")]
    ChainMismatch { warhead_id: String },
    #[error("message {sequence_no} unacknowledged after {attempts} sends")]
    Undeliverable { sequence_no: u64, attempts: u32 },
    #[error(transparent)]
    Prove(#[from] ProveError),
    #[error("own row does not encode: {0}")]
    Encode(#[from] EncodeError),
    #[error("own commitment tree is malformed: {0}")]
    Tree(#[from] CommitmentError),
}

// ---------------------------------------------------------------------------
// Party state
// ---------------------------------------------------------------------------

/// The negotiated challenge cadence: challenges are permitted on steps
/// that are multiples of `every_steps`, opening at most `max_columns`
/// cells each. With `strict` off the schedule is advisory only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChallengeSchedule {
    pub every_steps: u64,
    pub max_columns: usize,
    pub strict: bool,
}

impl Default for ChallengeSchedule {
    fn default() -> Self {
        ChallengeSchedule {
            every_steps: 1,
            max_columns: Field::ALL.len(),
            strict: false,
        }
    }
}

impl ChallengeSchedule {
    fn permits(&self, step: u64, column_count: usize) -> bool {
        if !self.strict {
            return true;
        }
        let on_cadence = self.every_steps <= 1 || step % self.every_steps == 0;
        on_cadence && column_count <= self.max_columns
    }
}

/// Everything a party needs to join a session.
#[derive(Clone)]
pub struct PartyConfig {
    pub side: Side,
    pub profile: CountryProfile,
    pub peer_profile: CountryProfile,
    pub catalog: RuleCatalog,
    pub prf_key: PrfKey,
    pub session: SessionParams,
    pub schedule: ChallengeSchedule,
}

/// A declared holding exchanged at setup, before the session proper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialPassport {
    pub owner: Side,
    pub warhead_id: String,
    pub rows: Vec<PassportRow>,
}

#[derive(Debug, Clone)]
struct OwnCommitment {
    warhead_id: String,
    update_index: u64,
}

#[derive(Debug, Clone)]
struct ReceivedCommitment {
    record: CommitmentRecord,
    statement: Statement,
    verified: bool,
}

#[derive(Debug, Clone)]
struct Unacked {
    message: Message,
    last_sent_step: u64,
    attempts: u32,
}

/// One side of the exchange. Drive it with [`PartyState::emit_update`],
/// [`PartyState::issue_challenge`], and [`PartyState::handle_message`];
/// read the outcome from its ledger.
#[derive(Debug)]
pub struct PartyState {
    pub side: Side,
    profile: CountryProfile,
    peer_profile: CountryProfile,
    catalog: RuleCatalog,
    prf_key: PrfKey,
    session: SessionParams,
    schedule: ChallengeSchedule,
    own_ruleset: Digest64,
    peer_ruleset: Digest64,
    ledger: Ledger,
    /// Own plaintext store: full rows per warhead.
    passports: BTreeMap<String, Passport>,
    latest_roots: BTreeMap<String, Digest64>,
    own_commitments: BTreeMap<u64, OwnCommitment>,
    next_commitment_id: u64,
    next_sequence_no: u64,
    /// Counterpart commitments by id — roots and verdicts, no plaintext.
    received: BTreeMap<u64, ReceivedCommitment>,
    processed: BTreeSet<(Side, u64)>,
    unacked: BTreeMap<u64, Unacked>,
    /// Exception messages that arrived before their commitment did.
    pending_exceptions: Vec<ExceptionMsg>,
    /// Challenges awaiting answers, by target: the column sets asked for.
    outstanding: BTreeMap<u64, Vec<Vec<Field>>>,
    /// Scripted adjudications for expected exceptions, by commitment id.
    decisions: BTreeMap<u64, DecisionOutcome>,
    links: Vec<(u64, u64)>,
    revealed: BTreeMap<u64, Vec<(Field, FieldValue)>>,
}

impl PartyState {
    fn new(config: PartyConfig) -> PartyState {
        let own_ruleset = ruleset_id(&config.catalog, &config.profile);
        let peer_ruleset = ruleset_id(&config.catalog, &config.peer_profile);
        PartyState {
            side: config.side,
            profile: config.profile,
            peer_profile: config.peer_profile,
            catalog: config.catalog,
            prf_key: config.prf_key,
            session: config.session,
            schedule: config.schedule,
            own_ruleset,
            peer_ruleset,
            ledger: Ledger::default(),
            passports: BTreeMap::new(),
            latest_roots: BTreeMap::new(),
            own_commitments: BTreeMap::new(),
            next_commitment_id: 1,
            next_sequence_no: 1,
            received: BTreeMap::new(),
            processed: BTreeSet::new(),
            unacked: BTreeMap::new(),
            pending_exceptions: Vec::new(),
            outstanding: BTreeMap::new(),
            decisions: BTreeMap::new(),
            links: Vec::new(),
            revealed: BTreeMap::new(),
        }
    }

    // -- read-side accessors ------------------------------------------------

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn into_ledger(self) -> Ledger {
        self.ledger
    }

    /// Root of the latest commitment for one of this party's passports.
    pub fn latest_root(&self, warhead_id: &str) -> Option<Digest64> {
        self.latest_roots.get(warhead_id).copied()
    }

    pub fn passport(&self, warhead_id: &str) -> Option<&Passport> {
        self.passports.get(warhead_id)
    }

    /// Proof-check verdict for a received commitment, if one arrived.
    pub fn commitment_verified(&self, commitment_id: u64) -> Option<bool> {
        self.received.get(&commitment_id).map(|rc| rc.verified)
    }

    /// Chain edges established by opened previous-hash cells, as
    /// (newer commitment id, older commitment id) pairs.
    pub fn links(&self) -> &[(u64, u64)] {
        &self.links
    }

    /// Cells the counterpart has opened for a commitment, decoded.
    pub fn revealed(&self, commitment_id: u64) -> Option<&[(Field, FieldValue)]> {
        self.revealed.get(&commitment_id).map(|v| v.as_slice())
    }

    /// True when nothing is awaiting acknowledgement, retry, or an answer.
    pub fn is_settled(&self) -> bool {
        self.unacked.is_empty()
            && self.pending_exceptions.is_empty()
            && self.outstanding.values().all(|queue| queue.is_empty())
    }

    /// Script the adjudication to record once the counterpart's
    /// exception for `commitment_id` arrives and checks out.
    pub fn register_decision(&mut self, commitment_id: u64, outcome: DecisionOutcome) {
        self.decisions.insert(commitment_id, outcome);
    }

    // -- sending ------------------------------------------------------------

    fn post(&mut self, kind: MessageKind, now_step: u64) -> Message {
        let message = Message {
            sender: self.side,
            sequence_no: self.next_sequence_no,
            kind,
        };
        self.next_sequence_no += 1;
        self.unacked.insert(
            message.sequence_no,
            Unacked {
                message: message.clone(),
                last_sent_step: now_step,
                attempts: 1,
            },
        );
        message
    }

    /// Acks are fire-and-forget: never retransmitted, never acked. A lost
    /// ack makes the peer retransmit the original, which is re-acked.
    fn ack(&mut self, of: u64) -> Message {
        let message = Message {
            sender: self.side,
            sequence_no: self.next_sequence_no,
            kind: MessageKind::Ack { of },
        };
        self.next_sequence_no += 1;
        message
    }

    /// Commit the next row of `warhead_id`'s passport, prove it, and
    /// return the messages to send: the commitment, plus the mandatory
    /// disclosure when the row declares an exception.
    ///
    /// `row.previous_hash` must equal the passport's latest root (absent
    /// for a first row); the update is refused otherwise, as it would
    /// break the chain the next challenge could expose.
    pub fn emit_update(
        &mut self,
        warhead_id: &str,
        row: PassportRow,
        now_step: u64,
    ) -> Result<(CommitmentRecord, Vec<Message>), ProtocolError> {
        let update_index = self
            .passports
            .get(warhead_id)
            .map_or(0, |p| p.rows.len() as u64);
        let prev_root = self.latest_root(warhead_id);
        if row.previous_hash != prev_root {
            return Err(ProtocolError::ChainMismatch {
                warhead_id: warhead_id.to_string(),
            });
        }

        let commitment = commit(&self.prf_key, update_index, &row, &self.profile)?;
        let mode = if row.exception {
            ProofMode::Exception
        } else {
            ProofMode::Normal
        };
        let statement = Statement {
            ruleset_id: self.own_ruleset,
            prev_commitment: prev_root,
            new_commitment: commitment.root,
            mode,
        };
        let witness = Witness {
            prev_row: self
                .passports
                .get(warhead_id)
                .and_then(|p| p.rows.last().cloned()),
            new_row: row.clone(),
            key: self.prf_key.clone(),
            update_index,
        };
        let proof = prove(
            &statement,
            &witness,
            &self.session,
            &self.catalog,
            &self.profile,
        )?;

        let commitment_id = self.next_commitment_id;
        self.next_commitment_id += 1;
        let record = CommitmentRecord {
            commitment_id,
            update_index,
            root: commitment.root,
        };
        self.own_commitments.insert(
            commitment_id,
            OwnCommitment {
                warhead_id: warhead_id.to_string(),
                update_index,
            },
        );
        self.latest_roots
            .insert(warhead_id.to_string(), commitment.root);
        self.passports
            .entry(warhead_id.to_string())
            .or_insert_with(|| Passport {
                warhead_id: warhead_id.to_string(),
                rows: Vec::new(),
            })
            .rows
            .push(row.clone());
        self.ledger.append(LedgerRecord::Commit {
            commitment_id,
            warhead_id: warhead_id.to_string(),
            update_index,
            root: commitment.root,
            mode,
        });

        let mut messages = vec![self.post(
            MessageKind::Commitment(CommitmentMsg {
                record: record.clone(),
                statement: statement.clone(),
                proof,
            }),
            now_step,
        )];
        if mode == ProofMode::Exception {
            let positions: Vec<u32> = required_exception_openings(&statement)
                .expect("statement mode is exception")
                .into_iter()
                .collect();
            let fields: Vec<Field> = positions
                .iter()
                .map(|&p| Field::from_index(p).expect("mandatory openings are field cells"))
                .collect();
            let openings = open_cells(&self.prf_key, update_index, &row, &self.profile, &fields)?;
            let inclusion =
                row_leaves(&self.prf_key, update_index, &row, &self.profile)?.prove(&positions)?;
            messages.push(self.post(
                MessageKind::Exception(ExceptionMsg {
                    commitment_id,
                    openings,
                    inclusion,
                }),
                now_step,
            ));
        }
        Ok((record, messages))
    }

    /// Demand openings of `columns` on a received commitment.
    pub fn issue_challenge(
        &mut self,
        target: u64,
        columns: &[Field],
        now_step: u64,
    ) -> Result<Message, ProtocolError> {
        if columns.is_empty() {
            return Err(ProtocolError::EmptyColumns);
        }
        if !self.received.contains_key(&target) {
            return Err(ProtocolError::UnknownTarget {
                commitment_id: target,
            });
        }
        if !self.schedule.permits(now_step, columns.len()) {
            return Err(ProtocolError::ScheduleViolation { step: now_step });
        }
        let mut columns: Vec<Field> = columns.to_vec();
        columns.sort_by_key(|f| f.index());
        columns.dedup();
        self.outstanding
            .entry(target)
            .or_default()
            .push(columns.clone());
        self.ledger.append(LedgerRecord::Challenge {
            target,
            columns: columns.clone(),
        });
        Ok(self.post(MessageKind::Challenge(Challenge { target, columns }), now_step))
    }

    /// Messages overdue for retransmission. Errors once any message has
    /// exhausted `max_attempts` sends without an ack.
    pub fn due_retransmissions(
        &mut self,
        now_step: u64,
        ack_timeout: u64,
        max_attempts: u32,
    ) -> Result<Vec<Message>, ProtocolError> {
        let mut due = Vec::new();
        for pending in self.unacked.values_mut() {
            if now_step.saturating_sub(pending.last_sent_step) >= ack_timeout {
                if pending.attempts >= max_attempts {
                    return Err(ProtocolError::Undeliverable {
                        sequence_no: pending.message.sequence_no,
                        attempts: pending.attempts,
                    });
                }
                pending.attempts += 1;
                pending.last_sent_step = now_step;
                due.push(pending.message.clone());
            }
        }
        Ok(due)
    }

    // -- receiving ----------------------------------------------------------

    /// Process one arrival and return the messages to send back (an ack,
    /// plus a challenge's answer). Duplicates are re-acked, nothing more.
    pub fn handle_message(
        &mut self,
        message: &Message,
        now_step: u64,
    ) -> Result<Vec<Message>, ProtocolError> {
        if let MessageKind::Ack { of } = &message.kind {
            self.unacked.remove(of);
            return Ok(Vec::new());
        }
        let tag = (message.sender, message.sequence_no);
        if self.processed.contains(&tag) {
            return Ok(vec![self.ack(message.sequence_no)]);
        }
        self.processed.insert(tag);

        let mut replies = vec![self.ack(message.sequence_no)];
        match &message.kind {
            MessageKind::Commitment(msg) => self.receive_commitment(message.sender, msg),
            MessageKind::Exception(msg) => self.receive_exception(message.sender, msg.clone()),
            MessageKind::Challenge(challenge) => {
                replies.push(self.answer_challenge(challenge, now_step)?);
            }
            MessageKind::Response(response) => self.receive_response(response),
            MessageKind::Ack { .. } => unreachable!("acks returned above"),
        }
        Ok(replies)
    }

    fn receive_commitment(&mut self, sender: Side, msg: &CommitmentMsg) {
        // First record for an id wins; a replayed id changes nothing.
        if self.received.contains_key(&msg.record.commitment_id) {
            return;
        }
        let consistent = msg.statement.ruleset_id == self.peer_ruleset
            && msg.statement.new_commitment == msg.record.root;
        let verified = consistent && verify(&msg.proof, &msg.statement, &self.session);
        self.received.insert(
            msg.record.commitment_id,
            ReceivedCommitment {
                record: msg.record.clone(),
                statement: msg.statement.clone(),
                verified,
            },
        );
        self.ledger.append(LedgerRecord::Verify {
            commitment_id: msg.record.commitment_id,
            sender,
            update_index: msg.record.update_index,
            root: msg.record.root,
            mode: msg.statement.mode,
            result: verified,
        });

        // An exception disclosure may have arrived first; settle it now.
        let mut waiting = Vec::new();
        self.pending_exceptions.retain(|em| {
            if em.commitment_id == msg.record.commitment_id {
                waiting.push(em.clone());
                false
            } else {
                true
            }
        });
        for em in waiting {
            self.process_exception(sender, &em);
        }
    }

    fn receive_exception(&mut self, sender: Side, msg: ExceptionMsg) {
        if self.received.contains_key(&msg.commitment_id) {
            self.process_exception(sender, &msg);
        } else {
            self.pending_exceptions.push(msg);
        }
    }

    fn process_exception(&mut self, sender: Side, msg: &ExceptionMsg) {
        let entry = self
            .received
            .get(&msg.commitment_id)
            .expect("caller checked the commitment is on file");
        let required = required_exception_openings(&entry.statement).ok();
        let opened: BTreeSet<u32> = msg.openings.iter().map(|o| o.field_index).collect();
        let mut reason = String::new();
        let valid = match required {
            Some(required) if opened == required && opened.len() == msg.openings.len() => {
                let proven = verify_inclusion(&entry.record.root, &msg.openings, &msg.inclusion)
                    .unwrap_or(false);
                let mut flagged = false;
                for opening in &msg.openings {
                    let field = Field::from_index(opening.field_index)
                        .expect("required openings are field cells");
                    match decode_field(field, &opening.value, &self.peer_profile) {
                        Ok(FieldValue::Flag(f)) if field == Field::Exception => flagged = f,
                        Ok(FieldValue::Text(t)) if field == Field::ExceptionReason => reason = t,
                        _ => {}
                    }
                }
                proven && flagged && !reason.is_empty()
            }
            _ => false,
        };
        self.ledger.append(LedgerRecord::Exception {
            commitment_id: msg.commitment_id,
            sender,
            valid,
            reason,
        });
        if let Some(outcome) = self.decisions.remove(&msg.commitment_id) {
            self.ledger.append(LedgerRecord::Decision {
                commitment_id: msg.commitment_id,
                outcome,
            });
        }
    }

    fn answer_challenge(
        &mut self,
        challenge: &Challenge,
        now_step: u64,
    ) -> Result<Message, ProtocolError> {
        if challenge.columns.is_empty() {
            return Err(ProtocolError::EmptyColumns);
        }
        let own = self
            .own_commitments
            .get(&challenge.target)
            .ok_or(ProtocolError::UnknownTarget {
                commitment_id: challenge.target,
            })?
            .clone();
        let row = self.passports[&own.warhead_id].rows[own.update_index as usize].clone();
        let openings = open_cells(
            &self.prf_key,
            own.update_index,
            &row,
            &self.profile,
            &challenge.columns,
        )?;
        let positions: Vec<u32> = challenge.columns.iter().map(|f| f.index()).collect();
        let inclusion = row_leaves(&self.prf_key, own.update_index, &row, &self.profile)?
            .prove(&positions)?;
        self.ledger.append(LedgerRecord::Response {
            target: challenge.target,
            direction: Direction::Sent,
            columns: challenge.columns.clone(),
            valid: true,
            values: BTreeMap::new(),
            facts: Vec::new(),
        });
        Ok(self.post(
            MessageKind::Response(ChallengeResponse {
                target: challenge.target,
                openings,
                inclusion,
            }),
            now_step,
        ))
    }

    fn receive_response(&mut self, response: &ChallengeResponse) {
        // The opened columns, in opening order; None if any index is alien.
        let opened_fields: Option<Vec<Field>> = response
            .openings
            .iter()
            .map(|o| Field::from_index(o.field_index))
            .collect();
        let opened_set: BTreeSet<u32> = response.openings.iter().map(|o| o.field_index).collect();

        // Pair the answer with a challenge we actually issued: same
        // target, same column set. Unsolicited answers are invalid.
        let matched: Option<Vec<Field>> = match (&opened_fields, self.outstanding.get_mut(&response.target)) {
            (Some(_), Some(queue)) => {
                let position = queue.iter().position(|columns| {
                    columns.iter().map(|f| f.index()).collect::<BTreeSet<_>>() == opened_set
                        && columns.len() == response.openings.len()
                });
                position.map(|p| queue.remove(p))
            }
            _ => None,
        };

        let entry = self.received.get(&response.target);
        let mut valid = matched.is_some() && entry.is_some();
        if let (true, Some(entry)) = (valid, entry) {
            valid = verify_inclusion(&entry.record.root, &response.openings, &response.inclusion)
                .unwrap_or(false);
        }

        let mut values = BTreeMap::new();
        let mut decoded: Vec<(Field, FieldValue)> = Vec::new();
        if valid {
            for opening in &response.openings {
                let field =
                    Field::from_index(opening.field_index).expect("matched openings are fields");
                match decode_field(field, &opening.value, &self.peer_profile) {
                    Ok(value) => {
                        values.insert(field.name().to_string(), value.to_string());
                        decoded.push((field, value));
                    }
                    Err(_) => valid = false,
                }
            }
            if !valid {
                values.clear();
                decoded.clear();
            }
        }

        let mut facts: Vec<DeducedStatement> = Vec::new();
        let mut link: Option<(u64, u64)> = None;
        if valid {
            facts = infer_adjacent(&decoded, &self.peer_profile).statements;
            if let Some((_, FieldValue::Hash(Some(prev)))) =
                decoded.iter().find(|(f, _)| *f == Field::PreviousHash)
            {
                let older = self
                    .received
                    .iter()
                    .find(|(_, rc)| rc.record.root == *prev)
                    .map(|(&id, _)| id);
                if let Some(to) = older {
                    if !self.links.contains(&(response.target, to)) {
                        self.links.push((response.target, to));
                        link = Some((response.target, to));
                    }
                }
            }
            self.revealed
                .entry(response.target)
                .or_default()
                .extend(decoded.iter().cloned());
        }

        let columns = matched.unwrap_or_else(|| opened_fields.unwrap_or_default());
        self.ledger.append(LedgerRecord::Response {
            target: response.target,
            direction: Direction::Received,
            columns,
            valid,
            values,
            facts,
        });
        if let Some((from, to)) = link {
            self.ledger.append(LedgerRecord::Link { from, to });
        }
    }
}

// ---------------------------------------------------------------------------
// Session setup
// ---------------------------------------------------------------------------

/// Initialize both parties and exchange their declared initial holdings
/// over a direct, reliable channel.
///
/// Fails when the parties' rule catalogs or profile copies disagree (each
/// side fingerprints its own profile and the counterpart checks the
/// fingerprint it computes from its copy), when session parameters
/// differ, or when any initial commitment fails verification.
pub fn setup(
    first: PartyConfig,
    second: PartyConfig,
    initial: &[InitialPassport],
) -> Result<(PartyState, PartyState), ProtocolError> {
    if first.side != second.side.opposite() {
        return Err(ProtocolError::SideConflict);
    }
    if first.session != second.session {
        return Err(ProtocolError::SessionMismatch);
    }
    let rulesets_agree = ruleset_id(&first.catalog, &first.profile)
        == ruleset_id(&second.catalog, &second.peer_profile)
        && ruleset_id(&second.catalog, &second.profile)
            == ruleset_id(&first.catalog, &first.peer_profile);
    if !rulesets_agree {
        return Err(ProtocolError::RulesetMismatch);
    }

    let mut first = PartyState::new(first);
    let mut second = PartyState::new(second);
    for passport in initial {
        let (owner, receiver) = if passport.owner == first.side {
            (&mut first, &mut second)
        } else {
            (&mut second, &mut first)
        };
        for row in &passport.rows {
            let mut row = row.clone();
            row.previous_hash = owner.latest_root(&passport.warhead_id);
            let (record, messages) = owner.emit_update(&passport.warhead_id, row, 0)?;
            for message in messages {
                for reply in receiver.handle_message(&message, 0)? {
                    owner.handle_message(&reply, 0)?;
                }
            }
            if receiver.commitment_verified(record.commitment_id) != Some(true) {
                return Err(ProtocolError::SetupVerifyFailure {
                    commitment_id: record.commitment_id,
                });
            }
        }
    }
    Ok((first, second))
}
