//! Scripted end-to-end runs: a scenario file in, two ledgers out.
//!
//! The driver advances a step counter. Each step it retransmits overdue
//! messages, retries deferred challenges, applies the step's scripted
//! events, then delivers until the channel drains. Within a delivery
//! round each recipient sorts arrivals by (sender, sequence number)
//! before processing, and the state machines deduplicate, so runs under
//! duplication and reordering produce byte-identical ledgers to the
//! fault-free run; dropped copies are retransmitted on later steps. The
//! run ends when every event has fired and both parties are settled.
//!
//! Determinism: all randomness (channel faults) flows from one seeded
//! stream, party keys derive from scenario seeds, and events apply in
//! file order. Same scenario, same seed, same bytes.

use std::collections::BTreeMap;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::PrfKey;
use crate::passport::{CountryProfile, Field, PassportRow, Side};
use crate::proof::SessionParams;
use crate::rules::RuleCatalog;

use super::ledger::{DecisionOutcome, Direction, Ledger, LedgerRecord};
use super::transport::{FaultPlan, Pipe};
use super::{
    setup, ChallengeSchedule, InitialPassport, Message, PartyConfig, PartyState, ProtocolError,
};

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

/// A row as scripted: human-readable UTC timestamp, no chain pointer
/// (the driver links each update to the passport's latest commitment).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub time: String,
    pub location: String,
    pub status: String,
    #[serde(default)]
    pub secondary_component: String,
    #[serde(default)]
    pub llc1: String,
    #[serde(default)]
    pub llc2: String,
    pub operation: String,
    #[serde(default)]
    pub personnel: Vec<String>,
    #[serde(default)]
    pub exception: bool,
    #[serde(default)]
    pub exception_reason: String,
}

impl ScenarioRow {
    fn to_row(&self) -> Result<PassportRow, ScenarioError> {
        let time = chrono::DateTime::parse_from_rfc3339(&self.time)
            .map_err(|_| ScenarioError::BadTime(self.time.clone()))?
            .timestamp();
        Ok(PassportRow {
            time,
            location: self.location.clone(),
            status: self.status.clone(),
            secondary_component: self.secondary_component.clone(),
            llc1: self.llc1.clone(),
            llc2: self.llc2.clone(),
            operation: self.operation.clone(),
            personnel: self.personnel.clone(),
            exception: self.exception,
            exception_reason: self.exception_reason.clone(),
            previous_hash: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartySpec {
    /// Profile name, resolved against the loaded profile set.
    pub profile: String,
    /// Seed for this party's blinding key.
    pub prf_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parties {
    pub us: PartySpec,
    pub ru: PartySpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub crs_tag: String,
    /// Seed for the shared attestation key.
    pub attestation_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub owner: Side,
    pub warhead_id: String,
    pub rows: Vec<ScenarioRow>,
}

/// One scripted action. Events fire on their step, in file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub step: u64,
    pub party: Side,
    #[serde(flatten)]
    pub action: EventAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum EventAction {
    /// Append a row to one of the acting party's passports and publish
    /// the commitment. `decision` scripts how the counterpart will
    /// adjudicate the exception this update declares.
    Update {
        warhead_id: String,
        row: ScenarioRow,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decision: Option<DecisionOutcome>,
    },
    /// Challenge a received commitment to open the named columns.
    Challenge { target: u64, columns: Vec<Field> },
}

/// A complete scripted run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub scenario_id: String,
    pub description: String,
    pub parties: Parties,
    pub session: SessionSpec,
    #[serde(default)]
    pub initial_passports: Vec<InitialSpec>,
    pub events: Vec<Event>,
    /// Negotiated challenge cadence; absent means unconstrained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub challenge_schedule: Option<ChallengeSchedule>,
    #[serde(default)]
    pub fault_plan: FaultPlan,
    pub seed: u64,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario does not parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("scenario names profile {0:?} but it was not provided")]
    UnknownProfile(String),
    #[error("party {party:?} is configured with the {profile:?} profile, which belongs to the other side")]
    ProfileSideMismatch { party: Side, profile: String },
    #[error("timestamp {0:?} is not RFC 3339")]
    BadTime(String),
    #[error("channel failed to drain by step {step}")]
    Liveness { step: u64 },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

// ---------------------------------------------------------------------------
// Run output
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkEdge {
    pub from: u64,
    pub to: u64,
}

/// Per-party tallies, derived entirely from that party's ledger.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartySummary {
    pub commits: usize,
    pub verified_ok: usize,
    pub verified_fail: usize,
    pub challenges_issued: usize,
    pub responses_sent: usize,
    pub responses_received: usize,
    pub invalid_responses: usize,
    pub exceptions_reported: usize,
    pub invalid_exceptions: usize,
    pub links: Vec<LinkEdge>,
    pub decisions: Vec<(u64, DecisionOutcome)>,
}

impl PartySummary {
    fn from_ledger(ledger: &Ledger) -> PartySummary {
        let mut summary = PartySummary::default();
        for record in ledger.records() {
            match record {
                LedgerRecord::Commit { .. } => summary.commits += 1,
                LedgerRecord::Verify { result, .. } => {
                    if *result {
                        summary.verified_ok += 1;
                    } else {
                        summary.verified_fail += 1;
                    }
                }
                LedgerRecord::Challenge { .. } => summary.challenges_issued += 1,
                LedgerRecord::Response {
                    direction, valid, ..
                } => match direction {
                    Direction::Sent => summary.responses_sent += 1,
                    Direction::Received => {
                        summary.responses_received += 1;
                        if !valid {
                            summary.invalid_responses += 1;
                        }
                    }
                },
                LedgerRecord::Link { from, to } => summary.links.push(LinkEdge {
                    from: *from,
                    to: *to,
                }),
                LedgerRecord::Exception { valid, .. } => {
                    summary.exceptions_reported += 1;
                    if !valid {
                        summary.invalid_exceptions += 1;
                    }
                }
                LedgerRecord::Decision {
                    commitment_id,
                    outcome,
                } => summary.decisions.push((*commitment_id, *outcome)),
            }
        }
        summary
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario_id: String,
    pub steps: u64,
    pub us: PartySummary,
    pub ru: PartySummary,
    /// True when every proof verified, every response checked out, and
    /// every exception disclosure was well-formed.
    pub compliance_ok: bool,
}

/// Everything one run produces: both ledgers plus the summary.
#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptBundle {
    pub scenario_id: String,
    pub us: Ledger,
    pub ru: Ledger,
    pub summary: RunSummary,
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

fn key_from_seed(seed: u64) -> [u8; 32] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut key = [0u8; 32];
    rng.fill_bytes(&mut key);
    key
}

const ACK_TIMEOUT_STEPS: u64 = 2;
const MAX_SEND_ATTEMPTS: u32 = 100;
const MAX_ROUNDS_PER_STEP: u64 = 1000;
const MAX_DRAIN_STEPS: u64 = 1000;

struct Driver<'a> {
    us: PartyState,
    ru: PartyState,
    pipe: Pipe,
    faults: FaultPlan,
    rng: ChaCha8Rng,
    /// Challenges whose target has not arrived yet: retried each step.
    deferred: Vec<(Side, u64, Vec<Field>)>,
    events: &'a [Event],
}

impl Driver<'_> {
    fn party(&mut self, side: Side) -> &mut PartyState {
        match side {
            Side::Us => &mut self.us,
            Side::Ru => &mut self.ru,
        }
    }

    fn send_all(&mut self, from: Side, messages: Vec<Message>) {
        for message in messages {
            self.pipe.send(from.opposite(), message);
        }
    }

    fn apply_event(&mut self, event: &Event, step: u64) -> Result<(), ScenarioError> {
        match &event.action {
            EventAction::Update {
                warhead_id,
                row,
                decision,
            } => {
                let mut row = row.to_row()?;
                row.previous_hash = self.party(event.party).latest_root(warhead_id);
                let (record, messages) =
                    self.party(event.party)
                        .emit_update(warhead_id, row, step)?;
                if let Some(outcome) = decision {
                    self.party(event.party.opposite())
                        .register_decision(record.commitment_id, *outcome);
                }
                self.send_all(event.party, messages);
            }
            EventAction::Challenge { target, columns } => {
                match self.party(event.party).issue_challenge(*target, columns, step) {
                    Ok(message) => self.send_all(event.party, vec![message]),
                    // The target may still be in flight (lost copies are
                    // retransmitted on later steps): retry until it lands.
                    Err(ProtocolError::UnknownTarget { .. }) => {
                        self.deferred.push((event.party, *target, columns.clone()));
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
        Ok(())
    }

    fn retry_deferred(&mut self, step: u64) -> Result<(), ScenarioError> {
        let deferred = std::mem::take(&mut self.deferred);
        for (side, target, columns) in deferred {
            match self.party(side).issue_challenge(target, &columns, step) {
                Ok(message) => self.send_all(side, vec![message]),
                // Still waiting on the target, or waiting for the next
                // window the negotiated cadence permits.
                Err(
                    ProtocolError::UnknownTarget { .. }
                    | ProtocolError::ScheduleViolation { .. },
                ) => {
                    self.deferred.push((side, target, columns));
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }

    /// Deliver until the channel drains. Each recipient processes a
    /// round's arrivals in (sender, sequence) order, so duplication and
    /// shuffling inside a round cannot change processing order.
    fn deliver_to_quiescence(&mut self, step: u64) -> Result<(), ScenarioError> {
        let mut rounds = 0u64;
        while !self.pipe.is_idle() {
            rounds += 1;
            if rounds > MAX_ROUNDS_PER_STEP {
                return Err(ScenarioError::Liveness { step });
            }
            let arrivals = self.pipe.deliver_round(&self.faults, &mut self.rng);
            let mut inboxes: BTreeMap<&'static str, Vec<Message>> = BTreeMap::new();
            for envelope in arrivals {
                inboxes
                    .entry(envelope.to.name())
                    .or_default()
                    .push(envelope.message);
            }
            for side in [Side::Us, Side::Ru] {
                let Some(mut batch) = inboxes.remove(side.name()) else {
                    continue;
                };
                batch.sort_by_key(|m| (m.sender.name(), m.sequence_no));
                for message in batch {
                    let replies = self.party(side).handle_message(&message, step)?;
                    self.send_all(side, replies);
                }
            }
        }
        Ok(())
    }

    fn settled(&self) -> bool {
        self.pipe.is_idle()
            && self.us.is_settled()
            && self.ru.is_settled()
            && self.deferred.is_empty()
    }
}

/// Run a scenario to completion. `profiles` maps the names the scenario
/// uses to loaded profiles; `faults` overrides the scenario's fault plan
/// when given.
pub fn run_scenario(
    scenario: &Scenario,
    profiles: &BTreeMap<String, CountryProfile>,
    catalog: &RuleCatalog,
    faults: Option<FaultPlan>,
) -> Result<TranscriptBundle, ScenarioError> {
    let profile_for = |side: Side, spec: &PartySpec| -> Result<CountryProfile, ScenarioError> {
        let profile = profiles
            .get(&spec.profile)
            .ok_or_else(|| ScenarioError::UnknownProfile(spec.profile.clone()))?;
        if profile.side != side {
            return Err(ScenarioError::ProfileSideMismatch {
                party: side,
                profile: spec.profile.clone(),
            });
        }
        Ok(profile.clone())
    };
    let us_profile = profile_for(Side::Us, &scenario.parties.us)?;
    let ru_profile = profile_for(Side::Ru, &scenario.parties.ru)?;
    let session = SessionParams::transparent(
        &scenario.session.crs_tag,
        key_from_seed(scenario.session.attestation_seed),
    );
    let schedule = scenario.challenge_schedule.unwrap_or_default();
    let us_config = PartyConfig {
        side: Side::Us,
        profile: us_profile.clone(),
        peer_profile: ru_profile.clone(),
        catalog: catalog.clone(),
        prf_key: PrfKey::from_bytes(key_from_seed(scenario.parties.us.prf_seed)),
        session: session.clone(),
        schedule,
    };
    let ru_config = PartyConfig {
        side: Side::Ru,
        profile: ru_profile,
        peer_profile: us_profile,
        catalog: catalog.clone(),
        prf_key: PrfKey::from_bytes(key_from_seed(scenario.parties.ru.prf_seed)),
        session,
        schedule,
    };

    let initial: Vec<InitialPassport> = scenario
        .initial_passports
        .iter()
        .map(|spec| {
            Ok(InitialPassport {
                owner: spec.owner,
                warhead_id: spec.warhead_id.clone(),
                rows: spec
                    .rows
                    .iter()
                    .map(|r| r.to_row())
                    .collect::<Result<_, _>>()?,
            })
        })
        .collect::<Result<_, ScenarioError>>()?;
    let (us, ru) = setup(us_config, ru_config, &initial)?;

    let mut driver = Driver {
        us,
        ru,
        pipe: Pipe::default(),
        faults: faults.unwrap_or(scenario.fault_plan),
        rng: ChaCha8Rng::seed_from_u64(scenario.seed),
        deferred: Vec::new(),
        events: &scenario.events,
    };

    let last_event_step = driver.events.iter().map(|e| e.step).max().unwrap_or(0);
    let mut step = 1u64;
    loop {
        for side in [Side::Us, Side::Ru] {
            let due = driver.party(side).due_retransmissions(
                step,
                ACK_TIMEOUT_STEPS,
                MAX_SEND_ATTEMPTS,
            )?;
            driver.send_all(side, due);
        }
        driver.retry_deferred(step)?;
        for i in 0..driver.events.len() {
            if driver.events[i].step == step {
                let event = driver.events[i].clone();
                driver.apply_event(&event, step)?;
            }
        }
        driver.deliver_to_quiescence(step)?;

        if step >= last_event_step && driver.settled() {
            break;
        }
        if step > last_event_step + MAX_DRAIN_STEPS {
            return Err(ScenarioError::Liveness { step });
        }
        step += 1;
    }

    let us_summary = PartySummary::from_ledger(driver.us.ledger());
    let ru_summary = PartySummary::from_ledger(driver.ru.ledger());
    let compliance_ok = us_summary.verified_fail == 0
        && ru_summary.verified_fail == 0
        && us_summary.invalid_responses == 0
        && ru_summary.invalid_responses == 0
        && us_summary.invalid_exceptions == 0
        && ru_summary.invalid_exceptions == 0;
    let summary = RunSummary {
        scenario_id: scenario.scenario_id.clone(),
        steps: step,
        us: us_summary,
        ru: ru_summary,
        compliance_ok,
    };
    Ok(TranscriptBundle {
        scenario_id: scenario.scenario_id.clone(),
        us: driver.us.into_ledger(),
        ru: driver.ru.into_ledger(),
        summary,
    })
}
