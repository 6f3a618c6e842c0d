//! Treaty-rule evaluation over row transitions and whole passports.
//!
//! The engine walks the rule catalog's executable entries for the
//! profile's side and dispatches each to a built-in check. Violations are
//! returned as values (never errors) so callers can aggregate, ledger, or
//! refuse to prove over them. Evaluation is pure: identical inputs give
//! an identical, rule-id-ordered violation list.
//!
//! Enumeration checks run independently of the rest: a row with an
//! unknown status/location/operation gets the membership violation, and
//! checks that would need the unknown code's attributes skip rather than
//! cascade.

pub mod catalog;
pub mod infer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::{CatalogError, Dispatch, RuleCatalog, RuleEntry, RuleKind, Severity};
pub use infer::{infer_adjacent, DeducedFacts, DeducedStatement, Relation, Target};

use crate::passport::{
    encode_field, CountryProfile, Destination, EncodeError, Field, OpCategory, OpTag, Passport,
    PassportRow, TransportMode,
};

/// One rule failure. `field_refs` names the involved record fields with
/// their canonical (serde) names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule_id: String,
    pub severity: Severity,
    pub message: String,
    pub field_refs: Vec<String>,
}

fn violation(rule_id: &str, severity: Severity, message: String, fields: &[Field]) -> Violation {
    Violation {
        rule_id: rule_id.to_string(),
        severity,
        message,
        field_refs: fields.iter().map(|f| f.name().to_string()).collect(),
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("no transport window is configured for {origin}->{destination} by {mode:?}")]
    UnknownRoute {
        origin: String,
        destination: String,
        mode: TransportMode,
    },
}

// ---------------------------------------------------------------------------
// Pairwise validation
// ---------------------------------------------------------------------------

/// Evaluate every executable rule of the profile's side over a transition.
/// `prev` is absent at chain start, which skips the rules that need a
/// predecessor. The returned list is sorted by rule id, then message.
pub fn validate_transition(
    catalog: &RuleCatalog,
    profile: &CountryProfile,
    prev: Option<&PassportRow>,
    next: &PassportRow,
) -> Vec<Violation> {
    let ctx = Checker {
        profile,
        prev,
        next,
    };
    let mut out: Vec<Violation> = Vec::new();
    for entry in catalog.checks_for(profile.side) {
        let severity = entry.severity.expect("check entries carry a severity");
        let dispatch = entry.dispatch.expect("check entries carry a dispatch");
        ctx.run(dispatch, &entry.rule_id, severity, &mut out);
    }
    out.sort_by(|a, b| (&a.rule_id, &a.message).cmp(&(&b.rule_id, &b.message)));
    out
}

struct Checker<'a> {
    profile: &'a CountryProfile,
    prev: Option<&'a PassportRow>,
    next: &'a PassportRow,
}

impl Checker<'_> {
    fn run(&self, dispatch: Dispatch, rule_id: &str, severity: Severity, out: &mut Vec<Violation>) {
        let mut push = |message: String, fields: &[Field]| {
            out.push(violation(rule_id, severity, message, fields));
        };
        match dispatch {
            Dispatch::FieldSchema => self.field_schema(rule_id, severity, out),
            Dispatch::TimeStrictlyIncreasing => {
                if let Some(prev) = self.prev {
                    if self.next.time <= prev.time {
                        push(
                            format!(
                                "time {} does not strictly increase over the previous row's {}",
                                self.next.time, prev.time
                            ),
                            &[Field::Time],
                        );
                    }
                }
            }
            Dispatch::TimeNonDecreasing => {
                if let Some(prev) = self.prev {
                    if self.next.time < prev.time {
                        push(
                            format!(
                                "time {} falls behind the previous row's {}",
                                self.next.time, prev.time
                            ),
                            &[Field::Time],
                        );
                    }
                }
            }
            Dispatch::StartTime => {
                if self.next.time < self.profile.start_time {
                    push(
                        format!(
                            "time {} precedes the profile start time {}",
                            self.next.time, self.profile.start_time
                        ),
                        &[Field::Time],
                    );
                }
            }
            Dispatch::LocationEnum => {
                if self.profile.location(&self.next.location).is_none() {
                    push(
                        format!("location {:?} is not a listed site", self.next.location),
                        &[Field::Location],
                    );
                }
            }
            Dispatch::StatusEnum => {
                if self.profile.status(&self.next.status).is_none() {
                    push(
                        format!("status {:?} is not a listed status", self.next.status),
                        &[Field::Status],
                    );
                }
            }
            Dispatch::OperationEnum => {
                if self.profile.operation(&self.next.operation).is_none() {
                    push(
                        format!(
                            "operation {:?} is not a listed operation",
                            self.next.operation
                        ),
                        &[Field::Operation],
                    );
                }
            }
            Dispatch::PersonnelNonempty => {
                if self.next.personnel.iter().all(String::is_empty) {
                    push("no personnel recorded".into(), &[Field::Personnel]);
                }
            }
            Dispatch::PersonnelFirstSlot => {
                if self
                    .next
                    .personnel
                    .first()
                    .is_some_and(String::is_empty)
                {
                    push("first personnel slot is blank".into(), &[Field::Personnel]);
                }
            }
            Dispatch::CustodyTwoPersonnel => {
                if self.next_category() == Some(OpCategory::CustodyTransfer)
                    && self.filled_personnel().len() != 2
                {
                    push(
                        format!(
                            "custody transfer carries {} personnel entries instead of two",
                            self.filled_personnel().len()
                        ),
                        &[Field::Personnel, Field::Operation],
                    );
                }
            }
            Dispatch::CustodyDistinctPersonnel => {
                let filled = self.filled_personnel();
                if self.next_category() == Some(OpCategory::CustodyTransfer)
                    && filled.len() == 2
                    && filled[0] == filled[1]
                {
                    push(
                        format!("custody transfer lists {:?} twice", filled[0]),
                        &[Field::Personnel, Field::Operation],
                    );
                }
            }
            Dispatch::CustodianChangeThenInventory => {
                if self.prev_has_tag(OpTag::CustodianChange) && !self.next_has_tag(OpTag::Inventory)
                {
                    push(
                        format!(
                            "operation {:?} follows a custodian change; an inventory is required",
                            self.next.operation
                        ),
                        &[Field::Operation],
                    );
                }
            }
            Dispatch::LlcNonemptyUnlessInactive => {
                if let Some(status) = self.profile.status(&self.next.status) {
                    if !status.empty_llc_ok {
                        for (field, value) in
                            [(Field::Llc1, &self.next.llc1), (Field::Llc2, &self.next.llc2)]
                        {
                            if value.is_empty() {
                                push(
                                    format!(
                                        "{field} is empty while status {:?} requires it",
                                        self.next.status
                                    ),
                                    &[field, Field::Status],
                                );
                            }
                        }
                    }
                }
            }
            Dispatch::LlcEmptyStatusWhitelist => {
                if self.next.llc1.is_empty() && self.next.llc2.is_empty() {
                    if let Some(status) = self.profile.status(&self.next.status) {
                        if !status.empty_llc_ok {
                            push(
                                format!(
                                    "both LLC slots are empty under status {:?}",
                                    self.next.status
                                ),
                                &[Field::Llc1, Field::Llc2, Field::Status],
                            );
                        }
                    }
                }
            }
            Dispatch::LlcChangeOnInstall => {
                if let Some(prev) = self.prev {
                    if self.next_has_tag(OpTag::LlcInstallExchange)
                        && self.next.llc1 == prev.llc1
                        && self.next.llc2 == prev.llc2
                    {
                        push(
                            "LLC install/exchange left both LLC slots unchanged".into(),
                            &[Field::Llc1, Field::Llc2, Field::Operation],
                        );
                    }
                }
            }
            Dispatch::LlcEmptyOnRemoval => {
                if self.next_has_tag(OpTag::LlcRemoval)
                    && !self.next.llc1.is_empty()
                    && !self.next.llc2.is_empty()
                {
                    push(
                        "LLC removal left no LLC slot empty".into(),
                        &[Field::Llc1, Field::Llc2, Field::Operation],
                    );
                }
            }
            Dispatch::DepotMaintenanceCentral => {
                if self.next_has_tag(OpTag::DepotMaintenance)
                    && self.next.location.as_bytes().get(1) != Some(&b'C')
                {
                    push(
                        format!(
                            "depot-level maintenance recorded at {:?}, which is not a \
                             central storage site",
                            self.next.location
                        ),
                        &[Field::Location, Field::Operation],
                    );
                }
            }
            Dispatch::RoadTransferTransitions => {
                // Only the road-to-storage handover restricts the next
                // transport; the storage-to-road handover's allowance is
                // folded into the road-crew shipment rule.
                if self.prev_has_tag(OpTag::RoadToStorageCrew) {
                    if let Some((mode, dest)) = self.next_transport() {
                        let allowed = mode == TransportMode::Ground
                            && matches!(dest, Destination::StorageSite | Destination::DeliverySystem);
                        if !allowed {
                            push(
                                format!(
                                    "transport {:?} after a road-to-storage handover; only \
                                     ground legs to a storage site or delivery system follow it",
                                    self.next.operation
                                ),
                                &[Field::Operation],
                            );
                        }
                    }
                }
            }
            Dispatch::RoadCrewNextShipment => {
                if self.prev_has_tag(OpTag::ToRoadCrew) {
                    let allowed = match self.next_transport() {
                        Some((mode, dest)) => match dest {
                            Destination::RailTransferPoint | Destination::Production => true,
                            Destination::StorageSite => mode == TransportMode::Ground,
                            Destination::DeliverySystem => {
                                mode == TransportMode::Ground
                                    && self.prev_has_tag(OpTag::StorageToRoadCrew)
                            }
                            _ => false,
                        },
                        None => false,
                    };
                    if !allowed {
                        push(
                            format!(
                                "operation {:?} follows a road-crew handover; a shipment to a \
                                 rail transfer point, storage site, or production site is required",
                                self.next.operation
                            ),
                            &[Field::Operation],
                        );
                    }
                }
            }
            Dispatch::RailCrewNextShipment => {
                if self.prev_has_tag(OpTag::ToRailCrew) {
                    let allowed = matches!(
                        self.next_transport(),
                        Some((
                            TransportMode::Rail,
                            Destination::Production | Destination::RailTransferPoint
                        ))
                    );
                    if !allowed {
                        push(
                            format!(
                                "operation {:?} follows a rail-crew handover; a rail shipment \
                                 is required",
                                self.next.operation
                            ),
                            &[Field::Operation],
                        );
                    }
                }
            }
            Dispatch::TransportWindow => {
                if let (Some(prev), Some(_)) = (self.prev, self.next_transport()) {
                    let delta = self.next.time - prev.time;
                    if delta >= 0 {
                        let elapsed = (delta / 60) as u64;
                        match check_transport_window(
                            &self.next.operation,
                            &prev.location,
                            &self.next.location,
                            elapsed,
                            self.profile,
                        ) {
                            Ok(Some(v)) => out.push(v),
                            Ok(None) => {}
                            Err(RuleError::UnknownRoute {
                                origin,
                                destination,
                                mode,
                            }) => push(
                                format!(
                                    "no transport window is configured for \
                                     {origin}->{destination} by {mode:?}; route refused"
                                ),
                                &[Field::Location, Field::Operation, Field::Time],
                            ),
                        }
                    }
                }
            }
            // Violations carrying these ids are produced by window rows
            // and by audit_dataset, not by direct dispatch.
            Dispatch::WindowAnchor | Dispatch::RequiredOpAnchor => {}
        }
    }

    fn field_schema(&self, rule_id: &str, severity: Severity, out: &mut Vec<Violation>) {
        for field in Field::ALL {
            match encode_field(self.next, field, self.profile) {
                Ok(_) => {}
                // Membership failures belong to the enumeration rules.
                Err(EncodeError::UnknownCode { .. }) => {}
                Err(e) => out.push(violation(rule_id, severity, e.to_string(), &[field])),
            }
        }
        if self.next.exception && self.next.exception_reason.is_empty() {
            out.push(violation(
                rule_id,
                severity,
                "exception flag is set but no reason is recorded".into(),
                &[Field::Exception, Field::ExceptionReason],
            ));
        }
        if !self.next.exception && !self.next.exception_reason.is_empty() {
            out.push(violation(
                rule_id,
                severity,
                "exception reason is recorded but the flag is not set".into(),
                &[Field::Exception, Field::ExceptionReason],
            ));
        }
    }

    fn next_category(&self) -> Option<OpCategory> {
        self.profile
            .operation(&self.next.operation)
            .map(|o| o.category)
    }

    fn next_transport(&self) -> Option<(TransportMode, Destination)> {
        let op = self.profile.operation(&self.next.operation)?;
        Some((op.transport_mode?, op.destination?))
    }

    fn next_has_tag(&self, tag: OpTag) -> bool {
        self.profile
            .operation(&self.next.operation)
            .is_some_and(|o| o.has_tag(tag))
    }

    fn prev_has_tag(&self, tag: OpTag) -> bool {
        self.prev.is_some_and(|prev| {
            self.profile
                .operation(&prev.operation)
                .is_some_and(|o| o.has_tag(tag))
        })
    }

    fn filled_personnel(&self) -> Vec<&str> {
        self.next
            .personnel
            .iter()
            .filter(|e| !e.is_empty())
            .map(String::as_str)
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Transport windows
// ---------------------------------------------------------------------------

/// Check one transport leg against the profile's windows. Returns
/// `Ok(None)` when the operation is not a transport (nothing to check),
/// when origin equals destination and no operation-scoped window claims
/// the leg (any time is valid), or when the elapsed time sits inside the
/// window, bounds included. An operation-scoped window is an exception
/// to the same-site allowance: timed runs inside one complex (a convoy
/// out to a silo and back never leaves the site's code) stay bounded.
/// Routes with no configured window are an error so callers can fail
/// closed.
pub fn check_transport_window(
    operation: &str,
    origin: &str,
    destination: &str,
    elapsed_minutes: u64,
    profile: &CountryProfile,
) -> Result<Option<Violation>, RuleError> {
    let mode = match profile.operation(operation).and_then(|o| o.transport_mode) {
        Some(mode) => mode,
        None => return Ok(None),
    };
    let window = match profile.window_for(origin, destination, mode, operation) {
        Some(w) if w.operation.is_some() => w,
        _ if origin == destination => return Ok(None),
        Some(w) => w,
        None => {
            return Err(RuleError::UnknownRoute {
                origin: origin.to_string(),
                destination: destination.to_string(),
                mode,
            })
        }
    };
    if (window.min_minutes..=window.max_minutes).contains(&elapsed_minutes) {
        return Ok(None);
    }
    Ok(Some(violation(
        &window.rule_id,
        Severity::Reject,
        format!(
            "transport {origin}->{destination} by {mode:?} took {elapsed_minutes} min, outside \
             the allowed {}..={} min",
            window.min_minutes, window.max_minutes
        ),
        &[Field::Time, Field::Location, Field::Operation],
    )))
}

// ---------------------------------------------------------------------------
// Whole-passport audit
// ---------------------------------------------------------------------------

/// Audit a whole passport: report each required operation that never
/// appears (audit severity), then re-run pairwise validation over every
/// row (the first row validates against no predecessor) and aggregate.
pub fn audit_dataset(
    catalog: &RuleCatalog,
    profile: &CountryProfile,
    passport: &Passport,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for required in &profile.required_ops {
        if !passport.rows.iter().any(|r| r.operation == required.operation) {
            let name = profile
                .operation(&required.operation)
                .map(|o| o.name.clone())
                .unwrap_or_else(|| required.operation.clone());
            out.push(violation(
                &required.rule_id,
                Severity::Audit,
                format!(
                    "required operation {:?} ({name}) never appears in this passport",
                    required.operation
                ),
                &[Field::Operation],
            ));
        }
    }
    let mut prev = None;
    for row in &passport.rows {
        out.extend(validate_transition(catalog, profile, prev, row));
        prev = Some(row);
    }
    out
}
