//! The rule catalog: the checked-in inventory of treaty rules.
//!
//! Every rule has a stable id and a side. `check` entries are executable
//! and name the engine built-in that implements them; `condition` entries
//! document skip/whitelist arms inside another check's logic;
//! `definition` entries state what "valid" aggregates over; `derived`
//! entries license the adjacent-row inferences and never produce
//! violations. Profiles bind transport windows and required operations to
//! catalog ids, so parameters stay in profile data while logic stays here.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::passport::{CountryProfile, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Reject,
    Audit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Check,
    Condition,
    Definition,
    Derived,
}

/// Engine built-in implementing a `check` entry. `WindowAnchor` and
/// `RequiredOpAnchor` mark ids cited by profile data (window rows and
/// required-op lists) rather than evaluated directly by
/// `validate_transition`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispatch {
    FieldSchema,
    TimeStrictlyIncreasing,
    TimeNonDecreasing,
    StartTime,
    LocationEnum,
    StatusEnum,
    OperationEnum,
    PersonnelNonempty,
    PersonnelFirstSlot,
    CustodyTwoPersonnel,
    CustodyDistinctPersonnel,
    CustodianChangeThenInventory,
    LlcNonemptyUnlessInactive,
    LlcEmptyStatusWhitelist,
    LlcChangeOnInstall,
    LlcEmptyOnRemoval,
    DepotMaintenanceCentral,
    RoadTransferTransitions,
    RoadCrewNextShipment,
    RailCrewNextShipment,
    TransportWindow,
    WindowAnchor,
    RequiredOpAnchor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleEntry {
    pub rule_id: String,
    pub side: Side,
    pub kind: RuleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<Severity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispatch: Option<Dispatch>,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCatalog {
    pub catalog_id: String,
    pub entries: Vec<RuleEntry>,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog schema error: {0}")]
    Schema(String),
    #[error("catalog is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cannot read catalog: {0}")]
    Io(#[from] std::io::Error),
}

impl RuleCatalog {
    pub fn from_json(document: &str) -> Result<RuleCatalog, CatalogError> {
        let catalog: RuleCatalog = serde_json::from_str(document)?;
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn load(path: &std::path::Path) -> Result<RuleCatalog, CatalogError> {
        RuleCatalog::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn entry(&self, rule_id: &str) -> Option<&RuleEntry> {
        self.entries.iter().find(|e| e.rule_id == rule_id)
    }

    /// Executable entries for one side, in catalog order.
    pub fn checks_for(&self, side: Side) -> impl Iterator<Item = &RuleEntry> {
        self.entries
            .iter()
            .filter(move |e| e.side == side && e.kind == RuleKind::Check)
    }

    /// The id carrying fail-closed unknown-route violations for a side:
    /// its generic transport-window entry.
    pub fn window_rule_id(&self, side: Side) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.side == side && e.dispatch == Some(Dispatch::TransportWindow))
            .map(|e| e.rule_id.as_str())
    }

    fn validate(&self) -> Result<(), CatalogError> {
        let schema = |message: String| Err(CatalogError::Schema(message));
        if self.catalog_id.is_empty() {
            return schema("catalog_id is empty".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for entry in &self.entries {
            if entry.rule_id.is_empty() {
                return schema("entry with empty rule_id".into());
            }
            if !seen.insert(entry.rule_id.as_str()) {
                return schema(format!("duplicate rule_id {:?}", entry.rule_id));
            }
            let is_check = entry.kind == RuleKind::Check;
            if is_check != entry.severity.is_some() {
                return schema(format!(
                    "{}: severity must be present exactly on check entries",
                    entry.rule_id
                ));
            }
            if is_check != entry.dispatch.is_some() {
                return schema(format!(
                    "{}: dispatch must be present exactly on check entries",
                    entry.rule_id
                ));
            }
            if entry.summary.is_empty() {
                return schema(format!("{}: summary is empty", entry.rule_id));
            }
        }
        for side in [Side::Us, Side::Ru] {
            let windows = self
                .entries
                .iter()
                .filter(|e| e.side == side && e.dispatch == Some(Dispatch::TransportWindow))
                .count();
            if windows > 1 {
                return schema(format!(
                    "side {} has {windows} generic transport-window entries; the fail-closed \
                     route check needs exactly one",
                    side.name()
                ));
            }
        }
        Ok(())
    }

    /// Cross-check a profile's rule-id references against this catalog:
    /// window rows must cite a window-capable check of the same side, and
    /// required operations must cite an audit-severity anchor.
    pub fn check_profile_bindings(&self, profile: &CountryProfile) -> Result<(), CatalogError> {
        for window in &profile.transport_windows {
            match self.entry(&window.rule_id) {
                None => {
                    return Err(CatalogError::Schema(format!(
                        "window {}->{} cites unknown rule {:?}",
                        window.origin, window.destination, window.rule_id
                    )))
                }
                Some(entry) => {
                    let window_capable = matches!(
                        entry.dispatch,
                        Some(Dispatch::TransportWindow) | Some(Dispatch::WindowAnchor)
                    );
                    if entry.side != profile.side || !window_capable {
                        return Err(CatalogError::Schema(format!(
                            "window {}->{} cites {:?}, which is not a {} transport-window rule",
                            window.origin,
                            window.destination,
                            window.rule_id,
                            profile.side.name()
                        )));
                    }
                }
            }
        }
        for required in &profile.required_ops {
            match self.entry(&required.rule_id) {
                Some(entry)
                    if entry.side == profile.side
                        && entry.dispatch == Some(Dispatch::RequiredOpAnchor)
                        && entry.severity == Some(Severity::Audit) => {}
                _ => {
                    return Err(CatalogError::Schema(format!(
                        "required operation {:?} cites {:?}, which is not a {} audit anchor",
                        required.operation,
                        required.rule_id,
                        profile.side.name()
                    )))
                }
            }
        }
        Ok(())
    }
}
