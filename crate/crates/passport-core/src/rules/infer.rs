//! Deductions about a neighboring hidden row from one update's opened
//! cells.
//!
//! Opening a challenged row reveals more than the cells themselves: a
//! non-transport operation means the warhead did not move, so the
//! previous row's location is pinned; an LLC-removal operation with one
//! empty slot means that slot was populated before and the other slot
//! carried over. Each deduced statement cites the catalog entry that
//! licenses it (`derived` entries — they produce facts, not violations).
//! Patterns outside this vocabulary yield no facts.

use serde::{Deserialize, Serialize};

use crate::passport::{CountryProfile, Field, FieldValue, OpCategory, OpTag, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Prev,
    Next,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// The target field equals `value`.
    Equals,
    /// The target field is populated (value unknown).
    Nonempty,
    /// The target field equals this update's value for the same field
    /// (`value` carries it when that value is visible).
    Unchanged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeducedStatement {
    pub target: Target,
    pub field: Field,
    pub relation: Relation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    pub rule_id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeducedFacts {
    pub statements: Vec<DeducedStatement>,
}

fn location_continuity_id(side: Side) -> &'static str {
    match side {
        Side::Us => "US-LOC-CONTINUITY",
        Side::Ru => "RU-LOC-CONTINUITY",
    }
}

fn llc_removal_semantics_id(side: Side) -> &'static str {
    match side {
        Side::Us => "US-LLC-REMOVAL-SEMANTICS",
        Side::Ru => "RU-LLC-REMOVAL-SEMANTICS",
    }
}

/// Deduce facts about the previous row from one update's opened cells.
pub fn infer_adjacent(opened: &[(Field, FieldValue)], profile: &CountryProfile) -> DeducedFacts {
    let mut statements = Vec::new();
    let get = |field: Field| opened.iter().find(|(f, _)| *f == field).map(|(_, v)| v);
    let code = |field: Field| match get(field) {
        Some(FieldValue::Code(c)) => Some(c),
        _ => None,
    };

    let operation = match code(Field::Operation).and_then(|c| profile.operation(c)) {
        Some(op) => op,
        None => return DeducedFacts::default(),
    };

    if operation.category != OpCategory::Transport {
        let rule_id = location_continuity_id(profile.side).to_string();
        statements.push(match code(Field::Location) {
            Some(loc) => DeducedStatement {
                target: Target::Prev,
                field: Field::Location,
                relation: Relation::Equals,
                value: Some(loc.clone()),
                rule_id,
            },
            None => DeducedStatement {
                target: Target::Prev,
                field: Field::Location,
                relation: Relation::Unchanged,
                value: None,
                rule_id,
            },
        });
    }

    // The removal deduction needs both slots visible: with one slot
    // hidden, the removal may have emptied the hidden slot, and an
    // opened empty slot could have been empty all along.
    if operation.has_tag(OpTag::LlcRemoval) {
        let rule_id = llc_removal_semantics_id(profile.side);
        if let (Some(llc1), Some(llc2)) = (code(Field::Llc1), code(Field::Llc2)) {
            if llc1.is_empty() != llc2.is_empty() {
                for (field, value) in [(Field::Llc1, llc1), (Field::Llc2, llc2)] {
                    statements.push(if value.is_empty() {
                        DeducedStatement {
                            target: Target::Prev,
                            field,
                            relation: Relation::Nonempty,
                            value: None,
                            rule_id: rule_id.to_string(),
                        }
                    } else {
                        DeducedStatement {
                            target: Target::Prev,
                            field,
                            relation: Relation::Unchanged,
                            value: Some(value.clone()),
                            rule_id: rule_id.to_string(),
                        }
                    });
                }
            }
        }
    }

    DeducedFacts { statements }
}
