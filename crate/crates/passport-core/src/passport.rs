//! Passport records, country profiles, and the canonical byte encoding
//! that feeds the commitment layer.
//!
//! A passport is an append-only sequence of event rows for one warhead.
//! Every row carries the same eleven fields in a fixed order; each field
//! has a canonical byte encoding (fixed widths for codes, big-endian for
//! time, concatenated fixed slots for personnel) so that both parties
//! derive bit-identical commitment leaves from equal data. Field widths
//! and the legal code sets are data, supplied per country by a
//! [`CountryProfile`] loaded from a JSON fixture.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::Digest64;

// ---------------------------------------------------------------------------
// Field order
// ---------------------------------------------------------------------------

/// The eleven record fields in canonical order. The discriminant order is
/// the commitment leaf order; challenge columns are named by the serde
/// (snake_case) names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Time,
    Location,
    Status,
    SecondaryComponent,
    Llc1,
    Llc2,
    Operation,
    Personnel,
    Exception,
    ExceptionReason,
    PreviousHash,
}

impl Field {
    pub const ALL: [Field; 11] = [
        Field::Time,
        Field::Location,
        Field::Status,
        Field::SecondaryComponent,
        Field::Llc1,
        Field::Llc2,
        Field::Operation,
        Field::Personnel,
        Field::Exception,
        Field::ExceptionReason,
        Field::PreviousHash,
    ];

    /// 1-based position in the canonical encoding (and the commitment
    /// tree's leaf position).
    pub fn index(self) -> u32 {
        Field::ALL.iter().position(|&f| f == self).unwrap() as u32 + 1
    }

    pub fn from_index(index: u32) -> Option<Field> {
        (1..=Field::ALL.len() as u32)
            .contains(&index)
            .then(|| Field::ALL[index as usize - 1])
    }

    /// Stable lowercase name (equal to the serde name).
    pub fn name(self) -> &'static str {
        match self {
            Field::Time => "time",
            Field::Location => "location",
            Field::Status => "status",
            Field::SecondaryComponent => "secondary_component",
            Field::Llc1 => "llc1",
            Field::Llc2 => "llc2",
            Field::Operation => "operation",
            Field::Personnel => "personnel",
            Field::Exception => "exception",
            Field::ExceptionReason => "exception_reason",
            Field::PreviousHash => "previous_hash",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// One lifecycle event of one warhead. `time` is UTC epoch seconds; code
/// fields hold profile codes; empty strings mean "field not populated"
/// where the schema allows it (LLC slots, exception reason).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassportRow {
    pub time: i64,
    pub location: String,
    pub status: String,
    pub secondary_component: String,
    #[serde(default)]
    pub llc1: String,
    #[serde(default)]
    pub llc2: String,
    pub operation: String,
    pub personnel: Vec<String>,
    #[serde(default)]
    pub exception: bool,
    #[serde(default)]
    pub exception_reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub previous_hash: Option<Digest64>,
}

impl PassportRow {
    /// The same row chained to a predecessor commitment root.
    pub fn linked_to(mut self, prev_root: Digest64) -> PassportRow {
        self.previous_hash = Some(prev_root);
        self
    }
}

/// A prover-side passport: the warhead identifier never leaves the owning
/// party; only commitments over `rows` are shared.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passport {
    pub warhead_id: String,
    pub rows: Vec<PassportRow>,
}

// ---------------------------------------------------------------------------
// Profile vocabulary
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Us,
    Ru,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Us => "us",
            Side::Ru => "ru",
        }
    }

    /// The counterpart side in a two-party exchange.
    pub fn opposite(self) -> Side {
        match self {
            Side::Us => Side::Ru,
            Side::Ru => Side::Us,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationKind {
    IcbmBase,
    SsbnBase,
    BomberBase,
    LogisticsSite,
    AssemblyPlant,
    DcaSite,
    CentralStorage,
    AssociatedUnit,
    RailTransferPoint,
    AssemblySite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusCategory {
    Active,
    Inactive,
    Production,
    Deployed,
    Reserve,
    DismantlementScheduled,
    Disassembled,
    Dismantled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpCategory {
    Lifecycle,
    CustodyTransfer,
    Transport,
    Sustainment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportMode {
    Ground,
    Rail,
    Air,
    Sea,
}

/// Destination attribute of a transport operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Destination {
    MaintenanceFacility,
    DeliverySystem,
    Storage,
    OperationsBase,
    TransportationAircraft,
    LogisticsBase,
    StorageSite,
    RailTransferPoint,
    Production,
}

/// Behavior tags that rules key on; every tag is assigned in profile data,
/// never inferred from code spelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpTag {
    /// Formal change of the custodian of record.
    CustodianChange,
    /// Inventory surveillance operation.
    Inventory,
    /// Installs or exchanges a limited-lifetime component.
    LlcInstallExchange,
    /// Removes a limited-lifetime component.
    LlcRemoval,
    /// Depot-level maintenance (central-storage-only operation).
    DepotMaintenance,
    /// Custody handover onto a rail transport crew.
    ToRailCrew,
    /// Custody handover onto a road transport crew.
    ToRoadCrew,
    /// Custody handover from a road crew to a storage-site crew.
    RoadToStorageCrew,
    /// Custody handover from a storage-site crew to a road crew.
    StorageToRoadCrew,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationSpec {
    pub code: String,
    pub name: String,
    pub kind: LocationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusSpec {
    pub code: String,
    pub name: String,
    pub category: StatusCategory,
    /// Whether a row may carry two empty LLC slots under this status.
    pub empty_llc_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationSpec {
    pub code: String,
    pub name: String,
    pub category: OpCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport_mode: Option<TransportMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<Destination>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<OpTag>,
}

impl OperationSpec {
    pub fn has_tag(&self, tag: OpTag) -> bool {
        self.tags.contains(&tag)
    }
}

/// One allowed travel-time row: elapsed minutes for `mode` transport from
/// `origin` to `destination`, inclusive at both bounds. A row with an
/// `operation` applies only to that operation and takes precedence over
/// the generic row for the same route. `rule_id` names the catalog entry
/// cited when the window is violated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportWindow {
    pub origin: String,
    pub destination: String,
    pub mode: TransportMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation: Option<String>,
    pub min_minutes: u64,
    pub max_minutes: u64,
    pub rule_id: String,
}

/// An operation that must appear at least once in any complete passport.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequiredOp {
    pub operation: String,
    pub rule_id: String,
}

/// Per-country field widths in bytes. `personnel` is the total width of
/// the personnel field, split evenly into [`PERSONNEL_SLOTS`] slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldWidths {
    pub location: usize,
    pub component: usize,
    pub personnel: usize,
}

pub const TIME_WIDTH: usize = 8;
pub const STATUS_WIDTH: usize = 2;
pub const LLC_WIDTH: usize = 9;
pub const OPERATION_WIDTH: usize = 4;
pub const EXCEPTION_WIDTH: usize = 1;
pub const REASON_MAX: usize = 256;
pub const PERSONNEL_SLOTS: usize = 2;

// ---------------------------------------------------------------------------
// Country profile
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountryProfile {
    pub profile_id: String,
    pub display_name: String,
    pub side: Side,
    /// Earliest legal row time, UTC epoch seconds (RFC 3339 in fixtures).
    #[serde(with = "rfc3339_epoch")]
    pub start_time: i64,
    pub field_widths: FieldWidths,
    pub locations: Vec<LocationSpec>,
    pub statuses: Vec<StatusSpec>,
    pub operations: Vec<OperationSpec>,
    #[serde(default)]
    pub transport_windows: Vec<TransportWindow>,
    #[serde(default)]
    pub required_ops: Vec<RequiredOp>,
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("profile schema error: {0}")]
    Schema(String),
    #[error("transport window {origin}->{destination} has min {min} > max {max}")]
    InconsistentWindow {
        origin: String,
        destination: String,
        min: u64,
        max: u64,
    },
    #[error("profile is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cannot read profile: {0}")]
    Io(#[from] std::io::Error),
}

impl CountryProfile {
    /// Parse and validate a profile document.
    pub fn from_json(document: &str) -> Result<CountryProfile, ProfileError> {
        let profile: CountryProfile = serde_json::from_str(document)?;
        profile.validate()?;
        Ok(profile)
    }

    /// Load and validate a profile file.
    pub fn load(path: &std::path::Path) -> Result<CountryProfile, ProfileError> {
        CountryProfile::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn location(&self, code: &str) -> Option<&LocationSpec> {
        self.locations.iter().find(|l| l.code == code)
    }

    pub fn status(&self, code: &str) -> Option<&StatusSpec> {
        self.statuses.iter().find(|s| s.code == code)
    }

    pub fn operation(&self, code: &str) -> Option<&OperationSpec> {
        self.operations.iter().find(|o| o.code == code)
    }

    pub fn personnel_slot_width(&self) -> usize {
        self.field_widths.personnel / PERSONNEL_SLOTS
    }

    /// The window governing a transport leg, if one is configured. An
    /// operation-scoped row beats the generic row for the same route.
    pub fn window_for(
        &self,
        origin: &str,
        destination: &str,
        mode: TransportMode,
        operation: &str,
    ) -> Option<&TransportWindow> {
        let route = |w: &&TransportWindow| {
            w.origin == origin && w.destination == destination && w.mode == mode
        };
        self.transport_windows
            .iter()
            .filter(route)
            .find(|w| w.operation.as_deref() == Some(operation))
            .or_else(|| {
                self.transport_windows
                    .iter()
                    .filter(route)
                    .find(|w| w.operation.is_none())
            })
    }

    fn validate(&self) -> Result<(), ProfileError> {
        let schema = |message: String| Err(ProfileError::Schema(message));

        if self.profile_id.is_empty() {
            return schema("profile_id is empty".into());
        }
        if self.start_time < 0 {
            return schema("start_time precedes the epoch".into());
        }
        let widths = &self.field_widths;
        if widths.location == 0 || widths.component == 0 {
            return schema("location/component widths must be nonzero".into());
        }
        if widths.personnel == 0 || widths.personnel % PERSONNEL_SLOTS != 0 {
            return schema(format!(
                "personnel width {} does not split into {PERSONNEL_SLOTS} equal slots",
                widths.personnel
            ));
        }

        fn check_codes<'a>(
            kind: &str,
            codes: impl Iterator<Item = &'a str>,
            max_width: usize,
        ) -> Result<(), ProfileError> {
            let mut seen = BTreeSet::new();
            for code in codes {
                if code.is_empty() {
                    return Err(ProfileError::Schema(format!("empty {kind} code")));
                }
                if !code.bytes().all(|b| b.is_ascii_graphic()) {
                    return Err(ProfileError::Schema(format!(
                        "{kind} code {code:?} contains non-printable bytes"
                    )));
                }
                if code.len() > max_width {
                    return Err(ProfileError::Schema(format!(
                        "{kind} code {code:?} exceeds width {max_width}"
                    )));
                }
                if !seen.insert(code) {
                    return Err(ProfileError::Schema(format!("duplicate {kind} code {code:?}")));
                }
            }
            Ok(())
        }

        check_codes(
            "location",
            self.locations.iter().map(|l| l.code.as_str()),
            widths.location,
        )?;
        check_codes(
            "status",
            self.statuses.iter().map(|s| s.code.as_str()),
            STATUS_WIDTH,
        )?;
        check_codes(
            "operation",
            self.operations.iter().map(|o| o.code.as_str()),
            OPERATION_WIDTH,
        )?;

        for location in &self.locations {
            let marked = location.code.as_bytes().get(1) == Some(&b'C');
            let central = location.kind == LocationKind::CentralStorage;
            if marked != central {
                return schema(format!(
                    "location {:?}: central-storage kind and 'C' second-character marker must agree",
                    location.code
                ));
            }
        }

        for status in &self.statuses {
            if status.code.len() != STATUS_WIDTH {
                return schema(format!(
                    "status code {:?} must be exactly {STATUS_WIDTH} bytes",
                    status.code
                ));
            }
        }

        for op in &self.operations {
            let is_transport = op.category == OpCategory::Transport;
            if is_transport != op.transport_mode.is_some() {
                return schema(format!(
                    "operation {:?}: transport category and transport_mode must agree",
                    op.code
                ));
            }
            if is_transport && op.destination.is_none() {
                return schema(format!(
                    "transport operation {:?} needs a destination attribute",
                    op.code
                ));
            }
        }

        for window in &self.transport_windows {
            if window.min_minutes > window.max_minutes {
                return Err(ProfileError::InconsistentWindow {
                    origin: window.origin.clone(),
                    destination: window.destination.clone(),
                    min: window.min_minutes,
                    max: window.max_minutes,
                });
            }
            if window.min_minutes == 0 {
                return schema(format!(
                    "window {}->{} allows zero-minute transport",
                    window.origin, window.destination
                ));
            }
            for code in [&window.origin, &window.destination] {
                if self.location(code).is_none() {
                    return schema(format!("window references unknown location {code:?}"));
                }
            }
            if window.rule_id.is_empty() {
                return schema(format!(
                    "window {}->{} carries no rule_id",
                    window.origin, window.destination
                ));
            }
            if let Some(op_code) = &window.operation {
                match self.operation(op_code) {
                    None => {
                        return schema(format!("window references unknown operation {op_code:?}"))
                    }
                    Some(op) if op.transport_mode != Some(window.mode) => {
                        return schema(format!(
                            "window operation {op_code:?} does not transport by {:?}",
                            window.mode
                        ))
                    }
                    Some(_) => {}
                }
            }
        }

        for required in &self.required_ops {
            if self.operation(&required.operation).is_none() {
                return schema(format!(
                    "required operation {:?} is not in the operations list",
                    required.operation
                ));
            }
            if required.rule_id.is_empty() {
                return schema(format!(
                    "required operation {:?} carries no rule_id",
                    required.operation
                ));
            }
        }

        Ok(())
    }
}

/// Serde adapter: epoch seconds in memory, RFC 3339 strings on disk.
mod rfc3339_epoch {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(epoch: &i64, serializer: S) -> Result<S::Ok, S::Error> {
        let time = DateTime::<Utc>::from_timestamp(*epoch, 0)
            .ok_or_else(|| serde::ser::Error::custom(format!("unrepresentable epoch {epoch}")))?;
        serializer.serialize_str(&time.to_rfc3339_opts(SecondsFormat::Secs, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<i64, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(DateTime::parse_from_rfc3339(&s)
            .map_err(D::Error::custom)?
            .timestamp())
    }
}

// ---------------------------------------------------------------------------
// Canonical encoding
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("{field}: value {value:?} exceeds width {max}")]
    WidthExceeded {
        field: Field,
        value: String,
        max: usize,
    },
    #[error("{field}: code {value:?} is not in the profile's list")]
    UnknownCode { field: Field, value: String },
    #[error("{field}: value contains a NUL byte")]
    EmbeddedNul { field: Field },
    #[error("personnel: {0} entries exceed the {PERSONNEL_SLOTS} available slots")]
    TooManyPersonnel(usize),
    #[error("time {0} is not representable (before the epoch)")]
    TimeOutOfRange(i64),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("{field}: expected {expected} bytes, got {got}")]
    WrongLength {
        field: Field,
        expected: usize,
        got: usize,
    },
    #[error("{field}: value is not valid UTF-8")]
    BadUtf8 { field: Field },
    #[error("{field}: interior NUL byte inside a padded value")]
    InteriorNul { field: Field },
    #[error("exception flag byte {0:#04x} is neither 0x00 nor 0x01")]
    BadFlagByte(u8),
    #[error("exception reason exceeds {REASON_MAX} bytes")]
    ReasonTooLong,
}

/// A decoded field value, typed per field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum FieldValue {
    Time(i64),
    Code(String),
    Personnel(Vec<String>),
    Flag(bool),
    Text(String),
    Hash(Option<Digest64>),
}

impl fmt::Display for FieldValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldValue::Time(t) => write!(f, "{t}"),
            FieldValue::Code(c) => f.write_str(c),
            FieldValue::Personnel(entries) => f.write_str(&entries.join("+")),
            FieldValue::Flag(b) => write!(f, "{b}"),
            FieldValue::Text(t) => f.write_str(t),
            FieldValue::Hash(Some(d)) => f.write_str(&d.to_hex()),
            FieldValue::Hash(None) => Ok(()),
        }
    }
}

fn pad_right(field: Field, value: &str, width: usize) -> Result<Vec<u8>, EncodeError> {
    if value.as_bytes().contains(&0) {
        return Err(EncodeError::EmbeddedNul { field });
    }
    if value.len() > width {
        return Err(EncodeError::WidthExceeded {
            field,
            value: value.to_string(),
            max: width,
        });
    }
    let mut out = vec![0u8; width];
    out[..value.len()].copy_from_slice(value.as_bytes());
    Ok(out)
}

fn strip_padding(field: Field, bytes: &[u8]) -> Result<String, DecodeError> {
    let end = bytes.len() - bytes.iter().rev().take_while(|&&b| b == 0).count();
    let body = &bytes[..end];
    if body.contains(&0) {
        return Err(DecodeError::InteriorNul { field });
    }
    String::from_utf8(body.to_vec()).map_err(|_| DecodeError::BadUtf8 { field })
}

/// Canonical bytes of one field of `row`. Enumerated codes (location,
/// status, operation) must be members of the profile's lists.
pub fn encode_field(
    row: &PassportRow,
    field: Field,
    profile: &CountryProfile,
) -> Result<Vec<u8>, EncodeError> {
    let widths = &profile.field_widths;
    let unknown = |value: &str| EncodeError::UnknownCode {
        field,
        value: value.to_string(),
    };
    match field {
        Field::Time => {
            let time = u64::try_from(row.time).map_err(|_| EncodeError::TimeOutOfRange(row.time))?;
            Ok(time.to_be_bytes().to_vec())
        }
        Field::Location => {
            if profile.location(&row.location).is_none() {
                return Err(unknown(&row.location));
            }
            pad_right(field, &row.location, widths.location)
        }
        Field::Status => {
            if profile.status(&row.status).is_none() {
                return Err(unknown(&row.status));
            }
            pad_right(field, &row.status, STATUS_WIDTH)
        }
        Field::SecondaryComponent => pad_right(field, &row.secondary_component, widths.component),
        Field::Llc1 | Field::Llc2 => {
            let value = if field == Field::Llc1 { &row.llc1 } else { &row.llc2 };
            if value.is_empty() {
                Ok(Vec::new())
            } else {
                pad_right(field, value, LLC_WIDTH)
            }
        }
        Field::Operation => {
            if profile.operation(&row.operation).is_none() {
                return Err(unknown(&row.operation));
            }
            pad_right(field, &row.operation, OPERATION_WIDTH)
        }
        Field::Personnel => {
            if row.personnel.len() > PERSONNEL_SLOTS {
                return Err(EncodeError::TooManyPersonnel(row.personnel.len()));
            }
            let slot = profile.personnel_slot_width();
            let mut out = vec![0u8; widths.personnel];
            for (i, entry) in row.personnel.iter().enumerate() {
                out[i * slot..(i + 1) * slot].copy_from_slice(&pad_right(field, entry, slot)?);
            }
            Ok(out)
        }
        Field::Exception => Ok(vec![u8::from(row.exception)]),
        Field::ExceptionReason => {
            if row.exception_reason.len() > REASON_MAX {
                return Err(EncodeError::WidthExceeded {
                    field,
                    value: row.exception_reason.clone(),
                    max: REASON_MAX,
                });
            }
            Ok(row.exception_reason.clone().into_bytes())
        }
        Field::PreviousHash => Ok(row
            .previous_hash
            .map(|d| d.as_bytes().to_vec())
            .unwrap_or_default()),
    }
}

/// Decode one field's canonical bytes back to a typed value.
pub fn decode_field(
    field: Field,
    bytes: &[u8],
    profile: &CountryProfile,
) -> Result<FieldValue, DecodeError> {
    let widths = &profile.field_widths;
    let expect = |expected: usize| {
        if bytes.len() == expected {
            Ok(())
        } else {
            Err(DecodeError::WrongLength {
                field,
                expected,
                got: bytes.len(),
            })
        }
    };
    match field {
        Field::Time => {
            expect(TIME_WIDTH)?;
            Ok(FieldValue::Time(
                u64::from_be_bytes(bytes.try_into().unwrap()) as i64,
            ))
        }
        Field::Location => {
            expect(widths.location)?;
            Ok(FieldValue::Code(strip_padding(field, bytes)?))
        }
        Field::Status => {
            expect(STATUS_WIDTH)?;
            Ok(FieldValue::Code(strip_padding(field, bytes)?))
        }
        Field::SecondaryComponent => {
            expect(widths.component)?;
            Ok(FieldValue::Code(strip_padding(field, bytes)?))
        }
        Field::Llc1 | Field::Llc2 => {
            if bytes.is_empty() {
                return Ok(FieldValue::Code(String::new()));
            }
            expect(LLC_WIDTH)?;
            Ok(FieldValue::Code(strip_padding(field, bytes)?))
        }
        Field::Operation => {
            expect(OPERATION_WIDTH)?;
            Ok(FieldValue::Code(strip_padding(field, bytes)?))
        }
        Field::Personnel => {
            expect(widths.personnel)?;
            let slot = profile.personnel_slot_width();
            let mut entries: Vec<String> = bytes
                .chunks_exact(slot)
                .map(|chunk| strip_padding(field, chunk))
                .collect::<Result<_, _>>()?;
            while entries.last().is_some_and(String::is_empty) {
                entries.pop();
            }
            Ok(FieldValue::Personnel(entries))
        }
        Field::Exception => {
            expect(EXCEPTION_WIDTH)?;
            match bytes[0] {
                0 => Ok(FieldValue::Flag(false)),
                1 => Ok(FieldValue::Flag(true)),
                other => Err(DecodeError::BadFlagByte(other)),
            }
        }
        Field::ExceptionReason => {
            if bytes.len() > REASON_MAX {
                return Err(DecodeError::ReasonTooLong);
            }
            Ok(FieldValue::Text(
                String::from_utf8(bytes.to_vec()).map_err(|_| DecodeError::BadUtf8 { field })?,
            ))
        }
        Field::PreviousHash => {
            if bytes.is_empty() {
                return Ok(FieldValue::Hash(None));
            }
            expect(Digest64::LEN)?;
            Ok(FieldValue::Hash(Some(Digest64(bytes.try_into().unwrap()))))
        }
    }
}

/// Canonical encoding of a whole row: the eleven field byte-strings in
/// canonical order.
pub fn encode_row(
    row: &PassportRow,
    profile: &CountryProfile,
) -> Result<Vec<Vec<u8>>, EncodeError> {
    Field::ALL
        .iter()
        .map(|&field| encode_field(row, field, profile))
        .collect()
}

/// Inverse of [`encode_row`].
pub fn decode_row(
    cells: &[Vec<u8>],
    profile: &CountryProfile,
) -> Result<PassportRow, DecodeError> {
    assert_eq!(cells.len(), Field::ALL.len(), "a row has exactly 11 cells");
    let mut decoded = Vec::with_capacity(Field::ALL.len());
    for (field, bytes) in Field::ALL.iter().zip(cells) {
        decoded.push(decode_field(*field, bytes, profile)?);
    }
    let mut values = decoded.into_iter();
    let mut next = || values.next().unwrap();
    let take_time = |v: FieldValue| match v {
        FieldValue::Time(t) => t,
        _ => unreachable!(),
    };
    let take_code = |v: FieldValue| match v {
        FieldValue::Code(c) => c,
        _ => unreachable!(),
    };
    Ok(PassportRow {
        time: take_time(next()),
        location: take_code(next()),
        status: take_code(next()),
        secondary_component: take_code(next()),
        llc1: take_code(next()),
        llc2: take_code(next()),
        operation: take_code(next()),
        personnel: match next() {
            FieldValue::Personnel(p) => p,
            _ => unreachable!(),
        },
        exception: match next() {
            FieldValue::Flag(b) => b,
            _ => unreachable!(),
        },
        exception_reason: match next() {
            FieldValue::Text(t) => t,
            _ => unreachable!(),
        },
        previous_hash: match next() {
            FieldValue::Hash(h) => h,
            _ => unreachable!(),
        },
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_profile() -> CountryProfile {
        CountryProfile::from_json(
            r#"{
                "profile_id": "tiny",
                "display_name": "Test profile",
                "side": "us",
                "start_time": "2011-02-05T00:00:00Z",
                "field_widths": { "location": 9, "component": 6, "personnel": 10 },
                "locations": [
                    { "code": "ALPHA", "name": "Alpha site", "kind": "icbm_base" },
                    { "code": "BCBASE", "name": "Central", "kind": "central_storage" }
                ],
                "statuses": [
                    { "code": "AR", "name": "Active ready", "category": "active", "empty_llc_ok": false }
                ],
                "operations": [
                    { "code": "U401", "name": "Periodic maintenance", "category": "sustainment" },
                    { "code": "U312", "name": "Ground transport to delivery system",
                      "category": "transport", "transport_mode": "ground",
                      "destination": "delivery_system" }
                ],
                "transport_windows": [
                    { "origin": "ALPHA", "destination": "ALPHA", "mode": "ground",
                      "operation": "U312", "min_minutes": 1, "max_minutes": 360,
                      "rule_id": "X-WINDOW" }
                ]
            }"#,
        )
        .map_err(|e| panic!("tiny profile must load: {e}"))
        .unwrap()
    }

    fn sample_row() -> PassportRow {
        PassportRow {
            time: 1_511_170_200,
            location: "ALPHA".into(),
            status: "AR".into(),
            secondary_component: "S01001".into(),
            llc1: "LLC101001".into(),
            llc2: String::new(),
            operation: "U401".into(),
            personnel: vec!["MX101".into(), "MX115".into()],
            exception: false,
            exception_reason: String::new(),
            previous_hash: None,
        }
    }

    #[test]
    fn field_indices_are_canonical() {
        assert_eq!(Field::Time.index(), 1);
        assert_eq!(Field::Exception.index(), 9);
        assert_eq!(Field::ExceptionReason.index(), 10);
        assert_eq!(Field::PreviousHash.index(), 11);
        assert_eq!(Field::from_index(2), Some(Field::Location));
        assert_eq!(Field::from_index(0), None);
        assert_eq!(Field::from_index(12), None);
    }

    #[test]
    fn encode_decode_round_trip() {
        let profile = tiny_profile();
        let mut row = sample_row();
        row.previous_hash = Some(Digest64([7; 64]));
        row.exception = true;
        row.exception_reason = "weather delay".into();
        let cells = encode_row(&row, &profile).unwrap();
        assert_eq!(cells.len(), 11);
        assert_eq!(decode_row(&cells, &profile).unwrap(), row);
    }

    #[test]
    fn fixed_widths_and_padding() {
        let profile = tiny_profile();
        let row = sample_row();
        let cells = encode_row(&row, &profile).unwrap();
        assert_eq!(cells[Field::Time.index() as usize - 1].len(), 8);
        assert_eq!(cells[Field::Location.index() as usize - 1], b"ALPHA\0\0\0\0");
        assert_eq!(cells[Field::Llc2.index() as usize - 1], b"");
        assert_eq!(cells[Field::Personnel.index() as usize - 1], b"MX101MX115");
        assert_eq!(cells[Field::Exception.index() as usize - 1], [0u8]);
        assert_eq!(cells[Field::PreviousHash.index() as usize - 1], b"");
    }

    #[test]
    fn unknown_codes_are_rejected() {
        let profile = tiny_profile();
        let mut row = sample_row();
        row.location = "NOWHERE".into();
        assert_eq!(
            encode_field(&row, Field::Location, &profile),
            Err(EncodeError::UnknownCode {
                field: Field::Location,
                value: "NOWHERE".into()
            })
        );
    }

    #[test]
    fn width_overflow_is_rejected() {
        let profile = tiny_profile();
        let mut row = sample_row();
        row.secondary_component = "TOOLONGCOMP".into();
        assert!(matches!(
            encode_field(&row, Field::SecondaryComponent, &profile),
            Err(EncodeError::WidthExceeded { .. })
        ));
        row = sample_row();
        row.personnel = vec!["A".into(), "B".into(), "C".into()];
        assert_eq!(
            encode_field(&row, Field::Personnel, &profile),
            Err(EncodeError::TooManyPersonnel(3))
        );
    }

    #[test]
    fn personnel_keeps_interior_gap_drops_trailing() {
        let profile = tiny_profile();
        let mut row = sample_row();
        row.personnel = vec![String::new(), "MX115".into()];
        let bytes = encode_field(&row, Field::Personnel, &profile).unwrap();
        assert_eq!(
            decode_field(Field::Personnel, &bytes, &profile).unwrap(),
            FieldValue::Personnel(vec![String::new(), "MX115".into()])
        );

        row.personnel = vec!["MX101".into()];
        let bytes = encode_field(&row, Field::Personnel, &profile).unwrap();
        assert_eq!(
            decode_field(Field::Personnel, &bytes, &profile).unwrap(),
            FieldValue::Personnel(vec!["MX101".into()])
        );
    }

    #[test]
    fn bad_flag_byte_fails_decode() {
        let profile = tiny_profile();
        assert_eq!(
            decode_field(Field::Exception, &[2], &profile),
            Err(DecodeError::BadFlagByte(2))
        );
    }

    #[test]
    fn linking_sets_previous_hash() {
        let root = Digest64([9; 64]);
        let row = sample_row().linked_to(root);
        assert_eq!(row.previous_hash, Some(root));
    }

    #[test]
    fn profile_rejects_inconsistent_central_marker() {
        let bad = r#"{
            "profile_id": "bad",
            "display_name": "x",
            "side": "ru",
            "start_time": "2011-02-05T00:00:00Z",
            "field_widths": { "location": 6, "component": 7, "personnel": 6 },
            "locations": [ { "code": "XCODE", "name": "not central", "kind": "associated_unit" } ],
            "statuses": [],
            "operations": []
        }"#;
        assert!(matches!(
            CountryProfile::from_json(bad),
            Err(ProfileError::Schema(_))
        ));
    }

    #[test]
    fn profile_rejects_min_above_max_window() {
        let bad = r#"{
            "profile_id": "bad",
            "display_name": "x",
            "side": "us",
            "start_time": "2011-02-05T00:00:00Z",
            "field_widths": { "location": 9, "component": 6, "personnel": 10 },
            "locations": [ { "code": "ALPHA", "name": "a", "kind": "icbm_base" } ],
            "statuses": [],
            "operations": [
                { "code": "U311", "name": "t", "category": "transport",
                  "transport_mode": "ground", "destination": "storage" }
            ],
            "transport_windows": [
                { "origin": "ALPHA", "destination": "ALPHA", "mode": "ground",
                  "min_minutes": 10, "max_minutes": 5, "rule_id": "X" }
            ]
        }"#;
        assert!(matches!(
            CountryProfile::from_json(bad),
            Err(ProfileError::InconsistentWindow { .. })
        ));
    }

    #[test]
    fn window_lookup_prefers_operation_scoped_rows() {
        let json = r#"{
            "profile_id": "w",
            "display_name": "x",
            "side": "us",
            "start_time": "2011-02-05T00:00:00Z",
            "field_widths": { "location": 9, "component": 6, "personnel": 10 },
            "locations": [
                { "code": "ALPHA", "name": "a", "kind": "icbm_base" },
                { "code": "BETA", "name": "b", "kind": "icbm_base" }
            ],
            "statuses": [],
            "operations": [
                { "code": "U312", "name": "to delivery", "category": "transport",
                  "transport_mode": "ground", "destination": "delivery_system" },
                { "code": "U313", "name": "to storage", "category": "transport",
                  "transport_mode": "ground", "destination": "storage" }
            ],
            "transport_windows": [
                { "origin": "ALPHA", "destination": "BETA", "mode": "ground",
                  "min_minutes": 100, "max_minutes": 200, "rule_id": "GENERIC" },
                { "origin": "ALPHA", "destination": "BETA", "mode": "ground",
                  "operation": "U312", "min_minutes": 1, "max_minutes": 360,
                  "rule_id": "SCOPED" }
            ]
        }"#;
        let profile = CountryProfile::from_json(json).unwrap();
        let scoped = profile
            .window_for("ALPHA", "BETA", TransportMode::Ground, "U312")
            .unwrap();
        assert_eq!(scoped.rule_id, "SCOPED");
        let generic = profile
            .window_for("ALPHA", "BETA", TransportMode::Ground, "U313")
            .unwrap();
        assert_eq!(generic.rule_id, "GENERIC");
        assert!(profile
            .window_for("BETA", "ALPHA", TransportMode::Ground, "U312")
            .is_none());
    }
}
