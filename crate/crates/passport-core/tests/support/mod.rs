//! Shared helpers for the integration-test targets: fixture loading and
//! the single-field mutation table used by both the rules tests and the
//! acceptance run.

#![allow(dead_code)]

use std::path::PathBuf;

use passport_core::passport::{CountryProfile, PassportRow};
use passport_core::rules::RuleCatalog;

pub fn fixture_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
}

pub fn load_profile(name: &str) -> CountryProfile {
    CountryProfile::load(&fixture_path(&format!("profiles/{name}.json")))
        .unwrap_or_else(|e| panic!("profile {name} must load: {e}"))
}

pub fn load_catalog() -> RuleCatalog {
    RuleCatalog::load(&fixture_path("catalog/rules.json"))
        .unwrap_or_else(|e| panic!("rule catalog must load: {e}"))
}

pub fn epoch(rfc3339: &str) -> i64 {
    chrono::DateTime::parse_from_rfc3339(rfc3339)
        .unwrap_or_else(|e| panic!("bad test timestamp {rfc3339}: {e}"))
        .timestamp()
}

/// A maintenance row at Pantex, valid as a US chain start.
pub fn us_base_row() -> PassportRow {
    PassportRow {
        time: epoch("2017-11-20T09:00:00Z"),
        location: "PANTX".into(),
        status: "IL".into(),
        secondary_component: "S01001".into(),
        llc1: "LLC101001".into(),
        llc2: "LLC201001".into(),
        operation: "U402".into(),
        personnel: vec!["MX101".into(), "MX114".into()],
        exception: false,
        exception_reason: String::new(),
        previous_hash: None,
    }
}

/// A follow-up maintenance row six hours later, valid after
/// [`us_base_row`].
pub fn us_next_row() -> PassportRow {
    PassportRow {
        time: epoch("2017-11-20T15:00:00Z"),
        operation: "U401".into(),
        personnel: vec!["MX102".into(), "MX115".into()],
        ..us_base_row()
    }
}

/// A sustainment row at the Trekhgorny central storage site, valid as an
/// RU chain start.
pub fn ru_base_row() -> PassportRow {
    PassportRow {
        time: epoch("2018-02-01T08:00:00Z"),
        location: "TC936".into(),
        status: "AC".into(),
        secondary_component: "S201001".into(),
        llc1: "LLC101001".into(),
        llc2: "LLC201001".into(),
        operation: "R401".into(),
        personnel: vec!["T1".into(), "T2".into()],
        exception: false,
        exception_reason: String::new(),
        previous_hash: None,
    }
}

/// A safety check one hour later, valid after [`ru_base_row`].
pub fn ru_next_row() -> PassportRow {
    PassportRow {
        time: epoch("2018-02-01T09:00:00Z"),
        operation: "R403".into(),
        ..ru_base_row()
    }
}

/// One single-field (or single-aspect) mutation of a valid transition.
/// `expect` names the rule that must fire; `None` asserts the transition
/// stays clean (divergence/boundary controls).
pub struct MutationCase {
    pub label: &'static str,
    pub profile: &'static str,
    pub prev: Option<PassportRow>,
    pub next: PassportRow,
    pub expect: Option<&'static str>,
}

pub fn mutation_cases() -> Vec<MutationCase> {
    let mut cases = Vec::new();
    let minutes = 60;

    // --- US: time ordering --------------------------------------------
    let mut next = us_next_row();
    next.time = us_base_row().time;
    cases.push(MutationCase {
        label: "us: equal timestamps",
        profile: "us",
        prev: Some(us_base_row()),
        next,
        expect: Some("US-TIME-MONO"),
    });
    let mut next = us_next_row();
    next.time = us_base_row().time - 60;
    cases.push(MutationCase {
        label: "us: time runs backward",
        profile: "us",
        prev: Some(us_base_row()),
        next,
        expect: Some("US-TIME-MONO"),
    });
    let mut next = us_base_row();
    next.time = epoch("2010-01-01T00:00:00Z");
    cases.push(MutationCase {
        label: "us: row predates the profile start",
        profile: "us",
        prev: None,
        next,
        expect: Some("US-START-TIME"),
    });

    // --- US: enumerations ---------------------------------------------
    let mut next = us_next_row();
    next.location = "AREA51".into();
    cases.push(MutationCase {
        label: "us: unlisted location",
        profile: "us",
        prev: Some(us_base_row()),
        next,
        expect: Some("US-LOC-ENUM"),
    });
    let mut next = us_next_row();
    next.status = "XX".into();
    cases.push(MutationCase {
        label: "us: unlisted status",
        profile: "us",
        prev: Some(us_base_row()),
        next,
        expect: Some("US-STATUS-ENUM"),
    });
    let mut next = us_next_row();
    next.operation = "U999".into();
    cases.push(MutationCase {
        label: "us: unlisted operation",
        profile: "us",
        prev: Some(us_base_row()),
        next,
        expect: Some("US-OP-ENUM"),
    });

    // --- US: personnel -------------------------------------------------
    let mut next = us_next_row();
    next.personnel = vec![];
    cases.push(MutationCase {
        label: "us: no personnel",
        profile: "us",
        prev: Some(us_base_row()),
        next,
        expect: Some("US-PERSONNEL-NONEMPTY"),
    });
    let mut next = us_next_row();
    next.personnel = vec![String::new(), "MX115".into()];
    cases.push(MutationCase {
        label: "us: blank first personnel slot",
        profile: "us",
        prev: Some(us_base_row()),
        next,
        expect: Some("US-PERSONNEL-FIRST"),
    });
    let mut next = us_next_row();
    next.operation = "U204".into();
    next.personnel = vec!["MX102".into()];
    cases.push(MutationCase {
        label: "us: custody transfer with one person",
        profile: "us",
        prev: Some(us_base_row()),
        next,
        expect: Some("US-PERSONNEL-TWO"),
    });
    let mut next = us_next_row();
    next.operation = "U204".into();
    next.personnel = vec!["MX102".into(), "MX102".into()];
    cases.push(MutationCase {
        label: "us: custody transfer with a duplicated person",
        profile: "us",
        prev: Some(us_base_row()),
        next,
        expect: Some("US-PERSONNEL-DISTINCT"),
    });
    let mut next = us_next_row();
    next.operation = "U204".into();
    cases.push(MutationCase {
        label: "us: custody transfer with two distinct people is clean",
        profile: "us",
        prev: Some(us_base_row()),
        next,
        expect: None,
    });

    // --- US: custodian change then inventory ---------------------------
    let mut prev = us_base_row();
    prev.operation = "U208".into();
    cases.push(MutationCase {
        label: "us: custodian change followed by maintenance",
        profile: "us",
        prev: Some(prev),
        next: us_next_row(),
        expect: Some("US-CUSTODIAN-INV"),
    });
    let mut prev = us_base_row();
    prev.operation = "U208".into();
    let mut next = us_next_row();
    next.operation = "U407".into();
    cases.push(MutationCase {
        label: "us: custodian change followed by inventory is clean",
        profile: "us",
        prev: Some(prev),
        next,
        expect: None,
    });

    // --- US: LLC presence ----------------------------------------------
    let mut next = us_next_row();
    next.status = "AR".into();
    next.llc2 = String::new();
    cases.push(MutationCase {
        label: "us: active status with an empty LLC slot",
        profile: "us",
        prev: Some(us_base_row()),
        next,
        expect: Some("US-LLC-NONEMPTY"),
    });
    let mut next = us_next_row();
    next.llc1 = String::new();
    next.llc2 = String::new();
    cases.push(MutationCase {
        label: "us: inactive status tolerates empty LLC slots",
        profile: "us",
        prev: Some(us_base_row()),
        next,
        expect: None,
    });

    // --- US: schema ------------------------------------------------------
    let mut next = us_next_row();
    next.secondary_component = "COMPONENT".into();
    cases.push(MutationCase {
        label: "us: component id over width",
        profile: "us",
        prev: Some(us_base_row()),
        next,
        expect: Some("US-FIELD-SCHEMA"),
    });
    let mut next = us_next_row();
    next.exception = true;
    cases.push(MutationCase {
        label: "us: exception flag without a reason",
        profile: "us",
        prev: Some(us_base_row()),
        next,
        expect: Some("US-FIELD-SCHEMA"),
    });
    let mut next = us_next_row();
    next.exception_reason = "left in the record by mistake".into();
    cases.push(MutationCase {
        label: "us: exception reason without the flag",
        profile: "us",
        prev: Some(us_base_row()),
        next,
        expect: Some("US-FIELD-SCHEMA"),
    });

    // --- US: silo delivery window at both boundaries --------------------
    // The delivery run never leaves the base's location code, so the
    // operation-scoped window fires on a same-site leg.
    let silo = |elapsed_min: i64| -> (PassportRow, PassportRow) {
        let mut prev = us_base_row();
        prev.location = "MINOT".into();
        let mut next = us_next_row();
        next.location = "MINOT".into();
        next.operation = "U312".into();
        next.time = prev.time + elapsed_min * minutes;
        (prev, next)
    };
    let (prev, next) = silo(360);
    cases.push(MutationCase {
        label: "us: silo delivery run at the upper bound is clean",
        profile: "us",
        prev: Some(prev),
        next,
        expect: None,
    });
    let (prev, next) = silo(361);
    cases.push(MutationCase {
        label: "us: silo delivery run one minute over",
        profile: "us",
        prev: Some(prev),
        next,
        expect: Some("US-TRANSPORT-ICBM-DELIVERY"),
    });
    let (prev, next) = silo(1);
    cases.push(MutationCase {
        label: "us: silo delivery run at the lower bound is clean",
        profile: "us",
        prev: Some(prev),
        next,
        expect: None,
    });
    let mut same_site = us_next_row();
    same_site.operation = "U311".into();
    cases.push(MutationCase {
        label: "us: same-site leg without a scoped window passes any time",
        profile: "us",
        prev: Some(us_base_row()),
        next: same_site,
        expect: None,
    });

    let generic = |elapsed_min: i64| -> (PassportRow, PassportRow) {
        let mut prev = us_base_row();
        prev.location = "PANTX".into();
        let mut next = us_next_row();
        next.location = "MINOT".into();
        next.operation = "U313".into();
        next.time = prev.time + elapsed_min * minutes;
        (prev, next)
    };
    let (prev, next) = generic(719);
    cases.push(MutationCase {
        label: "us: ground route one minute under the window",
        profile: "us",
        prev: Some(prev),
        next,
        expect: Some("US-TRANSPORT-WINDOW"),
    });
    let (prev, next) = generic(720);
    cases.push(MutationCase {
        label: "us: ground route at the lower bound is clean",
        profile: "us",
        prev: Some(prev),
        next,
        expect: None,
    });
    let (prev, next) = generic(4320);
    cases.push(MutationCase {
        label: "us: ground route at the upper bound is clean",
        profile: "us",
        prev: Some(prev),
        next,
        expect: None,
    });
    let (prev, next) = generic(4321);
    cases.push(MutationCase {
        label: "us: ground route one minute over the window",
        profile: "us",
        prev: Some(prev),
        next,
        expect: Some("US-TRANSPORT-WINDOW"),
    });

    // --- US: unknown route fails closed ---------------------------------
    let mut prev = us_base_row();
    prev.location = "PANTX".into();
    let mut next = us_next_row();
    next.location = "KITSAP".into();
    next.operation = "U313".into();
    cases.push(MutationCase {
        label: "us: transport on an unconfigured route",
        profile: "us",
        prev: Some(prev),
        next,
        expect: Some("US-TRANSPORT-WINDOW"),
    });

    // --- RU: time ordering (divergence from US) -------------------------
    let mut next = ru_next_row();
    next.time = ru_base_row().time;
    cases.push(MutationCase {
        label: "ru: equal timestamps are clean",
        profile: "ru",
        prev: Some(ru_base_row()),
        next,
        expect: None,
    });
    let mut next = ru_next_row();
    next.time = ru_base_row().time - 60;
    cases.push(MutationCase {
        label: "ru: time runs backward",
        profile: "ru",
        prev: Some(ru_base_row()),
        next,
        expect: Some("RU-TIME-MONO"),
    });
    let mut next = ru_base_row();
    next.time = epoch("2010-01-01T00:00:00Z");
    cases.push(MutationCase {
        label: "ru: row predates the profile start",
        profile: "ru",
        prev: None,
        next,
        expect: Some("RU-START-TIME"),
    });

    // --- RU: enumerations ------------------------------------------------
    let mut next = ru_next_row();
    next.location = "X99999".into();
    cases.push(MutationCase {
        label: "ru: unlisted location",
        profile: "ru",
        prev: Some(ru_base_row()),
        next,
        expect: Some("RU-LOC-ENUM"),
    });
    let mut next = ru_next_row();
    next.status = "XX".into();
    cases.push(MutationCase {
        label: "ru: unlisted status",
        profile: "ru",
        prev: Some(ru_base_row()),
        next,
        expect: Some("RU-STATUS-ENUM"),
    });
    let mut next = ru_next_row();
    next.operation = "R999".into();
    cases.push(MutationCase {
        label: "ru: unlisted operation",
        profile: "ru",
        prev: Some(ru_base_row()),
        next,
        expect: Some("RU-OP-ENUM"),
    });
    let mut next = ru_next_row();
    next.personnel = vec![];
    cases.push(MutationCase {
        label: "ru: no personnel",
        profile: "ru",
        prev: Some(ru_base_row()),
        next,
        expect: Some("RU-PERSONNEL-NONEMPTY"),
    });

    // --- RU: LLC whitelist ------------------------------------------------
    let mut next = ru_next_row();
    next.llc1 = String::new();
    next.llc2 = String::new();
    cases.push(MutationCase {
        label: "ru: both LLCs empty under active status",
        profile: "ru",
        prev: Some(ru_base_row()),
        next,
        expect: Some("RU-LLC-STATUS"),
    });
    let mut next = ru_next_row();
    next.status = "RS".into();
    next.llc1 = String::new();
    next.llc2 = String::new();
    cases.push(MutationCase {
        label: "ru: both LLCs empty under reserve status is clean",
        profile: "ru",
        prev: Some(ru_base_row()),
        next,
        expect: None,
    });

    // --- RU: LLC install/exchange and removal -----------------------------
    let mut next = ru_next_row();
    next.operation = "R405".into();
    cases.push(MutationCase {
        label: "ru: LLC exchange that changes nothing",
        profile: "ru",
        prev: Some(ru_base_row()),
        next,
        expect: Some("RU-LLC-INSTALL-CHANGE"),
    });
    let mut next = ru_next_row();
    next.operation = "R405".into();
    next.llc1 = "LLC101002".into();
    cases.push(MutationCase {
        label: "ru: LLC exchange that swaps a bottle is clean",
        profile: "ru",
        prev: Some(ru_base_row()),
        next,
        expect: None,
    });
    let mut next = ru_next_row();
    next.operation = "R406".into();
    cases.push(MutationCase {
        label: "ru: LLC removal with both slots still populated",
        profile: "ru",
        prev: Some(ru_base_row()),
        next,
        expect: Some("RU-LLC-REMOVAL-EMPTY"),
    });
    let mut next = ru_next_row();
    next.operation = "R406".into();
    next.llc2 = String::new();
    cases.push(MutationCase {
        label: "ru: LLC removal that empties a slot is clean",
        profile: "ru",
        prev: Some(ru_base_row()),
        next,
        expect: None,
    });

    // --- RU: depot maintenance sited at central storage --------------------
    let mut next = ru_next_row();
    next.operation = "R402".into();
    next.location = "G44086".into();
    cases.push(MutationCase {
        label: "ru: depot maintenance at an associated unit",
        profile: "ru",
        prev: Some(ru_base_row()),
        next,
        expect: Some("RU-DEPOT-CENTRAL"),
    });
    let mut next = ru_next_row();
    next.operation = "R402".into();
    cases.push(MutationCase {
        label: "ru: depot maintenance at central storage is clean",
        profile: "ru",
        prev: Some(ru_base_row()),
        next,
        expect: None,
    });

    // --- RU: crew handover sequencing --------------------------------------
    let handover = |prev_op: &str, next_op: &str| -> (PassportRow, PassportRow) {
        let mut prev = ru_base_row();
        prev.operation = prev_op.into();
        let mut next = ru_next_row();
        next.operation = next_op.into();
        (prev, next)
    };
    let (prev, next) = handover("R205", "R303");
    cases.push(MutationCase {
        label: "ru: road-to-storage handover followed by a rail-point leg",
        profile: "ru",
        prev: Some(prev),
        next,
        expect: Some("RU-ROAD-TRANSITION"),
    });
    let (prev, next) = handover("R205", "R301");
    cases.push(MutationCase {
        label: "ru: road-to-storage handover followed by a storage leg is clean",
        profile: "ru",
        prev: Some(prev),
        next,
        expect: None,
    });
    let (prev, next) = handover("R203", "R401");
    cases.push(MutationCase {
        label: "ru: road-crew handover followed by maintenance",
        profile: "ru",
        prev: Some(prev),
        next,
        expect: Some("RU-ROAD-CREW-NEXT"),
    });
    let (prev, next) = handover("R203", "R303");
    cases.push(MutationCase {
        label: "ru: road-crew handover followed by a rail-point leg is clean",
        profile: "ru",
        prev: Some(prev),
        next,
        expect: None,
    });
    let (prev, next) = handover("R206", "R302");
    cases.push(MutationCase {
        label: "ru: storage-to-road handover followed by a delivery leg is clean",
        profile: "ru",
        prev: Some(prev),
        next,
        expect: None,
    });
    let (prev, next) = handover("R208", "R302");
    cases.push(MutationCase {
        label: "ru: deployment-to-road handover followed by a delivery leg",
        profile: "ru",
        prev: Some(prev),
        next,
        expect: Some("RU-ROAD-CREW-NEXT"),
    });
    let (prev, next) = handover("R201", "R301");
    cases.push(MutationCase {
        label: "ru: rail-crew handover followed by a ground leg",
        profile: "ru",
        prev: Some(prev),
        next,
        expect: Some("RU-RAIL-CREW-NEXT"),
    });
    let (prev, next) = handover("R201", "R312");
    cases.push(MutationCase {
        label: "ru: rail-crew handover followed by a rail leg is clean",
        profile: "ru",
        prev: Some(prev),
        next,
        expect: None,
    });

    // --- RU: rail window at both boundaries (72-80 h route) ----------------
    let rail = |elapsed_min: i64| -> (PassportRow, PassportRow) {
        let mut prev = ru_base_row();
        prev.location = "ASTRE".into();
        prev.operation = "R201".into();
        prev.status = "PR".into();
        let mut next = ru_next_row();
        next.location = "RTKOM".into();
        next.operation = "R312".into();
        next.status = "PR".into();
        next.time = prev.time + elapsed_min * minutes;
        (prev, next)
    };
    let (prev, next) = rail(4319);
    cases.push(MutationCase {
        label: "ru: rail leg one minute under 72 h",
        profile: "ru",
        prev: Some(prev),
        next,
        expect: Some("RU-TRANSPORT-WINDOW"),
    });
    let (prev, next) = rail(4320);
    cases.push(MutationCase {
        label: "ru: rail leg at exactly 72 h is clean",
        profile: "ru",
        prev: Some(prev),
        next,
        expect: None,
    });
    let (prev, next) = rail(4800);
    cases.push(MutationCase {
        label: "ru: rail leg at exactly 80 h is clean",
        profile: "ru",
        prev: Some(prev),
        next,
        expect: None,
    });
    let (prev, next) = rail(4801);
    cases.push(MutationCase {
        label: "ru: rail leg one minute over 80 h",
        profile: "ru",
        prev: Some(prev),
        next,
        expect: Some("RU-TRANSPORT-WINDOW"),
    });

    // --- RU: unknown route fails closed -------------------------------------
    let mut prev = ru_base_row();
    let mut next = ru_next_row();
    prev.location = "TC936".into();
    next.location = "VC957".into();
    next.operation = "R301".into();
    cases.push(MutationCase {
        label: "ru: transport on an unconfigured route",
        profile: "ru",
        prev: Some(prev),
        next,
        expect: Some("RU-TRANSPORT-WINDOW"),
    });

    cases
}
