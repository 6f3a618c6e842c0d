//! Proof-layer behavior: round trips, the exception pathway, and the two
//! adversarial sweeps — a thousand rule-breaking witnesses that must all
//! be refused, and a thousand-plus single-byte statement mutations that
//! must all fail verification.

#[path = "support/mod.rs"]
mod support;

use passport_core::commitment::commit;
use passport_core::hash::{Digest64, PrfKey};
use passport_core::passport::{CountryProfile, Field};
use passport_core::proof::{
    prove, required_exception_openings, ruleset_id, verify, NotException, ProofMode, ProveError,
    SessionParams, Statement, Witness, PROOF_MAX_BYTES,
};
use passport_core::rules::RuleCatalog;
use rand_core::{RngCore, SeedableRng};
use support::*;

fn session() -> SessionParams {
    SessionParams::transparent("session-fixture", [0xA5; 32])
}

fn witness_key() -> PrfKey {
    PrfKey::from_bytes([0x42; 32])
}

fn statement_for(
    witness: &Witness,
    mode: ProofMode,
    catalog: &RuleCatalog,
    profile: &CountryProfile,
) -> Statement {
    let new_commitment = commit(&witness.key, witness.update_index, &witness.new_row, profile)
        .expect("fixture rows encode")
        .root;
    let prev_commitment = witness.prev_row.as_ref().map(|row| {
        commit(&witness.key, witness.update_index - 1, row, profile)
            .expect("fixture rows encode")
            .root
    });
    Statement {
        ruleset_id: ruleset_id(catalog, profile),
        prev_commitment,
        new_commitment,
        mode,
    }
}

fn us_witness() -> Witness {
    Witness {
        prev_row: Some(us_base_row()),
        new_row: us_next_row(),
        key: witness_key(),
        update_index: 1,
    }
}

#[test]
fn valid_transition_round_trips() {
    let catalog = load_catalog();
    let us = load_profile("us");
    let witness = us_witness();
    let statement = statement_for(&witness, ProofMode::Normal, &catalog, &us);
    let proof = prove(&statement, &witness, &session(), &catalog, &us).expect("clean transition");
    assert!(verify(&proof, &statement, &session()));
    assert!(proof.to_bytes().len() <= PROOF_MAX_BYTES);
}

#[test]
fn chain_start_proves_without_a_predecessor() {
    let catalog = load_catalog();
    let us = load_profile("us");
    let witness = Witness {
        prev_row: None,
        new_row: us_base_row(),
        key: witness_key(),
        update_index: 0,
    };
    let statement = statement_for(&witness, ProofMode::Normal, &catalog, &us);
    assert_eq!(statement.prev_commitment, None);
    let proof = prove(&statement, &witness, &session(), &catalog, &us).expect("chain start");
    assert!(verify(&proof, &statement, &session()));
}

#[test]
fn commitment_mismatches_are_refused() {
    let catalog = load_catalog();
    let us = load_profile("us");
    let witness = us_witness();
    let mut statement = statement_for(&witness, ProofMode::Normal, &catalog, &us);
    let mut altered = *statement.new_commitment.as_bytes();
    altered[5] ^= 0x10;
    statement.new_commitment = Digest64(altered);
    assert!(matches!(
        prove(&statement, &witness, &session(), &catalog, &us),
        Err(ProveError::CommitmentMismatch)
    ));

    // Statement says chain start, witness carries a predecessor.
    let mut shape_mismatch = statement_for(&witness, ProofMode::Normal, &catalog, &us);
    shape_mismatch.prev_commitment = None;
    assert!(matches!(
        prove(&shape_mismatch, &witness, &session(), &catalog, &us),
        Err(ProveError::CommitmentMismatch)
    ));

    // Statement built against a different ruleset is refused outright.
    let ru = load_profile("ru");
    let mut foreign = statement_for(&witness, ProofMode::Normal, &catalog, &us);
    foreign.ruleset_id = ruleset_id(&catalog, &ru);
    assert!(matches!(
        prove(&foreign, &witness, &session(), &catalog, &us),
        Err(ProveError::RulesetMismatch)
    ));
}

// ---------------------------------------------------------------------------
// Exception pathway (the delayed rail leg)
// ---------------------------------------------------------------------------

fn blizzard_witness() -> (Witness, CountryProfile) {
    let ru = load_profile("ru");
    let mut prev = ru_base_row();
    prev.location = "ASTRE".into();
    prev.status = "PR".into();
    prev.operation = "R201".into();
    prev.llc1 = String::new();
    prev.llc2 = String::new();
    let mut next = prev.clone();
    next.time = prev.time + 104 * 3600; // 24 h over the 80 h ceiling
    next.location = "RTKOM".into();
    next.operation = "R312".into();
    next.exception = true;
    next.exception_reason = "rail line closed by a multi-day blizzard; convoy held at the transfer yard".into();
    (
        Witness {
            prev_row: Some(prev),
            new_row: next,
            key: witness_key(),
            update_index: 1,
        },
        ru,
    )
}

#[test]
fn delayed_leg_fails_normal_mode_but_proves_as_exception() {
    let catalog = load_catalog();
    let (witness, ru) = blizzard_witness();

    let normal = statement_for(&witness, ProofMode::Normal, &catalog, &ru);
    match prove(&normal, &witness, &session(), &catalog, &ru) {
        Err(ProveError::RuleViolations(violations)) => {
            assert!(violations.iter().any(|v| v.rule_id == "RU-TRANSPORT-WINDOW"));
        }
        other => panic!("expected a rule refusal, got {other:?}"),
    }

    let exception = statement_for(&witness, ProofMode::Exception, &catalog, &ru);
    let proof = prove(&exception, &witness, &session(), &catalog, &ru)
        .expect("declared exception must prove");
    assert_eq!(proof.mode, ProofMode::Exception);
    assert!(verify(&proof, &exception, &session()));

    // The receipts for the two modes are distinct claims.
    assert!(!verify(&proof, &normal, &session()));
}

#[test]
fn exception_mode_requires_the_declaration() {
    let catalog = load_catalog();
    let (mut witness, ru) = blizzard_witness();
    witness.new_row.exception = false;
    witness.new_row.exception_reason = String::new();
    let statement = statement_for(&witness, ProofMode::Exception, &catalog, &ru);
    assert!(matches!(
        prove(&statement, &witness, &session(), &catalog, &ru),
        Err(ProveError::MalformedException)
    ));

    // Flag without reason is just as malformed.
    let (mut witness, ru) = blizzard_witness();
    witness.new_row.exception_reason = String::new();
    let statement = statement_for(&witness, ProofMode::Exception, &catalog, &ru);
    assert!(matches!(
        prove(&statement, &witness, &session(), &catalog, &ru),
        Err(ProveError::MalformedException)
    ));
}

#[test]
fn exception_statements_name_their_mandatory_openings() {
    let catalog = load_catalog();
    let (witness, ru) = blizzard_witness();
    let exception = statement_for(&witness, ProofMode::Exception, &catalog, &ru);
    let openings = required_exception_openings(&exception).unwrap();
    assert_eq!(
        openings,
        [Field::Exception.index(), Field::ExceptionReason.index()].into()
    );
    assert_eq!(Vec::from_iter(openings), vec![9, 10]);

    let normal = statement_for(&witness, ProofMode::Normal, &catalog, &ru);
    assert_eq!(required_exception_openings(&normal), Err(NotException));
}

// ---------------------------------------------------------------------------
// Adversarial sweeps
// ---------------------------------------------------------------------------

/// A thousand rule-breaking witnesses, each paired with a statement whose
/// commitments genuinely match the broken rows: the backend must refuse
/// every one, so no verifying receipt for a broken Normal claim exists.
#[test]
fn a_thousand_rule_breaking_witnesses_are_all_refused() {
    let catalog = load_catalog();
    let us = load_profile("us");
    let ru = load_profile("ru");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xBAD_F00D);

    let violating: Vec<MutationCase> = mutation_cases()
        .into_iter()
        .filter(|c| c.expect.is_some())
        .collect();
    assert!(violating.len() >= 25);

    let mut refused = 0u32;
    for trial in 0..1000 {
        let case = &violating[rng.next_u32() as usize % violating.len()];
        let profile = if case.profile == "us" { &us } else { &ru };
        let (prev_row, update_index) = match &case.prev {
            Some(prev) => (Some(prev.clone()), 1 + (rng.next_u32() % 5) as u64),
            None => (None, 0),
        };
        let witness = Witness {
            prev_row,
            new_row: case.next.clone(),
            key: witness_key(),
            update_index,
        };
        // Rows that break the byte schema cannot even be committed to;
        // that refusal is upstream of the rule check and equally final.
        let statement = Statement {
            ruleset_id: ruleset_id(&catalog, profile),
            prev_commitment: witness.prev_row.as_ref().map(|row| {
                commit(&witness.key, witness.update_index - 1, row, profile)
                    .map(|c| c.root)
                    .unwrap_or(Digest64([0; 64]))
            }),
            new_commitment: commit(&witness.key, witness.update_index, &witness.new_row, profile)
                .map(|c| c.root)
                .unwrap_or(Digest64([0; 64])),
            mode: ProofMode::Normal,
        };
        match prove(&statement, &witness, &session(), &catalog, profile) {
            Err(_) => refused += 1,
            Ok(proof) => panic!(
                "trial {trial} ({}) produced a verifying={} receipt for a broken witness",
                case.label,
                verify(&proof, &statement, &session())
            ),
        }
    }
    assert_eq!(refused, 1000);
}

/// Exhaustive single-byte sweep over every commitment/ruleset byte of a
/// proved statement, at several XOR masks, plus the mode byte: more than
/// a thousand mutated statements, none of which the receipt verifies.
#[test]
fn mutated_statements_never_verify() {
    let catalog = load_catalog();
    let us = load_profile("us");
    let witness = us_witness();
    let statement = statement_for(&witness, ProofMode::Normal, &catalog, &us);
    let proof = prove(&statement, &witness, &session(), &catalog, &us).unwrap();
    assert!(verify(&proof, &statement, &session()));

    let mut tried = 0u32;
    for mask in [0x01u8, 0x10, 0x80, 0xFF, 0x3C, 0xA7] {
        for position in 0..(3 * Digest64::LEN) {
            let mut mutated = statement.clone();
            let (field, offset) = match position / Digest64::LEN {
                0 => (&mut mutated.ruleset_id, position),
                1 => (
                    mutated.prev_commitment.as_mut().unwrap(),
                    position - Digest64::LEN,
                ),
                _ => (&mut mutated.new_commitment, position - 2 * Digest64::LEN),
            };
            let mut bytes = *field.as_bytes();
            bytes[offset] ^= mask;
            *field = Digest64(bytes);
            assert!(
                !verify(&proof, &mutated, &session()),
                "byte {position} under mask {mask:#04x} still verified"
            );
            tried += 1;
        }
    }
    let mut flipped_mode = statement.clone();
    flipped_mode.mode = ProofMode::Exception;
    assert!(!verify(&proof, &flipped_mode, &session()));
    let mut dropped_prev = statement.clone();
    dropped_prev.prev_commitment = None;
    assert!(!verify(&proof, &dropped_prev, &session()));
    tried += 2;
    assert!(tried > 1000, "only {tried} mutations tried");
}

#[test]
fn receipts_do_not_transfer_across_sessions() {
    let catalog = load_catalog();
    let us = load_profile("us");
    let witness = us_witness();
    let statement = statement_for(&witness, ProofMode::Normal, &catalog, &us);
    let proof = prove(&statement, &witness, &session(), &catalog, &us).unwrap();

    let other_session = SessionParams::transparent("session-fixture", [0x5A; 32]);
    assert!(!verify(&proof, &statement, &other_session));

    // Forged attestations without the key fail, whatever the digest says.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let mut forged = proof.clone();
        rng.fill_bytes(&mut forged.attestation);
        assert!(!verify(&forged, &statement, &session()));
    }
}
