//! `passport-sim`: command-line front end for the warhead-passport engine.
//!
//! Subcommands: `run` (drive a scenario file and write both transcripts),
//! `hash` (digest utility for the engine's hash functions),
//! `estimate-storage` (archive-growth projection), and `report`
//! (summarize a transcript).
//!
//! Exit codes are part of the contract: 0 on success, 1 when a run or
//! transcript shows a verification/compliance failure, 2 on usage or
//! I/O errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use passport_core::hash::{combined_hash_with, gost94, sha256, GostParamSet};
use passport_core::passport::{CountryProfile, ProfileError};
use passport_core::protocol::TranscriptError;
use passport_core::rules::{CatalogError, RuleCatalog};
use passport_core::{run_scenario, FaultPlan, Ledger, Scenario, ScenarioError, TranscriptBundle};
use passport_cli::estimate::{StorageEstimate, DEFAULT_COMMITMENT_BYTES, DEFAULT_RESPONSE_BYTES};
use passport_cli::report::TranscriptReport;
use thiserror::Error;

#[derive(Parser)]
#[command(
    name = "passport-sim",
    version,
    about = "Two-party warhead-passport verification: scenario runner, hash utility, storage estimator, and transcript reports"
)]
struct Cli {
    #[command(flatten)]
    globals: Globals,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Globals {
    /// Directory holding the country profiles (us.json, ru.json). The rule
    /// catalog is looked up as rules.json inside it, falling back to
    /// ../catalog/rules.json next to it.
    #[arg(
        long,
        global = true,
        env = "PASSPORT_PROFILE_DIR",
        default_value = "fixtures/profiles",
        value_name = "DIR"
    )]
    profile_dir: PathBuf,

    /// Override the scenario's random seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Directory transcripts are written to.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file; write both transcripts and a summary.
    Run {
        /// Scenario description (JSON).
        scenario: PathBuf,
        /// Channel fault plan (JSON), overriding the scenario's own.
        #[arg(long, value_name = "PATH")]
        faults: Option<PathBuf>,
    },
    /// Hash hex or file input with the engine's hash functions.
    Hash {
        /// Which digest to compute.
        #[arg(value_enum)]
        algorithm: HashAlgorithm,
        /// Hex-encoded input (may be empty for the empty message).
        #[arg(long, value_name = "HEX")]
        hex: Option<String>,
        /// Read input bytes from a file instead.
        #[arg(long, value_name = "PATH", conflicts_with = "hex")]
        file: Option<PathBuf>,
        /// Substitution boxes for the 1994 GOST half.
        #[arg(long, value_enum, default_value_t = ParamSetArg::Cryptopro)]
        paramset: ParamSetArg,
    },
    /// Project archive growth for an update rate and a horizon.
    EstimateStorage {
        /// Passport updates committed per day.
        updates_per_day: u64,
        /// Deployment horizon in years (365-day years).
        years: u64,
        /// Stored size of one commitment record.
        #[arg(long, default_value_t = DEFAULT_COMMITMENT_BYTES, value_name = "BYTES")]
        commitment_bytes: u64,
        /// Stored size of one challenge response.
        #[arg(long, default_value_t = DEFAULT_RESPONSE_BYTES, value_name = "BYTES")]
        response_bytes: u64,
    },
    /// Summarize a transcript: record counts and the link graph.
    Report {
        /// Transcript file (JSON lines), one party's ledger.
        transcript: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum HashAlgorithm {
    /// SHA-256 (FIPS 180-4).
    Sha256,
    /// GOST R 34.11-94.
    Gost94,
    /// SHA-256 ‖ GOST R 34.11-94 combiner (64 bytes).
    Combined,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParamSetArg {
    /// Test parameters from the original standard (RFC 5831).
    Test,
    /// CryptoPro parameters (RFC 4357); the engine's default.
    Cryptopro,
}

impl From<ParamSetArg> for GostParamSet {
    fn from(value: ParamSetArg) -> GostParamSet {
        match value {
            ParamSetArg::Test => GostParamSet::TestParamSet,
            ParamSetArg::Cryptopro => GostParamSet::CryptoProParamSet,
        }
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} does not parse: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("input is not hex: {0}")]
    BadHex(hex::FromHexError),
    #[error("hash needs an input: pass --hex or --file")]
    NoInput,
    #[error("profile {path} is invalid: {source}")]
    Profile {
        path: PathBuf,
        source: ProfileError,
    },
    #[error("rule catalog {path} is invalid: {source}")]
    Catalog { path: PathBuf, source: CatalogError },
    #[error("no country profiles found in {0}")]
    NoProfiles(PathBuf),
    #[error("no rule catalog at {tried_first} or {tried_second}")]
    NoCatalog {
        tried_first: PathBuf,
        tried_second: PathBuf,
    },
    #[error(transparent)]
    Scenario(ScenarioError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
}

impl CliError {
    /// 1 for failures of the run itself (the tooling worked; the protocol
    /// or its liveness did not), 2 for usage and I/O problems.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Scenario(ScenarioError::Liveness { .. })
            | CliError::Scenario(ScenarioError::Protocol(_)) => 1,
            _ => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run { scenario, faults } => cmd_run(&cli.globals, &scenario, faults.as_deref()),
        Command::Hash {
            algorithm,
            hex,
            file,
            paramset,
        } => cmd_hash(algorithm, hex.as_deref(), file.as_deref(), paramset),
        Command::EstimateStorage {
            updates_per_day,
            years,
            commitment_bytes,
            response_bytes,
        } => {
            println!(
                "{}",
                StorageEstimate::new(updates_per_day, years, commitment_bytes, response_bytes)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { transcript } => cmd_report(&transcript),
    }
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

fn cmd_run(
    globals: &Globals,
    scenario_path: &Path,
    faults_path: Option<&Path>,
) -> Result<ExitCode, CliError> {
    let mut scenario = Scenario::load(scenario_path).map_err(|err| match err {
        ScenarioError::Io(source) => CliError::Read {
            path: scenario_path.to_path_buf(),
            source,
        },
        other => CliError::Scenario(other),
    })?;
    if let Some(seed) = globals.seed {
        scenario.seed = seed;
    }
    let faults: Option<FaultPlan> = match faults_path {
        Some(path) => Some(read_json(path)?),
        None => None,
    };

    let profiles = load_profiles(&globals.profile_dir)?;
    let catalog = load_catalog(&globals.profile_dir)?;

    let bundle =
        run_scenario(&scenario, &profiles, &catalog, faults).map_err(CliError::Scenario)?;

    std::fs::create_dir_all(&globals.out_dir).map_err(|source| CliError::Write {
        path: globals.out_dir.clone(),
        source,
    })?;
    let us_path = write_ledger(&globals.out_dir, &bundle.scenario_id, "us", &bundle.us)?;
    let ru_path = write_ledger(&globals.out_dir, &bundle.scenario_id, "ru", &bundle.ru)?;
    let summary_path = globals
        .out_dir
        .join(format!("{}.summary.json", bundle.scenario_id));
    let summary_json = serde_json::to_string_pretty(&bundle.summary).expect("summary serializes");
    std::fs::write(&summary_path, summary_json + "\n").map_err(|source| CliError::Write {
        path: summary_path.clone(),
        source,
    })?;

    print_run_summary(&bundle, &us_path, &ru_path, &summary_path);
    if bundle.summary.compliance_ok {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn print_run_summary(bundle: &TranscriptBundle, us: &Path, ru: &Path, summary: &Path) {
    println!("scenario:    {}", bundle.scenario_id);
    println!("steps:       {}", bundle.summary.steps);
    println!(
        "us ledger:   {} records -> {}",
        bundle.us.len(),
        us.display()
    );
    println!(
        "ru ledger:   {} records -> {}",
        bundle.ru.len(),
        ru.display()
    );
    println!("summary:     {}", summary.display());
    println!(
        "compliance:  {}",
        if bundle.summary.compliance_ok {
            "ok"
        } else {
            "FAILED"
        }
    );
}

fn write_ledger(
    out_dir: &Path,
    scenario_id: &str,
    party: &str,
    ledger: &Ledger,
) -> Result<PathBuf, CliError> {
    let path = out_dir.join(format!("{scenario_id}.{party}.jsonl"));
    std::fs::write(&path, ledger.to_jsonl()).map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Every `*.json` in the profile directory except `rules.json` is read as
/// a country profile, keyed by file stem (scenarios name profiles by stem).
fn load_profiles(dir: &Path) -> Result<BTreeMap<String, CountryProfile>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|source| CliError::Read {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut profiles = BTreeMap::new();
    for entry in entries {
        let path = entry
            .map_err(|source| CliError::Read {
                path: dir.to_path_buf(),
                source,
            })?
            .path();
        if path.extension().is_none_or(|ext| ext != "json") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if stem == "rules" {
            continue;
        }
        let profile = CountryProfile::load(&path).map_err(|source| CliError::Profile {
            path: path.clone(),
            source,
        })?;
        profiles.insert(stem.to_string(), profile);
    }
    if profiles.is_empty() {
        return Err(CliError::NoProfiles(dir.to_path_buf()));
    }
    Ok(profiles)
}

fn load_catalog(profile_dir: &Path) -> Result<RuleCatalog, CliError> {
    let inside = profile_dir.join("rules.json");
    let sibling = profile_dir.join("../catalog/rules.json");
    let path = if inside.exists() {
        inside
    } else if sibling.exists() {
        sibling
    } else {
        return Err(CliError::NoCatalog {
            tried_first: inside,
            tried_second: sibling,
        });
    };
    RuleCatalog::load(&path).map_err(|source| CliError::Catalog { path, source })
}

// ---------------------------------------------------------------------------
// hash
// ---------------------------------------------------------------------------

fn cmd_hash(
    algorithm: HashAlgorithm,
    hex_input: Option<&str>,
    file: Option<&Path>,
    paramset: ParamSetArg,
) -> Result<ExitCode, CliError> {
    let data = match (hex_input, file) {
        (Some(text), None) => hex::decode(text.trim()).map_err(CliError::BadHex)?,
        (None, Some(path)) => std::fs::read(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?,
        _ => return Err(CliError::NoInput),
    };
    let digest = match algorithm {
        HashAlgorithm::Sha256 => sha256(&data).to_hex(),
        HashAlgorithm::Gost94 => gost94(paramset.into(), &data).to_hex(),
        HashAlgorithm::Combined => combined_hash_with(paramset.into(), &data).to_hex(),
    };
    println!("{digest}");
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn cmd_report(transcript: &Path) -> Result<ExitCode, CliError> {
    let text = std::fs::read_to_string(transcript).map_err(|source| CliError::Read {
        path: transcript.to_path_buf(),
        source,
    })?;
    let ledger = Ledger::from_jsonl(&text)?;
    let report = TranscriptReport::scan(&ledger);
    println!("transcript:          {}", transcript.display());
    println!("{report}");
    if report.clean() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
