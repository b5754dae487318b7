//! `omnirelay` — run messaging scenarios, audit the results, check proofs.
//!
//! Exit codes carry the judgment: 0 for a clean run, 1 for anything wrong
//! with the invocation or configuration, and 2 when the run itself is
//! tainted — an audit that found soundness violations, or a proof that does
//! not verify. Automation can therefore gate on "exit 2 means the protocol
//! (or an attacker) did something it must never do".

use clap::{Parser, Subcommand};
use omnirelay_core::audit::audit;
use omnirelay_core::proof::Proof;
use omnirelay_core::scenario::{Action, ScenarioConfig};
use omnirelay_core::scheduler::World;
use omnirelay_core::types::Hash32;
use std::fs;
use std::path::{Path, PathBuf};

/// Seed override honored when no `--seed` flag is given.
const SEED_ENV: &str = "OMNIRELAY_SEED";

#[derive(Parser)]
#[command(
    name = "omnirelay",
    version,
    about = "Deterministic cross-chain messaging simulator and auditor"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file, audit the run, and report as JSON.
    Run {
        /// Scenario file to execute.
        scenario: PathBuf,
        /// Seed override; beats the OMNIRELAY_SEED variable and the file.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the event log to this file.
        #[arg(long)]
        log_out: Option<PathBuf>,
        /// Write the audit JSON here (stdout then gets a one-line summary).
        #[arg(long)]
        audit_out: Option<PathBuf>,
    },
    /// Verify an encoded inclusion proof file against a commitment root.
    VerifyProof {
        /// File holding the wire-encoded proof bytes.
        proof: PathBuf,
        /// Expected root, 64 hex characters.
        root: String,
    },
    /// Parse every scenario file in a directory and summarize it.
    ListScenarios {
        /// Directory to scan for `.scn` files.
        dir: PathBuf,
    },
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Usage problems are exit 1 here; keep clap's exit 0 for --help.
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return 1;
        }
        Err(e) => {
            // Help or version text; a closed pager is not worth reporting.
            use std::io::Write;
            let _ = write!(std::io::stdout(), "{e}");
            return 0;
        }
    };
    match cli.command {
        Command::Run { scenario, seed, log_out, audit_out } => {
            run_scenario(&scenario, seed, log_out.as_deref(), audit_out.as_deref())
        }
        Command::VerifyProof { proof, root } => verify_proof(&proof, &root),
        Command::ListScenarios { dir } => list_scenarios(&dir),
    }
}

fn fail(msg: impl std::fmt::Display) -> i32 {
    eprintln!("omnirelay: {msg}");
    1
}

/// Print one line to stdout, treating a vanished reader (`head`, a pager
/// closed early) as a normal way for the run to end rather than a panic.
fn emit(line: impl std::fmt::Display) {
    use std::io::Write;
    if writeln!(std::io::stdout(), "{line}").is_err() {
        // 128 + SIGPIPE, the status the default signal disposition yields.
        std::process::exit(141);
    }
}

fn seed_from_env() -> Result<Option<u64>, String> {
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| format!("{SEED_ENV} must be an unsigned integer, got `{raw}`")),
        Err(_) => Ok(None),
    }
}

fn run_scenario(
    path: &Path,
    seed_flag: Option<u64>,
    log_out: Option<&Path>,
    audit_out: Option<&Path>,
) -> i32 {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(format_args!("{}: {e}", path.display())),
    };
    let config = match ScenarioConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => return fail(format_args!("{}: {e}", path.display())),
    };
    let seed = match seed_flag {
        Some(s) => Some(s),
        None => match seed_from_env() {
            Ok(s) => s,
            Err(e) => return fail(e),
        },
    };

    let mut world = World::build(&config, seed);
    if let Err(e) = world.run() {
        return fail(format_args!("{}: {e}", config.name));
    }
    let report = audit(&world);

    if let Some(out) = log_out {
        if let Err(e) = fs::write(out, world.log.render()) {
            return fail(format_args!("{}: {e}", out.display()));
        }
    }
    let json = report.to_json();
    match audit_out {
        Some(out) => {
            if let Err(e) = fs::write(out, format!("{json}\n")) {
                return fail(format_args!("{}: {e}", out.display()));
            }
            emit(format_args!(
                "{}: {} sent, {} delivered, {} violations, {} misses",
                report.scenario,
                report.messages_sent,
                report.messages_delivered,
                report.soundness_violations.len(),
                report.liveness_misses.len(),
            ));
        }
        None => emit(&json),
    }
    if report.sound() {
        0
    } else {
        2
    }
}

fn verify_proof(path: &Path, root_hex: &str) -> i32 {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) => return fail(format_args!("{}: {e}", path.display())),
    };
    let Some(root) = Hash32::from_hex(root_hex) else {
        return fail(format_args!("root must be 64 hex characters, got `{root_hex}`"));
    };
    let proof = match Proof::decode(&bytes) {
        Ok(p) => p,
        Err(e) => {
            emit(format_args!("invalid: {}", e.code()));
            return 2;
        }
    };
    match proof.verify(root) {
        Ok(value) => {
            emit(format_args!(
                "valid: key {} proves value {}",
                hex::encode(&proof.key),
                hex::encode(value)
            ));
            0
        }
        Err(e) => {
            emit(format_args!("invalid: {}", e.code()));
            2
        }
    }
}

fn list_scenarios(dir: &Path) -> i32 {
    let entries = match fs::read_dir(dir) {
        Ok(it) => it,
        Err(e) => return fail(format_args!("{}: {e}", dir.display())),
    };
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "scn"))
        .collect();
    files.sort();

    let mut broken = 0;
    for file in &files {
        let short = file.file_name().unwrap_or_default().to_string_lossy();
        let parsed = fs::read_to_string(file)
            .map_err(|e| e.to_string())
            .and_then(|t| ScenarioConfig::parse(&t).map_err(|e| e.to_string()));
        match parsed {
            Ok(c) => {
                let sends = c
                    .script
                    .iter()
                    .filter(|e| {
                        matches!(e.action, Action::Send { .. } | Action::BridgeLock { .. })
                    })
                    .count();
                emit(format_args!(
                    "{short}: {} ({} chains, {} messages, {} ticks, oracle {}, relayer {}{})",
                    c.name,
                    c.chains.len(),
                    sends,
                    c.ticks,
                    c.oracle_mode.as_str(),
                    c.relayer_mode.as_str(),
                    if c.bridge.is_some() { ", bridge" } else { "" },
                ));
            }
            Err(e) => {
                eprintln!("{short}: {e}");
                broken += 1;
            }
        }
    }
    if broken > 0 {
        1
    } else {
        0
    }
}
