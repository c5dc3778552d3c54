//! Batch front end for the construction engine.
//!
//! Usage:
//!
//! ```text
//! sidonlab <subcommand> --config <path> [--out <dir>] [--precision <digits>]
//!          [--seed <u64>] [--budget-floors <n>] [--stage-cap <n>] [--quiet]
//! ```
//!
//! Subcommands: `stages`, `sidon`, `theorem3`, `mixing`, `poisson-exact`,
//! `poisson-mc`, `asymmetry`, `oracle-check`.
//!
//! Exit codes: 0 success; 1 invariant violation detected (Sidon violation,
//! oracle mismatch, exactness guard); 2 configuration error; 3 resource
//! limit.

use std::path::PathBuf;

pub mod commands;
pub mod config;
pub mod report;

use commands::{Ctx, RunError};
use config::RunConfig;
use report::ReportWriter;

const USAGE: &str = "usage: sidonlab <subcommand> --config <path> [--out <dir>] \
[--precision <digits>] [--seed <u64>] [--budget-floors <n>] [--stage-cap <n>] [--quiet]
subcommands: stages | sidon | theorem3 | mixing | poisson-exact | poisson-mc | asymmetry | oracle-check";

#[derive(Debug)]
struct Flags {
    subcommand: String,
    config: Option<PathBuf>,
    out: PathBuf,
    precision: Option<u32>,
    seed: Option<u64>,
    budget_floors: Option<u64>,
    stage_cap: Option<u32>,
    quiet: bool,
}

fn parse_flags(args: &[String]) -> Result<Flags, String> {
    let mut it = args.iter();
    let subcommand = it.next().ok_or_else(|| USAGE.to_string())?.clone();
    if subcommand == "--help" || subcommand == "-h" || subcommand == "help" {
        return Err(USAGE.to_string());
    }
    let mut flags = Flags {
        subcommand,
        config: None,
        out: PathBuf::from("out"),
        precision: None,
        seed: None,
        budget_floors: None,
        stage_cap: None,
        quiet: false,
    };
    while let Some(arg) = it.next() {
        let mut value = |what: &str| -> Result<String, String> {
            it.next()
                .cloned()
                .ok_or_else(|| format!("flag {what} needs a value"))
        };
        match arg.as_str() {
            "--config" => flags.config = Some(PathBuf::from(value("--config")?)),
            "--out" => flags.out = PathBuf::from(value("--out")?),
            "--precision" => {
                flags.precision = Some(
                    value("--precision")?
                        .parse()
                        .map_err(|_| "precision must be a positive integer".to_string())?,
                )
            }
            "--seed" => {
                flags.seed = Some(
                    value("--seed")?
                        .parse()
                        .map_err(|_| "seed must be a 64-bit unsigned integer".to_string())?,
                )
            }
            "--budget-floors" => {
                flags.budget_floors = Some(
                    value("--budget-floors")?
                        .parse()
                        .map_err(|_| "budget-floors must be an unsigned integer".to_string())?,
                )
            }
            "--stage-cap" => {
                flags.stage_cap = Some(
                    value("--stage-cap")?
                        .parse()
                        .map_err(|_| "stage-cap must be a positive integer".to_string())?,
                )
            }
            "--quiet" => flags.quiet = true,
            other => return Err(format!("unknown flag {other:?}\n{USAGE}")),
        }
    }
    Ok(flags)
}

fn run_command(flags: &Flags) -> Result<i32, RunError> {
    let config_path = flags
        .config
        .as_ref()
        .ok_or_else(|| RunError::Config(format!("--config is required\n{USAGE}")))?;
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        RunError::Config(format!("cannot read config {}: {e}", config_path.display()))
    })?;
    let cfg = RunConfig::parse(&text)?;
    let tower = cfg.tower(flags.stage_cap)?;
    commands::validate_set_references(&cfg)?;

    let precision = flags.precision.or(cfg.precision).unwrap_or(12);
    if !(1..=200).contains(&precision) {
        return Err(RunError::Config(
            "precision must be between 1 and 200 significant digits".into(),
        ));
    }
    let budget_floors = flags.budget_floors.or(cfg.budget_floors).unwrap_or(100_000);
    let writer = ReportWriter::new(&flags.out, flags.quiet)?;

    if !flags.quiet && !tower.params().sidon_hypothesis_satisfied() {
        if let sidonlab_core::CutRule::Sidon { d } = &tower.params().rule {
            eprintln!(
                "warning: sidon rule with d = {d} (<= 10): outside the expected single-column regime"
            );
        }
    }

    let mut ctx = Ctx {
        cfg: &cfg,
        tower,
        precision,
        seed_override: flags.seed,
        budget_floors,
        writer,
    };

    match flags.subcommand.as_str() {
        "stages" => commands::cmd_stages(&mut ctx),
        "sidon" => commands::cmd_sidon(&mut ctx),
        "theorem3" => commands::cmd_theorem3(&mut ctx),
        "mixing" => commands::cmd_mixing(&mut ctx),
        "poisson-exact" => commands::cmd_poisson_exact(&mut ctx),
        "poisson-mc" => commands::cmd_poisson_mc(&mut ctx),
        "asymmetry" => commands::cmd_asymmetry(&mut ctx),
        "oracle-check" => commands::cmd_oracle_check(&mut ctx),
        other => Err(RunError::Config(format!(
            "unknown subcommand {other:?}\n{USAGE}"
        ))),
    }
}

/// Entry point shared by the binary and the test suite. Returns the
/// process exit code.
pub fn run(args: &[String]) -> i32 {
    let flags = match parse_flags(args) {
        Ok(f) => f,
        Err(msg) => {
            eprintln!("{msg}");
            return 2;
        }
    };
    match run_command(&flags) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.exit_code()
        }
    }
}
