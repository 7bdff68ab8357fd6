//! `simplex-lab`: batch experiments with CSV, JSON and SVG artifacts.

/// `println!` that stops quietly when stdout is closed.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

mod artifacts;
mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use simplex_lab::audit::AuditConstants;

use artifacts::Artifacts;
use commands::*;
use config::{config_hash, given_flags, resolve, ExperimentConfig, Failure};

#[derive(Debug, Parser)]
#[command(name = "simplex-lab", version, about = "Simplex operator experiments")]
struct Cli {
    /// JSON config with `subcommand` and `params`; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, default `out/<subcommand>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exit 1 when the experiment's acceptance threshold fails.
    #[arg(long, global = true)]
    check: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enumerate trees and report region coverage.
    Trees(TreesArgs),
    /// Check the partition of unity and the telescoping identity.
    Partition(PartitionArgs),
    /// Apply one operator to random band-limited inputs.
    Apply(ApplyArgs),
    /// Hoelder ratio ensembles across grid sizes.
    NormScan(NormScanArgs),
    /// Truncated chirp sweep for the trilinear forms.
    Chirp(ChirpArgs),
    /// Build a lacunary tile family and check the rank-1 condition.
    Tiles(TilesArgs),
    /// Run the audit ensembles against the frozen constants, or recalibrate them.
    Audit(AuditArgs),
    /// Decay of the delicate Bessel sums.
    Bessel(BesselArgs),
    /// Solve the AKNS system and compare with the Carleson bound.
    Akns(AknsArgs),
    /// Run the acceptance criteria.
    Selfcheck(SelfcheckArgs),
    /// Run whatever subcommand the `--config` file names.
    Run,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    config: serde_json::Value,
    config_hash: String,
    constants_version: Option<u32>,
    wall_time_seconds: f64,
    artifacts: Vec<String>,
    status: &'static str,
}

struct Global {
    file: Option<ExperimentConfig>,
    out: Option<PathBuf>,
    check: bool,
}

fn drive<E: Experiment>(g: &Global, flags: serde_json::Map<String, serde_json::Value>) -> Result<bool, Failure> {
    if let Some(f) = &g.file {
        if f.subcommand != E::NAME {
            return Err(Failure::Config(format!("config is for `{}`, not `{}`", f.subcommand, E::NAME)));
        }
    }
    let exp: E = resolve(g.file.as_ref().map(|f| &f.params), flags)?;
    let resolved = serde_json::to_value(&exp).map_err(|e| Failure::Config(e.to_string()))?;
    let dir = g.out.clone().or_else(|| g.file.as_ref().and_then(|f| f.output.clone())).unwrap_or_else(|| PathBuf::from("out").join(E::NAME));
    let mut out = Artifacts::new(&dir)?;
    let start = Instant::now();
    let verdict = exp.run(&mut out);
    let wall = start.elapsed().as_secs_f64();
    let status = match &verdict {
        Ok(Some(true)) => "pass",
        Ok(Some(false)) => "fail",
        Ok(None) => "done",
        Err(_) => "error",
    };
    let manifest = Manifest {
        tool: "simplex-lab",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: E::NAME,
        config_hash: config_hash(E::NAME, &resolved),
        config: resolved,
        constants_version: AuditConstants::load().ok().map(|k| k.version),
        wall_time_seconds: wall,
        artifacts: out.written.clone(),
        status,
    };
    out.json("manifest.json", &manifest)?;
    let check = g.check || g.file.as_ref().is_some_and(|f| f.check) || E::NAME == "selfcheck";
    let verdict = verdict?;
    Ok(!check || verdict != Some(false))
}

fn dispatch(cli: Cli) -> Result<bool, Failure> {
    let file = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let g = Global { file, out: cli.out, check: cli.check };
    match cli.command {
        Command::Trees(a) => drive::<TreesConfig>(&g, given_flags(&a)),
        Command::Partition(a) => drive::<PartitionConfig>(&g, given_flags(&a)),
        Command::Apply(a) => drive::<ApplyConfig>(&g, given_flags(&a)),
        Command::NormScan(a) => drive::<NormScanCmd>(&g, given_flags(&a)),
        Command::Chirp(a) => drive::<ChirpCmd>(&g, given_flags(&a)),
        Command::Tiles(a) => drive::<TilesCmd>(&g, given_flags(&a)),
        Command::Audit(a) => drive::<AuditCmd>(&g, given_flags(&a)),
        Command::Bessel(a) => drive::<BesselCmd>(&g, given_flags(&a)),
        Command::Akns(a) => drive::<AknsCmd>(&g, given_flags(&a)),
        Command::Selfcheck(a) => drive::<SelfcheckCmd>(&g, given_flags(&a)),
        Command::Run => {
            let name = match &g.file {
                Some(f) => f.subcommand.clone(),
                None => return Err(Failure::Config("`run` needs --config".into())),
            };
            let none = serde_json::Map::new();
            match name.as_str() {
                "trees" => drive::<TreesConfig>(&g, none),
                "partition" => drive::<PartitionConfig>(&g, none),
                "apply" => drive::<ApplyConfig>(&g, none),
                "norm-scan" => drive::<NormScanCmd>(&g, none),
                "chirp" => drive::<ChirpCmd>(&g, none),
                "tiles" => drive::<TilesCmd>(&g, none),
                "audit" => drive::<AuditCmd>(&g, none),
                "bessel" => drive::<BesselCmd>(&g, none),
                "akns" => drive::<AknsCmd>(&g, none),
                "selfcheck" => drive::<SelfcheckCmd>(&g, none),
                other => Err(Failure::Config(format!("unknown subcommand `{other}`"))),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("acceptance check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
