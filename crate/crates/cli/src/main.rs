use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use covert_relay::config::{parse_document, validate_config, ConfigErrors, ExperimentId, RawConfig};
use covert_relay::harness::run_and_write;
use covert_relay::Error;

/// Monte Carlo and closed-form experiments for the helper-assisted covert
/// countermeasure.
#[derive(Debug, Parser)]
#[command(name = "covert-relay", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file of `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one key, applied after the config file. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Master seed (run.seed).
    #[arg(long, global = true)]
    seed: Option<String>,

    /// Output directory (run.output).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<String>,

    /// Worker threads, 0 for all cores (run.workers).
    #[arg(long, global = true)]
    workers: Option<String>,

    /// Monte Carlo trials per point (run.trials).
    #[arg(long, global = true)]
    trials: Option<String>,

    /// SNR in dB (scheme.snr_db; the sweep grid for table2 and sum-vs-snr).
    #[arg(long, global = true, value_name = "DB")]
    snr: Option<String>,

    /// False-alarm target (detector.target_pfa; table2.pfa for table2, the
    /// sweep grid for roc).
    #[arg(long, global = true)]
    pfa: Option<String>,

    /// Energy-splitting factor (scheme.alpha).
    #[arg(long, global = true)]
    alpha: Option<String>,

    /// Constellation order (scheme.m).
    #[arg(long, global = true)]
    m: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// MC error of the joint and two-stage decoders against the bound, per alpha.
    ErrorVsAlpha,
    /// Optimized error plus detection sum per SNR for both schemes.
    SumVsSnr,
    /// Optimized alphas per (SNR, false-alarm target) row.
    Table2,
    /// Detection probability against false-alarm rate.
    Roc,
    /// kNN divergence between pre and post countermeasure energies.
    Kld,
    /// Optimized sums across alphabets and large-scale offsets.
    Robustness,
    /// Helper crossover probabilities, closed form against MC.
    Crossover,
    /// Every term of both closed-form bounds.
    BoundsEval,
}

impl Command {
    fn id(self) -> ExperimentId {
        match self {
            Command::ErrorVsAlpha => ExperimentId::ErrorVsAlpha,
            Command::SumVsSnr => ExperimentId::SumVsSnr,
            Command::Table2 => ExperimentId::Table2,
            Command::Roc => ExperimentId::Roc,
            Command::Kld => ExperimentId::Kld,
            Command::Robustness => ExperimentId::Robustness,
            Command::Crossover => ExperimentId::Crossover,
            Command::BoundsEval => ExperimentId::BoundsEval,
        }
    }
}

enum Failure {
    Config(ConfigErrors),
    Run(Error),
}

impl Failure {
    fn report(&self) -> (String, u8) {
        match self {
            Failure::Config(e) => {
                let issues: Vec<String> = e
                    .0
                    .iter()
                    .map(|i| format!("key={} reason={}", i.key, i.reason))
                    .collect();
                (format!("error: kind=config {}", issues.join("; ")), 2)
            }
            Failure::Run(Error::InvalidParam { key, reason }) => {
                (format!("error: kind=config key={key} reason={reason}"), 2)
            }
            Failure::Run(e @ Error::Io { .. }) => (format!("error: kind=io detail={e}"), 1),
            Failure::Run(e) => (format!("error: kind=numerical detail={e}"), 3),
        }
    }
}

fn config_issue(key: &str, reason: impl Into<String>) -> Failure {
    Failure::Config(ConfigErrors(vec![covert_relay::config::ConfigIssue {
        key: key.into(),
        reason: reason.into(),
    }]))
}

/// Config file, then flag shorthands, then `--set` overrides.
fn raw_config(cli: &Cli, id: ExperimentId) -> Result<RawConfig, Failure> {
    let mut raw = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_issue("--config", format!("cannot read {}: {e}", path.display())))?;
            parse_document(&text).map_err(Failure::Config)?
        }
        None => RawConfig::new(),
    };
    let mut put = |k: &str, v: &Option<String>| {
        if let Some(v) = v {
            raw.insert(k.to_string(), v.clone());
        }
    };
    put("run.seed", &cli.seed);
    put("run.output", &cli.out);
    put("run.workers", &cli.workers);
    put("run.trials", &cli.trials);
    put("scheme.alpha", &cli.alpha);
    put("scheme.m", &cli.m);
    match id {
        ExperimentId::Table2 => {
            put("sweep.grid", &cli.snr);
            put("table2.pfa", &cli.pfa);
            if cli.snr.is_some() && cli.pfa.is_none() {
                put("table2.pfa", &Some("0.1".into()));
            }
        }
        ExperimentId::SumVsSnr => {
            put("sweep.grid", &cli.snr);
            put("detector.target_pfa", &cli.pfa);
        }
        ExperimentId::Roc => {
            put("scheme.snr_db", &cli.snr);
            put("sweep.grid", &cli.pfa);
        }
        _ => {
            put("scheme.snr_db", &cli.snr);
            put("detector.target_pfa", &cli.pfa);
        }
    }
    for s in &cli.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| config_issue("--set", format!("expected KEY=VALUE, got {s}")))?;
        raw.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(raw)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let id = cli.command.id();
    let raw = raw_config(cli, id)?;
    let cfg = validate_config(id, &raw).map_err(Failure::Config)?;
    let (table, path) = run_and_write(&cfg).map_err(Failure::Run)?;
    if id == ExperimentId::BoundsEval {
        print!("{}", table.to_csv());
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (line, code) = f.report();
            eprintln!("{line}");
            ExitCode::from(code)
        }
    }
}
