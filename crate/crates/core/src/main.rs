use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use halfplane::cli::{run_suite, ConfigError, Report, RunConfig, Suite, CONFIG_ENV};

#[derive(Parser)]
#[command(name = "halfplane", version, about = "Checks for the tree, cheese, unit and cocycle calculus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args, Default)]
struct Flags {
    /// residue characteristic (q = p)
    #[arg(long, global = true, visible_alias = "q")]
    p: Option<u32>,
    #[arg(long, global = true)]
    precision: Option<u32>,
    #[arg(long, global = true, visible_alias = "n")]
    depth: Option<u32>,
    #[arg(long, global = true)]
    d: Option<u64>,
    #[arg(long, global = true)]
    e: Option<u64>,
    #[arg(long, global = true)]
    level: Option<u32>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// write the JSON-lines report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// print PASS/FAIL per check instead of JSON
    #[arg(long, global = true)]
    summary: bool,
    /// JSON file with default settings
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    Tree,
    Measures,
    Cheese,
    Units,
    Cocycle {
        #[command(subcommand)]
        action: Option<CocycleAction>,
    },
    Chars,
    Amalgam,
    #[command(name = "theorem-a")]
    TheoremA,
    /// every suite in turn
    All,
}

#[derive(Subcommand)]
enum CocycleAction {
    Build,
    /// rerun a saved report and compare
    Verify { input: PathBuf },
}

fn config(flags: &Flags) -> Result<RunConfig, ConfigError> {
    let mut c = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
                path: path.display().to_string(),
                msg: e.to_string(),
            })?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(v) = flags.$f { c.$f = v; })* };
    }
    set!(p, precision, depth, level, samples, seed);
    if flags.d.is_some() {
        c.d = flags.d;
    }
    if flags.e.is_some() {
        c.e = flags.e;
    }
    c.out = flags.out.clone();
    c.validate()?;
    Ok(c)
}

fn emit(reports: &[Report], flags: &Flags) -> anyhow::Result<()> {
    let text: String = reports
        .iter()
        .map(|r| if flags.summary { r.summary() } else { r.to_json_lines() })
        .collect();
    match &flags.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    let usage = |e: ConfigError| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    };
    if let Command::Cocycle { action: Some(CocycleAction::Verify { input }) } = &cli.command {
        let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
        let saved = match Report::from_json_lines(&text) {
            Ok(r) => r,
            Err(e) => return Ok(usage(e)),
        };
        let fresh = match run_suite(saved.suite, &saved.config) {
            Ok(r) => r,
            Err(e) => return Ok(usage(e)),
        };
        let same = fresh.to_json_lines() == saved.to_json_lines();
        if !same {
            eprintln!("replayed report differs from {}", input.display());
        }
        emit(std::slice::from_ref(&fresh), &cli.flags)?;
        return Ok(ExitCode::from(u8::from(!(same && fresh.passed()))));
    }
    let cfg = match config(&cli.flags) {
        Ok(c) => c,
        Err(e) => return Ok(usage(e)),
    };
    let suites: Vec<Suite> = match &cli.command {
        Command::Tree => vec![Suite::Tree],
        Command::Measures => vec![Suite::Measures],
        Command::Cheese => vec![Suite::Cheese],
        Command::Units => vec![Suite::Units],
        Command::Cocycle { .. } => vec![Suite::Cocycle],
        Command::Chars => vec![Suite::Chars],
        Command::Amalgam => vec![Suite::Amalgam],
        Command::TheoremA => vec![Suite::TheoremA],
        Command::All => Suite::ALL.to_vec(),
    };
    let mut reports = Vec::new();
    for s in suites {
        match run_suite(s, &cfg) {
            Ok(r) => reports.push(r),
            Err(e) => return Ok(usage(e)),
        }
    }
    emit(&reports, &cli.flags)?;
    Ok(ExitCode::from(u8::from(!reports.iter().all(Report::passed))))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
