//! `collapse-forge`: forge, probe, analyze, report and verify.
//!
//! Exit codes: 0 success, 1 failed verification (or a strong Lucas pass on a
//! Miller-Rabin resistant record), 2 usage or input errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use collapse_core::dataset::{
    load_dataset, save_dataset, utc_from_unix, utc_now, DatasetFile, DatasetMeta, LoadMode,
};
use collapse_core::forge::{forge_sweep, Budget, ForgeMode, SweepConfig, DEFAULT_BASES};
use collapse_core::lucasprobe::{guard_measurement, measure_collapse};
use collapse_core::parallel::Executor;
use collapse_core::{analyzer, verify, Error, Strategy};
use serde_json::json;

pub const SEED_ENV: &str = "COLLAPSE_FORGE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    Forge,
    Probe,
    Analyze,
    Report,
    Verify,
}

#[derive(Debug, Parser)]
#[command(name = "collapse-forge", version, about = "Engineered Carmichael numbers and U-bit collapse")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Subcommand,
    /// Range of the p2 multiplier, `A..B` (inclusive) or a single value.
    #[arg(long = "k", value_parser = parse_range, default_value = "2..50")]
    pub k: (u64, u64),
    /// Range of the p3 multiplier.
    #[arg(long = "M", value_parser = parse_range, default_value = "2..500")]
    pub m: (u64, u64),
    /// Target bit length of n.
    #[arg(long, default_value_t = 350)]
    pub bits: u32,
    /// Miller-Rabin bases: a comma-separated list, or `A..B` for every prime in the range.
    #[arg(long, value_parser = parse_bases)]
    pub bases: Option<Vec<u64>>,
    /// Stop after N records.
    #[arg(long)]
    pub count: Option<u64>,
    /// Stop after S seconds.
    #[arg(long)]
    pub seconds: Option<f64>,
    /// Seed; falls back to $COLLAPSE_FORGE_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    /// Sample the Korselt class uniformly instead of steering it toward Miller-Rabin resistance.
    #[arg(long)]
    pub no_bias: bool,
    /// Keep every Carmichael number, not only Miller-Rabin resistant ones (implies --no-bias).
    #[arg(long)]
    pub all_carmichael: bool,
    /// Add records to an existing output dataset.
    #[arg(long)]
    pub append: bool,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long = "out")]
    pub output: Option<PathBuf>,
    /// Reject unknown dataset fields instead of preserving them.
    #[arg(long)]
    pub strict: bool,
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (s, s),
    };
    let a: u64 = a.trim().parse().map_err(|e| format!("bad range start `{a}`: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("bad range end `{b}`: {e}"))?;
    if a > b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok((a, b))
}

fn parse_bases(s: &str) -> Result<Vec<u64>, String> {
    let bases: Vec<u64> = if s.contains("..") {
        let (a, b) = parse_range(s)?;
        (a.max(2)..=b)
            .filter(|&x| collapse_core::oracle::is_prime_trial(x))
            .collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<u64>().map_err(|e| format!("bad base `{t}`: {e}")))
            .collect::<Result<_, _>>()?
    };
    if bases.is_empty() || bases.iter().any(|&b| b < 2) {
        return Err("bases must be a non-empty list of integers >= 2".into());
    }
    Ok(bases)
}

impl Cli {
    fn seed(&self) -> anyhow::Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .with_context(|| format!("{SEED_ENV}={v} is not a u64")),
            Err(_) => Ok(0),
        }
    }

    fn load_mode(&self) -> LoadMode {
        if self.strict {
            LoadMode::Strict
        } else {
            LoadMode::Compat
        }
    }

    fn input(&self) -> anyhow::Result<&Path> {
        match &self.input {
            Some(p) => Ok(p),
            None => bail!(Usage("--in PATH is required".into())),
        }
    }

    fn strategy(&self) -> Strategy {
        Strategy::from_workers(self.workers as usize)
    }
}

/// Marks errors that should exit with status 2 before any work starts.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// `created_utc` honours `SOURCE_DATE_EPOCH` so that repeated runs can be
/// byte-identical.
fn created_utc() -> String {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok())
        .and_then(utc_from_unix)
        .unwrap_or_else(utc_now)
}

fn cmd_forge(cli: &Cli) -> anyhow::Result<i32> {
    let Some(out) = &cli.output else {
        bail!(Usage("forge needs --out PATH".into()));
    };
    let seed = cli.seed()?;
    let bases = cli.bases.clone().unwrap_or_else(|| DEFAULT_BASES.to_vec());
    let mut cfg = SweepConfig::new(cli.k, cli.m, cli.bits);
    cfg.bases = bases.clone();
    cfg.seed = seed;
    // The bias only steers toward Miller-Rabin resistance.
    cfg.bias = !cli.no_bias && !cli.all_carmichael;
    cfg.mode = if cli.all_carmichael {
        ForgeMode::AllCarmichael
    } else {
        ForgeMode::MrResistant
    };
    let count = match (cli.count, cli.seconds) {
        (None, None) => Some(200),
        (c, _) => c,
    };
    let duration = match cli.seconds {
        Some(s) if !(s.is_finite() && s >= 0.0) => bail!(Usage(format!("bad --seconds {s}"))),
        Some(s) => Some(Duration::from_secs_f64(s)),
        None => None,
    };
    cfg.budget = Budget {
        records: count,
        candidates: None,
        duration,
    };
    cfg.strategy = cli.strategy();

    let out_file_ok = out
        .parent()
        .is_none_or(|d| d.as_os_str().is_empty() || d.is_dir());
    if !out_file_ok {
        bail!(Usage(format!("output directory of {} does not exist", out.display())));
    }

    let result = forge_sweep(&cfg)?;
    let stats = result.stats;
    let params_grid = json!({
        "k_range": [cfg.k_range.0, cfg.k_range.1],
        "M_range": [cfg.m_range.0, cfg.m_range.1],
        "target_bits": cfg.target_bits,
        "mode": if cfg.mode == ForgeMode::AllCarmichael { "all_carmichael" } else { "mr_resistant" },
        "bias": cfg.bias,
        "count": count,
        "seconds": cli.seconds,
        "workers": cli.workers,
    });
    let meta = DatasetMeta::new(seed, bases, created_utc(), params_grid);
    let emitted = result.records.len();
    let data = DatasetFile::new(meta, result.records);
    save_dataset(&data, out, cli.append)
        .with_context(|| format!("cannot write {}", out.display()))?;
    eprintln!(
        "forged {emitted} records in {:.1}s: {} Korselt-valid, {} Miller-Rabin resistant, \
         {} candidates, {:.1} Carmichaels/min, {:.1} resistant/hour",
        stats.elapsed.as_secs_f64(),
        stats.carmichaels_emitted,
        stats.mr_resistant_emitted,
        stats.candidates_examined,
        stats.carmichael_rate(),
        stats.resistant_rate_per_hour()
    );
    Ok(0)
}

fn witness_path(out: &Path, index: usize) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.lucas-witness-{index}.json"))
}

fn cmd_probe(cli: &Cli) -> anyhow::Result<i32> {
    let input = cli.input()?;
    let out = cli.output.clone().unwrap_or_else(|| input.to_path_buf());
    let mut data = load_dataset(input, cli.load_mode())
        .with_context(|| format!("cannot load {}", input.display()))?;
    let pending: Vec<usize> = (0..data.records.len())
        .filter(|&i| data.records[i].lucas.is_none())
        .collect();
    let exec = Executor::new(cli.strategy())?;
    let measured = exec.map(&pending, |&i| measure_collapse(&data.records[i]));
    let mut event = None;
    for (&i, m) in pending.iter().zip(measured) {
        let m = m.with_context(|| format!("record {i}"))?;
        if let Err(e) = guard_measurement(&data.records[i], &m, &witness_path(&out, i)) {
            event.get_or_insert(e);
        }
        data.records[i].lucas = Some(m);
    }
    save_dataset(&data, &out, false).with_context(|| format!("cannot write {}", out.display()))?;
    eprintln!("probed {} records", pending.len());
    match event {
        Some(e) => Err(e.into()),
        None => Ok(0),
    }
}

fn cmd_analyze(cli: &Cli) -> anyhow::Result<i32> {
    let input = cli.input()?;
    let data = load_dataset(input, cli.load_mode())
        .with_context(|| format!("cannot load {}", input.display()))?;
    let a = analyzer::analyze(&data.records)?;
    print!("{}", a.render_text(&data.records));
    Ok(0)
}

fn cmd_report(cli: &Cli) -> anyhow::Result<i32> {
    let input = cli.input()?;
    let out = cli.output.clone().unwrap_or_else(|| PathBuf::from("report"));
    let data = load_dataset(input, cli.load_mode())
        .with_context(|| format!("cannot load {}", input.display()))?;
    let files = analyzer::emit_report(&data.records, &out)
        .with_context(|| format!("cannot write report to {}", out.display()))?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(0)
}

fn cmd_verify() -> anyhow::Result<i32> {
    let reports = verify::run_all(verify::VerifyLimits::default());
    let mut failed = 0;
    for r in &reports {
        println!("{}", r.line());
        if !r.passed() {
            failed += 1;
        }
    }
    println!("{} of {} suites passed", reports.len() - failed, reports.len());
    Ok(if failed == 0 { 0 } else { 1 })
}

fn exit_code(e: &anyhow::Error) -> i32 {
    match e.downcast_ref::<Error>() {
        Some(Error::LucasPseudoprime { .. }) => 1,
        _ => 2,
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Subcommand::Forge => cmd_forge(&cli),
        Subcommand::Probe => cmd_probe(&cli),
        Subcommand::Analyze => cmd_analyze(&cli),
        Subcommand::Report => cmd_report(&cli),
        Subcommand::Verify => cmd_verify(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
