use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use succinct_dyn::experiments::{
    failure_trial, fpr_trial, fuzz_sequence, probe_profile, space_curve, ProbeRow,
};
use succinct_dyn::hashing::sub_seed;
use succinct_dyn::Constants;

#[derive(Parser)]
#[command(name = "bench", about = "Seeded measurements of the dynamic filter and prefix matcher, as CSV")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// False-positive rate over fresh negative keys.
    Fpr(Common),
    /// Filter space after n insertions.
    Space(Common),
    /// Word probes per operation of the fixed-capacity matcher.
    Probes(Common),
    /// Whether the filter reports a failure, per trial.
    Failures(Common),
    /// Core-set sequences replayed against a prefix oracle.
    Fuzz(Common),
}

#[derive(Args)]
struct Common {
    /// Universe of 2^N keys.
    #[arg(long)]
    u_bits: Option<u32>,
    /// False-positive rate 2^-K.
    #[arg(long, default_value_t = 8)]
    epsilon_log2: u32,
    /// Sizes to measure, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Queries per trial (fpr) or per sequence (fuzz).
    #[arg(long)]
    queries: Option<usize>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Constant override such as c2=32.
    #[arg(long = "param", value_name = "K=V")]
    params: Vec<String>,
}

struct Config {
    u_bits: u32,
    eps_log2: u32,
    n: Vec<usize>,
    trials: u64,
    seed: u64,
    queries: usize,
    consts: Constants,
}

impl Config {
    fn trial_seed(&self, trial: u64) -> u64 {
        sub_seed(self.seed, trial)
    }
}

struct Defaults {
    u_bits: u32,
    n: &'static [usize],
    trials: u64,
    queries: usize,
}

fn resolve(c: &Common, d: Defaults) -> Result<Config> {
    let mut consts = Constants::default();
    for kv in &c.params {
        let (k, v) = kv.split_once('=').with_context(|| format!("expected K=V, got {kv:?}"))?;
        consts.set(k.trim(), v.trim())?;
    }
    let u_bits = c.u_bits.unwrap_or(d.u_bits);
    if !(8..=64).contains(&u_bits) {
        bail!("--u-bits must be between 8 and 64");
    }
    if c.epsilon_log2 == 0 || c.epsilon_log2 > 24 {
        bail!("--epsilon-log2 must be between 1 and 24");
    }
    Ok(Config {
        u_bits,
        eps_log2: c.epsilon_log2,
        n: if c.n.is_empty() { d.n.to_vec() } else { c.n.clone() },
        trials: c.trials.unwrap_or(d.trials),
        seed: c.seed,
        queries: c.queries.unwrap_or(d.queries),
        consts,
    })
}

fn fpr(cfg: &Config, out: &mut csv::Writer<Box<dyn Write>>) -> Result<bool> {
    out.write_record(["trial", "n", "queries", "fp_count", "fpr", "epsilon", "failed"])?;
    for trial in 0..cfg.trials {
        for &n in &cfg.n {
            let r = fpr_trial(cfg.u_bits, cfg.eps_log2, n, cfg.queries, cfg.trial_seed(trial), cfg.consts);
            out.write_record([
                trial.to_string(),
                n.to_string(),
                r.queries.to_string(),
                r.fp_count.to_string(),
                r.fpr.to_string(),
                r.epsilon.to_string(),
                u8::from(r.failed).to_string(),
            ])?;
        }
    }
    Ok(true)
}

fn space(cfg: &Config, out: &mut csv::Writer<Box<dyn Write>>) -> Result<bool> {
    out.write_record(["trial", "n", "bits_total", "bits_per_key", "budget_bits_per_key"])?;
    let mut sizes = cfg.n.clone();
    sizes.sort_unstable();
    sizes.dedup();
    for trial in 0..cfg.trials {
        for r in space_curve(cfg.u_bits, cfg.eps_log2, &sizes, cfg.trial_seed(trial), cfg.consts) {
            if r.failed {
                eprintln!("trial {trial}: the filter failed before n = {}; its reading is stale", r.n);
            }
            out.write_record([
                trial.to_string(),
                r.n.to_string(),
                r.bits_total.to_string(),
                r.bits_per_key.to_string(),
                r.budget_bits_per_key.to_string(),
            ])?;
        }
    }
    Ok(true)
}

fn probes(cfg: &Config, out: &mut csv::Writer<Box<dyn Write>>) -> Result<bool> {
    out.write_record(["n", "op", "max_probes", "mean_probes"])?;
    for &n in &cfg.n {
        // Maximum over trials; mean over all operations of all trials.
        let mut merged: Vec<(ProbeRow, f64)> = Vec::new();
        for trial in 0..cfg.trials {
            for (i, r) in probe_profile(cfg.u_bits, cfg.eps_log2, n, cfg.trial_seed(trial), cfg.consts).into_iter().enumerate() {
                match merged.get_mut(i) {
                    Some((m, sum)) => {
                        m.max_probes = m.max_probes.max(r.max_probes);
                        *sum += r.mean_probes;
                    }
                    None => {
                        let mean = r.mean_probes;
                        merged.push((r, mean));
                    }
                }
            }
        }
        for (r, sum) in merged {
            out.write_record([
                n.to_string(),
                r.op.to_string(),
                r.max_probes.to_string(),
                (sum / cfg.trials as f64).to_string(),
            ])?;
        }
    }
    Ok(true)
}

fn failures(cfg: &Config, out: &mut csv::Writer<Box<dyn Write>>) -> Result<bool> {
    out.write_record(["trial", "n", "failed"])?;
    for trial in 0..cfg.trials {
        for &n in &cfg.n {
            let failed = failure_trial(cfg.u_bits, cfg.eps_log2, n, cfg.trial_seed(trial), cfg.consts);
            out.write_record([trial.to_string(), n.to_string(), u8::from(failed).to_string()])?;
        }
    }
    Ok(true)
}

fn fuzz(cfg: &Config, out: &mut csv::Writer<Box<dyn Write>>) -> Result<bool> {
    out.write_record(["trial", "seq_len", "mismatches", "seed"])?;
    let mut failed = 0;
    for trial in 0..cfg.trials {
        for &n in &cfg.n {
            let seed = cfg.trial_seed(trial);
            let r = fuzz_sequence(cfg.u_bits, cfg.eps_log2, n, cfg.queries, seed, cfg.consts);
            failed += u64::from(r.failed);
            out.write_record([
                trial.to_string(),
                r.seq_len.to_string(),
                r.mismatches.to_string(),
                seed.to_string(),
            ])?;
            if let Some(what) = r.first_mismatch {
                out.flush()?;
                eprintln!("mismatch in trial {trial}: {what}");
                eprintln!(
                    "reproduce: bench fuzz --u-bits {} --epsilon-log2 {} --n {n} --seed {} --trials {}",
                    cfg.u_bits,
                    cfg.eps_log2,
                    cfg.seed,
                    trial + 1
                );
                return Ok(false);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} sequences stopped early at a structure failure");
    }
    Ok(true)
}

type Runner = fn(&Config, &mut csv::Writer<Box<dyn Write>>) -> Result<bool>;

fn run(cli: Cli) -> Result<bool> {
    let (common, defaults, runner): (&Common, Defaults, Runner) = match &cli.command {
        Command::Fpr(c) => (c, Defaults { u_bits: 32, n: &[1 << 15], trials: 1, queries: 100_000 }, fpr),
        Command::Space(c) => (
            c,
            Defaults {
                u_bits: 32,
                n: &[1 << 10, 1 << 11, 1 << 12, 1 << 13, 1 << 14, 1 << 15, 1 << 16, 1 << 17, 1 << 18],
                trials: 1,
                queries: 0,
            },
            space,
        ),
        Command::Probes(c) => (c, Defaults { u_bits: 32, n: &[1 << 12, 1 << 18], trials: 1, queries: 0 }, probes),
        Command::Failures(c) => (c, Defaults { u_bits: 32, n: &[1 << 16], trials: 100, queries: 0 }, failures),
        Command::Fuzz(c) => (c, Defaults { u_bits: 16, n: &[1 << 10], trials: 1000, queries: 10_000 }, fuzz),
    };
    let cfg = resolve(common, defaults)?;
    let sink: Box<dyn Write> = match &common.out {
        Some(path) => Box::new(File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = csv::Writer::from_writer(sink);
    let ok = runner(&cfg, &mut out)?;
    out.flush()?;
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
