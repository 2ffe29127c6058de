use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use ssn_cli::args::{BenchBetaArgs, BenchCommon, BenchDimArgs, BenchStartsArgs, Cli, Command};
use ssn_cli::bench::{self, BenchOutput, Timing};
use ssn_cli::commands::{cmd_project, cmd_solve, EXIT_MALFORMED};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a).map_err(Into::into),
        Command::Project(a) => cmd_project(a).map_err(Into::into),
        Command::BenchDim(a) => bench_dim(a),
        Command::BenchStarts(a) => bench_starts(a),
        Command::BenchBeta(a) => bench_beta(a),
    };
    match result {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            ExitCode::from(outcome.exit_code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_MALFORMED)
        }
    }
}

fn tolerances(c: &BenchCommon) -> Vec<f64> {
    if c.tolx.is_empty() {
        bench::DEFAULT_TOLERANCES.to_vec()
    } else {
        c.tolx.clone()
    }
}

fn timing(c: &BenchCommon) -> Timing {
    Timing {
        repeats: c.repeats,
        max_iter: c.max_iter,
    }
}

fn emit(out: &BenchOutput, path: Option<&Path>) -> Result<ssn_cli::commands::Outcome> {
    match path {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            out.write_csv(BufWriter::new(f))?;
        }
        None => out.write_csv(io::stdout().lock())?,
    }
    Ok(ssn_cli::commands::Outcome {
        stdout: String::new(),
        exit_code: 0,
    })
}

fn bench_dim(a: &BenchDimArgs) -> Result<ssn_cli::commands::Outcome> {
    let cfg = bench::DimConfig {
        sizes: if a.n.is_empty() {
            vec![50, 100, 200]
        } else {
            a.n.clone()
        },
        count: a.count,
        tolerances: tolerances(&a.common),
        seed: a.common.seed,
        timing: timing(&a.common),
    };
    let (out, stats) = bench::bench_dim(&cfg)?;
    let mut err = io::stderr().lock();
    writeln!(
        err,
        "{:>6} {:>8} {:>8} {:>12} {:>12}",
        "n", "tolx", "solved", "iterations", "time_s"
    )?;
    for s in &stats {
        writeln!(
            err,
            "{:>6} {:>8.0e} {:>8} {:>12} {:>12.4}",
            s.n, s.tolx, s.solved, s.total_iterations, s.total_time_s
        )?;
    }
    emit(&out, a.common.out.as_deref())
}

fn bench_starts(a: &BenchStartsArgs) -> Result<ssn_cli::commands::Outcome> {
    let cfg = bench::StartsConfig {
        n: a.n,
        problems: a.count,
        starts: a.starts,
        tolerances: tolerances(&a.common),
        seed: a.common.seed,
        timing: timing(&a.common),
    };
    let (out, _, summaries) = bench::bench_starts(&cfg)?;
    let mut err = io::stderr().lock();
    writeln!(
        err,
        "{:>8} {:>10} {:>10} {:>10}",
        "tolx", "solved", "MEAN(m)", "MEAN(d)"
    )?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    for s in &summaries {
        writeln!(
            err,
            "{:>8.0e} {:>10} {:>10} {:>10}",
            s.tolx,
            format!("{}/{}", s.solved, s.runs),
            fmt(s.mean_of_means),
            fmt(s.mean_of_stds)
        )?;
    }
    emit(&out, a.common.out.as_deref())
}

fn bench_beta(a: &BenchBetaArgs) -> Result<ssn_cli::commands::Outcome> {
    if a.beta_low.len() != a.beta_high.len() {
        bail!(
            "--beta-low given {} times but --beta-high {} times; they pair up",
            a.beta_low.len(),
            a.beta_high.len()
        );
    }
    let ranges = if a.no_ranges {
        Vec::new()
    } else if a.beta_low.is_empty() {
        bench::DEFAULT_BETA_RANGES.to_vec()
    } else {
        a.beta_low
            .iter()
            .copied()
            .zip(a.beta_high.iter().copied())
            .collect()
    };
    let cfg = bench::BetaConfig {
        ranges,
        n: a.n,
        count: a.count,
        tolerances: tolerances(&a.common),
        seed: a.common.seed,
        timing: timing(&a.common),
    };
    let (out, stats) = bench::bench_beta(&cfg)?;
    let mut err = io::stderr().lock();
    writeln!(
        err,
        "{:>20} {:>8} {:>8} {:>10}",
        "beta", "tolx", "solved", "iterations"
    )?;
    for s in &stats {
        writeln!(
            err,
            "{:>20} {:>8.0e} {:>8} {:>10}",
            bench::range_label(s.beta_low, s.beta_high),
            s.tolx,
            s.solved,
            s.mean_iterations
                .map_or_else(|| "-".to_string(), |m| format!("{m:.3}"))
        )?;
    }
    emit(&out, a.common.out.as_deref())
}
