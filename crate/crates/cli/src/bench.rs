//! Benchmark experiments on generated QP instances with planted solutions.
//!
//! Every run uses the known-solution stopping rule
//! `‖u − x_k‖ < TolX (1 + ‖u‖)` with a cap of `max_iter` iterations, and
//! times each solve as the median of `repeats` serial repetitions.
//!
//! Output is a CSV with the fixed header
//! `experiment,n,beta,tolx,index,status,iterations,error,runtime_s`.
//! Per-run records carry the experiment id (`dim`, `starts`, `beta`).
//! Aggregate rows carry `<id>-summary`, name the statistic in `status`, put
//! its value in `iterations` and leave `index`/`error` empty.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use ssn_core::gen::{self, instance_rng, GeneratedInstance, GeneratorConfig};
use ssn_core::qp::qp_newton_solve;
use ssn_core::{SolveReport, SolveStatus, SolverOptions};

pub const CSV_HEADER: [&str; 9] = [
    "experiment",
    "n",
    "beta",
    "tolx",
    "index",
    "status",
    "iterations",
    "error",
    "runtime_s",
];

pub const DEFAULT_TOLERANCES: [f64; 3] = [1e-6, 1e-8, 1e-10];

pub const DEFAULT_BETA_RANGES: [(f64, f64); 6] = [
    (0.5, 1e3),
    (1e3, 1e4),
    (1e4, 1e5),
    (1e5, 1e6),
    (1e6, 1e7),
    (1e7, 1e8),
];

const STARTS_STREAM_SALT: u64 = 0x5354_4152_5453;

/// One solve of one generated instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub experiment: &'static str,
    pub n: usize,
    pub beta: f64,
    pub tolx: f64,
    pub index: usize,
    pub status: SolveStatus,
    pub iterations: usize,
    /// `‖u − x_last‖ / (1 + ‖u‖)`
    pub error: f64,
    pub runtime_s: f64,
}

impl BenchRecord {
    pub fn solved(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    fn csv_row(&self) -> [String; 9] {
        [
            self.experiment.to_string(),
            self.n.to_string(),
            self.beta.to_string(),
            self.tolx.to_string(),
            self.index.to_string(),
            self.status.to_string(),
            self.iterations.to_string(),
            format!("{:e}", self.error),
            format!("{:.9}", self.runtime_s),
        ]
    }
}

/// Aggregate statistic row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: &'static str,
    pub n: usize,
    /// Either a single β or a `[lb,ub)` range label.
    pub beta: String,
    pub tolx: f64,
    pub index: Option<usize>,
    pub statistic: &'static str,
    /// `None` renders as `-` (nothing to average).
    pub value: Option<f64>,
    pub runtime_s: Option<f64>,
}

impl SummaryRow {
    fn csv_row(&self) -> [String; 9] {
        [
            self.experiment.to_string(),
            self.n.to_string(),
            self.beta.clone(),
            self.tolx.to_string(),
            self.index.map(|i| i.to_string()).unwrap_or_default(),
            self.statistic.to_string(),
            self.value
                .map_or_else(|| "-".to_string(), |v| v.to_string()),
            String::new(),
            self.runtime_s
                .map(|t| format!("{t:.9}"))
                .unwrap_or_default(),
        ]
    }
}

/// Records followed by summary rows, in the order they are written.
#[derive(Debug, Clone, Default)]
pub struct BenchOutput {
    pub records: Vec<BenchRecord>,
    pub summaries: Vec<SummaryRow>,
}

impl BenchOutput {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.records {
            w.write_record(r.csv_row())?;
        }
        for s in &self.summaries {
            w.write_record(s.csv_row())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub repeats: usize,
    pub max_iter: usize,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            repeats: 10,
            max_iter: 100,
        }
    }
}

/// Solves `inst` from `x0` under the known-solution rule; the report comes
/// from the first repetition and the runtime is the median over all.
fn timed_solve(
    inst: &GeneratedInstance,
    x0: &[f64],
    tolx: f64,
    timing: Timing,
) -> (SolveReport, f64) {
    let opts = SolverOptions::known_solution(inst.known_solution.clone(), tolx)
        .with_max_iter(timing.max_iter);
    let mut times = Vec::with_capacity(timing.repeats.max(1));
    let mut first = None;
    for _ in 0..timing.repeats.max(1) {
        let t0 = Instant::now();
        let report =
            qp_newton_solve(&inst.qp, x0, &opts).expect("generated instances are well formed");
        times.push(t0.elapsed().as_secs_f64());
        first.get_or_insert(report);
    }
    (first.expect("at least one repetition"), median(&mut times))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Sample standard deviation (n − 1 normalization); zero for fewer than two
/// samples.
pub fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v).unwrap_or(0.0);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn derived_seed(seed: u64, tag: u64) -> u64 {
    seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn generate(cfg: &GeneratorConfig, count: usize) -> Vec<GeneratedInstance> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            gen::make_instance(cfg, &mut instance_rng(cfg.seed, i as u64))
                .expect("validated generator config")
        })
        .collect()
}

fn record(
    experiment: &'static str,
    inst: &GeneratedInstance,
    index: usize,
    tolx: f64,
    report: &SolveReport,
    runtime_s: f64,
) -> BenchRecord {
    BenchRecord {
        experiment,
        n: inst.qp.dim(),
        beta: inst.beta,
        tolx,
        index,
        status: report.status,
        iterations: report.iterations,
        error: report.relative_error(&inst.known_solution),
        runtime_s,
    }
}

#[derive(Debug, Clone)]
pub struct DimConfig {
    pub sizes: Vec<usize>,
    pub count: usize,
    pub tolerances: Vec<f64>,
    pub seed: u64,
    pub timing: Timing,
}

impl Default for DimConfig {
    fn default() -> Self {
        Self {
            sizes: vec![50, 100, 200],
            count: 100,
            tolerances: DEFAULT_TOLERANCES.to_vec(),
            seed: 1,
            timing: Timing::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimSummary {
    pub n: usize,
    pub tolx: f64,
    pub count: usize,
    pub solved: usize,
    pub total_iterations: usize,
    pub mean_iterations: Option<f64>,
    pub total_time_s: f64,
}

/// Iteration totals per dimension and tolerance, β uniform on (0, 1/2).
/// The same instances are reused for every tolerance.
pub fn bench_dim(cfg: &DimConfig) -> ssn_core::Result<(BenchOutput, Vec<DimSummary>)> {
    let mut out = BenchOutput::default();
    let mut stats = Vec::new();
    for &n in &cfg.sizes {
        let gcfg = GeneratorConfig::new(n, 0.0, 0.5, derived_seed(cfg.seed, n as u64));
        gcfg.validate()?;
        let instances = generate(&gcfg, cfg.count);
        for &tolx in &cfg.tolerances {
            let records: Vec<BenchRecord> = instances
                .par_iter()
                .enumerate()
                .map(|(i, inst)| {
                    let (rep, t) = timed_solve(inst, &inst.start, tolx, cfg.timing);
                    record("dim", inst, i, tolx, &rep, t)
                })
                .collect();
            let total_iterations = records.iter().map(|r| r.iterations).sum();
            let total_time_s = records.iter().map(|r| r.runtime_s).sum();
            let solved = records.iter().filter(|r| r.solved()).count();
            let iters: Vec<f64> = records.iter().map(|r| r.iterations as f64).collect();
            let s = DimSummary {
                n,
                tolx,
                count: cfg.count,
                solved,
                total_iterations,
                mean_iterations: mean(&iters),
                total_time_s,
            };
            out.records.extend(records);
            if cfg.count > 0 {
                let row = |statistic, value: Option<f64>, runtime_s| SummaryRow {
                    experiment: "dim-summary",
                    n,
                    beta: "(0,0.5)".into(),
                    tolx,
                    index: None,
                    statistic,
                    value,
                    runtime_s,
                };
                out.summaries.push(row(
                    "total_iterations",
                    Some(total_iterations as f64),
                    Some(total_time_s),
                ));
                out.summaries.push(row("solved", Some(solved as f64), None));
                out.summaries
                    .push(row("mean_iterations", s.mean_iterations, None));
            }
            stats.push(s);
        }
    }
    Ok((out, stats))
}

#[derive(Debug, Clone)]
pub struct StartsConfig {
    pub n: usize,
    pub problems: usize,
    pub starts: usize,
    pub tolerances: Vec<f64>,
    pub seed: u64,
    pub timing: Timing,
}

impl Default for StartsConfig {
    fn default() -> Self {
        Self {
            n: 100,
            problems: 50,
            starts: 50,
            tolerances: DEFAULT_TOLERANCES.to_vec(),
            seed: 1,
            timing: Timing {
                repeats: 1,
                max_iter: 100,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemStats {
    pub index: usize,
    pub tolx: f64,
    pub solved: usize,
    pub mean_iterations: f64,
    pub std_iterations: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartsSummary {
    pub tolx: f64,
    pub runs: usize,
    pub solved: usize,
    pub mean_of_means: Option<f64>,
    pub mean_of_stds: Option<f64>,
}

impl StartsSummary {
    pub fn all_converged(&self) -> bool {
        self.solved == self.runs
    }
}

/// Sensitivity to the starting point: each problem is solved from `starts`
/// random points in `[-10⁶, 10⁶]ⁿ`; reports per-problem mean/STD of the
/// iteration counts and their means over problems.
pub fn bench_starts(
    cfg: &StartsConfig,
) -> ssn_core::Result<(BenchOutput, Vec<ProblemStats>, Vec<StartsSummary>)> {
    let gcfg = GeneratorConfig::new(cfg.n, 0.0, 0.5, cfg.seed);
    gcfg.validate()?;
    let instances = generate(&gcfg, cfg.problems);
    let starts: Vec<Vec<Vec<f64>>> = (0..cfg.problems)
        .map(|i| {
            let mut rng = instance_rng(derived_seed(cfg.seed, STARTS_STREAM_SALT), i as u64);
            (0..cfg.starts)
                .map(|_| gen::random_vector(cfg.n, gcfg.value_bound, &mut rng))
                .collect()
        })
        .collect();

    let mut out = BenchOutput::default();
    let mut per_problem = Vec::new();
    let mut summaries = Vec::new();
    for &tolx in &cfg.tolerances {
        let runs: Vec<Vec<BenchRecord>> = instances
            .par_iter()
            .zip(&starts)
            .enumerate()
            .map(|(i, (inst, xs))| {
                xs.iter()
                    .map(|x0| {
                        let (rep, t) = timed_solve(inst, x0, tolx, cfg.timing);
                        record("starts", inst, i, tolx, &rep, t)
                    })
                    .collect()
            })
            .collect();

        let mut means = Vec::new();
        let mut stds = Vec::new();
        let mut solved_total = 0;
        for (i, rs) in runs.iter().enumerate() {
            let iters: Vec<f64> = rs.iter().map(|r| r.iterations as f64).collect();
            let solved = rs.iter().filter(|r| r.solved()).count();
            solved_total += solved;
            let Some(m) = mean(&iters) else { continue };
            let s = sample_std(&iters);
            means.push(m);
            stds.push(s);
            let row = |statistic, value| SummaryRow {
                experiment: "starts-summary",
                n: cfg.n,
                beta: instances[i].beta.to_string(),
                tolx,
                index: Some(i),
                statistic,
                value: Some(value),
                runtime_s: None,
            };
            out.summaries.push(row("problem_mean_iterations", m));
            out.summaries.push(row("problem_std_iterations", s));
            per_problem.push(ProblemStats {
                index: i,
                tolx,
                solved,
                mean_iterations: m,
                std_iterations: s,
            });
        }
        let summary = StartsSummary {
            tolx,
            runs: cfg.problems * cfg.starts,
            solved: solved_total,
            mean_of_means: mean(&means),
            mean_of_stds: mean(&stds),
        };
        if !means.is_empty() {
            let row = |statistic, value| SummaryRow {
                experiment: "starts-summary",
                n: cfg.n,
                beta: "(0,0.5)".into(),
                tolx,
                index: None,
                statistic,
                value,
                runtime_s: None,
            };
            out.summaries
                .push(row("mean_of_means", summary.mean_of_means));
            out.summaries
                .push(row("mean_of_stds", summary.mean_of_stds));
            out.summaries.push(row("solved", Some(solved_total as f64)));
        }
        summaries.push(summary);
        out.records.extend(runs.into_iter().flatten());
    }
    Ok((out, per_problem, summaries))
}

#[derive(Debug, Clone)]
pub struct BetaConfig {
    pub ranges: Vec<(f64, f64)>,
    pub n: usize,
    pub count: usize,
    pub tolerances: Vec<f64>,
    pub seed: u64,
    pub timing: Timing,
}

impl Default for BetaConfig {
    fn default() -> Self {
        Self {
            ranges: DEFAULT_BETA_RANGES.to_vec(),
            n: 100,
            count: 50,
            tolerances: DEFAULT_TOLERANCES.to_vec(),
            seed: 1,
            timing: Timing::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSummary {
    pub beta_low: f64,
    pub beta_high: f64,
    pub tolx: f64,
    pub count: usize,
    pub solved: usize,
    /// Mean iterations over solved instances; `None` when none was solved.
    pub mean_iterations: Option<f64>,
}

impl BetaSummary {
    pub fn solved_fraction(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.solved as f64 / self.count as f64
        }
    }
}

pub fn range_label(lo: f64, hi: f64) -> String {
    format!("[{lo},{hi})")
}

/// Behaviour outside the linear-rate regime: β uniform on `[lb, ub)` with
/// `lb ≥ 1/2`.
pub fn bench_beta(cfg: &BetaConfig) -> ssn_core::Result<(BenchOutput, Vec<BetaSummary>)> {
    let mut out = BenchOutput::default();
    let mut stats = Vec::new();
    for (k, &(lo, hi)) in cfg.ranges.iter().enumerate() {
        let gcfg = GeneratorConfig::new(cfg.n, lo, hi, derived_seed(cfg.seed, k as u64 + 1));
        gcfg.validate()?;
        let instances = generate(&gcfg, cfg.count);
        for &tolx in &cfg.tolerances {
            let records: Vec<BenchRecord> = instances
                .par_iter()
                .enumerate()
                .map(|(i, inst)| {
                    let (rep, t) = timed_solve(inst, &inst.start, tolx, cfg.timing);
                    record("beta", inst, i, tolx, &rep, t)
                })
                .collect();
            let solved_iters: Vec<f64> = records
                .iter()
                .filter(|r| r.solved())
                .map(|r| r.iterations as f64)
                .collect();
            let s = BetaSummary {
                beta_low: lo,
                beta_high: hi,
                tolx,
                count: cfg.count,
                solved: solved_iters.len(),
                mean_iterations: mean(&solved_iters),
            };
            if cfg.count > 0 {
                let row = |statistic, value| SummaryRow {
                    experiment: "beta-summary",
                    n: cfg.n,
                    beta: range_label(lo, hi),
                    tolx,
                    index: None,
                    statistic,
                    value,
                    runtime_s: None,
                };
                out.summaries.push(row("solved", Some(s.solved as f64)));
                out.summaries
                    .push(row("mean_iterations", s.mean_iterations));
            }
            out.records.extend(records);
            stats.push(s);
        }
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistics_helpers() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(mean(&[]), None);
        assert_eq!(sample_std(&[5.0]), 0.0);
        assert!((sample_std(&[1.0, 2.0, 3.0, 4.0]) - 1.2909944487358056).abs() < 1e-15);
    }

    #[test]
    fn empty_runs_give_header_only() {
        let header = CSV_HEADER.join(",") + "\n";
        let cfg = DimConfig {
            sizes: vec![10],
            count: 0,
            ..DimConfig::default()
        };
        assert_eq!(bench_dim(&cfg).unwrap().0.to_csv_string(), header);

        let cfg = BetaConfig {
            ranges: vec![],
            ..BetaConfig::default()
        };
        assert_eq!(bench_beta(&cfg).unwrap().0.to_csv_string(), header);
    }

    #[test]
    fn single_start_has_zero_spread() {
        let cfg = StartsConfig {
            n: 8,
            problems: 4,
            starts: 1,
            tolerances: vec![1e-6],
            seed: 3,
            timing: Timing {
                repeats: 1,
                max_iter: 100,
            },
        };
        let (_, per_problem, summary) = bench_starts(&cfg).unwrap();
        assert!(per_problem.iter().all(|p| p.std_iterations == 0.0));
        assert_eq!(summary[0].mean_of_stds, Some(0.0));
        assert!(summary[0].all_converged());
    }

    #[test]
    fn dash_when_nothing_solved() {
        let row = SummaryRow {
            experiment: "beta-summary",
            n: 3,
            beta: range_label(1e7, 1e8),
            tolx: 1e-10,
            index: None,
            statistic: "mean_iterations",
            value: None,
            runtime_s: None,
        };
        let out = BenchOutput {
            records: vec![],
            summaries: vec![row],
        };
        let csv = out.to_csv_string();
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(
            line,
            "beta-summary,3,\"[10000000,100000000)\",0.0000000001,,mean_iterations,-,,"
        );
    }

    #[test]
    fn reruns_reproduce_iteration_columns() {
        let cfg = DimConfig {
            sizes: vec![12],
            count: 5,
            tolerances: vec![1e-6, 1e-10],
            seed: 11,
            timing: Timing {
                repeats: 2,
                max_iter: 100,
            },
        };
        let (a, _) = bench_dim(&cfg).unwrap();
        let (b, _) = bench_dim(&cfg).unwrap();
        let strip = |o: &BenchOutput| -> Vec<(String, usize, f64)> {
            o.records
                .iter()
                .map(|r| (r.status.to_string(), r.iterations, r.error))
                .collect()
        };
        assert_eq!(strip(&a), strip(&b));
        assert!(a.records.iter().all(|r| r.solved()));
    }
}
