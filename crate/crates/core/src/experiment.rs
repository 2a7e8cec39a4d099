//! Trial sweeps over several methods on one pencil, with per-run history
//! CSVs, a summary CSV and a plain-text comparison table.
//!
//! A config file looks like
//!
//! ```toml
//! block = 2
//! m = 2
//! tol = 1e-10
//! max_iter = 2000
//! trials = 10
//! base_seed = 0
//! out_dir = "out/clustered"
//!
//! [problem]
//! kind = "clustered-diag"
//! n = 400
//! gap = 1.0
//! clusters = [{ center = 1.0, size = 2, intra_gap = 1e-4 }]
//!
//! [[methods]]
//! method = "base"
//!
//! [[methods]]
//! method = "depth1"
//! schedule = { kind = "fixed", beta = 0.1 }
//! ```
//!
//! A Matrix Market problem is given as `[problem]` with `matrix = "a.mtx"`
//! and optionally `mass = "b.mtx"`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::{solve_block, solve_single, ConvergenceHistory, SolveConfig};
use crate::error::{Error, Result};
use crate::momentum::{BetaSchedule, HeavyBallSign};
use crate::pencil::SymPencil;
use crate::problems::{generate, ProblemSpec};
use crate::sparsemat::load_matrix_market;
use crate::subspace::{Method, SubspaceSpec, DEFAULT_DROP_TOL};

pub const HISTORY_HEADER: [&str; 7] = [
    "iter",
    "pair",
    "residual",
    "ritz_value",
    "beta",
    "basis_rank",
    "dropped",
];

pub const SUMMARY_HEADER: [&str; 7] = [
    "problem",
    "method",
    "beta",
    "mean_iters",
    "std_iters",
    "converged_runs",
    "trials",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSource {
    File {
        matrix: PathBuf,
        #[serde(default)]
        mass: Option<PathBuf>,
    },
    Generated(ProblemSpec),
}

impl ProblemSource {
    pub fn load(&self) -> Result<SymPencil> {
        match self {
            ProblemSource::Generated(spec) => generate(spec),
            ProblemSource::File { matrix, mass } => {
                let a = load_matrix_market(matrix)?;
                match mass {
                    Some(path) => SymPencil::new(a, load_matrix_market(path)?),
                    None => Ok(SymPencil::standard(a)),
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            ProblemSource::Generated(spec) => spec.label(),
            ProblemSource::File { matrix, mass } => {
                let stem = |p: &Path| {
                    p.file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| p.display().to_string())
                };
                match mass {
                    Some(b) => format!("{}/{}", stem(matrix), stem(b)),
                    None => stem(matrix),
                }
            }
        }
    }
}

fn default_schedule() -> BetaSchedule {
    BetaSchedule::Fixed { beta: 0.0 }
}

/// One method column of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodEntry {
    pub method: Method,
    #[serde(default = "default_schedule")]
    pub schedule: BetaSchedule,
    /// Overrides the method's default (on for `base` only).
    #[serde(default)]
    pub include_previous: Option<bool>,
    #[serde(default)]
    pub replace_current: bool,
    #[serde(default)]
    pub difference_candidates: bool,
}

impl MethodEntry {
    pub fn new(method: Method, schedule: BetaSchedule) -> Self {
        Self {
            method,
            schedule,
            include_previous: None,
            replace_current: false,
            difference_candidates: false,
        }
    }

    pub fn subspace(&self, m: usize) -> SubspaceSpec {
        let mut spec = SubspaceSpec::new(self.method, m)
            .with_replace_current(self.replace_current)
            .with_difference_candidates(self.difference_candidates);
        if let Some(prev) = self.include_previous {
            spec = spec.with_previous(prev);
        }
        spec
    }

    /// Method name plus markers for non-default subspace options.
    pub fn label(&self) -> String {
        let mut s = self.method.name().to_string();
        match self.include_previous {
            Some(true) if self.method != Method::Base => s.push_str("+prev"),
            Some(false) if self.method == Method::Base => s.push_str("-prev"),
            _ => {}
        }
        if self.replace_current {
            s.push_str("+replace");
        }
        if self.difference_candidates {
            s.push_str("+diff");
        }
        s
    }
}

fn default_block() -> usize {
    1
}
fn default_m() -> usize {
    1
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    1000
}
fn default_trials() -> usize {
    1
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_drop_tol() -> f64 {
    DEFAULT_DROP_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    #[serde(default)]
    pub methods: Vec<MethodEntry>,
    #[serde(default = "default_block")]
    pub block: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub heavy_ball_sign: HeavyBallSign,
    #[serde(default = "default_drop_tol")]
    pub drop_tol: f64,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSource, methods: Vec<MethodEntry>) -> Self {
        Self {
            problem,
            methods,
            block: default_block(),
            m: default_m(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            trials: default_trials(),
            base_seed: 0,
            out_dir: default_out_dir(),
            heavy_ball_sign: HeavyBallSign::Plus,
            drop_tol: default_drop_tol(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods configured".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        for entry in &self.methods {
            self.solve_config(entry, 0).validate()?;
        }
        Ok(())
    }

    pub fn solve_config(&self, entry: &MethodEntry, trial: usize) -> SolveConfig {
        let mut cfg = SolveConfig::new(entry.method, self.m)
            .schedule(entry.schedule)
            .block(self.block)
            .tol(self.tol)
            .max_iter(self.max_iter)
            .seed(self.base_seed + trial as u64)
            .heavy_ball_sign(self.heavy_ball_sign);
        cfg.subspace = entry.subspace(self.m);
        cfg.drop_tol = self.drop_tol;
        cfg
    }
}

/// `solve_single` for `b = 1`, `solve_block` otherwise.
pub fn solve(p: &SymPencil, cfg: &SolveConfig) -> Result<ConvergenceHistory> {
    let outcome = if cfg.block == 1 {
        solve_single(p, cfg)?
    } else {
        solve_block(p, cfg)?
    };
    Ok(outcome.history)
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub method_index: usize,
    pub trial: usize,
    pub iterations: usize,
    pub converged: bool,
    pub history_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub problem: String,
    pub method: String,
    pub beta: String,
    /// Mean and sample standard deviation over converged runs; NaN when
    /// none converged.
    pub mean_iters: f64,
    pub std_iters: f64,
    pub converged_runs: usize,
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub problem: String,
    pub rows: Vec<SummaryRow>,
    pub runs: Vec<RunResult>,
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_' | '+') {
                c
            } else {
                '-'
            }
        })
        .collect()
}

pub fn write_history_csv(path: &Path, history: &ConvergenceHistory) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HISTORY_HEADER)?;
    for rec in &history.records {
        for (pair, (res, ritz)) in rec.residuals.iter().zip(&rec.ritz_values).enumerate() {
            w.write_record([
                rec.iter.to_string(),
                pair.to_string(),
                format!("{res:e}"),
                format!("{ritz:e}"),
                format!("{}", rec.beta),
                rec.basis_rank.to_string(),
                rec.dropped.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.method.clone(),
            r.beta.clone(),
            format!("{:.3}", r.mean_iters),
            format!("{:.3}", r.std_iters),
            r.converged_runs.to_string(),
            r.trials.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every (trial, method) pair, writing `runs/*.csv`, `summary.csv` and
/// `table.txt` under `out_dir`. Runs that fail to converge are counted, not
/// treated as errors.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let pencil = cfg.problem.load()?;
    let problem = cfg.problem.label();
    let runs_dir = cfg.out_dir.join("runs");
    fs::create_dir_all(&runs_dir)?;

    let jobs: Vec<(usize, usize)> = (0..cfg.trials)
        .flat_map(|t| (0..cfg.methods.len()).map(move |mi| (t, mi)))
        .collect();
    let runs: Vec<RunResult> = jobs
        .par_iter()
        .map(|&(trial, mi)| {
            let entry = &cfg.methods[mi];
            let history = solve(&pencil, &cfg.solve_config(entry, trial))?;
            let name = format!(
                "m{mi:02}_{}_{}_t{trial:03}.csv",
                sanitize(&entry.label()),
                sanitize(&entry.schedule.label())
            );
            let history_path = runs_dir.join(name);
            write_history_csv(&history_path, &history)?;
            log::info!(
                "trial {trial} {}: {} iterations, converged={}",
                entry.label(),
                history.iterations,
                history.converged
            );
            Ok(RunResult {
                method_index: mi,
                trial,
                iterations: history.iterations,
                converged: history.converged,
                history_path,
            })
        })
        .collect::<Result<_>>()?;

    let rows: Vec<SummaryRow> = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(mi, entry)| {
            let its: Vec<f64> = runs
                .iter()
                .filter(|r| r.method_index == mi && r.converged)
                .map(|r| r.iterations as f64)
                .collect();
            let (mean_iters, std_iters) = mean_std(&its);
            SummaryRow {
                problem: problem.clone(),
                method: entry.label(),
                beta: entry.schedule.label(),
                mean_iters,
                std_iters,
                converged_runs: its.len(),
                trials: cfg.trials,
            }
        })
        .collect();

    write_summary_csv(&cfg.out_dir.join("summary.csv"), &rows)?;
    let summary = ExperimentSummary {
        problem,
        rows,
        runs,
    };
    fs::write(
        cfg.out_dir.join("table.txt"),
        compare_table(std::slice::from_ref(&summary)),
    )?;
    Ok(summary)
}

fn cell(x: f64) -> String {
    if x.is_nan() {
        "-".to_string()
    } else {
        format!("{x:.1}")
    }
}

/// One row pair per problem (mean line, then standard deviation line) and one
/// column per method/beta, in first-seen order.
pub fn compare_table(summaries: &[ExperimentSummary]) -> String {
    let mut columns: Vec<(String, String)> = Vec::new();
    for s in summaries {
        for r in &s.rows {
            let key = (r.method.clone(), r.beta.clone());
            if !columns.contains(&key) {
                columns.push(key);
            }
        }
    }
    let header: Vec<String> = std::iter::once("problem".to_string())
        .chain(columns.iter().map(|(m, b)| format!("{m} {b}")))
        .collect();
    let mut lines: Vec<Vec<String>> = vec![header];
    for s in summaries {
        let find = |key: &(String, String)| {
            s.rows
                .iter()
                .find(|r| r.method == key.0 && r.beta == key.1)
        };
        let mut means = vec![s.problem.clone()];
        let mut stds = vec![String::new()];
        for key in &columns {
            match find(key) {
                Some(r) => {
                    means.push(cell(r.mean_iters));
                    stds.push(cell(r.std_iters));
                }
                None => {
                    means.push(String::new());
                    stds.push(String::new());
                }
            }
        }
        lines.push(means);
        lines.push(stds);
    }
    let widths: Vec<usize> = (0..lines[0].len())
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for l in &lines {
        let mut row = String::new();
        for (c, text) in l.iter().enumerate() {
            if c == 0 {
                let _ = write!(row, "{text:<w$}", w = widths[0]);
            } else {
                let _ = write!(row, "  {text:>w$}", w = widths[c]);
            }
        }
        out.push_str(row.trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_generated_problem() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            trials = 3
            [problem]
            kind = "diag-linear"
            n = 50
            step = 0.1
            [[methods]]
            method = "depth1"
            schedule = { kind = "safeguarded", beta_max = 0.1 }
            "#,
        )
        .unwrap();
        assert_eq!(cfg.trials, 3);
        assert_eq!(
            cfg.problem,
            ProblemSource::Generated(ProblemSpec::DiagLinear { n: 50, step: 0.1 })
        );
        assert_eq!(cfg.methods[0].schedule, BetaSchedule::Safeguarded { beta_max: 0.1 });
        assert_eq!(cfg.block, 1);
    }

    #[test]
    fn parses_file_problem() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            [problem]
            matrix = "a.mtx"
            mass = "b.mtx"
            [[methods]]
            method = "base"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.problem.label(), "a/b");
        assert_eq!(cfg.methods[0].schedule, BetaSchedule::Fixed { beta: 0.0 });
    }

    #[test]
    fn empty_methods_is_an_error() {
        let cfg = ExperimentConfig::new(
            ProblemSource::Generated(ProblemSpec::DiagLinear { n: 5, step: 1.0 }),
            Vec::new(),
        );
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r = ExperimentConfig::from_toml_str(
            "tirals = 3\n[problem]\nkind = \"fem-mass-1d\"\nn = 4\n",
        );
        assert!(r.is_err());
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
        assert!(mean_std(&[]).0.is_nan());
        assert_eq!(mean_std(&[4.0]).1, 0.0);
    }

    #[test]
    fn labels() {
        let mut e = MethodEntry::new(Method::Depth1, BetaSchedule::Fixed { beta: 0.84 });
        e.replace_current = true;
        assert_eq!(e.label(), "depth1+replace");
        let mut b = MethodEntry::new(Method::Base, BetaSchedule::Fixed { beta: 0.0 });
        b.include_previous = Some(false);
        assert_eq!(b.label(), "base-prev");
        assert_eq!(sanitize("safeguarded:0.1"), "safeguarded-0.1");
    }
}
