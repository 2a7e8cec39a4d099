use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ifkrylov::analysis::{
    damping_eta_hat_affine, damping_eta_hat_heavyball, recover_lopcg_beta, LopcgRecovery,
    ModeDecomposition,
};
use ifkrylov::experiment::{solve, write_history_csv};
use ifkrylov::{
    compare_table, dense_oracle, run_experiment, BetaSchedule, ConvergenceHistory,
    ExperimentConfig, HeavyBallSign, Method, MethodEntry, ProblemSource, ProblemSpec, SymPencil,
};

/// Inverse-free Krylov eigensolvers with momentum acceleration.
#[derive(Parser, Debug)]
#[command(name = "ifkrylov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the first configured method once and write its history.
    Solve(RunArgs),
    /// Run every method for every trial and print the comparison table.
    Bench(RunArgs),
    /// Export per-mode damping ratios eta and eta-hat for single-vector runs.
    Diagnose(RunArgs),
    /// Print the dense spectrum of the configured pencil.
    Oracle {
        #[command(flatten)]
        run: RunArgs,
        /// Number of eigenpairs to print (all by default).
        #[arg(long)]
        count: Option<usize>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ScheduleKind {
    Fixed,
    Adaptive,
    Safeguarded,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SignArg {
    Plus,
    Minus,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML experiment file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generated problem as a TOML inline table, e.g. '{ kind = "diag-linear", n = 500, step = 0.1 }'.
    #[arg(long, conflicts_with = "matrix")]
    problem: Option<String>,
    /// Matrix Market file for A.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Matrix Market file for B (identity when omitted).
    #[arg(long, requires = "matrix")]
    mass: Option<PathBuf>,
    /// base, depth1, nesterov-like or heavy-ball-like. Replaces the configured method list.
    #[arg(long)]
    method: Option<Method>,
    #[arg(long, value_enum)]
    schedule: Option<ScheduleKind>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    beta_max: Option<f64>,
    /// Build the chain from the extrapolated vector in place of the current iterate.
    #[arg(long)]
    replace_current: bool,
    /// Feed x_prev - x and y - x to the orthogonalisation instead of the raw vectors.
    #[arg(long)]
    difference_candidates: bool,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    block: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    heavy_ball_sign: Option<SignArg>,
}

impl RunArgs {
    fn schedule_override(&self) -> Result<Option<BetaSchedule>> {
        let kind = match (self.schedule, self.beta, self.beta_max) {
            (Some(k), _, _) => k,
            (None, Some(_), _) => ScheduleKind::Fixed,
            (None, None, Some(_)) => ScheduleKind::Safeguarded,
            (None, None, None) => return Ok(None),
        };
        let s = match kind {
            ScheduleKind::Fixed => BetaSchedule::Fixed {
                beta: self.beta.unwrap_or(0.0),
            },
            ScheduleKind::Adaptive => BetaSchedule::Adaptive,
            ScheduleKind::Safeguarded => BetaSchedule::Safeguarded {
                beta_max: self.beta_max.unwrap_or(1.0),
            },
        };
        s.validate()?;
        Ok(Some(s))
    }

    fn problem_override(&self) -> Result<Option<ProblemSource>> {
        if let Some(matrix) = &self.matrix {
            return Ok(Some(ProblemSource::File {
                matrix: matrix.clone(),
                mass: self.mass.clone(),
            }));
        }
        match &self.problem {
            Some(text) => {
                #[derive(serde::Deserialize)]
                struct Wrap {
                    problem: ProblemSpec,
                }
                let w: Wrap = toml::from_str(&format!("problem = {text}"))
                    .with_context(|| format!("cannot parse problem '{text}'"))?;
                Ok(Some(ProblemSource::Generated(w.problem)))
            }
            None => Ok(None),
        }
    }

    /// Config file (if any) with command-line overrides applied.
    fn resolve(&self) -> Result<ExperimentConfig> {
        let problem = self.problem_override()?;
        let mut cfg = match &self.config {
            Some(path) => {
                let mut cfg = ExperimentConfig::from_file(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                if let Some(p) = problem {
                    cfg.problem = p;
                }
                cfg
            }
            None => match problem {
                Some(p) => ExperimentConfig::new(p, Vec::new()),
                None => bail!("no problem given: use --config, --problem or --matrix"),
            },
        };

        let schedule = self.schedule_override()?;
        if let Some(method) = self.method {
            let s = schedule.unwrap_or(BetaSchedule::Fixed { beta: 0.0 });
            cfg.methods = vec![MethodEntry::new(method, s)];
        } else if cfg.methods.is_empty() && self.config.is_none() {
            let s = schedule.unwrap_or(BetaSchedule::Fixed { beta: 0.0 });
            cfg.methods = vec![MethodEntry::new(Method::Base, s)];
        } else if let Some(s) = schedule {
            for e in cfg.methods.iter_mut().filter(|e| e.method != Method::Base) {
                e.schedule = s;
            }
        }
        for e in &mut cfg.methods {
            e.replace_current |= self.replace_current && e.method != Method::Base;
            e.difference_candidates |= self.difference_candidates;
        }

        if let Some(m) = self.m {
            cfg.m = m;
        }
        if let Some(b) = self.block {
            cfg.block = b;
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(k) = self.max_iter {
            cfg.max_iter = k;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        match self.heavy_ball_sign {
            Some(SignArg::Plus) => cfg.heavy_ball_sign = HeavyBallSign::Plus,
            Some(SignArg::Minus) => cfg.heavy_ball_sign = HeavyBallSign::Minus,
            None => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load(cfg: &ExperimentConfig) -> Result<SymPencil> {
    cfg.problem
        .load()
        .with_context(|| format!("loading problem {}", cfg.problem.label()))
}

fn cmd_solve(args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let p = load(&cfg)?;
    let entry = &cfg.methods[0];
    let h = solve(&p, &cfg.solve_config(entry, 0))?;
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join("history.csv");
    write_history_csv(&path, &h)?;

    let mut out = std::io::stdout().lock();
    writeln!(out, "problem     {}", cfg.problem.label())?;
    writeln!(out, "method      {} {}", entry.label(), entry.schedule.label())?;
    writeln!(out, "converged   {}", h.converged)?;
    writeln!(out, "iterations  {}", h.iterations)?;
    let last = h.records.last().expect("history has an initial record");
    for (i, (v, r)) in last.ritz_values.iter().zip(&last.residuals).enumerate() {
        writeln!(out, "pair {i}      ritz {v:.15e}  residual {r:.3e}")?;
    }
    writeln!(out, "history     {}", path.display())?;
    Ok(())
}

fn cmd_bench(args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let summary = run_experiment(&cfg)?;
    for row in &summary.rows {
        if row.converged_runs < row.trials {
            log::warn!(
                "{} {}: {}/{} runs converged",
                row.method,
                row.beta,
                row.converged_runs,
                row.trials
            );
        }
    }
    print!("{}", compare_table(&[summary]));
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn write_damping_csv(path: &Path, method: Method, h: &ConvergenceHistory, dec: &ModeDecomposition) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["mode", "k", "eta", "eta_hat"])?;
    let betas = h.betas();
    let steps = h.iterates.len().saturating_sub(1);
    let mut eta_hist = Vec::with_capacity(steps);
    for k in 0..steps {
        let eta = dec.damping_eta(k);
        eta_hist.push(eta.clone());
        let eta_hat = match method {
            Method::Base => dec.eta_hat_direct(k),
            Method::Depth1 | Method::NesterovLike => damping_eta_hat_affine(&eta, betas[k + 1]),
            Method::HeavyBallLike => damping_eta_hat_heavyball(&eta_hist, &betas[1..=k + 1]),
        };
        for (i, (e, eh)) in eta.iter().zip(&eta_hat).enumerate() {
            w.write_record([i.to_string(), k.to_string(), fmt_opt(*e), fmt_opt(*eh)])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_lopcg_csv(path: &Path, p: &SymPencil, h: &ConvergenceHistory) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "gamma", "beta", "tau", "beta_over_gamma", "reconstruction_residual"])?;
    let xs: Vec<&Vec<f64>> = h.iterates.iter().map(|s| &s.x[0]).collect();
    for k in 1..xs.len().saturating_sub(1) {
        let rho = p.rayleigh(xs[k])?;
        let r = p.residual(xs[k], rho)?;
        if let LopcgRecovery::Recovered(c) = recover_lopcg_beta(xs[k + 1], xs[k], xs[k - 1], &r)? {
            w.write_record([
                k.to_string(),
                format!("{:e}", c.gamma),
                format!("{:e}", c.beta),
                format!("{:e}", c.tau),
                format!("{:e}", c.beta / c.gamma),
                format!("{:e}", c.reconstruction_residual),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_diagnose(args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    if cfg.block != 1 {
        bail!("diagnose works on single-vector runs (block = 1)");
    }
    let p = load(&cfg)?;
    let spectrum = dense_oracle(&p)?;
    fs::create_dir_all(&cfg.out_dir)?;
    for (mi, entry) in cfg.methods.iter().enumerate() {
        let solve_cfg = cfg.solve_config(entry, 0).record_iterates(true).sign_pivot(Some(0));
        let h = solve(&p, &solve_cfg)?;
        let xs: Vec<Vec<f64>> = h.iterates.iter().map(|s| s.x[0].clone()).collect();
        let ys: Vec<Vec<f64>> = h.iterates.iter().map(|s| s.y[0].clone()).collect();
        let dec = ModeDecomposition::with_spectrum(&p, spectrum.clone(), &xs, &ys)?;
        let stem = format!("m{mi:02}_{}", entry.label().replace(|c: char| !c.is_ascii_alphanumeric(), "_"));
        let path = cfg.out_dir.join(format!("{stem}_damping.csv"));
        write_damping_csv(&path, entry.method, &h, &dec)?;
        println!("{}", path.display());
        if entry.method == Method::Base && cfg.m == 1 {
            let path = cfg.out_dir.join(format!("{stem}_lopcg.csv"));
            write_lopcg_csv(&path, &p, &h)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn cmd_oracle(args: &RunArgs, count: Option<usize>) -> Result<()> {
    let problem = match (args.problem_override()?, &args.config) {
        (Some(p), _) => p,
        (None, Some(path)) => ExperimentConfig::from_file(path)?.problem,
        (None, None) => bail!("no problem given: use --config, --problem or --matrix"),
    };
    let p = problem.load()?;
    let spectrum = dense_oracle(&p)?;
    let k = count.unwrap_or(spectrum.values.len()).min(spectrum.values.len());
    let mut out = std::io::stdout().lock();
    writeln!(out, "index,eigenvalue")?;
    for (i, v) in spectrum.values[..k].iter().enumerate() {
        writeln!(out, "{i},{v:e}")?;
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("IFKRYLOV_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Oracle { run, count } => cmd_oracle(run, *count),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
