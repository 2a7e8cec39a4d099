//! Outer iterations of the single-vector and block accelerated inverse-free
//! Krylov methods.
//!
//! Each iteration builds a search space from the current Ritz block and the
//! auxiliary vectors, performs Rayleigh-Ritz, and updates the momentum
//! state. The single-vector solver projects the shifted operator
//! `Z^T (A - theta B) Z`; the block solver projects `Z^T A Z`. Reported Ritz
//! values are always recomputed as Rayleigh quotients of the lifted vectors.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::analysis::force_direction;
use crate::dense::DenseMat;
use crate::dense_eig::{gen_sym_eig, DenseSymPencil};
use crate::error::{Error, Result};
use crate::momentum::{next_beta, update_auxiliary, BetaSchedule, HeavyBallSign};
use crate::pencil::SymPencil;
use crate::subspace::{
    b_orthonormalize, build_subspace, Basis, Method, SubspaceInputs, SubspaceSpec,
    DEFAULT_DROP_TOL,
};
use crate::vecops::{combine, dot, norm2};

/// Slack on Ritz-value monotonicity, relative to `|rho|`.
pub const MONOTONE_RTOL: f64 = 1e-12;
/// Bound on `|Z^T r|` relative to `||A||`.
pub const ORTHO_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveConfig {
    pub subspace: SubspaceSpec,
    pub schedule: BetaSchedule,
    /// Block size `b`.
    pub block: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Seed for the random initial block.
    pub seed: u64,
    pub heavy_ball_sign: HeavyBallSign,
    pub drop_tol: f64,
    /// Keep every `x_k` and raw `y_k` in the history (for diagnostics).
    pub record_iterates: bool,
    /// Flip each new Ritz vector so this entry is nonnegative.
    pub sign_pivot: Option<usize>,
}

impl SolveConfig {
    pub fn new(method: Method, m: usize) -> Self {
        Self {
            subspace: SubspaceSpec::new(method, m),
            schedule: BetaSchedule::Fixed { beta: 0.0 },
            block: 1,
            tol: 1e-8,
            max_iter: 1000,
            seed: 0,
            heavy_ball_sign: HeavyBallSign::Plus,
            drop_tol: DEFAULT_DROP_TOL,
            record_iterates: false,
            sign_pivot: None,
        }
    }

    pub fn schedule(mut self, schedule: BetaSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn fixed_beta(self, beta: f64) -> Self {
        self.schedule(BetaSchedule::Fixed { beta })
    }

    pub fn block(mut self, b: usize) -> Self {
        self.block = b;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn heavy_ball_sign(mut self, sign: HeavyBallSign) -> Self {
        self.heavy_ball_sign = sign;
        self
    }

    pub fn include_previous(mut self, include: bool) -> Self {
        self.subspace.include_previous = include;
        self
    }

    pub fn replace_current(mut self, replace: bool) -> Self {
        self.subspace.replace_current = replace;
        self
    }

    pub fn difference_candidates(mut self, diff: bool) -> Self {
        self.subspace.difference_candidates = diff;
        self
    }

    pub fn record_iterates(mut self, record: bool) -> Self {
        self.record_iterates = record;
        self
    }

    pub fn sign_pivot(mut self, pivot: Option<usize>) -> Self {
        self.sign_pivot = pivot;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.subspace.validate()?;
        self.schedule.validate()?;
        if self.block == 0 {
            return Err(Error::InvalidConfig("block size must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig("tol must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Ritz block and momentum history carried between outer iterations.
#[derive(Debug, Clone)]
pub struct RitzState {
    /// B-normalized Ritz vectors `x_i^{(k)}`.
    pub x: Vec<Vec<f64>>,
    pub x_prev: Option<Vec<Vec<f64>>>,
    /// Raw auxiliary vectors `y_i^{(k)}`.
    pub y: Vec<Vec<f64>>,
    /// `rho(x_i^{(k)})`.
    pub rho: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `||grad rho(x_1^{(k)})||`, feeding the adaptive schedules.
    pub grad_norm: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// `||A x_i - rho_i B x_i||_2` per pair.
    pub residuals: Vec<f64>,
    pub ritz_values: Vec<f64>,
    /// Momentum weight used to form `y_k` from this iterate.
    pub beta: f64,
    /// Rank of the basis that produced this iterate (0 at `k = 0`).
    pub basis_rank: usize,
    pub dropped: usize,
    /// Eigenvalues of the projected pencil (shifted for the single-vector
    /// method); diagnostic only.
    pub projected: Vec<f64>,
    /// `max |z_j^T r_i|` over the producing basis.
    pub ortho_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateSnapshot {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceHistory {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    /// Outer iterations performed.
    pub iterations: usize,
    pub wall_time: Duration,
    /// `||A||` estimate used for the orthogonality bound.
    pub a_norm: f64,
    pub iterates: Vec<IterateSnapshot>,
}

impl ConvergenceHistory {
    pub fn final_residuals(&self) -> &[f64] {
        &self.records.last().expect("history is never empty").residuals
    }

    pub fn ritz_sequence(&self, pair: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.ritz_values[pair]).collect()
    }

    pub fn residual_sequence(&self, pair: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.residuals[pair]).collect()
    }

    pub fn betas(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.beta).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub history: ConvergenceHistory,
    pub state: RitzState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Projection {
    Shifted,
    Unshifted,
}

/// Single-vector accelerated method.
pub fn solve_single(p: &SymPencil, cfg: &SolveConfig) -> Result<SolveOutcome> {
    single_block_check(cfg)?;
    let x0 = random_initial_block(p, 1, cfg.seed)?;
    run(p, cfg, x0, Projection::Shifted)
}

pub fn solve_single_with_initial(p: &SymPencil, cfg: &SolveConfig, x0: &[f64]) -> Result<SolveOutcome> {
    single_block_check(cfg)?;
    let x0 = initial_block_from(p, &[x0.to_vec()])?;
    run(p, cfg, x0, Projection::Shifted)
}

/// Block accelerated method for the `cfg.block` smallest eigenpairs.
pub fn solve_block(p: &SymPencil, cfg: &SolveConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    let x0 = random_initial_block(p, cfg.block, cfg.seed)?;
    run(p, cfg, x0, Projection::Unshifted)
}

pub fn solve_block_with_initial(
    p: &SymPencil,
    cfg: &SolveConfig,
    x0: &[Vec<f64>],
) -> Result<SolveOutcome> {
    cfg.validate()?;
    if x0.len() != cfg.block {
        return Err(Error::DimensionMismatch {
            expected: cfg.block,
            found: x0.len(),
        });
    }
    let x0 = initial_block_from(p, x0)?;
    run(p, cfg, x0, Projection::Unshifted)
}

fn single_block_check(cfg: &SolveConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.block != 1 {
        return Err(Error::InvalidConfig(format!(
            "single-vector solver needs block = 1, got {}",
            cfg.block
        )));
    }
    Ok(())
}

/// Standard-normal block from a seeded RNG, drawn column by column.
pub fn random_block(n: usize, b: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..b)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect()
}

fn random_initial_block(p: &SymPencil, b: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    initial_block_from(p, &random_block(p.n(), b, seed))
}

/// B-orthonormalizes the block and rotates it to Ritz vectors of its own
/// span, so that `X^T A X` is diagonal and sorted.
fn initial_block_from(p: &SymPencil, block: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    for v in block {
        if v.len() != p.n() {
            return Err(Error::DimensionMismatch {
                expected: p.n(),
                found: v.len(),
            });
        }
    }
    let b = block.len();
    let basis = b_orthonormalize(p, block, DEFAULT_DROP_TOL, b)?;
    if b == 1 {
        return Ok(basis.columns);
    }
    let (_, vectors) = rayleigh_ritz(p, &basis, b, None)?;
    Ok(vectors)
}

/// Smallest `count` Ritz pairs of `(A - shift B)` on the basis. Returns
/// projected eigenvalues and the lifted vectors (not yet normalized).
fn rayleigh_ritz(
    p: &SymPencil,
    basis: &Basis,
    count: usize,
    shift: Option<f64>,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let r = basis.rank;
    let az: Vec<Vec<f64>> = basis
        .columns
        .iter()
        .map(|z| p.apply_a(z))
        .collect::<Result<_>>()?;
    let mut am = DenseMat::zeros(r, r);
    let mut bm = DenseMat::zeros(r, r);
    for i in 0..r {
        for j in i..r {
            let bij = dot(&basis.columns[i], &basis.b_columns[j]);
            let mut aij = dot(&basis.columns[i], &az[j]);
            if let Some(theta) = shift {
                aij -= theta * bij;
            }
            am[(i, j)] = aij;
            am[(j, i)] = aij;
            bm[(i, j)] = bij;
            bm[(j, i)] = bij;
        }
    }
    let eig = gen_sym_eig(&DenseSymPencil::new(am, bm)?, count)?;
    let vectors = (0..count)
        .map(|c| combine(&basis.columns, &eig.vectors.column(c)))
        .collect();
    Ok((eig.values, vectors))
}

struct PairEval {
    rho: f64,
    residual: Vec<f64>,
    residual_norm: f64,
}

fn evaluate(p: &SymPencil, x: &[f64]) -> Result<PairEval> {
    let ax = p.apply_a(x)?;
    let bx = p.apply_b(x)?;
    let xbx = dot(x, &bx);
    if xbx <= 0.0 {
        return Err(Error::NotPositiveDefinite(xbx));
    }
    let rho = dot(x, &ax) / xbx;
    let residual: Vec<f64> = ax.iter().zip(&bx).map(|(a, b)| a - rho * b).collect();
    let residual_norm = norm2(&residual);
    Ok(PairEval {
        rho,
        residual,
        residual_norm,
    })
}

fn run(
    p: &SymPencil,
    cfg: &SolveConfig,
    x0: Vec<Vec<f64>>,
    projection: Projection,
) -> Result<SolveOutcome> {
    let start = Instant::now();
    let b = x0.len();
    let method = cfg.subspace.method;

    let mut x = x0;
    if let Some(pivot) = cfg.sign_pivot {
        x = x.into_iter().map(|v| force_direction(&v, pivot)).collect();
    }
    let evals: Vec<PairEval> = x.iter().map(|v| evaluate(p, v)).collect::<Result<_>>()?;
    let residuals: Vec<f64> = evals.iter().map(|e| e.residual_norm).collect();
    let mut state = RitzState {
        y: x.clone(),
        x,
        x_prev: None,
        rho: evals.iter().map(|e| e.rho).collect(),
        // ||grad rho(x)|| = 2 ||r|| / (x^T B x), and x^T B x = 1 here.
        grad_norm: 2.0 * residuals[0],
        residuals,
        k: 0,
    };

    let mut history = ConvergenceHistory {
        records: vec![IterationRecord {
            iter: 0,
            residuals: state.residuals.clone(),
            ritz_values: state.rho.clone(),
            beta: cfg.schedule.initial(),
            basis_rank: 0,
            dropped: 0,
            projected: Vec::new(),
            ortho_defect: 0.0,
        }],
        converged: false,
        iterations: 0,
        wall_time: Duration::ZERO,
        a_norm: p.a_norm_estimate(),
        iterates: Vec::new(),
    };
    if cfg.record_iterates {
        history.iterates.push(IterateSnapshot {
            x: state.x.clone(),
            y: state.y.clone(),
        });
    }

    let converged = |res: &[f64]| res.iter().all(|&r| r < cfg.tol);
    history.converged = converged(&state.residuals);

    while !history.converged && state.k < cfg.max_iter {
        let theta: Vec<f64> = match method {
            Method::NesterovLike => state.y.iter().map(|v| p.rayleigh(v)).collect::<Result<_>>()?,
            _ => state.rho.clone(),
        };
        let inputs = SubspaceInputs {
            x: &state.x,
            x_prev: state.x_prev.as_deref(),
            y: &state.y,
            theta: &theta,
        };
        let basis = build_subspace(&cfg.subspace, p, &inputs, cfg.drop_tol)?;
        if basis.rank < b {
            return Err(Error::BasisRankTooSmall {
                rank: basis.rank,
                block: b,
            });
        }

        let shift = match projection {
            Projection::Shifted => Some(theta[0]),
            Projection::Unshifted => None,
        };
        let (projected, lifted) = rayleigh_ritz(p, &basis, b, shift)?;

        let mut x_new = Vec::with_capacity(b);
        for (i, v) in lifted.into_iter().enumerate() {
            let (mut v, _) = p.b_normalize(&v)?;
            if p.b_dot(&v, &state.x[i])? < 0.0 {
                v.iter_mut().for_each(|c| *c = -*c);
            }
            if let Some(pivot) = cfg.sign_pivot {
                v = force_direction(&v, pivot);
            }
            x_new.push(v);
        }
        let evals: Vec<PairEval> = x_new.iter().map(|v| evaluate(p, v)).collect::<Result<_>>()?;
        let ortho_defect = evals
            .iter()
            .flat_map(|e| basis.columns.iter().map(move |z| dot(z, &e.residual).abs()))
            .fold(0.0, f64::max);
        let rho_new: Vec<f64> = evals.iter().map(|e| e.rho).collect();
        let res_new: Vec<f64> = evals.iter().map(|e| e.residual_norm).collect();

        let grad_new = 2.0 * res_new[0];
        let beta = if method.uses_momentum() {
            next_beta(&cfg.schedule, grad_new, state.grad_norm)?
        } else {
            0.0
        };
        let y_new: Vec<Vec<f64>> = (0..b)
            .map(|i| {
                update_auxiliary(
                    method,
                    &x_new[i],
                    &state.x[i],
                    &state.y[i],
                    beta,
                    cfg.heavy_ball_sign,
                )
            })
            .collect();

        history.records.push(IterationRecord {
            iter: state.k + 1,
            residuals: res_new.clone(),
            ritz_values: rho_new.clone(),
            beta,
            basis_rank: basis.rank,
            dropped: basis.dropped,
            projected,
            ortho_defect,
        });
        if cfg.record_iterates {
            history.iterates.push(IterateSnapshot {
                x: x_new.clone(),
                y: y_new.clone(),
            });
        }

        state.x_prev = Some(std::mem::replace(&mut state.x, x_new));
        state.y = y_new;
        state.rho = rho_new;
        state.residuals = res_new;
        state.grad_norm = grad_new;
        state.k += 1;
        history.iterations = state.k;
        history.converged = converged(&state.residuals);
    }

    history.wall_time = start.elapsed();
    log::debug!(
        "{} m={} b={}: {} iterations, converged={}",
        method,
        cfg.subspace.m,
        b,
        history.iterations,
        history.converged
    );
    Ok(SolveOutcome {
        values: state.rho.clone(),
        vectors: state.x.clone(),
        history,
        state,
    })
}

/// Ritz values nonincreasing (slack `1e-12 |rho|`) and residuals orthogonal
/// to the producing basis (`<= 1e-8 ||A||`) at every iteration.
pub fn check_lemma1(history: &ConvergenceHistory) -> bool {
    let monotone = history.records.windows(2).all(|w| {
        w[0].ritz_values
            .iter()
            .zip(&w[1].ritz_values)
            .all(|(&old, &new)| new <= old + MONOTONE_RTOL * old.abs())
    });
    let orthogonal = history
        .records
        .iter()
        .all(|r| r.ortho_defect <= ORTHO_RTOL * history.a_norm);
    monotone && orthogonal
}
