//! Projection bases for the base and accelerated inverse-free Krylov
//! subspaces.
//!
//! Every method projects onto a span of the current Ritz vectors, an optional
//! previous block, and one Krylov chain per pair. The methods differ only in
//! the chain seed `y` and shift `theta`:
//!
//! | method        | seed `y_k`                      | shift `theta_k` |
//! |---------------|---------------------------------|-----------------|
//! | Base          | `x_k`                           | `rho(x_k)`      |
//! | Depth1        | `x_k + beta (x_k - x_{k-1})`    | `rho(x_k)`      |
//! | NesterovLike  | `x_k + beta (x_k - x_{k-1})`    | `rho(y_k)`      |
//! | HeavyBallLike | `x_k + beta y_{k-1}`            | `rho(x_k)`      |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pencil::SymPencil;
use crate::vecops::{axpy, dot, norm2};

pub const DEFAULT_DROP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Base,
    Depth1,
    NesterovLike,
    HeavyBallLike,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Base,
        Method::Depth1,
        Method::NesterovLike,
        Method::HeavyBallLike,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Base => "base",
            Method::Depth1 => "depth1",
            Method::NesterovLike => "nesterov",
            Method::HeavyBallLike => "heavy-ball",
        }
    }

    pub fn uses_momentum(self) -> bool {
        self != Method::Base
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(Method::Base),
            "depth1" | "depth-1" => Ok(Method::Depth1),
            "nesterov" | "nesterov-like" => Ok(Method::NesterovLike),
            "heavy-ball" | "heavyball" | "heavy-ball-like" => Ok(Method::HeavyBallLike),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which vectors span the search space at each outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubspaceSpec {
    pub method: Method,
    /// Krylov depth, at least 1.
    pub m: usize,
    /// Add the previous Ritz block `X^{(k-1)}` as extra candidates.
    pub include_previous: bool,
    /// Use `y_k` in place of `x_k` and seed the chain from `x_k`, giving
    /// `span{y_k, (A - rho_k B) x_k, ...}`. Here `beta` is imposed rather
    /// than chosen by Rayleigh-Ritz, and Ritz values need not decrease.
    #[serde(default)]
    pub replace_current: bool,
    /// Pass `x_{k-1} - x_k` and `y_k - x_k` instead of the raw vectors. The
    /// span is the same, but the relative drop test no longer discards the
    /// previous direction once steps become small.
    #[serde(default)]
    pub difference_candidates: bool,
}

impl SubspaceSpec {
    /// The previous block is included for `Base` (LOBPCG-like at `m = 1`)
    /// and left out for the accelerated methods, whose `y_k` already
    /// carries it.
    pub fn new(method: Method, m: usize) -> Self {
        Self {
            method,
            m,
            include_previous: method == Method::Base,
            replace_current: false,
            difference_candidates: false,
        }
    }

    pub fn with_previous(mut self, include: bool) -> Self {
        self.include_previous = include;
        self
    }

    pub fn with_replace_current(mut self, replace: bool) -> Self {
        self.replace_current = replace;
        self
    }

    pub fn with_difference_candidates(mut self, diff: bool) -> Self {
        self.difference_candidates = diff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidConfig("Krylov depth m must be >= 1".into()));
        }
        if self.replace_current && !self.method.uses_momentum() {
            return Err(Error::InvalidConfig(
                "replace_current needs an accelerated method".into(),
            ));
        }
        Ok(())
    }
}

/// B-orthonormal columns spanning the filtered candidate set.
#[derive(Debug, Clone)]
pub struct Basis {
    pub columns: Vec<Vec<f64>>,
    /// `B z` for each column, kept to avoid recomputing products.
    pub b_columns: Vec<Vec<f64>>,
    pub rank: usize,
    pub dropped: usize,
}

/// `[y, M y, ..., M^m y]` with `M = A - theta B`, each vector 2-normalized.
#[derive(Debug, Clone)]
pub struct KrylovChain {
    pub vectors: Vec<Vec<f64>>,
    /// Index of the first exactly-zero vector, after which the chain is
    /// padded with zeros.
    pub degenerate_from: Option<usize>,
}

impl KrylovChain {
    pub fn tail(&self) -> &[Vec<f64>] {
        &self.vectors[1..]
    }
}

pub fn krylov_chain(p: &SymPencil, theta: f64, y: &[f64], m: usize) -> Result<KrylovChain> {
    let n = p.n();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    let nrm = norm2(y);
    if nrm == 0.0 || !nrm.is_finite() {
        return Err(Error::ZeroVector);
    }
    let mut vectors = Vec::with_capacity(m + 1);
    vectors.push(y.iter().map(|v| v / nrm).collect::<Vec<_>>());
    let mut degenerate_from = None;
    for j in 1..=m {
        if degenerate_from.is_some() {
            vectors.push(vec![0.0; n]);
            continue;
        }
        let prev = &vectors[j - 1];
        let mut next = p.apply_a(prev)?;
        if theta != 0.0 {
            let bp = p.apply_b(prev)?;
            axpy(-theta, &bp, &mut next);
        }
        let nrm = norm2(&next);
        if nrm == 0.0 {
            degenerate_from = Some(j);
        } else {
            next.iter_mut().for_each(|v| *v /= nrm);
        }
        vectors.push(next);
    }
    Ok(KrylovChain {
        vectors,
        degenerate_from,
    })
}

/// Gram-Schmidt in the B-inner product with one full reorthogonalization
/// pass.
///
/// A candidate is dropped when its B-norm after projection is at most
/// `drop_tol` times its B-norm before. The first `protected` candidates are
/// never dropped; if one of them is dependent an error is returned.
pub fn b_orthonormalize(
    p: &SymPencil,
    candidates: &[Vec<f64>],
    drop_tol: f64,
    protected: usize,
) -> Result<Basis> {
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(candidates.len());
    let mut b_columns: Vec<Vec<f64>> = Vec::with_capacity(candidates.len());
    let mut dropped = 0;

    for (idx, cand) in candidates.iter().enumerate() {
        let mut v = cand.clone();
        let bv = p.apply_b(&v)?;
        let pre_sq = dot(&v, &bv);
        if pre_sq < 0.0 {
            return Err(Error::NotPositiveDefinite(pre_sq));
        }
        let pre = pre_sq.sqrt();
        if pre == 0.0 || !pre.is_finite() {
            if idx < protected {
                return Err(Error::ProtectedCandidateDropped(idx));
            }
            dropped += 1;
            continue;
        }
        for _pass in 0..2 {
            for (z, bz) in columns.iter().zip(&b_columns) {
                let coeff = dot(bz, &v);
                axpy(-coeff, z, &mut v);
            }
        }
        let bv = p.apply_b(&v)?;
        let post = dot(&v, &bv).max(0.0).sqrt();
        if post <= drop_tol * pre {
            if idx < protected {
                return Err(Error::ProtectedCandidateDropped(idx));
            }
            dropped += 1;
            continue;
        }
        let inv = 1.0 / post;
        columns.push(v.iter().map(|x| x * inv).collect());
        b_columns.push(bv.iter().map(|x| x * inv).collect());
    }

    if columns.is_empty() {
        return Err(Error::DegenerateCandidates);
    }
    let rank = columns.len();
    Ok(Basis {
        columns,
        b_columns,
        rank,
        dropped,
    })
}

/// Iterate data needed to assemble one search space; one entry per Ritz pair.
#[derive(Debug, Clone, Copy)]
pub struct SubspaceInputs<'a> {
    /// Current Ritz vectors `x_i^{(k)}`, B-normalized.
    pub x: &'a [Vec<f64>],
    /// Previous Ritz vectors, `None` at `k = 0`.
    pub x_prev: Option<&'a [Vec<f64>]>,
    /// Auxiliary vectors `y_i^{(k)}`, unnormalized, on the same scale as
    /// `x`. Ignored for `Base`, which seeds with `x`.
    pub y: &'a [Vec<f64>],
    /// Chain shifts `theta_i^{(k)}`.
    pub theta: &'a [f64],
}

/// Candidate order is `[X, X_prev?, y_1, tail_1, y_2, tail_2, ...]` (no `y`
/// for `Base`); the Ritz block comes first so it is never filtered out.
/// With `replace_current` the order is `[Y, X_prev?, tail(x_1), ...]`.
/// With `difference_candidates`, `X_prev` and `y_i` enter as differences
/// from the matching `x_i`.
pub fn subspace_candidates(
    spec: &SubspaceSpec,
    p: &SymPencil,
    inputs: &SubspaceInputs<'_>,
) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let b = inputs.x.len();
    if inputs.theta.len() != b || (spec.method.uses_momentum() && inputs.y.len() != b) {
        return Err(Error::DimensionMismatch {
            expected: b,
            found: inputs.theta.len().min(inputs.y.len()),
        });
    }
    let diff = |v: &[f64], x: &[f64]| -> Vec<f64> {
        if spec.difference_candidates {
            v.iter().zip(x).map(|(a, c)| a - c).collect()
        } else {
            v.to_vec()
        }
    };
    let mut candidates: Vec<Vec<f64>> = if spec.replace_current {
        inputs.y.to_vec()
    } else {
        inputs.x.to_vec()
    };
    if spec.include_previous {
        if let Some(prev) = inputs.x_prev {
            candidates.extend(prev.iter().zip(inputs.x).map(|(v, x)| diff(v, x)));
        }
    }
    for i in 0..b {
        if spec.replace_current {
            let chain = krylov_chain(p, inputs.theta[i], &inputs.x[i], spec.m)?;
            candidates.extend(chain.tail().iter().cloned());
            continue;
        }
        let seed = if spec.method.uses_momentum() {
            &inputs.y[i]
        } else {
            &inputs.x[i]
        };
        let chain = krylov_chain(p, inputs.theta[i], seed, spec.m)?;
        if spec.method.uses_momentum() {
            candidates.push(diff(seed, &inputs.x[i]));
        }
        candidates.extend(chain.tail().iter().cloned());
    }
    Ok(candidates)
}

pub fn build_subspace(
    spec: &SubspaceSpec,
    p: &SymPencil,
    inputs: &SubspaceInputs<'_>,
    drop_tol: f64,
) -> Result<Basis> {
    let candidates = subspace_candidates(spec, p, inputs)?;
    b_orthonormalize(p, &candidates, drop_tol, inputs.x.len())
}
