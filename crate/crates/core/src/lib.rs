//! Inverse-free Krylov subspace eigensolvers for the symmetric-definite
//! generalized eigenproblem `A x = lambda B x`, with depth-1, Nesterov-like
//! and heavy-ball-like momentum, in single-vector and block form.
//!
//! ```
//! use ifkrylov::{generate, solve_single, Method, ProblemSpec, SolveConfig};
//!
//! let pencil = generate(&ProblemSpec::DiagLinear { n: 50, step: 0.1 }).unwrap();
//! let cfg = SolveConfig::new(Method::Depth1, 2).fixed_beta(0.25).tol(1e-9);
//! let out = solve_single(&pencil, &cfg).unwrap();
//! assert!(out.history.converged);
//! assert!((out.values[0] - 0.1).abs() < 1e-9);
//! ```

pub mod analysis;
pub mod dense;
pub mod dense_eig;
pub mod driver;
pub mod error;
pub mod experiment;
pub mod momentum;
pub mod pencil;
pub mod problems;
pub mod sparsemat;
pub mod subspace;
pub mod vecops;

pub use driver::{
    check_lemma1, solve_block, solve_block_with_initial, solve_single, solve_single_with_initial,
    ConvergenceHistory, IterationRecord, RitzState, SolveConfig, SolveOutcome,
};
pub use error::{Error, Result};
pub use experiment::{compare_table, run_experiment, ExperimentConfig, MethodEntry, ProblemSource};
pub use momentum::{BetaSchedule, HeavyBallSign};
pub use pencil::SymPencil;
pub use problems::{dense_oracle, generate, ProblemSpec};
pub use sparsemat::{load_matrix_market, write_matrix_market, SparseSym};
pub use subspace::{Method, SubspaceSpec};
