//! Momentum weights and auxiliary-vector updates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subspace::Method;

/// How `beta_k` is chosen at each outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BetaSchedule {
    Fixed { beta: f64 },
    /// Ratio of consecutive Rayleigh-quotient gradient norms.
    Adaptive,
    /// Adaptive ratio clipped at `beta_max`.
    Safeguarded { beta_max: f64 },
}

impl BetaSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BetaSchedule::Fixed { beta } if !(0.0..=1.0).contains(&beta) => Err(
                Error::InvalidConfig(format!("fixed beta must lie in [0, 1], got {beta}")),
            ),
            BetaSchedule::Safeguarded { beta_max } if !(beta_max > 0.0 && beta_max <= 1.0) => {
                Err(Error::InvalidConfig(format!(
                    "beta_max must lie in (0, 1], got {beta_max}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Value recorded before any gradient history exists.
    pub fn initial(&self) -> f64 {
        match *self {
            BetaSchedule::Fixed { beta } => beta,
            BetaSchedule::Adaptive => 0.0,
            BetaSchedule::Safeguarded { beta_max } => beta_max,
        }
    }

    /// Short label used in CSV output: `0.1`, `adaptive`, `safeguarded:0.1`.
    pub fn label(&self) -> String {
        match *self {
            BetaSchedule::Fixed { beta } => format!("{beta}"),
            BetaSchedule::Adaptive => "adaptive".to_string(),
            BetaSchedule::Safeguarded { beta_max } => format!("safeguarded:{beta_max}"),
        }
    }
}

pub fn next_beta(schedule: &BetaSchedule, grad_norm: f64, grad_norm_prev: f64) -> Result<f64> {
    match *schedule {
        BetaSchedule::Fixed { beta } => Ok(beta),
        BetaSchedule::Adaptive | BetaSchedule::Safeguarded { .. } if grad_norm_prev <= 0.0 => {
            Err(Error::ZeroGradientHistory)
        }
        BetaSchedule::Adaptive => Ok(grad_norm / grad_norm_prev),
        BetaSchedule::Safeguarded { beta_max } => Ok((grad_norm / grad_norm_prev).min(beta_max)),
    }
}

/// Sign applied to the accumulator term of the heavy-ball update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeavyBallSign {
    /// `y_k = x_k + beta y_{k-1}`
    #[default]
    Plus,
    /// `y_k = x_k - beta y_{k-1}`
    Minus,
}

impl HeavyBallSign {
    pub fn factor(self) -> f64 {
        match self {
            HeavyBallSign::Plus => 1.0,
            HeavyBallSign::Minus => -1.0,
        }
    }
}

impl std::str::FromStr for HeavyBallSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(HeavyBallSign::Plus),
            "minus" | "-" => Ok(HeavyBallSign::Minus),
            other => Err(Error::InvalidConfig(format!("unknown heavy-ball sign '{other}'"))),
        }
    }
}

/// New auxiliary vector.
///
/// Depth-1 and Nesterov-like: `x_new + beta (x_new - x_old)`.
/// Heavy-ball-like: `x_new + sign * beta * y_old`. `Base` returns `x_new`.
/// The result is not normalized.
pub fn update_auxiliary(
    method: Method,
    x_new: &[f64],
    x_old: &[f64],
    y_old: &[f64],
    beta: f64,
    sign: HeavyBallSign,
) -> Vec<f64> {
    match method {
        Method::Base => x_new.to_vec(),
        Method::Depth1 | Method::NesterovLike => x_new
            .iter()
            .zip(x_old)
            .map(|(xn, xo)| xn + beta * (xn - xo))
            .collect(),
        Method::HeavyBallLike => {
            let c = sign.factor() * beta;
            x_new.iter().zip(y_old).map(|(xn, yo)| xn + c * yo).collect()
        }
    }
}
