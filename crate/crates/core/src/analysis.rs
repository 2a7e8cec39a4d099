//! Extrapolation diagnostics: per-mode damping factors and the momentum
//! weight implicitly chosen by a locally optimal (LOPCG) step.
//!
//! For a B-orthonormal eigenbasis `{v_i}` and iterates `x^(k)`, the mode
//! coefficients are `c_i^(k) = v_i^T B x^(k)` and the damping factor is
//! `eta_i^(k+1) = c_i^(k+1) / c_i^(k)`. The `eta_hat` variants measure the
//! same ratio for the auxiliary vector `y^(k+1)` in place of `x^(k+1)`.

use crate::error::{Error, Result};
use crate::pencil::SymPencil;
use crate::problems::{dense_oracle, DenseSpectrum};
use crate::vecops::{dot, norm2};

/// Coefficients at or below this magnitude make a ratio undefined.
pub const UNDEFINED_FLOOR: f64 = 1e-14;
/// Minimum singular value of the normalized `[x, x - x_prev, r]` columns.
pub const LOPCG_RANK_TOL: f64 = 1e-10;

/// Returns `x` or `-x` so that `x[pivot] >= 0`.
pub fn force_direction(x: &[f64], pivot: usize) -> Vec<f64> {
    if x[pivot] < 0.0 {
        x.iter().map(|v| -v).collect()
    } else {
        x.to_vec()
    }
}

#[derive(Debug, Clone)]
pub struct ModeDecomposition {
    pub spectrum: DenseSpectrum,
    /// `x_coeffs[k][i] = v_i^T B x^(k)`
    pub x_coeffs: Vec<Vec<f64>>,
    /// Same for the auxiliary iterates `y^(k)`; empty if none were given.
    pub y_coeffs: Vec<Vec<f64>>,
}

impl ModeDecomposition {
    /// Decomposes iterates over the pencil's eigenbasis (dense oracle, so
    /// `n <= 2000`).
    pub fn new(p: &SymPencil, x_iterates: &[Vec<f64>], y_iterates: &[Vec<f64>]) -> Result<Self> {
        let spectrum = dense_oracle(p)?;
        Self::with_spectrum(p, spectrum, x_iterates, y_iterates)
    }

    pub fn with_spectrum(
        p: &SymPencil,
        spectrum: DenseSpectrum,
        x_iterates: &[Vec<f64>],
        y_iterates: &[Vec<f64>],
    ) -> Result<Self> {
        let coeffs = |iterates: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> {
            iterates
                .iter()
                .map(|x| {
                    let bx = p.apply_b(x)?;
                    Ok(spectrum.vectors.iter().map(|v| dot(v, &bx)).collect())
                })
                .collect()
        };
        let x_coeffs = coeffs(x_iterates)?;
        let y_coeffs = coeffs(y_iterates)?;
        Ok(Self {
            spectrum,
            x_coeffs,
            y_coeffs,
        })
    }

    pub fn modes(&self) -> usize {
        self.spectrum.values.len()
    }

    /// `eta^(k+1)`, one entry per mode; `None` where `|c_i^(k)|` is at or
    /// below the floor.
    pub fn damping_eta(&self, k: usize) -> Vec<Option<f64>> {
        ratio(&self.x_coeffs[k + 1], &self.x_coeffs[k])
    }

    /// `eta_hat^(k+1)` measured directly from `y^(k+1)`.
    pub fn eta_hat_direct(&self, k: usize) -> Vec<Option<f64>> {
        ratio(&self.y_coeffs[k + 1], &self.x_coeffs[k])
    }
}

fn ratio(num: &[f64], den: &[f64]) -> Vec<Option<f64>> {
    num.iter()
        .zip(den)
        .map(|(&a, &b)| (b.abs() > UNDEFINED_FLOOR).then(|| a / b))
        .collect()
}

/// Depth-1/Nesterov damping: `(1 + beta) eta - beta`.
pub fn damping_eta_hat_affine(eta: &[Option<f64>], beta: f64) -> Vec<Option<f64>> {
    eta.iter().map(|e| e.map(|e| (1.0 + beta) * e - beta)).collect()
}

/// Heavy-ball damping for `y_k = x_k + beta_k y_{k-1}`, `y_0 = x_0`:
///
/// `eta_hat^(k+1) = eta^(k+1) + beta_{k+1} (1 + sum_{l=1..k} prod_{m=1..l} beta_{k+1-m} / eta^(k+1-m))`.
///
/// `eta_hist[j]` and `beta_hist[j]` hold `eta^(j+1)` and `beta_{j+1}`; the
/// last entries are the step being evaluated.
pub fn damping_eta_hat_heavyball(eta_hist: &[Vec<Option<f64>>], beta_hist: &[f64]) -> Vec<Option<f64>> {
    assert_eq!(eta_hist.len(), beta_hist.len(), "histories must align");
    assert!(!eta_hist.is_empty(), "need at least one step");
    let steps = eta_hist.len();
    let modes = eta_hist[0].len();
    (0..modes)
        .map(|i| {
            // acc = c(y_j) / c(x_j), built up from acc = 1 at j = 0.
            let mut acc = 1.0;
            for j in 0..steps - 1 {
                let eta = eta_hist[j][i].filter(|e| e.abs() > UNDEFINED_FLOOR)?;
                acc = 1.0 + beta_hist[j] / eta * acc;
            }
            let eta_last = eta_hist[steps - 1][i]?;
            Some(eta_last + beta_hist[steps - 1] * acc)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LopcgCoefficients {
    pub gamma: f64,
    pub beta: f64,
    pub tau: f64,
    /// `||x_next - (gamma x + beta (x - x_prev) + tau r)|| / ||x_next||`
    pub reconstruction_residual: f64,
    pub min_singular_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LopcgRecovery {
    Recovered(LopcgCoefficients),
    /// The three directions are numerically dependent (typically near
    /// convergence); no coefficients are defined.
    RankDeficient { min_singular_value: f64 },
}

impl LopcgRecovery {
    pub fn coefficients(&self) -> Option<LopcgCoefficients> {
        match *self {
            LopcgRecovery::Recovered(c) => Some(c),
            LopcgRecovery::RankDeficient { .. } => None,
        }
    }
}

/// Least-squares `(gamma, beta, tau)` with
/// `x_next ~ gamma x + beta (x - x_prev) + tau r`.
pub fn recover_lopcg_beta(x_next: &[f64], x: &[f64], x_prev: &[f64], r: &[f64]) -> Result<LopcgRecovery> {
    let n = x.len();
    for v in [x_next, x_prev, r] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    let diff: Vec<f64> = x.iter().zip(x_prev).map(|(a, b)| a - b).collect();
    let raw = [x.to_vec(), diff, r.to_vec()];
    let scales: Vec<f64> = raw.iter().map(|c| norm2(c)).collect();
    if scales.contains(&0.0) {
        return Ok(LopcgRecovery::RankDeficient {
            min_singular_value: 0.0,
        });
    }
    let mut cols: Vec<Vec<f64>> = raw
        .iter()
        .zip(&scales)
        .map(|(c, s)| c.iter().map(|v| v / s).collect())
        .collect();
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    one_sided_jacobi(&mut cols, &mut v);

    let sigma: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    let min_sv = sigma.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_sv > LOPCG_RANK_TOL) {
        return Ok(LopcgRecovery::RankDeficient {
            min_singular_value: min_sv,
        });
    }
    // w = V diag(1/sigma^2) (U sigma)^T x_next, where cols hold U sigma.
    let proj: Vec<f64> = cols
        .iter()
        .zip(&sigma)
        .map(|(c, s)| dot(c, x_next) / (s * s))
        .collect();
    let mut coeffs = [0.0; 3];
    for (row, coeff) in coeffs.iter_mut().enumerate() {
        let w: f64 = (0..3).map(|j| v[row][j] * proj[j]).sum();
        *coeff = w / scales[row];
    }
    let recon: Vec<f64> = (0..n)
        .map(|i| x_next[i] - coeffs[0] * raw[0][i] - coeffs[1] * raw[1][i] - coeffs[2] * raw[2][i])
        .collect();
    let denom = norm2(x_next).max(f64::MIN_POSITIVE);
    Ok(LopcgRecovery::Recovered(LopcgCoefficients {
        gamma: coeffs[0],
        beta: coeffs[1],
        tau: coeffs[2],
        reconstruction_residual: norm2(&recon) / denom,
        min_singular_value: min_sv,
    }))
}

/// Hestenes one-sided Jacobi: rotates the columns until mutually orthogonal,
/// accumulating the rotations in `v` (so `cols_out = cols_in * v`).
fn one_sided_jacobi(cols: &mut [Vec<f64>], v: &mut [[f64; 3]; 3]) {
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..3 {
            for q in (p + 1)..3 {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                for (a, b) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (ap, bq) = (*a, *b);
                    *a = c * ap - s * bq;
                    *b = s * ap + c * bq;
                }
                for row in v.iter_mut() {
                    let (ap, bq) = (row[p], row[q]);
                    row[p] = c * ap - s * bq;
                    row[q] = s * ap + c * bq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn force_direction_examples() {
        assert_eq!(force_direction(&[-1.0, 0.0], 0), vec![1.0, 0.0]);
        assert_eq!(force_direction(&[1.0, 0.0], 0), vec![1.0, 0.0]);
        assert_eq!(force_direction(&[0.5, -2.0], 1), vec![-0.5, 2.0]);
    }

    #[test]
    fn affine_examples() {
        let eta = vec![Some(0.5), Some(1.0), None];
        assert_eq!(damping_eta_hat_affine(&eta, 0.0), eta);
        let h = damping_eta_hat_affine(&eta, 0.75);
        assert!((h[0].unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(h[1], Some(1.0));
        assert_eq!(h[2], None);
    }

    #[test]
    fn heavyball_degenerate_cases() {
        let eta = vec![vec![Some(0.3), Some(-0.7)], vec![Some(0.2), Some(0.9)]];
        assert_eq!(damping_eta_hat_heavyball(&eta, &[0.0, 0.0]), eta[1]);
        let one = vec![vec![Some(0.3), Some(-0.7)]];
        let h = damping_eta_hat_heavyball(&one, &[0.1]);
        assert!((h[0].unwrap() - 0.4).abs() < 1e-15);
        assert!((h[1].unwrap() + 0.6).abs() < 1e-15);
    }

    #[test]
    fn heavyball_flags_zero_divisor() {
        let eta = vec![vec![Some(0.0), Some(0.5)], vec![Some(0.2), Some(0.4)]];
        let h = damping_eta_hat_heavyball(&eta, &[0.1, 0.1]);
        assert_eq!(h[0], None);
        assert!(h[1].is_some());
    }

    #[test]
    fn lopcg_pure_scaling() {
        let x = [1.0, 0.0, 0.0, 0.0];
        let xp = [0.6, 0.8, 0.0, 0.0];
        let r = [0.0, 0.0, 1.0, 0.5];
        let next = [2.0, 0.0, 0.0, 0.0];
        let c = recover_lopcg_beta(&next, &x, &xp, &r).unwrap().coefficients().unwrap();
        assert!((c.gamma - 2.0).abs() < 1e-14);
        assert!(c.beta.abs() < 1e-14 && c.tau.abs() < 1e-14);
        assert!(c.reconstruction_residual < 1e-14);
    }

    #[test]
    fn lopcg_constructed_combination() {
        let x = [0.3, -0.1, 0.7, 0.2, 0.5];
        let xp = [0.1, 0.4, 0.6, -0.3, 0.2];
        let r = [1.0, 0.0, -0.2, 0.4, 0.1];
        let next: Vec<f64> = (0..5).map(|i| x[i] + 0.5 * (x[i] - xp[i])).collect();
        let c = recover_lopcg_beta(&next, &x, &xp, &r).unwrap().coefficients().unwrap();
        assert!((c.gamma - 1.0).abs() < 1e-13);
        assert!((c.beta - 0.5).abs() < 1e-13);
        assert!(c.tau.abs() < 1e-13);
    }

    #[test]
    fn lopcg_flags_dependent_columns() {
        let x = [1.0, 0.0, 0.0];
        let xp = [0.0, 1.0, 0.0];
        let r = [1.0, -1.0, 0.0];
        let out = recover_lopcg_beta(&[1.0, 1.0, 0.0], &x, &xp, &r).unwrap();
        assert!(matches!(out, LopcgRecovery::RankDeficient { .. }));
    }
}
