//! The symmetric-definite pencil `(A, B)` and the scalar/vector quantities
//! the solvers evaluate on it.
//!
//! Largest eigenvalues are obtained by negating `A`; there is no separate
//! code path for them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::sparsemat::SparseSym;
use crate::vecops::{dot, norm2};

#[derive(Debug, Clone)]
pub struct SymPencil {
    a: SparseSym,
    b: SparseSym,
}

impl SymPencil {
    pub fn new(a: SparseSym, b: SparseSym) -> Result<Self> {
        if a.n() != b.n() {
            return Err(Error::DimensionMismatch {
                expected: a.n(),
                found: b.n(),
            });
        }
        Ok(Self { a, b })
    }

    /// Standard problem `A x = λ x`.
    pub fn standard(a: SparseSym) -> Self {
        let n = a.n();
        Self {
            a,
            b: SparseSym::identity(n),
        }
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn a(&self) -> &SparseSym {
        &self.a
    }

    pub fn b(&self) -> &SparseSym {
        &self.b
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn apply_a(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.a.matvec(x)
    }

    pub fn apply_b(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.b.matvec(x)
    }

    /// `x^T B y`
    pub fn b_dot(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        Ok(dot(x, &self.b.matvec(y)?))
    }

    pub fn b_norm(&self, x: &[f64]) -> Result<f64> {
        let sq = self.b_dot(x, x)?;
        if sq < 0.0 {
            return Err(Error::NotPositiveDefinite(sq));
        }
        Ok(sq.sqrt())
    }

    pub fn rayleigh(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        if x.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroVector);
        }
        let xbx = dot(x, &self.b.matvec(x)?);
        if xbx <= 0.0 {
            return Err(Error::NotPositiveDefinite(xbx));
        }
        Ok(dot(x, &self.a.matvec(x)?) / xbx)
    }

    /// `A x - rho B x`
    pub fn residual(&self, x: &[f64], rho: f64) -> Result<Vec<f64>> {
        let mut r = self.a.matvec(x)?;
        let bx = self.b.matvec(x)?;
        for (ri, bi) in r.iter_mut().zip(&bx) {
            *ri -= rho * bi;
        }
        Ok(r)
    }

    /// Gradient of the Rayleigh quotient, `2 (A x - rho(x) B x) / (x^T B x)`.
    pub fn grad_rayleigh(&self, x: &[f64]) -> Result<Vec<f64>> {
        let rho = self.rayleigh(x)?;
        let xbx = self.b_dot(x, x)?;
        let mut g = self.residual(x, rho)?;
        let s = 2.0 / xbx;
        for gi in g.iter_mut() {
            *gi *= s;
        }
        Ok(g)
    }

    /// Returns `x / ||x||_B` together with the B-norm of the input.
    pub fn b_normalize(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let nrm = self.b_norm(x)?;
        if nrm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok((x.iter().map(|v| v / nrm).collect(), nrm))
    }

    /// Probabilistic positive-definiteness check of `B` on `samples` random
    /// Gaussian vectors.
    pub fn check_b_positive(&self, samples: usize, seed: u64) -> Result<()> {
        if self.b.is_identity() {
            return Ok(());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let x: Vec<f64> = (0..self.n()).map(|_| StandardNormal.sample(&mut rng)).collect();
            if norm2(&x) == 0.0 {
                continue;
            }
            let q = self.b_dot(&x, &x)?;
            if q <= 0.0 {
                return Err(Error::NotPositiveDefinite(q));
            }
        }
        Ok(())
    }

    /// Upper bound on `||A||_2` used to scale orthogonality tolerances.
    pub fn a_norm_estimate(&self) -> f64 {
        self.a.norm_inf()
    }
}
