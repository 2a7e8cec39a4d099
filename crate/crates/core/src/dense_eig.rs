//! Dense symmetric and symmetric-definite eigensolvers for the small
//! projected problems.
//!
//! `sym_eig` is cyclic Jacobi. `gen_sym_eig` reduces `a v = mu b v` to
//! standard form with the Cholesky factor of `b`.

use crate::dense::DenseMat;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 30;
const OFF_DIAG_RTOL: f64 = 1e-14;

/// Projected pencil `(a, b)` with `a` symmetric and `b` SPD.
#[derive(Debug, Clone)]
pub struct DenseSymPencil {
    pub a: DenseMat,
    pub b: DenseMat,
}

impl DenseSymPencil {
    pub fn new(a: DenseMat, b: DenseMat) -> Result<Self> {
        if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: b.rows(),
            });
        }
        Ok(Self { a, b })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }
}

/// Eigenvalues ascending with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DenseMat,
}

/// Lower-triangular `L` with `L L^T = b`.
pub fn cholesky(b: &DenseMat) -> Result<DenseMat> {
    assert!(b.is_square());
    let n = b.rows();
    let mut l = DenseMat::zeros(n, n);
    for j in 0..n {
        let mut d = b[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::ProjectedNotSpd { index: j, value: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = b[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Stops once the off-diagonal Frobenius norm drops below
/// `1e-14 * ||a||_F`; more than 30 sweeps is reported as non-convergence.
pub fn sym_eig(a: &DenseMat) -> Result<EigenDecomposition> {
    assert!(a.is_square());
    let n = a.rows();
    let mut m = a.clone();
    m.symmetrize();
    let mut v = DenseMat::identity(n);
    let threshold = OFF_DIAG_RTOL * m.frobenius_norm();

    let mut converged = false;
    for sweep in 0..=MAX_SWEEPS {
        if off_diagonal_norm(&m) <= threshold {
            converged = true;
            break;
        }
        if sweep == MAX_SWEEPS {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                // Annihilate entries already below the diagonal's resolution.
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s, t, apq);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = DenseMat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, col)] = v[(r, src)];
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

#[allow(clippy::too_many_arguments)]
fn rotate(m: &mut DenseMat, v: &mut DenseMat, p: usize, q: usize, c: f64, s: f64, t: f64, apq: f64) {
    let n = m.rows();
    m[(p, p)] -= t * apq;
    m[(q, q)] += t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        let new_kp = c * mkp - s * mkq;
        let new_kq = s * mkp + c * mkq;
        m[(k, p)] = new_kp;
        m[(p, k)] = new_kp;
        m[(k, q)] = new_kq;
        m[(q, k)] = new_kq;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

fn off_diagonal_norm(m: &DenseMat) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// The `k` smallest eigenpairs of `a v = mu b v`, eigenvectors B-orthonormal.
pub fn gen_sym_eig(p: &DenseSymPencil, k: usize) -> Result<EigenDecomposition> {
    let n = p.dim();
    if k > n {
        return Err(Error::TooManyEigenpairs { requested: k, dim: n });
    }
    let l = cholesky(&p.b)?;
    // C = L^{-1} a L^{-T}
    let y = forward_solve_columns(&l, &p.a);
    let mut c = forward_solve_columns(&l, &y.transpose());
    c.symmetrize();
    let std = sym_eig(&c)?;

    let mut w = DenseMat::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            w[(i, j)] = std.vectors[(i, j)];
        }
    }
    let vectors = backward_solve_transpose_columns(&l, &w);
    Ok(EigenDecomposition {
        values: std.values[..k].to_vec(),
        vectors,
    })
}

/// Solves `L X = rhs` column by column for lower-triangular `L`.
fn forward_solve_columns(l: &DenseMat, rhs: &DenseMat) -> DenseMat {
    let n = l.rows();
    let mut x = rhs.clone();
    for col in 0..rhs.cols() {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    x
}

/// Solves `L^T X = rhs` column by column.
fn backward_solve_transpose_columns(l: &DenseMat, rhs: &DenseMat) -> DenseMat {
    let n = l.rows();
    let mut x = rhs.clone();
    for col in 0..rhs.cols() {
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    x
}
