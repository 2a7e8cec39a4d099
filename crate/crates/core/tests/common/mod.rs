//! Independent reference computations for the integration tests. Nothing
//! here calls into the library's dense eigensolver or Gram-Schmidt.

#![allow(dead_code)]

use ifkrylov::dense::DenseMat;
use ifkrylov::SparseSym;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> DenseMat {
    let mut m = DenseMat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rng.random_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// `G G^T + n I`, comfortably positive definite.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DenseMat {
    let g = random_sym(rng, n);
    let mut m = g.matmul(&g.transpose());
    for i in 0..n {
        m[(i, i)] += n as f64 * 0.1 + 1.0;
    }
    m.symmetrize();
    m
}

/// Brute-force `y = M x` from a dense copy.
pub fn dense_matvec(m: &DenseMat, x: &[f64]) -> Vec<f64> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)] * x[j]).sum())
        .collect()
}

pub fn sparse_to_dense_bruteforce(s: &SparseSym) -> DenseMat {
    let n = s.n();
    let mut d = DenseMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            d[(i, j)] = s.get(i, j);
        }
    }
    d
}

/// Number of negative pivots in an unpivoted `LDL^T` of `a - sigma b`,
/// which by Sylvester's law equals the number of eigenvalues of `(a, b)`
/// below `sigma`.
pub fn count_below(a: &DenseMat, b: &DenseMat, sigma: f64) -> usize {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)] - sigma * b[(i, j)]).collect())
        .collect();
    let mut neg = 0;
    for k in 0..n {
        let mut d = m[k][k];
        if d == 0.0 {
            d = -f64::EPSILON * (1.0 + sigma.abs());
        }
        if d < 0.0 {
            neg += 1;
        }
        for i in k + 1..n {
            let l = m[i][k] / d;
            for j in k + 1..n {
                m[i][j] -= l * m[k][j];
            }
        }
    }
    neg
}

/// `k`-th smallest eigenvalue (0-based) of `(a, b)` by inertia bisection.
pub fn bisect_eigenvalue(a: &DenseMat, b: &DenseMat, k: usize, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if count_below(a, b, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All eigenvalues of `(a, b)` by bisection, ascending. The bracket comes
/// from Gershgorin on `a` divided by a lower bound on `b`'s spectrum.
pub fn bisect_spectrum(a: &DenseMat, b: &DenseMat) -> Vec<f64> {
    let n = a.rows();
    let radius = |m: &DenseMat| {
        (0..n)
            .map(|i| (0..n).map(|j| m[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let b_min = (0..n)
        .map(|i| b[(i, i)] - (0..n).filter(|&j| j != i).map(|j| b[(i, j)].abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let b_lower = if b_min > 0.0 { b_min } else { 1e-3 };
    let bound = radius(a) / b_lower + 1.0;
    (0..n)
        .map(|k| bisect_eigenvalue(a, b, k, -bound, bound))
        .collect()
}

/// Euclidean orthonormal basis by modified Gram-Schmidt with
/// reorthogonalization, dropping columns below `tol` relative.
pub fn orth(cols: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    for c in cols {
        let pre = norm(c);
        let mut v = c.clone();
        for _ in 0..2 {
            for u in &q {
                let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= d * ui;
                }
            }
        }
        let nv = norm(&v);
        if nv > tol * pre {
            q.push(v.iter().map(|x| x / nv).collect());
        }
    }
    q
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Upper bound on the sine of the largest principal angle from span `u` to
/// span `v`: `||(I - Q_v Q_v^T) Q_u||_F`.
pub fn subspace_gap(u: &[Vec<f64>], v: &[Vec<f64>]) -> f64 {
    let qu = orth(u, 1e-12);
    let qv = orth(v, 1e-12);
    let mut total = 0.0;
    for a in &qu {
        let mut r = a.clone();
        for b in &qv {
            let d: f64 = b.iter().zip(a).map(|(x, y)| x * y).sum();
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= d * bi;
            }
        }
        total += r.iter().map(|x| x * x).sum::<f64>();
    }
    total.sqrt()
}

/// Central difference of `f` along each coordinate.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
        .collect()
}

pub fn rel_close(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= rtol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
