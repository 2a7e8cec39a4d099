//! Small dense-vector kernels shared by the solvers.

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Linear combination `sum_j coeffs[j] * columns[j]`.
pub fn combine(columns: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    debug_assert_eq!(columns.len(), coeffs.len());
    let n = columns.first().map_or(0, Vec::len);
    let mut out = vec![0.0; n];
    for (col, &c) in columns.iter().zip(coeffs) {
        axpy(c, col, &mut out);
    }
    out
}
