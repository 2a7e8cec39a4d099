//! Symmetric sparse matrices in CSR form and Matrix Market I/O.
//!
//! Both triangles are stored so the product kernel needs no branch on the
//! triangle. An explicit identity flag short-circuits `B = I`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::dense::DenseMat;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    is_identity: bool,
}

impl SparseSym {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
            is_identity: true,
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
            is_identity: false,
        }
    }

    /// Assembles a matrix from `(row, col, value)` triplets covering the full
    /// pattern. Duplicates are summed and explicit zeros are kept. Symmetry is
    /// not enforced here; see [`SparseSym::from_lower_triplets`] and
    /// [`SparseSym::check_symmetry`].
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: i.max(j) + 1,
                });
            }
            *rows[i].entry(j).or_insert(0.0) += v;
        }
        Ok(Self::from_row_maps(n, rows))
    }

    /// Assembles a symmetric matrix from one triangle: every off-diagonal
    /// entry `(i, j, v)` is mirrored to `(j, i, v)`. Duplicates are summed.
    pub fn from_lower_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut full = Vec::with_capacity(2 * triplets.len());
        for &(i, j, v) in triplets {
            full.push((i, j, v));
            if i != j {
                full.push((j, i, v));
            }
        }
        Self::from_triplets(n, &full)
    }

    pub fn from_dense(m: &DenseMat) -> Self {
        assert!(m.is_square());
        let n = m.rows();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| m[(i, j)] != 0.0)
                    .map(|j| (j, m[(i, j)]))
                    .collect::<BTreeMap<_, _>>()
            })
            .collect();
        Self::from_row_maps(n, rows)
    }

    fn from_row_maps(n: usize, rows: Vec<BTreeMap<usize, f64>>) -> Self {
        let nnz = rows.iter().map(BTreeMap::len).sum();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
            is_identity: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_identity(&self) -> bool {
        self.is_identity
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored entries of row `i` as `(col, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Stored value at `(i, j)`, zero when outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        if y.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: y.len(),
            });
        }
        if self.is_identity {
            y.copy_from_slice(x);
            return Ok(());
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let start = self.row_ptr[i];
            let end = self.row_ptr[i + 1];
            *yi = self.col_idx[start..end]
                .iter()
                .zip(&self.values[start..end])
                .map(|(&j, &v)| v * x[j])
                .sum();
        }
        Ok(())
    }

    /// True iff `max |M_ij - M_ji| <= tol` over the stored pattern; an entry
    /// whose mirror is not stored is compared against zero.
    pub fn check_symmetry(&self, tol: f64) -> bool {
        if self.is_identity {
            return true;
        }
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }

    /// Infinity norm (max absolute row sum), an upper bound on the 2-norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DenseMat {
        let mut m = DenseMat::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// Reads a real symmetric coordinate Matrix Market file.
///
/// Only the lower (or upper) triangle is expected in the file; entries are
/// mirrored to full storage. Duplicate coordinates are summed.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseSym> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let header_err = |msg: &str| Error::MatrixMarket {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    let line_err = |line: usize, msg: String| Error::MatrixMarketLine {
        path: path.to_path_buf(),
        line: line + 1,
        msg,
    };

    let (_, banner) = lines.next().ok_or_else(|| header_err("empty file"))?;
    let banner = banner?;
    let tokens: Vec<String> = banner
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(header_err("malformed header, expected '%%MatrixMarket matrix ...'"));
    }
    if tokens[2] != "coordinate" {
        return Err(header_err(&format!("unsupported format '{}'", tokens[2])));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(header_err(&format!("unsupported field '{}'", tokens[3])));
    }
    if tokens[4] != "symmetric" {
        return Err(header_err(&format!(
            "unsupported symmetry '{}', expected 'symmetric'",
            tokens[4]
        )));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(line_err(lineno, "size line must have 3 fields".into()));
                }
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|e| line_err(lineno, format!("bad size '{s}': {e}")))
                };
                let (r, c, nnz) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                if r != c {
                    return Err(line_err(lineno, format!("symmetric matrix must be square, got {r}x{c}")));
                }
                triplets.reserve(nnz);
                size = Some((r, c, nnz));
            }
            Some((n, _, _)) => {
                if fields.len() != 3 {
                    return Err(line_err(lineno, "entry line must have 3 fields".into()));
                }
                let idx = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|e| line_err(lineno, format!("bad index '{s}': {e}")))
                };
                let (i, j) = (idx(fields[0])?, idx(fields[1])?);
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|e| line_err(lineno, format!("bad value '{}': {e}", fields[2])))?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(line_err(
                        lineno,
                        format!("index ({i}, {j}) out of range for n = {n}"),
                    ));
                }
                triplets.push((i - 1, j - 1, v));
            }
        }
    }
    let (n, _, nnz) = size.ok_or_else(|| header_err("missing size line"))?;
    if triplets.len() != nnz {
        return Err(header_err(&format!(
            "size line declares {nnz} entries, found {}",
            triplets.len()
        )));
    }
    SparseSym::from_lower_triplets(n, &triplets)
}

/// Writes the lower triangle in Matrix Market coordinate/real/symmetric form.
/// Values are printed with 17 significant digits so a reload is bit-exact.
pub fn write_matrix_market(m: &SparseSym, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let lower: Vec<(usize, usize, f64)> = (0..m.n())
        .flat_map(|i| m.row(i).filter(move |&(j, _)| j <= i).map(move |(j, v)| (i, j, v)))
        .collect();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", m.n(), m.n(), lower.len())?;
    for (i, j, v) in lower {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}
