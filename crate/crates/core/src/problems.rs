//! Synthetic test pencils and the dense full-spectrum oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense_eig::{gen_sym_eig, DenseSymPencil};
use crate::error::{Error, Result};
use crate::pencil::SymPencil;
use crate::sparsemat::SparseSym;

/// Largest pencil the dense oracle will densify.
pub const ORACLE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: f64,
    pub size: usize,
    pub intra_gap: f64,
}

/// Kind of mass matrix used by [`ProblemSpec::Random`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomMass {
    Identity,
    /// `tridiag(1, 4, 1) * h / 6`
    FemMass,
    /// Random diagonally dominant SPD matrix.
    RandomSpd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemSpec {
    /// `A = diag(step, 2 step, ..., n step)`, `B = I`.
    DiagLinear { n: usize, step: f64 },
    /// Diagonal `A` holding each cluster `center + j * intra_gap`, followed
    /// by a bulk starting `gap` above the largest cluster value with spacing
    /// `gap`. `B = I`.
    ClusteredDiag {
        n: usize,
        clusters: Vec<Cluster>,
        gap: f64,
    },
    /// 5-point Dirichlet Laplacian on the unit square, `B = I`.
    #[serde(rename = "laplace-2d")]
    Laplace2D { nx: usize, ny: usize },
    /// Linear finite elements for `-u'' = lambda u` on (0, 1): stiffness
    /// `tridiag(-1, 2, -1) / h` and mass `tridiag(1, 4, 1) h / 6`.
    #[serde(rename = "fem-mass-1d")]
    FemMass1D { n: usize },
    /// Sparse random symmetric `A` with a linearly growing diagonal.
    Random {
        n: usize,
        mass: RandomMass,
        seed: u64,
    },
}

impl ProblemSpec {
    pub fn label(&self) -> String {
        match self {
            ProblemSpec::DiagLinear { n, step } => format!("diag-linear(n={n} step={step})"),
            ProblemSpec::ClusteredDiag { n, clusters, gap } => {
                let cl: Vec<String> = clusters
                    .iter()
                    .map(|c| format!("{}x{}@{}", c.size, c.center, c.intra_gap))
                    .collect();
                format!("clustered-diag(n={n} clusters=[{}] gap={gap})", cl.join(";"))
            }
            ProblemSpec::Laplace2D { nx, ny } => format!("laplace2d({nx}x{ny})"),
            ProblemSpec::FemMass1D { n } => format!("fem1d(n={n})"),
            ProblemSpec::Random { n, mass, seed } => format!("random(n={n} mass={mass:?} seed={seed})"),
        }
    }
}

pub fn generate(spec: &ProblemSpec) -> Result<SymPencil> {
    match spec {
        ProblemSpec::DiagLinear { n, step } => {
            require(*n >= 1, "n must be >= 1")?;
            let d: Vec<f64> = (1..=*n).map(|i| step * i as f64).collect();
            Ok(SymPencil::standard(SparseSym::from_diag(&d)))
        }
        ProblemSpec::ClusteredDiag { n, clusters, gap } => {
            let d = clustered_spectrum(*n, clusters, *gap)?;
            Ok(SymPencil::standard(SparseSym::from_diag(&d)))
        }
        ProblemSpec::Laplace2D { nx, ny } => {
            require(*nx >= 1 && *ny >= 1, "grid must be at least 1x1")?;
            Ok(SymPencil::standard(laplace_2d(*nx, *ny)?))
        }
        ProblemSpec::FemMass1D { n } => {
            require(*n >= 1, "n must be >= 1")?;
            let h = 1.0 / (*n as f64 + 1.0);
            let a = tridiag(*n, 2.0 / h, -1.0 / h)?;
            let b = tridiag(*n, 4.0 * h / 6.0, h / 6.0)?;
            SymPencil::new(a, b)
        }
        ProblemSpec::Random { n, mass, seed } => random_pencil(*n, *mass, *seed),
    }
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidConfig(msg.to_string()))
    }
}

/// Sorted diagonal for [`ProblemSpec::ClusteredDiag`].
pub fn clustered_spectrum(n: usize, clusters: &[Cluster], gap: f64) -> Result<Vec<f64>> {
    require(gap > 0.0, "gap must be > 0")?;
    let in_clusters: usize = clusters.iter().map(|c| c.size).sum();
    require(in_clusters <= n, "clusters hold more eigenvalues than n")?;
    require(
        clusters.iter().all(|c| c.size >= 1 && c.intra_gap >= 0.0),
        "clusters need size >= 1 and intra_gap >= 0",
    )?;
    let mut d: Vec<f64> = clusters
        .iter()
        .flat_map(|c| (0..c.size).map(move |j| c.center + j as f64 * c.intra_gap))
        .collect();
    let top = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let start = if d.is_empty() { gap } else { top + gap };
    d.extend((0..n - in_clusters).map(|j| start + j as f64 * gap));
    d.sort_by(f64::total_cmp);
    Ok(d)
}

fn tridiag(n: usize, diag: f64, off: f64) -> Result<SparseSym> {
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        t.push((i, i, diag));
        if i + 1 < n {
            t.push((i + 1, i, off));
        }
    }
    SparseSym::from_lower_triplets(n, &t)
}

fn laplace_2d(nx: usize, ny: usize) -> Result<SparseSym> {
    let hx2 = (1.0 / (nx as f64 + 1.0)).powi(2);
    let hy2 = (1.0 / (ny as f64 + 1.0)).powi(2);
    let idx = |i: usize, j: usize| j * nx + i;
    let mut t = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            t.push((idx(i, j), idx(i, j), 2.0 / hx2 + 2.0 / hy2));
            if i + 1 < nx {
                t.push((idx(i + 1, j), idx(i, j), -1.0 / hx2));
            }
            if j + 1 < ny {
                t.push((idx(i, j + 1), idx(i, j), -1.0 / hy2));
            }
        }
    }
    SparseSym::from_lower_triplets(nx * ny, &t)
}

/// Random pencil with a well separated low end: `A = diag(1..n) + E` where
/// `E` is sparse symmetric with about four entries per row drawn from
/// `U(-0.5, 0.5)`.
pub fn random_pencil(n: usize, mass: RandomMass, seed: u64) -> Result<SymPencil> {
    require(n >= 2, "random pencil needs n >= 2")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, (i + 1) as f64 + rng.random_range(-0.5..0.5)));
    }
    for _ in 0..2 * n {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            t.push((i.max(j), i.min(j), rng.random_range(-0.5..0.5)));
        }
    }
    let a = SparseSym::from_lower_triplets(n, &t)?;
    let b = match mass {
        RandomMass::Identity => SparseSym::identity(n),
        RandomMass::FemMass => {
            let h = 1.0 / (n as f64 + 1.0);
            tridiag(n, 4.0 * h / 6.0, h / 6.0)?
        }
        RandomMass::RandomSpd => {
            let mut off = Vec::new();
            let mut row_abs = vec![0.0; n];
            for _ in 0..n {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                if i != j {
                    let v: f64 = rng.random_range(-0.3..0.3);
                    row_abs[i] += v.abs();
                    row_abs[j] += v.abs();
                    off.push((i.max(j), i.min(j), v));
                }
            }
            let mut t: Vec<(usize, usize, f64)> = (0..n)
                .map(|i| (i, i, 1.0 + row_abs[i] + rng.random_range(0.0..1.0)))
                .collect();
            t.extend(off);
            SparseSym::from_lower_triplets(n, &t)?
        }
    };
    SymPencil::new(a, b)
}

/// Full spectrum of a pencil, ascending, with B-orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn dense_oracle(p: &SymPencil) -> Result<DenseSpectrum> {
    let n = p.n();
    if n > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            n,
            limit: ORACLE_LIMIT,
        });
    }
    let pencil = DenseSymPencil::new(p.a().to_dense(), p.b().to_dense())?;
    let eig = gen_sym_eig(&pencil, n)?;
    let vectors = (0..n).map(|j| eig.vectors.column(j)).collect();
    Ok(DenseSpectrum {
        values: eig.values,
        vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diag_linear_spectrum() {
        let p = generate(&ProblemSpec::DiagLinear { n: 10, step: 0.1 }).unwrap();
        let s = dense_oracle(&p).unwrap();
        for (i, v) in s.values.iter().enumerate() {
            assert!((v - 0.1 * (i + 1) as f64).abs() < 1e-15);
        }
        assert_eq!(s.vectors[0][0].abs(), 1.0);
    }

    #[test]
    fn clustered_spectrum_layout() {
        let d = clustered_spectrum(
            5,
            &[Cluster {
                center: 1.0,
                size: 2,
                intra_gap: 1e-4,
            }],
            1.0,
        )
        .unwrap();
        let expected = [1.0, 1.0001, 2.0001, 3.0001, 4.0001];
        for (a, b) in d.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14, "{d:?}");
        }
    }

    #[test]
    fn clustered_rejects_oversized_clusters() {
        let c = Cluster {
            center: 1.0,
            size: 4,
            intra_gap: 0.1,
        };
        assert!(clustered_spectrum(3, &[c], 1.0).is_err());
        assert!(clustered_spectrum(5, &[c], 0.0).is_err());
    }

    #[test]
    fn invalid_sizes() {
        assert!(generate(&ProblemSpec::DiagLinear { n: 0, step: 0.1 }).is_err());
        assert!(generate(&ProblemSpec::Laplace2D { nx: 0, ny: 3 }).is_err());
        assert!(generate(&ProblemSpec::FemMass1D { n: 0 }).is_err());
    }

    #[test]
    fn generators_are_symmetric() {
        let specs = [
            ProblemSpec::DiagLinear { n: 20, step: 0.1 },
            ProblemSpec::Laplace2D { nx: 4, ny: 5 },
            ProblemSpec::FemMass1D { n: 12 },
            ProblemSpec::Random {
                n: 30,
                mass: RandomMass::RandomSpd,
                seed: 3,
            },
            ProblemSpec::Random {
                n: 30,
                mass: RandomMass::FemMass,
                seed: 4,
            },
        ];
        for s in &specs {
            let p = generate(s).unwrap();
            assert!(p.a().check_symmetry(0.0), "{}", s.label());
            assert!(p.b().check_symmetry(0.0), "{}", s.label());
            // Cholesky inside the oracle doubles as the SPD check.
            dense_oracle(&p).unwrap();
        }
    }

    #[test]
    fn oracle_size_cap() {
        let p = generate(&ProblemSpec::DiagLinear { n: 2001, step: 1.0 }).unwrap();
        assert!(matches!(dense_oracle(&p), Err(Error::OracleTooLarge { .. })));
    }
}
