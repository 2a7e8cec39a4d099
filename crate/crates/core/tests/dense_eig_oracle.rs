mod common;

use common::*;
use ifkrylov::dense::DenseMat;
use ifkrylov::dense_eig::{gen_sym_eig, sym_eig, DenseSymPencil};

#[test]
fn sym_eig_matches_bisection() {
    for seed in 0..30 {
        let n = 2 + (seed as usize % 15);
        let mut r = rng(seed);
        let a = random_sym(&mut r, n);
        let eig = sym_eig(&a).unwrap();
        let want = bisect_spectrum(&a, &DenseMat::identity(n));
        for (g, w) in eig.values.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-11, "seed {seed}: {g} vs {w}");
        }
    }
}

#[test]
fn gen_sym_eig_matches_bisection() {
    for seed in 0..30 {
        let n = 2 + (seed as usize % 12);
        let mut r = rng(100 + seed);
        let a = random_sym(&mut r, n);
        let b = random_spd(&mut r, n);
        let eig = gen_sym_eig(&DenseSymPencil::new(a.clone(), b.clone()).unwrap(), n).unwrap();
        let want = bisect_spectrum(&a, &b);
        for (g, w) in eig.values.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-11 * (1.0 + w.abs()), "seed {seed}: {g} vs {w}");
        }
    }
}

#[test]
fn gen_sym_eig_residuals_and_b_orthonormality() {
    for seed in 0..20 {
        let n = 3 + (seed as usize % 20);
        let mut r = rng(200 + seed);
        let a = random_sym(&mut r, n);
        let b = random_spd(&mut r, n);
        let k = n / 2 + 1;
        let eig = gen_sym_eig(&DenseSymPencil::new(a.clone(), b.clone()).unwrap(), k).unwrap();
        let a_norm = a.frobenius_norm();
        for j in 0..k {
            let v = eig.vectors.column(j);
            let av = dense_matvec(&a, &v);
            let bv = dense_matvec(&b, &v);
            let res: Vec<f64> = av.iter().zip(&bv).map(|(x, y)| x - eig.values[j] * y).collect();
            assert!(norm(&res) <= 1e-10 * a_norm, "seed {seed} pair {j}");
            for i in 0..k {
                let u = eig.vectors.column(i);
                let g: f64 = u.iter().zip(&bv).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn repeated_eigenvalues_are_resolved() {
    let a = DenseMat::from_diag(&[2.0, 1.0, 2.0, 1.0, 3.0]);
    let eig = sym_eig(&a).unwrap();
    assert_eq!(eig.values, vec![1.0, 1.0, 2.0, 2.0, 3.0]);
}

#[test]
fn too_many_pairs_is_an_error() {
    let p = DenseSymPencil::new(DenseMat::identity(2), DenseMat::identity(2)).unwrap();
    assert!(gen_sym_eig(&p, 3).is_err());
}

#[test]
fn indefinite_mass_is_reported() {
    let p = DenseSymPencil::new(DenseMat::identity(2), DenseMat::from_diag(&[1.0, -1.0])).unwrap();
    assert!(gen_sym_eig(&p, 1).is_err());
}
