mod common;

use common::*;
use ifkrylov::problems::{generate, RandomMass};
use ifkrylov::subspace::{
    b_orthonormalize, build_subspace, krylov_chain, subspace_candidates, SubspaceInputs,
};
use ifkrylov::{Method, ProblemSpec, SubspaceSpec, SymPencil};

fn pencil(seed: u64, n: usize) -> SymPencil {
    generate(&ProblemSpec::Random {
        n,
        mass: RandomMass::RandomSpd,
        seed,
    })
    .unwrap()
}

fn b_normalized(p: &SymPencil, v: &[f64]) -> Vec<f64> {
    p.b_normalize(v).unwrap().0
}

#[test]
fn chain_span_matches_dense_powers() {
    for seed in 0..10 {
        let p = pencil(seed, 10);
        let a = sparse_to_dense_bruteforce(p.a());
        let b = sparse_to_dense_bruteforce(p.b());
        let mut r = rng(seed);
        let y = random_vec(&mut r, 10);
        let theta = 0.7;
        let chain = krylov_chain(&p, theta, &y, 3).unwrap();
        let mut powers = vec![y.clone()];
        for j in 0..3 {
            let prev = &powers[j];
            let ay = dense_matvec(&a, prev);
            let by = dense_matvec(&b, prev);
            powers.push(ay.iter().zip(&by).map(|(u, v)| u - theta * v).collect());
        }
        assert!(subspace_gap(&chain.vectors, &powers) <= 1e-8, "seed {seed}");
        assert!(subspace_gap(&powers, &chain.vectors) <= 1e-8, "seed {seed}");
        for v in &chain.vectors {
            assert!((norm(v) - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn orthonormalizing_dependent_candidates() {
    let n = 20;
    let p = pencil(3, n);
    let bd = sparse_to_dense_bruteforce(p.b());
    let mut r = rng(4);
    let generators: Vec<Vec<f64>> = (0..8).map(|_| random_vec(&mut r, n)).collect();
    let candidates: Vec<Vec<f64>> = (0..12)
        .map(|_| {
            let c = random_vec(&mut r, 8);
            (0..n)
                .map(|i| (0..8).map(|j| c[j] * generators[j][i]).sum())
                .collect()
        })
        .collect();
    let basis = b_orthonormalize(&p, &candidates, 1e-8, 1).unwrap();
    assert!(basis.rank <= 8);
    assert_eq!(basis.rank + basis.dropped, 12);
    for (i, zi) in basis.columns.iter().enumerate() {
        let bz = dense_matvec(&bd, zi);
        for (j, zj) in basis.columns.iter().enumerate() {
            let g: f64 = zj.iter().zip(&bz).map(|(a, b)| a * b).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((g - want).abs() <= 1e-10, "({i},{j}) {g}");
        }
    }
    assert!(subspace_gap(&candidates, &basis.columns) <= 1e-8);
}

#[test]
fn depth1_pair_spans_current_and_previous() {
    let n = 30;
    let p = pencil(8, n);
    let mut r = rng(8);
    for beta in [0.1, 0.5, 0.84] {
        let x = b_normalized(&p, &random_vec(&mut r, n));
        let x_prev = b_normalized(&p, &random_vec(&mut r, n));
        let y: Vec<f64> = x.iter().zip(&x_prev).map(|(a, b)| a + beta * (a - b)).collect();
        let u = vec![x.clone(), y];
        let v = vec![x, x_prev];
        assert!(subspace_gap(&u, &v) <= 1e-8);
        assert!(subspace_gap(&v, &u) <= 1e-8);
    }
}

#[test]
fn ritz_vector_lies_in_every_basis() {
    let n = 40;
    let p = pencil(12, n);
    let bd = sparse_to_dense_bruteforce(p.b());
    let mut r = rng(12);
    let x = vec![b_normalized(&p, &random_vec(&mut r, n))];
    let xp = vec![b_normalized(&p, &random_vec(&mut r, n))];
    let y = vec![random_vec(&mut r, n)];
    let theta = [p.rayleigh(&x[0]).unwrap()];
    for method in Method::ALL {
        for m in 1..=3 {
            let spec = SubspaceSpec::new(method, m);
            let inputs = SubspaceInputs {
                x: &x,
                x_prev: Some(&xp),
                y: &y,
                theta: &theta,
            };
            let basis = build_subspace(&spec, &p, &inputs, 1e-8).unwrap();
            let bx = dense_matvec(&bd, &x[0]);
            let mut rem = x[0].clone();
            for z in &basis.columns {
                let c: f64 = z.iter().zip(&bx).map(|(a, b)| a * b).sum();
                for (ri, zi) in rem.iter_mut().zip(z) {
                    *ri -= c * zi;
                }
            }
            let brem = dense_matvec(&bd, &rem);
            let err: f64 = rem.iter().zip(&brem).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt();
            assert!(err <= 1e-8, "{method} m={m}: {err}");
            let expected = 1 + usize::from(spec.include_previous) + usize::from(method.uses_momentum()) + m;
            assert_eq!(basis.rank, expected, "{method} m={m}");
        }
    }
}

#[test]
fn base_m1_is_the_lopcg_space() {
    let n = 25;
    let d: Vec<f64> = (1..=n).map(|i| 0.1 * i as f64).collect();
    let p = SymPencil::standard(ifkrylov::SparseSym::from_diag(&d));
    let mut r = rng(1);
    let x = vec![b_normalized(&p, &random_vec(&mut r, n))];
    let xp = vec![b_normalized(&p, &random_vec(&mut r, n))];
    let rho = p.rayleigh(&x[0]).unwrap();
    let inputs = SubspaceInputs {
        x: &x,
        x_prev: Some(&xp),
        y: &x,
        theta: &[rho],
    };
    let basis = build_subspace(&SubspaceSpec::new(Method::Base, 1), &p, &inputs, 1e-8).unwrap();
    let ax = p.apply_a(&x[0]).unwrap();
    let diff: Vec<f64> = x[0].iter().zip(&xp[0]).map(|(a, b)| a - b).collect();
    let lopcg = vec![x[0].clone(), diff, ax];
    assert!(subspace_gap(&basis.columns, &lopcg) <= 1e-8);
    assert!(subspace_gap(&lopcg, &basis.columns) <= 1e-8);
}

#[test]
fn depth1_at_zero_beta_matches_base_candidates() {
    let n = 30;
    let p = pencil(21, n);
    let mut r = rng(21);
    let x = vec![b_normalized(&p, &random_vec(&mut r, n))];
    let xp = vec![b_normalized(&p, &random_vec(&mut r, n))];
    let theta = [p.rayleigh(&x[0]).unwrap()];
    let inputs = SubspaceInputs {
        x: &x,
        x_prev: Some(&xp),
        y: &x,
        theta: &theta,
    };
    let base = build_subspace(&SubspaceSpec::new(Method::Base, 2), &p, &inputs, 1e-8).unwrap();
    let d1 = build_subspace(
        &SubspaceSpec::new(Method::Depth1, 2).with_previous(true),
        &p,
        &inputs,
        1e-8,
    )
    .unwrap();
    assert_eq!(base.rank, d1.rank);
    assert_eq!(d1.dropped, base.dropped + 1);
    assert!(subspace_gap(&base.columns, &d1.columns) <= 1e-8);

    let plain = build_subspace(&SubspaceSpec::new(Method::Depth1, 2), &p, &inputs, 1e-8).unwrap();
    assert_eq!(plain.rank, base.rank - 1);
}

#[test]
fn first_step_has_no_previous_slot() {
    let n = 30;
    let p = pencil(2, n);
    let mut r = rng(2);
    let x = vec![b_normalized(&p, &random_vec(&mut r, n))];
    let theta = [p.rayleigh(&x[0]).unwrap()];
    let inputs = SubspaceInputs {
        x: &x,
        x_prev: None,
        y: &x,
        theta: &theta,
    };
    let spec = SubspaceSpec::new(Method::Base, 1);
    let cands = subspace_candidates(&spec, &p, &inputs).unwrap();
    assert_eq!(cands.len(), 2);
    let basis = build_subspace(&spec, &p, &inputs, 1e-8).unwrap();
    assert!(basis.rank >= 2);
}

#[test]
fn differenced_candidates_keep_the_span() {
    let n = 30;
    let p = pencil(30, n);
    let mut r = rng(30);
    let x: Vec<Vec<f64>> = (0..2).map(|_| b_normalized(&p, &random_vec(&mut r, n))).collect();
    let xp: Vec<Vec<f64>> = (0..2).map(|_| b_normalized(&p, &random_vec(&mut r, n))).collect();
    let y: Vec<Vec<f64>> = (0..2).map(|_| random_vec(&mut r, n)).collect();
    let theta = [p.rayleigh(&x[0]).unwrap(), p.rayleigh(&x[1]).unwrap()];
    let inputs = SubspaceInputs {
        x: &x,
        x_prev: Some(&xp),
        y: &y,
        theta: &theta,
    };
    for method in Method::ALL {
        let spec = SubspaceSpec::new(method, 2).with_previous(true);
        let raw = build_subspace(&spec, &p, &inputs, 1e-8).unwrap();
        let diff = build_subspace(&spec.with_difference_candidates(true), &p, &inputs, 1e-8).unwrap();
        assert_eq!(raw.rank, diff.rank, "{method}");
        assert!(subspace_gap(&raw.columns, &diff.columns) <= 1e-8, "{method}");
    }
}

#[test]
fn replace_current_gives_extrapolated_space() {
    let n = 30;
    let p = pencil(40, n);
    let mut r = rng(40);
    let x = vec![b_normalized(&p, &random_vec(&mut r, n))];
    let xp = vec![b_normalized(&p, &random_vec(&mut r, n))];
    let beta = 0.84;
    let y: Vec<Vec<f64>> = vec![x[0].iter().zip(&xp[0]).map(|(a, b)| a + beta * (a - b)).collect()];
    let rho = p.rayleigh(&x[0]).unwrap();
    let inputs = SubspaceInputs {
        x: &x,
        x_prev: Some(&xp),
        y: &y,
        theta: &[rho],
    };
    let spec = SubspaceSpec::new(Method::Depth1, 1).with_replace_current(true);
    let basis = build_subspace(&spec, &p, &inputs, 1e-8).unwrap();
    assert_eq!(basis.rank, 2);
    let res = p.residual(&x[0], rho).unwrap();
    let want = vec![y[0].clone(), res];
    assert!(subspace_gap(&basis.columns, &want) <= 1e-8);
    assert!(SubspaceSpec::new(Method::Base, 1).with_replace_current(true).validate().is_err());
}
