//! Dense-matrix, finite-difference, and enumeration oracles against the
//! implicit-block production paths.

use sparse_cvar::model::{apply_q, apply_qt, assemble, spectral_norm_sq};
use sparse_cvar::operators::{eval_f, eval_h, grad_v_h, grad_y_h};
use sparse_cvar::rng::SplitMix64;
use sparse_cvar::solver::{SolverConfig, fppa_prox};
use sparse_cvar_testkit as tk;

fn random_pd(rng: &mut SplitMix64, t: usize, n: usize, m: usize) -> sparse_cvar::ProblemData {
    let w = tk::random_window(rng, t, n);
    assemble(&w, 0.95, 0.01, 1e-3, m, None).unwrap()
}

#[test]
fn block_products_match_dense_oracle() {
    let mut rng = SplitMix64::new(11);
    for _ in 0..20 {
        let pd = random_pd(&mut rng, 4, 3, 2);
        let q = tk::dense_q(&pd);
        let v: Vec<f64> = (0..pd.n1).map(|_| rng.next_normal()).collect();
        let u: Vec<f64> = (0..pd.n2).map(|_| rng.next_normal()).collect();

        let qv = apply_q(&pd, &v).unwrap();
        let qv_dense = tk::mat_vec(&q, &v);
        let rel = tk::norm2(&tk::sub(&qv, &qv_dense)) / tk::norm2(&qv_dense);
        assert!(rel < 1e-12, "apply_q off by {rel}");

        let qtu = apply_qt(&pd, &u).unwrap();
        let qtu_dense = tk::mat_t_vec(&q, &u);
        let rel = tk::norm2(&tk::sub(&qtu, &qtu_dense)) / tk::norm2(&qtu_dense).max(1e-12);
        assert!(rel < 1e-12, "apply_qt off by {rel}");
    }
}

#[test]
fn adjoint_identity_holds() {
    let mut rng = SplitMix64::new(12);
    for _ in 0..50 {
        let pd = random_pd(&mut rng, 5, 4, 2);
        let v: Vec<f64> = (0..pd.n1).map(|_| rng.next_normal()).collect();
        let u: Vec<f64> = (0..pd.n2).map(|_| rng.next_normal()).collect();
        let lhs = tk::dot(&apply_q(&pd, &v).unwrap(), &u);
        let rhs = tk::dot(&v, &apply_qt(&pd, &u).unwrap());
        assert!(
            (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1.0),
            "adjoint mismatch: {lhs} vs {rhs}"
        );
    }
}

#[test]
fn cost_vectors_reconstruct_their_formulas() {
    let mut rng = SplitMix64::new(13);
    let pd = random_pd(&mut rng, 6, 4, 2);
    let (t, n) = (pd.n_periods(), pd.n_assets());
    // h1 = (0_N, 1, 1/((1-c)T) 1_T)
    assert!(pd.h1[..n].iter().all(|&x| x == 0.0));
    assert_eq!(pd.h1[n], 1.0);
    let cost = 1.0 / ((1.0 - pd.c) * t as f64);
    for &x in &pd.h1[n + 1..] {
        assert_eq!(x, cost);
    }
    // h2 = (mu_hat, 0)
    let mut mu = vec![0.0; n];
    for i in 0..t {
        for j in 0..n {
            mu[j] += pd.r.get(i, j);
        }
    }
    for j in 0..n {
        assert!((pd.h2[j] - mu[j] / t as f64).abs() < 1e-15);
    }
    assert!(pd.h2[n..].iter().all(|&x| x == 0.0));
}

#[test]
fn spectral_norm_matches_jacobi_eigensolver() {
    let mut rng = SplitMix64::new(14);
    for trial in 0..10 {
        let pd = random_pd(&mut rng, 3 + trial % 3, 2 + trial % 3, 2);
        let est = spectral_norm_sq(&pd, 99).value;
        let dense = tk::dense_spectral_norm_sq(&tk::dense_q(&pd));
        let rel = (est - dense).abs() / dense;
        assert!(rel < 1e-6, "spectral norm off by {rel} on trial {trial}");
    }
}

#[test]
fn eval_f_matches_naive_recomputation() {
    let mut rng = SplitMix64::new(15);
    for _ in 0..30 {
        let pd = random_pd(&mut rng, 5, 3, 2);
        let v: Vec<f64> = (0..pd.n1).map(|_| rng.next_normal()).collect();
        let got = eval_f(&pd, &v).unwrap();
        let want = tk::naive_f(&pd, &v);
        assert!(
            (got - want).abs() <= 1e-12 * want.abs().max(1.0),
            "{got} vs {want}"
        );
    }
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = SplitMix64::new(16);
    let mut checked = 0;
    while checked < 100 {
        let pd = random_pd(&mut rng, 4, 3, 2);
        let v: Vec<f64> = (0..pd.n1).map(|_| 0.3 * rng.next_normal()).collect();
        let y: Vec<f64> = (0..3).map(|_| 0.3 * rng.next_normal()).collect();

        let gv = grad_v_h(&pd, &v, &y).unwrap();
        let fd_v = tk::finite_diff_gradient(
            |vv| eval_h(&pd, vv, &y).unwrap(),
            &v,
            1e-6,
        );
        let rel = tk::norm2(&tk::sub(&gv, &fd_v)) / tk::norm2(&fd_v).max(1.0);
        assert!(rel < 1e-6, "grad_v mismatch {rel}");

        let gy = grad_y_h(&pd, &v, &y).unwrap();
        let fd_y = tk::finite_diff_gradient(
            |yy| eval_h(&pd, &v, yy).unwrap(),
            &y,
            1e-6,
        );
        let rel = tk::norm2(&tk::sub(&gy, &fd_y)) / tk::norm2(&fd_y).max(1.0);
        assert!(rel < 1e-6, "grad_y mismatch {rel}");
        checked += 1;
    }
}

#[test]
fn lipschitz_inequalities_hold_on_random_pairs() {
    let mut rng = SplitMix64::new(17);
    for _ in 0..100 {
        let pd = random_pd(&mut rng, 4, 3, 2);
        let y: Vec<f64> = (0..3).map(|_| rng.next_normal()).collect();
        let v1: Vec<f64> = (0..pd.n1).map(|_| rng.next_normal()).collect();
        let v2: Vec<f64> = (0..pd.n1).map(|_| rng.next_normal()).collect();
        let g1 = grad_v_h(&pd, &v1, &y).unwrap();
        let g2 = grad_v_h(&pd, &v2, &y).unwrap();
        let lhs = tk::norm2(&tk::sub(&g1, &g2));
        let rhs = pd.l1 * tk::norm2(&tk::sub(&v1, &v2));
        assert!(lhs <= rhs * (1.0 + 1e-10), "L1 violated: {lhs} > {rhs}");

        let v: Vec<f64> = (0..pd.n1).map(|_| rng.next_normal()).collect();
        let y1: Vec<f64> = (0..3).map(|_| rng.next_normal()).collect();
        let y2: Vec<f64> = (0..3).map(|_| rng.next_normal()).collect();
        let g1 = grad_y_h(&pd, &v, &y1).unwrap();
        let g2 = grad_y_h(&pd, &v, &y2).unwrap();
        let lhs = tk::norm2(&tk::sub(&g1, &g2));
        let rhs = pd.l2 * tk::norm2(&tk::sub(&y1, &y2));
        assert!(lhs <= rhs * (1.0 + 1e-10), "L2 violated: {lhs} > {rhs}");
    }
}

#[test]
fn fppa_agrees_with_kkt_enumeration_on_small_instances() {
    let mut rng = SplitMix64::new(18);
    let cfg = SolverConfig {
        tol_inner: 1e-10,
        max_inner: 200_000,
        ..SolverConfig::default()
    };
    for trial in 0..10 {
        // N2 = 2T + N + 2 <= 10
        let (t, n) = if trial % 2 == 0 { (3, 2) } else { (2, 3) };
        let pd = random_pd(&mut rng, t, n, n.min(2));
        let p: Vec<f64> = (0..pd.n1).map(|_| 0.7 * rng.next_normal()).collect();
        let res = fppa_prox(&pd, &p, &vec![0.0; pd.n2], &cfg).unwrap();
        let oracle = tk::kkt_projection(&tk::dense_q(&pd), &pd.q, &p)
            .expect("projection exists for a feasible polytope");
        let rel = tk::norm2(&tk::sub(&res.u, &oracle)) / tk::norm2(&oracle).max(1e-8);
        assert!(rel < 1e-6, "trial {trial}: prox off by {rel}");
    }
}
