use chronovec::align::{align_chain, procrustes_align};
use chronovec::dw2v::{dw2v_gradient, dw2v_objective, dw2v_solve, Dw2vConfig, Dw2vProblem};
use chronovec::embedding::{EmbeddingSet, Method, Rows, Space};
use chronovec::sparse::CsrMatrix;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn rotation(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    gaussian(rng, n, n).qr().q()
}

fn random_sparse(rng: &mut ChaCha8Rng, v: usize, density: f64) -> CsrMatrix<f64> {
    let mut t = Vec::new();
    for i in 0..v {
        for j in 0..v {
            if rng.random_bool(density) {
                t.push((i, j, rng.random_range(0.0..3.0)));
            }
        }
    }
    CsrMatrix::from_triplets(v, v, t).unwrap()
}

/// Objective straight from the definition with dense products.
fn dense_objective(ms: &[CsrMatrix<f64>], ws: &[DMatrix<f64>], lambda: f64, tau: f64) -> f64 {
    let mut f = 0.0;
    for (m, w) in ms.iter().zip(ws) {
        f += 0.5 * (m.to_dense() - w * w.transpose()).norm_squared();
        f += 0.5 * lambda * w.norm_squared();
    }
    for t in 1..ws.len() {
        f += 0.5 * tau * (&ws[t - 1] - &ws[t]).norm_squared();
    }
    f
}

#[test]
fn planted_rotation_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let w = gaussian(&mut rng, 100, 20);
    let r = rotation(&mut rng, 20);
    let m = procrustes_align(&w, &(&w * &r)).unwrap();
    assert!((&m.q - &r).norm() < 1e-8);
    assert!(m.residual < 1e-8);
    assert!(m.orthogonality_error() < 1e-8);
}

#[test]
fn alignment_keeps_intra_space_cosines() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let w = gaussian(&mut rng, 30, 6);
    let other = gaussian(&mut rng, 30, 6);
    let m = procrustes_align(&w, &other).unwrap();
    let wq = m.apply(&w);
    for i in 0..30 {
        for j in 0..30 {
            let c0 = w.row(i).dot(&w.row(j)) / (w.row(i).norm() * w.row(j).norm());
            let c1 = wq.row(i).dot(&wq.row(j)) / (wq.row(i).norm() * wq.row(j).norm());
            assert!((c0 - c1).abs() < 1e-10);
        }
    }
}

#[test]
fn adjacent_maps_compose() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let w0 = gaussian(&mut rng, 50, 8);
    let (r1, r2) = (rotation(&mut rng, 8), rotation(&mut rng, 8));
    let w1 = &w0 * &r1;
    let w2 = &w1 * &r2;
    let a = procrustes_align(&w0, &w1).unwrap();
    let b = procrustes_align(&w1, &w2).unwrap();
    let direct = procrustes_align(&w0, &w2).unwrap();
    assert!((a.then(&b).unwrap().q - direct.q).norm() < 1e-8);
}

#[test]
fn chained_alignment_lands_in_the_last_frame() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (v, d) = (40, 5);
    let base = gaussian(&mut rng, v, d);
    let blocks = [&base * rotation(&mut rng, d), &base * rotation(&mut rng, d), base.clone()];
    let mut data = Vec::new();
    for b in &blocks {
        for i in 0..v {
            data.extend(b.row(i).iter().copied());
        }
    }
    let set = EmbeddingSet::new(
        Method::Sgns,
        Space::Independent,
        (0..v).map(|i| format!("w{i}")).collect(),
        vec!["a".into(), "b".into(), "c".into()],
        d,
        Rows::Dense(data),
    )
    .unwrap();
    assert!(set.cosine((0, 0), (0, 2)).is_err());
    let (aligned, maps) = align_chain(&set).unwrap();
    assert_eq!(maps.len(), 2);
    assert_eq!(aligned.space(), Space::Aligned);
    for i in 0..v {
        assert!((aligned.cosine((i, 0), (i, 2)).unwrap() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn dw2v_matches_dense_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let ms: Vec<_> = (0..3).map(|_| random_sparse(&mut rng, 7, 0.4)).collect();
        let ws: Vec<_> = (0..3).map(|_| gaussian(&mut rng, 7, 3)).collect();
        let (lambda, tau) = (rng.random_range(0.0..2.0), rng.random_range(0.0..5.0));
        let p = Dw2vProblem::new(
            ms.clone(),
            Dw2vConfig {
                rank: 3,
                lambda,
                tau,
                ..Dw2vConfig::default()
            },
        )
        .unwrap();
        let f = dw2v_objective(&ws, &p).unwrap();
        let oracle = dense_objective(&ms, &ws, lambda, tau);
        assert!((f - oracle).abs() <= 1e-10 * oracle.abs().max(1.0));
    }
}

#[test]
fn equal_factors_have_no_smoothing_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let ms: Vec<_> = (0..3).map(|_| random_sparse(&mut rng, 6, 0.5)).collect();
    let w = gaussian(&mut rng, 6, 2);
    let cfg = |tau| Dw2vConfig {
        rank: 2,
        lambda: 1.0,
        tau,
        ..Dw2vConfig::default()
    };
    let ws = vec![w.clone(), w.clone(), w];
    let a = dw2v_objective(&ws, &Dw2vProblem::new(ms.clone(), cfg(0.0)).unwrap()).unwrap();
    let b = dw2v_objective(&ws, &Dw2vProblem::new(ms, cfg(1e6)).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn dw2v_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let ms: Vec<_> = (0..2).map(|_| random_sparse(&mut rng, 5, 0.5)).collect();
    let ws: Vec<_> = (0..2).map(|_| gaussian(&mut rng, 5, 2)).collect();
    let p = Dw2vProblem::new(
        ms,
        Dw2vConfig {
            rank: 2,
            lambda: 0.7,
            tau: 1.3,
            ..Dw2vConfig::default()
        },
    )
    .unwrap();
    let g = dw2v_gradient(&ws, &p).unwrap();
    let h = 1e-5;
    for t in 0..2 {
        for k in 0..10 {
            let mut plus = ws.clone();
            let mut minus = ws.clone();
            plus[t][k] += h;
            minus[t][k] -= h;
            let fd = (dw2v_objective(&plus, &p).unwrap() - dw2v_objective(&minus, &p).unwrap()) / (2.0 * h);
            let rel = (fd - g[t][k]).abs() / fd.abs().max(g[t][k].abs()).max(1e-8);
            assert!(rel < 1e-4, "period {t} entry {k}: {fd} vs {}", g[t][k]);
        }
    }
}

#[test]
fn dw2v_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let ms: Vec<_> = (0..3)
        .map(|_| {
            let m = random_sparse(&mut rng, 20, 0.3).to_dense();
            CsrMatrix::from_dense(&(&m + m.transpose()))
        })
        .collect();
    let cfg = |tau| Dw2vConfig {
        rank: 4,
        lambda: 1.0,
        tau,
        ..Dw2vConfig::default()
    };
    let joint = dw2v_solve(&Dw2vProblem::new(ms.clone(), cfg(0.0)).unwrap()).unwrap();
    let independent: f64 = ms
        .iter()
        .map(|m| {
            dw2v_solve(&Dw2vProblem::new(vec![m.clone()], cfg(0.0)).unwrap())
                .unwrap()
                .objective
        })
        .sum();
    assert!(
        (joint.objective - independent).abs() <= 1e-6 * independent.max(1.0),
        "{} vs {independent}",
        joint.objective
    );

    let stiff = dw2v_solve(&Dw2vProblem::new(ms, cfg(1e6)).unwrap()).unwrap();
    let w0 = &stiff.factors[0];
    for w in &stiff.factors[1..] {
        assert!((w - w0).norm() / w0.norm() < 1e-2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn procrustes_output_is_orthogonal(seed in any::<u64>(), v in 3usize..20, d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussian(&mut rng, v, d);
        let b = gaussian(&mut rng, v, d);
        let m = procrustes_align(&a, &b).unwrap();
        prop_assert!(m.orthogonality_error() < 1e-10);
        // The identity is one of the candidates, so the optimum cannot be worse.
        prop_assert!(m.residual <= (&a - &b).norm() + 1e-9);
    }
}
