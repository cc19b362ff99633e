use chronovec::cooc::count_pairs;
use chronovec::corpus::{build_vocabulary, NgramRecord, PeriodSpec, PeriodizedCorpus, TokenFilter};
use chronovec::eval::spearman;
use chronovec::ppmi::{build_ppmi, build_temporal_ppmi};
use chronovec::sparse::CsrMatrix;
use chronovec::svd::{truncated_svd, SvdOptions};
use proptest::prelude::*;

const NAMES: [&str; 8] = ["ant", "bee", "cat", "dog", "eel", "fox", "gnu", "hen"];

fn corpus_from(lines: &[(Vec<usize>, i32, u64)]) -> PeriodizedCorpus {
    let spec = PeriodSpec::new(2000, 2002, 1).unwrap();
    let records = lines.iter().map(|(toks, year, w)| NgramRecord {
        tokens: toks.iter().map(|&i| NAMES[i].to_string()).collect(),
        year: *year,
        match_count: *w,
    });
    PeriodizedCorpus::from_records(&spec, records, &TokenFilter::default())
}

fn lines() -> impl Strategy<Value = Vec<(Vec<usize>, i32, u64)>> {
    proptest::collection::vec(
        (proptest::collection::vec(0usize..8, 2..6), 2000i32..2002, 1u64..5),
        1..25,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ppmi_entries_are_positive_and_finite(lines in lines(), window in 1usize..3) {
        let c = corpus_from(&lines);
        let v = build_vocabulary(&c, 1, None).unwrap();
        for t in 0..2 {
            let counts = count_pairs(&c, &v, window, t).unwrap();
            if counts.total_pairs() == 0 {
                continue;
            }
            for m in [build_ppmi::<f64>(&counts, window).unwrap(), build_temporal_ppmi::<f64>(&c, &v, window, t).unwrap()] {
                prop_assert_eq!((m.rows(), m.cols()), (v.len(), v.len()));
                for (_, _, x) in m.matrix().iter() {
                    prop_assert!(x > 0.0 && x.is_finite());
                }
            }
        }
    }

    #[test]
    fn vocabulary_order_is_by_count_then_word(lines in lines(), min_count in 1u64..6) {
        let c = corpus_from(&lines);
        let Ok(v) = build_vocabulary(&c, min_count, None) else {
            return Ok(());
        };
        for i in 1..v.len() {
            let (a, b) = ((v.count(i - 1), v.word(i - 1)), (v.count(i), v.word(i)));
            prop_assert!(a.0 > b.0 || (a.0 == b.0 && a.1 < b.1));
        }
        for i in 0..v.len() {
            prop_assert!(v.count(i) >= min_count);
            prop_assert_eq!(v.index(v.word(i)), Some(i));
        }
    }

    #[test]
    fn svd_factors_are_orthonormal(seed in any::<u64>(), rows in 3usize..30, cols in 3usize..30, rank in 1usize..4) {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        let mut t = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                if next() < 0.4 {
                    t.push((i, j, next() * 4.0 - 1.0));
                }
            }
        }
        let a = CsrMatrix::from_triplets(rows, cols, t).unwrap();
        let f = truncated_svd(&a, rank, &SvdOptions { seed, ..SvdOptions::default() }).unwrap();
        let eye = nalgebra::DMatrix::<f64>::identity(rank, rank);
        let nonzero = f.sigma.iter().filter(|&&s| s > 1e-10).count();
        let (u, v) = (f.u.columns(0, nonzero), f.v.columns(0, nonzero));
        let sub = eye.view((0, 0), (nonzero, nonzero));
        prop_assert!((u.transpose() * u - sub).norm() < 1e-8);
        prop_assert!((v.transpose() * v - sub).norm() < 1e-8);
        for k in 1..f.rank() {
            prop_assert!(f.sigma[k] <= f.sigma[k - 1]);
        }
    }

    #[test]
    fn spearman_is_bounded_symmetric_and_rank_based(
        xs in proptest::collection::vec(-50i32..50, 3..40),
        ys_seed in proptest::collection::vec(-50i32..50, 40),
    ) {
        let x: Vec<f64> = xs.iter().map(|&a| a as f64).collect();
        let y: Vec<f64> = ys_seed[..x.len()].iter().map(|&a| a as f64).collect();
        if let Ok(r) = spearman(&x, &y) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
            prop_assert!((r - spearman(&y, &x).unwrap()).abs() < 1e-12);
            let stretched: Vec<f64> = x.iter().map(|a| a.powi(3) + 7.0).collect();
            prop_assert!((r - spearman(&stretched, &y).unwrap()).abs() < 1e-12);
            let flipped: Vec<f64> = x.iter().map(|a| -a).collect();
            prop_assert!((r + spearman(&flipped, &y).unwrap()).abs() < 1e-12);
        }
    }
}
