use chronovec::embedding::{cosine_similarity, read_embeddings, write_embeddings, EmbeddingSet, Method, Rows, Space};
use chronovec::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set(seed: u64, words: usize, periods: usize, dim: usize) -> EmbeddingSet<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..words * periods * dim).map(|_| rng.random_range(-3.0..3.0)).collect();
    EmbeddingSet::new(
        Method::Tsgns,
        Space::Shared,
        (0..words).map(|i| format!("w{i}")).collect(),
        (0..periods).map(|t| format!("{}", 1900 + 10 * t)).collect(),
        dim,
        Rows::Dense(data),
    )
    .unwrap()
}

#[test]
fn round_trip_keeps_keys_and_cosines() {
    let set = random_set(1, 50, 3, 16);
    let dir = tempfile::tempdir().unwrap();
    for name in ["e.emb", "e.emb.gz"] {
        let path = dir.path().join(name);
        write_embeddings(&set, &path).unwrap();
        let back: EmbeddingSet<f64> = read_embeddings(&path).unwrap();
        assert_eq!(back.words(), set.words());
        assert_eq!(back.periods(), set.periods());
        assert_eq!(back.dim(), 16);
        let mut worst: f64 = 0.0;
        for a in 0..set.num_rows() {
            for b in (a + 1..set.num_rows()).step_by(7) {
                let before = cosine_similarity(&set.row(a).to_dense(16), &set.row(b).to_dense(16)).unwrap();
                let after = cosine_similarity(&back.row(a).to_dense(16), &back.row(b).to_dense(16)).unwrap();
                worst = worst.max((before - after).abs());
            }
        }
        assert!(worst < 1e-7, "{name}: cosine drift {worst}");
    }
}

#[test]
fn records_for_an_undeclared_period_are_rejected() {
    let set = random_set(2, 3, 2, 2);
    let mut text = Vec::new();
    set.write_to(&mut text).unwrap();
    let mut text = String::from_utf8(text).unwrap();
    text.push_str("w0 1920 1.0 2.0\n");
    assert!(matches!(
        EmbeddingSet::<f64>::read_from(text.as_bytes()),
        Err(Error::Validation(_))
    ));
}

#[test]
fn reading_into_a_narrower_float_keeps_the_file_values() {
    let set = random_set(3, 10, 2, 4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.emb");
    write_embeddings(&set, &path).unwrap();
    let narrow: EmbeddingSet<f32> = read_embeddings(&path).unwrap();
    for r in 0..set.num_rows() {
        for (a, b) in set.row(r).to_dense(4).iter().zip(narrow.row(r).to_dense(4)) {
            assert!((a - f64::from(b)).abs() <= 1e-6 * a.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn write_read_write_is_a_fixed_point(seed in any::<u64>(), words in 1usize..20, periods in 1usize..4, dim in 1usize..6) {
        let set = random_set(seed, words, periods, dim);
        let mut first = Vec::new();
        set.write_to(&mut first).unwrap();
        let back = EmbeddingSet::<f64>::read_from(&first[..]).unwrap();
        prop_assert_eq!(back.num_rows(), words * periods);
        let mut second = Vec::new();
        back.write_to(&mut second).unwrap();
        prop_assert_eq!(first, second);
    }
}
