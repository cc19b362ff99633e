use chronovec::corpus::{build_vocabulary, NgramRecord, PeriodSpec, PeriodizedCorpus, TokenFilter};
use chronovec::embedding::{cosine_similarity, EmbeddingSet, Method};
use chronovec::methods::{build_embeddings, tsgns_model, tsgns_train_epochs, MethodConfig};
use chronovec::sgns::{init_model, Mode};
use chronovec::synthetic::{generate, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_synthetic() -> PeriodizedCorpus {
    generate(&SynthConfig {
        vocab_size: 200,
        topics: 5,
        records_per_period: 1500,
        special_skip: 10,
        ..SynthConfig::default()
    })
    .unwrap()
    .corpus()
}

fn config(dim: usize, epochs: u32) -> MethodConfig {
    let mut c = MethodConfig {
        dim,
        ..MethodConfig::default()
    };
    c.train.epochs = epochs;
    c
}

#[test]
fn split_epochs_reproduce_a_full_run() {
    let corpus = small_synthetic();
    let vocab = build_vocabulary(&corpus, 2, None).unwrap();
    let c = config(8, 3);
    let (full, _) = tsgns_model::<f64>(&corpus, &vocab, &c).unwrap();
    let mut split = init_model::<f64>(vocab.len(), corpus.num_periods(), 8, Mode::Tagged, false, c.train.seed).unwrap();
    tsgns_train_epochs(&mut split, &corpus, &vocab, &c, 0..1).unwrap();
    tsgns_train_epochs(&mut split, &corpus, &vocab, &c, 1..3).unwrap();
    assert_eq!(full.input_weights(), split.input_weights());
    assert_eq!(full.output_weights(), split.output_weights());

    let mut m = split.clone();
    assert!(tsgns_train_epochs(&mut m, &corpus, &vocab, &c, 2..4).is_err());
    assert!(tsgns_train_epochs(&mut m, &corpus, &vocab, &c, 1..1).is_err());
}

#[test]
fn single_worker_runs_are_identical() {
    let corpus = small_synthetic();
    let vocab = build_vocabulary(&corpus, 2, None).unwrap();
    let c = config(8, 2);
    for method in [Method::Sgns, Method::Tsgns] {
        let a: EmbeddingSet<f32> = build_embeddings(method, &corpus, &vocab, &c).unwrap();
        let b: EmbeddingSet<f32> = build_embeddings(method, &corpus, &vocab, &c).unwrap();
        assert_eq!(a, b, "{method}");
    }
    let mut other = c.clone();
    other.train.seed = 2;
    let a: EmbeddingSet<f32> = build_embeddings(Method::Tsgns, &corpus, &vocab, &c).unwrap();
    let b: EmbeddingSet<f32> = build_embeddings(Method::Tsgns, &corpus, &vocab, &other).unwrap();
    assert_ne!(a, b);
}

#[test]
fn epoch_loss_decreases() {
    let corpus = small_synthetic();
    let vocab = build_vocabulary(&corpus, 2, None).unwrap();
    let (_, report) = tsgns_model::<f64>(&corpus, &vocab, &config(16, 6)).unwrap();
    let l = &report.epoch_losses;
    assert_eq!(l.len(), 6);
    assert!(l[5] < l[0], "{l:?}");
}

#[test]
fn interchangeable_words_end_up_close() {
    // `twina` and `twinb` fill the same slot in identical contexts.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let contexts: Vec<String> = (0..40).map(|i| format!("w{}", (b'a' + i as u8 % 26) as char).repeat(1 + i / 26)).collect();
    let mut records = Vec::new();
    for year in [1900, 1910] {
        for _ in 0..3000 {
            let pick = |rng: &mut ChaCha8Rng| contexts[rng.random_range(0..contexts.len())].clone();
            let (l2, l1, r1, r2) = (pick(&mut rng), pick(&mut rng), pick(&mut rng), pick(&mut rng));
            let anchor = if rng.random_bool(0.5) { "ctxone" } else { "ctxtwo" };
            for twin in ["twina", "twinb"] {
                records.push(NgramRecord {
                    tokens: vec![l2.clone(), anchor.into(), twin.into(), l1.clone(), r1.clone()],
                    year,
                    match_count: 1,
                });
            }
            records.push(NgramRecord {
                tokens: vec![l2, l1, r1, r2, "filler".into()],
                year,
                match_count: 1,
            });
        }
    }
    let spec = PeriodSpec::new(1900, 1920, 10).unwrap();
    let corpus = PeriodizedCorpus::from_records(&spec, records, &TokenFilter::default());
    let vocab = build_vocabulary(&corpus, 1, None).unwrap();
    let set: EmbeddingSet<f64> = build_embeddings(Method::Sgns, &corpus, &vocab, &config(20, 5)).unwrap();
    let a = set.lookup("twina", "1900-1909").unwrap().to_dense(20);
    let b = set.lookup("twinb", "1900-1909").unwrap().to_dense(20);
    let cos = cosine_similarity(&a, &b).unwrap();
    assert!(cos > 0.8, "cosine {cos}");
}
