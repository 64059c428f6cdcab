use ppgpt_rag::embed::HashedEmbedder;
use ppgpt_rag::ranking::*;
use ppgpt_rag::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fv(a: [f64; 4]) -> FeatureVector {
    FeatureVector::new(a[0], a[1], a[2], a[3])
}

fn ids<T: AsRef<str>>(r: &[Ranked<T>]) -> Vec<&str> {
    r.iter().map(|x| x.item.as_ref()).collect()
}

#[test]
fn published_weights_by_hand() {
    let w = Weights::PUBLISHED;
    let s = score(&fv([0.8, 0.7, 0.6, 0.5]), &w).unwrap();
    let hand = 0.134 * 0.8 + 0.556 * 0.7 + 0.141 * 0.6 + 0.168 * 0.5;
    assert!((s - 0.6650).abs() < 1e-9);
    assert!((s - hand).abs() < 1e-15);
    assert!((w.sum() - 0.999).abs() < 1e-12);
    let n = w.normalized();
    assert!((n.sum() - 1.0).abs() < 1e-12);
    assert!((score(&fv([1.0; 4]), &n).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(score(&fv([0.0; 4]), &n).unwrap(), 0.0);
    assert!(matches!(
        score(&fv([f64::NAN, 0.0, 0.0, 0.0]), &n),
        Err(Error::NonFinite)
    ));
}

#[test]
fn topk_examples() {
    let w = Weights::from_array([1.0, 0.0, 0.0, 0.0]);
    let items = |v: &[(&'static str, f64)]| v.iter().map(|(i, s)| (*i, fv([*s, 0.0, 0.0, 0.0]))).collect::<Vec<_>>();
    let r = rank_topk(items(&[("a", 0.9), ("b", 0.5), ("c", 0.7)]), |s| s, &w, 2).unwrap();
    assert_eq!(ids(&r), ["a", "c"]);
    let r = rank_topk(items(&[("b", 0.5), ("a", 0.5)]), |s| s, &w, 1).unwrap();
    assert_eq!(ids(&r), ["a"]);
    let r = rank_topk(items(&[("only", 0.1)]), |s| s, &w, 2).unwrap();
    assert_eq!(ids(&r), ["only"]);
    assert!(rank_topk(items(&[("a", 0.1)]), |s| s, &w, 0).is_err());
}

#[test]
fn normalization_keeps_the_ranking_on_1000_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let n = rng.gen_range(1..12);
        let items: Vec<(String, FeatureVector)> = (0..n)
            .map(|i| (format!("c{i:02}"), fv([0; 4].map(|_: i32| rng.gen_range(-1.0..1.0)))))
            .collect();
        let w = Weights::from_array([0; 4].map(|_: i32| rng.gen_range(0.01..1.0)));
        let raw = rank_all(items.clone(), |s| s, &w).unwrap();
        let norm = rank_all(items.clone(), |s| s, &w.normalized()).unwrap();
        // Scores that are equal up to rounding may legitimately swap.
        let close = raw.windows(2).any(|p| (p[0].score - p[1].score).abs() < 1e-12);
        if !close {
            assert_eq!(ids(&raw), ids(&norm));
        }
        assert_eq!(raw[0].item, norm[0].item);
        let k1 = rank_topk(items, |s| s, &w.normalized(), 1).unwrap();
        assert_eq!(k1[0].item, raw[0].item);
    }
}

fn planted(rng: &mut ChaCha8Rng, w: [f64; 4], n: usize) -> Vec<TrainingRecord> {
    (0..n)
        .map(|_| {
            let f = fv([0; 4].map(|_: i32| rng.gen_range(-1.0..1.0)));
            let actual = f.as_array().iter().zip(w).map(|(x, w)| x * w).sum();
            TrainingRecord { features: f, actual }
        })
        .collect()
}

#[test]
fn ols_recovers_planted_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let w = [0; 4].map(|_: i32| rng.gen_range(-2.0..2.0));
        let n = rng.gen_range(4..60);
        let fit = fit_weights(&planted(&mut rng, w, n)).unwrap();
        for (a, b) in fit.raw.as_array().iter().zip(w) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        assert!(fit.metrics.mse < 1e-12);
    }
    let w = [0.1, 0.5, 0.2, 0.2];
    let fit = fit_weights(&planted(&mut rng, w, 30)).unwrap();
    for (a, b) in fit.raw.as_array().iter().zip(w) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!(fit.metrics.mse <= 1e-18);
    assert!((fit.normalized.sum() - 1.0).abs() < 1e-12);
}

#[test]
fn ols_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let recs = planted(&mut rng, [1.0; 4], 3);
    assert!(matches!(fit_weights(&recs), Err(Error::TooFewRecords(3))));
    let mut recs = planted(&mut rng, [1.0; 4], 10);
    for r in &mut recs {
        r.features.y_summary = r.features.x_raw * 2.0;
    }
    assert!(matches!(fit_weights(&recs), Err(Error::RankDeficient)));
    let mut recs = planted(&mut rng, [1.0; 4], 10);
    recs[4].actual = f64::INFINITY;
    assert!(matches!(fit_weights(&recs), Err(Error::NonFinite)));
}

#[test]
fn metric_definitions_by_hand() {
    let m = metrics(&[1.0, 0.0, 2.0, 4.0], &[0.5, 1.0, 2.0, 5.0]);
    // errors: 0.5, -1, 0, -1
    assert!((m.mde - (-1.5 / 4.0)).abs() < 1e-15);
    assert!((m.mae - 2.5 / 4.0).abs() < 1e-15);
    assert!((m.mse - 2.25 / 4.0).abs() < 1e-15);
    assert!((m.rmse - (2.25f64 / 4.0).sqrt()).abs() < 1e-15);
    // zero actual skipped: |0.5/1|, |0/2|, |1/4|
    assert!((m.mape - 100.0 * (0.5 + 0.0 + 0.25) / 3.0).abs() < 1e-12);
    let mean = 7.0 / 4.0;
    let ss_tot: f64 = [1.0, 0.0, 2.0, 4.0].iter().map(|a: &f64| (a - mean).powi(2)).sum();
    assert!((m.r2 - (1.0 - 2.25 / ss_tot)).abs() < 1e-15);
}

#[test]
fn training_file_format() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("train.jsonl");
    std::fs::write(
        &p,
        "{\"xRaw\":0.1,\"xSummary\":0.2,\"yRaw\":0.3,\"ySummary\":0.4,\"actual\":0.5}\n\n",
    )
    .unwrap();
    let r = read_training(&p).unwrap();
    assert_eq!(
        r,
        [TrainingRecord {
            features: fv([0.1, 0.2, 0.3, 0.4]),
            actual: 0.5
        }]
    );
}

#[test]
fn features_of_identical_texts_are_one() {
    let e = HashedEmbedder::default();
    let t = Texts {
        code: "function f() {}",
        code_summary: "does nothing",
        property: "rule r() { f(); assert(true); }",
        property_summary: "",
    };
    let f = features(&e, t, t).unwrap();
    for x in f.as_array() {
        assert!((x - 1.0).abs() < 1e-12);
    }
    let serialized = serde_json::to_string(&f).unwrap();
    assert!(serialized.contains("\"xRaw\"") && serialized.contains("\"ySummary\""));
}

proptest! {
    #[test]
    fn order_survives_monotone_transforms(scores in prop::collection::vec(-1.0f64..1.0, 1..10), k in 1usize..5, a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let w = Weights::from_array([1.0, 0.0, 0.0, 0.0]);
        let items: Vec<(String, FeatureVector)> = scores.iter().enumerate().map(|(i, s)| (format!("c{i}"), fv([*s, 0.0, 0.0, 0.0]))).collect();
        let mapped: Vec<(String, FeatureVector)> = scores.iter().enumerate().map(|(i, s)| (format!("c{i}"), fv([a * s + b, 0.0, 0.0, 0.0]))).collect();
        let r1 = rank_topk(items, |s| s, &w, k).unwrap();
        let r2 = rank_topk(mapped, |s| s, &w, k).unwrap();
        let exact_ties = scores.iter().enumerate().any(|(i, x)| scores[..i].iter().any(|y| (x - y).abs() < 1e-9));
        prop_assume!(!exact_ties);
        prop_assert_eq!(ids(&r1), ids(&r2));
        prop_assert!(r1.len() <= k);
    }
}
