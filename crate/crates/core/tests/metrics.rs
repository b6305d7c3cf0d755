mod common;

use phonaudit_core::metrics::{pearson, quantile, PhoneProfiler};
use phonaudit_core::{aggregate_language, align, pfer, tokenize, AlignedLabel, CostModel};
use proptest::prelude::*;

#[test]
fn five_utterance_fixture_is_exact() {
    let cost = CostModel::bundled();
    let mut scores = Vec::new();
    for (i, (gold, pred, units)) in common::FIVE_UTTERANCES.iter().enumerate() {
        let g = tokenize(gold).unwrap().with_metadata("fx", format!("u{i}"));
        let p = tokenize(pred).unwrap();
        let s = pfer(&g, &p, &cost).unwrap();
        assert_eq!(s.pfer_raw, *units as f64 / 24.0, "{gold}");
        assert_eq!(s.pfer_normalized, *units as f64 / 24.0 / g.phone_count() as f64);
        scores.push(s);
    }
    // normalized: 3/120, 24/144, 1/48, 27/72, 9/96
    let agg = aggregate_language(&scores).unwrap();
    assert_eq!(agg.n_utterances, 5);
    assert!((agg.median_pfer - 9.0 / 96.0).abs() < 1e-15);
    assert!((agg.iqr_pfer - (24.0 / 144.0 - 3.0 / 120.0)).abs() < 1e-15);
    assert!((agg.median_pfer_raw - 9.0 / 24.0).abs() < 1e-15);
    assert!((agg.iqr_pfer_raw - (24.0 - 3.0) / 24.0).abs() < 1e-15);
}

#[test]
fn fixture_phone_profiles() {
    let cost = CostModel::bundled();
    let mut prof = PhoneProfiler::all(&cost);
    for (gold, pred, _) in common::FIVE_UTTERANCES {
        prof.add_pair(&tokenize(gold).unwrap().flatten(), &tokenize(pred).unwrap().flatten());
    }
    let click = prof.profile("ǀ").unwrap();
    assert_eq!(click.occurrence_count, 1);
    assert_eq!(click.recall, 0.0);
    assert_eq!(click.majority_label, AlignedLabel::Phone("ʔ".into()));
    assert!((click.expected_error - 9.0 / 24.0).abs() < 1e-12);
    let a = prof.profile("a").unwrap();
    assert_eq!(a.occurrence_count, 2);
    assert_eq!(a.recall, 1.0);
    assert_eq!(a.expected_error, 0.0);
    // p of "ʃip" aligns with b
    let p = prof.profile("p").unwrap();
    assert_eq!(p.majority_label, AlignedLabel::Phone("b".into()));
    assert!((p.expected_error - 1.0 / 24.0).abs() < 1e-12);
}

#[test]
fn correlation_of_identical_columns() {
    let xs = [0.1, 0.15, 0.2, 0.08];
    assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
    assert!(pearson(&[0.1, 0.1], &[0.2, 0.3]).is_none());
}

proptest! {
    #[test]
    fn epr_bounded_and_recall_consistent(seed in 0u64..10_000) {
        let mut rng = phonaudit_core::rng::SplitMix64::new(seed);
        let cost = CostModel::bundled();
        let mut prof = PhoneProfiler::all(&cost);
        for _ in 0..5 {
            let g = tokenize(&common::corpus::utterance(&mut rng)).unwrap();
            let p = tokenize(&common::corpus::corrupt(&mut rng, &g.render(), 40)).unwrap();
            prof.add_pair(&g.flatten(), &p.flatten());
        }
        for p in prof.profiles() {
            prop_assert!((0.0..=1.0).contains(&p.expected_error));
            prop_assert!((0.0..=1.0).contains(&p.recall));
            if p.recall == 1.0 {
                prop_assert_eq!(p.expected_error, 0.0);
            }
        }
    }

    #[test]
    fn deletion_only_cost_is_exact(keep in prop::collection::vec(any::<bool>(), 1..15), indel in 0.25f64..2.0) {
        let cost = CostModel::bundled().with_indel_cost(indel);
        let gold: Vec<_> = (0..keep.len()).map(|i| ["p", "a", "ʃ", "u"][i % 4]).collect();
        let gold = common::phones(&gold);
        let pred: Vec<_> = gold.iter().zip(&keep).filter(|(_, k)| **k).map(|(p, _)| p.clone()).collect();
        let deleted = keep.iter().filter(|k| !**k).count();
        let total = align(&gold, &pred, &cost).total_cost;
        // deletions must be the only edits when indel cost is at most a substitution
        if indel <= 1.0 || deleted == 0 {
            prop_assert!((total - indel * deleted as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn quantile_is_monotone(mut v in prop::collection::vec(-10.0f64..10.0, 1..30), q1 in 0.0f64..1.0, q2 in 0.0f64..1.0) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        prop_assert!(quantile(&v, lo) <= quantile(&v, hi) + 1e-12);
        v.sort_by(f64::total_cmp);
        prop_assert_eq!(quantile(&v, 0.0), v[0]);
        prop_assert_eq!(quantile(&v, 1.0), *v.last().unwrap());
    }
}
