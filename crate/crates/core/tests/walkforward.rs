mod common;

use std::sync::OnceLock;

use churnet::features::{FeatureCatalog, FeatureCategory, FeatureConfig, FeatureStore};
use churnet::learners::{compute_metrics, ModelKind, ModelParams};
use churnet::registry::{build_temporal_grid, MonthIndex, RecordSet};
use churnet::synth::{generate_market, market_grid, MarketConfig};
use churnet::walkforward::{
    compare_variants, importance_by_category, run_on_store, run_walkforward, score_month, training_digest,
    training_digest_from_records, training_months, WalkForwardConfig,
};
use common::{d, from_offsets, rec, set};
use proptest::prelude::*;

struct Fixture {
    rs: RecordSet,
    store: FeatureStore,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let cfg = MarketConfig {
            n_agents: 1500,
            n_firms: 60,
            months: 40,
            base_hazard: 0.04,
            firm_stability_spread: 0.6,
            seed: 7,
            ..MarketConfig::default()
        };
        let rs = generate_market(&cfg).unwrap();
        let grid = market_grid(&cfg, &rs).unwrap();
        let store = FeatureStore::build(&grid, &rs, &FeatureCatalog::default_catalog(), &FeatureConfig::default()).unwrap();
        Fixture { rs, store }
    })
}

fn config(first: i32, last: i32) -> WalkForwardConfig {
    let start = fixture().store.start();
    WalkForwardConfig {
        min_train_months: 12,
        calibration_slice_months: 4,
        model_kind: ModelKind::GradientBoosted,
        model: ModelParams { n_trees: 20, max_depth: 3, learning_rate: 0.1, min_leaf: 10, ..ModelParams::gradient_boosted() },
        seed: 5,
        ..WalkForwardConfig::new(start.offset(first), start.offset(last))
    }
}

#[test]
fn single_month_metrics_compose_from_scores() {
    let f = fixture();
    let cfg = config(30, 30);
    let catalog = FeatureCatalog::default_catalog();
    let (result, scores) = score_month(&f.store, &f.rs, &catalog, &cfg, cfg.first_test_month).unwrap();
    let scores = scores.expect("month is evaluated");
    assert_eq!(scores.labels, f.store.month(cfg.first_test_month).unwrap().labels);
    let direct = compute_metrics(&scores.calibrated, &scores.labels, scores.threshold);
    assert_eq!(result.metrics.as_ref(), Some(&direct));
    let raw = compute_metrics(&scores.raw, &scores.labels, scores.threshold);
    let r = result.raw.unwrap();
    assert_eq!((r.ap, r.auc, r.brier), (raw.ap, raw.auc, raw.brier));

    let report = run_on_store(&f.store, &f.rs, &catalog, "full", &cfg).unwrap();
    assert_eq!(report.per_month, vec![result]);
    assert_eq!(report.summary.ap.unwrap().mean, direct.ap.unwrap());
}

#[test]
fn runs_are_reproducible_and_skip_nothing_from_means() {
    let f = fixture();
    let cfg = config(28, 33);
    let catalog = FeatureCatalog::default_catalog();
    let a = run_on_store(&f.store, &f.rs, &catalog, "full", &cfg).unwrap();
    let b = run_on_store(&f.store, &f.rs, &catalog, "full", &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());

    let evaluated: Vec<f64> =
        a.per_month.iter().filter(|r| r.skipped.is_none()).map(|r| r.metrics.as_ref().unwrap().ap.unwrap()).collect();
    assert_eq!(a.summary.n_evaluated, evaluated.len());
    assert_eq!(a.summary.n_evaluated + a.summary.n_skipped, a.per_month.len());
    let mean = evaluated.iter().sum::<f64>() / evaluated.len() as f64;
    assert!((a.summary.ap.unwrap().mean - mean).abs() < 1e-12);
    assert!((a.importance_by_category.values().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(a.importance_by_feature.len() <= cfg.top_features);
}

#[test]
fn training_windows_only_grow() {
    let f = fixture();
    let start = f.store.start();
    for k in 14..39 {
        let m = start.offset(k);
        let now = training_months(&f.store, m, 1);
        let next = training_months(&f.store, m.offset(1), 1);
        assert!(now.iter().all(|t| next.contains(t)));
        assert!(now.iter().all(|t| *t <= m.offset(-2)));
    }
}

#[test]
fn self_comparison_has_zero_deltas() {
    let f = fixture();
    let cfg = config(30, 31);
    let variants = vec![
        ("full".to_string(), FeatureCatalog::default_catalog()),
        ("copy".to_string(), FeatureCatalog::default_catalog()),
    ];
    let cmp = compare_variants(&f.store, &f.rs, &cfg, &variants, "full").unwrap();
    for row in &cmp.rows {
        for d in row.delta_pct.values() {
            assert_eq!(*d, Some(0.0));
        }
    }
    let empty = vec![("none".to_string(), FeatureCatalog::default_catalog().filter(|_| false))];
    assert!(compare_variants(&f.store, &f.rs, &cfg, &empty, "none").is_err());
    assert!(compare_variants(&f.store, &f.rs, &cfg, &variants, "missing").is_err());
}

#[test]
fn one_category_takes_the_whole_share() {
    let catalog = FeatureCatalog::default_catalog();
    let mut imp = vec![0.0; catalog.len()];
    imp[catalog.position("headcount").unwrap()] = 0.7;
    imp[catalog.position("tenure_q90").unwrap()] = 0.3;
    let shares = importance_by_category(&[imp.clone(), imp], &catalog).unwrap();
    assert_eq!(shares[&FeatureCategory::Firm], 1.0);
    assert!(importance_by_category(&[vec![1.0; 3]], &catalog).is_err());
    assert!(importance_by_category(&[], &catalog).is_err());
}

#[test]
fn empty_history_is_skipped_as_insufficient() {
    // the grid starts two years before anyone is licensed
    let mut rows = Vec::new();
    for p in 0..30 {
        let end = (p % 3 == 0).then(|| format!("2021-{:02}-01", 2 + p % 10));
        rows.push(rec(&format!("p{p}"), &format!("F{}", p % 2), "2020-01-01", end.as_deref()));
    }
    let rs = set(rows);
    let grid = build_temporal_grid(&rs, MonthIndex::from_ym(2018, 1), MonthIndex::from_ym(2021, 6)).unwrap();
    let cfg = WalkForwardConfig { min_train_months: 12, ..WalkForwardConfig::new("2020-06".parse().unwrap(), "2020-06".parse().unwrap()) };
    let report = run_walkforward(&grid, &rs, &FeatureCatalog::no_network(), &FeatureConfig::default(), &cfg).unwrap();
    assert_eq!(report.per_month[0].skipped.as_deref(), Some("insufficient training months"));
    assert_eq!(report.summary.n_evaluated, 0);
    assert!(report.summary.ap.is_none());
}

#[test]
fn inconsistent_configs_are_rejected() {
    let f = fixture();
    let catalog = FeatureCatalog::default_catalog();
    let start = f.store.start();
    let bad = [
        WalkForwardConfig { gap_months: 0, ..config(30, 30) },
        config(31, 30),
        config(30, 45),
        config(5, 30),
        WalkForwardConfig { calibration_slice_months: 12, ..config(30, 30) },
        WalkForwardConfig { undersample_ratio: 0.0, ..config(30, 30) },
    ];
    for cfg in bad {
        assert!(matches!(
            run_on_store(&f.store, &f.rs, &catalog, "full", &cfg),
            Err(churnet::Error::InvalidArgument(_))
        ), "{cfg:?} from {start}");
    }
}

#[test]
fn removing_the_gap_lets_future_labels_in() {
    let rs = set(vec![
        rec("a", "X", "2019-01-01", Some("2020-06-10")),
        rec("b", "X", "2019-01-01", None),
        rec("c", "Y", "2019-03-01", Some("2020-07-20")),
        rec("d", "Y", "2019-03-01", None),
    ]);
    let start = MonthIndex::from_ym(2019, 1);
    let m = MonthIndex::from_ym(2020, 7);
    let catalog = FeatureCatalog::default_catalog();
    let fc = FeatureConfig::default();
    let cut = rs.truncated_at(m.offset(-1).snapshot_date());
    let digest = |rs: &RecordSet, gap| training_digest_from_records(rs, start, &catalog, &fc, m, gap).unwrap();
    assert_eq!(digest(&rs, 1), digest(&cut, 1));
    assert_ne!(digest(&rs, 0), digest(&cut, 0));

    // the digest over a prebuilt store agrees with the from-scratch one
    let grid = build_temporal_grid(&rs, start, m).unwrap();
    let store = FeatureStore::build(&grid, &rs, &catalog, &fc).unwrap();
    assert_eq!(training_digest(&store, &catalog, &rs, m, 1).unwrap(), digest(&rs, 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn digest_ignores_events_after_the_gap(
        spells in prop::collection::vec((0u8..25, 0u8..3, 0u32..900, prop::option::of(20u32..600)), 5..40),
        month in 14i32..28,
    ) {
        let rs = from_offsets(d("2018-01-01"), &spells);
        let start = MonthIndex::from_ym(2018, 1);
        let m = start.offset(month);
        let catalog = FeatureCatalog::default_catalog();
        let fc = FeatureConfig::default();
        let cut = rs.truncated_at(m.offset(-1).snapshot_date());
        prop_assert_eq!(
            training_digest_from_records(&rs, start, &catalog, &fc, m, 1).unwrap(),
            training_digest_from_records(&cut, start, &catalog, &fc, m, 1).unwrap()
        );
    }
}
