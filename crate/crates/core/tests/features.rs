mod common;

use std::collections::BTreeMap;

use churnet::features::{
    assemble_matrix, build_month_matrix, demographic_features, firm_features, individual_features,
    individual_features_for_spell, FeatureCatalog, FeatureCategory, FeatureConfig, FeatureMatrix, PropagatedColumns,
    DEMOGRAPHIC_FEATURES, FIRM_FEATURES, INDIVIDUAL_FEATURES, REGION_DICTIONARY,
};
use churnet::learners::{predict_proba, train, ModelKind, ModelParams};
use churnet::registry::{build_temporal_grid, Gender, MonthIndex, RecordSet, Role};
use churnet::Error;
use common::{d, from_offsets, rec, set};
use proptest::prelude::*;

fn close(got: f64, want: f64) {
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
}

fn close_all(got: &[f64], want: &[f64]) {
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        if w.is_nan() {
            assert!(g.is_nan(), "{got:?} vs {want:?}");
        } else {
            assert!((g - w).abs() < 1e-9, "{got:?} vs {want:?}");
        }
    }
}

/// Four people across firms X, Y, Z and W, observed at 2020-12.
fn toy() -> RecordSet {
    let mut rows = vec![
        rec("a", "X", "2019-01-01", None),
        rec("b", "Y", "2016-01-01", Some("2018-01-01")),
        rec("b", "Z", "2018-01-01", Some("2020-01-01")),
        rec("b", "X", "2020-01-01", None),
        rec("c", "X", "2020-06-01", None),
        rec("c", "Y", "2020-09-01", None),
        rec("d", "X", "2020-12-15", None),
        rec("f", "X", "2019-03-01", Some("2020-09-01")),
        rec("g", "X", "2018-07-01", Some("2020-03-01")),
        rec("h", "X", "2020-10-01", None),
        rec("k", "W", "2020-11-01", Some("2021-01-15")),
        rec("l", "W", "2020-02-01", Some("2020-08-01")),
    ];
    rows[3].role = Role::ResponsibleOfficer;
    rows[4].role = Role::Unknown;
    rows[5].role = Role::Unknown;
    set(rows)
}

const DEC: (i32, u32) = (2020, 12);
/// Elapsed fraction of December on its snapshot day.
const S: f64 = 30.0 / 31.0;

#[test]
fn individual_hand_values() {
    let rs = toy();
    let m = MonthIndex::from_ym(DEC.0, DEC.1);
    close_all(&individual_features(&rs, "a", m).unwrap(), &[23.0 + S, 23.0 + S, 0.0, 12.0 / (23.0 + S), 0.0, 1.0]);
    close_all(&individual_features(&rs, "b", m).unwrap(), &[11.0 + S, 59.0 + S, 2.0, 36.0 / (59.0 + S), 1.0, 1.0]);
    // most recent active spell (Y) while still at X
    close_all(
        &individual_features(&rs, "c", m).unwrap(),
        &[3.0 + S, 6.0 + S, 1.0, 24.0 / (6.0 + S), f64::NAN, 2.0],
    );
    // half a month in: career floored at one month
    close_all(&individual_features(&rs, "d", m).unwrap(), &[16.0 / 31.0, 1.0, 0.0, 12.0, 0.0, 1.0]);
    assert!(individual_features(&rs, "g", m).is_err());
    assert!(individual_features(&rs, "nobody", m).is_err());
}

#[test]
fn individual_arithmetic_examples() {
    let rs = set(vec![rec("a", "X", "2019-01-01", None)]);
    let m = MonthIndex::from_ym(2019, 12);
    let v = individual_features(&rs, "a", m).unwrap();
    close(v[0], 11.0 + S);
    assert_eq!(v[2], 0.0);

    // first job started exactly twelve coordinate months before the snapshot day
    let rs = set(vec![rec("a", "X", "2018-12-31", None)]);
    let v = individual_features(&rs, "a", MonthIndex::from_ym(2019, 12)).unwrap();
    close(v[0], 12.0);
    close(v[3], 1.0);

    // three firms over a 72-month career
    let rs = set(vec![
        rec("a", "X", "2013-12-31", Some("2016-01-01")),
        rec("a", "Y", "2016-01-01", Some("2018-01-01")),
        rec("a", "Z", "2018-01-01", None),
    ]);
    let v = individual_features(&rs, "a", MonthIndex::from_ym(2019, 12)).unwrap();
    close(v[1], 72.0);
    close(v[3], 0.5);
    assert_eq!(v[2], 2.0);
}

#[test]
fn firm_hand_values() {
    let rs = toy();
    let m = MonthIndex::from_ym(DEC.0, DEC.1);
    // tenures at X: 16/31, 2+S, 6+S, 11+S, 23+S; headcounts Jul..Dec 4,4,3,4,4,5; Jun 4
    let t = [16.0 / 31.0, 2.0 + S, 6.0 + S, 11.0 + S, 23.0 + S];
    close_all(
        &firm_features(&rs, "X", m).unwrap(),
        &[5.0, 29.0 + S, t.iter().sum::<f64>() / 5.0, t[1], t[2], t[3], t[3] + 0.6 * (t[4] - t[3]), 0.25, 0.25],
    );
    let y = 3.0 + S;
    close_all(&firm_features(&rs, "Y", m).unwrap(), &[1.0, 59.0 + S, y, y, y, y, y, 0.0, 1.0]);
    let w = 1.0 + S;
    close_all(&firm_features(&rs, "W", m).unwrap(), &[1.0, 10.0 + S, w, w, w, w, w, 2.0, 0.0]);
    assert!(firm_features(&rs, "Z", m).is_err());
}

#[test]
fn two_employee_firm_mean_and_median() {
    let rs = set(vec![rec("a", "X", "2019-02-01", None), rec("b", "X", "2018-04-01", None)]);
    let v = firm_features(&rs, "X", MonthIndex::from_ym(2019, 11)).unwrap();
    // tenures 9+s and 19+s with s = 29/30
    let s = 29.0 / 30.0;
    close(v[2], 14.0 + s);
    close(v[4], 14.0 + s);
    assert_eq!(v[7], 0.0);
}

#[test]
fn demographic_dictionary() {
    let mut rows = vec![
        rec("a", "X", "2020-01-01", None),
        rec("b", "X", "2020-01-01", None),
        rec("c", "X", "2020-01-01", None),
        rec("e", "X", "2020-01-01", None),
    ];
    rows[0].gender = Some(Gender::F);
    rows[0].region = Some("HK".into());
    rows[1].gender = Some(Gender::M);
    rows[1].region = Some("us".into());
    rows[2].region = Some("Atlantis".into());
    let rs = set(rows);
    let code = |r: &str| (REGION_DICTIONARY.iter().position(|x| *x == r).unwrap() + 1) as f64;
    close_all(&demographic_features(&rs, "a", None), &[1.0, 0.0, code("HK")]);
    close_all(&demographic_features(&rs, "b", None), &[0.0, 1.0, code("US")]);
    close_all(&demographic_features(&rs, "c", None), &[f64::NAN, f64::NAN, 0.0]);
    close_all(&demographic_features(&rs, "e", None), &[f64::NAN; 3]);
}

#[test]
fn base_only_matrix_composes_per_operation_outputs() {
    let rs = set(vec![rec("a", "X", "2019-01-01", None), rec("b", "X", "2019-06-01", Some("2021-01-10"))]);
    let m = MonthIndex::from_ym(2020, 12);
    let grid = build_temporal_grid(&rs, m, m).unwrap();
    let catalog = FeatureCatalog::no_network();
    let mx = assemble_matrix(&grid, &rs, m, &catalog, &PropagatedColumns::new()).unwrap();
    assert_eq!((mx.n_rows(), mx.n_cols()), (2, 18));
    assert_eq!(mx.labels, vec![false, true]);
    for (r, key) in mx.rows.iter().enumerate() {
        let person = rs.person_name(key.person);
        let mut expect: Vec<f64> = individual_features_for_spell(&rs, key.spell, m).unwrap().to_vec();
        expect.extend(firm_features(&rs, "X", m).unwrap());
        expect.extend(demographic_features(&rs, person, Some(m)));
        let expect: Vec<f32> = expect.into_iter().map(|v| v as f32).collect();
        let row = mx.row(r);
        for (c, (g, w)) in row.iter().zip(&expect).enumerate() {
            assert!(g.to_bits() == w.to_bits() || (g.is_nan() && w.is_nan()), "column {c}");
        }
    }
}

#[test]
fn empty_month_gives_zero_rows() {
    let rs = set(vec![rec("a", "X", "2021-01-01", None)]);
    let m = MonthIndex::from_ym(2020, 6);
    let grid = build_temporal_grid(&rs, m, m).unwrap();
    let mx = build_month_matrix(&grid, &rs, m, &FeatureCatalog::default_catalog(), &FeatureConfig::default()).unwrap();
    assert_eq!((mx.n_rows(), mx.n_cols()), (0, 36));
}

#[test]
fn default_catalog_split() {
    let c = FeatureCatalog::default_catalog();
    assert_eq!(c.len(), 36);
    let count = |cat| c.entries().iter().filter(|e| e.category == cat).count();
    assert_eq!(count(FeatureCategory::Individual), INDIVIDUAL_FEATURES.len());
    assert_eq!(count(FeatureCategory::Firm), FIRM_FEATURES.len());
    assert_eq!(count(FeatureCategory::Demographic), DEMOGRAPHIC_FEATURES.len());
    assert_eq!(count(FeatureCategory::NetworkPropagated), 18);
    assert_eq!(FeatureCatalog::from_json(&c.to_json().unwrap()).unwrap(), c);
}

#[test]
fn missing_propagated_column_is_named() {
    let rs = set(vec![rec("a", "X", "2019-01-01", None)]);
    let m = MonthIndex::from_ym(2020, 1);
    let grid = build_temporal_grid(&rs, m, m).unwrap();
    match assemble_matrix(&grid, &rs, m, &FeatureCatalog::default_catalog(), &BTreeMap::new()) {
        Err(Error::MissingColumn(name)) => assert_eq!(name, "emp_k1_tenure_months"),
        other => panic!("expected a missing column, got {other:?}"),
    }
}

fn keyed_rows(rs: &RecordSet, mx: &FeatureMatrix) -> BTreeMap<(String, String, String), Vec<u32>> {
    mx.rows
        .iter()
        .enumerate()
        .map(|(r, k)| {
            let key = (
                rs.person_name(k.person).to_string(),
                rs.firm_name(k.firm).to_string(),
                rs.record(k.spell).start_date.to_string(),
            );
            (key, mx.row(r).iter().map(|v| v.to_bits()).collect())
        })
        .collect()
}

fn spells() -> impl Strategy<Value = Vec<(u8, u8, u32, Option<u32>)>> {
    prop::collection::vec((0u8..10, 0u8..4, 0u32..1100, prop::option::of(20u32..700)), 1..30)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn firm_quantiles_are_ordered(spells in spells(), month in 6i32..36) {
        let rs = from_offsets(d("2018-01-01"), &spells);
        let m = MonthIndex::from_ym(2018, 1).offset(month);
        for f in 0..rs.n_firms() as u32 {
            if let Ok(v) = churnet::features::firm_features_by_index(&rs, f, m) {
                prop_assert!(v[3] <= v[4] && v[4] <= v[5] && v[5] <= v[6], "{:?}", v);
            }
        }
    }

    #[test]
    fn features_ignore_events_after_the_snapshot(spells in spells(), month in 6i32..36) {
        let rs = from_offsets(d("2018-01-01"), &spells);
        let m = MonthIndex::from_ym(2018, 1).offset(month);
        let past = rs.truncated_at(m.snapshot_date());
        let catalog = FeatureCatalog::default_catalog();
        let cfg = FeatureConfig::default();
        let full = build_month_matrix(&build_temporal_grid(&rs, m, m).unwrap(), &rs, m, &catalog, &cfg).unwrap();
        let cut = build_month_matrix(&build_temporal_grid(&past, m, m).unwrap(), &past, m, &catalog, &cfg).unwrap();
        prop_assert_eq!(keyed_rows(&rs, &full), keyed_rows(&past, &cut));
    }
}

#[test]
fn row_shuffle_leaves_training_unchanged() {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    let (n, cols) = (400, 5);
    let x: Vec<f32> = (0..n * cols)
        .map(|_| if rng.random_bool(0.05) { f32::NAN } else { rng.random_range(0..20) as f32 })
        .collect();
    let y: Vec<bool> = (0..n).map(|r| x[r * cols] > 9.0 || rng.random_bool(0.1)).collect();
    let params = ModelParams {
        n_trees: 5,
        max_depth: 4,
        bootstrap: false,
        feature_subsample: Some(1.0),
        row_subsample: 1.0,
        ..ModelParams::random_forest()
    };
    let model = train(&x, cols, &y, &params, ModelKind::RandomForest).unwrap();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let xs: Vec<f32> = order.iter().flat_map(|&r| x[r * cols..(r + 1) * cols].iter().copied()).collect();
    let ys: Vec<bool> = order.iter().map(|&r| y[r]).collect();
    let shuffled = train(&xs, cols, &ys, &params, ModelKind::RandomForest).unwrap();

    assert_eq!(model.to_json().unwrap(), shuffled.to_json().unwrap());
    let a = predict_proba(&model, &x, cols).unwrap();
    let b = predict_proba(&shuffled, &xs, cols).unwrap();
    for (i, &r) in order.iter().enumerate() {
        assert_eq!(a[r], b[i]);
    }
}
