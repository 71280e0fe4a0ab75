//! Expanding-window walk-forward evaluation.
//!
//! For test month `m` the model sees snapshots up to `m - 1 - gap_months`, so
//! the newest training labels look at most at month `m - gap_months`. The last
//! `calibration_slice_months` training months are held out of fitting and used
//! for isotonic calibration and for choosing the F1 threshold.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::charts::{rolling_mean, LineChart, Series};
use crate::error::{Error, Result};
use crate::features::{FeatureCatalog, FeatureCategory, FeatureConfig, FeatureMatrix, FeatureStore};
use crate::learners::{
    average_precision, best_f1_threshold, brier_score, compute_metrics, fit_isotonic, predict_proba, roc_auc, train,
    undersample, MetricSet, ModelKind, ModelParams,
};
use crate::registry::{build_temporal_grid, MonthIndex, RecordSet, TemporalGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkForwardConfig {
    pub first_test_month: MonthIndex,
    pub last_test_month: MonthIndex,
    #[serde(default = "defaults::gap")]
    pub gap_months: usize,
    #[serde(default = "defaults::min_train")]
    pub min_train_months: usize,
    #[serde(default = "defaults::kind")]
    pub model_kind: ModelKind,
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default = "defaults::ratio")]
    pub undersample_ratio: f64,
    #[serde(default = "defaults::calibration")]
    pub calibration_slice_months: usize,
    #[serde(default)]
    pub seed: u64,
    /// Length of the importance_by_feature list.
    #[serde(default = "defaults::top")]
    pub top_features: usize,
}

mod defaults {
    use super::ModelKind;
    pub fn gap() -> usize {
        1
    }
    pub fn min_train() -> usize {
        12
    }
    pub fn kind() -> ModelKind {
        ModelKind::GradientBoosted
    }
    pub fn ratio() -> f64 {
        10.0
    }
    pub fn calibration() -> usize {
        6
    }
    pub fn top() -> usize {
        10
    }
}

impl WalkForwardConfig {
    pub fn new(first_test_month: MonthIndex, last_test_month: MonthIndex) -> Self {
        WalkForwardConfig {
            first_test_month,
            last_test_month,
            gap_months: defaults::gap(),
            min_train_months: defaults::min_train(),
            model_kind: defaults::kind(),
            model: ModelParams::defaults_for(defaults::kind()),
            undersample_ratio: defaults::ratio(),
            calibration_slice_months: defaults::calibration(),
            seed: 0,
            top_features: defaults::top(),
        }
    }

    /// Checks against a data range `[start, end]`.
    pub fn validate(&self, start: MonthIndex, end: MonthIndex) -> Result<()> {
        if self.gap_months < 1 {
            return Err(Error::arg("gap_months must be >= 1"));
        }
        if self.first_test_month > self.last_test_month {
            return Err(Error::arg("first_test_month is after last_test_month"));
        }
        if self.last_test_month > end {
            return Err(Error::arg(format!("last_test_month {} is beyond the data end {end}", self.last_test_month)));
        }
        let earliest = self.first_test_month.offset(-((self.min_train_months + self.gap_months) as i32));
        if earliest < start {
            return Err(Error::arg(format!(
                "first_test_month {} leaves fewer than {} training months after a {}-month gap from {start}",
                self.first_test_month, self.min_train_months, self.gap_months
            )));
        }
        if self.min_train_months <= self.calibration_slice_months || self.calibration_slice_months == 0 {
            return Err(Error::arg("need 0 < calibration_slice_months < min_train_months"));
        }
        if !(self.undersample_ratio > 0.0) {
            return Err(Error::arg("undersample_ratio must be positive"));
        }
        self.model.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawScoreMetrics {
    pub ap: Option<f64>,
    pub auc: Option<f64>,
    pub brier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthResult {
    pub month: MonthIndex,
    pub n_rows: usize,
    pub n_pos: usize,
    /// Calibrated-score metrics; absent for skipped months.
    pub metrics: Option<MetricSet>,
    pub raw: Option<RawScoreMetrics>,
    pub n_train_rows: usize,
    pub n_fit_rows: usize,
    pub training_digest: Option<String>,
    pub skipped: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub importances: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

fn mean_sd(v: &[f64]) -> Option<MeanSd> {
    if v.is_empty() {
        return None;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    Some(MeanSd { mean, sd })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_evaluated: usize,
    pub n_skipped: usize,
    pub ap: Option<MeanSd>,
    pub auc: Option<MeanSd>,
    pub f1: Option<MeanSd>,
    pub brier: Option<MeanSd>,
    pub raw_ap: Option<MeanSd>,
    pub raw_auc: Option<MeanSd>,
    pub raw_brier: Option<MeanSd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub variant: String,
    pub config: WalkForwardConfig,
    pub features: Vec<String>,
    pub catalog_hash: String,
    pub per_month: Vec<MonthResult>,
    pub summary: Summary,
    pub importance_by_category: BTreeMap<FeatureCategory, f64>,
    pub importance_by_feature: Vec<(String, f64)>,
}

fn mix(seed: u64, m: MonthIndex, salt: u64) -> u64 {
    let x = seed ^ (m.0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    x ^ (x >> 29)
}

/// Stacked rows of several months with the selected columns.
struct Rows {
    values: Vec<f32>,
    labels: Vec<bool>,
}

fn column_map(store: &FeatureStore, catalog: &FeatureCatalog) -> Result<Vec<usize>> {
    catalog
        .names()
        .iter()
        .map(|n| {
            store
                .catalog()
                .position(n)
                .ok_or_else(|| Error::arg(format!("variant column `{n}` is not in the feature store")))
        })
        .collect()
}

fn gather(store: &FeatureStore, cols: &[usize], months: impl Iterator<Item = MonthIndex>) -> Rows {
    let mut rows = Rows { values: Vec::new(), labels: Vec::new() };
    for m in months {
        if let Some(mx) = store.month(m) {
            for r in 0..mx.n_rows() {
                let row = mx.row(r);
                rows.values.extend(cols.iter().map(|&c| row[c]));
            }
            rows.labels.extend_from_slice(&mx.labels);
        }
    }
    rows
}

/// Populated store months whose snapshots may train a model for test month `m`.
pub fn training_months(store: &FeatureStore, m: MonthIndex, gap: usize) -> Vec<MonthIndex> {
    let last = m.offset(-1 - gap as i32);
    (store.start().0..=last.0).map(MonthIndex).filter(|&t| store.month(t).is_some()).collect()
}

/// SHA-256 over the training rows (fitting plus calibration months, before
/// undersampling) used for test month `m`: person, firm, month, the selected
/// feature bits and the label of every row.
pub fn training_digest(
    store: &FeatureStore,
    catalog: &FeatureCatalog,
    rs: &RecordSet,
    m: MonthIndex,
    gap_months: usize,
) -> Result<String> {
    let cols = column_map(store, catalog)?;
    let mut h = Sha256::new();
    for t in training_months(store, m, gap_months) {
        let mx = store.month(t).expect("listed month");
        for (r, key) in mx.rows.iter().enumerate() {
            h.update(rs.person_name(key.person).as_bytes());
            h.update([0]);
            h.update(rs.firm_name(key.firm).as_bytes());
            h.update([0]);
            h.update(t.0.to_le_bytes());
            let row = mx.row(r);
            for &c in &cols {
                h.update(row[c].to_bits().to_le_bytes());
            }
            h.update([u8::from(mx.labels[r])]);
        }
    }
    Ok(hex::encode(h.finalize()))
}

/// Training digest computed from scratch on `rs`: features are built only for
/// the training months of test month `m`, starting at `start`.
pub fn training_digest_from_records(
    rs: &RecordSet,
    start: MonthIndex,
    catalog: &FeatureCatalog,
    feature_cfg: &FeatureConfig,
    m: MonthIndex,
    gap_months: usize,
) -> Result<String> {
    let last = m.offset(-1 - gap_months as i32);
    let grid = build_temporal_grid(rs, start, last)?;
    let store = FeatureStore::build(&grid, rs, catalog, feature_cfg)?;
    training_digest(&store, catalog, rs, m, gap_months)
}

fn skipped(month: MonthIndex, n_rows: usize, n_pos: usize, reason: impl Into<String>) -> MonthResult {
    MonthResult {
        month,
        n_rows,
        n_pos,
        metrics: None,
        raw: None,
        n_train_rows: 0,
        n_fit_rows: 0,
        training_digest: None,
        skipped: Some(reason.into()),
        importances: Vec::new(),
    }
}

/// Test-month scores behind a [`MonthResult`].
#[derive(Debug, Clone, PartialEq)]
pub struct MonthScores {
    pub labels: Vec<bool>,
    pub raw: Vec<f64>,
    pub calibrated: Vec<f64>,
    pub threshold: f64,
}

/// Train, calibrate and score a single test month of a walk-forward run.
/// Scores are `None` when the month is skipped.
pub fn score_month(
    store: &FeatureStore,
    rs: &RecordSet,
    catalog: &FeatureCatalog,
    cfg: &WalkForwardConfig,
    m: MonthIndex,
) -> Result<(MonthResult, Option<MonthScores>)> {
    cfg.validate(store.start(), store.end())?;
    let cols = column_map(store, catalog)?;
    evaluate_month(store, catalog, &cols, rs, cfg, m)
}

fn evaluate_month(
    store: &FeatureStore,
    catalog: &FeatureCatalog,
    cols: &[usize],
    rs: &RecordSet,
    cfg: &WalkForwardConfig,
    m: MonthIndex,
) -> Result<(MonthResult, Option<MonthScores>)> {
    let Some(test) = store.month(m) else {
        return Err(Error::arg(format!("feature store has no month {m}")));
    };
    let n_rows = test.n_rows();
    let n_pos = test.labels.iter().filter(|&&l| l).count();

    let months = training_months(store, m, cfg.gap_months);
    let populated = months.iter().filter(|&&t| store.month(t).is_some_and(|mx| mx.n_rows() > 0)).count();
    if populated < cfg.min_train_months {
        return Ok((skipped(m, n_rows, n_pos, "insufficient training months"), None));
    }
    if n_rows == 0 {
        return Ok((skipped(m, n_rows, n_pos, "no active rows in test month"), None));
    }
    if n_pos == 0 || n_pos == n_rows {
        return Ok((skipped(m, n_rows, n_pos, "test month has a single class"), None));
    }

    let split = months.len() - cfg.calibration_slice_months;
    let fit_months: Vec<&FeatureMatrix> = months[..split].iter().filter_map(|&t| store.month(t)).collect();
    let fit_labels: Vec<bool> = fit_months.iter().flat_map(|mx| mx.labels.iter().copied()).collect();
    let cal = gather(store, cols, months[split..].iter().copied());
    let n_train_rows = fit_labels.len() + cal.labels.len();
    let digest = training_digest(store, catalog, rs, m, cfg.gap_months)?;
    let mut result = skipped(m, n_rows, n_pos, "");
    result.n_train_rows = n_train_rows;
    result.training_digest = Some(digest);

    let keep = match undersample(&fit_labels, cfg.undersample_ratio, mix(cfg.seed, m, 1)) {
        Ok(k) => k,
        Err(Error::TrainingSkipped(why)) => {
            result.skipped = Some(why);
            return Ok((result, None));
        }
        Err(e) => return Err(e),
    };
    let width = cols.len();
    let mut x = Vec::with_capacity(keep.len() * width);
    let mut y = Vec::with_capacity(keep.len());
    // keep is ascending, so one pass over the stacked months suffices
    let mut offset = 0;
    let mut next = keep.iter().peekable();
    for mx in &fit_months {
        while let Some(&&i) = next.peek() {
            if i >= offset + mx.n_rows() {
                break;
            }
            let row = mx.row(i - offset);
            x.extend(cols.iter().map(|&c| row[c]));
            y.push(mx.labels[i - offset]);
            next.next();
        }
        offset += mx.n_rows();
    }
    result.n_fit_rows = y.len();

    let params = ModelParams { seed: mix(cfg.seed, m, 2), ..cfg.model.clone() };
    let mut model = match train(&x, width, &y, &params, cfg.model_kind) {
        Ok(model) => model,
        Err(Error::TrainingSkipped(why)) => {
            result.skipped = Some(why);
            return Ok((result, None));
        }
        Err(e) => return Err(e),
    };
    model.catalog_hash = Some(catalog.manifest_hash());

    let cal_raw = predict_proba(&model, &cal.values, width)?;
    let cal_pos = cal.labels.iter().filter(|&&l| l).count();
    if cal_pos == 0 || cal_pos == cal.labels.len() {
        result.skipped = Some("calibration slice has a single class".into());
        return Ok((result, None));
    }
    let calibrator = fit_isotonic(&cal_raw, &cal.labels)?;
    let cal_prob = calibrator.apply(&cal_raw);
    let threshold = best_f1_threshold(&cal_prob, &cal.labels).expect("calibration slice has positives");

    let test_x: Vec<f32> = (0..n_rows).flat_map(|r| cols.iter().map(move |&c| test.row(r)[c])).collect();
    let raw = predict_proba(&model, &test_x, width)?;
    let prob = calibrator.apply(&raw);
    result.metrics = Some(compute_metrics(&prob, &test.labels, threshold));
    result.raw = Some(RawScoreMetrics {
        ap: average_precision(&raw, &test.labels),
        auc: roc_auc(&raw, &test.labels),
        brier: brier_score(&raw, &test.labels),
    });
    result.importances = model.feature_importances;
    result.skipped = None;
    let scores = MonthScores { labels: test.labels.clone(), raw, calibrated: prob, threshold };
    Ok((result, Some(scores)))
}

/// Mean importance vector over models, summed within catalog categories and
/// normalized to one.
pub fn importance_by_category(
    importances: &[Vec<f64>],
    catalog: &FeatureCatalog,
) -> Result<BTreeMap<FeatureCategory, f64>> {
    if importances.is_empty() {
        return Err(Error::arg("importance_by_category needs at least one model"));
    }
    if let Some(v) = importances.iter().find(|v| v.len() != catalog.len()) {
        return Err(Error::arg(format!("model has {} importances, catalog has {} columns", v.len(), catalog.len())));
    }
    let mean = mean_importances(importances);
    let mut shares: BTreeMap<FeatureCategory, f64> = BTreeMap::new();
    for (e, v) in catalog.entries().iter().zip(&mean) {
        *shares.entry(e.category).or_default() += v;
    }
    let total: f64 = shares.values().sum();
    if total > 0.0 {
        shares.values_mut().for_each(|v| *v /= total);
    }
    Ok(shares)
}

fn mean_importances(importances: &[Vec<f64>]) -> Vec<f64> {
    let mut mean = vec![0.0; importances[0].len()];
    for v in importances {
        mean.iter_mut().zip(v).for_each(|(a, b)| *a += b);
    }
    mean.iter_mut().for_each(|a| *a /= importances.len() as f64);
    mean
}

/// Walk-forward over a prebuilt store, using the columns of `catalog` (which
/// must be a subset of the store's catalog).
pub fn run_on_store(
    store: &FeatureStore,
    rs: &RecordSet,
    catalog: &FeatureCatalog,
    variant: &str,
    cfg: &WalkForwardConfig,
) -> Result<EvaluationReport> {
    cfg.validate(store.start(), store.end())?;
    if catalog.is_empty() {
        return Err(Error::arg(format!("variant `{variant}` has no features")));
    }
    let cols = column_map(store, catalog)?;
    let months: Vec<MonthIndex> = (cfg.first_test_month.0..=cfg.last_test_month.0).map(MonthIndex).collect();
    let per_month: Vec<MonthResult> =
        months.par_iter().map(|&m| Ok(evaluate_month(store, catalog, &cols, rs, cfg, m)?.0)).collect::<Result<_>>()?;

    let evaluated: Vec<&MonthResult> = per_month.iter().filter(|r| r.skipped.is_none()).collect();
    let pick = |f: &dyn Fn(&MonthResult) -> Option<f64>| -> Option<MeanSd> {
        mean_sd(&evaluated.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
    };
    let summary = Summary {
        n_evaluated: evaluated.len(),
        n_skipped: per_month.len() - evaluated.len(),
        ap: pick(&|r| r.metrics.as_ref()?.ap),
        auc: pick(&|r| r.metrics.as_ref()?.auc),
        f1: pick(&|r| Some(r.metrics.as_ref()?.f1)),
        brier: pick(&|r| Some(r.metrics.as_ref()?.brier)),
        raw_ap: pick(&|r| r.raw?.ap),
        raw_auc: pick(&|r| r.raw?.auc),
        raw_brier: pick(&|r| Some(r.raw?.brier)),
    };

    let importances: Vec<Vec<f64>> = evaluated.iter().map(|r| r.importances.clone()).collect();
    let (by_category, by_feature) = if importances.is_empty() {
        (BTreeMap::new(), Vec::new())
    } else {
        let mean = mean_importances(&importances);
        let mut ranked: Vec<(String, f64)> =
            catalog.names().iter().zip(&mean).map(|(n, &v)| (n.to_string(), v)).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(cfg.top_features);
        (importance_by_category(&importances, catalog)?, ranked)
    };

    Ok(EvaluationReport {
        variant: variant.to_string(),
        config: cfg.clone(),
        features: catalog.names().iter().map(|s| s.to_string()).collect(),
        catalog_hash: catalog.manifest_hash(),
        per_month,
        summary,
        importance_by_category: by_category,
        importance_by_feature: by_feature,
    })
}

/// Build features for every month the run needs and evaluate.
pub fn run_walkforward(
    grid: &TemporalGrid,
    rs: &RecordSet,
    catalog: &FeatureCatalog,
    feature_cfg: &FeatureConfig,
    cfg: &WalkForwardConfig,
) -> Result<EvaluationReport> {
    cfg.validate(grid.start(), grid.end())?;
    let store = FeatureStore::build(grid, rs, catalog, feature_cfg)?;
    run_on_store(&store, rs, catalog, "full", cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantRow {
    pub variant: String,
    pub n_evaluated: usize,
    pub ap: Option<f64>,
    pub auc: Option<f64>,
    pub f1: Option<f64>,
    pub brier: Option<f64>,
    /// 100 * (variant - baseline) / baseline per metric.
    pub delta_pct: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantComparison {
    pub baseline: String,
    pub rows: Vec<VariantRow>,
    pub reports: Vec<EvaluationReport>,
}

impl VariantComparison {
    pub fn row(&self, variant: &str) -> Option<&VariantRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }
}

pub fn relative_delta(a: f64, b: f64) -> Option<f64> {
    (b != 0.0).then(|| (a - b) / b)
}

/// Run every variant with the same months and seeds and compare each with
/// `baseline`.
pub fn compare_variants(
    store: &FeatureStore,
    rs: &RecordSet,
    cfg: &WalkForwardConfig,
    variants: &[(String, FeatureCatalog)],
    baseline: &str,
) -> Result<VariantComparison> {
    if !variants.iter().any(|(n, _)| n == baseline) {
        return Err(Error::arg(format!("baseline variant `{baseline}` is not among the variants")));
    }
    let reports: Vec<EvaluationReport> =
        variants.iter().map(|(name, cat)| run_on_store(store, rs, cat, name, cfg)).collect::<Result<_>>()?;
    let means = |r: &EvaluationReport| -> [Option<f64>; 4] {
        let s = &r.summary;
        [s.ap, s.auc, s.f1, s.brier].map(|v| v.map(|x| x.mean))
    };
    let base = means(reports.iter().find(|r| r.variant == baseline).expect("checked above"));
    let rows = reports
        .iter()
        .map(|r| {
            let m = means(r);
            let delta_pct = ["ap", "auc", "f1", "brier"]
                .iter()
                .zip(m.iter().zip(&base))
                .map(|(k, (a, b))| {
                    let d = match (a, b) {
                        (Some(a), Some(b)) => relative_delta(*a, *b).map(|d| 100.0 * d),
                        _ => None,
                    };
                    (k.to_string(), d)
                })
                .collect();
            VariantRow {
                variant: r.variant.clone(),
                n_evaluated: r.summary.n_evaluated,
                ap: m[0],
                auc: m[1],
                f1: m[2],
                brier: m[3],
                delta_pct,
            }
        })
        .collect();
    Ok(VariantComparison { baseline: baseline.to_string(), rows, reports })
}

impl EvaluationReport {
    /// `month,ap,auc,f1,brier,n_rows,n_pos,skipped,reason`
    pub fn write_metrics_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["month", "ap", "auc", "f1", "brier", "n_rows", "n_pos", "skipped", "reason"])?;
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        for r in &self.per_month {
            let m = r.metrics.as_ref();
            w.write_record([
                r.month.to_string(),
                opt(m.and_then(|m| m.ap)),
                opt(m.and_then(|m| m.auc)),
                opt(m.map(|m| m.f1)),
                opt(m.map(|m| m.brier)),
                r.n_rows.to_string(),
                r.n_pos.to_string(),
                u8::from(r.skipped.is_some()).to_string(),
                r.skipped.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rolling 12-month means of AP and AUC over the test months.
    pub fn metrics_chart(&self) -> LineChart {
        let ap: Vec<Option<f64>> = self.per_month.iter().map(|r| r.metrics.as_ref().and_then(|m| m.ap)).collect();
        let auc: Vec<Option<f64>> = self.per_month.iter().map(|r| r.metrics.as_ref().and_then(|m| m.auc)).collect();
        LineChart {
            title: format!("Walk-forward metrics ({}, rolling 12-month mean)", self.variant),
            y_label: "metric".into(),
            x_labels: self.per_month.iter().map(|r| r.month.to_string()).collect(),
            series: vec![
                Series { name: "AP".into(), values: rolling_mean(&ap, 12) },
                Series { name: "AUC".into(), values: rolling_mean(&auc, 12) },
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_sd_sample() {
        let s = mean_sd(&[1.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.sd - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_sd(&[5.0]).unwrap().sd, 0.0);
        assert!(mean_sd(&[]).is_none());
    }

    #[test]
    fn category_shares_by_hand() {
        let catalog = FeatureCatalog::default_catalog();
        let n = catalog.len();
        let pos = |name: &str| catalog.position(name).unwrap();
        let mut a = vec![0.0; n];
        a[pos("tenure_months")] = 0.5;
        a[pos("headcount")] = 0.5;
        let mut b = vec![0.0; n];
        b[pos("gender_f")] = 0.25;
        b[pos("emp_k1_tenure_months")] = 0.75;
        let shares = importance_by_category(&[a, b], &catalog).unwrap();
        assert_eq!(shares[&FeatureCategory::Individual], 0.25);
        assert_eq!(shares[&FeatureCategory::Firm], 0.25);
        assert_eq!(shares[&FeatureCategory::Demographic], 0.125);
        assert_eq!(shares[&FeatureCategory::NetworkPropagated], 0.375);
        assert!(importance_by_category(&[vec![1.0]], &catalog).is_err());
        assert!(importance_by_category(&[], &catalog).is_err());
    }

    #[test]
    fn config_checks() {
        let start = MonthIndex::from_ym(2010, 1);
        let end = MonthIndex::from_ym(2014, 12);
        let ok = WalkForwardConfig::new(MonthIndex::from_ym(2012, 1), end);
        assert!(ok.validate(start, end).is_ok());
        assert!(WalkForwardConfig { gap_months: 0, ..ok.clone() }.validate(start, end).is_err());
        assert!(WalkForwardConfig { first_test_month: MonthIndex::from_ym(2010, 6), ..ok.clone() }
            .validate(start, end)
            .is_err());
        assert!(WalkForwardConfig { calibration_slice_months: 12, ..ok.clone() }.validate(start, end).is_err());
        assert!(WalkForwardConfig { last_test_month: MonthIndex::from_ym(2015, 1), ..ok }.validate(start, end).is_err());
    }
}
