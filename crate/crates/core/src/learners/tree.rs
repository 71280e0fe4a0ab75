//! Histogram-binned decision-tree ensembles.
//!
//! Both learners share one grower. A node holds per-row statistics `g`, `h`
//! and splits to maximize `G_L^2/(H_L+l2) + G_R^2/(H_R+l2) - G^2/(H+l2)`:
//! with `g = y`, `h = 1`, `l2 = 0` that is the Gini impurity decrease used by
//! the forest, and with logistic gradients/hessians it is the Newton gain used
//! by boosting. Missing cells (NaN) go to a per-split learned side.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MISSING_BIN: u8 = 255;
const MAX_THRESHOLDS: usize = 254;
const MIN_HESSIAN: f64 = 1e-6;
const CUT_SAMPLE: usize = 65_536;
/// Rows per partial histogram; fixed so sums do not depend on thread count.
const HIST_CHUNK: usize = 16_384;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    RandomForest,
    GradientBoosted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Shrinkage applied to boosted leaves; ignored by the forest.
    pub learning_rate: f64,
    pub min_leaf: usize,
    /// Fraction of features considered per split (forest) or per tree
    /// (boosting). `None` means `sqrt(d) / d`.
    pub feature_subsample: Option<f64>,
    /// Fraction of rows drawn per tree: with replacement when `bootstrap`,
    /// otherwise without.
    pub row_subsample: f64,
    pub bootstrap: bool,
    /// Leaf-weight L2 penalty for boosting; the forest always uses 0.
    pub l2: f64,
    pub seed: u64,
}

impl ModelParams {
    pub fn random_forest() -> Self {
        ModelParams {
            n_trees: 200,
            max_depth: 12,
            learning_rate: 1.0,
            min_leaf: 5,
            feature_subsample: None,
            row_subsample: 1.0,
            bootstrap: true,
            l2: 0.0,
            seed: 0,
        }
    }

    pub fn gradient_boosted() -> Self {
        ModelParams {
            n_trees: 300,
            max_depth: 6,
            learning_rate: 0.05,
            min_leaf: 20,
            feature_subsample: Some(1.0),
            row_subsample: 0.8,
            bootstrap: false,
            l2: 1.0,
            seed: 0,
        }
    }

    pub fn defaults_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::RandomForest => Self::random_forest(),
            ModelKind::GradientBoosted => Self::gradient_boosted(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let frac = |v: f64| v > 0.0 && v <= 1.0;
        if !self.feature_subsample.is_none_or(frac) || !frac(self.row_subsample) {
            return Err(Error::arg("subsample fractions must lie in (0, 1]"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::arg("learning_rate must lie in (0, 1]"));
        }
        if self.min_leaf == 0 || !(self.l2 >= 0.0) {
            return Err(Error::arg("min_leaf must be >= 1 and l2 >= 0"));
        }
        Ok(())
    }

    fn features_per_draw(&self, d: usize) -> usize {
        let k = match self.feature_subsample {
            Some(f) => (f * d as f64).ceil() as usize,
            None => (d as f64).sqrt().ceil() as usize,
        };
        k.clamp(1, d.max(1))
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::gradient_boosted()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    /// `x <= threshold` goes left; missing goes left iff `missing_left`.
    Split { feature: u32, threshold: f32, missing_left: bool, left: u32, right: u32 },
    Leaf { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Tree { nodes: vec![Node::Leaf { value }] }
    }

    pub fn eval(&self, row: &[f32]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, missing_left, left, right } => {
                    let v = row[feature as usize];
                    let go_left = if v.is_nan() { missing_left } else { v <= threshold };
                    i = if go_left { left } else { right } as usize;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left as usize).max(walk(nodes, right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsembleModel {
    pub format_version: u32,
    pub kind: ModelKind,
    pub params: ModelParams,
    pub n_features: usize,
    /// Log-odds offset added before the logistic link (boosting only).
    pub base_score: f64,
    pub trees: Vec<Tree>,
    /// Normalized total split gain per feature; all zero when no tree splits.
    pub feature_importances: Vec<f64>,
    /// Mean training log-loss after each boosting round.
    #[serde(default)]
    pub train_loss: Vec<f64>,
    #[serde(default)]
    pub catalog_hash: Option<String>,
}

impl TreeEnsembleModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TreeEnsembleModel = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::arg(format!("unsupported model format version {}", m.format_version)));
        }
        let bad_feature = m.trees.iter().flat_map(|t| &t.nodes).any(|n| match n {
            Node::Split { feature, .. } => *feature as usize >= m.n_features,
            Node::Leaf { .. } => false,
        });
        if bad_feature || m.feature_importances.len() != m.n_features {
            return Err(Error::arg("model references features beyond its width"));
        }
        Ok(m)
    }

    fn score_row(&self, row: &[f32]) -> f64 {
        match self.kind {
            ModelKind::RandomForest => {
                if self.trees.is_empty() {
                    return 0.5;
                }
                self.trees.iter().map(|t| t.eval(row)).sum::<f64>() / self.trees.len() as f64
            }
            ModelKind::GradientBoosted => sigmoid(self.base_score + self.trees.iter().map(|t| t.eval(row)).sum::<f64>()),
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn check_finite(x: &[f32]) -> Result<()> {
    match x.iter().position(|v| v.is_infinite()) {
        Some(i) => Err(Error::Data(format!("infinite feature value at cell {i}; use NaN for missing"))),
        None => Ok(()),
    }
}

/// Row-major `x` with `n_cols` columns.
pub fn predict_proba(model: &TreeEnsembleModel, x: &[f32], n_cols: usize) -> Result<Vec<f64>> {
    if n_cols != model.n_features || (n_cols > 0 && x.len() % n_cols != 0) {
        return Err(Error::arg(format!("matrix has {n_cols} columns, model expects {}", model.n_features)));
    }
    check_finite(x)?;
    if n_cols == 0 {
        return Ok(Vec::new());
    }
    Ok(x.par_chunks(n_cols).map(|row| model.score_row(row)).collect())
}

struct Binned {
    n_rows: usize,
    /// Column-major bin codes; `MISSING_BIN` marks NaN.
    cols: Vec<Vec<u8>>,
    /// The same codes row-major.
    by_row: Vec<u8>,
    thresholds: Vec<Vec<f32>>,
}

fn split_point(a: f32, b: f32) -> f32 {
    let m = ((f64::from(a) + f64::from(b)) / 2.0) as f32;
    if m >= a && m < b {
        m
    } else {
        a
    }
}

fn bin_matrix(x: &[f32], n_cols: usize) -> Binned {
    let n_rows = x.len() / n_cols;
    let per_col: Vec<(Vec<u8>, Vec<f32>)> = (0..n_cols)
        .into_par_iter()
        .map(|c| {
            // cut points come from an evenly strided sample of at most CUT_SAMPLE rows
            let step = n_rows.div_ceil(CUT_SAMPLE).max(1);
            let mut vals: Vec<f32> =
                (0..n_rows).step_by(step).map(|r| x[r * n_cols + c]).filter(|v| !v.is_nan()).collect();
            vals.sort_by(f32::total_cmp);
            let mut uniq = vals.clone();
            uniq.dedup();
            let cuts: Vec<f32> = if uniq.len() <= MAX_THRESHOLDS + 1 {
                uniq.windows(2).map(|w| split_point(w[0], w[1])).collect()
            } else {
                let mut cuts: Vec<f32> = (1..=MAX_THRESHOLDS)
                    .filter_map(|k| {
                        let v = vals[k * vals.len() / (MAX_THRESHOLDS + 1)];
                        let next = uniq.partition_point(|&u| u <= v);
                        uniq.get(next).map(|&b| split_point(v, b))
                    })
                    .collect();
                cuts.dedup();
                cuts
            };
            let codes = (0..n_rows)
                .map(|r| {
                    let v = x[r * n_cols + c];
                    if v.is_nan() {
                        MISSING_BIN
                    } else {
                        cuts.partition_point(|&t| t < v) as u8
                    }
                })
                .collect();
            (codes, cuts)
        })
        .collect();
    let (cols, thresholds): (Vec<Vec<u8>>, Vec<Vec<f32>>) = per_col.into_iter().unzip();
    let mut by_row = vec![0u8; n_rows * n_cols];
    by_row.par_chunks_mut(n_cols).enumerate().for_each(|(r, out)| {
        for (c, v) in out.iter_mut().enumerate() {
            *v = cols[c][r];
        }
    });
    Binned { n_rows, cols, by_row, thresholds }
}

#[derive(Debug, Clone, Copy, Default)]
struct Stat {
    g: f64,
    h: f64,
    n: f64,
}

impl Stat {
    fn add(&mut self, o: Stat) {
        self.g += o.g;
        self.h += o.h;
        self.n += o.n;
    }

    fn minus(self, o: Stat) -> Stat {
        Stat { g: self.g - o.g, h: self.h - o.h, n: self.n - o.n }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    bin: usize,
    missing_left: bool,
}

struct Grower<'a> {
    binned: &'a Binned,
    g: &'a [f64],
    h: &'a [f64],
    max_depth: usize,
    min_leaf: f64,
    l2: f64,
    forest: bool,
    learning_rate: f64,
    /// Features drawn per split (forest); `None` keeps `tree_features`.
    per_split: Option<usize>,
    tree_features: Vec<usize>,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    gains: Vec<f64>,
}

const BINS: usize = 256;

impl Grower<'_> {
    fn score(&self, s: Stat) -> f64 {
        s.g * s.g / (s.h + self.l2)
    }

    fn histogram(&self, rows: &[u32], features: &[usize]) -> Vec<Stat> {
        let d = self.binned.cols.len();
        if features.len() == d {
            let partials: Vec<Vec<Stat>> = rows
                .par_chunks(HIST_CHUNK)
                .map(|chunk| {
                    let mut hist = vec![Stat::default(); d * BINS];
                    for &r in chunk {
                        let (g, h) = (self.g[r as usize], self.h[r as usize]);
                        let codes = &self.binned.by_row[r as usize * d..(r as usize + 1) * d];
                        for (f, &b) in codes.iter().enumerate() {
                            let s = &mut hist[f * BINS + b as usize];
                            s.g += g;
                            s.h += h;
                            s.n += 1.0;
                        }
                    }
                    hist
                })
                .collect();
            let mut iter = partials.into_iter();
            let mut total = iter.next().unwrap_or_else(|| vec![Stat::default(); d * BINS]);
            for p in iter {
                total.iter_mut().zip(&p).for_each(|(a, b)| a.add(*b));
            }
            return total;
        }
        let parts: Vec<Vec<Stat>> = features
            .par_iter()
            .map(|&f| {
                let col = &self.binned.cols[f];
                let mut hist = vec![Stat::default(); BINS];
                for &r in rows {
                    let b = &mut hist[col[r as usize] as usize];
                    b.g += self.g[r as usize];
                    b.h += self.h[r as usize];
                    b.n += 1.0;
                }
                hist
            })
            .collect();
        parts.concat()
    }

    fn best_split(&self, hist: &[Stat], features: &[usize], total: Stat) -> Option<Candidate> {
        let parent = self.score(total);
        let per_feature: Vec<Option<Candidate>> = features
            .par_iter()
            .enumerate()
            .map(|(slot, &f)| {
                let h = &hist[slot * BINS..(slot + 1) * BINS];
                let n_bins = self.binned.thresholds[f].len() + 1;
                let miss = h[MISSING_BIN as usize];
                let mut best: Option<Candidate> = None;
                let mut left = Stat::default();
                for bin in 0..n_bins {
                    left.add(h[bin]);
                    let last = bin + 1 == n_bins;
                    if last && miss.n == 0.0 {
                        break;
                    }
                    let right = total.minus(miss).minus(left);
                    let options: &[(Stat, Stat, bool)] = if last {
                        &[(left, miss, false)]
                    } else {
                        let mut l = left;
                        l.add(miss);
                        let mut r = right;
                        r.add(miss);
                        &[(l, right, true), (left, r, false)]
                    };
                    for &(l, r, missing_left) in options {
                        if l.n < self.min_leaf || r.n < self.min_leaf {
                            continue;
                        }
                        if !self.forest && (l.h < MIN_HESSIAN || r.h < MIN_HESSIAN) {
                            continue;
                        }
                        let gain = self.score(l) + self.score(r) - parent;
                        if gain > 1e-12 && best.is_none_or(|b| gain > b.gain) {
                            best = Some(Candidate { gain, feature: f, bin, missing_left });
                        }
                    }
                }
                best
            })
            .collect();
        per_feature.into_iter().flatten().fold(None, |acc: Option<Candidate>, c| match acc {
            Some(a) if a.gain >= c.gain => Some(a),
            _ => Some(c),
        })
    }

    fn leaf_value(&self, total: Stat) -> f64 {
        if self.forest {
            total.g / total.n
        } else {
            -total.g / (total.h + self.l2) * self.learning_rate
        }
    }

    fn grow(&mut self, rows: Vec<u32>, depth: usize, hist: Option<Vec<Stat>>) -> u32 {
        let id = self.nodes.len() as u32;
        let mut total = Stat::default();
        for &r in &rows {
            total.add(Stat { g: self.g[r as usize], h: self.h[r as usize], n: 1.0 });
        }
        self.nodes.push(Node::Leaf { value: self.leaf_value(total) });
        let pure = self.forest && (total.g == 0.0 || total.g == total.n);
        if depth >= self.max_depth || total.n < 2.0 * self.min_leaf || pure {
            return id;
        }

        let features = match self.per_split {
            Some(k) => {
                let d = self.binned.cols.len();
                let mut f = index::sample(&mut self.rng, d, k).into_vec();
                f.sort_unstable();
                f
            }
            None => self.tree_features.clone(),
        };
        let hist = match hist {
            Some(h) if self.per_split.is_none() => h,
            _ => self.histogram(&rows, &features),
        };
        let Some(split) = self.best_split(&hist, &features, total) else {
            return id;
        };
        self.gains[split.feature] += split.gain;

        let col = &self.binned.cols[split.feature];
        let (left, right): (Vec<u32>, Vec<u32>) = rows.iter().partition(|&&r| {
            let b = col[r as usize];
            if b == MISSING_BIN {
                split.missing_left
            } else {
                b as usize <= split.bin
            }
        });
        drop(rows);

        let (left_hist, right_hist) = if self.per_split.is_none() && depth + 1 < self.max_depth {
            let small_is_left = left.len() <= right.len();
            let small = self.histogram(if small_is_left { &left } else { &right }, &features);
            let large: Vec<Stat> = hist.iter().zip(&small).map(|(p, s)| p.minus(*s)).collect();
            if small_is_left {
                (Some(small), Some(large))
            } else {
                (Some(large), Some(small))
            }
        } else {
            (None, None)
        };

        let thresholds = &self.binned.thresholds[split.feature];
        let threshold = thresholds.get(split.bin).copied().unwrap_or(f32::MAX);
        let l = self.grow(left, depth + 1, left_hist);
        let r = self.grow(right, depth + 1, right_hist);
        self.nodes[id as usize] =
            Node::Split { feature: split.feature as u32, threshold, missing_left: split.missing_left, left: l, right: r };
        id
    }
}

fn tree_rng(seed: u64, t: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn draw_rows(rng: &mut ChaCha8Rng, n: usize, params: &ModelParams) -> Vec<u32> {
    let k = ((params.row_subsample * n as f64).round() as usize).clamp(1, n);
    let mut rows: Vec<u32> = if params.bootstrap {
        (0..k).map(|_| rng.random_range(0..n) as u32).collect()
    } else if k == n {
        (0..n as u32).collect()
    } else {
        index::sample(rng, n, k).into_iter().map(|i| i as u32).collect()
    };
    rows.sort_unstable();
    rows
}

fn normalize(gains: Vec<f64>) -> Vec<f64> {
    let total: f64 = gains.iter().sum();
    if total > 0.0 {
        gains.iter().map(|g| g / total).collect()
    } else {
        gains
    }
}

fn log_loss(margin: &[f64], y: &[bool]) -> f64 {
    let sum: f64 = margin
        .iter()
        .zip(y)
        .map(|(&z, &l)| {
            // log(1 + e^-z) for positives, log(1 + e^z) for negatives
            let s = if l { -z } else { z };
            s.max(0.0) + (-s.abs()).exp().ln_1p()
        })
        .sum();
    sum / y.len() as f64
}

/// Fit an ensemble on row-major `x` (`n_cols` columns). NaN cells are
/// missing; infinities are rejected. A single-class target yields
/// [`Error::TrainingSkipped`].
pub fn train(x: &[f32], n_cols: usize, y: &[bool], params: &ModelParams, kind: ModelKind) -> Result<TreeEnsembleModel> {
    params.validate()?;
    if n_cols == 0 || x.len() != y.len() * n_cols {
        return Err(Error::arg(format!("matrix of {} cells does not hold {} rows x {n_cols}", x.len(), y.len())));
    }
    check_finite(x)?;
    let n_pos = y.iter().filter(|&&l| l).count();
    if y.len() < 2 || n_pos == 0 || n_pos == y.len() {
        return Err(Error::TrainingSkipped(format!("{} rows with {n_pos} positives", y.len())));
    }
    let binned = bin_matrix(x, n_cols);
    let n = binned.n_rows;
    let k = params.features_per_draw(n_cols);

    let mut model = TreeEnsembleModel {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        params: params.clone(),
        n_features: n_cols,
        base_score: 0.0,
        trees: Vec::with_capacity(params.n_trees),
        feature_importances: vec![0.0; n_cols],
        train_loss: Vec::new(),
        catalog_hash: None,
    };

    match kind {
        ModelKind::RandomForest => {
            let g: Vec<f64> = y.iter().map(|&l| f64::from(u8::from(l))).collect();
            let h = vec![1.0; n];
            let grown: Vec<(Tree, Vec<f64>)> = (0..params.n_trees)
                .into_par_iter()
                .map(|t| {
                    let mut rng = tree_rng(params.seed, t);
                    let rows = draw_rows(&mut rng, n, params);
                    let mut grower = Grower {
                        binned: &binned,
                        g: &g,
                        h: &h,
                        max_depth: params.max_depth,
                        min_leaf: params.min_leaf as f64,
                        l2: 0.0,
                        forest: true,
                        learning_rate: 1.0,
                        per_split: Some(k),
                        tree_features: Vec::new(),
                        rng,
                        nodes: Vec::new(),
                        gains: vec![0.0; n_cols],
                    };
                    grower.grow(rows, 0, None);
                    (Tree { nodes: grower.nodes }, grower.gains)
                })
                .collect();
            let mut gains = vec![0.0; n_cols];
            for (tree, tg) in grown {
                gains.iter_mut().zip(&tg).for_each(|(a, b)| *a += b);
                model.trees.push(tree);
            }
            model.feature_importances = normalize(gains);
        }
        ModelKind::GradientBoosted => {
            let prevalence = n_pos as f64 / n as f64;
            model.base_score = (prevalence / (1.0 - prevalence)).ln();
            let mut margin = vec![model.base_score; n];
            let mut gains = vec![0.0; n_cols];
            let mut g = vec![0.0; n];
            let mut h = vec![0.0; n];
            for t in 0..params.n_trees {
                for i in 0..n {
                    let p = sigmoid(margin[i]);
                    g[i] = p - f64::from(u8::from(y[i]));
                    h[i] = (p * (1.0 - p)).max(1e-16);
                }
                let mut rng = tree_rng(params.seed, t);
                let rows = draw_rows(&mut rng, n, params);
                let mut tree_features = index::sample(&mut rng, n_cols, k).into_vec();
                tree_features.sort_unstable();
                let mut grower = Grower {
                    binned: &binned,
                    g: &g,
                    h: &h,
                    max_depth: params.max_depth,
                    min_leaf: params.min_leaf as f64,
                    l2: params.l2,
                    forest: false,
                    learning_rate: params.learning_rate,
                    per_split: None,
                    tree_features,
                    rng,
                    nodes: Vec::new(),
                    gains: vec![0.0; n_cols],
                };
                grower.grow(rows, 0, None);
                let tree = Tree { nodes: grower.nodes };
                gains.iter_mut().zip(&grower.gains).for_each(|(a, b)| *a += b);
                margin
                    .par_iter_mut()
                    .zip(x.par_chunks(n_cols))
                    .for_each(|(m, row)| *m += tree.eval(row));
                model.train_loss.push(log_loss(&margin, y));
                model.trees.push(tree);
            }
            model.feature_importances = normalize(gains);
        }
    }
    Ok(model)
}
