//! Weighted-average feature propagation over a [`WeightedGraph`].
//!
//! One iteration replaces every node's feature by the edge-weighted mean of its
//! neighbors' previous values (the node itself is not included). Iterations are
//! synchronous: step `t` reads only step `t - 1`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphs::WeightedGraph;

/// Missing-value marker for feature cells.
pub const MISSING: f64 = f64::NAN;

pub fn is_missing(v: f64) -> bool {
    v.is_nan()
}

/// Per-node feature vectors, keyed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    feature_names: Vec<String>,
    ids: Vec<u32>,
    values: Vec<f64>,
}

impl FeatureTable {
    pub fn new(feature_names: Vec<String>) -> Self {
        FeatureTable { feature_names, ids: Vec::new(), values: Vec::new() }
    }

    /// Build from (id, vector) rows; ids must be unique and every vector must
    /// have one value per feature.
    pub fn from_rows(feature_names: Vec<String>, rows: impl IntoIterator<Item = (u32, Vec<f64>)>) -> Result<Self> {
        let width = feature_names.len();
        let mut rows: Vec<(u32, Vec<f64>)> = rows.into_iter().collect();
        rows.sort_by_key(|r| r.0);
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::arg(format!("duplicate node {} in feature table", w[0].0)));
        }
        let mut values = Vec::with_capacity(rows.len() * width);
        let mut ids = Vec::with_capacity(rows.len());
        for (id, v) in rows {
            if v.len() != width {
                return Err(Error::arg(format!("node {id} has {} values, expected {width}", v.len())));
            }
            ids.push(id);
            values.extend(v);
        }
        Ok(FeatureTable { feature_names, ids, values })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn get(&self, id: u32) -> Option<&[f64]> {
        let r = self.ids.binary_search(&id).ok()?;
        Some(self.row(r))
    }

    fn row(&self, r: usize) -> &[f64] {
        let w = self.width();
        &self.values[r * w..(r + 1) * w]
    }

    pub fn column(&self, name: &str) -> Option<impl Iterator<Item = (u32, f64)> + '_> {
        let c = self.feature_names.iter().position(|n| n == name)?;
        Some(self.ids.iter().enumerate().map(move |(r, &id)| (id, self.values[r * self.width() + c])))
    }
}

/// Run `k` synchronous propagation steps. Missing neighbor values are left out
/// of both numerator and denominator; a node whose neighbors are all missing
/// (or that has no neighbors) keeps its previous value.
pub fn propagate(g: &WeightedGraph, f: &FeatureTable, k: usize) -> Result<FeatureTable> {
    let row_of: Vec<usize> = g
        .nodes()
        .iter()
        .map(|&id| {
            f.ids
                .binary_search(&id)
                .map_err(|_| Error::arg(format!("feature table has no row for graph node {id}")))
        })
        .collect::<Result<_>>()?;

    let width = f.width();
    let mut current = f.clone();
    for _ in 0..k {
        let prev = &current;
        let updated: Vec<Vec<f64>> = (0..g.n_nodes())
            .into_par_iter()
            .map(|i| {
                let mut num = vec![0.0; width];
                let mut den = vec![0.0; width];
                for (j, w) in g.neighbors(i) {
                    for (c, &v) in prev.row(row_of[j]).iter().enumerate() {
                        if !is_missing(v) {
                            num[c] += w * v;
                            den[c] += w;
                        }
                    }
                }
                let own = prev.row(row_of[i]);
                (0..width).map(|c| if den[c] > 0.0 { num[c] / den[c] } else { own[c] }).collect()
            })
            .collect();
        let mut next = current.clone();
        for (i, vals) in updated.into_iter().enumerate() {
            let r = row_of[i];
            next.values[r * width..(r + 1) * width].copy_from_slice(&vals);
        }
        current = next;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::GraphKind;
    use crate::registry::MonthIndex;

    fn graph(n: u32, edges: &[(u32, u32, f64)]) -> WeightedGraph {
        WeightedGraph::from_edges(GraphKind::EmployeeCoemployment, MonthIndex(0), (0..n).collect(), edges.to_vec())
            .unwrap()
    }

    fn table(vals: &[f64]) -> FeatureTable {
        FeatureTable::from_rows(vec!["x".into()], vals.iter().enumerate().map(|(i, &v)| (i as u32, vec![v]))).unwrap()
    }

    fn col(t: &FeatureTable) -> Vec<f64> {
        t.column("x").unwrap().map(|(_, v)| v).collect()
    }

    #[test]
    fn path_graph_one_step() {
        let g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let out = propagate(&g, &table(&[0.0, 1.0, 2.0]), 1).unwrap();
        assert_eq!(col(&out), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn star_center_weighted_mean() {
        let g = graph(3, &[(0, 1, 1.0), (0, 2, 3.0)]);
        let out = propagate(&g, &table(&[9.0, 0.0, 4.0]), 1).unwrap();
        assert_eq!(out.get(0).unwrap()[0], 3.0);
    }

    #[test]
    fn zero_steps_is_identity() {
        let g = graph(3, &[(0, 1, 0.5)]);
        let t = table(&[1.5, -2.0, MISSING]);
        let out = propagate(&g, &t, 0).unwrap();
        assert_eq!(out.ids(), t.ids());
        assert_eq!(col(&out)[..2], col(&t)[..2]);
        assert!(is_missing(col(&out)[2]));
    }

    #[test]
    fn constant_is_fixed() {
        let g = graph(4, &[(0, 1, 0.3), (1, 2, 2.0), (2, 3, 1.0), (0, 3, 0.1)]);
        let out = propagate(&g, &table(&[5.0; 4]), 3).unwrap();
        assert!(col(&out).iter().all(|&v| (v - 5.0).abs() < 1e-12));
    }

    #[test]
    fn missing_neighbors_are_skipped() {
        let g = graph(3, &[(0, 1, 1.0), (0, 2, 1.0)]);
        let out = propagate(&g, &table(&[7.0, MISSING, 4.0]), 1).unwrap();
        assert_eq!(out.get(0).unwrap()[0], 4.0);
        // node 1 sees only node 0
        assert_eq!(out.get(1).unwrap()[0], 7.0);

        let g = graph(2, &[(0, 1, 1.0)]);
        let out = propagate(&g, &table(&[7.0, MISSING]), 1).unwrap();
        assert_eq!(out.get(0).unwrap()[0], 7.0);
    }

    #[test]
    fn uncovered_node_is_an_error() {
        let g = graph(3, &[(0, 1, 1.0)]);
        let t = FeatureTable::from_rows(vec!["x".into()], vec![(0, vec![1.0]), (1, vec![2.0])]).unwrap();
        let err = propagate(&g, &t, 1).unwrap_err();
        assert!(err.to_string().contains("node 2"));
    }
}
