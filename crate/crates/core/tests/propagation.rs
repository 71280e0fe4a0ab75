use churnet::graphs::{GraphKind, WeightedGraph};
use churnet::propagation::{is_missing, propagate, FeatureTable, MISSING};
use churnet::registry::MonthIndex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random graph on ids 0..n as (n, edge list).
fn graph_strategy() -> impl Strategy<Value = (u32, Vec<(u32, u32, f64)>)> {
    (1u32..=12).prop_flat_map(|n| {
        let pairs: Vec<(u32, u32)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let m = pairs.len();
        (Just(n), prop::collection::vec((any::<bool>(), 0.01f64..5.0), m)).prop_map(move |(n, picks)| {
            let edges = pairs.iter().zip(picks).filter(|(_, (keep, _))| *keep).map(|(&(a, b), (_, w))| (a, b, w)).collect();
            (n, edges)
        })
    })
}

fn build(n: u32, edges: &[(u32, u32, f64)]) -> WeightedGraph {
    WeightedGraph::from_edges(GraphKind::EmployeeCoemployment, MonthIndex(0), (0..n).collect(), edges.iter().copied())
        .unwrap()
}

fn table(cols: &[Vec<f64>]) -> FeatureTable {
    let n = cols[0].len();
    let names = (0..cols.len()).map(|c| format!("f{c}")).collect();
    FeatureTable::from_rows(names, (0..n).map(|i| (i as u32, cols.iter().map(|c| c[i]).collect()))).unwrap()
}

fn column(t: &FeatureTable, c: usize) -> Vec<f64> {
    t.ids().iter().map(|&id| t.get(id).unwrap()[c]).collect()
}

/// Repeated multiplication by the row-normalized dense adjacency; isolated
/// rows are identity rows.
fn dense_oracle(n: usize, edges: &[(u32, u32, f64)], f: &[f64], k: usize) -> Vec<f64> {
    let mut a = vec![vec![0.0; n]; n];
    for &(i, j, w) in edges {
        a[i as usize][j as usize] = w;
        a[j as usize][i as usize] = w;
    }
    for (i, row) in a.iter_mut().enumerate() {
        let s: f64 = row.iter().sum();
        if s == 0.0 {
            row[i] = 1.0;
        } else {
            row.iter_mut().for_each(|v| *v /= s);
        }
    }
    let mut x = f.to_vec();
    for _ in 0..k {
        x = (0..n).map(|i| (0..n).map(|j| a[i][j] * x[j]).sum()).collect();
    }
    x
}

#[test]
fn matches_dense_oracle_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let n = rng.random_range(1..=12u32);
        let p = rng.random_range(0.0..1.0);
        let edges: Vec<_> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect::<Vec<_>>()
            .into_iter()
            .filter_map(|(a, b)| rng.random_bool(p).then(|| (a, b, rng.random_range(0.01..5.0))))
            .collect();
        let g = build(n, &edges);
        let cols: Vec<Vec<f64>> = (0..2).map(|_| (0..n).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();
        let f = table(&cols);
        for k in 0..=3 {
            let out = propagate(&g, &f, k).unwrap();
            for (c, col) in cols.iter().enumerate() {
                let expect = dense_oracle(n as usize, &edges, col, k);
                for (got, want) in column(&out, c).iter().zip(&expect) {
                    assert!((got - want).abs() < 1e-9, "k={k}: {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn hand_examples() {
    let path = build(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
    let out = propagate(&path, &table(&[vec![0.0, 1.0, 2.0]]), 1).unwrap();
    assert_eq!(column(&out, 0), vec![1.0, 1.0, 1.0]);

    let star = build(3, &[(0, 1, 1.0), (0, 2, 3.0)]);
    let out = propagate(&star, &table(&[vec![9.0, 0.0, 4.0]]), 1).unwrap();
    assert_eq!(column(&out, 0)[0], 3.0);
}

#[test]
fn missing_cells_are_excluded_per_feature() {
    let star = build(4, &[(0, 1, 1.0), (0, 2, 3.0), (0, 3, 1.0)]);
    let f = table(&[vec![7.0, 2.0, MISSING, 4.0], vec![7.0, MISSING, MISSING, MISSING]]);
    let out = propagate(&star, &f, 1).unwrap();
    let centre = out.get(0).unwrap();
    assert_eq!(centre[0], 3.0);
    // every neighbor missing keeps the previous value
    assert_eq!(centre[1], 7.0);
    // leaves see only the centre
    assert_eq!(out.get(2).unwrap()[0], 7.0);
    assert!(!is_missing(out.get(2).unwrap()[1]));
}

#[test]
fn uncovered_node_is_rejected() {
    let g = build(3, &[(0, 1, 1.0)]);
    let f = FeatureTable::from_rows(vec!["x".into()], vec![(0, vec![1.0]), (1, vec![2.0])]).unwrap();
    let err = propagate(&g, &f, 1).unwrap_err().to_string();
    assert!(err.contains('2'), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn iterates_stay_in_neighbor_range(
        (n, edges) in graph_strategy(),
        vals in prop::collection::vec(-100.0f64..100.0, 12),
    ) {
        let g = build(n, &edges);
        let f = table(&[vals[..n as usize].to_vec()]);
        let one = propagate(&g, &f, 1).unwrap();
        for i in 0..n as usize {
            let nb: Vec<f64> = g.neighbors(i).map(|(j, _)| vals[j]).collect();
            let v = column(&one, 0)[i];
            if nb.is_empty() {
                prop_assert_eq!(v, vals[i]);
            } else {
                let lo = nb.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = nb.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
            }
        }
        let lo = vals[..n as usize].iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals[..n as usize].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let three = propagate(&g, &f, 3).unwrap();
        for v in column(&three, 0) {
            prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        }
    }

    #[test]
    fn constants_and_isolated_nodes_are_fixed(
        (n, edges) in graph_strategy(), c in -50.0f64..50.0, k in 0usize..4,
        vals in prop::collection::vec(-100.0f64..100.0, 12),
    ) {
        let g = build(n, &edges);
        let f = table(&[vec![c; n as usize], vals[..n as usize].to_vec()]);
        let out = propagate(&g, &f, k).unwrap();
        for (i, v) in column(&out, 0).into_iter().enumerate() {
            prop_assert!((v - c).abs() < 1e-9);
            if g.degree(i) == 0 {
                prop_assert_eq!(column(&out, 1)[i], vals[i]);
            }
        }
        if k == 0 {
            prop_assert_eq!(out, f);
        }
    }

    #[test]
    fn propagation_is_linear(
        (n, edges) in graph_strategy(), k in 0usize..4,
        a in -3.0f64..3.0, b in -3.0f64..3.0,
        f in prop::collection::vec(-10.0f64..10.0, 12),
        h in prop::collection::vec(-10.0f64..10.0, 12),
    ) {
        let g = build(n, &edges);
        let n = n as usize;
        let mix: Vec<f64> = (0..n).map(|i| a * f[i] + b * h[i]).collect();
        let out = propagate(&g, &table(&[f[..n].to_vec(), h[..n].to_vec(), mix]), k).unwrap();
        let (pf, ph, pm) = (column(&out, 0), column(&out, 1), column(&out, 2));
        for i in 0..n {
            prop_assert!((pm[i] - (a * pf[i] + b * ph[i])).abs() < 1e-9);
        }
    }
}
