mod common;

use std::collections::BTreeSet;

use churnet::contagion::{peer_departure_fraction, threshold_analysis, ContagionConfig};
use churnet::registry::{build_temporal_grid, MonthIndex, RecordSet, TemporalGrid};
use common::{d, from_offsets};
use proptest::prelude::*;

/// Peer fraction by scanning raw records at the window start.
fn fraction_by_scan(rs: &RecordSet, person: &str, m: MonthIndex, window: usize, min_peers: usize) -> Option<f64> {
    let w0 = m.offset(-(window as i32));
    let snap = m.snapshot_date();
    let records = rs.records();
    let firms: BTreeSet<&str> =
        records.iter().filter(|r| r.person_id == person && r.active_at(w0)).map(|r| r.firm_id.as_str()).collect();
    if firms.is_empty() {
        return None;
    }
    let peer_spells: Vec<_> = records
        .iter()
        .filter(|r| r.person_id != person && r.active_at(w0) && firms.contains(r.firm_id.as_str()))
        .collect();
    let peers: BTreeSet<&str> = peer_spells.iter().map(|r| r.person_id.as_str()).collect();
    if peers.len() < min_peers.max(1) {
        return None;
    }
    let departed = peers
        .iter()
        .filter(|&&q| peer_spells.iter().any(|r| r.person_id == q && r.end_date.is_some_and(|e| e <= snap)))
        .count();
    Some(departed as f64 / peers.len() as f64)
}

/// Every eligible (fraction, label) observation, by direct scan.
fn observations(rs: &RecordSet, grid: &TemporalGrid, window: usize, min_peers: usize) -> Vec<(f64, bool)> {
    let persons: BTreeSet<&str> = rs.records().iter().map(|r| r.person_id.as_str()).collect();
    let mut out = Vec::new();
    for m in grid.months().filter(|m| grid.contains(m.offset(-(window as i32)))) {
        let (snap, next) = (m.snapshot_date(), m.offset(1).snapshot_date());
        for &p in &persons {
            let mine: Vec<_> = rs.records().iter().filter(|r| r.person_id == p && r.active_at(m)).collect();
            if mine.is_empty() {
                continue;
            }
            if let Some(f) = fraction_by_scan(rs, p, m, window, min_peers) {
                let label = mine.iter().any(|r| r.end_date.is_some_and(|e| e > snap && e <= next));
                out.push((f, label));
            }
        }
    }
    out
}

fn crowded(seed: u64) -> RecordSet {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let spells: Vec<_> = (0..120)
        .map(|_| {
            let len = rng.random_bool(0.85).then(|| rng.random_range(30..500));
            (rng.random_range(0..40), rng.random_range(0..3), rng.random_range(0..1000), len)
        })
        .collect();
    from_offsets(d("2018-01-01"), &spells)
}

#[test]
fn rates_match_brute_force_scan() {
    for seed in 0..6 {
        let rs = crowded(seed);
        let grid = build_temporal_grid(&rs, MonthIndex::from_ym(2018, 1), MonthIndex::from_ym(2020, 12)).unwrap();
        for (window, min_peers) in [(6, 3), (3, 1), (2, 5)] {
            let cfg = ContagionConfig { window_months: window, min_peers, ..ContagionConfig::default() };
            let report = threshold_analysis(&grid, &rs, &cfg).unwrap();
            let obs = observations(&rs, &grid, window, min_peers);
            assert!(obs.len() > 50 && obs.iter().any(|o| o.1));
            assert_eq!(report.n_eligible as usize, obs.len());
            assert_eq!(report.n_departed as usize, obs.iter().filter(|o| o.1).count());
            for row in &report.rows {
                let above: Vec<_> = obs.iter().filter(|o| o.0 > row.threshold).collect();
                assert_eq!(row.n_above as usize, above.len());
                let rate = (!above.is_empty()).then(|| above.iter().filter(|o| o.1).count() as f64 / above.len() as f64);
                assert_eq!(row.rate_above, rate);
            }
        }
    }
}

#[test]
fn single_person_fraction_matches_scan() {
    let rs = crowded(42);
    let grid = build_temporal_grid(&rs, MonthIndex::from_ym(2018, 1), MonthIndex::from_ym(2020, 12)).unwrap();
    let m = MonthIndex::from_ym(2019, 9);
    for (s, r) in rs.records().iter().enumerate() {
        if !grid.is_active(s, m) {
            continue;
        }
        let got = peer_departure_fraction(&r.person_id, m, &grid, &rs, 6, 2).unwrap();
        assert_eq!(got, fraction_by_scan(&rs, &r.person_id, m, 6, 2), "{}", r.person_id);
    }
}

fn bins_sum_to_eligible(report: &churnet::contagion::ContagionReport, obs: &[(f64, bool)]) {
    let t: Vec<f64> = report.rows.iter().map(|r| r.threshold).collect();
    // bins: [0, t0], (t0, t1], ..., (t_last, 1]
    let mut counts = vec![0u64; t.len() + 1];
    for &(f, _) in obs {
        counts[t.iter().filter(|&&x| f > x).count()] += 1;
    }
    assert_eq!(counts.iter().sum::<u64>(), report.n_eligible);
    for k in 0..t.len() {
        let next = report.rows.get(k + 1).map_or(0, |r| r.n_above);
        assert_eq!(report.rows[k].n_above - next, counts[k + 1]);
    }
    assert_eq!(report.n_eligible - report.rows[0].n_above, counts[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn raising_min_peers_never_adds_eligible_months(seed in 0u64..1000, a in 0usize..6, b in 0usize..6) {
        let rs = crowded(seed);
        let grid = build_temporal_grid(&rs, MonthIndex::from_ym(2018, 1), MonthIndex::from_ym(2020, 6)).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        let run = |min_peers| {
            let cfg = ContagionConfig { min_peers, ..ContagionConfig::default() };
            threshold_analysis(&grid, &rs, &cfg).unwrap()
        };
        let (r_lo, r_hi) = (run(lo), run(hi));
        prop_assert!(r_hi.n_eligible <= r_lo.n_eligible);
        if !r_lo.rows.is_empty() {
            prop_assert!(r_lo.rows.windows(2).all(|w| w[1].n_above <= w[0].n_above));
            bins_sum_to_eligible(&r_lo, &observations(&rs, &grid, 6, lo));
        }
    }
}
