use std::collections::HashSet;

use churnet::registry::{registry_stats, write_records, Format};
use churnet::synth::{describe_ground_truth, generate_market, market_grid, GroundTruth, MarketConfig};

#[test]
fn null_market_turnover_matches_base_hazard() {
    let cfg = MarketConfig {
        n_agents: 20_000,
        months: 60,
        contagion_boost: 0.0,
        firm_stability_spread: 0.0,
        seed: 31,
        ..MarketConfig::default()
    };
    let rs = generate_market(&cfg).unwrap();
    let grid = market_grid(&cfg, &rs).unwrap();
    let rate = registry_stats(&rs, &grid).monthly_turnover_rate.unwrap();
    assert!((rate / cfg.base_hazard - 1.0).abs() < 0.10, "turnover {rate}");
}

#[test]
fn firm_departure_rates_stay_within_planted_hazards() {
    let cfg = MarketConfig {
        n_agents: 8_000,
        n_firms: 40,
        months: 60,
        firm_stability_spread: 0.6,
        contagion_boost: 0.5,
        seed: 12,
        ..MarketConfig::default()
    };
    let truth = describe_ground_truth(&cfg).unwrap();
    let rs = generate_market(&cfg).unwrap();
    let grid = market_grid(&cfg, &rs).unwrap();
    let mut exposure = vec![0u64; cfg.n_firms];
    let mut departures = vec![0u64; cfg.n_firms];
    for m in grid.months() {
        let persons: Vec<u32> = grid.active(m).unwrap().iter().map(|&s| rs.person_of(s)).collect();
        // one active spell per agent at every snapshot
        assert_eq!(persons.iter().collect::<HashSet<_>>().len(), persons.len());
        for (&s, &l) in grid.active(m).unwrap().iter().zip(grid.labels(m).unwrap()) {
            let f: usize = rs.firm_name(rs.firm_of(s))[1..].parse().unwrap();
            exposure[f] += 1;
            departures[f] += u64::from(l);
        }
    }
    for f in 0..cfg.n_firms {
        let n = exposure[f] as f64;
        if n < 2_000.0 {
            continue;
        }
        let lo = cfg.base_hazard * truth.firm_factors[f];
        let hi = lo * (1.0 + cfg.contagion_boost);
        let rate = departures[f] as f64 / n;
        let noise = 4.0 * (hi * (1.0 - hi) / n).sqrt();
        assert!(rate >= lo - noise && rate <= hi + noise, "firm {f}: {rate} outside [{lo}, {hi}]");
        assert!(truth.firm_factors[f] >= truth.min_firm_factor && truth.firm_factors[f] <= truth.max_firm_factor);
    }
}

#[test]
fn manifest_regenerates_identical_data() {
    let cfg = MarketConfig { n_agents: 2_000, n_firms: 100, months: 36, seed: 99, ..MarketConfig::default() };
    let truth = describe_ground_truth(&cfg).unwrap();
    let json = truth.to_json().unwrap();
    let back: GroundTruth = serde_json::from_str(&json).unwrap();
    assert_eq!(back.hash(), truth.hash());
    assert_eq!((back.contagion_threshold, back.contagion_boost), (0.30, 0.23));

    let export = |cfg: &MarketConfig| {
        let mut buf = Vec::new();
        write_records(&generate_market(cfg).unwrap(), &mut buf, Format::Csv).unwrap();
        buf
    };
    let original = export(&cfg);
    assert_eq!(original, export(&back.config));
    let reparsed = churnet::registry::parse_records(original.as_slice(), Format::Csv, "re").unwrap();
    assert_eq!(reparsed.len(), generate_market(&cfg).unwrap().len());
    assert_ne!(original, export(&MarketConfig { seed: 100, ..cfg }));
}
