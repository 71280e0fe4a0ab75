//! Peer-departure threshold analysis.
//!
//! For a person active at month `m`, the peer set is their co-employment
//! neighborhood at the window start `m - window`, and the peer-departure
//! fraction is the share of those peers whose spell at the shared firm ended by
//! `snapshot(m)`. Turnover rates conditional on the fraction exceeding a
//! threshold are compared with the rate over all eligible person-months.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::{MonthIndex, RecordSet, SpellId, TemporalGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContagionConfig {
    pub window_months: usize,
    pub thresholds: Vec<f64>,
    pub min_peers: usize,
}

impl Default for ContagionConfig {
    fn default() -> Self {
        ContagionConfig {
            window_months: 6,
            thresholds: (0..10).map(|i| i as f64 / 10.0).collect(),
            min_peers: 3,
        }
    }
}

impl ContagionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_months == 0 {
            return Err(Error::arg("contagion window_months must be >= 1"));
        }
        if self.thresholds.iter().any(|t| !(0.0..1.0).contains(t)) {
            return Err(Error::arg("contagion thresholds must lie in [0, 1)"));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg("contagion thresholds must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub threshold: f64,
    pub n_above: u64,
    pub n_departed_above: u64,
    /// `None` when no eligible person-month lies above the threshold.
    pub rate_above: Option<f64>,
    pub baseline: f64,
    pub relative_lift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContagionReport {
    pub config: ContagionConfig,
    pub n_eligible: u64,
    pub n_departed: u64,
    pub rows: Vec<ThresholdRow>,
    pub diagnostic: Option<String>,
}

impl ContagionReport {
    pub fn row_at(&self, threshold: f64) -> Option<&ThresholdRow> {
        self.rows.iter().find(|r| (r.threshold - threshold).abs() < 1e-12)
    }

    pub fn write_csv<W: std::io::Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["threshold", "n_above", "rate_above", "baseline", "relative_lift"])?;
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        for r in &self.rows {
            w.write_record([
                r.threshold.to_string(),
                r.n_above.to_string(),
                opt(r.rate_above),
                r.baseline.to_string(),
                opt(r.relative_lift),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Spells active at the window start, sorted by (firm, person), with a flag
/// for spells that ended by the snapshot of the evaluation month.
struct WindowRoster {
    entries: Vec<(u32, u32, bool)>,
}

impl WindowRoster {
    fn build(grid: &TemporalGrid, rs: &RecordSet, m: MonthIndex, window: usize) -> Result<Self> {
        let start = m.offset(-(window as i32));
        let snap = m.snapshot_date();
        let mut entries: Vec<(u32, u32, bool)> = grid
            .active(start)?
            .iter()
            .map(|&s| {
                let ended = rs.record(s).end_date.is_some_and(|e| e <= snap);
                (rs.firm_of(s), rs.person_of(s), ended)
            })
            .collect();
        entries.sort_unstable();
        Ok(WindowRoster { entries })
    }

    fn firm(&self, firm: u32) -> &[(u32, u32, bool)] {
        let lo = self.entries.partition_point(|e| e.0 < firm);
        let hi = self.entries.partition_point(|e| e.0 <= firm);
        &self.entries[lo..hi]
    }

    /// (peers, departed) for `person`, or `None` when they had no spell at the
    /// window start. A peer counts as departed if any of their window-start
    /// spells at a firm shared with `person` has ended.
    fn count(&self, person: u32, firms: &[u32], seen: &mut Vec<(u32, bool)>) -> Option<(usize, usize)> {
        if firms.is_empty() {
            return None;
        }
        seen.clear();
        for &f in firms {
            seen.extend(self.firm(f).iter().filter(|e| e.1 != person).map(|e| (e.1, e.2)));
        }
        seen.sort_unstable();
        let mut peers = 0;
        let mut departed = 0;
        let mut i = 0;
        while i < seen.len() {
            let p = seen[i].0;
            let mut any = false;
            while i < seen.len() && seen[i].0 == p {
                any |= seen[i].1;
                i += 1;
            }
            peers += 1;
            departed += usize::from(any);
        }
        Some((peers, departed))
    }
}

fn firms_at(rs: &RecordSet, grid: &TemporalGrid, person: u32, m: MonthIndex) -> Vec<u32> {
    let mut firms: Vec<u32> = rs
        .spells_of_person(person)
        .iter()
        .filter(|&&s| grid.is_active(s, m))
        .map(|&s| rs.firm_of(s))
        .collect();
    firms.sort_unstable();
    firms.dedup();
    firms
}

fn check_window(grid: &TemporalGrid, m: MonthIndex, window: usize) -> Result<()> {
    let start = m.offset(-(window as i32));
    if !grid.contains(m) || !grid.contains(start) {
        return Err(Error::arg(format!("window [{start}, {m}] is not inside the grid")));
    }
    Ok(())
}

/// Fraction of `person`'s window-start peers who departed by `m`; `None` when
/// the person was not active at the window start or had fewer than `min_peers`
/// peers then.
pub fn peer_departure_fraction(
    person: &str,
    m: MonthIndex,
    grid: &TemporalGrid,
    rs: &RecordSet,
    window: usize,
    min_peers: usize,
) -> Result<Option<f64>> {
    check_window(grid, m, window)?;
    let p = rs.person_index(person).ok_or_else(|| Error::arg(format!("unknown person {person}")))?;
    if firms_at(rs, grid, p, m).is_empty() {
        return Err(Error::arg(format!("person {person} is not active at {m}")));
    }
    let roster = WindowRoster::build(grid, rs, m, window)?;
    let firms = firms_at(rs, grid, p, m.offset(-(window as i32)));
    Ok(roster
        .count(p, &firms, &mut Vec::new())
        .filter(|&(peers, _)| peers >= min_peers.max(1))
        .map(|(peers, dep)| dep as f64 / peers as f64))
}

/// Eligible person-months of `m` as (fraction, departed-next-month) pairs.
fn month_observations(
    grid: &TemporalGrid,
    rs: &RecordSet,
    m: MonthIndex,
    cfg: &ContagionConfig,
) -> Result<Vec<(f64, bool)>> {
    let roster = WindowRoster::build(grid, rs, m, cfg.window_months)?;
    let start = m.offset(-(cfg.window_months as i32));

    // person -> turnover label at m (any active spell ending next month)
    let mut persons: Vec<(u32, bool)> = grid
        .active(m)?
        .iter()
        .zip(grid.labels(m)?)
        .map(|(&s, &l): (&SpellId, &bool)| (rs.person_of(s), l))
        .collect();
    persons.sort_unstable();
    let mut labelled: Vec<(u32, bool)> = Vec::with_capacity(persons.len());
    for (p, l) in persons {
        match labelled.last_mut() {
            Some(last) if last.0 == p => last.1 |= l,
            _ => labelled.push((p, l)),
        }
    }

    let mut seen = Vec::new();
    let mut out = Vec::new();
    for (p, label) in labelled {
        let firms = firms_at(rs, grid, p, start);
        if let Some((peers, dep)) = roster.count(p, &firms, &mut seen) {
            if peers >= cfg.min_peers.max(1) {
                out.push((dep as f64 / peers as f64, label));
            }
        }
    }
    Ok(out)
}

pub fn threshold_analysis(grid: &TemporalGrid, rs: &RecordSet, cfg: &ContagionConfig) -> Result<ContagionReport> {
    cfg.validate()?;
    let months: Vec<MonthIndex> = grid
        .months()
        .filter(|m| grid.contains(m.offset(-(cfg.window_months as i32))))
        .collect();
    let per_month: Vec<Vec<(f64, bool)>> =
        months.par_iter().map(|&m| month_observations(grid, rs, m, cfg)).collect::<Result<_>>()?;

    let n_t = cfg.thresholds.len();
    let mut above = vec![0u64; n_t];
    let mut above_dep = vec![0u64; n_t];
    let (mut n_eligible, mut n_departed) = (0u64, 0u64);
    for &(frac, label) in per_month.iter().flatten() {
        n_eligible += 1;
        n_departed += u64::from(label);
        for (k, &t) in cfg.thresholds.iter().enumerate() {
            if frac > t {
                above[k] += 1;
                above_dep[k] += u64::from(label);
            }
        }
    }

    if n_eligible == 0 {
        return Ok(ContagionReport {
            config: cfg.clone(),
            n_eligible: 0,
            n_departed: 0,
            rows: Vec::new(),
            diagnostic: Some(format!(
                "no eligible person-months (window {} months, min_peers {})",
                cfg.window_months, cfg.min_peers
            )),
        });
    }
    let baseline = n_departed as f64 / n_eligible as f64;
    let rows = cfg
        .thresholds
        .iter()
        .enumerate()
        .map(|(k, &threshold)| {
            let rate_above = (above[k] > 0).then(|| above_dep[k] as f64 / above[k] as f64);
            ThresholdRow {
                threshold,
                n_above: above[k],
                n_departed_above: above_dep[k],
                rate_above,
                baseline,
                relative_lift: rate_above.filter(|_| baseline > 0.0).map(|r| r / baseline - 1.0),
            }
        })
        .collect();
    Ok(ContagionReport { config: cfg.clone(), n_eligible, n_departed, rows, diagnostic: None })
}
