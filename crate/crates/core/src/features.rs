//! Point-in-time feature columns per (spell, month) and monthly feature matrices.
//!
//! Every value for month `m` is computed from data dated on or before the
//! snapshot of `m`: spells starting later are ignored and end dates after the
//! snapshot are treated as unknown.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graphs::{build_employee_graph, build_firm_graph, FirmWeightScheme};
use crate::propagation::{propagate, FeatureTable, MISSING};
use crate::registry::{month_coord, Gender, MonthIndex, RecordSet, Role, SpellId, TemporalGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureCategory {
    Individual,
    Firm,
    Demographic,
    NetworkPropagated,
}

impl FeatureCategory {
    pub const ALL: [FeatureCategory; 4] = [
        FeatureCategory::Individual,
        FeatureCategory::Firm,
        FeatureCategory::Demographic,
        FeatureCategory::NetworkPropagated,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSource {
    Base,
    PropagatedEmployee,
    PropagatedFirm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub category: FeatureCategory,
    pub source: FeatureSource,
    /// Base column a propagated entry is derived from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    /// Propagation steps for propagated entries; 0 for base entries.
    #[serde(default)]
    pub hops: usize,
}

pub const INDIVIDUAL_FEATURES: [&str; 6] = [
    "tenure_months",
    "career_months",
    "n_prior_firms",
    "mobility_rate",
    "is_responsible_officer",
    "n_concurrent_spells",
];

pub const FIRM_FEATURES: [&str; 9] = [
    "headcount",
    "firm_age_months",
    "mean_employee_tenure",
    "tenure_q25",
    "tenure_q50",
    "tenure_q75",
    "tenure_q90",
    "departure_rate_6m",
    "headcount_growth_6m",
];

pub const DEMOGRAPHIC_FEATURES: [&str; 3] = ["gender_f", "gender_m", "region_code"];

/// Base columns carried over the employee and firm graphs.
pub const PROPAGATED_BASES: [&str; 6] = [
    "tenure_months",
    "mobility_rate",
    "departure_rate_6m",
    "mean_employee_tenure",
    "tenure_q75",
    "headcount_growth_6m",
];

/// Ordered list of feature columns for a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureCatalog {
    entries: Vec<CatalogEntry>,
}

fn base_entry(name: &str, category: FeatureCategory) -> CatalogEntry {
    CatalogEntry { name: name.into(), category, source: FeatureSource::Base, base: None, hops: 0 }
}

fn propagated_entry(prefix: &str, base: &str, source: FeatureSource, hops: usize) -> CatalogEntry {
    CatalogEntry {
        name: format!("{prefix}_{base}"),
        category: FeatureCategory::NetworkPropagated,
        source,
        base: Some(base.into()),
        hops,
    }
}

fn base_category(name: &str) -> Option<FeatureCategory> {
    if INDIVIDUAL_FEATURES.contains(&name) {
        Some(FeatureCategory::Individual)
    } else if FIRM_FEATURES.contains(&name) {
        Some(FeatureCategory::Firm)
    } else if DEMOGRAPHIC_FEATURES.contains(&name) {
        Some(FeatureCategory::Demographic)
    } else {
        None
    }
}

impl FeatureCatalog {
    pub fn new(entries: Vec<CatalogEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::arg(format!("duplicate feature `{}`", e.name)));
            }
            match e.source {
                FeatureSource::Base => {
                    if base_category(&e.name) != Some(e.category) {
                        return Err(Error::arg(format!("unknown base feature `{}`", e.name)));
                    }
                }
                FeatureSource::PropagatedEmployee | FeatureSource::PropagatedFirm => {
                    let ok = e.base.as_deref().is_some_and(|b| PROPAGATED_BASES.contains(&b));
                    if !ok || e.hops == 0 || e.category != FeatureCategory::NetworkPropagated {
                        return Err(Error::arg(format!("propagated feature `{}` has no valid base", e.name)));
                    }
                    if e.source == FeatureSource::PropagatedFirm && e.hops != 1 {
                        return Err(Error::arg(format!("firm propagation `{}` supports one step only", e.name)));
                    }
                }
            }
        }
        Ok(FeatureCatalog { entries })
    }

    /// 6 individual + 9 firm + 3 demographic + 18 propagated columns.
    pub fn default_catalog() -> Self {
        let mut entries: Vec<CatalogEntry> = Vec::with_capacity(36);
        entries.extend(INDIVIDUAL_FEATURES.iter().map(|n| base_entry(n, FeatureCategory::Individual)));
        entries.extend(FIRM_FEATURES.iter().map(|n| base_entry(n, FeatureCategory::Firm)));
        entries.extend(DEMOGRAPHIC_FEATURES.iter().map(|n| base_entry(n, FeatureCategory::Demographic)));
        for b in PROPAGATED_BASES {
            entries.push(propagated_entry("emp_k1", b, FeatureSource::PropagatedEmployee, 1));
        }
        for b in PROPAGATED_BASES {
            entries.push(propagated_entry("firm_k1", b, FeatureSource::PropagatedFirm, 1));
        }
        for b in PROPAGATED_BASES {
            entries.push(propagated_entry("emp_k2", b, FeatureSource::PropagatedEmployee, 2));
        }
        FeatureCatalog { entries }
    }

    /// The default catalog without network-propagated columns.
    pub fn no_network() -> Self {
        Self::default_catalog().filter(|e| e.category != FeatureCategory::NetworkPropagated)
    }

    /// Resolve a named variant: `full` or `no_network`.
    pub fn variant(name: &str) -> Result<Self> {
        match name {
            "full" | "network" => Ok(Self::default_catalog()),
            "no_network" | "baseline" => Ok(Self::no_network()),
            other => Err(Error::arg(format!("unknown catalog variant `{other}`"))),
        }
    }

    pub fn filter(&self, keep: impl Fn(&CatalogEntry) -> bool) -> Self {
        FeatureCatalog { entries: self.entries.iter().filter(|e| keep(e)).cloned().collect() }
    }

    /// Subset by names, preserving this catalog's order.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        for n in names {
            if !self.entries.iter().any(|e| e.name == *n) {
                return Err(Error::arg(format!("feature `{n}` not in catalog")));
            }
        }
        Ok(self.filter(|e| names.contains(&e.name.as_str())))
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.entries)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::new(serde_json::from_str(s)?)
    }

    /// SHA-256 of the JSON manifest.
    pub fn manifest_hash(&self) -> String {
        let json = serde_json::to_string(&self.entries).expect("catalog serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

// ---------------------------------------------------------------------------
// Base features
// ---------------------------------------------------------------------------

/// Linear-interpolation quantile of sorted values.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return MISSING;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn tenure(rs: &RecordSet, s: SpellId, snap_c: f64) -> f64 {
    snap_c - rs.start_coord(s)
}

/// Six individual columns for the row of spell `spell` at month `m`.
pub fn individual_features_for_spell(rs: &RecordSet, spell: SpellId, m: MonthIndex) -> Result<[f64; 6]> {
    let rec = rs.record(spell);
    if !rec.active_at(m) {
        return Err(Error::arg(format!("spell of {} is not active at {m}", rec.person_id)));
    }
    let snap = m.snapshot_date();
    let snap_c = month_coord(snap);
    let person = rs.person_of(spell);
    let visible: Vec<SpellId> =
        rs.spells_of_person(person).iter().copied().filter(|&s| rs.record(s).start_date <= snap).collect();

    let first_start = visible.iter().map(|&s| rs.start_coord(s)).fold(f64::INFINITY, f64::min);
    let career = (snap_c - first_start).max(1.0);
    let current_firm = rs.firm_of(spell);
    let prior: HashSet<u32> = visible
        .iter()
        .filter(|&&s| rs.record(s).start_date < rec.start_date && rs.firm_of(s) != current_firm)
        .map(|&s| rs.firm_of(s))
        .collect();
    let all_firms: HashSet<u32> = visible.iter().map(|&s| rs.firm_of(s)).collect();
    let concurrent = visible.iter().filter(|&&s| rs.record(s).active_at(m)).count();
    let ro = match rec.role {
        Role::ResponsibleOfficer => 1.0,
        Role::Representative => 0.0,
        Role::Unknown => MISSING,
    };
    Ok([
        tenure(rs, spell, snap_c),
        career,
        prior.len() as f64,
        all_firms.len() as f64 / (career / 12.0),
        ro,
        concurrent as f64,
    ])
}

/// The person's most recently started active spell at `m`.
fn primary_spell(rs: &RecordSet, person: u32, m: MonthIndex) -> Option<SpellId> {
    rs.spells_of_person(person).iter().rev().copied().find(|&s| rs.record(s).active_at(m))
}

/// Individual columns for a person, using their most recently started active spell.
pub fn individual_features(rs: &RecordSet, person_id: &str, m: MonthIndex) -> Result<[f64; 6]> {
    let p = rs.person_index(person_id).ok_or_else(|| Error::arg(format!("unknown person `{person_id}`")))?;
    let s = primary_spell(rs, p, m).ok_or_else(|| Error::arg(format!("person `{person_id}` not active at {m}")))?;
    individual_features_for_spell(rs, s, m)
}

fn headcount_at(rs: &RecordSet, firm: u32, m: MonthIndex) -> usize {
    let mut persons: Vec<u32> =
        rs.spells_of_firm(firm).iter().filter(|&&s| rs.record(s).active_at(m)).map(|&s| rs.person_of(s)).collect();
    persons.sort_unstable();
    persons.dedup();
    persons.len()
}

/// Nine firm columns for `firm` at month `m`.
pub fn firm_features_by_index(rs: &RecordSet, firm: u32, m: MonthIndex) -> Result<[f64; 9]> {
    let snap = m.snapshot_date();
    let snap_c = month_coord(snap);
    let spells = rs.spells_of_firm(firm);
    let active: Vec<SpellId> = spells.iter().copied().filter(|&s| rs.record(s).active_at(m)).collect();
    if active.is_empty() {
        return Err(Error::arg(format!("firm `{}` has no active spell at {m}", rs.firm_name(firm))));
    }
    let headcount = headcount_at(rs, firm, m);
    let first_start = rs.start_coord(spells[0]);
    let mut tenures: Vec<f64> = active.iter().map(|&s| tenure(rs, s, snap_c)).collect();
    tenures.sort_by(|a, b| a.total_cmp(b));
    let mean_tenure = tenures.iter().sum::<f64>() / tenures.len() as f64;

    let window_start = m.offset(-6).snapshot_date();
    let departures = spells
        .iter()
        .filter(|&&s| rs.record(s).end_date.is_some_and(|e| e > window_start && e <= snap))
        .count();
    let mean_headcount = (0..6).map(|k| headcount_at(rs, firm, m.offset(-k)) as f64).sum::<f64>() / 6.0;
    let past = headcount_at(rs, firm, m.offset(-6)) as f64;

    Ok([
        headcount as f64,
        snap_c - first_start,
        mean_tenure,
        quantile_sorted(&tenures, 0.25),
        quantile_sorted(&tenures, 0.50),
        quantile_sorted(&tenures, 0.75),
        quantile_sorted(&tenures, 0.90),
        departures as f64 / mean_headcount,
        (headcount as f64 - past) / past.max(1.0),
    ])
}

pub fn firm_features(rs: &RecordSet, firm_id: &str, m: MonthIndex) -> Result<[f64; 9]> {
    let f = rs.firm_index(firm_id).ok_or_else(|| Error::arg(format!("unknown firm `{firm_id}`")))?;
    firm_features_by_index(rs, f, m)
}

/// Declared region-group dictionary; unlisted regions map to code 0.
pub const REGION_DICTIONARY: [&str; 12] =
    ["HK", "CN", "TW", "SG", "MY", "IN", "GB", "US", "AU", "JP", "KR", "EU"];

pub fn region_code(region: &str) -> f64 {
    REGION_DICTIONARY.iter().position(|r| r.eq_ignore_ascii_case(region.trim())).map_or(0.0, |i| (i + 1) as f64)
}

/// `[gender_f, gender_m, region_code]` from the earliest of the person's records
/// carrying each attribute. With `as_of`, only records started by that month's
/// snapshot are consulted.
pub fn demographic_features(rs: &RecordSet, person_id: &str, as_of: Option<MonthIndex>) -> [f64; 3] {
    match rs.person_index(person_id) {
        Some(p) => demographics_by_index(rs, p, as_of),
        None => [MISSING; 3],
    }
}

fn demographics_by_index(rs: &RecordSet, p: u32, as_of: Option<MonthIndex>) -> [f64; 3] {
    let cutoff = as_of.map(|m| m.snapshot_date());
    let visible = rs.spells_of_person(p).iter().map(|&s| rs.record(s)).filter(|r| cutoff.is_none_or(|c| r.start_date <= c));
    let mut gender = None;
    let mut region = None;
    for r in visible {
        if gender.is_none() {
            gender = r.gender.filter(|g| *g != Gender::Unknown);
        }
        if region.is_none() {
            region = r.region.as_deref();
        }
    }
    let (f, mm) = match gender {
        Some(Gender::F) => (1.0, 0.0),
        Some(Gender::M) => (0.0, 1.0),
        _ => (MISSING, MISSING),
    };
    [f, mm, region.map_or(MISSING, region_code)]
}

// ---------------------------------------------------------------------------
// Matrix assembly
// ---------------------------------------------------------------------------

/// Row identity: the spell plus its person and firm indexes in the RecordSet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowKey {
    pub spell: SpellId,
    pub person: u32,
    pub firm: u32,
}

/// Feature values for one snapshot. Values are stored as `f32` with NaN as the
/// missing marker.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub snapshot: MonthIndex,
    pub rows: Vec<RowKey>,
    pub columns: Vec<String>,
    pub values: Vec<f32>,
    pub labels: Vec<bool>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, r: usize) -> &[f32] {
        let w = self.n_cols();
        &self.values[r * w..(r + 1) * w]
    }

    pub fn get(&self, r: usize, name: &str) -> Option<f32> {
        let c = self.columns.iter().position(|n| n == name)?;
        Some(self.row(r)[c])
    }

    /// Column subset by names, in the given order.
    pub fn project(&self, names: &[&str]) -> Result<FeatureMatrix> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.columns.iter().position(|c| c == n).ok_or_else(|| Error::MissingColumn(n.to_string())))
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(self.n_rows() * idx.len());
        for r in 0..self.n_rows() {
            let row = self.row(r);
            values.extend(idx.iter().map(|&c| row[c]));
        }
        Ok(FeatureMatrix {
            snapshot: self.snapshot,
            rows: self.rows.clone(),
            columns: names.iter().map(|s| s.to_string()).collect(),
            values,
            labels: self.labels.clone(),
        })
    }

    /// CSV with header `person_id,firm_id,month,<features...>,label`; missing cells are empty.
    pub fn write_csv<W: Write>(&self, rs: &RecordSet, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header = vec!["person_id".to_string(), "firm_id".into(), "month".into()];
        header.extend(self.columns.iter().cloned());
        header.push("label".into());
        w.write_record(&header)?;
        let month = self.snapshot.to_string();
        for (r, key) in self.rows.iter().enumerate() {
            let mut rec = vec![rs.person_name(key.person).to_string(), rs.firm_name(key.firm).to_string(), month.clone()];
            rec.extend(self.row(r).iter().map(|v| if v.is_nan() { String::new() } else { v.to_string() }));
            rec.push(if self.labels[r] { "1".into() } else { "0".into() });
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Propagated values keyed by catalog entry name, each sorted by node id
/// (person ids for employee-graph entries, firm ids for firm-graph entries).
pub type PropagatedColumns = BTreeMap<String, Vec<(u32, f64)>>;

fn lookup(col: &[(u32, f64)], id: u32) -> f64 {
    col.binary_search_by_key(&id, |e| e.0).map_or(MISSING, |i| col[i].1)
}

/// Assemble the matrix for month `m` from base columns and supplied propagated columns.
pub fn assemble_matrix(
    grid: &TemporalGrid,
    rs: &RecordSet,
    m: MonthIndex,
    catalog: &FeatureCatalog,
    propagated: &PropagatedColumns,
) -> Result<FeatureMatrix> {
    let active = grid.active(m)?;
    let labels = grid.labels(m)?.to_vec();
    for e in catalog.entries() {
        if e.source != FeatureSource::Base && !propagated.contains_key(&e.name) {
            return Err(Error::MissingColumn(e.name.clone()));
        }
    }
    let needs_firm = catalog.entries().iter().any(|e| e.category == FeatureCategory::Firm);
    let firm_cache = if needs_firm { firm_table(grid, rs, m)? } else { BTreeMap::new() };

    let rows: Vec<RowKey> =
        active.iter().map(|&s| RowKey { spell: s, person: rs.person_of(s), firm: rs.firm_of(s) }).collect();
    let per_row: Vec<Vec<f32>> = rows
        .par_iter()
        .map(|key| -> Result<Vec<f32>> {
            let ind = individual_features_for_spell(rs, key.spell, m)?;
            let demo = demographics_by_index(rs, key.person, Some(m));
            let firm = firm_cache.get(&key.firm);
            Ok(catalog
                .entries()
                .iter()
                .map(|e| {
                    let v = match e.source {
                        FeatureSource::Base => match e.category {
                            FeatureCategory::Individual => ind[INDIVIDUAL_FEATURES.iter().position(|n| *n == e.name).unwrap()],
                            FeatureCategory::Firm => {
                                firm.map_or(MISSING, |f| f[FIRM_FEATURES.iter().position(|n| *n == e.name).unwrap()])
                            }
                            FeatureCategory::Demographic => {
                                demo[DEMOGRAPHIC_FEATURES.iter().position(|n| *n == e.name).unwrap()]
                            }
                            FeatureCategory::NetworkPropagated => MISSING,
                        },
                        FeatureSource::PropagatedEmployee => lookup(&propagated[&e.name], key.person),
                        FeatureSource::PropagatedFirm => lookup(&propagated[&e.name], key.firm),
                    };
                    v as f32
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    Ok(FeatureMatrix {
        snapshot: m,
        rows,
        columns: catalog.names().iter().map(|s| s.to_string()).collect(),
        values: per_row.into_iter().flatten().collect(),
        labels,
    })
}

fn firm_table(grid: &TemporalGrid, rs: &RecordSet, m: MonthIndex) -> Result<BTreeMap<u32, [f64; 9]>> {
    let mut firms: Vec<u32> = grid.active(m)?.iter().map(|&s| rs.firm_of(s)).collect();
    firms.sort_unstable();
    firms.dedup();
    firms.par_iter().map(|&f| Ok((f, firm_features_by_index(rs, f, m)?))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    #[serde(default)]
    pub firm_scheme: FirmWeightScheme,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { firm_scheme: FirmWeightScheme::default() }
    }
}

const EMP_IDX: [usize; 2] = [0, 3]; // tenure_months, mobility_rate within individual features
const FIRM_IDX: [usize; 4] = [7, 2, 5, 8]; // departure_rate_6m, mean_employee_tenure, tenure_q75, headcount_growth_6m

/// Propagate the six carried base columns over the employee graph (for every
/// hop count the catalog asks for) and over the firm graph.
pub fn compute_propagated(
    grid: &TemporalGrid,
    rs: &RecordSet,
    m: MonthIndex,
    catalog: &FeatureCatalog,
    cfg: &FeatureConfig,
) -> Result<PropagatedColumns> {
    let mut out = PropagatedColumns::new();
    let emp_hops: Vec<usize> = catalog
        .entries()
        .iter()
        .filter(|e| e.source == FeatureSource::PropagatedEmployee)
        .map(|e| e.hops)
        .collect();
    let want_firm = catalog.entries().iter().any(|e| e.source == FeatureSource::PropagatedFirm);
    if emp_hops.is_empty() && !want_firm {
        return Ok(out);
    }
    let names: Vec<String> = PROPAGATED_BASES.iter().map(|s| s.to_string()).collect();
    let firms = firm_table(grid, rs, m)?;
    let active = grid.active(m)?;

    if let Some(&max_hops) = emp_hops.iter().max() {
        let mut persons: Vec<u32> = active.iter().map(|&s| rs.person_of(s)).collect();
        persons.sort_unstable();
        persons.dedup();
        let rows: Vec<(u32, Vec<f64>)> = persons
            .par_iter()
            .map(|&p| {
                let s = primary_spell(rs, p, m).expect("active person has an active spell");
                let ind = individual_features_for_spell(rs, s, m)?;
                let f = &firms[&rs.firm_of(s)];
                let mut v: Vec<f64> = EMP_IDX.iter().map(|&i| ind[i]).collect();
                v.extend(FIRM_IDX.iter().map(|&i| f[i]));
                Ok((p, v))
            })
            .collect::<Result<_>>()?;
        let table = FeatureTable::from_rows(names.clone(), rows)?;
        let g = build_employee_graph(grid, rs, m)?;
        let mut current = table;
        for hop in 1..=max_hops {
            current = propagate(&g, &current, 1)?;
            if emp_hops.contains(&hop) {
                for b in PROPAGATED_BASES {
                    let col: Vec<(u32, f64)> = current.column(b).expect("carried column").collect();
                    out.insert(format!("emp_k{hop}_{b}"), col);
                }
            }
        }
    }

    if want_firm {
        let mut sums: BTreeMap<u32, (f64, f64, usize)> = BTreeMap::new();
        for &s in active {
            let ind = individual_features_for_spell(rs, s, m)?;
            let e = sums.entry(rs.firm_of(s)).or_default();
            e.0 += ind[0];
            e.1 += ind[3];
            e.2 += 1;
        }
        let rows = firms.iter().map(|(&f, ff)| {
            let (t, mob, n) = sums[&f];
            let mut v = vec![t / n as f64, mob / n as f64];
            v.extend(FIRM_IDX.iter().map(|&i| ff[i]));
            (f, v)
        });
        let table = FeatureTable::from_rows(names, rows)?;
        let g = build_firm_graph(grid, rs, m, cfg.firm_scheme)?;
        let prop = propagate(&g, &table, 1)?;
        for b in PROPAGATED_BASES {
            out.insert(format!("firm_k1_{b}"), prop.column(b).expect("carried column").collect());
        }
    }
    Ok(out)
}

/// Full pipeline for one month: graphs, propagation and assembly.
pub fn build_month_matrix(
    grid: &TemporalGrid,
    rs: &RecordSet,
    m: MonthIndex,
    catalog: &FeatureCatalog,
    cfg: &FeatureConfig,
) -> Result<FeatureMatrix> {
    let prop = compute_propagated(grid, rs, m, catalog, cfg)?;
    assemble_matrix(grid, rs, m, catalog, &prop)
}

/// Feature matrices for every grid month, sharing one catalog.
#[derive(Debug, Clone)]
pub struct FeatureStore {
    catalog: FeatureCatalog,
    start: MonthIndex,
    matrices: Vec<FeatureMatrix>,
}

impl FeatureStore {
    pub fn build(grid: &TemporalGrid, rs: &RecordSet, catalog: &FeatureCatalog, cfg: &FeatureConfig) -> Result<Self> {
        let months: Vec<MonthIndex> = grid.months().collect();
        let matrices = months
            .par_iter()
            .map(|&m| build_month_matrix(grid, rs, m, catalog, cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureStore { catalog: catalog.clone(), start: grid.start(), matrices })
    }

    pub fn catalog(&self) -> &FeatureCatalog {
        &self.catalog
    }

    pub fn start(&self) -> MonthIndex {
        self.start
    }

    pub fn end(&self) -> MonthIndex {
        self.start.offset(self.matrices.len() as i32 - 1)
    }

    pub fn month(&self, m: MonthIndex) -> Option<&FeatureMatrix> {
        let i = m.since(self.start);
        if i < 0 {
            return None;
        }
        self.matrices.get(i as usize)
    }

    pub fn matrices(&self) -> &[FeatureMatrix] {
        &self.matrices
    }

    /// Replace every month's labels by a seeded within-month permutation.
    pub fn permute_labels(&mut self, seed: u64) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        for (i, mx) in self.matrices.iter_mut().enumerate() {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            mx.labels.shuffle(&mut rng);
        }
    }
}

/// Map of base column name → category, for catalog-free callers.
pub fn base_categories() -> HashMap<&'static str, FeatureCategory> {
    let mut m = HashMap::new();
    for n in INDIVIDUAL_FEATURES {
        m.insert(n, FeatureCategory::Individual);
    }
    for n in FIRM_FEATURES {
        m.insert(n, FeatureCategory::Firm);
    }
    for n in DEMOGRAPHIC_FEATURES {
        m.insert(n, FeatureCategory::Demographic);
    }
    m
}
