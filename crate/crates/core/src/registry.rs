//! Employment-spell registry: records, the monthly snapshot grid and turnover labels.
//!
//! A snapshot is taken on the last calendar day of each month. A spell is active
//! at month `m` when `start <= snapshot(m) < end`, and carries label 1 at `m`
//! when its end date falls in `(snapshot(m), snapshot(m + 1)]`, i.e. the
//! employment ends during the following month.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result, RowError};

/// Calendar month counted from the epoch month 2000-01 (which is 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthIndex(pub i32);

const EPOCH_YEAR: i32 = 2000;

impl MonthIndex {
    pub fn from_ym(year: i32, month: u32) -> Self {
        assert!((1..=12).contains(&month), "month out of range: {month}");
        MonthIndex((year - EPOCH_YEAR) * 12 + month as i32 - 1)
    }

    pub fn of_date(date: NaiveDate) -> Self {
        Self::from_ym(date.year(), date.month())
    }

    pub fn year_month(self) -> (i32, u32) {
        let y = EPOCH_YEAR + self.0.div_euclid(12);
        let m = self.0.rem_euclid(12) as u32 + 1;
        (y, m)
    }

    pub fn first_day(self) -> NaiveDate {
        let (y, m) = self.year_month();
        NaiveDate::from_ymd_opt(y, m, 1).expect("valid month")
    }

    /// Last calendar day of the month.
    pub fn snapshot_date(self) -> NaiveDate {
        self.offset(1).first_day().pred_opt().expect("date in range")
    }

    pub fn offset(self, months: i32) -> Self {
        MonthIndex(self.0 + months)
    }

    /// Number of months from `other` to `self`.
    pub fn since(self, other: MonthIndex) -> i32 {
        self.0 - other.0
    }
}

impl fmt::Display for MonthIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (y, m) = self.year_month();
        write!(f, "{y:04}-{m:02}")
    }
}

impl FromStr for MonthIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::arg(format!("expected YYYY-MM, got `{s}`"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let y: i32 = y.parse().map_err(|_| bad())?;
        let m: u32 = m.parse().map_err(|_| bad())?;
        if !(1..=12).contains(&m) {
            return Err(bad());
        }
        Ok(Self::from_ym(y, m))
    }
}

impl Serialize for MonthIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Continuous month coordinate of a calendar day: month index plus the elapsed
/// fraction of that month. Differences between coordinates are durations in months.
pub fn month_coord(date: NaiveDate) -> f64 {
    let m = MonthIndex::of_date(date);
    let dim = m.snapshot_date().day() as f64;
    m.0 as f64 + (date.day() - 1) as f64 / dim
}

pub(crate) fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|_| Error::arg(format!("malformed date `{s}` (expected YYYY-MM-DD)")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Representative,
    ResponsibleOfficer,
    Unknown,
}

impl Role {
    pub fn token(self) -> &'static str {
        match self {
            Role::Representative => "REP",
            Role::ResponsibleOfficer => "RO",
            Role::Unknown => "",
        }
    }

    pub fn from_token(s: &str) -> Result<Self> {
        match s.trim() {
            "REP" => Ok(Role::Representative),
            "RO" => Ok(Role::ResponsibleOfficer),
            "" => Ok(Role::Unknown),
            other => Err(Error::arg(format!("unknown role token `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    F,
    M,
    Unknown,
}

impl Gender {
    pub fn token(self) -> &'static str {
        match self {
            Gender::F => "F",
            Gender::M => "M",
            Gender::Unknown => "U",
        }
    }

    fn from_token(s: &str) -> Result<Option<Self>> {
        match s.trim() {
            "" => Ok(None),
            "F" => Ok(Some(Gender::F)),
            "M" => Ok(Some(Gender::M)),
            "U" => Ok(Some(Gender::Unknown)),
            other => Err(Error::arg(format!("unknown gender token `{other}`"))),
        }
    }
}

/// One licensing spell of a person at a firm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmploymentRecord {
    pub person_id: String,
    pub firm_id: String,
    pub role: Role,
    pub start_date: NaiveDate,
    /// `None` while the spell is ongoing.
    pub end_date: Option<NaiveDate>,
    pub gender: Option<Gender>,
    pub region: Option<String>,
}

impl EmploymentRecord {
    pub fn validate(&self) -> Result<()> {
        if self.person_id.is_empty() {
            return Err(Error::arg("empty person_id"));
        }
        if self.firm_id.is_empty() {
            return Err(Error::arg("empty firm_id"));
        }
        if let Some(end) = self.end_date {
            if end <= self.start_date {
                return Err(Error::arg(format!(
                    "end_date {end} is not after start_date {}",
                    self.start_date
                )));
            }
        }
        Ok(())
    }

    /// Whether the spell is active on the snapshot of month `m`.
    pub fn active_at(&self, m: MonthIndex) -> bool {
        let snap = m.snapshot_date();
        self.start_date <= snap && self.end_date.is_none_or(|e| e > snap)
    }
}

pub type SpellId = usize;

/// An immutable, validated set of employment records with lookup indexes.
///
/// Person and firm identifiers are interned in sorted order, so the relative
/// order of surviving ids is stable when records are removed.
#[derive(Debug, Clone)]
pub struct RecordSet {
    records: Vec<EmploymentRecord>,
    provenance: String,
    persons: Vec<String>,
    firms: Vec<String>,
    person_of: Vec<u32>,
    firm_of: Vec<u32>,
    by_person: Vec<Vec<SpellId>>,
    by_firm: Vec<Vec<SpellId>>,
    start_coord: Vec<f64>,
    end_coord: Vec<Option<f64>>,
}

impl RecordSet {
    pub fn new(records: Vec<EmploymentRecord>, provenance: impl Into<String>) -> Result<Self> {
        let mut errors = Vec::new();
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if let Err(e) = r.validate() {
                errors.push(RowError { line: i + 1, message: strip_kind(&e) });
            } else if !seen.insert((r.person_id.as_str(), r.firm_id.as_str(), r.start_date)) {
                errors.push(RowError {
                    line: i + 1,
                    message: format!(
                        "duplicate key ({}, {}, {})",
                        r.person_id, r.firm_id, r.start_date
                    ),
                });
            }
        }
        if !errors.is_empty() {
            return Err(Error::InvalidRows(errors));
        }
        Ok(Self::build(records, provenance.into()))
    }

    fn build(records: Vec<EmploymentRecord>, provenance: String) -> Self {
        let persons: Vec<String> = records
            .iter()
            .map(|r| r.person_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let firms: Vec<String> = records
            .iter()
            .map(|r| r.firm_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let pidx: HashMap<&str, u32> =
            persons.iter().enumerate().map(|(i, p)| (p.as_str(), i as u32)).collect();
        let fidx: HashMap<&str, u32> =
            firms.iter().enumerate().map(|(i, f)| (f.as_str(), i as u32)).collect();

        let person_of: Vec<u32> = records.iter().map(|r| pidx[r.person_id.as_str()]).collect();
        let firm_of: Vec<u32> = records.iter().map(|r| fidx[r.firm_id.as_str()]).collect();
        let mut by_person = vec![Vec::new(); persons.len()];
        let mut by_firm = vec![Vec::new(); firms.len()];
        for i in 0..records.len() {
            by_person[person_of[i] as usize].push(i);
            by_firm[firm_of[i] as usize].push(i);
        }
        let key = |&i: &SpellId| (records[i].start_date, records[i].firm_id.as_str());
        for list in by_person.iter_mut() {
            list.sort_by(|a, b| key(a).cmp(&key(b)).then(a.cmp(b)));
        }
        for list in by_firm.iter_mut() {
            list.sort_by(|a, b| records[*a].start_date.cmp(&records[*b].start_date).then(a.cmp(b)));
        }
        let start_coord = records.iter().map(|r| month_coord(r.start_date)).collect();
        let end_coord = records.iter().map(|r| r.end_date.map(month_coord)).collect();

        RecordSet {
            records,
            provenance,
            persons,
            firms,
            person_of,
            firm_of,
            by_person,
            by_firm,
            start_coord,
            end_coord,
        }
    }

    pub fn records(&self) -> &[EmploymentRecord] {
        &self.records
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&self, spell: SpellId) -> &EmploymentRecord {
        &self.records[spell]
    }

    pub fn n_persons(&self) -> usize {
        self.persons.len()
    }

    pub fn n_firms(&self) -> usize {
        self.firms.len()
    }

    pub fn person_name(&self, p: u32) -> &str {
        &self.persons[p as usize]
    }

    pub fn firm_name(&self, f: u32) -> &str {
        &self.firms[f as usize]
    }

    pub fn person_index(&self, id: &str) -> Option<u32> {
        self.persons.binary_search_by(|p| p.as_str().cmp(id)).ok().map(|i| i as u32)
    }

    pub fn firm_index(&self, id: &str) -> Option<u32> {
        self.firms.binary_search_by(|f| f.as_str().cmp(id)).ok().map(|i| i as u32)
    }

    pub fn person_of(&self, spell: SpellId) -> u32 {
        self.person_of[spell]
    }

    pub fn firm_of(&self, spell: SpellId) -> u32 {
        self.firm_of[spell]
    }

    /// Spells of a person ordered by start date.
    pub fn spells_of_person(&self, p: u32) -> &[SpellId] {
        &self.by_person[p as usize]
    }

    /// Spells at a firm ordered by start date.
    pub fn spells_of_firm(&self, f: u32) -> &[SpellId] {
        &self.by_firm[f as usize]
    }

    pub fn start_coord(&self, spell: SpellId) -> f64 {
        self.start_coord[spell]
    }

    /// End coordinate as visible on `snapshot` (later ends are not yet known).
    pub fn end_coord_asof(&self, spell: SpellId, snapshot: NaiveDate) -> Option<f64> {
        match self.records[spell].end_date {
            Some(e) if e <= snapshot => self.end_coord[spell],
            _ => None,
        }
    }

    /// Copy of the registry as it would have looked on `date`: later spells are
    /// dropped and later end dates are blanked.
    pub fn truncated_at(&self, date: NaiveDate) -> RecordSet {
        let records = self
            .records
            .iter()
            .filter(|r| r.start_date <= date)
            .map(|r| {
                let mut r = r.clone();
                if r.end_date.is_some_and(|e| e > date) {
                    r.end_date = None;
                }
                r
            })
            .collect();
        Self::build(records, format!("{} (as of {date})", self.provenance))
    }
}

fn strip_kind(e: &Error) -> String {
    match e {
        Error::InvalidArgument(m) => m.clone(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "ndjson" => Ok(Format::Jsonl),
            other => Err(Error::arg(format!("unknown format `{other}`"))),
        }
    }
}

pub const CSV_COLUMNS: [&str; 7] =
    ["person_id", "firm_id", "role", "start_date", "end_date", "gender", "region"];

#[derive(Debug, Default, Serialize, Deserialize)]
struct RawRow {
    person_id: String,
    firm_id: String,
    #[serde(default)]
    role: Option<String>,
    start_date: String,
    #[serde(default)]
    end_date: Option<String>,
    #[serde(default)]
    gender: Option<String>,
    #[serde(default)]
    region: Option<String>,
}

fn non_empty(s: Option<&str>) -> Option<&str> {
    s.map(str::trim).filter(|s| !s.is_empty())
}

impl RawRow {
    fn into_record(self) -> Result<EmploymentRecord> {
        let rec = EmploymentRecord {
            person_id: self.person_id.trim().to_string(),
            firm_id: self.firm_id.trim().to_string(),
            role: Role::from_token(self.role.as_deref().unwrap_or(""))?,
            start_date: parse_date(&self.start_date)?,
            end_date: non_empty(self.end_date.as_deref()).map(parse_date).transpose()?,
            gender: Gender::from_token(self.gender.as_deref().unwrap_or(""))?,
            region: non_empty(self.region.as_deref()).map(str::to_string),
        };
        rec.validate()?;
        Ok(rec)
    }

    fn from_record(r: &EmploymentRecord) -> Self {
        RawRow {
            person_id: r.person_id.clone(),
            firm_id: r.firm_id.clone(),
            role: Some(r.role.token().to_string()),
            start_date: r.start_date.to_string(),
            end_date: Some(r.end_date.map(|d| d.to_string()).unwrap_or_default()),
            gender: Some(r.gender.map(|g| g.token().to_string()).unwrap_or_default()),
            region: Some(r.region.clone().unwrap_or_default()),
        }
    }
}

/// Parse a registry export. Every invalid row is reported with its line number;
/// a malformed header aborts immediately.
pub fn parse_records<R: Read>(source: R, format: Format, provenance: &str) -> Result<RecordSet> {
    let mut rows: Vec<(usize, Result<EmploymentRecord>)> = Vec::new();
    match format {
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
            let headers = rdr.headers().map_err(|e| Error::MalformedHeader(e.to_string()))?.clone();
            let names: Vec<&str> = headers.iter().map(str::trim).collect();
            if names != CSV_COLUMNS {
                return Err(Error::MalformedHeader(format!(
                    "expected `{}`, got `{}`",
                    CSV_COLUMNS.join(","),
                    names.join(",")
                )));
            }
            for (i, row) in rdr.records().enumerate() {
                let line = row.as_ref().ok().and_then(|r| r.position()).map_or(i + 2, |p| p.line() as usize);
                let parsed = row
                    .map_err(|e| Error::arg(e.to_string()))
                    .and_then(|r| r.deserialize::<RawRow>(Some(&headers)).map_err(|e| Error::arg(e.to_string())))
                    .and_then(RawRow::into_record);
                rows.push((line, parsed));
            }
        }
        Format::Jsonl => {
            for (i, line) in BufReader::new(source).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed = serde_json::from_str::<RawRow>(&line)
                    .map_err(|e| Error::arg(e.to_string()))
                    .and_then(RawRow::into_record);
                rows.push((i + 1, parsed));
            }
        }
    }

    let mut errors = Vec::new();
    let mut records = Vec::with_capacity(rows.len());
    let mut seen: HashSet<(String, String, NaiveDate)> = HashSet::new();
    for (line, r) in rows {
        match r {
            Ok(rec) => {
                if !seen.insert((rec.person_id.clone(), rec.firm_id.clone(), rec.start_date)) {
                    errors.push(RowError {
                        line,
                        message: format!(
                            "duplicate key ({}, {}, {})",
                            rec.person_id, rec.firm_id, rec.start_date
                        ),
                    });
                } else {
                    records.push(rec);
                }
            }
            Err(e) => errors.push(RowError { line, message: strip_kind(&e) }),
        }
    }
    if !errors.is_empty() {
        return Err(Error::InvalidRows(errors));
    }
    Ok(RecordSet::build(records, provenance.to_string()))
}

pub fn write_records<W: Write>(rs: &RecordSet, sink: W, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            for r in rs.records() {
                w.serialize(RawRow::from_record(r))?;
            }
            if rs.is_empty() {
                w.write_record(CSV_COLUMNS)?;
            }
            w.flush()?;
        }
        Format::Jsonl => {
            let mut sink = sink;
            for r in rs.records() {
                serde_json::to_writer(&mut sink, &RawRow::from_record(r))?;
                sink.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

/// Monthly snapshot index with active spell sets and next-month turnover labels.
#[derive(Debug, Clone)]
pub struct TemporalGrid {
    start: MonthIndex,
    end: MonthIndex,
    active: Vec<Vec<SpellId>>,
    labels: Vec<Vec<bool>>,
}

pub fn build_temporal_grid(rs: &RecordSet, start: MonthIndex, end: MonthIndex) -> Result<TemporalGrid> {
    if start > end {
        return Err(Error::arg(format!("grid start {start} is after end {end}")));
    }
    let n = (end.0 - start.0 + 1) as usize;
    let mut active = vec![Vec::new(); n];
    let mut labels = vec![Vec::new(); n];
    for (id, r) in rs.records().iter().enumerate() {
        // Active months are [month(start), month(end) - 1].
        let first = MonthIndex::of_date(r.start_date).max(start);
        let last_active = r.end_date.map(|e| MonthIndex::of_date(e).offset(-1));
        let last = last_active.map_or(end, |l| l.min(end));
        let mut m = first;
        while m <= last {
            let slot = (m.0 - start.0) as usize;
            active[slot].push(id);
            labels[slot].push(last_active == Some(m));
            m = m.offset(1);
        }
    }
    Ok(TemporalGrid { start, end, active, labels })
}

impl TemporalGrid {
    pub fn start(&self) -> MonthIndex {
        self.start
    }

    pub fn end(&self) -> MonthIndex {
        self.end
    }

    pub fn n_months(&self) -> usize {
        self.active.len()
    }

    pub fn months(&self) -> impl Iterator<Item = MonthIndex> + '_ {
        (self.start.0..=self.end.0).map(MonthIndex)
    }

    pub fn contains(&self, m: MonthIndex) -> bool {
        self.start <= m && m <= self.end
    }

    fn slot(&self, m: MonthIndex) -> Result<usize> {
        if !self.contains(m) {
            return Err(Error::arg(format!("month {m} outside grid [{}, {}]", self.start, self.end)));
        }
        Ok((m.0 - self.start.0) as usize)
    }

    /// Active spells at `m` in ascending spell order.
    pub fn active(&self, m: MonthIndex) -> Result<&[SpellId]> {
        Ok(&self.active[self.slot(m)?])
    }

    /// Labels aligned with [`TemporalGrid::active`].
    pub fn labels(&self, m: MonthIndex) -> Result<&[bool]> {
        Ok(&self.labels[self.slot(m)?])
    }

    pub fn label(&self, spell: SpellId, m: MonthIndex) -> Option<bool> {
        let slot = self.slot(m).ok()?;
        let pos = self.active[slot].binary_search(&spell).ok()?;
        Some(self.labels[slot][pos])
    }

    pub fn is_active(&self, spell: SpellId, m: MonthIndex) -> bool {
        self.slot(m).is_ok_and(|s| self.active[s].binary_search(&spell).is_ok())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_professionals: usize,
    pub n_firms: usize,
    pub n_records: usize,
    /// Median duration of completed spells; `None` when no spell has ended.
    pub median_tenure_years: Option<f64>,
    /// Mean over grid months of positives / actives; `None` when no month has actives.
    pub monthly_turnover_rate: Option<f64>,
    /// Median headcount over (firm, month) pairs with at least one active spell.
    pub median_firm_headcount: Option<f64>,
}

pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) })
}

pub fn registry_stats(rs: &RecordSet, grid: &TemporalGrid) -> DatasetStats {
    let mut tenures: Vec<f64> = rs
        .records()
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.end_date.map(|e| (month_coord(e) - rs.start_coord(i)) / 12.0))
        .collect();

    let mut rates = Vec::new();
    let mut headcounts = Vec::new();
    let mut per_firm: HashMap<u32, HashSet<u32>> = HashMap::new();
    for (act, lab) in grid.active.iter().zip(&grid.labels) {
        if act.is_empty() {
            continue;
        }
        let pos = lab.iter().filter(|&&l| l).count();
        rates.push(pos as f64 / act.len() as f64);
        per_firm.clear();
        for &s in act {
            per_firm.entry(rs.firm_of(s)).or_default().insert(rs.person_of(s));
        }
        headcounts.extend(per_firm.values().map(|p| p.len() as f64));
    }

    DatasetStats {
        n_professionals: rs.n_persons(),
        n_firms: rs.n_firms(),
        n_records: rs.len(),
        median_tenure_years: median(&mut tenures),
        monthly_turnover_rate: if rates.is_empty() {
            None
        } else {
            Some(rates.iter().sum::<f64>() / rates.len() as f64)
        },
        median_firm_headcount: median(&mut headcounts),
    }
}
