#![allow(dead_code)]

use chrono::{Datelike, NaiveDate};
use churnet::registry::{EmploymentRecord, RecordSet, Role};

pub fn d(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

pub fn rec(p: &str, f: &str, start: &str, end: Option<&str>) -> EmploymentRecord {
    EmploymentRecord {
        person_id: p.into(),
        firm_id: f.into(),
        role: Role::Representative,
        start_date: d(start),
        end_date: end.map(d),
        gender: None,
        region: None,
    }
}

pub fn set(records: Vec<EmploymentRecord>) -> RecordSet {
    RecordSet::new(records, "test").unwrap()
}

/// Build records from (person, firm, start day offset, optional length in days)
/// relative to `origin`; duplicate keys are dropped.
pub fn from_offsets(origin: NaiveDate, spells: &[(u8, u8, u32, Option<u32>)]) -> RecordSet {
    let mut seen = std::collections::HashSet::new();
    let records = spells
        .iter()
        .filter_map(|&(p, f, s, len)| {
            let start = origin + chrono::Days::new(s as u64);
            seen.insert((p, f, start)).then(|| EmploymentRecord {
                person_id: format!("p{p}"),
                firm_id: format!("f{f}"),
                role: Role::Representative,
                start_date: start,
                end_date: len.map(|l| start + chrono::Days::new(l.max(1) as u64)),
                gender: None,
                region: None,
            })
        })
        .collect();
    set(records)
}

pub fn days_in_month(date: NaiveDate) -> f64 {
    churnet::registry::MonthIndex::of_date(date).snapshot_date().day0() as f64 + 1.0
}
