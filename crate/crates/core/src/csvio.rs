//! Daily-series CSV files.
//!
//! Header is exactly `group,day,avg_revenue` or `group,day,avg_revenue,weekday`.
//! Rows may come in any order; each group's rows are sorted by day. Values are
//! written with Rust's shortest round-trip float formatting, so a written file
//! reloads to the identical series.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::DailySeries;

const BASE_HEADER: [&str; 3] = ["group", "day", "avg_revenue"];

struct Row {
    value: f64,
    weekday: Option<u8>,
}

pub fn load_daily_csv(path: impl AsRef<Path>, log_offset: Option<f64>) -> Result<Vec<DailySeries>> {
    read_daily_csv(File::open(path)?, log_offset)
}

/// Parses daily series, one per distinct group in order of first appearance.
///
/// `log_offset`, when given, is added to every `avg_revenue` before the
/// positivity check so that zero-revenue days can be admitted explicitly.
pub fn read_daily_csv<R: Read>(reader: R, log_offset: Option<f64>) -> Result<Vec<DailySeries>> {
    if let Some(offset) = log_offset {
        if !(offset.is_finite() && offset > 0.0) {
            return Err(Error::InvalidConfig(format!("log offset {offset} must be > 0")));
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        Some(h) => h.map_err(|e| parse_error(1, e))?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
    };
    let fields: Vec<&str> = header.iter().collect();
    let has_weekday = match fields.as_slice() {
        f if f == BASE_HEADER => false,
        [a, b, c, "weekday"] if [*a, *b, *c] == BASE_HEADER => true,
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "header must be 'group,day,avg_revenue[,weekday]', found '{}'",
                    fields.join(",")
                ),
            })
        }
    };
    let width = if has_weekday { 4 } else { 3 };

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, BTreeMap<u32, Row>> = HashMap::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(line, e)
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let group = record[0].to_string();
        if group.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty group label".into(),
            });
        }
        let day: u32 = parse_field(&record[1], "day", line)?;
        if day < 1 {
            return Err(Error::Parse {
                line,
                message: "day must be >= 1".into(),
            });
        }
        let raw: f64 = parse_field(&record[2], "avg_revenue", line)?;
        let value = raw + log_offset.unwrap_or(0.0);
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::NonPositiveResponse {
                line: Some(line),
                group,
                day,
                value: raw,
            });
        }
        let weekday = if has_weekday {
            let w: u8 = parse_field(&record[3], "weekday", line)?;
            if w > 6 {
                return Err(Error::Parse {
                    line,
                    message: format!("weekday {w} outside 0..=6"),
                });
            }
            Some(w)
        } else {
            None
        };

        let rows = groups.entry(group.clone()).or_insert_with(|| {
            order.push(group.clone());
            BTreeMap::new()
        });
        match rows.entry(day) {
            Entry::Occupied(_) => return Err(Error::DuplicateDay { line, group, day }),
            Entry::Vacant(slot) => {
                slot.insert(Row { value, weekday });
            }
        }
    }

    order
        .into_iter()
        .map(|label| {
            let rows = groups.remove(&label).expect("group recorded in order");
            let days: Vec<u32> = rows.keys().copied().collect();
            let values: Vec<f64> = rows.values().map(|r| r.value).collect();
            let weekday = has_weekday.then(|| rows.values().map(|r| r.weekday.unwrap_or(0)).collect());
            DailySeries::new(label.clone(), days, values, weekday).map_err(|e| match e {
                Error::InvalidSeries(msg) => Error::InvalidSeries(format!("group '{label}': {msg}")),
                other => other,
            })
        })
        .collect()
}

fn parse_field<T: std::str::FromStr>(text: &str, name: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    text.parse().map_err(|e| Error::Parse {
        line,
        message: format!("bad {name} '{text}': {e}"),
    })
}

fn parse_error(line: usize, e: csv::Error) -> Error {
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Writes series in the loader's format. Either all or none must carry weekdays.
pub fn write_daily_csv<W: Write>(writer: W, series: &[DailySeries]) -> Result<()> {
    let with_weekday = series.first().is_some_and(|s| s.weekday().is_some());
    if series.iter().any(|s| s.weekday().is_some() != with_weekday) {
        return Err(Error::InvalidSeries(
            "cannot mix series with and without weekdays".into(),
        ));
    }
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    if with_weekday {
        w.write_record(["group", "day", "avg_revenue", "weekday"])
            .map_err(csv_err)?;
    } else {
        w.write_record(BASE_HEADER).map_err(csv_err)?;
    }
    for s in series {
        for (i, (&day, &value)) in s.days().iter().zip(s.values()).enumerate() {
            let mut row = vec![s.group_label().to_string(), day.to_string(), value.to_string()];
            if let Some(weekday) = s.weekday() {
                row.push(weekday[i].to_string());
            }
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_daily_csv(path: impl AsRef<Path>, series: &[DailySeries]) -> Result<()> {
    write_daily_csv(File::create(path)?, series)
}
