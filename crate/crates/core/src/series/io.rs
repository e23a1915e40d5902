//! Dataset text format.
//!
//! ```text
//! nn5,daily,1996-03-18
//! T1:13.4,14.7,NA,,18.2
//! T2:...
//! ```
//!
//! The first line carries the dataset id, its granularity and an optional
//! start timestamp shared by all series. Each following line is a series id,
//! a colon, and comma-separated values; `NA` or an empty field marks a
//! missing value. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{Granularity, RawSeries, TimeSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile<T> {
    pub id: String,
    pub granularity: Granularity,
    pub start_timestamp: Option<String>,
    pub series: Vec<RawSeries<T>>,
}

impl<T: Scalar> DatasetFile<T> {
    /// Converts every series, failing on any missing value.
    pub fn into_complete(self) -> Result<Vec<TimeSeries<T>>> {
        self.series.into_iter().map(RawSeries::into_complete).collect()
    }
}

pub fn parse_dataset<T: Scalar>(text: &str) -> Result<DatasetFile<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header line".into(),
    })?;
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if fields.len() < 2 || fields.len() > 3 || fields[0].is_empty() {
        return Err(Error::Parse {
            line: hline,
            message: "header must be `id,granularity,start_timestamp`".into(),
        });
    }
    let granularity: Granularity = fields[1].parse().map_err(|e: Error| Error::Parse {
        line: hline,
        message: e.to_string(),
    })?;
    let start_timestamp = fields
        .get(2)
        .filter(|s| !s.is_empty())
        .map(|s| s.to_string());

    let mut series = Vec::new();
    for (lineno, line) in lines {
        let (id, rest) = line.split_once(':').ok_or_else(|| Error::Parse {
            line: lineno,
            message: "expected `series_id:` prefix".into(),
        })?;
        let id = id.trim();
        if id.is_empty() {
            return Err(Error::Parse {
                line: lineno,
                message: "empty series id".into(),
            });
        }
        let values = rest
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                if tok.is_empty() || tok.eq_ignore_ascii_case("na") {
                    return Ok(None);
                }
                let v: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("bad value `{tok}`"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("non-finite value `{tok}`"),
                    });
                }
                Ok(Some(T::lit(v)))
            })
            .collect::<Result<Vec<_>>>()?;
        series.push(RawSeries {
            id: id.to_string(),
            values,
            start_timestamp: start_timestamp.clone(),
            granularity,
        });
    }
    Ok(DatasetFile {
        id: fields[0].to_string(),
        granularity,
        start_timestamp,
        series,
    })
}

pub fn read_dataset<T: Scalar>(path: &Path) -> Result<DatasetFile<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text)
}

/// Serialises complete series; values use shortest round-trip formatting.
pub fn format_dataset<T: Scalar>(
    id: &str,
    granularity: Granularity,
    start_timestamp: Option<&str>,
    series: &[TimeSeries<T>],
) -> String {
    let mut out = format!(
        "{id},{},{}\n",
        granularity.as_str(),
        start_timestamp.unwrap_or("")
    );
    for s in series {
        let _ = write!(out, "{}:", s.id);
        for (i, v) in s.values.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_dataset<T: Scalar>(
    path: &Path,
    id: &str,
    granularity: Granularity,
    start_timestamp: Option<&str>,
    series: &[TimeSeries<T>],
) -> Result<()> {
    std::fs::write(path, format_dataset(id, granularity, start_timestamp, series))?;
    Ok(())
}
