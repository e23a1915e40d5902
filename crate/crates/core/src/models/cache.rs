//! Per-provider forecast files: header `series_id,h1,...,hH`, one row per series.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Rows of `(series_id, forecasts)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastTable {
    pub horizon: usize,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl ForecastTable {
    pub fn new(horizon: usize, rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if let Some((id, v)) = rows.iter().find(|(_, v)| v.len() != horizon) {
            return Err(Error::Data(format!(
                "series `{id}` has {} forecasts, expected {horizon}",
                v.len()
            )));
        }
        Ok(Self { horizon, rows })
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.rows.iter().find(|(s, _)| s == id).map(|(_, v)| v.as_slice())
    }

    /// Serialises with shortest round-trip decimal formatting.
    pub fn to_text(&self) -> String {
        let mut out = String::from("series_id");
        for j in 1..=self.horizon {
            let _ = write!(out, ",h{j}");
        }
        out.push('\n');
        for (id, values) in &self.rows {
            out.push_str(id);
            for v in values {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty forecast file".into(),
        })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"series_id")
            || cols[1..]
                .iter()
                .enumerate()
                .any(|(j, c)| *c != format!("h{}", j + 1))
        {
            return Err(Error::Parse {
                line: 1,
                message: "header must be `series_id,h1,...,hH`".into(),
            });
        }
        let horizon = cols.len() - 1;
        let mut rows = Vec::new();
        for (i, line) in lines {
            let mut fields = line.split(',').map(str::trim);
            let id = fields.next().unwrap_or_default().to_string();
            let values = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::Parse {
                        line: i + 1,
                        message: format!("bad forecast value `{f}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if values.len() != horizon {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {horizon} values, got {}", values.len()),
                });
            }
            rows.push((id, values));
        }
        Ok(Self { horizon, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout() {
        let t = ForecastTable::new(2, vec![("a".into(), vec![1.5, 2.0])]).unwrap();
        assert_eq!(t.to_text(), "series_id,h1,h2\na,1.5,2\n");
    }

    #[test]
    fn rejects_ragged() {
        assert!(ForecastTable::new(2, vec![("a".into(), vec![1.0])]).is_err());
        assert!(ForecastTable::parse("series_id,h1,h2\na,1\n").is_err());
        assert!(ForecastTable::parse("id,h1\na,1\n").is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_exact(values in prop::collection::vec(-1e12f64..1e12, 1..6)) {
            let h = values.len();
            let t = ForecastTable::new(h, vec![("s1".into(), values)]).unwrap();
            prop_assert_eq!(ForecastTable::parse(&t.to_text()).unwrap(), t);
        }
    }
}
