//! Tabulated study results: rows of (control value, error, uncertainty,
//! extras), pass/fail verdicts, and an environment fingerprint. One type
//! serves every study; the column list fixes the CSV layout per study.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SviError};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Verdict {
    /// name of the acceptance criterion this verdict implements
    pub criterion: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Fingerprint {
    pub master_seed: u64,
    pub dt: f64,
    pub version: String,
}

impl Fingerprint {
    pub fn new(master_seed: u64, dt: f64) -> Self {
        Fingerprint { master_seed, dt, version: env!("CARGO_PKG_VERSION").to_string() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConvergenceReport {
    pub study: String,
    /// name of the control column (dt, epsilon, iteration, ...)
    pub control: String,
    /// CSV column order; every column must be present in every row
    pub columns: Vec<String>,
    pub rows: Vec<BTreeMap<String, f64>>,
    pub verdicts: Vec<Verdict>,
    pub fingerprint: Fingerprint,
}

impl ConvergenceReport {
    pub fn new(
        study: impl Into<String>,
        control: impl Into<String>,
        columns: Vec<String>,
        fingerprint: Fingerprint,
    ) -> Self {
        ConvergenceReport {
            study: study.into(),
            control: control.into(),
            columns,
            rows: Vec::new(),
            verdicts: Vec::new(),
            fingerprint,
        }
    }

    pub fn push_row(&mut self, row: BTreeMap<String, f64>) -> Result<()> {
        for c in &self.columns {
            if !row.contains_key(c) {
                return Err(SviError::InvalidSpec(format!("report row missing column {c}")));
            }
        }
        self.rows.push(row);
        self.sort_rows();
        Ok(())
    }

    fn sort_rows(&mut self) {
        let control = self.control.clone();
        self.rows.sort_by(|a, b| {
            a.get(&control)
                .copied()
                .unwrap_or(f64::NAN)
                .partial_cmp(&b.get(&control).copied().unwrap_or(f64::NAN))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    }

    pub fn push_verdict(&mut self, criterion: impl Into<String>, pass: bool, detail: String) {
        self.verdicts.push(Verdict { criterion: criterion.into(), pass, detail });
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// Bit-stable CSV: header line then one row per entry, shortest
    /// round-trip decimal formatting for every value.
    pub fn csv_string(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> =
                self.columns.iter().map(|c| format!("{}", row[c])).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| SviError::InvalidSpec(format!("report serialization failed: {e}")))
    }
}

/// Parses the numeric table back out of the CSV text (header + rows).
pub fn parse_csv_table(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| SviError::InvalidSpec("empty csv".into()))?
        .split(',')
        .map(|s| s.to_string())
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| SviError::InvalidSpec(format!("bad csv value {v}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(SviError::InvalidSpec("ragged csv row".into()));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> ConvergenceReport {
        let mut r = ConvergenceReport::new(
            "demo",
            "epsilon",
            vec!["epsilon".into(), "error".into(), "std_error".into()],
            Fingerprint::new(42, 1e-3),
        );
        for (e, err) in [(0.5, 0.3), (0.1, 0.09), (0.02, 0.011)] {
            let mut row = BTreeMap::new();
            row.insert("epsilon".to_string(), e);
            row.insert("error".to_string(), err);
            row.insert("std_error".to_string(), err * 0.05);
            r.push_row(row).unwrap();
        }
        r
    }

    #[test]
    fn rows_sorted_by_control() {
        let r = sample_report();
        let eps: Vec<f64> = r.rows.iter().map(|row| row["epsilon"]).collect();
        assert_eq!(eps, vec![0.02, 0.1, 0.5]);
    }

    #[test]
    fn csv_shape() {
        let r = sample_report();
        let csv = r.csv_string();
        assert_eq!(csv.lines().count(), 4);
        let empty = ConvergenceReport::new(
            "demo",
            "dt",
            vec!["dt".into()],
            Fingerprint::new(1, 0.1),
        );
        assert_eq!(empty.csv_string().lines().count(), 1);
    }

    #[test]
    fn csv_json_round_trip_equal_values() {
        let r = sample_report();
        let (cols, rows) = parse_csv_table(&r.csv_string()).unwrap();
        let from_json: ConvergenceReport = serde_json::from_str(&r.json_string().unwrap()).unwrap();
        assert_eq!(cols, r.columns);
        for (parsed, original) in rows.iter().zip(&from_json.rows) {
            for (c, v) in cols.iter().zip(parsed) {
                assert_eq!(*v, original[c], "column {c}");
            }
        }
        assert_eq!(from_json, r);
    }

    #[test]
    fn missing_column_rejected() {
        let mut r = sample_report();
        let mut row = BTreeMap::new();
        row.insert("epsilon".to_string(), 0.9);
        assert!(r.push_row(row).is_err());
    }
}
