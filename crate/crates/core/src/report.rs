//! Canonical text forms for reports.
//!
//! Structured reports are JSON with lexicographically sorted keys, two-space
//! indentation and a trailing newline; floats use the shortest round-trip
//! representation. Equal values always serialize to identical bytes.

use serde::Serialize;

use crate::chronology::{CovarianceReport, EstimatedTable};
use crate::error::{Error, Result};
use crate::quantum::{BlochSetting, CorrelationTable};

pub fn to_canonical<T: Serialize>(value: &T) -> Result<String> {
    // `Value` objects are B-tree maps, which sorts every level of keys.
    let v = serde_json::to_value(value).map_err(|e| Error::Io(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_string(f: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    f(&mut w).map_err(|e| Error::Io(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn direction_fields(s: &BlochSetting) -> [String; 3] {
    s.direction().map(|c| c.to_string())
}

/// One row per setting pair: indices, directions, then `P(++), P(+-),
/// P(-+), P(--)`, plus standard errors when given.
pub fn correlation_table_csv(table: &CorrelationTable, std_errors: Option<&[[f64; 4]]>) -> Result<String> {
    csv_string(|w| {
        let mut header: Vec<&str> = vec![
            "a_index", "b_index", "a_x", "a_y", "a_z", "b_x", "b_y", "b_z", "p_pp", "p_pm", "p_mp", "p_mm",
        ];
        if std_errors.is_some() {
            header.extend(["se_pp", "se_pm", "se_mp", "se_mm"]);
        }
        w.write_record(&header)?;
        let nb = table.b_settings().len();
        for (k, cell) in table.cells().iter().enumerate() {
            let (a, b) = cell.settings();
            let mut row = vec![(k / nb).to_string(), (k % nb).to_string()];
            row.extend(direction_fields(&a));
            row.extend(direction_fields(&b));
            row.extend(cell.probs().iter().map(|p| p.to_string()));
            if let Some(se) = std_errors {
                row.extend(se[k].iter().map(|p| p.to_string()));
            }
            w.write_record(&row)?;
        }
        Ok(())
    })
}

pub fn estimated_table_csv(t: &EstimatedTable) -> Result<String> {
    correlation_table_csv(&t.table, Some(&t.std_errors))
}

/// One row per setting pair with whichever checks the report carries;
/// absent values are empty fields.
pub fn covariance_csv(report: &CovarianceReport) -> Result<String> {
    csv_string(|w| {
        w.write_record([
            "a_index",
            "b_index",
            "max_distribution_diff",
            "divergent_trials",
            "trials",
            "divergence_fraction",
        ])?;
        let nb = report.b_settings.len();
        let pairs = report.a_settings.len() * nb;
        for k in 0..pairs {
            let dist = report
                .distribution
                .as_ref()
                .map(|d| d.per_pair[k].to_string())
                .unwrap_or_default();
            let (div, trials, frac) = match &report.realization {
                Some(r) => (
                    r.divergent_per_pair[k].to_string(),
                    r.trials_per_pair.to_string(),
                    r.fraction_per_pair[k].to_string(),
                ),
                None => Default::default(),
            };
            w.write_record([(k / nb).to_string(), (k % nb).to_string(), dist, div, trials, frac])?;
        }
        Ok(())
    })
}
