use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub point: Vec<f64>,
    pub residuals: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub structure: String,
    pub points: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_point: Option<Vec<PointRecord>>,
}

/// NaN and infinities become `f64::MAX` so a breach stays representable in JSON.
pub fn finite(v: f64) -> f64 {
    if v.is_finite() {
        v.abs()
    } else {
        f64::MAX
    }
}

impl Report {
    /// Single-number check.
    pub fn scalar(check: &str, structure: &str, residual: f64, tolerance: f64) -> Report {
        let r = finite(residual);
        Report {
            check: check.into(),
            structure: structure.into(),
            points: 1,
            max_residual: r,
            tolerance,
            pass: r <= tolerance,
            per_point: None,
        }
    }

    /// Check over sample points; per-point detail is kept when asked or on failure.
    pub fn from_points(check: &str, structure: &str, records: Vec<PointRecord>, tolerance: f64, keep: bool) -> Report {
        let records: Vec<PointRecord> = records
            .into_iter()
            .map(|mut r| {
                r.residuals.values_mut().for_each(|v| *v = finite(*v));
                r
            })
            .collect();
        let max = records.iter().flat_map(|r| r.residuals.values()).cloned().fold(0.0, f64::max);
        let pass = max <= tolerance;
        Report {
            check: check.into(),
            structure: structure.into(),
            points: records.len(),
            max_residual: max,
            tolerance,
            pass,
            per_point: if keep || !pass { Some(records) } else { None },
        }
    }
}

/// A CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn write<W: std::io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Everything one invocation produces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub reports: Vec<Report>,
    pub table: Option<Table>,
    /// Plain text for `report` and `presets`.
    pub text: Option<String>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(&self.reports).expect("reports serialize") + "\n"
    }
}
