use std::io::Read;

use serde::Deserialize;

use super::{correlation, CorrelationMethod, PairedSamples};
use crate::error::{Error, Result};

pub const TABLE1_CSV: &str = include_str!("../../tables/table1.csv");
pub const TABLE2_CSV: &str = include_str!("../../tables/table2.csv");

pub const AREA_COLUMNS: [&str; 9] = [
    "t2wi",
    "dwi",
    "cbf",
    "dfm_inf",
    "dfm_total",
    "isomap_inf",
    "isomap_total",
    "lle_inf",
    "lle_total",
];

/// Lesion areas (mm²) of one subject at one time point.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LesionRow {
    pub subject: String,
    pub group: String,
    pub t2wi: f64,
    pub dwi: f64,
    pub cbf: f64,
    pub dfm_inf: f64,
    pub dfm_total: f64,
    pub isomap_inf: f64,
    pub isomap_total: f64,
    pub lle_inf: f64,
    pub lle_total: f64,
    #[serde(default)]
    pub notes: String,
}

impl LesionRow {
    pub fn column(&self, name: &str) -> Option<f64> {
        Some(match name {
            "t2wi" => self.t2wi,
            "dwi" => self.dwi,
            "cbf" => self.cbf,
            "dfm_inf" => self.dfm_inf,
            "dfm_total" => self.dfm_total,
            "isomap_inf" => self.isomap_inf,
            "isomap_total" => self.isomap_total,
            "lle_inf" => self.lle_inf,
            "lle_total" => self.lle_total,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LesionTable {
    pub rows: Vec<LesionRow>,
}

impl LesionTable {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<LesionRow>, _>>()?;
        for r in &rows {
            if let Some(c) = AREA_COLUMNS.iter().find(|c| r.column(c).unwrap() < 0.0) {
                return Err(Error::Format(format!(
                    "subject `{}`: negative area in column `{c}`",
                    r.subject
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn table1() -> Self {
        Self::from_reader(TABLE1_CSV.as_bytes()).expect("bundled table 1 parses")
    }

    pub fn table2() -> Self {
        Self::from_reader(TABLE2_CSV.as_bytes()).expect("bundled table 2 parses")
    }

    /// Group names in order of first appearance.
    pub fn groups(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.group.as_str()) {
                out.push(&r.group);
            }
        }
        out
    }

    pub fn paired(&self, group: &str, col_x: &str, col_y: &str) -> Result<PairedSamples> {
        for c in [col_x, col_y] {
            if !AREA_COLUMNS.contains(&c) {
                return Err(Error::InvalidParameter(format!(
                    "unknown table column `{c}`"
                )));
            }
        }
        let rows: Vec<&LesionRow> = self.rows.iter().filter(|r| r.group == group).collect();
        if rows.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "no rows in group `{group}`"
            )));
        }
        PairedSamples::new(
            rows.iter().map(|r| r.column(col_x).unwrap()).collect(),
            rows.iter().map(|r| r.column(col_y).unwrap()).collect(),
        )?
        .with_labels(rows.iter().map(|r| r.subject.clone()).collect())
    }
}

pub fn table_correlations(
    table: &LesionTable,
    group: &str,
    col_x: &str,
    col_y: &str,
    method: CorrelationMethod,
) -> Result<f64> {
    Ok(correlation(&table.paired(group, col_x, col_y)?, method)?.r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_tables_load() {
        let t1 = LesionTable::table1();
        assert_eq!(t1.rows.len(), 18);
        assert_eq!(t1.groups(), vec!["acute", "subacute", "chronic"]);
        let mc24 = t1.rows.iter().find(|r| r.subject == "mc24").unwrap();
        assert_eq!(mc24.lle_inf, 86.0);
        assert!(mc24.notes.contains("suspect"));
        let t2 = LesionTable::table2();
        assert_eq!(t2.rows.len(), 4);
        assert_eq!(t2.groups(), vec!["clinical_lt8h", "clinical_24h"]);
    }

    #[test]
    fn group_selection() {
        let t1 = LesionTable::table1();
        let p = t1.paired("acute", "dwi", "isomap_inf").unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p.x[0], 32.13);
        assert_eq!(p.labels.as_ref().unwrap()[0], "mc17");
        assert!(t1.paired("acute", "dwi", "nope").is_err());
        assert!(table_correlations(
            &LesionTable::table2(),
            "clinical_24h",
            "t2wi",
            "dwi",
            CorrelationMethod::Pearson
        )
        .is_err());
    }

    #[test]
    fn negative_area_rejected() {
        let csv = "subject,group,t2wi,dwi,cbf,dfm_inf,dfm_total,isomap_inf,isomap_total,lle_inf,lle_total\n\
                   a,acute,1,2,3,4,5,6,7,-8,9\n";
        assert!(LesionTable::from_reader(csv.as_bytes()).is_err());
    }
}
