//! Report serialization. JSON is the lossless form and round-trips through
//! [`read_report_json`]; CSV is a flat per-profile summary with fixed
//! six-decimal fields, empty where a value is absent.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::GeneralizationProfile;
use crate::reident::{ReidentConfig, RiskMetrics, UnicityEstimate};
use crate::stats::{ConfidenceInterval, ParetoPartition};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityEntry {
    pub profile: GeneralizationProfile,
    pub score: f64,
    pub ci: Option<ConfidenceInterval>,
}

/// A full assessment run: the configuration it ran under, per-profile
/// metrics, and the optional utility and Pareto sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub config: ReidentConfig,
    pub metrics: Vec<RiskMetrics>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub utilities: Option<Vec<UtilityEntry>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pareto: Option<ParetoPartition>,
}

fn fixed6(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| format!("{v:.6}"))
}

pub fn write_report_json<W: Write>(mut writer: W, report: &AssessmentReport) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, report)?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn read_report_json<R: Read>(reader: R) -> Result<AssessmentReport> {
    Ok(serde_json::from_reader(reader)?)
}

pub fn write_report_csv<W: Write>(writer: W, report: &AssessmentReport) -> Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer.write_record([
        "profile",
        "c",
        "r",
        "gain",
        "nonreident_fraction",
        "ci_c_low",
        "ci_c_high",
        "ci_r_low",
        "ci_r_high",
    ])?;
    for m in &report.metrics {
        csv_writer.write_record([
            m.profile.to_string(),
            fixed6(m.c),
            fixed6(m.r),
            fixed6(m.gain),
            fixed6(Some(m.nonreident_fraction)),
            fixed6(m.ci_c.map(|ci| ci.low)),
            fixed6(m.ci_c.map(|ci| ci.high)),
            fixed6(m.ci_r.map(|ci| ci.low)),
            fixed6(m.ci_r.map(|ci| ci.high)),
        ])?;
    }
    csv_writer.flush()?;
    Ok(())
}

pub fn write_report<W: Write>(
    writer: W,
    report: &AssessmentReport,
    format: ReportFormat,
) -> Result<()> {
    match format {
        ReportFormat::Json => write_report_json(writer, report),
        ReportFormat::Csv => write_report_csv(writer, report),
    }
}

/// One profile-and-p cell of a unicity run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnicityRow {
    pub profile: GeneralizationProfile,
    pub p: u32,
    pub u_p: Option<f64>,
    pub eligible_users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnicityReport {
    pub seed: u64,
    pub trials: u32,
    pub rows: Vec<UnicityRow>,
}

impl UnicityReport {
    pub fn push(&mut self, profile: &GeneralizationProfile, estimate: UnicityEstimate) {
        self.rows.push(UnicityRow {
            profile: profile.clone(),
            p: estimate.p,
            u_p: estimate.u_p,
            eligible_users: estimate.eligible_users,
        });
    }
}

pub fn write_unicity_report<W: Write>(
    writer: W,
    report: &UnicityReport,
    format: ReportFormat,
) -> Result<()> {
    match format {
        ReportFormat::Json => {
            let mut writer = writer;
            serde_json::to_writer_pretty(&mut writer, report)?;
            writer.write_all(b"\n")?;
            Ok(())
        }
        ReportFormat::Csv => {
            let mut csv_writer = csv::Writer::from_writer(writer);
            csv_writer.write_record(["profile", "p", "u_p", "eligible_users"])?;
            for row in &report.rows {
                csv_writer.write_record([
                    row.profile.to_string(),
                    row.p.to_string(),
                    fixed6(row.u_p),
                    row.eligible_users.to_string(),
                ])?;
            }
            csv_writer.flush()?;
            Ok(())
        }
    }
}
