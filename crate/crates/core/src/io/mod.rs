//! Ingestion and serialization: CDR streams, spatial hierarchy maps, utility
//! score tables, and assessment reports.

pub mod cdr;
pub mod report;
pub mod spatial;
pub mod utility;

pub use cdr::{parse_cdr, write_cdr, CdrSchemaConfig, ColumnSpec};
pub use report::{
    read_report_json, write_report, write_unicity_report, AssessmentReport, ReportFormat,
    UnicityReport, UnicityRow, UtilityEntry,
};
pub use spatial::{parse_spatial_map, write_spatial_map};
pub use utility::{parse_utility_scores, UtilityScore, UtilityTable};
