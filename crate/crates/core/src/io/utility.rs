//! Utility score tables: an externally supplied quality rating in [1, 10]
//! per generalization profile, optionally with a confidence interval.

use std::collections::BTreeMap;
use std::io::Read;

use crate::error::{Error, Result};
use crate::model::GeneralizationProfile;
use crate::stats::ConfidenceInterval;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityScore {
    pub score: f64,
    pub ci: Option<ConfidenceInterval>,
}

/// At most one score per profile.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UtilityTable {
    entries: BTreeMap<(String, u32), UtilityScore>,
}

impl UtilityTable {
    pub fn insert(&mut self, profile: GeneralizationProfile, score: UtilityScore) -> Result<()> {
        if !(1.0..=10.0).contains(&score.score) {
            return Err(Error::ScoreOutOfRange {
                profile: profile.short_label(),
                score: score.score,
            });
        }
        let key = (profile.spatial_level.clone(), profile.temporal_hours);
        if self.entries.contains_key(&key) {
            return Err(Error::DuplicateProfile(profile.short_label()));
        }
        self.entries.insert(key, score);
        Ok(())
    }

    pub fn get(&self, profile: &GeneralizationProfile) -> Option<&UtilityScore> {
        self.entries
            .get(&(profile.spatial_level.clone(), profile.temporal_hours))
    }

    pub fn entries(&self) -> impl Iterator<Item = (GeneralizationProfile, &UtilityScore)> {
        self.entries.iter().map(|((level, hours), score)| {
            (
                GeneralizationProfile {
                    spatial_level: level.clone(),
                    temporal_hours: *hours,
                },
                score,
            )
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parses a table from delimited text with columns `spatial_level`,
/// `temporal_granularity`, `score`, and optionally `ci_low` and `ci_high`.
pub fn parse_utility_scores<R: Read>(reader: R) -> Result<UtilityTable> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let level_col = col("spatial_level").ok_or_else(|| Error::Parse {
        line: 1,
        message: "no `spatial_level` column".into(),
    })?;
    let hours_col = col("temporal_granularity").ok_or_else(|| Error::Parse {
        line: 1,
        message: "no `temporal_granularity` column".into(),
    })?;
    let score_col = col("score").ok_or_else(|| Error::Parse {
        line: 1,
        message: "no `score` column".into(),
    })?;
    let ci_cols = match (col("ci_low"), col("ci_high")) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        (None, None) => None,
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "ci_low and ci_high must appear together".into(),
            })
        }
    };

    let mut table = UtilityTable::default();
    for row in csv_reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let text = |col: usize, what: &str| -> Result<&str> {
            row.get(col).map(str::trim).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing {what} field"),
            })
        };
        let number = |col: usize, what: &str| -> Result<f64> {
            let raw = text(col, what)?;
            raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("unparseable {what} `{raw}`"),
            })
        };
        let hours: u32 = {
            let raw = text(hours_col, "temporal_granularity")?;
            raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("unparseable temporal_granularity `{raw}`"),
            })?
        };
        let profile = GeneralizationProfile::new(text(level_col, "spatial_level")?, hours)?;
        let ci = ci_cols
            .map(|(lo, hi)| -> Result<ConfidenceInterval> {
                Ok(ConfidenceInterval {
                    low: number(lo, "ci_low")?,
                    high: number(hi, "ci_high")?,
                })
            })
            .transpose()?;
        table.insert(
            profile,
            UtilityScore {
                score: number(score_col, "score")?,
                ci,
            },
        )?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scores_and_intervals() {
        let text = "\
spatial_level,temporal_granularity,score,ci_low,ci_high
zip,1,9.3,9.1,9.5
municipality,24,4.0,3.7,4.3
";
        let table = parse_utility_scores(text.as_bytes()).unwrap();
        assert_eq!(table.len(), 2);
        let zip = GeneralizationProfile::new("zip", 1).unwrap();
        let score = table.get(&zip).unwrap();
        assert_eq!(score.score, 9.3);
        assert_eq!(score.ci.unwrap().low, 9.1);
    }

    #[test]
    fn rejects_out_of_range_scores_naming_the_profile() {
        let text = "spatial_level,temporal_granularity,score\ndistrict,12,11.0\n";
        let err = parse_utility_scores(text.as_bytes()).unwrap_err();
        match err {
            Error::ScoreOutOfRange { profile, score } => {
                assert_eq!(profile, "D12");
                assert_eq!(score, 11.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_profiles() {
        let text = "\
spatial_level,temporal_granularity,score
zip,1,9.0
zip,1,8.0
";
        let err = parse_utility_scores(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DuplicateProfile(p) if p == "Z1"));
    }

    #[test]
    fn lookup_misses_are_none() {
        let table = parse_utility_scores(
            "spatial_level,temporal_granularity,score\nzip,1,9.0\n".as_bytes(),
        )
        .unwrap();
        let missing = GeneralizationProfile::new("district", 12).unwrap();
        assert!(table.get(&missing).is_none());
    }
}
