//! Bootstrap confidence intervals, Pareto dominance over privacy-utility
//! pairs, and assembly of assessment reports.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::io::report::{AssessmentReport, UtilityEntry};
use crate::io::utility::UtilityTable;
use crate::model::GeneralizationProfile;
use crate::reident::{ReidentConfig, RiskMetrics};
use crate::seed::indexed_rng;

pub const DEFAULT_BOOTSTRAP_RESAMPLES: u32 = 1000;
pub const DEFAULT_BOOTSTRAP_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub low: f64,
    pub high: f64,
}

/// Value at quantile `q` of an ascending sample: the smallest element with at
/// least a `q` fraction of the sample at or below it.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.saturating_sub(1).min(sorted.len() - 1)]
}

/// Percentile bootstrap interval for the mean of `values`. Draws `resamples`
/// resamples with replacement (each from its own derived seed, so the result
/// is independent of evaluation order) and takes the alpha/2 and 1 - alpha/2
/// quantiles of the resample means.
pub fn bootstrap_ci(
    values: &[f64],
    resamples: u32,
    alpha: f64,
    seed: u64,
) -> Result<ConfidenceInterval> {
    if values.is_empty() {
        return Err(Error::EmptyInput("bootstrap sample"));
    }
    if resamples == 0 {
        return Err(Error::InvalidConfig("bootstrap resamples must be positive".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "bootstrap alpha {alpha} outside (0, 1)"
        )));
    }
    let n = values.len();
    let mut means: Vec<f64> = exec::map_indexed(resamples as usize, |b| {
        let mut rng = indexed_rng(seed, "bootstrap", b as u64);
        let sum: f64 = (0..n).map(|_| values[rng.random_range(0..n)]).sum();
        sum / n as f64
    });
    means.sort_unstable_by(f64::total_cmp);
    Ok(ConfidenceInterval {
        low: quantile(&means, alpha / 2.0),
        high: quantile(&means, 1.0 - alpha / 2.0),
    })
}

/// One profile placed on the privacy-utility plane. Higher is better on both
/// axes; `privacy` is the information ratio r.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub profile: GeneralizationProfile,
    pub utility: f64,
    pub privacy: f64,
}

impl ParetoPoint {
    pub fn new(profile: GeneralizationProfile, utility: f64, privacy: f64) -> Result<Self> {
        if !utility.is_finite() || !privacy.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "non-finite coordinates ({utility}, {privacy}) for {profile}"
            )));
        }
        Ok(Self {
            profile,
            utility,
            privacy,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominatedPoint {
    pub point: ParetoPoint,
    /// A nondominated profile that is at least as good on both axes and
    /// strictly better on one.
    pub dominated_by: GeneralizationProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPartition {
    pub nondominated: Vec<ParetoPoint>,
    pub dominated: Vec<DominatedPoint>,
}

fn dominates(a: &ParetoPoint, b: &ParetoPoint) -> bool {
    a.utility >= b.utility
        && a.privacy >= b.privacy
        && (a.utility > b.utility || a.privacy > b.privacy)
}

/// Splits points into the Pareto front and the dominated rest. Ties on both
/// axes dominate neither way, so equal points land on the front together.
/// Each dominated point names one front witness: the dominating front point
/// with the greatest utility (privacy, then profile name break ties).
pub fn pareto_front(points: &[ParetoPoint]) -> ParetoPartition {
    let is_dominated: Vec<bool> = points
        .iter()
        .map(|p| points.iter().any(|q| dominates(q, p)))
        .collect();
    let nondominated: Vec<ParetoPoint> = points
        .iter()
        .zip(&is_dominated)
        .filter(|(_, &d)| !d)
        .map(|(p, _)| p.clone())
        .collect();
    let dominated = points
        .iter()
        .zip(&is_dominated)
        .filter(|(_, &d)| d)
        .map(|(p, _)| {
            let witness = nondominated
                .iter()
                .filter(|q| dominates(q, p))
                .max_by(|a, b| {
                    a.utility
                        .total_cmp(&b.utility)
                        .then(a.privacy.total_cmp(&b.privacy))
                        .then_with(|| a.profile.cmp(&b.profile))
                })
                .expect("a dominated point is dominated by some front point");
            DominatedPoint {
                point: p.clone(),
                dominated_by: witness.profile.clone(),
            }
        })
        .collect();
    ParetoPartition {
        nondominated,
        dominated,
    }
}

/// Bundles per-profile metrics with optional utility scores and, when asked,
/// the Pareto partition of the (utility, r) plane.
pub fn build_report(
    config: &ReidentConfig,
    metrics: Vec<RiskMetrics>,
    utilities: Option<&UtilityTable>,
    pareto: bool,
) -> Result<AssessmentReport> {
    let pareto_partition = if pareto {
        let table = utilities.ok_or_else(|| {
            Error::InvalidConfig("pareto analysis requires utility scores".into())
        })?;
        let points = metrics
            .iter()
            .map(|m| {
                let score = table
                    .get(&m.profile)
                    .ok_or_else(|| Error::MissingUtility(m.profile.short_label()))?;
                let r = m.r.ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "{} has no information ratio (every user censored)",
                        m.profile
                    ))
                })?;
                ParetoPoint::new(m.profile.clone(), score.score, r)
            })
            .collect::<Result<Vec<_>>>()?;
        Some(pareto_front(&points))
    } else {
        None
    };

    let utility_entries = utilities.map(|table| {
        table
            .entries()
            .map(|(profile, score)| UtilityEntry {
                profile: profile.clone(),
                score: score.score,
                ci: score.ci,
            })
            .collect()
    });

    Ok(AssessmentReport {
        config: config.clone(),
        metrics,
        utilities: utility_entries,
        pareto: pareto_partition,
    })
}
