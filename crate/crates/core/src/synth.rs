//! Synthetic CDR generation for benchmarks and end-to-end tests. Per-user
//! call volumes are log-normal, calls land on a small set of personal anchor
//! towers with Zipf-decaying preference, and call times follow a diurnal
//! profile. Every user draws from an own seeded stream, so output is
//! identical under any thread count.

use chrono::{Duration, NaiveDate, NaiveTime};
use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use crate::error::{Error, Result};
use crate::exec;
use crate::model::{RawDataset, RawRecord, SpatialHierarchy};
use crate::seed::indexed_rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSpec {
    pub name: String,
    pub zones: u32,
}

impl LevelSpec {
    pub fn new(name: impl Into<String>, zones: u32) -> Self {
        Self {
            name: name.into(),
            zones,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_users: u32,
    pub n_towers: u32,
    /// Zone counts per level, finest to coarsest, each no larger than the
    /// previous.
    pub levels: Vec<LevelSpec>,
    pub period_days: u32,
    pub period_start: NaiveDate,
    /// Median of the per-user call count distribution.
    pub calls_median: f64,
    /// Log-scale sigma of the call count distribution.
    pub calls_sigma: f64,
    pub anchors_per_user: u32,
    /// Decay of anchor preference by rank.
    pub zipf_exponent: f64,
    /// Relative call volume per hour of day.
    pub hourly_weights: [f64; 24],
    pub timezone: String,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 1000,
            n_towers: 2130,
            levels: vec![
                LevelSpec::new("zip", 2130),
                LevelSpec::new("district", 156),
                LevelSpec::new("municipality", 56),
            ],
            period_days: 30,
            period_start: NaiveDate::from_ymd_opt(2013, 3, 1).expect("valid date"),
            calls_median: 50.0,
            calls_sigma: 1.0,
            anchors_per_user: 5,
            zipf_exponent: 1.0,
            hourly_weights: [
                0.2, 0.1, 0.1, 0.1, 0.1, 0.2, 0.4, 0.8, 1.2, 1.5, 1.6, 1.7, 1.8, 1.7, 1.6, 1.6,
                1.7, 1.9, 2.0, 1.8, 1.4, 1.0, 0.6, 0.3,
            ],
            timezone: "UTC".into(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_users == 0 {
            return fail("n_users must be positive".into());
        }
        if self.n_towers == 0 {
            return fail("n_towers must be positive".into());
        }
        if self.levels.is_empty() {
            return fail("at least one hierarchy level is required".into());
        }
        for (i, level) in self.levels.iter().enumerate() {
            if level.name.is_empty() {
                return fail("empty level name".into());
            }
            if self.levels[..i].iter().any(|l| l.name == level.name) {
                return fail(format!("duplicate level `{}`", level.name));
            }
            if level.zones == 0 {
                return fail(format!("level `{}` has zero zones", level.name));
            }
        }
        if self.levels[0].zones > self.n_towers {
            return fail(format!(
                "finest level has {} zones for {} towers",
                self.levels[0].zones, self.n_towers
            ));
        }
        if self.levels.windows(2).any(|w| w[1].zones > w[0].zones) {
            return fail("zone counts must not grow toward coarser levels".into());
        }
        if self.period_days == 0 {
            return fail("period_days must be positive".into());
        }
        if !self.calls_median.is_finite() || self.calls_median <= 0.0 {
            return fail("calls_median must be positive".into());
        }
        if !self.calls_sigma.is_finite() || self.calls_sigma < 0.0 {
            return fail("calls_sigma must be non-negative".into());
        }
        if self.anchors_per_user == 0 || self.anchors_per_user > self.n_towers {
            return fail(format!(
                "anchors_per_user {} outside [1, {}]",
                self.anchors_per_user, self.n_towers
            ));
        }
        if !self.zipf_exponent.is_finite() || self.zipf_exponent < 0.0 {
            return fail("zipf_exponent must be non-negative".into());
        }
        if self.hourly_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return fail("hourly weights must be non-negative".into());
        }
        if self.hourly_weights.iter().sum::<f64>() <= 0.0 {
            return fail("hourly weights must not all be zero".into());
        }
        if self.timezone.is_empty() {
            return fail("empty timezone".into());
        }
        Ok(())
    }
}

fn digits(n: u32) -> usize {
    (n.max(1) as f64).log10().floor() as usize + 1
}

fn user_id(index: u32) -> String {
    format!("u{index:06}")
}

/// Random nested hierarchy: towers spread surjectively over the finest zones,
/// each zone level spread surjectively over the next coarser one.
fn build_hierarchy(config: &SynthConfig) -> Result<SpatialHierarchy> {
    let mut rng = indexed_rng(config.seed, "hierarchy", 0);
    let tower_width = digits(config.n_towers - 1).max(4);
    let towers: Vec<String> = (0..config.n_towers)
        .map(|i| format!("t{i:0tower_width$}"))
        .collect();

    let surjection = |count: u32, onto: u32, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<u32> {
        let mut map: Vec<u32> = (0..count).map(|i| i % onto).collect();
        map.shuffle(rng);
        map
    };

    let tower_to_finest = surjection(config.n_towers, config.levels[0].zones, &mut rng);
    let mut parents: Vec<Vec<u32>> = Vec::new();
    for w in config.levels.windows(2) {
        parents.push(surjection(w[0].zones, w[1].zones, &mut rng));
    }

    let zone_name = |level: usize, zone: u32| {
        let spec = &config.levels[level];
        let width = digits(spec.zones - 1).max(2);
        format!("{}_{zone:0width$}", spec.name)
    };

    let rows: Vec<(String, Vec<String>)> = towers
        .iter()
        .enumerate()
        .map(|(ti, tower)| {
            let mut zone = tower_to_finest[ti];
            let mut zones = vec![zone_name(0, zone)];
            for (li, parent) in parents.iter().enumerate() {
                zone = parent[zone as usize];
                zones.push(zone_name(li + 1, zone));
            }
            (tower.clone(), zones)
        })
        .collect();

    SpatialHierarchy::from_rows(
        config.levels.iter().map(|l| l.name.clone()).collect(),
        &rows,
    )
}

/// Generates a dataset and the hierarchy it lives on.
pub fn generate(config: &SynthConfig) -> Result<(RawDataset, SpatialHierarchy)> {
    config.validate()?;
    let hierarchy = build_hierarchy(config)?;
    let towers: Vec<&str> = hierarchy.towers().collect();

    let calls = LogNormal::new(config.calls_median.ln(), config.calls_sigma)
        .map_err(|e| Error::InvalidConfig(format!("call count distribution: {e}")))?;
    let hour_dist = WeightedIndex::new(config.hourly_weights)
        .map_err(|e| Error::InvalidConfig(format!("hourly weights: {e}")))?;
    let anchor_weights: Vec<f64> = (0..config.anchors_per_user)
        .map(|rank| 1.0 / ((rank + 1) as f64).powf(config.zipf_exponent))
        .collect();
    let anchor_dist = WeightedIndex::new(&anchor_weights)
        .map_err(|e| Error::InvalidConfig(format!("anchor weights: {e}")))?;
    let midnight = config.period_start.and_time(NaiveTime::MIN);

    let per_user: Vec<Vec<RawRecord>> = exec::map_indexed(config.n_users as usize, |i| {
        let caller = user_id(i as u32);
        let mut rng = indexed_rng(config.seed, "user", i as u64);
        let n_calls = calls.sample(&mut rng).round().clamp(1.0, 1e6) as u32;
        let anchors = rand::seq::index::sample(
            &mut rng,
            config.n_towers as usize,
            config.anchors_per_user as usize,
        );
        let mut records: Vec<RawRecord> = (0..n_calls)
            .map(|_| {
                let tower = towers[anchors.index(anchor_dist.sample(&mut rng))];
                let day = rng.random_range(0..config.period_days);
                let hour = hour_dist.sample(&mut rng) as u32;
                let minute = rng.random_range(0..60u32);
                let timestamp = midnight
                    + Duration::minutes(i64::from(day) * 1440 + i64::from(hour) * 60 + i64::from(minute));
                let receiver = if config.n_users > 1 {
                    let mut j = rng.random_range(0..config.n_users);
                    if j == i as u32 {
                        j = (j + 1) % config.n_users;
                    }
                    Some(user_id(j))
                } else {
                    None
                };
                RawRecord {
                    caller_id: caller.clone(),
                    receiver_id: receiver,
                    tower_id: tower.to_string(),
                    timestamp,
                }
            })
            .collect();
        records.sort_by_key(|r| r.timestamp);
        records
    });

    let dataset = RawDataset::new(
        per_user.into_iter().flatten(),
        midnight,
        midnight + Duration::days(i64::from(config.period_days)),
        config.timezone.clone(),
    )?;
    Ok((dataset, hierarchy))
}
