//! Lowers raw records onto a generalization profile: towers become zones of
//! the chosen level, timestamps become slice indexes of the chosen width.

use chrono::NaiveDateTime;

use crate::error::{Error, Result};
use crate::exec;
use crate::model::{
    local_midnight, point_key, GeneralizationProfile, GeneralizedDataset, Point, RawDataset,
    RawRecord, SpatialHierarchy,
};

/// The zone `tower_id` falls in at `level`.
pub fn generalize_spatial<'h>(
    hierarchy: &'h SpatialHierarchy,
    tower_id: &str,
    level: &str,
) -> Result<&'h str> {
    hierarchy.zone(tower_id, level)
}

/// Slice index of `timestamp`, counting slices of `granularity_hours` from
/// local midnight of the date `period_start` falls on. Slices tile whole days,
/// so an index identifies both the day and the window within it.
pub fn generalize_temporal(
    timestamp: NaiveDateTime,
    granularity_hours: u32,
    period_start: NaiveDateTime,
) -> Result<u32> {
    if granularity_hours == 0 || 24 % granularity_hours != 0 {
        return Err(Error::InvalidConfig(format!(
            "temporal granularity {granularity_hours}h does not divide 24h"
        )));
    }
    if timestamp < period_start {
        return Err(Error::BeforePeriod {
            timestamp: timestamp.to_string(),
            start: period_start.to_string(),
        });
    }
    let minutes = (timestamp - local_midnight(period_start)).num_minutes() as u64;
    Ok((minutes / (granularity_hours as u64 * 60)) as u32)
}

/// Maps one record to its generalized point under `profile`.
pub fn generalize_record(
    hierarchy: &SpatialHierarchy,
    record: &RawRecord,
    profile: &GeneralizationProfile,
    period_start: NaiveDateTime,
) -> Result<Point> {
    let zone = generalize_spatial(hierarchy, &record.tower_id, &profile.spatial_level)?;
    let slice = generalize_temporal(record.timestamp, profile.temporal_hours, period_start)?;
    Ok(Point::new(zone, slice))
}

/// A raw dataset compiled against a hierarchy, ready to be generalized under
/// any profile of that hierarchy. Compiling once and reusing it across a grid
/// of profiles avoids re-resolving tower ids and timestamps every time.
pub struct Generalizer<'h> {
    hierarchy: &'h SpatialHierarchy,
    user_ids: Vec<String>,
    /// Per-user range into `events`.
    spans: Vec<(u64, u32)>,
    /// `(tower slot, minutes since the period anchor)` per record.
    events: Vec<(u32, u32)>,
}

impl<'h> Generalizer<'h> {
    /// Fails on the first tower without a hierarchy entry, so a dataset with
    /// any unmappable record never produces partial output.
    pub fn new(raw: &RawDataset, hierarchy: &'h SpatialHierarchy) -> Result<Self> {
        let anchor = local_midnight(raw.period_start());
        let mut user_ids = Vec::with_capacity(raw.n_users());
        let mut spans = Vec::with_capacity(raw.n_users());
        let mut events = Vec::with_capacity(raw.n_records() as usize);
        for (user_id, records) in raw.groups() {
            let start = events.len() as u64;
            for record in records {
                let slot = hierarchy
                    .tower_slot(&record.tower_id)
                    .ok_or_else(|| Error::UnmappedTower {
                        tower: record.tower_id.clone(),
                        level: hierarchy.levels()[0].clone(),
                    })?;
                let minutes = (record.timestamp - anchor).num_minutes() as u32;
                events.push((slot, minutes));
            }
            user_ids.push(user_id.to_string());
            spans.push((start, records.len() as u32));
        }
        Ok(Self {
            hierarchy,
            user_ids,
            spans,
            events,
        })
    }

    pub fn generalize(&self, profile: &GeneralizationProfile) -> Result<GeneralizedDataset> {
        let level = self
            .hierarchy
            .level_index(&profile.spatial_level)
            .ok_or_else(|| Error::UnknownLevel(profile.spatial_level.clone()))?;
        if profile.temporal_hours == 0 || 24 % profile.temporal_hours != 0 {
            return Err(Error::InvalidConfig(format!(
                "temporal granularity {}h does not divide 24h",
                profile.temporal_hours
            )));
        }
        let assignment = self.hierarchy.assignment_at(level);
        let divisor = profile.temporal_hours * 60;

        let per_user: Vec<Vec<(u64, u32)>> = exec::map_indexed(self.user_ids.len(), |i| {
            let (start, len) = self.spans[i];
            let events = &self.events[start as usize..start as usize + len as usize];
            let mut keys: Vec<u64> = events
                .iter()
                .map(|&(tower, minutes)| point_key(assignment[tower as usize], minutes / divisor))
                .collect();
            keys.sort_unstable();
            let mut keyed: Vec<(u64, u32)> = Vec::new();
            for key in keys {
                match keyed.last_mut() {
                    Some(last) if last.0 == key => last.1 += 1,
                    _ => keyed.push((key, 1)),
                }
            }
            keyed
        });

        let users = self
            .user_ids
            .iter()
            .cloned()
            .zip(per_user)
            .collect::<Vec<_>>();
        GeneralizedDataset::from_keyed(
            profile.clone(),
            self.hierarchy.zones_at(level),
            users,
        )
    }
}

/// One-shot convenience over [`Generalizer`].
pub fn generalize_dataset(
    raw: &RawDataset,
    profile: &GeneralizationProfile,
    hierarchy: &SpatialHierarchy,
) -> Result<GeneralizedDataset> {
    Generalizer::new(raw, hierarchy)?.generalize(profile)
}
