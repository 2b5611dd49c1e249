//! Domain model: raw call records, spatial hierarchies, generalization
//! profiles, and the indexed form a generalized dataset takes once traces
//! have been built.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use chrono::{NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, NestingViolation, Result};

/// One call detail record: who placed the call, through which antenna, when.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub caller_id: String,
    pub receiver_id: Option<String>,
    pub tower_id: String,
    /// Wall-clock time in the dataset timezone, minute precision.
    pub timestamp: NaiveDateTime,
}

/// A raw event dataset: records grouped per caller plus the observation
/// period they fall in.
#[derive(Debug, Clone)]
pub struct RawDataset {
    groups: BTreeMap<String, Vec<RawRecord>>,
    n_records: u64,
    period_start: NaiveDateTime,
    period_end: NaiveDateTime,
    timezone: String,
}

impl RawDataset {
    /// Groups `records` by caller. Every timestamp must fall in
    /// `[period_start, period_end)`.
    pub fn new(
        records: impl IntoIterator<Item = RawRecord>,
        period_start: NaiveDateTime,
        period_end: NaiveDateTime,
        timezone: impl Into<String>,
    ) -> Result<Self> {
        if period_end <= period_start {
            return Err(Error::InvalidConfig(format!(
                "period end {period_end} not after period start {period_start}"
            )));
        }
        let mut groups: BTreeMap<String, Vec<RawRecord>> = BTreeMap::new();
        let mut n_records = 0u64;
        for record in records {
            if record.caller_id.is_empty() {
                return Err(Error::InvalidRecord("empty caller_id".into()));
            }
            if record.tower_id.is_empty() {
                return Err(Error::InvalidRecord(format!(
                    "empty tower_id for caller `{}`",
                    record.caller_id
                )));
            }
            if record.timestamp < period_start || record.timestamp >= period_end {
                return Err(Error::OutsidePeriod {
                    timestamp: record.timestamp.to_string(),
                    start: period_start.to_string(),
                    end: period_end.to_string(),
                });
            }
            n_records += 1;
            groups
                .entry(record.caller_id.clone())
                .or_default()
                .push(record);
        }
        if groups.is_empty() {
            return Err(Error::EmptyInput("dataset has no records"));
        }
        Ok(Self {
            groups,
            n_records,
            period_start,
            period_end,
            timezone: timezone.into(),
        })
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.groups.keys().map(String::as_str)
    }

    pub fn records_of(&self, user_id: &str) -> Option<&[RawRecord]> {
        self.groups.get(user_id).map(Vec::as_slice)
    }

    /// Per-caller record groups in ascending caller order.
    pub fn groups(&self) -> impl Iterator<Item = (&str, &[RawRecord])> {
        self.groups.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn n_users(&self) -> usize {
        self.groups.len()
    }

    pub fn n_records(&self) -> u64 {
        self.n_records
    }

    pub fn period_start(&self) -> NaiveDateTime {
        self.period_start
    }

    pub fn period_end(&self) -> NaiveDateTime {
        self.period_end
    }

    pub fn timezone(&self) -> &str {
        &self.timezone
    }
}

/// Nested spatial zoning: every tower maps to exactly one zone per level,
/// levels ordered finest to coarsest, and zones of a finer level never
/// straddle two zones of a coarser one.
#[derive(Debug, Clone)]
pub struct SpatialHierarchy {
    levels: Vec<String>,
    towers: Vec<String>,
    tower_slots: HashMap<String, u32>,
    zone_names: Vec<Vec<String>>,
    assignment: Vec<Vec<u32>>,
}

impl SpatialHierarchy {
    /// Builds and validates a hierarchy from per-tower rows. `levels` are
    /// ordered finest to coarsest and each row carries one zone id per level.
    pub fn from_rows(levels: Vec<String>, rows: &[(String, Vec<String>)]) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidConfig("hierarchy has no levels".into()));
        }
        for (i, level) in levels.iter().enumerate() {
            if level.is_empty() {
                return Err(Error::InvalidConfig("empty level name".into()));
            }
            if levels[..i].contains(level) {
                return Err(Error::InvalidConfig(format!("duplicate level `{level}`")));
            }
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput("hierarchy has no towers"));
        }

        let mut per_tower: BTreeMap<&str, &[String]> = BTreeMap::new();
        for (tower, zones) in rows {
            if tower.is_empty() {
                return Err(Error::InvalidRecord("empty tower id".into()));
            }
            if zones.len() != levels.len() {
                return Err(Error::InvalidRecord(format!(
                    "tower `{tower}` has {} zones for {} levels",
                    zones.len(),
                    levels.len()
                )));
            }
            if zones.iter().any(|z| z.is_empty()) {
                return Err(Error::InvalidRecord(format!(
                    "tower `{tower}` has an empty zone id"
                )));
            }
            match per_tower.entry(tower.as_str()) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(zones.as_slice());
                }
                std::collections::btree_map::Entry::Occupied(e) => {
                    if let Some(i) = (0..levels.len()).find(|&i| e.get()[i] != zones[i]) {
                        return Err(Error::InconsistentTower {
                            tower: tower.clone(),
                            level: levels[i].clone(),
                        });
                    }
                }
            }
        }

        let towers: Vec<String> = per_tower.keys().map(|t| t.to_string()).collect();
        let tower_slots: HashMap<String, u32> = towers
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();

        let mut zone_names = Vec::with_capacity(levels.len());
        let mut assignment = Vec::with_capacity(levels.len());
        for li in 0..levels.len() {
            let names: Vec<String> = per_tower
                .values()
                .map(|zones| zones[li].clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let slot_of: HashMap<&str, u32> = names
                .iter()
                .enumerate()
                .map(|(i, z)| (z.as_str(), i as u32))
                .collect();
            let assign: Vec<u32> = per_tower
                .values()
                .map(|zones| slot_of[zones[li].as_str()])
                .collect();
            zone_names.push(names);
            assignment.push(assign);
        }

        // Nesting: within each adjacent level pair, a fine zone must map to a
        // single coarse zone. Checking adjacent pairs covers all pairs by
        // composition.
        for li in 0..levels.len().saturating_sub(1) {
            let mut parent: Vec<Option<(u32, u32)>> = vec![None; zone_names[li].len()];
            for (ti, _) in towers.iter().enumerate() {
                let zone = assignment[li][ti] as usize;
                let coarse = assignment[li + 1][ti];
                match parent[zone] {
                    None => parent[zone] = Some((coarse, ti as u32)),
                    Some((seen, witness)) if seen != coarse => {
                        return Err(Error::NestingViolation(Box::new(NestingViolation {
                            fine_level: levels[li].clone(),
                            coarse_level: levels[li + 1].clone(),
                            zone: zone_names[li][zone].clone(),
                            tower_a: towers[witness as usize].clone(),
                            tower_b: towers[ti].clone(),
                            parent_a: zone_names[li + 1][seen as usize].clone(),
                            parent_b: zone_names[li + 1][coarse as usize].clone(),
                        })));
                    }
                    Some(_) => {}
                }
            }
        }

        Ok(Self {
            levels,
            towers,
            tower_slots,
            zone_names,
            assignment,
        })
    }

    /// Level names, finest to coarsest.
    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn level_index(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }

    pub fn towers(&self) -> impl Iterator<Item = &str> {
        self.towers.iter().map(String::as_str)
    }

    pub fn n_towers(&self) -> usize {
        self.towers.len()
    }

    /// Zone ids of one level, ascending.
    pub fn zones_at(&self, level_index: usize) -> &[String] {
        &self.zone_names[level_index]
    }

    /// The zone a tower falls in at the named level.
    pub fn zone(&self, tower_id: &str, level: &str) -> Result<&str> {
        let li = self
            .level_index(level)
            .ok_or_else(|| Error::UnknownLevel(level.to_string()))?;
        let slot = self
            .tower_slots
            .get(tower_id)
            .ok_or_else(|| Error::UnmappedTower {
                tower: tower_id.to_string(),
                level: level.to_string(),
            })?;
        Ok(&self.zone_names[li][self.assignment[li][*slot as usize] as usize])
    }

    pub(crate) fn tower_slot(&self, tower_id: &str) -> Option<u32> {
        self.tower_slots.get(tower_id).copied()
    }

    pub(crate) fn assignment_at(&self, level_index: usize) -> &[u32] {
        &self.assignment[level_index]
    }
}

/// One cell of the generalization grid: a spatial level crossed with a
/// temporal slice width in hours.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GeneralizationProfile {
    pub spatial_level: String,
    pub temporal_hours: u32,
}

impl GeneralizationProfile {
    /// `temporal_hours` must divide 24 so slices tile whole days.
    pub fn new(spatial_level: impl Into<String>, temporal_hours: u32) -> Result<Self> {
        let spatial_level = spatial_level.into();
        if spatial_level.is_empty() {
            return Err(Error::InvalidConfig("empty spatial level".into()));
        }
        if temporal_hours == 0 || 24 % temporal_hours != 0 {
            return Err(Error::InvalidConfig(format!(
                "temporal granularity {temporal_hours}h does not divide 24h"
            )));
        }
        Ok(Self {
            spatial_level,
            temporal_hours,
        })
    }

    /// Compact tag used in diagnostics: first letter of the level, uppercased,
    /// plus the slice width. "municipality" at 24h becomes "M24".
    pub fn short_label(&self) -> String {
        let initial = self
            .spatial_level
            .chars()
            .next()
            .map(|c| c.to_ascii_uppercase())
            .unwrap_or('?');
        format!("{initial}{}", self.temporal_hours)
    }
}

impl fmt::Display for GeneralizationProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}h", self.spatial_level, self.temporal_hours)
    }
}

/// A generalized observation: zone at the profile's spatial level and the
/// index of the temporal slice (counted from local midnight of the period
/// start).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub zone_id: String,
    pub slice_index: u32,
}

impl Point {
    pub fn new(zone_id: impl Into<String>, slice_index: u32) -> Self {
        Self {
            zone_id: zone_id.into(),
            slice_index,
        }
    }
}

/// The set of distinct points one user visited.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserTrace {
    user_id: String,
    points: BTreeSet<Point>,
}

impl UserTrace {
    pub fn new(user_id: impl Into<String>, points: impl IntoIterator<Item = Point>) -> Result<Self> {
        let user_id = user_id.into();
        let points: BTreeSet<Point> = points.into_iter().collect();
        if points.is_empty() {
            return Err(Error::EmptyTrace(user_id));
        }
        Ok(Self { user_id, points })
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn points(&self) -> &BTreeSet<Point> {
        &self.points
    }

    /// Number of distinct points.
    pub fn size(&self) -> u32 {
        self.points.len() as u32
    }
}

/// Side knowledge an adversary holds about one user: a few points known to
/// lie on that user's trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxPoints {
    pub user_id: String,
    pub points: Vec<Point>,
}

impl AuxPoints {
    pub fn new(user_id: impl Into<String>, points: impl IntoIterator<Item = Point>) -> Result<Self> {
        let user_id = user_id.into();
        let mut points: Vec<Point> = points.into_iter().collect();
        let before = points.len();
        points.sort();
        points.dedup();
        if points.len() != before {
            return Err(Error::InvalidRecord(format!(
                "duplicate aux point for user `{user_id}`"
            )));
        }
        Ok(Self { user_id, points })
    }
}

#[derive(Debug)]
pub(crate) struct TraceEntry {
    /// Point ids, ascending.
    pub point_ids: Vec<u32>,
    /// Raw-record count per point, parallel to `point_ids`. `None` means all
    /// ones.
    pub multiplicities: Option<Vec<u32>>,
    pub raw_records: u32,
}

impl TraceEntry {
    pub fn multiplicity(&self, i: usize) -> u32 {
        self.multiplicities.as_ref().map_or(1, |m| m[i])
    }
}

/// A dataset after generalization: per-user point sets plus the inverted
/// index from points back to users. Immutable once built.
///
/// Postings long enough that intersecting them by merge would be slower than
/// a word-wise AND also carry a slot bitmap; the reidentification walks pick
/// whichever representation is cheaper per step.
#[derive(Debug)]
pub struct GeneralizedDataset {
    profile: GeneralizationProfile,
    user_ids: Vec<String>,
    traces: Vec<TraceEntry>,
    points: Vec<Point>,
    postings: Vec<Vec<u32>>,
    /// Bitmap width in u64 words: ceil(n / 64).
    words: usize,
    /// Per-point index into `wide_bits`, `u32::MAX` for postings without one.
    wide: Vec<u32>,
    /// Concatenated `words`-long bitmaps of the wide postings.
    wide_bits: Vec<u64>,
}

/// Packs a zone slot and slice index into one sortable key. Zone tables are
/// sorted by name, so key order equals `Point` order.
pub(crate) fn point_key(zone_slot: u32, slice_index: u32) -> u64 {
    ((zone_slot as u64) << 32) | slice_index as u64
}

impl GeneralizedDataset {
    /// Core constructor over interned points: `users` holds per-user
    /// `(point_key, raw_count)` pairs referring into `zone_names`, which must
    /// be sorted ascending.
    pub(crate) fn from_keyed(
        profile: GeneralizationProfile,
        zone_names: &[String],
        users: Vec<(String, Vec<(u64, u32)>)>,
    ) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::EmptyInput("generalized dataset has no users"));
        }
        let mut users = users;
        users.sort_by(|a, b| a.0.cmp(&b.0));
        for w in users.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::DuplicateUser(w[0].0.clone()));
            }
        }

        let mut total_points = 0usize;
        for (user_id, keyed) in &mut users {
            if keyed.is_empty() {
                return Err(Error::EmptyTrace(user_id.clone()));
            }
            keyed.sort_unstable_by_key(|&(k, _)| k);
            let mut w = 0;
            for r in 1..keyed.len() {
                if keyed[r].0 == keyed[w].0 {
                    keyed[w].1 += keyed[r].1;
                } else {
                    w += 1;
                    keyed[w] = keyed[r];
                }
            }
            keyed.truncate(w + 1);
            total_points += keyed.len();
        }

        let mut all_keys: Vec<u64> = Vec::with_capacity(total_points);
        for (_, keyed) in &users {
            all_keys.extend(keyed.iter().map(|&(k, _)| k));
        }
        all_keys.sort_unstable();
        all_keys.dedup();

        let points: Vec<Point> = all_keys
            .iter()
            .map(|&key| Point {
                zone_id: zone_names[(key >> 32) as usize].clone(),
                slice_index: key as u32,
            })
            .collect();

        let mut posting_lens = vec![0u32; all_keys.len()];
        let mut user_ids = Vec::with_capacity(users.len());
        let mut traces = Vec::with_capacity(users.len());
        for (user_id, keyed) in users {
            let mut point_ids = Vec::with_capacity(keyed.len());
            let mut raw_records = 0u32;
            let mut uniform = true;
            for &(key, count) in &keyed {
                let pid = all_keys.binary_search(&key).expect("key interned") as u32;
                posting_lens[pid as usize] += 1;
                point_ids.push(pid);
                raw_records += count;
                uniform &= count == 1;
            }
            let multiplicities = if uniform {
                None
            } else {
                Some(keyed.iter().map(|&(_, count)| count).collect())
            };
            user_ids.push(user_id);
            traces.push(TraceEntry {
                point_ids,
                multiplicities,
                raw_records,
            });
        }

        let mut postings: Vec<Vec<u32>> = posting_lens
            .iter()
            .map(|&len| Vec::with_capacity(len as usize))
            .collect();
        for (slot, trace) in traces.iter().enumerate() {
            for &pid in &trace.point_ids {
                postings[pid as usize].push(slot as u32);
            }
        }

        // A merge costs about |a| + |b| element steps, an AND about `words`
        // word steps, so bitmaps only pay off for postings that are a decent
        // fraction of a word scan.
        let words = user_ids.len().div_ceil(64);
        let wide_min = (words / 4).max(64);
        let mut wide = vec![u32::MAX; postings.len()];
        let mut wide_bits = Vec::new();
        for (pid, posting) in postings.iter().enumerate() {
            if posting.len() >= wide_min {
                wide[pid] = (wide_bits.len() / words) as u32;
                let start = wide_bits.len();
                wide_bits.resize(start + words, 0u64);
                let block = &mut wide_bits[start..];
                for &slot in posting {
                    block[(slot / 64) as usize] |= 1u64 << (slot % 64);
                }
            }
        }

        Ok(Self {
            profile,
            user_ids,
            traces,
            points,
            postings,
            words,
            wide,
            wide_bits,
        })
    }

    pub fn profile(&self) -> &GeneralizationProfile {
        &self.profile
    }

    /// Number of users.
    pub fn n(&self) -> usize {
        self.user_ids.len()
    }

    /// User ids, ascending.
    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    /// Distinct points, ascending by (zone, slice).
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn trace(&self, user_id: &str) -> Option<UserTrace> {
        let slot = self.user_slot(user_id)?;
        let points = self.traces[slot as usize]
            .point_ids
            .iter()
            .map(|&pid| self.points[pid as usize].clone());
        Some(UserTrace::new(user_id, points).expect("stored traces are non-empty"))
    }

    pub fn traces(&self) -> impl Iterator<Item = UserTrace> + '_ {
        self.user_ids
            .iter()
            .map(|id| self.trace(id).expect("listed user"))
    }

    pub fn trace_size(&self, user_id: &str) -> Option<u32> {
        self.user_slot(user_id)
            .map(|slot| self.traces[slot as usize].point_ids.len() as u32)
    }

    /// Users observed at `point`, ascending, straight off the inverted index.
    pub fn posting_users(&self, point: &Point) -> Option<Vec<&str>> {
        let pid = self.point_id(point)?;
        Some(
            self.postings[pid as usize]
                .iter()
                .map(|&slot| self.user_ids[slot as usize].as_str())
                .collect(),
        )
    }

    pub(crate) fn user_slot(&self, user_id: &str) -> Option<u32> {
        self.user_ids
            .binary_search_by(|id| id.as_str().cmp(user_id))
            .ok()
            .map(|i| i as u32)
    }

    pub(crate) fn entry(&self, slot: u32) -> &TraceEntry {
        &self.traces[slot as usize]
    }

    pub(crate) fn posting(&self, point_id: u32) -> &[u32] {
        &self.postings[point_id as usize]
    }

    /// Bitmap width of this dataset, in u64 words.
    pub(crate) fn bitmap_words(&self) -> usize {
        self.words
    }

    /// Slot bitmap of a wide posting, `None` for postings below the cutoff.
    pub(crate) fn wide_posting(&self, point_id: u32) -> Option<&[u64]> {
        let idx = self.wide[point_id as usize];
        (idx != u32::MAX).then(|| {
            let start = idx as usize * self.words;
            &self.wide_bits[start..start + self.words]
        })
    }

    pub(crate) fn point_id(&self, point: &Point) -> Option<u32> {
        self.points.binary_search(point).ok().map(|i| i as u32)
    }

    pub(crate) fn n_postings(&self) -> usize {
        self.postings.len()
    }
}

/// Indexes already-generalized traces under the given profile.
pub fn build_generalized_dataset(
    traces: Vec<UserTrace>,
    profile: GeneralizationProfile,
) -> Result<GeneralizedDataset> {
    let zone_names: Vec<String> = traces
        .iter()
        .flat_map(|t| t.points().iter().map(|p| p.zone_id.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let zone_slot: HashMap<&str, u32> = zone_names
        .iter()
        .enumerate()
        .map(|(i, z)| (z.as_str(), i as u32))
        .collect();
    let users = traces
        .into_iter()
        .map(|trace| {
            let keyed = trace
                .points()
                .iter()
                .map(|p| (point_key(zone_slot[p.zone_id.as_str()], p.slice_index), 1))
                .collect();
            (trace.user_id().to_string(), keyed)
        })
        .collect();
    GeneralizedDataset::from_keyed(profile, &zone_names, users)
}

/// Midnight at the start of the date `t` falls on.
pub(crate) fn local_midnight(t: NaiveDateTime) -> NaiveDateTime {
    t.date().and_time(NaiveTime::MIN)
}
