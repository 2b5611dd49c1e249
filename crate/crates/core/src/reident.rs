//! The reidentification engine. Given a generalized dataset it answers: how
//! many randomly drawn points of a user's trace does an adversary need before
//! that user is the only match, and what fraction of the trace is that?
//!
//! Matching is superset containment: a user matches a set of observed points
//! when their whole trace contains it. The per-user cost c_i is the smallest
//! prefix of a random permutation of the trace that narrows the match set to
//! one; the information cost c averages c_i over users, the information ratio
//! r averages c_i / |d_i|. Unicity u_p is the fraction of users a random
//! p-point sample identifies uniquely. Users whose full trace still matches
//! somebody else are censored: no prefix can ever isolate them.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::model::{AuxPoints, GeneralizationProfile, GeneralizedDataset, Point};
use crate::seed::{subseed, trial_rng};
use crate::stats::{self, ConfidenceInterval};

/// How censored users enter c and r.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CensoredPolicy {
    /// Drop them from the averages; they still count in nonreident_fraction.
    Exclude,
    /// Score them as if the full trace had been spent: c_i = |d_i|, ratio 1.
    CountAsFull,
}

/// What |d_i| means and what gets permuted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSizeBasis {
    /// Permute the distinct points; |d_i| is the trace size.
    DistinctPoints,
    /// Permute the raw-record multiset, each point repeated by its record
    /// count; |d_i| is the raw record count.
    RawRecords,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReidentConfig {
    /// Permutations sampled per user for the cost estimate (R).
    pub trials_per_user: u32,
    /// Samples per user and p for the unicity estimate.
    pub unicity_trials: u32,
    /// Sample sizes p to estimate unicity at, strictly ascending.
    pub p_values: Vec<u32>,
    pub seed: u64,
    pub censored_policy: CensoredPolicy,
    pub trace_size_basis: TraceSizeBasis,
}

impl Default for ReidentConfig {
    fn default() -> Self {
        Self {
            trials_per_user: 10,
            unicity_trials: 1000,
            p_values: vec![1, 2, 3, 4, 5],
            seed: 0,
            censored_policy: CensoredPolicy::Exclude,
            trace_size_basis: TraceSizeBasis::DistinctPoints,
        }
    }
}

impl ReidentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_user == 0 {
            return Err(Error::InvalidConfig("trials_per_user must be positive".into()));
        }
        if self.unicity_trials == 0 {
            return Err(Error::InvalidConfig("unicity_trials must be positive".into()));
        }
        if self.p_values.first().is_some_and(|&p| p == 0) {
            return Err(Error::InvalidConfig("p values must be positive".into()));
        }
        if self.p_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "p values must be strictly ascending".into(),
            ));
        }
        Ok(())
    }
}

/// Cost of reidentifying one user along one permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cost {
    /// Unique after this many drawn points.
    Points(u32),
    /// The full trace never narrows the match set to one.
    Censored,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostOutcome {
    pub user_id: String,
    pub outcome: Cost,
    /// Distinct points in the user's trace.
    pub trace_size: u32,
}

/// Monte Carlo cost summary for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserCostEstimate {
    pub user_id: String,
    /// |d_i| under the configured basis.
    pub trace_size: u32,
    /// Mean cost over trials; `None` when the user is censored.
    pub mean_cost: Option<f64>,
    /// mean_cost / trace_size.
    pub mean_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnicityEstimate {
    pub p: u32,
    /// `None` when no user has a trace of at least p points.
    pub u_p: Option<f64>,
    pub eligible_users: usize,
}

/// Risk metrics of one generalization profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskMetrics {
    pub profile: GeneralizationProfile,
    pub n: usize,
    pub trials_per_user: u32,
    pub seed: u64,
    /// Mean reidentification cost; absent when every user is censored and the
    /// policy excludes them.
    pub c: Option<f64>,
    /// Mean cost as a fraction of trace size.
    pub r: Option<f64>,
    /// 1 - r.
    pub gain: Option<f64>,
    /// Fraction of users that can never be uniquely identified.
    pub nonreident_fraction: f64,
    pub unicity: Vec<UnicityEstimate>,
    pub ci_c: Option<ConfidenceInterval>,
    pub ci_r: Option<ConfidenceInterval>,
}

/// Intersection of two ascending id slices. Gallops through the longer side
/// when the lengths are lopsided, merges linearly otherwise.
fn intersect_into(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if large.len() >= 16 * small.len() {
        let mut base = 0usize;
        for &x in small {
            match large[base..].binary_search(&x) {
                Ok(i) => {
                    out.push(x);
                    base += i + 1;
                }
                Err(i) => base += i,
            }
            if base >= large.len() {
                break;
            }
        }
    } else {
        let (mut i, mut j) = (0, 0);
        while i < small.len() && j < large.len() {
            match small[i].cmp(&large[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(small[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
    }
}

#[inline]
fn test_bit(bits: &[u64], slot: u32) -> bool {
    bits[(slot / 64) as usize] & (1u64 << (slot % 64)) != 0
}

/// `a & b` into `dst`, returning the population count.
fn and_into(dst: &mut Vec<u64>, a: &[u64], b: &[u64]) -> usize {
    dst.clear();
    dst.extend(a.iter().zip(b).map(|(&x, &y)| x & y));
    dst.iter().map(|w| w.count_ones() as usize).sum()
}

/// `dst &= b` in place, returning the population count.
fn and_assign(dst: &mut [u64], b: &[u64]) -> usize {
    let mut count = 0;
    for (d, &y) in dst.iter_mut().zip(b) {
        *d &= y;
        count += d.count_ones() as usize;
    }
    count
}

fn bits_to_slots(bits: &[u64], out: &mut Vec<u32>) {
    out.clear();
    for (wi, &word) in bits.iter().enumerate() {
        let mut word = word;
        while word != 0 {
            out.push(wi as u32 * 64 + word.trailing_zeros());
            word &= word - 1;
        }
    }
}

/// Candidate set of a running intersection chain. `Seed` is the untouched
/// posting of the first point; the other variants live in the walker's
/// buffers.
#[derive(Clone, Copy)]
enum Candidates {
    Seed(u32),
    Narrow,
    Wide(usize),
}

/// Once a bitmap AND shrinks the candidates to this size, switch back to a
/// sorted vec: from there membership filters and merges are cheaper than
/// full word scans.
const MATERIALIZE_AT: usize = 512;

/// Reusable buffers for walking posting-intersection chains.
#[derive(Default)]
struct Walker {
    current: Vec<u32>,
    scratch: Vec<u32>,
    words: Vec<u64>,
}

impl Walker {
    fn size(&self, ds: &GeneralizedDataset, state: Candidates) -> usize {
        match state {
            Candidates::Seed(pid) => ds.posting(pid).len(),
            Candidates::Narrow => self.current.len(),
            Candidates::Wide(count) => count,
        }
    }

    /// One intersection against the candidates. Uses a word-wise AND when
    /// both sides are wide enough to beat a merge, a bitmap membership
    /// filter when only one side is, and a merge or gallop otherwise.
    fn intersect_step(
        &mut self,
        ds: &GeneralizedDataset,
        state: Candidates,
        pid: u32,
    ) -> Candidates {
        let posting = ds.posting(pid);
        let posting_bits = ds.wide_posting(pid);
        match state {
            Candidates::Seed(seed_pid) => {
                let seed = ds.posting(seed_pid);
                if let (Some(a), Some(b)) = (ds.wide_posting(seed_pid), posting_bits) {
                    if seed.len() + posting.len() >= ds.bitmap_words() {
                        let count = and_into(&mut self.words, a, b);
                        return self.settle(count);
                    }
                }
                if let Some(b) = posting_bits {
                    self.current.clear();
                    self.current.extend(seed.iter().copied().filter(|&s| test_bit(b, s)));
                } else {
                    intersect_into(seed, posting, &mut self.current);
                }
                Candidates::Narrow
            }
            Candidates::Narrow => {
                if let Some(b) = posting_bits {
                    self.scratch.clear();
                    self.scratch
                        .extend(self.current.iter().copied().filter(|&s| test_bit(b, s)));
                } else {
                    intersect_into(&self.current, posting, &mut self.scratch);
                }
                std::mem::swap(&mut self.current, &mut self.scratch);
                Candidates::Narrow
            }
            Candidates::Wide(_) => {
                if let Some(b) = posting_bits {
                    let count = and_assign(&mut self.words, b);
                    self.settle(count)
                } else {
                    self.current.clear();
                    let words = &self.words;
                    self.current
                        .extend(posting.iter().copied().filter(|&s| test_bit(words, s)));
                    Candidates::Narrow
                }
            }
        }
    }

    fn settle(&mut self, count: usize) -> Candidates {
        if count <= MATERIALIZE_AT {
            bits_to_slots(&self.words, &mut self.current);
            Candidates::Narrow
        } else {
            Candidates::Wide(count)
        }
    }

    /// Length of the shortest prefix of `order` (capped at `max_steps`) whose
    /// match set is a single user, walking one posting intersection per step.
    fn first_unique_prefix(
        &mut self,
        ds: &GeneralizedDataset,
        order: &[u32],
        max_steps: usize,
    ) -> Option<u32> {
        let steps = order.len().min(max_steps);
        if steps == 0 {
            return None;
        }
        if ds.posting(order[0]).len() == 1 {
            return Some(1);
        }
        let mut state = Candidates::Seed(order[0]);
        for (k, &pid) in order.iter().enumerate().take(steps).skip(1) {
            state = self.intersect_step(ds, state, pid);
            if self.size(ds, state) == 1 {
                return Some(k as u32 + 1);
            }
        }
        None
    }
}

/// Match set of a point-id set that is known to be contained in at least one
/// trace. Intersects postings shortest first and stops once a single
/// candidate remains: that candidate sits in every remaining posting.
fn class_slots(ds: &GeneralizedDataset, point_ids: &[u32]) -> Vec<u32> {
    if point_ids.is_empty() {
        return (0..ds.n() as u32).collect();
    }
    let mut ids = point_ids.to_vec();
    ids.sort_unstable_by_key(|&pid| ds.posting(pid).len());
    let mut walker = Walker::default();
    let mut state = Candidates::Seed(ids[0]);
    for &pid in &ids[1..] {
        if walker.size(ds, state) == 1 {
            break;
        }
        state = walker.intersect_step(ds, state, pid);
    }
    match state {
        Candidates::Seed(pid) => ds.posting(pid).to_vec(),
        Candidates::Narrow => walker.current,
        Candidates::Wide(_) => {
            let mut out = Vec::new();
            bits_to_slots(&walker.words, &mut out);
            out
        }
    }
}

/// Whether the user's full trace fails to isolate them. Probes the postings
/// shortest first, so most identifiable users resolve in a step or two.
fn is_censored(ds: &GeneralizedDataset, walker: &mut Walker, slot: u32) -> bool {
    let mut by_len = ds.entry(slot).point_ids.clone();
    by_len.sort_unstable_by_key(|&pid| ds.posting(pid).len());
    walker
        .first_unique_prefix(ds, &by_len, by_len.len())
        .is_none()
}

/// Users whose traces contain all of `aux.points`, ascending.
///
/// The aux points must name a user of the dataset and lie on that user's
/// trace; this is a caller contract and violations panic.
pub fn equivalence_class(ds: &GeneralizedDataset, aux: &AuxPoints) -> Vec<String> {
    let slot = ds
        .user_slot(&aux.user_id)
        .unwrap_or_else(|| panic!("aux target `{}` is not a dataset user", aux.user_id));
    let entry = ds.entry(slot);
    let ids: Vec<u32> = aux
        .points
        .iter()
        .map(|point| {
            let pid = ds
                .point_id(point)
                .unwrap_or_else(|| panic!("aux point {point:?} absent from the dataset index"));
            assert!(
                entry.point_ids.binary_search(&pid).is_ok(),
                "aux point {point:?} does not lie on the trace of `{}`",
                aux.user_id
            );
            pid
        })
        .collect();
    class_slots(ds, &ids)
        .into_iter()
        .map(|slot| ds.user_ids()[slot as usize].clone())
        .collect()
}

/// Cost of one explicit permutation of a user's full trace. The ordering must
/// be exactly a permutation of the trace's distinct points (caller contract;
/// violations panic).
pub fn cost_for_permutation(
    ds: &GeneralizedDataset,
    user_id: &str,
    ordering: &[Point],
) -> CostOutcome {
    let slot = ds
        .user_slot(user_id)
        .unwrap_or_else(|| panic!("`{user_id}` is not a dataset user"));
    let entry = ds.entry(slot);
    assert_eq!(
        ordering.len(),
        entry.point_ids.len(),
        "ordering must cover the full trace of `{user_id}`"
    );
    let ids: Vec<u32> = ordering
        .iter()
        .map(|point| {
            let pid = ds
                .point_id(point)
                .unwrap_or_else(|| panic!("point {point:?} absent from the dataset index"));
            assert!(
                entry.point_ids.binary_search(&pid).is_ok(),
                "point {point:?} does not lie on the trace of `{user_id}`"
            );
            pid
        })
        .collect();
    let mut sorted = ids.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(
        sorted.len(),
        entry.point_ids.len(),
        "ordering repeats a point of `{user_id}`"
    );

    let mut walker = Walker::default();
    let outcome = match walker.first_unique_prefix(ds, &ids, ids.len()) {
        Some(k) => Cost::Points(k),
        None => Cost::Censored,
    };
    CostOutcome {
        user_id: user_id.to_string(),
        outcome,
        trace_size: entry.point_ids.len() as u32,
    }
}

fn forward_shuffle(items: &mut [u32], rng: &mut rand_chacha::ChaCha8Rng, prefix: usize) {
    use rand::Rng;
    let n = items.len();
    for i in 0..prefix.min(n) {
        let j = rng.random_range(i..n);
        items.swap(i, j);
    }
}

/// Monte Carlo cost estimate per user: `trials_per_user` random permutations
/// of each non-censored trace, walked to the first unique prefix. Seeds are
/// derived per (user, trial), so estimates are reproducible under any thread
/// count.
pub fn estimate_user_costs(
    ds: &GeneralizedDataset,
    config: &ReidentConfig,
) -> Result<Vec<UserCostEstimate>> {
    config.validate()?;
    let trials = config.trials_per_user;
    let basis = config.trace_size_basis;
    let seed = config.seed;

    Ok(exec::map_indexed(ds.n(), |i| {
        let slot = i as u32;
        let user_id = ds.user_ids()[i].as_str();
        let entry = ds.entry(slot);
        let mut walker = Walker::default();

        let size = match basis {
            TraceSizeBasis::DistinctPoints => entry.point_ids.len() as u32,
            TraceSizeBasis::RawRecords => entry.raw_records,
        };
        if is_censored(ds, &mut walker, slot) {
            return UserCostEstimate {
                user_id: user_id.to_string(),
                trace_size: size,
                mean_cost: None,
                mean_ratio: None,
            };
        }

        let mut items: Vec<u32> = match basis {
            TraceSizeBasis::DistinctPoints => entry.point_ids.clone(),
            TraceSizeBasis::RawRecords => {
                let mut expanded = Vec::with_capacity(entry.raw_records as usize);
                for (idx, &pid) in entry.point_ids.iter().enumerate() {
                    expanded.extend(std::iter::repeat_n(pid, entry.multiplicity(idx) as usize));
                }
                expanded
            }
        };

        let mut total = 0u64;
        let len = items.len();
        for trial in 0..trials {
            let mut rng = trial_rng(seed, "cost", user_id, trial);
            forward_shuffle(&mut items, &mut rng, len);
            let k = walker
                .first_unique_prefix(ds, &items, items.len())
                .expect("non-censored user is unique on the full trace");
            total += u64::from(k);
        }
        let mean_cost = total as f64 / trials as f64;
        UserCostEstimate {
            user_id: user_id.to_string(),
            trace_size: size,
            mean_cost: Some(mean_cost),
            mean_ratio: Some(mean_cost / size as f64),
        }
    }))
}

/// Unicity at several sample sizes in one pass. For each user and trial one
/// permutation prefix is walked up to the largest applicable p, and a trial
/// counts as a hit for every p at or past the first unique prefix. Seeds do
/// not involve p, so estimates at growing p reuse the same draws and are
/// non-decreasing by construction.
pub fn unicity_many(
    ds: &GeneralizedDataset,
    p_values: &[u32],
    trials: u32,
    seed: u64,
) -> Result<Vec<UnicityEstimate>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("unicity trials must be positive".into()));
    }
    if p_values.first().is_some_and(|&p| p == 0) {
        return Err(Error::InvalidConfig("p values must be positive".into()));
    }
    if p_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("p values must be strictly ascending".into()));
    }
    if p_values.is_empty() {
        return Ok(Vec::new());
    }
    let p_min = p_values[0];
    let p_max = *p_values.last().expect("non-empty");

    let per_user: Vec<Vec<u64>> = exec::map_indexed(ds.n(), |i| {
        let slot = i as u32;
        let user_id = ds.user_ids()[i].as_str();
        let entry = ds.entry(slot);
        let size = entry.point_ids.len() as u32;
        let mut hits = vec![0u64; p_values.len()];
        if size < p_min {
            return hits;
        }
        let prefix = p_max.min(size) as usize;
        let mut ids = entry.point_ids.clone();
        let mut walker = Walker::default();
        for trial in 0..trials {
            let mut rng = trial_rng(seed, "unicity", user_id, trial);
            forward_shuffle(&mut ids, &mut rng, prefix);
            if let Some(k) = walker.first_unique_prefix(ds, &ids[..prefix], prefix) {
                for (pi, &p) in p_values.iter().enumerate() {
                    if p <= size && k <= p {
                        hits[pi] += 1;
                    }
                }
            }
        }
        hits
    });

    let mut totals = vec![0u64; p_values.len()];
    for hits in &per_user {
        for (t, h) in totals.iter_mut().zip(hits) {
            *t += h;
        }
    }
    Ok(p_values
        .iter()
        .enumerate()
        .map(|(pi, &p)| {
            let eligible = (0..ds.n() as u32)
                .filter(|&slot| ds.entry(slot).point_ids.len() as u32 >= p)
                .count();
            let u_p = (eligible > 0)
                .then(|| totals[pi] as f64 / (eligible as u64 * u64::from(trials)) as f64);
            UnicityEstimate {
                p,
                u_p,
                eligible_users: eligible,
            }
        })
        .collect())
}

/// Unicity at a single sample size. Errors when no trace has p points.
pub fn unicity(ds: &GeneralizedDataset, p: u32, trials: u32, seed: u64) -> Result<UnicityEstimate> {
    let estimate = unicity_many(ds, &[p], trials, seed)?
        .pop()
        .expect("one estimate per p");
    if estimate.eligible_users == 0 {
        let max_trace_size = (0..ds.n() as u32)
            .map(|slot| ds.entry(slot).point_ids.len() as u32)
            .max()
            .unwrap_or(0);
        return Err(Error::NoEligibleUsers { p, max_trace_size });
    }
    Ok(estimate)
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Full risk assessment of one generalized dataset: c, r, gain, unicity at
/// the configured p values, and bootstrap confidence intervals over users.
pub fn assess(ds: &GeneralizedDataset, config: &ReidentConfig) -> Result<RiskMetrics> {
    let per_user = estimate_user_costs(ds, config)?;

    let censored = per_user.iter().filter(|u| u.mean_cost.is_none()).count();
    let mut costs = Vec::with_capacity(per_user.len());
    let mut ratios = Vec::with_capacity(per_user.len());
    for user in &per_user {
        match (user.mean_cost, user.mean_ratio) {
            (Some(cost), Some(ratio)) => {
                costs.push(cost);
                ratios.push(ratio);
            }
            _ => {
                if config.censored_policy == CensoredPolicy::CountAsFull {
                    costs.push(user.trace_size as f64);
                    ratios.push(1.0);
                }
            }
        }
    }

    let unicity = unicity_many(
        ds,
        &config.p_values,
        config.unicity_trials,
        subseed(config.seed, "unicity"),
    )?;

    let ci_for = |values: &[f64], domain: &str| -> Result<Option<ConfidenceInterval>> {
        if values.is_empty() {
            return Ok(None);
        }
        stats::bootstrap_ci(
            values,
            stats::DEFAULT_BOOTSTRAP_RESAMPLES,
            stats::DEFAULT_BOOTSTRAP_ALPHA,
            subseed(config.seed, domain),
        )
        .map(Some)
    };
    let ci_c = ci_for(&costs, "ci-cost")?;
    let ci_r = ci_for(&ratios, "ci-ratio")?;

    let r = mean(&ratios);
    Ok(RiskMetrics {
        profile: ds.profile().clone(),
        n: ds.n(),
        trials_per_user: config.trials_per_user,
        seed: config.seed,
        c: mean(&costs),
        r,
        gain: r.map(|r| 1.0 - r),
        nonreident_fraction: censored as f64 / ds.n() as f64,
        unicity,
        ci_c,
        ci_r,
    })
}

/// The k such that every user's full trace matches at least k users.
pub fn k_anonymity_level(ds: &GeneralizedDataset) -> usize {
    let mut memo: HashMap<&[u32], usize> = HashMap::new();
    let mut k = usize::MAX;
    for slot in 0..ds.n() as u32 {
        let ids = ds.entry(slot).point_ids.as_slice();
        let size = *memo
            .entry(ids)
            .or_insert_with(|| class_slots(ds, ids).len());
        k = k.min(size);
        if k == 1 {
            break;
        }
    }
    k
}

/// Shannon entropy (bits) of the point distribution, each distinct
/// (user, point) pair counted once.
pub fn empirical_entropy(ds: &GeneralizedDataset) -> f64 {
    let total: u64 = (0..ds.n_postings())
        .map(|pid| ds.posting(pid as u32).len() as u64)
        .sum();
    let total = total as f64;
    let mut entropy = 0.0;
    for pid in 0..ds.n_postings() {
        let q = ds.posting(pid as u32).len() as f64 / total;
        entropy -= q * q.log2();
    }
    entropy
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_generalized_dataset, UserTrace};

    fn profile() -> GeneralizationProfile {
        GeneralizationProfile::new("zip", 1).unwrap()
    }

    fn dataset(traces: &[(&str, &[&str])]) -> GeneralizedDataset {
        let traces = traces
            .iter()
            .map(|(user, zones)| {
                UserTrace::new(
                    *user,
                    zones.iter().map(|z| Point::new(*z, 0)),
                )
                .unwrap()
            })
            .collect();
        build_generalized_dataset(traces, profile()).unwrap()
    }

    fn aux(user: &str, zones: &[&str]) -> AuxPoints {
        AuxPoints::new(user, zones.iter().map(|z| Point::new(*z, 0))).unwrap()
    }

    #[test]
    fn intersection_handles_lopsided_and_balanced_inputs() {
        let mut out = Vec::new();
        intersect_into(&[1, 5, 9], &[0, 1, 2, 3, 4, 5, 6], &mut out);
        assert_eq!(out, vec![1, 5]);
        let large: Vec<u32> = (0..200).collect();
        intersect_into(&[3, 100, 199, 250], &large, &mut out);
        assert_eq!(out, vec![3, 100, 199]);
        intersect_into(&[], &large, &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn equivalence_class_narrows_with_more_points() {
        let ds = dataset(&[("u1", &["A", "B"]), ("u2", &["A", "C"])]);
        assert_eq!(equivalence_class(&ds, &aux("u1", &["A"])), vec!["u1", "u2"]);
        assert_eq!(equivalence_class(&ds, &aux("u1", &["A", "B"])), vec!["u1"]);
        assert_eq!(equivalence_class(&ds, &aux("u1", &[])), vec!["u1", "u2"]);
    }

    #[test]
    fn cost_depends_on_draw_order() {
        let ds = dataset(&[("u1", &["A", "B"]), ("u2", &["A", "C"])]);
        let b_first = cost_for_permutation(&ds, "u1", &[Point::new("B", 0), Point::new("A", 0)]);
        assert_eq!(b_first.outcome, Cost::Points(1));
        let a_first = cost_for_permutation(&ds, "u1", &[Point::new("A", 0), Point::new("B", 0)]);
        assert_eq!(a_first.outcome, Cost::Points(2));
        assert_eq!(a_first.trace_size, 2);
    }

    #[test]
    fn contained_trace_is_censored() {
        let ds = dataset(&[("u1", &["A"]), ("u2", &["A", "B"])]);
        let outcome = cost_for_permutation(&ds, "u1", &[Point::new("A", 0)]);
        assert_eq!(outcome.outcome, Cost::Censored);
        let estimates = estimate_user_costs(&ds, &ReidentConfig::default()).unwrap();
        assert_eq!(estimates[0].mean_cost, None);
        assert!(estimates[1].mean_cost.is_some());
    }

    #[test]
    fn fixture_metrics_match_hand_computation() {
        let ds = dataset(&[("u1", &["A", "B"]), ("u2", &["A", "C"])]);
        let config = ReidentConfig {
            trials_per_user: 4000,
            unicity_trials: 4000,
            p_values: vec![1, 2],
            seed: 11,
            ..ReidentConfig::default()
        };
        let metrics = assess(&ds, &config).unwrap();
        assert!((metrics.c.unwrap() - 1.5).abs() < 0.05);
        assert!((metrics.r.unwrap() - 0.75).abs() < 0.025);
        assert!((metrics.gain.unwrap() - 0.25).abs() < 0.025);
        assert_eq!(metrics.nonreident_fraction, 0.0);
        let u1 = &metrics.unicity[0];
        assert!((u1.u_p.unwrap() - 0.5).abs() < 0.05);
        assert_eq!(u1.eligible_users, 2);
        assert_eq!(metrics.unicity[1].u_p, Some(1.0));
        assert_eq!(k_anonymity_level(&ds), 1);
    }

    #[test]
    fn disjoint_singletons_cost_exactly_one_point() {
        let ds = dataset(&[("u1", &["A"]), ("u2", &["B"])]);
        let metrics = assess(&ds, &ReidentConfig::default()).unwrap();
        assert_eq!(metrics.c, Some(1.0));
        assert_eq!(metrics.r, Some(1.0));
        assert_eq!(metrics.gain, Some(0.0));
        assert_eq!(metrics.nonreident_fraction, 0.0);
    }

    #[test]
    fn identical_traces_leave_averages_absent_under_exclude() {
        let ds = dataset(&[("u1", &["A"]), ("u2", &["A"])]);
        let metrics = assess(&ds, &ReidentConfig::default()).unwrap();
        assert_eq!(metrics.nonreident_fraction, 1.0);
        assert_eq!(metrics.c, None);
        assert_eq!(metrics.r, None);
        assert_eq!(metrics.gain, None);
        assert_eq!(metrics.ci_c, None);
        assert_eq!(k_anonymity_level(&ds), 2);
    }

    #[test]
    fn count_as_full_scores_censored_users_at_trace_size() {
        let ds = dataset(&[("u1", &["A"]), ("u2", &["A"])]);
        let config = ReidentConfig {
            censored_policy: CensoredPolicy::CountAsFull,
            ..ReidentConfig::default()
        };
        let metrics = assess(&ds, &config).unwrap();
        assert_eq!(metrics.c, Some(1.0));
        assert_eq!(metrics.r, Some(1.0));
        assert_eq!(metrics.nonreident_fraction, 1.0);
    }

    #[test]
    fn raw_record_basis_counts_repeats() {
        // u1 visits A twice and B once; u2 anchors elsewhere.
        let ds = GeneralizedDataset::from_keyed(
            profile(),
            &["A".into(), "B".into(), "C".into()],
            vec![
                ("u1".into(), vec![(crate::model::point_key(0, 0), 2), (crate::model::point_key(1, 0), 1)]),
                ("u2".into(), vec![(crate::model::point_key(0, 0), 1), (crate::model::point_key(2, 0), 1)]),
            ],
        )
        .unwrap();
        let config = ReidentConfig {
            trials_per_user: 6000,
            p_values: vec![],
            seed: 3,
            trace_size_basis: TraceSizeBasis::RawRecords,
            ..ReidentConfig::default()
        };
        let estimates = estimate_user_costs(&ds, &config).unwrap();
        let u1 = &estimates[0];
        assert_eq!(u1.trace_size, 3);
        // Draw orders AAB, ABA, AAB(dup), BAA etc: B alone identifies, A never
        // does. Costs: B first = 1 (prob 1/3); second draw B = 2 (prob 1/3);
        // else 3. Expected cost 2.
        assert!((u1.mean_cost.unwrap() - 2.0).abs() < 0.05);
        assert!((u1.mean_ratio.unwrap() - 2.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn unicity_is_monotone_and_seed_stable() {
        let ds = dataset(&[
            ("u1", &["A", "B", "C"]),
            ("u2", &["A", "C", "D"]),
            ("u3", &["B", "C", "D"]),
        ]);
        let estimates = unicity_many(&ds, &[1, 2, 3], 500, 9).unwrap();
        let values: Vec<f64> = estimates.iter().map(|e| e.u_p.unwrap()).collect();
        assert!(values[0] <= values[1] && values[1] <= values[2]);
        for (p, estimate) in [(1u32, 0), (2, 1), (3, 2)] {
            let single = unicity(&ds, p, 500, 9).unwrap();
            assert_eq!(single, estimates[estimate]);
        }
    }

    #[test]
    fn unicity_excludes_short_traces_and_errors_when_none_qualify() {
        let ds = dataset(&[("u1", &["A"]), ("u2", &["B", "C"])]);
        let estimate = unicity(&ds, 2, 100, 0).unwrap();
        assert_eq!(estimate.eligible_users, 1);
        assert_eq!(estimate.u_p, Some(1.0));
        let err = unicity(&ds, 3, 100, 0).unwrap_err();
        match err {
            Error::NoEligibleUsers { p, max_trace_size } => {
                assert_eq!((p, max_trace_size), (3, 2));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn entropy_of_uniform_and_skewed_distributions() {
        let zones: Vec<String> = (0..8).map(|i| format!("Z{i}")).collect();
        let zone_refs: Vec<&str> = zones.iter().map(String::as_str).collect();
        let uniform = dataset(&[("u1", &zone_refs)]);
        assert!((empirical_entropy(&uniform) - 3.0).abs() < 1e-12);

        let degenerate = dataset(&[("u1", &["A"]), ("u2", &["A"])]);
        assert_eq!(empirical_entropy(&degenerate), 0.0);

        // Posting masses 2/4, 1/4, 1/4.
        let skewed = dataset(&[("u1", &["A", "B"]), ("u2", &["A", "C"])]);
        assert!((empirical_entropy(&skewed) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn assessment_is_reproducible_for_a_fixed_seed() {
        let ds = dataset(&[
            ("u1", &["A", "B", "C"]),
            ("u2", &["A", "C"]),
            ("u3", &["B", "D"]),
        ]);
        let config = ReidentConfig {
            trials_per_user: 50,
            unicity_trials: 50,
            seed: 42,
            ..ReidentConfig::default()
        };
        let a = assess(&ds, &config).unwrap();
        let b = assess(&ds, &config).unwrap();
        assert_eq!(a, b);
        let other_seed = assess(
            &ds,
            &ReidentConfig {
                seed: 43,
                ..config
            },
        )
        .unwrap();
        assert_ne!(a.c, other_seed.c);
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let ds = dataset(&[("u1", &["A"])]);
        for config in [
            ReidentConfig {
                trials_per_user: 0,
                ..ReidentConfig::default()
            },
            ReidentConfig {
                p_values: vec![2, 2],
                ..ReidentConfig::default()
            },
            ReidentConfig {
                p_values: vec![0, 1],
                ..ReidentConfig::default()
            },
        ] {
            assert!(assess(&ds, &config).is_err());
        }
    }
}
