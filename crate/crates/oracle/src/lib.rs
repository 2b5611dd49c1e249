//! Brute-force reference implementations of the risk metrics, written for
//! obviousness rather than speed. The real engine is tested against these on
//! small inputs: everything here enumerates (permutations, subsets,
//! resamples) instead of sampling or indexing.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracerisk_core::model::{
    build_generalized_dataset, GeneralizationProfile, GeneralizedDataset, Point, UserTrace,
};

/// Traces as plain ordered maps: user id to distinct point set.
pub type Traces = BTreeMap<String, BTreeSet<Point>>;

/// A small random instance: 2-6 users with 1-5 distinct points each, drawn
/// from a 4-zone by 5-slice universe so collisions and containment are
/// common.
pub fn random_traces(seed: u64) -> Traces {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_users = rng.random_range(2..=6);
    (0..n_users)
        .map(|u| {
            let n_points = rng.random_range(1..=5);
            let mut points = BTreeSet::new();
            while points.len() < n_points {
                points.insert(Point::new(
                    format!("z{}", rng.random_range(0..4)),
                    rng.random_range(0..5),
                ));
            }
            (format!("u{u}"), points)
        })
        .collect()
}

/// The same instance as an engine dataset. The profile label is arbitrary;
/// the points are used as-is.
pub fn to_dataset(traces: &Traces) -> GeneralizedDataset {
    let users: Vec<UserTrace> = traces
        .iter()
        .map(|(user, points)| UserTrace::new(user.clone(), points.iter().cloned()).unwrap())
        .collect();
    build_generalized_dataset(users, GeneralizationProfile::new("zip", 1).unwrap()).unwrap()
}

/// Users whose trace contains every aux point, by direct containment scan.
pub fn matching_users<'t>(traces: &'t Traces, aux: &BTreeSet<Point>) -> Vec<&'t str> {
    traces
        .iter()
        .filter(|(_, points)| aux.is_subset(points))
        .map(|(user, _)| user.as_str())
        .collect()
}

/// Whether `user` can ever be singled out: true when some other trace
/// contains theirs entirely.
pub fn is_censored(traces: &Traces, user: &str) -> bool {
    matching_users(traces, &traces[user]).len() > 1
}

/// Exact expected reidentification cost of `user`: the first-unique-prefix
/// length averaged over every permutation of the trace. `None` when censored.
pub fn expected_cost(traces: &Traces, user: &str) -> Option<f64> {
    let points: Vec<&Point> = traces[user].iter().collect();
    if is_censored(traces, user) {
        return None;
    }
    let mut total = 0u64;
    let mut count = 0u64;
    for perm in points.iter().permutations(points.len()) {
        let mut prefix: BTreeSet<Point> = BTreeSet::new();
        let mut cost = 0;
        for point in perm {
            prefix.insert((**point).clone());
            cost += 1;
            if matching_users(traces, &prefix).len() == 1 {
                break;
            }
        }
        total += cost;
        count += 1;
    }
    Some(total as f64 / count as f64)
}

/// Exact unicity at sample size p: over users with at least p points, the
/// probability that a uniformly drawn p-subset of the trace matches only its
/// owner. `None` when no user is eligible.
pub fn unicity_exact(traces: &Traces, p: usize) -> Option<(f64, usize)> {
    let mut sum = 0.0;
    let mut eligible = 0usize;
    for points in traces.values() {
        if points.len() < p {
            continue;
        }
        eligible += 1;
        let mut unique = 0u64;
        let mut total = 0u64;
        for subset in points.iter().combinations(p) {
            let sample: BTreeSet<Point> = subset.into_iter().cloned().collect();
            total += 1;
            if matching_users(traces, &sample).len() == 1 {
                unique += 1;
            }
        }
        sum += unique as f64 / total as f64;
    }
    (eligible > 0).then(|| (sum / eligible as f64, eligible))
}

/// Smallest equivalence class size over full traces.
pub fn k_anonymity(traces: &Traces) -> usize {
    traces
        .values()
        .map(|points| matching_users(traces, points).len())
        .min()
        .unwrap_or(0)
}

/// Shannon entropy (bits) of the point distribution, one count per distinct
/// (user, point) pair.
pub fn entropy_bits(traces: &Traces) -> f64 {
    let mut counts: BTreeMap<&Point, u64> = BTreeMap::new();
    for points in traces.values() {
        for point in points {
            *counts.entry(point).or_default() += 1;
        }
    }
    let total: u64 = counts.values().sum();
    counts
        .values()
        .map(|&count| {
            let q = count as f64 / total as f64;
            -q * q.log2()
        })
        .sum()
}

/// Means of all n^n equally likely with-replacement resamples, ascending.
/// Feasible for tiny n only.
pub fn resample_means(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    assert!(n > 0 && n <= 8, "enumeration needs 0 < n <= 8");
    let mut means: Vec<f64> = std::iter::repeat_n(0..n, n)
        .multi_cartesian_product()
        .map(|draw| draw.into_iter().map(|i| values[i]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    means
}

/// Exact percentile interval of the bootstrap distribution of the mean: every
/// resample is enumerated, so this is the limit a sampled bootstrap converges
/// to.
pub fn exhaustive_bootstrap_interval(values: &[f64], alpha: f64) -> (f64, f64) {
    let means = resample_means(values);
    let quantile = |q: f64| -> f64 {
        let rank = (q * means.len() as f64).ceil() as usize;
        means[rank.saturating_sub(1).min(means.len() - 1)]
    };
    (quantile(alpha / 2.0), quantile(1.0 - alpha / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traces(spec: &[(&str, &[&str])]) -> Traces {
        spec.iter()
            .map(|(user, zones)| {
                (
                    user.to_string(),
                    zones.iter().map(|z| Point::new(*z, 0)).collect(),
                )
            })
            .collect()
    }

    #[test]
    fn matching_is_superset_containment() {
        let t = traces(&[("u1", &["A", "B"]), ("u2", &["A", "C"])]);
        let aux: BTreeSet<Point> = [Point::new("A", 0)].into_iter().collect();
        assert_eq!(matching_users(&t, &aux), vec!["u1", "u2"]);
        let empty = BTreeSet::new();
        assert_eq!(matching_users(&t, &empty).len(), 2);
    }

    #[test]
    fn expected_cost_of_the_two_user_fixture() {
        let t = traces(&[("u1", &["A", "B"]), ("u2", &["A", "C"])]);
        assert_eq!(expected_cost(&t, "u1"), Some(1.5));
        assert_eq!(expected_cost(&t, "u2"), Some(1.5));
    }

    #[test]
    fn censored_user_has_no_cost() {
        let t = traces(&[("u1", &["A"]), ("u2", &["A", "B"])]);
        assert!(is_censored(&t, "u1"));
        assert_eq!(expected_cost(&t, "u1"), None);
        assert_eq!(expected_cost(&t, "u2"), Some(1.5));
    }

    #[test]
    fn unicity_of_the_fixture() {
        let t = traces(&[("u1", &["A", "B"]), ("u2", &["A", "C"])]);
        let (u1, eligible) = unicity_exact(&t, 1).unwrap();
        assert_eq!(u1, 0.5);
        assert_eq!(eligible, 2);
        assert_eq!(unicity_exact(&t, 2).unwrap().0, 1.0);
        assert_eq!(unicity_exact(&t, 3), None);
    }

    #[test]
    fn k_anonymity_and_entropy() {
        let t = traces(&[("u1", &["A", "B"]), ("u2", &["A", "C"])]);
        assert_eq!(k_anonymity(&t), 1);
        assert!((entropy_bits(&t) - 1.5).abs() < 1e-12);
        let identical = traces(&[("u1", &["A"]), ("u2", &["A"])]);
        assert_eq!(k_anonymity(&identical), 2);
        assert_eq!(entropy_bits(&identical), 0.0);
    }

    #[test]
    fn exhaustive_bootstrap_of_constant_values_collapses() {
        assert_eq!(exhaustive_bootstrap_interval(&[2.0, 2.0], 0.05), (2.0, 2.0));
        let (lo, hi) = exhaustive_bootstrap_interval(&[0.0, 0.0, 10.0], 0.05);
        assert_eq!(lo, 0.0);
        assert_eq!(hi, 10.0);
    }
}
