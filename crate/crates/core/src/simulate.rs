//! Seeded Monte Carlo random walks with exact binomial confidence
//! intervals.
//!
//! Reproducibility contract: every uniform draw is a pure function of
//! `(seed, walk index, step)`, so estimates are bit-identical no matter
//! how walks are scheduled — serially, in parallel, or in any order. The
//! exceedance count is an integer, so aggregation commutes exactly.

use crate::chain::ReversibleChain;
use crate::oracle::exceeds_threshold;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_A: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_B: u64 = 0x94D0_49BB_1331_11EB;

/// SplitMix64 finalizer: full-avalanche 64-bit mixing.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_A);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_B);
    z ^ (z >> 31)
}

/// Counter-based generator value keyed by `(seed, walk, step)`.
#[inline]
pub fn stream_u64(seed: u64, walk: u64, step: u64) -> u64 {
    let mut h = mix(seed ^ GOLDEN_GAMMA);
    h = mix(h ^ walk.wrapping_mul(MIX_A));
    mix(h ^ step.wrapping_mul(MIX_B))
}

/// Uniform in [0, 1) with 53 random bits.
#[inline]
pub fn stream_uniform(seed: u64, walk: u64, step: u64) -> f64 {
    (stream_u64(seed, walk, step) >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Precomputed inverse-CDF tables: cumulative start distribution and one
/// cumulative column per state.
pub struct SamplingTables {
    q_cdf: Vec<f64>,
    column_cdfs: Vec<Vec<f64>>,
}

impl SamplingTables {
    pub fn new(chain: &ReversibleChain, q: &[f64]) -> Self {
        assert_eq!(q.len(), chain.states());
        let n = chain.states();
        let cumulative = |probs: Vec<f64>| -> Vec<f64> {
            let mut acc = 0.0;
            let mut cdf: Vec<f64> = probs
                .into_iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect();
            // Guard the last bucket against rounding shortfall.
            if let Some(last) = cdf.last_mut() {
                *last = 1.0;
            }
            cdf
        };
        SamplingTables {
            q_cdf: cumulative(q.to_vec()),
            column_cdfs: (0..n)
                .map(|j| cumulative((0..n).map(|i| chain.transition(i, j)).collect()))
                .collect(),
        }
    }

    #[inline]
    fn pick(cdf: &[f64], u: f64) -> usize {
        // Smallest index with u < cdf[i]; cdf ends at exactly 1.0.
        match cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => i + 1, // u equals a boundary: take the next bucket
            Err(i) => i,
        }
        .min(cdf.len() - 1)
    }
}

/// One walk: draw `X_0` from `q`, transition `n` times by inverse CDF on
/// the current column, return `sum_{k=1..n} f(X_k)` (the start state never
/// contributes).
pub fn walk(
    tables: &SamplingTables,
    f: &[f64],
    n: u64,
    seed: u64,
    walk_index: u64,
) -> f64 {
    let mut state = SamplingTables::pick(&tables.q_cdf, stream_uniform(seed, walk_index, 0));
    let mut sum = 0.0;
    for step in 1..=n {
        let u = stream_uniform(seed, walk_index, step);
        state = SamplingTables::pick(&tables.column_cdfs[state], u);
        sum += f[state];
    }
    sum
}

/// Empirical tail estimate with its exact 95% binomial interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TailEstimate {
    pub gamma: f64,
    pub n: u64,
    pub trials: u64,
    pub seed: u64,
    pub exceed_count: u64,
    pub point_estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Beta quantile by bisection on the (accurate) regularized incomplete
/// beta CDF; the library's generic inverse is only coarsely iterated.
fn beta_quantile(shape_a: f64, shape_b: f64, p: f64) -> f64 {
    let dist = Beta::new(shape_a, shape_b).expect("valid Beta parameters");
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if dist.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact Clopper-Pearson interval for `successes` out of `trials` at the
/// given confidence level (0.95 for the standard 95% interval). Built from
/// Beta quantiles; exact coverage, conservative near 0 and 1.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(trials >= 1 && successes <= trials);
    assert!(confidence > 0.0 && confidence < 1.0);
    let alpha = 1.0 - confidence;
    let k = successes as f64;
    let n = trials as f64;
    let low = if successes == 0 {
        0.0
    } else {
        beta_quantile(k, n - k + 1.0, alpha / 2.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        beta_quantile(k + 1.0, n - k, 1.0 - alpha / 2.0)
    };
    (low, high)
}

fn count_exceedances(
    tables: &SamplingTables,
    f: &[f64],
    gamma: f64,
    n: u64,
    trials: u64,
    seed: u64,
    sequential: bool,
) -> u64 {
    let indices: Vec<u64> = (0..trials).collect();
    let one = |walk_index: u64| -> u64 {
        let sum = walk(tables, f, n, seed, walk_index);
        u64::from(exceeds_threshold(sum, n, gamma))
    };
    let counts = if sequential {
        crate::map_ordered_serial(indices, one)
    } else {
        crate::map_ordered(indices, one)
    };
    counts.into_iter().sum()
}

fn estimate(
    chain: &ReversibleChain,
    f: &[f64],
    q: &[f64],
    gamma: f64,
    n: u64,
    trials: u64,
    seed: u64,
    sequential: bool,
) -> TailEstimate {
    assert!(trials >= 1 && n >= 1);
    let tables = SamplingTables::new(chain, q);
    let exceed_count = count_exceedances(&tables, f, gamma, n, trials, seed, sequential);
    let (ci_low, ci_high) = clopper_pearson(exceed_count, trials, 0.95);
    TailEstimate {
        gamma,
        n,
        trials,
        seed,
        exceed_count,
        point_estimate: exceed_count as f64 / trials as f64,
        ci_low,
        ci_high,
    }
}

/// Run `trials` independent walks (parallel under the default feature) and
/// report the exceedance fraction with its exact 95% interval.
#[allow(clippy::too_many_arguments)]
pub fn empirical_tail(
    chain: &ReversibleChain,
    f: &[f64],
    q: &[f64],
    gamma: f64,
    n: u64,
    trials: u64,
    seed: u64,
) -> TailEstimate {
    estimate(chain, f, q, gamma, n, trials, seed, false)
}

/// Strictly sequential twin of [`empirical_tail`]; same result bit for
/// bit.
#[allow(clippy::too_many_arguments)]
pub fn empirical_tail_serial(
    chain: &ReversibleChain,
    f: &[f64],
    q: &[f64],
    gamma: f64,
    n: u64,
    trials: u64,
    seed: u64,
) -> TailEstimate {
    estimate(chain, f, q, gamma, n, trials, seed, true)
}

/// Mean of `S_n / n` across trials; diagnostic only (the estimate itself
/// is count-based).
pub fn empirical_mean(
    chain: &ReversibleChain,
    f: &[f64],
    q: &[f64],
    n: u64,
    trials: u64,
    seed: u64,
) -> f64 {
    let tables = SamplingTables::new(chain, q);
    let mut acc = 0.0;
    for walk_index in 0..trials {
        acc += walk(&tables, f, n, seed, walk_index) / n as f64;
    }
    acc / trials as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_chain, ChainSpec};

    fn symmetric_two_state() -> ReversibleChain {
        build_chain(&ChainSpec::Matrix {
            states: 2,
            matrix: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            stationary: None,
        })
        .unwrap()
    }

    #[test]
    fn stream_is_deterministic_and_keyed() {
        assert_eq!(stream_u64(42, 7, 3), stream_u64(42, 7, 3));
        assert_ne!(stream_u64(42, 7, 3), stream_u64(42, 7, 4));
        assert_ne!(stream_u64(42, 7, 3), stream_u64(42, 8, 3));
        assert_ne!(stream_u64(42, 7, 3), stream_u64(43, 7, 3));
        let u = stream_uniform(1, 2, 3);
        assert!((0.0..1.0).contains(&u));
    }

    #[test]
    fn permutation_chain_walk_is_deterministic() {
        // Single-edge chain always flips state: S_1 = f(1 - X_0).
        let chain = build_chain(&ChainSpec::Edges {
            states: 2,
            edges: vec![(0, 1, 1.0)],
        })
        .unwrap();
        let tables = SamplingTables::new(&chain, &[1.0, 0.0]);
        let f = [3.0, -7.0];
        for walk_index in 0..50 {
            let s = walk(&tables, &f, 1, 99, walk_index);
            assert_eq!(s, -7.0); // starts at 0, must land on 1
        }
    }

    #[test]
    fn same_seed_reproduces_and_orders_commute() {
        let chain = symmetric_two_state();
        let f = [1.0, -1.0];
        let q = [0.5, 0.5];
        let a = empirical_tail(&chain, &f, &q, 0.0, 2, 5000, 42);
        let b = empirical_tail(&chain, &f, &q, 0.0, 2, 5000, 42);
        assert_eq!(a, b);
        let serial = empirical_tail_serial(&chain, &f, &q, 0.0, 2, 5000, 42);
        assert_eq!(a, serial);
        let other_seed = empirical_tail(&chain, &f, &q, 0.0, 2, 5000, 43);
        assert_ne!(a.exceed_count, other_seed.exceed_count);
    }

    #[test]
    fn estimate_matches_exact_quarter() {
        let chain = symmetric_two_state();
        let f = [1.0, -1.0];
        let q = [0.5, 0.5];
        let est = empirical_tail(&chain, &f, &q, 0.0, 2, 20_000, 7);
        assert!(est.ci_low <= 0.25 && 0.25 <= est.ci_high, "{est:?}");
        assert!((est.point_estimate - 0.25).abs() < 0.02);
    }

    #[test]
    fn impossible_deviation_gives_zero_with_small_interval() {
        let chain = symmetric_two_state();
        let est = empirical_tail(&chain, &[1.0, -1.0], &[0.5, 0.5], 1.0, 4, 3000, 5);
        assert_eq!(est.exceed_count, 0);
        assert_eq!(est.point_estimate, 0.0);
        assert_eq!(est.ci_low, 0.0);
        // Rule-of-three shape: upper limit close to 3.7/trials at 95%.
        assert!(est.ci_high < 4.0 / 3000.0, "{}", est.ci_high);
    }

    #[test]
    fn clopper_pearson_frozen_against_reference() {
        // Reference values from an independent implementation of the Beta
        // quantile (scipy.stats.beta.ppf).
        let (lo, hi) = clopper_pearson(2, 10, 0.95);
        assert!((lo - 0.025_210_726_326_833_36).abs() < 1e-9, "{lo}");
        assert!((hi - 0.556_095_462_307_641_5).abs() < 1e-9, "{hi}");
        let (lo0, hi0) = clopper_pearson(0, 10, 0.95);
        assert_eq!(lo0, 0.0);
        assert!((hi0 - 0.308_497_107_818_760_8).abs() < 1e-9);
        let (lon, hin) = clopper_pearson(10, 10, 0.95);
        assert!((lon - 0.691_502_892_181_239_2).abs() < 1e-9);
        assert_eq!(hin, 1.0);
        // trials = 1: the interval is nearly the whole unit interval.
        let (l1, h1) = clopper_pearson(0, 1, 0.95);
        assert_eq!(l1, 0.0);
        assert!((h1 - 0.975).abs() < 1e-9);
    }

    #[test]
    fn empirical_mean_is_near_zero() {
        let chain = symmetric_two_state();
        let trials = 40_000;
        let n = 6;
        let mean = empirical_mean(&chain, &[1.0, -1.0], &[0.5, 0.5], n, trials, 11);
        // Var(S_n/n) = 1/n for i.i.d. signs; allow five standard errors.
        let se = (1.0 / n as f64 / trials as f64).sqrt();
        assert!(mean.abs() < 5.0 * se, "mean {mean}, se {se}");
    }

    #[cfg(test)]
    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn clopper_pearson_brackets_the_point_estimate(
                trials in 1u64..400,
                numerator in 0u64..400,
            ) {
                let successes = numerator % (trials + 1);
                let (lo, hi) = clopper_pearson(successes, trials, 0.95);
                let point = successes as f64 / trials as f64;
                prop_assert!(0.0 <= lo && lo <= point);
                prop_assert!(point <= hi && hi <= 1.0);
            }
        }
    }
}
