//! Bounds for observables with subgaussian stationary tails
//! `s(f >= t) <= C e^{-K t^2}`, where the max-abs-1 assumption is dropped
//! and only centering is required.

use super::{BoundError, BoundFamily, BoundQuery, Condition, Form};
use serde::{Deserialize, Serialize};

/// Stationary tail profile `s(f >= t) <= C e^{-K t^2}` together with the
/// observable's sup norm (which controls the validity range).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubgaussianProfile {
    pub c: f64,
    pub k: f64,
    pub f_infinity: f64,
}

impl SubgaussianProfile {
    pub fn new(c: f64, k: f64, f_infinity: f64) -> Result<Self, BoundError> {
        let profile = SubgaussianProfile { c, k, f_infinity };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<(), BoundError> {
        for (name, v) in [("C", self.c), ("K", self.k), ("f_infinity", self.f_infinity)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(BoundError::InvalidProfile(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Deviation where the decay rate `gamma^2 K - log(C sqrt(pi K) gamma + 2)`
/// turns positive. The expression is convex in gamma and negative at 0, so
/// the crossing is unique.
pub fn positive_rate_crossover(c: f64, k: f64) -> f64 {
    let rate = |g: f64| g * g * k - (c * (std::f64::consts::PI * k).sqrt() * g + 2.0).ln();
    let mut hi = 1.0;
    while rate(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Tail bound under a subgaussian profile.
///
/// Beta form: `qnorm * exp(-(n/2)(gamma^2 K - log(C sqrt(pi K) gamma + 2)))`,
/// valid while `gamma <= log(1/(2 beta) + 1/2) / (2 K ‖f‖∞)`.
/// Alpha form: `qnorm * e^{2 gamma K} * exp(-n (...))`, valid while
/// `gamma <= log(1/(2 sqrt(alpha)) + 1/2) / (2 K ‖f‖∞)`.
/// The tilt is `r = gamma K`. With `extended_range` set, the beta-form
/// window stretches to the `beta^2` threshold, at whose endpoint the
/// estimate turns trivial; off by default.
pub fn subgaussian_bound(query: &BoundQuery, form: Form) -> Result<super::BoundResult, BoundError> {
    query.validate()?;
    let profile = query
        .subgaussian
        .ok_or_else(|| BoundError::InvalidProfile("no profile supplied".into()))?;
    profile.validate()?;
    let family = match form {
        Form::Beta => BoundFamily::SubgaussianBeta,
        Form::Alpha => BoundFamily::SubgaussianAlpha,
    };
    let gamma = query.gamma;
    let k = profile.k;
    let c = profile.c;

    let (threshold, threshold_detail) = match form {
        Form::Beta => {
            if query.beta == 0.0 {
                (f64::INFINITY, "beta = 0: unrestricted".to_string())
            } else if query.extended_range {
                let t = (1.0 / (2.0 * query.beta * query.beta) + 0.5).ln()
                    / (2.0 * k * profile.f_infinity);
                (t, format!("extended beta^2 range: gamma <= {t}"))
            } else {
                let t = (1.0 / (2.0 * query.beta) + 0.5).ln() / (2.0 * k * profile.f_infinity);
                (t, format!("gamma <= log(1/(2 beta) + 1/2)/(2K‖f‖∞) = {t}"))
            }
        }
        Form::Alpha => {
            if query.alpha == 0.0 {
                (f64::INFINITY, "alpha = 0: unrestricted".to_string())
            } else {
                let t = (1.0 / (2.0 * query.alpha.sqrt()) + 0.5).ln()
                    / (2.0 * k * profile.f_infinity);
                (t, format!("gamma <= log(1/(2 sqrt(alpha)) + 1/2)/(2K‖f‖∞) = {t}"))
            }
        }
    };

    let valid = gamma <= threshold;
    let mut conditions = vec![Condition::new(
        "deviation-within-validity-range",
        valid,
        threshold_detail,
    )];
    if !valid {
        return Ok(super::BoundResult::trivial(family, conditions));
    }

    let rate_inner = gamma * gamma * k - (c * (std::f64::consts::PI * k).sqrt() * gamma + 2.0).ln();
    let crossover = positive_rate_crossover(c, k);
    conditions.push(Condition::new(
        "positive-decay-rate",
        rate_inner > 0.0,
        format!("rate turns positive past gamma = {crossover}"),
    ));

    let r_used = gamma * k;
    let (prefactor, rate) = match form {
        Form::Beta => (query.q_norm, 0.5 * rate_inner),
        Form::Alpha => (query.q_norm * (2.0 * gamma * k).exp(), rate_inner),
    };
    Ok(super::BoundResult::evaluated(
        family, query.n, prefactor, rate, r_used, conditions,
    ))
}

/// Report from checking a profile against the actual stationary tail.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SubgaussianCheck {
    pub pass: bool,
    /// Smallest `C e^{-K t^2} - s(f >= t)` over the checked thresholds;
    /// negative means the profile is violated there.
    pub worst_margin: f64,
    /// `(threshold, empirical tail, profile bound)` per distinct positive
    /// value of the observable.
    pub thresholds: Vec<(f64, f64, f64)>,
}

fn stationary_tail(values: &[f64], s: &[f64], t: f64) -> f64 {
    values
        .iter()
        .zip(s)
        .filter(|(v, _)| **v >= t)
        .map(|(_, si)| si)
        .sum()
}

fn distinct_positive_values(values: &[f64]) -> Vec<f64> {
    let mut positive: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    positive.sort_by(|a, b| a.partial_cmp(b).unwrap());
    positive.dedup();
    positive
}

/// Check `s(f >= t) <= C e^{-K t^2}` at every distinct positive value of
/// `f`. That is sufficient: the empirical tail is a step function jumping
/// only at those values, and between jumps the profile bound only tightens
/// toward the next checked threshold.
pub fn verify_subgaussian(
    values: &[f64],
    s: &[f64],
    profile: &SubgaussianProfile,
) -> SubgaussianCheck {
    assert_eq!(values.len(), s.len());
    let mut worst = f64::INFINITY;
    let mut rows = Vec::new();
    for t in distinct_positive_values(values) {
        let tail = stationary_tail(values, s, t);
        let bound = profile.c * (-profile.k * t * t).exp();
        worst = worst.min(bound - tail);
        rows.push((t, tail, bound));
    }
    if rows.is_empty() {
        worst = 0.0;
    }
    SubgaussianCheck {
        pass: worst >= -1e-12,
        worst_margin: worst,
        thresholds: rows,
    }
}

/// Smallest `C` making the profile hold for a given rate `K`; 0 when the
/// observable has no positive values (any positive `C` then works).
pub fn fit_smallest_c(values: &[f64], s: &[f64], k: f64) -> f64 {
    distinct_positive_values(values)
        .into_iter()
        .map(|t| stationary_tail(values, s, t) * (k * t * t).exp())
        .fold(0.0f64, f64::max)
}

/// Scan a grid of rates, returning `(K, smallest C)` pairs.
pub fn fit_profile(values: &[f64], s: &[f64], ks: &[f64]) -> Vec<(f64, f64)> {
    ks.iter()
        .map(|&k| (k, fit_smallest_c(values, s, k)))
        .collect()
}
