//! Analytic tail bounds for `P_q(S_n / n > gamma)` where `S_n` sums a
//! centered observable along a reversible chain.
//!
//! Every family has a beta form (spectral parameter `x = beta^2`) and an
//! alpha form (`x = alpha`); alpha forms pay a multiplicative factor
//! outside the exponent but survive bipartite-like chains where `beta = 1`.
//!
//! Families, from general to specialized:
//!
//! * `optimized-*`  — the master bound with a numerically optimized tilt:
//!   beta form `qnorm * exp(-(n/2) E(r))`, alpha form
//!   `qnorm * e^{2r} * exp(-n E(r))` with
//!   `E(r) = 2 gamma r - V(e^{2r} - 1 - 2r + big_delta(x, r))`.
//! * `bennett-*`    — closed-form tilt `2r = log(1 + g)`,
//!   `g = gamma/(t C V)`, exponent profile `(1+g)log(1+g) - g`.
//! * `bernstein-*`  — tilt `r = (1-x)/(1+x) * gamma / (2(gamma+V))`,
//!   exponent profile `gamma^2 / (V + gamma)`.
//! * `simplified-alpha` — the two-branch relaxation of bernstein-alpha.
//! * `subgaussian-*` — for observables with stationary tail
//!   `s(f >= t) <= C e^{-K t^2}`; tilt `r = gamma K`.
//!
//! Infeasible inputs (degenerate spectra, violated side conditions) yield
//! the trivial bound 1 flagged `feasible = false` rather than an error, so
//! planners can compare families uniformly.

pub mod optimize;
pub mod planner;
pub mod subgaussian;

use crate::observable::ObservableFunction;
use crate::spectrum::Spectrum;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use optimize::{big_delta, delta, feasible_r_max, norm_bound_exponent, optimize_r, tilt_exponent, Optimum, R_CAP};
pub use planner::{plan_all, plan_samples, FamilyPlan, PlanComparison};
pub use subgaussian::{fit_profile, fit_smallest_c, verify_subgaussian, SubgaussianCheck, SubgaussianProfile};

#[derive(Debug, Error, PartialEq)]
pub enum BoundError {
    #[error("invalid bound query: {0}")]
    InvalidQuery(String),
    #[error("Bennett slack parameter t = {0} must be >= 1")]
    InvalidT(f64),
    #[error("variance is zero; the Bennett tilt is undefined")]
    ZeroVariance,
    #[error("tilt r = {r} is infeasible: delta = {delta}")]
    InfeasibleR { r: f64, delta: f64 },
    #[error("invalid subgaussian profile: {0}")]
    InvalidProfile(String),
    #[error("target failure probability must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("no sample size reaches the target: {0}")]
    InfeasibleTarget(String),
}

/// Which spectral parameter a bound is phrased in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Beta,
    Alpha,
}

/// Identifies one evaluated bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundFamily {
    #[serde(rename = "optimized-beta")]
    OptimizedBeta,
    #[serde(rename = "optimized-alpha")]
    OptimizedAlpha,
    #[serde(rename = "bennett-beta")]
    BennettBeta,
    #[serde(rename = "bennett-alpha")]
    BennettAlpha,
    #[serde(rename = "bernstein-beta")]
    BernsteinBeta,
    #[serde(rename = "bernstein-alpha")]
    BernsteinAlpha,
    #[serde(rename = "simplified-alpha")]
    SimplifiedAlpha,
    #[serde(rename = "subgaussian-beta")]
    SubgaussianBeta,
    #[serde(rename = "subgaussian-alpha")]
    SubgaussianAlpha,
}

impl BoundFamily {
    pub const ALL: [BoundFamily; 9] = [
        BoundFamily::OptimizedBeta,
        BoundFamily::OptimizedAlpha,
        BoundFamily::BennettBeta,
        BoundFamily::BennettAlpha,
        BoundFamily::BernsteinBeta,
        BoundFamily::BernsteinAlpha,
        BoundFamily::SimplifiedAlpha,
        BoundFamily::SubgaussianBeta,
        BoundFamily::SubgaussianAlpha,
    ];

    /// The families for bounded observables (no subgaussian profile).
    pub const BOUNDED: [BoundFamily; 7] = [
        BoundFamily::OptimizedBeta,
        BoundFamily::OptimizedAlpha,
        BoundFamily::BennettBeta,
        BoundFamily::BennettAlpha,
        BoundFamily::BernsteinBeta,
        BoundFamily::BernsteinAlpha,
        BoundFamily::SimplifiedAlpha,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BoundFamily::OptimizedBeta => "optimized-beta",
            BoundFamily::OptimizedAlpha => "optimized-alpha",
            BoundFamily::BennettBeta => "bennett-beta",
            BoundFamily::BennettAlpha => "bennett-alpha",
            BoundFamily::BernsteinBeta => "bernstein-beta",
            BoundFamily::BernsteinAlpha => "bernstein-alpha",
            BoundFamily::SimplifiedAlpha => "simplified-alpha",
            BoundFamily::SubgaussianBeta => "subgaussian-beta",
            BoundFamily::SubgaussianAlpha => "subgaussian-alpha",
        }
    }

    pub fn parse(name: &str) -> Option<BoundFamily> {
        BoundFamily::ALL.iter().copied().find(|f| f.name() == name)
    }
}

/// Everything a bound evaluation needs, reduced to scalars.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundQuery {
    /// Deviation threshold, `> 0`, on the normalized scale.
    pub gamma: f64,
    /// Number of chain samples.
    pub n: u64,
    /// Stationary variance of the observable.
    pub variance: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Starting-distribution penalty; 1 for a stationary start.
    pub q_norm: f64,
    /// Bennett slack parameter; `None` picks the smallest value satisfying
    /// the side condition, padded by 1e-9.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subgaussian: Option<SubgaussianProfile>,
    /// Opt-in wider validity range for the subgaussian beta form (up to the
    /// beta^2 threshold, where the estimate turns trivial). Off by default.
    #[serde(default)]
    pub extended_range: bool,
}

impl BoundQuery {
    /// Scalar query with a stationary start and default Bennett slack.
    pub fn new(gamma: f64, n: u64, variance: f64, alpha: f64, beta: f64) -> Self {
        BoundQuery {
            gamma,
            n,
            variance,
            alpha,
            beta,
            q_norm: 1.0,
            t: None,
            subgaussian: None,
            extended_range: false,
        }
    }

    /// Assemble from chain-level pieces.
    pub fn from_parts(
        gamma: f64,
        n: u64,
        observable: &ObservableFunction,
        spectrum: &Spectrum,
        q_norm: f64,
    ) -> Self {
        BoundQuery {
            gamma,
            n,
            variance: observable.variance(),
            alpha: spectrum.alpha(),
            beta: spectrum.beta(),
            q_norm,
            t: None,
            subgaussian: None,
            extended_range: false,
        }
    }

    pub fn validate(&self) -> Result<(), BoundError> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(BoundError::InvalidQuery(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.n < 1 {
            return Err(BoundError::InvalidQuery("n must be >= 1".into()));
        }
        if !(self.variance >= 0.0) {
            return Err(BoundError::InvalidQuery(format!(
                "variance must be nonnegative, got {}",
                self.variance
            )));
        }
        if !(0.0 <= self.alpha && self.alpha <= self.beta && self.beta <= 1.0) {
            return Err(BoundError::InvalidQuery(format!(
                "need 0 <= alpha <= beta <= 1, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        if !(self.q_norm >= 1.0 - 1e-9) {
            return Err(BoundError::InvalidQuery(format!(
                "q_norm must be >= 1, got {}",
                self.q_norm
            )));
        }
        if let Some(t) = self.t {
            if !(t >= 1.0) {
                return Err(BoundError::InvalidT(t));
            }
        }
        Ok(())
    }

    fn x(&self, form: Form) -> f64 {
        match form {
            Form::Beta => self.beta * self.beta,
            Form::Alpha => self.alpha,
        }
    }
}

/// One named side condition verdict inside a bound result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

impl Condition {
    fn new(name: &str, ok: bool, detail: String) -> Self {
        Condition {
            name: name.to_string(),
            ok,
            detail,
        }
    }
}

/// A tail-probability bound value with its provenance.
///
/// `value = min(1, prefactor * exp(-n * exponent_per_sample))`, clamped
/// because a probability bound above 1 carries no information. Infeasible
/// results carry `value = 1`, `feasible = false`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundResult {
    pub family: BoundFamily,
    pub value: f64,
    pub r_used: f64,
    pub exponent_per_sample: f64,
    pub prefactor: f64,
    pub feasible: bool,
    pub conditions: Vec<Condition>,
    /// Bennett's weaker displayed log-form companion bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_form_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundResult {
    fn trivial(family: BoundFamily, conditions: Vec<Condition>) -> Self {
        BoundResult {
            family,
            value: 1.0,
            r_used: 0.0,
            exponent_per_sample: 0.0,
            prefactor: 1.0,
            feasible: false,
            conditions,
            log_form_value: None,
            note: Some("infeasible: trivial bound".into()),
        }
    }

    fn evaluated(
        family: BoundFamily,
        n: u64,
        prefactor: f64,
        rate: f64,
        r_used: f64,
        conditions: Vec<Condition>,
    ) -> Self {
        BoundResult {
            family,
            value: clamp_probability(prefactor.ln() - n as f64 * rate),
            r_used,
            exponent_per_sample: rate,
            prefactor,
            feasible: true,
            conditions,
            log_form_value: None,
            note: None,
        }
    }

    fn with_range_note(mut self, query: &BoundQuery) -> Self {
        // Bounded observables are normalized to max-abs 1, so a deviation
        // beyond 1 cannot happen; the bound still evaluates, annotated.
        if query.gamma > 1.0 {
            self.note = Some("vacuous: deviation exceeds range".into());
        }
        self
    }
}

fn clamp_probability(log_value: f64) -> f64 {
    if log_value >= 0.0 {
        1.0
    } else {
        log_value.exp()
    }
}

/// Bennett constant `C = 2 (1 + x) / (1 - x)`.
fn bennett_constant(x: f64) -> f64 {
    2.0 * (1.0 + x) / (1.0 - x)
}

/// Smallest Bennett slack satisfying `gamma <= (t-1)(1+x)/x V`, padded.
fn minimal_bennett_t(x: f64, gamma: f64, variance: f64) -> f64 {
    if x == 0.0 || variance == 0.0 {
        1.0 + 1e-9
    } else {
        (1.0 + x * gamma / ((1.0 + x) * variance)).max(1.0) + 1e-9
    }
}

fn effective_bennett_t(query: &BoundQuery, x: f64) -> f64 {
    query
        .t
        .unwrap_or_else(|| minimal_bennett_t(x, query.gamma, query.variance))
}

/// Closed-form Bernstein tilt for spectral parameter `x`.
pub(crate) fn bernstein_tilt(x: f64, gamma: f64, variance: f64) -> f64 {
    (1.0 - x) / (1.0 + x) * gamma / (2.0 * (gamma + variance))
}

/// Closed-form Bennett tilt `r = log(1 + g) / 2` for spectral parameter `x`.
pub(crate) fn bennett_tilt(x: f64, gamma: f64, variance: f64, t: f64) -> Option<f64> {
    if variance <= 0.0 || x >= 1.0 {
        return None;
    }
    let g = gamma / (t * bennett_constant(x) * variance);
    Some(0.5 * g.ln_1p())
}

/// The master bound with a numerically optimized tilt. The optimizer also
/// tries the Bennett and Bernstein closed-form tilts, so this bound never
/// falls above those corollaries on feasible inputs.
pub fn optimized_bound(query: &BoundQuery, form: Form) -> Result<BoundResult, BoundError> {
    query.validate()?;
    let family = match form {
        Form::Beta => BoundFamily::OptimizedBeta,
        Form::Alpha => BoundFamily::OptimizedAlpha,
    };
    let x = query.x(form);
    let v = query.variance;
    let gamma = query.gamma;
    let n = query.n as f64;

    let mut conditions = vec![Condition::new(
        "spectral-parameter-below-one",
        x < 1.0,
        format!("x = {x}"),
    )];
    if x >= 1.0 {
        return Ok(BoundResult::trivial(family, conditions).with_range_note(query));
    }

    let r_max = feasible_r_max(x, v);
    let r_cap = if r_max.is_finite() {
        (r_max * (1.0 - 1e-9)).min(R_CAP)
    } else {
        R_CAP
    };

    // Log-scale objective: -(log value - log qnorm) as a function of r.
    let objective = |r: f64| -> Option<f64> {
        let e = tilt_exponent(x, v, gamma, r)?;
        Some(match form {
            Form::Beta => 0.5 * n * e,
            Form::Alpha => n * e - 2.0 * r,
        })
    };

    let mut candidates = vec![bernstein_tilt(x, gamma, v)];
    let t = effective_bennett_t(query, x);
    if let Some(r) = bennett_tilt(x, gamma, v, t) {
        candidates.push(r);
    }
    let best = optimize_r(objective, r_cap, &candidates);

    let exponent = tilt_exponent(x, v, gamma, best.r)
        .expect("optimizer returned an infeasible tilt");
    conditions.push(Condition::new(
        "tilt-feasible",
        true,
        format!("delta(x, r) = {} at r = {}", delta(x, best.r, v), best.r),
    ));

    let (prefactor, rate) = match form {
        Form::Beta => (query.q_norm, 0.5 * exponent),
        Form::Alpha => (query.q_norm * (2.0 * best.r).exp(), exponent),
    };
    Ok(
        BoundResult::evaluated(family, query.n, prefactor, rate, best.r, conditions)
            .with_range_note(query),
    )
}

/// Bennett-type bound: strongest for deviations far beyond the variance.
///
/// With `g = gamma / (t C V)` and `h(u) = (1+u)log(1+u) - u`:
/// beta form `qnorm * exp(-(n/2) t C V h(g))`, alpha form
/// `(1+g) * qnorm * exp(-n t C V h(g))`. The weaker companion
/// `exp(-(n/2) gamma log(gamma / (e t C V)))` (same prefactors, `n` for
/// alpha) is reported alongside. Side condition
/// `gamma <= (t-1)(1+x)/x V`, vacuous at `x = 0`.
pub fn bennett_bound(query: &BoundQuery, form: Form) -> Result<BoundResult, BoundError> {
    query.validate()?;
    if let Some(t) = query.t {
        if t < 1.0 {
            return Err(BoundError::InvalidT(t));
        }
    }
    if query.variance == 0.0 {
        return Err(BoundError::ZeroVariance);
    }
    let family = match form {
        Form::Beta => BoundFamily::BennettBeta,
        Form::Alpha => BoundFamily::BennettAlpha,
    };
    let x = query.x(form);
    let v = query.variance;
    let gamma = query.gamma;
    let t = effective_bennett_t(query, x);

    let mut conditions = vec![Condition::new(
        "spectral-parameter-below-one",
        x < 1.0,
        format!("x = {x}"),
    )];
    if x >= 1.0 {
        return Ok(BoundResult::trivial(family, conditions).with_range_note(query));
    }

    let threshold = if x == 0.0 {
        f64::INFINITY
    } else {
        (t - 1.0) * (1.0 + x) / x * v
    };
    let condition_ok = gamma <= threshold;
    conditions.push(Condition::new(
        "deviation-within-bennett-threshold",
        condition_ok,
        if x == 0.0 {
            "threshold diverges at x = 0; condition vacuous".to_string()
        } else {
            format!("gamma = {gamma} vs (t-1)(1+x)/x V = {threshold}")
        },
    ));
    if !condition_ok {
        return Ok(BoundResult::trivial(family, conditions).with_range_note(query));
    }

    let c = bennett_constant(x);
    let scale = t * c * v;
    let g = gamma / scale;
    // (1+g) log(1+g) - g via log1p; the naive form cancels badly for small g.
    let h = (1.0 + g) * g.ln_1p() - g;
    let r_used = 0.5 * g.ln_1p();

    let (prefactor, rate, log_rate) = match form {
        Form::Beta => (query.q_norm, 0.5 * scale * h, 0.5 * gamma * (gamma / (std::f64::consts::E * scale)).ln()),
        Form::Alpha => (
            (1.0 + g) * query.q_norm,
            scale * h,
            gamma * (gamma / (std::f64::consts::E * scale)).ln(),
        ),
    };
    let mut result =
        BoundResult::evaluated(family, query.n, prefactor, rate, r_used, conditions);
    result.log_form_value = Some(clamp_probability(
        prefactor.ln() - query.n as f64 * log_rate,
    ));
    Ok(result.with_range_note(query))
}

/// Bernstein-type bound: the `gamma^2 / (V + gamma)` profile interpolating
/// Gaussian and exponential decay.
///
/// Beta form `qnorm * exp(-n (1-b^2)/(1+b^2) gamma^2 / (4(V+gamma)))`.
/// Alpha form `e^{2r} * qnorm * exp(-n (1-a)/(1+a) gamma^2 / (2(V+gamma)))`
/// with the tilt `r = (1-a)/(1+a) gamma / (2(gamma+V))`; the prefactor is
/// exactly the master bound's `e^{2r}` factor at that tilt, which keeps
/// this a pointwise relaxation of the optimized alpha bound.
pub fn bernstein_bound(query: &BoundQuery, form: Form) -> Result<BoundResult, BoundError> {
    query.validate()?;
    let family = match form {
        Form::Beta => BoundFamily::BernsteinBeta,
        Form::Alpha => BoundFamily::BernsteinAlpha,
    };
    let x = query.x(form);
    let conditions = vec![Condition::new(
        "spectral-parameter-below-one",
        x < 1.0,
        format!("x = {x}"),
    )];
    if x >= 1.0 {
        return Ok(BoundResult::trivial(family, conditions).with_range_note(query));
    }
    let v = query.variance;
    let gamma = query.gamma;
    let factor = (1.0 - x) / (1.0 + x);
    let r_used = bernstein_tilt(x, gamma, v);

    let (prefactor, rate) = match form {
        Form::Beta => (query.q_norm, factor * gamma * gamma / (4.0 * (v + gamma))),
        Form::Alpha => (
            query.q_norm * (2.0 * r_used).exp(),
            factor * gamma * gamma / (2.0 * (v + gamma)),
        ),
    };
    Ok(
        BoundResult::evaluated(family, query.n, prefactor, rate, r_used, conditions)
            .with_range_note(query),
    )
}

/// Two-branch relaxation of the Bernstein alpha bound:
/// `e^{(1-a) gamma^2 / 4V} qnorm e^{-(n/8V)(1-a) gamma^2}` for
/// `gamma <= V`, and `e^{(1-a) gamma / 4} qnorm e^{-(n/8)(1-a) gamma}` for
/// `gamma >= V`; the branches agree at `gamma = V`.
pub fn simplified_bound(query: &BoundQuery) -> Result<BoundResult, BoundError> {
    query.validate()?;
    let family = BoundFamily::SimplifiedAlpha;
    let alpha = query.alpha;
    let conditions = vec![Condition::new(
        "spectral-parameter-below-one",
        alpha < 1.0,
        format!("alpha = {alpha}"),
    )];
    if alpha >= 1.0 {
        return Ok(BoundResult::trivial(family, conditions).with_range_note(query));
    }
    let gamma = query.gamma;
    let v = query.variance;
    let one_minus = 1.0 - alpha;
    let (pre_exponent, rate) = if gamma <= v {
        (
            one_minus * gamma * gamma / (4.0 * v),
            one_minus * gamma * gamma / (8.0 * v),
        )
    } else {
        (one_minus * gamma / 4.0, one_minus * gamma / 8.0)
    };
    let prefactor = query.q_norm * pre_exponent.exp();
    let r_used = bernstein_tilt(alpha, gamma, v);
    Ok(
        BoundResult::evaluated(family, query.n, prefactor, rate, r_used, conditions)
            .with_range_note(query),
    )
}

/// Evaluate one family by tag.
pub fn evaluate_family(family: BoundFamily, query: &BoundQuery) -> Result<BoundResult, BoundError> {
    match family {
        BoundFamily::OptimizedBeta => optimized_bound(query, Form::Beta),
        BoundFamily::OptimizedAlpha => optimized_bound(query, Form::Alpha),
        BoundFamily::BennettBeta => bennett_bound(query, Form::Beta),
        BoundFamily::BennettAlpha => bennett_bound(query, Form::Alpha),
        BoundFamily::BernsteinBeta => bernstein_bound(query, Form::Beta),
        BoundFamily::BernsteinAlpha => bernstein_bound(query, Form::Alpha),
        BoundFamily::SimplifiedAlpha => simplified_bound(query),
        BoundFamily::SubgaussianBeta => subgaussian::subgaussian_bound(query, Form::Beta),
        BoundFamily::SubgaussianAlpha => subgaussian::subgaussian_bound(query, Form::Alpha),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_spectral_parameter_recovers_iid_exponent() {
        // At beta = 0 the correction vanishes identically and the beta-form
        // exponent is the classical 2 gamma r - V(e^{2r} - 1 - 2r).
        let q = BoundQuery::new(0.5, 10, 1.0, 0.0, 0.0);
        for r in [0.05, 0.2, 0.7, 1.3] {
            let e = tilt_exponent(0.0, 1.0, 0.5, r).unwrap();
            let reference = 2.0 * 0.5 * r - ((2.0 * r).exp_m1() - 2.0 * r);
            assert_eq!(e, reference);
        }
        // Frozen: value at the fixed tilt r = 0.2 is 0.582237690447518
        // (offline, 30 digits); the optimizer must do at least as well.
        let result = optimized_bound(&q, Form::Beta).unwrap();
        assert!(result.feasible);
        assert!(result.value <= 0.582_237_690_447_518_4 + 1e-12);
    }

    #[test]
    fn optimized_bound_with_degenerate_beta_is_trivial() {
        let q = BoundQuery::new(0.5, 10, 1.0, 0.0, 1.0);
        let result = optimized_bound(&q, Form::Beta).unwrap();
        assert!(!result.feasible);
        assert_eq!(result.value, 1.0);
        // The alpha form is unaffected.
        let alpha = optimized_bound(&q, Form::Alpha).unwrap();
        assert!(alpha.feasible);
    }

    #[test]
    fn bennett_frozen_value() {
        // beta = 0, t = 1, V = 0.1, gamma = 0.4, n = 100: C = 2, g = 2,
        // h(2) = 3 ln 3 - 2, value = exp(-10 h(2)) = 2.3564161820566e-6.
        let mut q = BoundQuery::new(0.4, 100, 0.1, 0.0, 0.0);
        q.t = Some(1.0);
        let result = bennett_bound(&q, Form::Beta).unwrap();
        assert!(result.feasible);
        assert!(
            (result.value - 2.356_416_182_056_631e-6).abs() < 1e-18,
            "{}",
            result.value
        );
        assert!((result.r_used - 0.5 * 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn bennett_small_g_is_gaussian() {
        // h(g) -> g^2/2 as g -> 0; exercised through the tiny-gamma regime.
        let g: f64 = 1e-8;
        let h = (1.0 + g) * g.ln_1p() - g;
        assert!((h / (g * g / 2.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bennett_first_form_below_log_form() {
        for gamma in [0.05, 0.2, 0.5, 0.9] {
            for v in [0.05, 0.3, 1.0] {
                for beta in [0.0f64, 0.3, 0.8] {
                    for t in [1.25, 1.5, 2.0, 4.0] {
                        let mut q = BoundQuery::new(gamma, 40, v, beta.min(0.99), beta);
                        q.t = Some(t);
                        for form in [Form::Beta, Form::Alpha] {
                            let r = bennett_bound(&q, form).unwrap();
                            if r.feasible {
                                let log_form = r.log_form_value.unwrap();
                                assert!(
                                    r.value <= log_form * (1.0 + 1e-12),
                                    "{gamma} {v} {beta} {t} {:?}: {} vs {log_form}",
                                    form,
                                    r.value
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bennett_violated_side_condition_is_trivial() {
        let mut q = BoundQuery::new(0.9, 50, 0.01, 0.8, 0.9);
        q.t = Some(1.0 + 1e-12);
        let result = bennett_bound(&q, Form::Beta).unwrap();
        assert!(!result.feasible);
        assert_eq!(result.value, 1.0);
    }

    #[test]
    fn bennett_rejects_bad_inputs() {
        let mut q = BoundQuery::new(0.4, 100, 0.1, 0.0, 0.0);
        q.t = Some(0.5);
        assert_eq!(
            bennett_bound(&q, Form::Beta).unwrap_err(),
            BoundError::InvalidT(0.5)
        );
        let q0 = BoundQuery::new(0.4, 100, 0.0, 0.0, 0.0);
        assert_eq!(
            bennett_bound(&q0, Form::Beta).unwrap_err(),
            BoundError::ZeroVariance
        );
    }

    #[test]
    fn bernstein_frozen_value() {
        // x = beta^2 = 1/3, V = 0.2, gamma = 0.3, n = 200:
        // (1-x)/(1+x) = 1/2, value = exp(-200 * 0.5 * 0.09 / (4 * 0.5))
        //             = exp(-4.5) = 0.011108996538242306.
        let q = BoundQuery::new(0.3, 200, 0.2, 0.0, (1.0f64 / 3.0).sqrt());
        let result = bernstein_bound(&q, Form::Beta).unwrap();
        assert!((result.value - 0.011_108_996_538_242_306).abs() < 1e-15);
    }

    #[test]
    fn bernstein_beta_zero_special_cases() {
        // Classical shape at beta = 0 and the gamma = V corner.
        let q = BoundQuery::new(0.25, 1, 1.0, 0.0, 0.0);
        let r = bernstein_bound(&q, Form::Beta).unwrap();
        let expected_rate = 0.25 * 0.25 / (4.0 * 1.25);
        assert_eq!(r.exponent_per_sample, expected_rate);

        let qv = BoundQuery::new(0.4, 1, 0.4, 0.0, 0.0);
        let rv = bernstein_bound(&qv, Form::Beta).unwrap();
        assert!((rv.exponent_per_sample - 0.4 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn simplified_frozen_value_and_branch_agreement() {
        // alpha = 0, V = 1, gamma = 1, n = 80:
        // e^{1/4} e^{-10} = 5.82946637308688e-5.
        let q = BoundQuery::new(1.0, 80, 1.0, 0.0, 0.0);
        let r = simplified_bound(&q).unwrap();
        assert!((r.value - 5.829_466_373_086_881e-5).abs() < 1e-17);

        // The two branches agree at gamma = V.
        let qe = BoundQuery::new(0.37, 25, 0.37, 0.2, 0.5);
        let at_equal = simplified_bound(&qe).unwrap();
        let lo = {
            let mut q2 = qe.clone();
            q2.gamma = 0.37 - 1e-12;
            simplified_bound(&q2).unwrap()
        };
        assert!((at_equal.value - lo.value).abs() < 1e-9);
    }

    #[test]
    fn vacuous_deviation_is_annotated() {
        let q = BoundQuery::new(1.5, 10, 1.0, 0.0, 0.0);
        let r = bernstein_bound(&q, Form::Beta).unwrap();
        assert_eq!(r.note.as_deref(), Some("vacuous: deviation exceeds range"));
    }

    #[test]
    fn values_are_clamped_probabilities() {
        // Tiny n with a big prefactor would exceed 1 unclamped.
        let mut q = BoundQuery::new(0.1, 1, 1.0, 0.5, 0.8);
        q.q_norm = 3.0;
        for family in BoundFamily::BOUNDED {
            let r = evaluate_family(family, &q).unwrap();
            assert!(
                (0.0..=1.0).contains(&r.value),
                "{family:?} -> {}",
                r.value
            );
            assert!(
                r.value <= 1.0 && r.value >= 0.0,
                "{family:?} out of range"
            );
        }
    }

    #[test]
    fn monotone_in_n_and_qnorm() {
        for family in BoundFamily::BOUNDED {
            let mut prev = f64::INFINITY;
            for n in [1u64, 2, 4, 8, 16, 64, 256] {
                let q = BoundQuery::new(0.3, n, 0.5, 0.2, 0.6);
                let r = evaluate_family(family, &q).unwrap();
                assert!(
                    r.value <= prev + 1e-12,
                    "{family:?} not monotone in n at {n}"
                );
                prev = r.value;
            }
            let mut q1 = BoundQuery::new(0.3, 64, 0.5, 0.2, 0.6);
            let base = evaluate_family(family, &q1).unwrap().value;
            q1.q_norm = 2.5;
            let bumped = evaluate_family(family, &q1).unwrap().value;
            assert!(bumped >= base - 1e-12, "{family:?} not monotone in qnorm");
        }
    }

    #[test]
    fn optimized_nondecreasing_in_spectral_parameter() {
        for form in [Form::Beta, Form::Alpha] {
            let mut prev = 0.0f64;
            for grid in 0..8 {
                let level = grid as f64 / 8.0;
                let q = BoundQuery::new(0.4, 30, 0.8, level, level.sqrt());
                let r = optimized_bound(&q, form).unwrap();
                assert!(
                    r.value >= prev - 1e-12,
                    "{form:?} decreased at level {level}: {} < {prev}",
                    r.value
                );
                prev = r.value;
            }
        }
    }

    #[test]
    fn relaxation_ordering_on_grid() {
        // The optimized bound evaluates the corollary tilts, so it never
        // exceeds Bennett or Bernstein where their side conditions hold.
        for gamma in [0.05, 0.2, 0.5, 0.8] {
            for v in [0.1, 0.5, 1.0] {
                for beta in [0.0, 0.25, 0.6, 0.9] {
                    for n in [1u64, 4, 16, 128] {
                        let alpha = beta * 0.7;
                        let q = BoundQuery::new(gamma, n, v, alpha, beta);
                        for (form, bern_family) in
                            [(Form::Beta, Form::Beta), (Form::Alpha, Form::Alpha)]
                        {
                            let master = optimized_bound(&q, form).unwrap();
                            let bern = bernstein_bound(&q, bern_family).unwrap();
                            if bern.feasible {
                                assert!(
                                    master.value <= bern.value * (1.0 + 1e-9),
                                    "bernstein {form:?} at gamma={gamma} v={v} beta={beta} n={n}: {} vs {}",
                                    master.value,
                                    bern.value
                                );
                            }
                            let bennett = bennett_bound(&q, form).unwrap();
                            if bennett.feasible {
                                assert!(
                                    master.value <= bennett.value * (1.0 + 1e-9),
                                    "bennett {form:?} at gamma={gamma} v={v} beta={beta} n={n}: {} vs {}",
                                    master.value,
                                    bennett.value
                                );
                            }
                        }
                    }
                }
            }
        }
    }
}
