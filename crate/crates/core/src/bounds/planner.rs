//! Sample-size planning: invert a bound family to the smallest `n` whose
//! value drops below a target failure probability.

use super::{evaluate_family, BoundError, BoundFamily, BoundQuery};
use serde::Serialize;

const N_CAP: u64 = 1 << 50;

/// Smallest `n` with `bound(n) <= epsilon`, by doubling then bisection.
/// Bound values are nonincreasing in `n`, so the result brackets exactly:
/// `bound(n) <= epsilon < bound(n - 1)`.
pub fn plan_samples(
    family: BoundFamily,
    base: &BoundQuery,
    epsilon: f64,
) -> Result<u64, BoundError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(BoundError::InvalidEpsilon(epsilon));
    }
    base.validate()?;
    let value_at = |n: u64| -> Result<f64, BoundError> {
        let mut q = base.clone();
        q.n = n;
        Ok(evaluate_family(family, &q)?.value)
    };

    let mut hi = 1u64;
    let mut lo = 0u64; // value(lo) > epsilon once lo >= 1
    loop {
        let v = value_at(hi)?;
        if v <= epsilon {
            break;
        }
        lo = hi;
        if hi >= N_CAP {
            return Err(BoundError::InfeasibleTarget(format!(
                "{} still exceeds {epsilon} at n = {hi}",
                family.name()
            )));
        }
        hi = (hi * 2).min(N_CAP);
    }
    if hi == 1 {
        return Ok(1);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if value_at(mid)? <= epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Planning outcome for one family.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyPlan {
    pub family: BoundFamily,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Per-family sample counts plus the family reaching the target first.
#[derive(Debug, Clone, Serialize)]
pub struct PlanComparison {
    pub plans: Vec<FamilyPlan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best: Option<FamilyPlan>,
}

/// Plan across several families and single out the cheapest.
pub fn plan_all(base: &BoundQuery, epsilon: f64, families: &[BoundFamily]) -> PlanComparison {
    let mut plans = Vec::new();
    let mut best: Option<FamilyPlan> = None;
    for &family in families {
        let plan = match plan_samples(family, base, epsilon) {
            Ok(n) => FamilyPlan {
                family,
                n: Some(n),
                error: None,
            },
            Err(e) => FamilyPlan {
                family,
                n: None,
                error: Some(e.to_string()),
            },
        };
        if let Some(n) = plan.n {
            if best.as_ref().map_or(true, |b| n < b.n.unwrap()) {
                best = Some(plan.clone());
            }
        }
        plans.push(plan);
    }
    PlanComparison { plans, best }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernstein_closed_form_inversion() {
        // beta = 0, V = 0.1, gamma = 0.1, epsilon = 0.01, qnorm = 1:
        // rate = 0.01/(4 * 0.2) = 1/80, n = ceil(80 ln 100) = 369.
        let q = BoundQuery::new(0.1, 1, 0.1, 0.0, 0.0);
        let n = plan_samples(BoundFamily::BernsteinBeta, &q, 0.01).unwrap();
        assert_eq!(n, 369);
    }

    #[test]
    fn exact_bracketing() {
        let q = BoundQuery::new(0.2, 1, 0.4, 0.1, 0.4);
        for family in [
            BoundFamily::BernsteinBeta,
            BoundFamily::BennettAlpha,
            BoundFamily::OptimizedBeta,
            BoundFamily::SimplifiedAlpha,
        ] {
            let n = plan_samples(family, &q, 1e-3).unwrap();
            let mut at = q.clone();
            at.n = n;
            assert!(evaluate_family(family, &at).unwrap().value <= 1e-3);
            if n > 1 {
                at.n = n - 1;
                assert!(evaluate_family(family, &at).unwrap().value > 1e-3);
            }
        }
    }

    #[test]
    fn epsilon_out_of_range_rejected() {
        let q = BoundQuery::new(0.1, 1, 0.1, 0.0, 0.0);
        assert!(matches!(
            plan_samples(BoundFamily::BernsteinBeta, &q, 1.0),
            Err(BoundError::InvalidEpsilon(_))
        ));
        assert!(matches!(
            plan_samples(BoundFamily::BernsteinBeta, &q, 0.0),
            Err(BoundError::InvalidEpsilon(_))
        ));
    }

    #[test]
    fn degenerate_beta_is_infeasible() {
        let q = BoundQuery::new(0.1, 1, 0.1, 0.0, 1.0);
        assert!(matches!(
            plan_samples(BoundFamily::BernsteinBeta, &q, 0.01),
            Err(BoundError::InfeasibleTarget(_))
        ));
        // Alpha families still plan.
        let comparison = plan_all(&q, 0.01, &BoundFamily::BOUNDED);
        let alpha = comparison
            .plans
            .iter()
            .find(|p| p.family == BoundFamily::BernsteinAlpha)
            .unwrap();
        assert!(alpha.n.is_some());
        assert!(comparison.best.is_some());
    }

    #[test]
    fn squaring_epsilon_at_most_doubles_n() {
        let q = BoundQuery::new(0.15, 1, 0.3, 0.05, 0.3);
        for family in [BoundFamily::BernsteinBeta, BoundFamily::BennettBeta] {
            let n1 = plan_samples(family, &q, 0.01).unwrap();
            let n2 = plan_samples(family, &q, 0.01 * 0.01).unwrap();
            assert!(n2 <= 2 * n1 + 1, "{family:?}: {n2} vs {n1}");
        }
    }
}
