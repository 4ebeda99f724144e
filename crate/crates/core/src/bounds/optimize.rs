//! The exponential-tilt terms shared by all bound families and the
//! one-dimensional search for the best tilt.
//!
//! ```text
//! delta(x, r)     = x (e^{2r} + V (e^r - 1)^2)        feasibility term
//! big_delta(x, r) = 4 x e^{2r} (e^r - 1)^2 / (1 - delta(x, r))
//! ```
//!
//! `x` is the spectral parameter (beta^2 for the beta family, alpha for the
//! alpha family). A tilt `r` is feasible while `delta(x, r) < 1`; `delta`
//! is strictly increasing in `r` for `x > 0`, so the feasible range is an
//! interval `[0, r_max)`.

use super::BoundError;

/// Hard cap on the tilt search. Exponents are hopeless long before this,
/// and capping keeps `e^{2r}` far from overflow.
pub const R_CAP: f64 = 20.0;

/// `delta(x, r) = x (e^{2r} + V (e^r - 1)^2)`.
pub fn delta(x: f64, r: f64, variance: f64) -> f64 {
    let em1 = r.exp_m1();
    x * ((2.0 * r).exp() + variance * em1 * em1)
}

/// `4 x e^{2r} (e^r - 1)^2 / (1 - delta(x, r))`; requires `delta < 1`.
pub fn big_delta(x: f64, r: f64, variance: f64) -> Result<f64, BoundError> {
    let d = delta(x, r, variance);
    if d >= 1.0 {
        return Err(BoundError::InfeasibleR { r, delta: d });
    }
    Ok(big_delta_unchecked(x, r, d))
}

#[inline]
fn big_delta_unchecked(x: f64, r: f64, d: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let em1 = r.exp_m1();
    4.0 * x * (2.0 * r).exp() * em1 * em1 / (1.0 - d)
}

/// Largest feasible tilt: the unique `r* > 0` with `delta(x, r*) = 1`,
/// located by bisection to absolute tolerance 1e-12. Returns infinity for
/// `x = 0` (the term vanishes identically) and 0 for `x >= 1` (no positive
/// tilt is feasible).
pub fn feasible_r_max(x: f64, variance: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    if x >= 1.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while delta(x, hi, variance) <= 1.0 {
        hi *= 2.0;
        if hi > 1e6 {
            // delta >= x e^{2r} always crosses 1; unreachable in practice.
            return hi;
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if delta(x, mid, variance) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `V (e^{2r} - 1 - 2r + big_delta(x, r))`: the exponent bounding the
/// squared weighted operator norm of the tilted transition. `None` when
/// the tilt is infeasible.
pub fn norm_bound_exponent(x: f64, variance: f64, r: f64) -> Option<f64> {
    let d = delta(x, r, variance);
    if d >= 1.0 {
        return None;
    }
    let growth = (2.0 * r).exp_m1() - 2.0 * r;
    let correction = big_delta_unchecked(x, r, d);
    Some(variance * (growth + correction))
}

/// The master exponent `E(r) = 2 gamma r - V (e^{2r} - 1 - 2r +
/// big_delta(x, r))`, or `None` when the tilt is infeasible.
pub fn tilt_exponent(x: f64, variance: f64, gamma: f64, r: f64) -> Option<f64> {
    Some(2.0 * gamma * r - norm_bound_exponent(x, variance, r)?)
}

/// Result of the tilt search.
#[derive(Debug, Clone, Copy)]
pub struct Optimum {
    pub r: f64,
    pub objective: f64,
}

const GRID_POINTS: usize = 512;
const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;
const RELATIVE_TOL: f64 = 1e-10;

/// Maximize `objective` over tilts in `[0, r_cap]`.
///
/// The objective returns `None` for infeasible tilts. The search evaluates
/// a 512-point grid mixing geometric spacing near 0 (where Bernstein-style
/// optima sit for small deviations) with linear spacing near the cap
/// (Bennett-style optima), refines around the best grid point with
/// golden-section search, and additionally tries the supplied closed-form
/// candidates. Unimodality is not assumed. The returned tilt is always
/// feasible; the worst case is `r = 0` with objective 0 (a trivial bound).
pub fn optimize_r(
    objective: impl Fn(f64) -> Option<f64>,
    r_cap: f64,
    closed_form_candidates: &[f64],
) -> Optimum {
    let eval = |r: f64| -> f64 { objective(r).unwrap_or(f64::NEG_INFINITY) };
    let mut best = Optimum {
        r: 0.0,
        objective: eval(0.0),
    };

    if r_cap > 0.0 && r_cap.is_finite() {
        let half = GRID_POINTS / 2;
        let mut grid = Vec::with_capacity(GRID_POINTS);
        let lo = r_cap * 1e-9;
        let ratio = (r_cap / lo).powf(1.0 / (half as f64 - 1.0));
        let mut r = lo;
        for _ in 0..half {
            grid.push(r.min(r_cap));
            r *= ratio;
        }
        for k in 1..=half {
            grid.push(r_cap * k as f64 / half as f64);
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();

        let values: Vec<f64> = grid.iter().map(|&r| eval(r)).collect();
        let mut best_idx = None;
        for (i, &v) in values.iter().enumerate() {
            if v > best.objective {
                best = Optimum {
                    r: grid[i],
                    objective: v,
                };
                best_idx = Some(i);
            }
        }

        if let Some(i) = best_idx {
            let left = if i == 0 { 0.0 } else { grid[i - 1] };
            let right = if i + 1 < grid.len() { grid[i + 1] } else { r_cap };
            let refined = golden_section_max(&eval, left, right);
            if refined.objective > best.objective {
                best = refined;
            }
        }
    }

    for &r in closed_form_candidates {
        if r.is_finite() && r >= 0.0 && r <= r_cap {
            let v = eval(r);
            if v > best.objective {
                best = Optimum { r, objective: v };
            }
        }
    }
    best
}

fn golden_section_max(eval: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> Optimum {
    let step = 2.0 - GOLDEN_RATIO;
    let mut x1 = a + step * (b - a);
    let mut x2 = b - step * (b - a);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..256 {
        if (b - a).abs() <= RELATIVE_TOL * b.abs().max(1e-300) {
            break;
        }
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + step * (b - a);
            f1 = eval(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - step * (b - a);
            f2 = eval(x2);
        }
    }
    if f1 > f2 {
        Optimum { r: x1, objective: f1 }
    } else {
        Optimum { r: x2, objective: f2 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_at_zero_tilt_is_x() {
        for x in [0.0, 0.3, 0.99] {
            for v in [0.0, 0.5, 1.0] {
                assert_eq!(delta(x, 0.0, v), x);
            }
        }
        assert_eq!(delta(0.0, 3.0, 1.0), 0.0);
    }

    #[test]
    fn delta_frozen_value() {
        // e^{0.2} + (e^{0.1} - 1)^2, evaluated offline at 30 digits.
        let expected = 1.232_463_680_169_044_4;
        assert!((delta(1.0, 0.1, 1.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn big_delta_basics() {
        assert_eq!(big_delta(0.3, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(big_delta(0.0, 2.0, 1.0).unwrap(), 0.0);
        // Frozen offline: 4*0.25*e^{0.2}*(e^{0.1}-1)^2 / (1 - 0.308115920...)
        let expected = 0.019_526_162_027_400_805;
        assert!((big_delta(0.25, 0.1, 1.0).unwrap() - expected).abs() < 1e-15);
        assert!(matches!(
            big_delta(0.9, 5.0, 1.0),
            Err(BoundError::InfeasibleR { .. })
        ));
    }

    #[test]
    fn feasible_r_max_edges() {
        assert_eq!(feasible_r_max(1.0, 0.5), 0.0);
        assert_eq!(feasible_r_max(1.3, 0.5), 0.0);
        assert!(feasible_r_max(0.0, 0.5).is_infinite());
    }

    #[test]
    fn feasible_r_max_closed_form() {
        // delta(0.25, r, 1) = 1 reduces to 2u^2 - 2u - 3 = 0 with u = e^r,
        // so r* = ln((1 + sqrt 7)/2), evaluated offline at 30 digits.
        let expected = 0.600_415_284_666_035_0;
        let r = feasible_r_max(0.25, 1.0);
        assert!((r - expected).abs() < 1e-11, "{r}");
        let plug = delta(0.25, r, 1.0);
        assert!((plug - 1.0).abs() < 1e-11, "{plug}");
    }

    #[test]
    fn optimizer_finds_quadratic_peak() {
        // 2 gamma r - c r^2 peaks at r = gamma / c.
        let gamma = 0.37;
        let c = 1.9;
        let best = optimize_r(|r| Some(2.0 * gamma * r - c * r * r), 5.0, &[]);
        assert!((best.r - gamma / c).abs() < 1e-6, "{}", best.r);
    }

    #[test]
    fn decreasing_objective_returns_trivial_tilt() {
        let best = optimize_r(|r| Some(-r), 5.0, &[]);
        assert_eq!(best.r, 0.0);
        assert_eq!(best.objective, 0.0);
    }

    #[test]
    fn closed_form_candidate_is_used() {
        // An objective with a spike the coarse grid cannot see.
        let spike = 0.123_456_789;
        let f = |r: f64| {
            let base = -r;
            Some(if (r - spike).abs() < 1e-13 { 10.0 } else { base })
        };
        let best = optimize_r(f, 5.0, &[spike]);
        assert_eq!(best.r, spike);
        assert_eq!(best.objective, 10.0);
    }

    #[test]
    fn infeasible_candidates_are_ignored() {
        let best = optimize_r(|r| if r > 0.1 { None } else { Some(r) }, 5.0, &[3.0]);
        assert!(best.r <= 0.1 + 1e-9);
        assert!(best.objective >= 0.0);
    }
}
