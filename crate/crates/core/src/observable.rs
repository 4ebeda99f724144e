//! Observables on chain states and their normalization.
//!
//! The bounded bounds assume the function is centered (mean 0 under the
//! stationary distribution) and scaled to absolute maximum 1; the
//! subgaussian bound drops the scale assumption and only needs centering.

use crate::chain::{ChainError, ReversibleChain, MASS_TOL};
use serde::Serialize;

/// Bounded: center then divide by the max absolute value so `‖f‖∞ = 1`.
/// Subgaussian: center only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationMode {
    Bounded,
    Subgaussian,
}

/// The map applied by normalization: `f = (raw - shift) / scale`. Invert it
/// to translate normalized-scale answers back to user scale.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AffineMap {
    pub shift: f64,
    pub scale: f64,
}

impl AffineMap {
    pub fn identity() -> Self {
        AffineMap {
            shift: 0.0,
            scale: 1.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.shift == 0.0 && self.scale == 1.0
    }

    /// User-scale value corresponding to a normalized value.
    pub fn to_raw(&self, normalized: f64) -> f64 {
        normalized * self.scale + self.shift
    }
}

/// Per-state values of a centered observable with its stationary moments.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ObservableFunction {
    values: Vec<f64>,
    /// `V = sum_i f(i)^2 s(i)`; the stationary variance since the mean is 0.
    variance: f64,
    max_abs: f64,
    mean_under_s: f64,
}

impl ObservableFunction {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    pub fn mean_under_s(&self) -> f64 {
        self.mean_under_s
    }
}

fn stationary_mean(values: &[f64], s: &[f64]) -> f64 {
    values.iter().zip(s).map(|(f, si)| f * si).sum()
}

/// Center `raw` under the chain's stationary distribution and, in bounded
/// mode, rescale to absolute maximum 1. Returns the observable together
/// with the affine map that was applied.
///
/// A function that is constant (zero range after centering) is rejected in
/// bounded mode: every downstream bound would be vacuous.
pub fn normalize_function(
    raw: &[f64],
    chain: &ReversibleChain,
    mode: NormalizationMode,
) -> Result<(ObservableFunction, AffineMap), ChainError> {
    assert_eq!(
        raw.len(),
        chain.states(),
        "function length must match state count"
    );
    let s = chain.stationary();
    let shift = stationary_mean(raw, s);
    let mut values: Vec<f64> = if shift == 0.0 {
        raw.to_vec()
    } else {
        raw.iter().map(|f| f - shift).collect()
    };
    let max_abs_centered = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let scale = match mode {
        NormalizationMode::Bounded => {
            if max_abs_centered == 0.0 {
                return Err(ChainError::ConstantFunction);
            }
            if max_abs_centered != 1.0 {
                for v in &mut values {
                    *v /= max_abs_centered;
                }
            }
            max_abs_centered
        }
        NormalizationMode::Subgaussian => 1.0,
    };

    let mean_under_s = stationary_mean(&values, s);
    let variance = values.iter().zip(s).map(|(f, si)| f * f * si).sum();
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    debug_assert!(mean_under_s.abs() <= MASS_TOL);
    Ok((
        ObservableFunction {
            values,
            variance,
            max_abs,
            mean_under_s,
        },
        AffineMap { shift, scale },
    ))
}

/// Wrap values that are already normalized, verifying the contract
/// (mean 0; in bounded mode max-abs 1).
pub fn observable_from_normalized(
    values: &[f64],
    chain: &ReversibleChain,
    mode: NormalizationMode,
) -> Result<ObservableFunction, ChainError> {
    let s = chain.stationary();
    let mean_under_s = stationary_mean(values, s);
    if mean_under_s.abs() > MASS_TOL {
        return Err(ChainError::InvalidSpec(format!(
            "function mean under s is {mean_under_s:e}, not 0; pass it through normalization"
        )));
    }
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if mode == NormalizationMode::Bounded && (max_abs - 1.0).abs() > MASS_TOL {
        return Err(ChainError::InvalidSpec(format!(
            "function max-abs is {max_abs}, not 1; pass it through normalization"
        )));
    }
    let variance = values.iter().zip(s).map(|(f, si)| f * f * si).sum();
    Ok(ObservableFunction {
        values: values.to_vec(),
        variance,
        max_abs,
        mean_under_s,
    })
}
