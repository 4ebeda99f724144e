//! Spectra of reversible chains.
//!
//! Detailed balance makes `M = D^{-1/2} P D^{1/2}` (with `D = diag(s)`)
//! symmetric and similar to `P`, so the transition matrix has a full set of
//! real eigenvalues. The two summary quantities driving all tail bounds:
//!
//! ```text
//! alpha = max(lambda_2, 0)
//! beta  = max_{i >= 2} |lambda_i|
//! ```
//!
//! `beta` equals the operator norm of `P` restricted to the subspace
//! orthogonal to `s` in the 1/s-weighted inner product; `beta = 1` exactly
//! for bipartite walks, which makes every beta-family bound trivial.

use crate::chain::{ChainError, ReversibleChain};
use crate::matrix::{jacobi_eigenvalues, Matrix};
use serde::Serialize;

/// Jacobi sweep cap.
const MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius residual target.
const OFF_DIAGONAL_TOL: f64 = 1e-12;
/// Slack on spectral assertions.
pub const SPECTRAL_TOL: f64 = 1e-9;

/// Real eigenvalues of `P` in descending order plus the derived summary
/// quantities.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    alpha: f64,
    beta: f64,
}

impl Spectrum {
    /// Eigenvalues, descending; the first is 1 up to solver residual.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Bipartite-like chains have `beta = 1`; every bound in terms of beta
    /// is then trivial.
    pub fn beta_is_degenerate(&self) -> bool {
        self.beta >= 1.0 - SPECTRAL_TOL
    }
}

/// Symmetrized matrix `M[i][j] = P[i][j] sqrt(s[j]/s[i])`.
pub(crate) fn symmetrized(chain: &ReversibleChain) -> Matrix {
    let s = chain.stationary();
    let root: Vec<f64> = s.iter().map(|v| v.sqrt()).collect();
    Matrix::from_fn(chain.states(), |i, j| {
        chain.transition(i, j) * root[j] / root[i]
    })
}

/// Full spectrum of the chain via cyclic Jacobi on the symmetrized matrix.
pub fn spectrum(chain: &ReversibleChain) -> Result<Spectrum, ChainError> {
    let m = symmetrized(chain);
    let mut eigenvalues =
        jacobi_eigenvalues(&m, MAX_SWEEPS, OFF_DIAGONAL_TOL).ok_or(ChainError::NotConverged)?;

    // Clamp solver fuzz at the Perron root; leave everything else as is.
    if (eigenvalues[0] - 1.0).abs() > SPECTRAL_TOL {
        return Err(ChainError::InvalidSpec(format!(
            "top eigenvalue {} is not 1; chain invariants violated",
            eigenvalues[0]
        )));
    }
    eigenvalues[0] = eigenvalues[0].min(1.0);

    let alpha = eigenvalues[1].max(0.0);
    let beta = eigenvalues[1..]
        .iter()
        .fold(0.0f64, |m, l| m.max(l.abs()))
        .min(1.0);
    Ok(Spectrum {
        eigenvalues,
        alpha,
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_chain, ChainSpec};

    fn complete_graph(n: usize) -> ReversibleChain {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v, 1.0));
            }
        }
        build_chain(&ChainSpec::Edges { states: n, edges }).unwrap()
    }

    #[test]
    fn rank_one_two_state_chain() {
        let spec = ChainSpec::Matrix {
            states: 2,
            matrix: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            stationary: None,
        };
        let chain = build_chain(&spec).unwrap();
        let sp = spectrum(&chain).unwrap();
        assert!((sp.eigenvalues()[0] - 1.0).abs() < 1e-12);
        assert!(sp.eigenvalues()[1].abs() < 1e-12);
        assert!(sp.alpha() < 1e-12);
        assert!(sp.beta() < 1e-12);
    }

    #[test]
    fn complete_graph_spectrum() {
        // K_N random walk is (J - I)/(N-1): eigenvalues 1 and -1/(N-1)
        // with multiplicity N-1.
        for n in 3..=6 {
            let sp = spectrum(&complete_graph(n)).unwrap();
            let expected = -1.0 / (n as f64 - 1.0);
            assert!((sp.eigenvalues()[0] - 1.0).abs() < 1e-9);
            for l in &sp.eigenvalues()[1..] {
                assert!((l - expected).abs() < 1e-9, "N={n}: {l}");
            }
            assert_eq!(sp.alpha(), 0.0);
            assert!((sp.beta() - 1.0 / (n as f64 - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn four_cycle_is_bipartite() {
        let chain = build_chain(&ChainSpec::Edges {
            states: 4,
            edges: vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)],
        })
        .unwrap();
        let sp = spectrum(&chain).unwrap();
        // Cycle eigenvalues cos(2 pi k / 4) = {1, 0, 0, -1}.
        let expected = [1.0, 0.0, 0.0, -1.0];
        for (l, e) in sp.eigenvalues().iter().zip(expected) {
            assert!((l - e).abs() < 1e-9, "{l} vs {e}");
        }
        assert!(sp.alpha() < 1e-12);
        assert!((sp.beta() - 1.0).abs() < 1e-12);
        assert!(sp.beta_is_degenerate());
    }

    #[test]
    fn two_state_second_eigenvalue() {
        for p in [0.1, 0.5, 0.9] {
            let spec = ChainSpec::Matrix {
                states: 2,
                matrix: vec![vec![1.0 - p, p], vec![p, 1.0 - p]],
                stationary: None,
            };
            let chain = build_chain(&spec).unwrap();
            let sp = spectrum(&chain).unwrap();
            assert!((sp.eigenvalues()[1] - (1.0 - 2.0 * p)).abs() < 1e-9);
        }
    }

    #[test]
    fn eigenvalue_sum_matches_trace() {
        let chain = build_chain(&ChainSpec::Edges {
            states: 5,
            edges: vec![
                (0, 1, 1.4),
                (1, 2, 0.3),
                (2, 3, 2.0),
                (3, 4, 0.8),
                (4, 0, 1.1),
                (1, 3, 0.2),
                (2, 2, 0.5),
            ],
        })
        .unwrap();
        let sp = spectrum(&chain).unwrap();
        let sum: f64 = sp.eigenvalues().iter().sum();
        assert!((sum - chain.transition_matrix().trace()).abs() < 1e-9);
    }

    #[test]
    fn beta_is_the_restricted_operator_norm() {
        // beta is the norm of P on the subspace orthogonal to s in the
        // 1/s-weighted inner product: no projected vector beats it, and
        // power iteration on the complement attains it.
        use crate::chain::weighted_norm;
        let chains = crate::suite::standard_chains(2024, 3);
        for sc in &chains {
            let chain = &sc.chain;
            let s = chain.stationary();
            let n = chain.states();
            let beta = sc.spectrum.beta();
            let wdot = |u: &[f64], v: &[f64]| -> f64 {
                u.iter()
                    .zip(v)
                    .zip(s)
                    .map(|((a, b), si)| a * b / si)
                    .sum()
            };
            let project = |u: &mut [f64]| {
                let c = wdot(u, s); // <s, s> = 1 in this structure
                for (ui, si) in u.iter_mut().zip(s) {
                    *ui -= c * si;
                }
            };
            let mut rng = crate::suite::SuiteRng::new(525_600, 17);
            let mut best_ratio = 0.0f64;
            for _ in 0..200 {
                let mut u: Vec<f64> = (0..n).map(|_| rng.range(-1.0, 1.0)).collect();
                project(&mut u);
                let norm_u = weighted_norm(&u, s);
                if norm_u < 1e-9 {
                    continue;
                }
                let image = chain.transition_matrix().matvec(&u);
                let ratio = weighted_norm(&image, s) / norm_u;
                assert!(
                    ratio <= beta + 1e-8,
                    "{}: ratio {ratio} exceeds beta {beta}",
                    sc.name
                );
                best_ratio = best_ratio.max(ratio);
            }
            assert!(best_ratio > 0.0);

            let mut u: Vec<f64> = (0..n).map(|_| rng.range(-1.0, 1.0)).collect();
            project(&mut u);
            let mut ratio = 0.0;
            let mut prev = -1.0;
            for iteration in 0..200_000 {
                let norm_u = weighted_norm(&u, s);
                for v in u.iter_mut() {
                    *v /= norm_u;
                }
                let mut image = chain.transition_matrix().matvec(&u);
                project(&mut image);
                ratio = weighted_norm(&image, s);
                if iteration > 16 && (ratio - prev).abs() < 1e-13 {
                    break;
                }
                prev = ratio;
                u = image;
            }
            assert!(
                (ratio - beta).abs() <= 1e-6,
                "{}: power iteration reached {ratio}, beta = {beta}",
                sc.name
            );
        }
    }

    #[test]
    fn sqrt_s_is_perron_eigenvector() {
        let chain = build_chain(&ChainSpec::Edges {
            states: 4,
            edges: vec![(0, 1, 0.9), (1, 2, 1.7), (2, 3, 0.2), (3, 0, 1.0), (0, 0, 0.3)],
        })
        .unwrap();
        let m = symmetrized(&chain);
        let root: Vec<f64> = chain.stationary().iter().map(|v| v.sqrt()).collect();
        let image = m.matvec(&root);
        for (a, b) in image.iter().zip(&root) {
            assert!((a - b).abs() <= 1e-9);
        }
    }
}
