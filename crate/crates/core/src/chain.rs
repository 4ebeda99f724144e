//! Reversible Markov chains: construction from weighted graphs or explicit
//! transition matrices, stationary distributions and validation.
//!
//! Storage convention (fixed everywhere in this crate and in the file
//! formats): `P[i][j]` is the probability of moving from state `j` to state
//! `i`, so columns of `P` are probability distributions. A chain is
//! reversible when detailed balance `s[j] * P[i][j] == s[i] * P[j][i]`
//! holds for the stationary distribution `s`.

use crate::matrix::{self, Matrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Structural validations (stochasticity, balance, stationarity residuals).
pub const STRUCTURAL_TOL: f64 = 1e-10;
/// Probability mass bookkeeping (sums to one).
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ChainError {
    #[error("invalid chain specification: {0}")]
    InvalidSpec(String),
    #[error("graph is not connected")]
    DisconnectedGraph,
    #[error("column {column} sums to {sum}, not 1")]
    NotStochastic { column: usize, sum: f64 },
    #[error("detailed balance violated at ({i},{j}): residual {residual:e}")]
    NotReversible { i: usize, j: usize, residual: f64 },
    #[error("stationary distribution has non-positive entry at {index}")]
    NonPositiveStationary { index: usize },
    #[error("supplied stationary vector is not fixed by P: residual {residual:e} at {index}")]
    NotStationary { index: usize, residual: f64 },
    #[error("transition matrix support is not strongly connected")]
    Reducible,
    #[error("eigensolver did not converge within the sweep cap")]
    NotConverged,
    #[error("function is constant after centering; no bounded normalization exists")]
    ConstantFunction,
}

/// Raw chain input: either a weighted undirected graph or an explicit
/// column-stochastic matrix with an optional stationary vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChainSpec {
    Edges {
        states: usize,
        /// Undirected edges `(u, v, weight)`; self-loops allowed, repeated
        /// edges accumulate.
        edges: Vec<(usize, usize, f64)>,
    },
    Matrix {
        states: usize,
        /// Row-major entries, columns stochastic.
        matrix: Vec<Vec<f64>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        stationary: Option<Vec<f64>>,
    },
}

impl ChainSpec {
    pub fn states(&self) -> usize {
        match self {
            ChainSpec::Edges { states, .. } | ChainSpec::Matrix { states, .. } => *states,
        }
    }

    /// Check the spec's own invariants (shape, positivity, connectivity /
    /// column stochasticity). `build_chain` calls this first.
    pub fn validate(&self) -> Result<(), ChainError> {
        let n = self.states();
        if n < 2 {
            return Err(ChainError::InvalidSpec(format!(
                "need at least 2 states, got {n}"
            )));
        }
        match self {
            ChainSpec::Edges { edges, .. } => {
                if edges.is_empty() {
                    return Err(ChainError::InvalidSpec("edge list is empty".into()));
                }
                for &(u, v, w) in edges {
                    if u >= n || v >= n {
                        return Err(ChainError::InvalidSpec(format!(
                            "edge ({u},{v}) out of range for {n} states"
                        )));
                    }
                    if !(w > 0.0) || !w.is_finite() {
                        return Err(ChainError::InvalidSpec(format!(
                            "edge ({u},{v}) has non-positive weight {w}"
                        )));
                    }
                }
                if !edge_connected(n, edges) {
                    return Err(ChainError::DisconnectedGraph);
                }
                Ok(())
            }
            ChainSpec::Matrix {
                matrix, stationary, ..
            } => {
                if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
                    return Err(ChainError::InvalidSpec(format!(
                        "matrix must be {n}x{n}"
                    )));
                }
                for (i, row) in matrix.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        if !(0.0..=1.0 + STRUCTURAL_TOL).contains(&v) || !v.is_finite() {
                            return Err(ChainError::InvalidSpec(format!(
                                "entry ({i},{j}) = {v} outside [0,1]"
                            )));
                        }
                    }
                }
                for j in 0..n {
                    let sum: f64 = (0..n).map(|i| matrix[i][j]).sum();
                    if (sum - 1.0).abs() > STRUCTURAL_TOL {
                        return Err(ChainError::NotStochastic { column: j, sum });
                    }
                }
                if let Some(s) = stationary {
                    if s.len() != n {
                        return Err(ChainError::InvalidSpec(format!(
                            "stationary vector must have length {n}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

fn edge_connected(n: usize, edges: &[(usize, usize, f64)]) -> bool {
    let mut adjacency = vec![Vec::new(); n];
    for &(u, v, _) in edges {
        adjacency[u].push(v);
        adjacency[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|b| b)
}

/// Validated column-stochastic transition matrix with its stationary
/// distribution, satisfying detailed balance.
#[derive(Debug, Clone)]
pub struct ReversibleChain {
    p: Matrix,
    s: Vec<f64>,
}

impl ReversibleChain {
    /// Validate all invariants and wrap. `p.get(i, j)` is the j -> i
    /// transition probability.
    pub fn new(p: Matrix, s: Vec<f64>) -> Result<Self, ChainError> {
        let n = p.dim();
        assert_eq!(s.len(), n, "stationary vector length mismatch");
        for (i, &si) in s.iter().enumerate() {
            if !(si > 0.0) {
                return Err(ChainError::NonPositiveStationary { index: i });
            }
        }
        let mass: f64 = s.iter().sum();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(ChainError::InvalidSpec(format!(
                "stationary mass {mass} differs from 1 beyond {MASS_TOL:e}"
            )));
        }
        for j in 0..n {
            let sum: f64 = (0..n).map(|i| p.get(i, j)).sum();
            if (sum - 1.0).abs() > STRUCTURAL_TOL {
                return Err(ChainError::NotStochastic { column: j, sum });
            }
        }
        // Stationarity: P s = s.
        let ps = p.matvec(&s);
        for i in 0..n {
            let residual = (ps[i] - s[i]).abs();
            if residual > STRUCTURAL_TOL {
                return Err(ChainError::NotStationary { index: i, residual });
            }
        }
        // Detailed balance.
        for i in 0..n {
            for j in 0..i {
                let residual = (s[j] * p.get(i, j) - s[i] * p.get(j, i)).abs();
                if residual > STRUCTURAL_TOL {
                    return Err(ChainError::NotReversible { i, j, residual });
                }
            }
        }
        Ok(ReversibleChain { p, s })
    }

    pub fn states(&self) -> usize {
        self.p.dim()
    }

    /// Transition probability j -> i.
    #[inline]
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.p.get(i, j)
    }

    pub fn transition_matrix(&self) -> &Matrix {
        &self.p
    }

    pub fn stationary(&self) -> &[f64] {
        &self.s
    }

    /// Serializable matrix-form spec (used for counterexample replay).
    pub fn to_spec(&self) -> ChainSpec {
        let n = self.states();
        ChainSpec::Matrix {
            states: n,
            matrix: (0..n)
                .map(|i| (0..n).map(|j| self.p.get(i, j)).collect())
                .collect(),
            stationary: Some(self.s.clone()),
        }
    }
}

/// Build and fully validate a chain from its raw specification.
///
/// Edge-list form: `P[i][j] = w(i,j)/deg(j)`, `s[i] = deg(i)/total`, which
/// satisfies detailed balance by construction. Matrix form: the stationary
/// vector is taken from the spec or computed by a direct solve, then
/// reversibility is verified.
pub fn build_chain(spec: &ChainSpec) -> Result<ReversibleChain, ChainError> {
    spec.validate()?;
    let n = spec.states();
    match spec {
        ChainSpec::Edges { edges, .. } => {
            let mut weights = Matrix::zeros(n);
            for &(u, v, w) in edges {
                weights.set(u, v, weights.get(u, v) + w);
                if u != v {
                    weights.set(v, u, weights.get(v, u) + w);
                }
            }
            let degrees: Vec<f64> = (0..n)
                .map(|j| (0..n).map(|k| weights.get(j, k)).sum())
                .collect();
            let total: f64 = degrees.iter().sum();
            let p = Matrix::from_fn(n, |i, j| weights.get(j, i) / degrees[j]);
            let s: Vec<f64> = degrees.iter().map(|d| d / total).collect();
            ReversibleChain::new(p, s)
        }
        ChainSpec::Matrix {
            matrix, stationary, ..
        } => {
            let p = Matrix::from_fn(n, |i, j| matrix[i][j]);
            let s = match stationary {
                Some(s) => {
                    let mass: f64 = s.iter().sum();
                    if (mass - 1.0).abs() > MASS_TOL {
                        return Err(ChainError::InvalidSpec(format!(
                            "supplied stationary vector sums to {mass}"
                        )));
                    }
                    s.clone()
                }
                None => stationary_distribution(&p)?,
            };
            ReversibleChain::new(p, s)
        }
    }
}

/// Unique stationary distribution of an irreducible column-stochastic
/// matrix, by a deterministic direct solve.
///
/// The singular system `(P - I) s = 0` is augmented with the normalization
/// row `sum(s) = 1` and solved through its normal equations; for an
/// irreducible chain the augmented system has full column rank.
pub fn stationary_distribution(p: &Matrix) -> Result<Vec<f64>, ChainError> {
    let n = p.dim();
    if !strongly_connected(p) {
        return Err(ChainError::Reducible);
    }
    // Normal equations of [P - I; 1^T] s = [0; 1]:
    // G = (P-I)^T (P-I) + J, rhs = all-ones.
    let mut a = Matrix::from_fn(n, |i, j| p.get(i, j) - if i == j { 1.0 } else { 0.0 });
    let gram = a.gram();
    a = Matrix::from_fn(n, |i, j| gram.get(i, j) + 1.0);
    let rhs = vec![1.0; n];
    let mut s = matrix::solve(&a, &rhs).ok_or(ChainError::Reducible)?;
    for (i, v) in s.iter().enumerate() {
        if !(*v > 0.0) {
            return Err(ChainError::NonPositiveStationary { index: i });
        }
    }
    let mass: f64 = s.iter().sum();
    for v in &mut s {
        *v /= mass;
    }
    Ok(s)
}

/// Strong connectivity of the support graph (forward and backward
/// reachability from state 0).
fn strongly_connected(p: &Matrix) -> bool {
    let n = p.dim();
    let reach = |transpose: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let edge = if transpose {
                    p.get(u, v) // u <- v, i.e. v -> u
                } else {
                    p.get(v, u) // u -> v
                };
                if edge > 0.0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|b| b)
    };
    reach(false) && reach(true)
}

/// The 1/s-weighted vector norm `sqrt(sum_i u(i)^2 / s(i))`.
///
/// For a probability vector `q` this equals the starting-distribution
/// penalty written `‖q/√s‖₂` in the tail bounds; it is 1 exactly when
/// `q = s`.
pub fn weighted_norm(u: &[f64], s: &[f64]) -> f64 {
    assert_eq!(u.len(), s.len());
    u.iter()
        .zip(s)
        .map(|(ui, si)| ui * ui / si)
        .sum::<f64>()
        .sqrt()
}

/// Starting distribution together with its weighted-norm penalty factor.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InitialDistribution {
    q: Vec<f64>,
    q_norm: f64,
}

impl InitialDistribution {
    pub fn new(q: Vec<f64>, chain: &ReversibleChain) -> Result<Self, ChainError> {
        if q.len() != chain.states() {
            return Err(ChainError::InvalidSpec(format!(
                "initial distribution has length {}, chain has {} states",
                q.len(),
                chain.states()
            )));
        }
        if q.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(ChainError::InvalidSpec(
                "initial distribution has negative entries".into(),
            ));
        }
        let mass: f64 = q.iter().sum();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(ChainError::InvalidSpec(format!(
                "initial distribution sums to {mass}"
            )));
        }
        let q_norm = weighted_norm(&q, chain.stationary());
        Ok(InitialDistribution { q, q_norm })
    }

    /// Stationary start: `q = s`, penalty factor 1.
    pub fn stationary(chain: &ReversibleChain) -> Self {
        InitialDistribution {
            q: chain.stationary().to_vec(),
            q_norm: 1.0,
        }
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn q_norm(&self) -> f64 {
        self.q_norm
    }
}
