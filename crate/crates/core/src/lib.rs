//! Tail bounds for sums sampled along reversible Markov chains.
//!
//! The crate answers one question from three independent directions: how
//! likely is the running average of an observable, sampled along a random
//! walk, to overshoot a threshold?
//!
//! * [`bounds`] evaluates closed-form tail bounds driven by the chain's
//!   spectrum (a master bound with optimized exponential tilt, Bennett and
//!   Bernstein specializations, a subgaussian variant) and plans sample
//!   sizes for target accuracies.
//! * [`oracle`] computes exact ground truth on small chains: the moment
//!   generating function, the exact tail by trajectory enumeration or
//!   lattice dynamic programming, the exact tilted operator norm, and the
//!   numerically exact first-step bound every analytic bound must
//!   dominate.
//! * [`simulate`] estimates the same tails by seeded, reproducible Monte
//!   Carlo with exact binomial confidence intervals.
//!
//! [`suite`] wires the three together into the verification harness used
//! by the CLI and the acceptance tests.
//!
//! With the default `parallel` feature, Monte Carlo walks, trajectory
//! enumeration and verification grids run on a rayon pool; results are
//! bit-identical to the sequential fallback by construction (fixed split
//! points, per-walk counter RNG streams, ordered reductions).

pub mod bounds;
pub mod chain;
pub mod io;
pub mod matrix;
pub mod observable;
pub mod oracle;
pub mod simulate;
pub mod spectrum;
pub mod suite;

pub use bounds::{BoundError, BoundFamily, BoundQuery, BoundResult, Form};
pub use chain::{build_chain, weighted_norm, ChainError, ChainSpec, InitialDistribution, ReversibleChain};
pub use observable::{normalize_function, AffineMap, NormalizationMode, ObservableFunction};
pub use oracle::OracleError;
pub use spectrum::{spectrum, Spectrum};

/// Map a collection, on the rayon pool when the `parallel` feature is on.
/// Output order always matches input order, so callers see identical
/// results either way.
pub(crate) fn map_ordered<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Strictly sequential twin of [`map_ordered`], kept public for the
/// benchmark suite and the order-independence tests.
pub fn map_ordered_serial<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
