//! Adaptive Metropolis-within-Gibbs sampling and convergence diagnostics.
//!
//! The engine is generic over a [`Target`]: anything exposing a coordinate
//! count, per-coordinate proposal transforms, a feasible initializer, and a
//! per-chain [`Session`] that evaluates log-density changes. Chains run
//! independently (and concurrently), each on its own deterministic random
//! stream derived from the configured seed, so a run is reproducible
//! bit-for-bit regardless of thread scheduling.
//!
//! Proposals are coordinate-wise Gaussian steps on a transformed scale
//! (identity, log, or bounded logit), accepted by the Metropolis rule with
//! the transform's Jacobian folded in. Step sizes adapt toward a target
//! acceptance rate in batches during burn-in and stay frozen afterwards,
//! keeping the post-burn-in kernel a valid fixed Markov kernel.

mod diagnostics;
mod engine;

pub use diagnostics::{diagnostics, max_rhat, min_ess, ParamDiagnostics};
pub use engine::{
    run, ChainDraws, FnTarget, PosteriorDraws, SamplerConfig, Session, Target, Transform,
};
