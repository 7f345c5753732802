//! Bayesian estimation of unintended pregnancy and abortion incidence.
//!
//! The crate couples a demographic accounting identity (pregnancies split
//! exactly into abortions, births, and miscarriages) with a four-level
//! hierarchical prior over group-specific pregnancy rates and abortion
//! propensities, fits it to country observation series by adaptive
//! Metropolis-within-Gibbs sampling, and summarizes posterior draws into
//! country, regional, and global indicator tables with uncertainty
//! intervals. Out-of-sample checks (stratified holdout and leave-one-
//! country-out) ship alongside the estimator.
//!
//! Start from the `examples/` directory for end-to-end walkthroughs, or
//! from [`run`] for the operations behind the command-line interface.

pub mod accounts;
pub mod constants;
pub mod dist;
pub mod error;
pub mod geo;
pub mod io;
pub mod mcmc;
pub mod model;
pub mod obs;
pub mod report;
pub mod synth;

pub use accounts::{FlowTable, Group, GroupSizes, Indicator, Scope};
pub use constants::ModelConstants;
pub use error::{Error, Result};
pub use geo::{CountryDef, GeoHierarchy, PeriodCalendar};
pub use mcmc::{PosteriorDraws, SamplerConfig};
pub use model::{JointModel, ParameterState, Prior};
pub use obs::ObservationSet;
pub use report::{quantile, summarize, EstimateRow, EstimateTable, GeoScope};
pub use synth::{generate_world, SyntheticWorld, SyntheticWorldSpec};
