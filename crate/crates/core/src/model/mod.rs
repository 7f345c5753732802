//! Joint prior over all model parameters.
//!
//! Log pregnancy rates for seven exposure groups sit in a four-level
//! hierarchy (world, super region, region, country) and evolve over
//! five-year periods as random walks anchored at a reference period.
//! Abortion propensities follow a parallel hierarchy on the unit interval.
//! Every free scalar occupies one slot of a flat vector ([`atlas`]), and the
//! prior factorizes into one truncated location-family density per slot
//! ([`graph`]), each conditioning only on earlier slots. That ordering gives
//! three cheap operations: densities sum left to right, forward simulation
//! fills the vector in one pass, and a coordinate update touches only the
//! factors adjacent to the changed slot.

pub mod atlas;
pub mod expr;
pub mod graph;
pub mod joint;

pub use atlas::{Atlas, CountrySig, DriftSig, PropSig, RegionSig, SlotRole, Walk};
pub use expr::{Aff, BoundSet, Factor, Fam, Scale, Slot};
pub use graph::PriorGraph;
pub use joint::JointModel;

use crate::accounts::{Group, GROUPS, MISCARRIAGE_ABORTION_FACTOR, N_GROUPS};
use crate::constants::ModelConstants;
use crate::error::{Error, Result};
use crate::geo::{GeoHierarchy, PeriodCalendar};
use rand_chacha::ChaCha8Rng;

/// Share of pregnancies in a group that end in induced abortion, implied by
/// a free propensity scale on (0, 1). The scale is deflated by the
/// miscarriage load per abortion so the flow identity stays solvable for a
/// nonnegative birth rate at any admissible value.
pub fn propensity_from_lambda(lambda: f64) -> f64 {
    lambda / MISCARRIAGE_ABORTION_FACTOR
}

/// Inverse of [`propensity_from_lambda`].
pub fn lambda_from_propensity(alpha: f64) -> f64 {
    alpha * MISCARRIAGE_ABORTION_FACTOR
}

/// First prior factor that assigns zero density to a parameter vector.
#[derive(Debug, Clone)]
pub struct Infeasibility {
    pub slot: Slot,
    pub label: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl std::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} = {} outside ({}, {})",
            self.label, self.value, self.lo, self.hi
        )
    }
}

/// The full prior: slot layout plus one conditional factor per slot.
#[derive(Debug, Clone)]
pub struct Prior {
    pub atlas: Atlas,
    pub graph: PriorGraph,
    pub constants: ModelConstants,
}

impl Prior {
    /// Build the prior for a hierarchy and calendar. `high_income_super`
    /// names the super region whose member regions each carry their own
    /// official-count error scale.
    pub fn new(
        geo: &GeoHierarchy,
        cal: &PeriodCalendar,
        constants: ModelConstants,
        high_income_super: Option<usize>,
    ) -> Result<Self> {
        constants.validate()?;
        if let Some(q) = high_income_super {
            if q >= geo.n_super_regions() {
                return Err(Error::Referential(format!(
                    "high-income super region index {q} outside 0..{}",
                    geo.n_super_regions()
                )));
            }
        }
        let atlas = Atlas::new(geo, cal, high_income_super);
        let graph = PriorGraph::build(&atlas, &constants)?;
        Ok(Prior {
            atlas,
            graph,
            constants,
        })
    }

    pub fn n_slots(&self) -> usize {
        self.atlas.n_slots
    }

    /// Joint log density of a full parameter vector.
    pub fn log_prior(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.atlas.n_slots);
        self.graph.factors.iter().map(|f| f.lpdf(x)).sum()
    }

    /// Forward draw. Each factor is a proper conditional given earlier
    /// slots, so one left-to-right pass suffices; the rare numerically empty
    /// truncation interval (the failure-rate envelope can collapse when a
    /// tail draw strays far from its parent) restarts the whole pass.
    pub fn simulate(&self, rng: &mut ChaCha8Rng, max_attempts: usize) -> Result<Vec<f64>> {
        let mut last_err = String::new();
        'attempt: for _ in 0..max_attempts {
            let mut x = vec![0.0; self.atlas.n_slots];
            for f in &self.graph.factors {
                match f.sample(&x, rng) {
                    Ok(v) => x[f.x as usize] = v,
                    Err(e) => {
                        last_err = format!("{} while drawing {}", e, f.label);
                        continue 'attempt;
                    }
                }
            }
            return Ok(x);
        }
        Err(Error::Infeasible(format!(
            "no complete prior draw in {max_attempts} attempts; last failure: {last_err}"
        )))
    }

    /// First factor whose density at `x` is zero, if any.
    pub fn check_feasible(&self, x: &[f64]) -> Option<Infeasibility> {
        for f in &self.graph.factors {
            if f.lpdf(x) == f64::NEG_INFINITY {
                return Some(Infeasibility {
                    slot: f.x,
                    label: f.label.clone(),
                    value: x[f.x as usize],
                    lo: f.lo.eval(x, f64::NEG_INFINITY),
                    hi: f.hi.eval(x, f64::INFINITY),
                });
            }
        }
        None
    }

    /// Natural-scale view over a parameter vector.
    pub fn state<'a>(&'a self, x: &'a [f64]) -> ParameterState<'a> {
        ParameterState {
            atlas: &self.atlas,
            cap: self.constants.alpha_cap(),
            x,
        }
    }
}

/// Read-only natural-scale accessors over one parameter vector.
#[derive(Clone, Copy)]
pub struct ParameterState<'a> {
    atlas: &'a Atlas,
    cap: f64,
    pub x: &'a [f64],
}

impl ParameterState<'_> {
    pub fn log_rate(&self, c: usize, p: usize, g: Group) -> f64 {
        self.atlas.log_rate(self.x, c, p, g)
    }

    /// Pregnancies per woman-year in a country-period group.
    pub fn rate(&self, c: usize, p: usize, g: Group) -> f64 {
        self.log_rate(c, p, g).exp()
    }

    /// Share of the group's pregnancies ending in abortion. Zero for the
    /// intended groups; the unintended groups share one propensity per
    /// marriage class.
    pub fn alpha(&self, c: usize, p: usize, g: Group) -> f64 {
        if !g.is_unintended() {
            return 0.0;
        }
        self.atlas.alpha(self.x, c, p, g.is_married(), self.cap)
    }

    /// Rate and abortion-share arrays for one country-period, indexed by
    /// group, in the layout the flow accounting consumes.
    pub fn rates_at(&self, c: usize, p: usize) -> ([f64; N_GROUPS], [f64; N_GROUPS]) {
        let mut omega = [0.0; N_GROUPS];
        let mut alpha = [0.0; N_GROUPS];
        for g in GROUPS {
            omega[g.index()] = self.rate(c, p, g);
            alpha[g.index()] = self.alpha(c, p, g);
        }
        (omega, alpha)
    }
}
