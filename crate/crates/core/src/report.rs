//! Posterior summaries: indicator trajectories with medians and 80%
//! uncertainty intervals at country, region, super-region, and world level.
//!
//! Every summarized quantity is computed draw by draw (flows first, then
//! the pooled indicator), and quantiles are taken across draws at the very
//! end. Pooling events before forming ratios keeps aggregates consistent
//! with the accounting identities; taking quantiles of already-aggregated
//! trajectories keeps the intervals honest for nonlinear ratios.

use rayon::prelude::*;

use crate::accounts::{country_period_sums, FlowTable, GroupSizes, Indicator, IndicatorSums, INDICATORS};
use crate::error::{Error, Result};
use crate::geo::GeoHierarchy;
use crate::mcmc::PosteriorDraws;
use crate::model::Prior;

/// A geographic aggregation target, in dense indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeoScope {
    World,
    SuperRegion(usize),
    Region(usize),
    Country(usize),
}

impl GeoScope {
    /// Dense country indices belonging to the scope.
    pub fn members(self, geo: &GeoHierarchy) -> Vec<usize> {
        match self {
            GeoScope::World => (0..geo.n_countries()).collect(),
            GeoScope::SuperRegion(q) => geo.countries_of_super(q),
            GeoScope::Region(r) => geo.countries_of_region(r).to_vec(),
            GeoScope::Country(c) => vec![c],
        }
    }

    /// Level name as written in output tables.
    pub fn level(self) -> &'static str {
        match self {
            GeoScope::World => "world",
            GeoScope::SuperRegion(_) => "super_region",
            GeoScope::Region(_) => "region",
            GeoScope::Country(_) => "country",
        }
    }

    /// External id as written in output tables; the world has none.
    pub fn external_id(self, geo: &GeoHierarchy) -> Option<u32> {
        match self {
            GeoScope::World => None,
            GeoScope::SuperRegion(q) => Some(geo.super_region_id(q)),
            GeoScope::Region(r) => Some(geo.region_id(r)),
            GeoScope::Country(c) => Some(geo.country_id(c)),
        }
    }

    /// Every scope of every level, worlds first, then super-regions,
    /// regions, and countries in dense order.
    pub fn all(geo: &GeoHierarchy) -> Vec<GeoScope> {
        let mut v = vec![GeoScope::World];
        v.extend((0..geo.n_super_regions()).map(GeoScope::SuperRegion));
        v.extend((0..geo.n_regions()).map(GeoScope::Region));
        v.extend((0..geo.n_countries()).map(GeoScope::Country));
        v
    }
}

/// One summarized cell: an indicator for a scope and period.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub scope: GeoScope,
    /// 1-based period
    pub period: usize,
    pub indicator: Indicator,
    pub median: f64,
    /// 10th percentile
    pub lower: f64,
    /// 90th percentile
    pub upper: f64,
}

/// All summarized cells of one fit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimateTable {
    pub rows: Vec<EstimateRow>,
}

impl EstimateTable {
    pub fn get(&self, scope: GeoScope, period: usize, indicator: Indicator) -> Option<&EstimateRow> {
        self.rows
            .iter()
            .find(|r| r.scope == scope && r.period == period && r.indicator == indicator)
    }
}

/// Quantile by linear interpolation between order statistics (the common
/// "type 7" convention: the `q`-quantile of `n` points sits at rank
/// `(n-1)q`, interpolating between neighbors).
pub fn quantile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InputDomain("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InputDomain(format!("quantile level {q} outside [0, 1]")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// (median, 10th, 90th) of a sample.
fn interval_80(samples: &mut [f64]) -> (f64, f64, f64) {
    samples.sort_by(f64::total_cmp);
    (
        quantile_sorted(samples, 0.5),
        quantile_sorted(samples, 0.1),
        quantile_sorted(samples, 0.9),
    )
}

/// Summarize pooled post-burn-in draws into indicator estimates for the
/// requested scopes, all periods, all indicators.
pub fn summarize(
    draws: &PosteriorDraws,
    prior: &Prior,
    geo: &GeoHierarchy,
    sizes: &GroupSizes,
    scopes: &[GeoScope],
) -> Result<EstimateTable> {
    let n_core = prior.n_slots();
    check_alignment(draws, prior, n_core)?;
    if draws.n_draws() == 0 {
        return Err(Error::InputDomain("no retained draws to summarize".into()));
    }
    let members: Vec<(GeoScope, Vec<usize>)> = scopes
        .iter()
        .map(|&s| {
            let m = s.members(geo);
            if m.is_empty() {
                return Err(Error::Structural(format!(
                    "scope {} {:?} has no countries",
                    s.level(),
                    s.external_id(geo)
                )));
            }
            Ok((s, m))
        })
        .collect::<Result<_>>()?;

    let n_p = prior.atlas.n_p;
    let k = &prior.constants;
    let cells_per_draw = members.len() * n_p * INDICATORS.len();

    // cell-major values for one draw: scope-outer, period, indicator
    let per_draw: Vec<Vec<f64>> = (0..draws.n_chains() * draws.n_draws())
        .into_par_iter()
        .map(|idx| {
            let (chain, d) = (idx / draws.n_draws(), idx % draws.n_draws());
            let x: Vec<f64> = (0..n_core).map(|p| draws.value(chain, d, p)).collect();
            let st = prior.state(&x);
            let flows = FlowTable::build_scaled(
                sizes,
                k.loss_per_abortion,
                k.loss_per_birth,
                |c, p| st.rates_at(c, p),
            )?;
            let mut vals = Vec::with_capacity(cells_per_draw);
            for (scope, countries) in &members {
                for p in 1..=n_p {
                    let mut sums = IndicatorSums::default();
                    for &c in countries {
                        sums.add(&country_period_sums(&flows, sizes, c, p));
                    }
                    for ind in INDICATORS {
                        vals.push(sums.indicator(ind).ok_or_else(|| {
                            Error::NumericDegenerate(format!(
                                "indicator {} undefined for scope {} {:?}, period {p}",
                                ind.label(),
                                scope.level(),
                                scope.external_id(geo)
                            ))
                        })?);
                    }
                }
            }
            Ok(vals)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(cells_per_draw);
    let mut cell = 0;
    for (scope, _) in &members {
        for p in 1..=n_p {
            for ind in INDICATORS {
                let mut samples: Vec<f64> = per_draw.iter().map(|v| v[cell]).collect();
                let (median, lower, upper) = interval_80(&mut samples);
                rows.push(EstimateRow {
                    scope: *scope,
                    period: p,
                    indicator: ind,
                    median,
                    lower,
                    upper,
                });
                cell += 1;
            }
        }
    }
    Ok(EstimateTable { rows })
}

/// One scalar trajectory (used by draws-level reporting and validation):
/// the indicator series across draws for a fixed scope and period.
pub fn indicator_draws(
    draws: &PosteriorDraws,
    prior: &Prior,
    geo: &GeoHierarchy,
    sizes: &GroupSizes,
    scope: GeoScope,
    period: usize,
    indicator: Indicator,
) -> Result<Vec<f64>> {
    let n_core = prior.n_slots();
    check_alignment(draws, prior, n_core)?;
    let countries = scope.members(geo);
    if countries.is_empty() {
        return Err(Error::Structural(format!("scope {} has no countries", scope.level())));
    }
    let k = &prior.constants;
    (0..draws.n_chains() * draws.n_draws())
        .into_par_iter()
        .map(|idx| {
            let (chain, d) = (idx / draws.n_draws(), idx % draws.n_draws());
            let x: Vec<f64> = (0..n_core).map(|p| draws.value(chain, d, p)).collect();
            let st = prior.state(&x);
            let flows = FlowTable::build_scaled(
                sizes,
                k.loss_per_abortion,
                k.loss_per_birth,
                |c, p| st.rates_at(c, p),
            )?;
            let mut sums = IndicatorSums::default();
            for &c in &countries {
                sums.add(&country_period_sums(&flows, sizes, c, period));
            }
            sums.indicator(indicator).ok_or_else(|| {
                Error::NumericDegenerate(format!("indicator {} undefined", indicator.label()))
            })
        })
        .collect()
}

fn check_alignment(draws: &PosteriorDraws, prior: &Prior, n_core: usize) -> Result<()> {
    if draws.n_params() < n_core {
        return Err(Error::Structural(format!(
            "draws carry {} parameters, model needs {}",
            draws.n_params(),
            n_core
        )));
    }
    for (i, name) in prior.atlas.names().iter().enumerate() {
        if &draws.names()[i] != name {
            return Err(Error::Structural(format!(
                "draw parameter {i} is named {:?}, model slot is {name:?}",
                draws.names()[i]
            )));
        }
    }
    Ok(())
}
