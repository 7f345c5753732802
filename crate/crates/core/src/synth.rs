//! Synthetic data generation: draw a ground truth from the prior and
//! simulate a complete input bundle (hierarchy, calendar, group sizes,
//! observations) from it. Every observation class the likelihood accepts
//! is produced by its own generative mirror, so a fit on the bundle is a
//! fit to data whose true process is known exactly.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::accounts::{FlowTable, GroupSizes, Scope, N_GROUPS};
use crate::constants::ModelConstants;
use crate::dist::{sample_std_normal, sample_truncated_normal};
use crate::error::{Error, Result};
use crate::geo::{CountryDef, GeoHierarchy, PeriodCalendar};
use crate::model::Prior;
use crate::obs::{
    self, AbortionObservation, AbortionSource, AbortionValue, BirthsObservation,
    IntentionObservation, IntentionQuantity, IntentionValue, MarriedShareObservation,
    ObservationSet, RecallWindow, ShareTreatment,
};

/// Shape and observation plan for a generated world. Structural counts
/// must all be at least one; the per-country observation counts may be
/// zero to drop a class entirely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticWorldSpec {
    /// Number of super regions.
    pub super_regions: usize,
    /// Regions nested in each super region.
    pub regions_per_super: usize,
    /// Countries nested in each region.
    pub countries_per_region: usize,
    /// Number of estimation periods.
    pub periods: usize,
    /// First calendar year of the grid.
    pub first_year: i32,
    /// Length of one period in years.
    pub period_length: u32,
    /// 1-based index of the reference period.
    pub reference_period: usize,
    /// Baseline women per (country, year, group) cell before the
    /// deterministic composition and growth factors are applied.
    pub women_per_group: f64,
    /// Point proportion observations per country, cycling scope,
    /// quantity, recall window and representativeness.
    pub intention_points_per_country: usize,
    /// Range-treated proportion observations per country.
    pub intention_ranges_per_country: usize,
    /// Point abortion counts per country, cycling the complete-count,
    /// survey and single-study sources.
    pub abortion_points_per_country: usize,
    /// Bound abortion counts per country, cycling minimum, maximum and
    /// two-sided range treatments.
    pub abortion_bounds_per_country: usize,
    /// Indirect-method abortion estimates per country.
    pub indirect_per_country: usize,
    /// Married-share observations per country, cycling point, minimum
    /// and maximum treatments.
    pub share_observations_per_country: usize,
    /// Periods with a reported birth count per country, starting from
    /// the first period.
    pub births_periods_per_country: usize,
    /// When nonzero, every stride-th country reports only births; its
    /// proportion, count and share observations are dropped.
    pub sparse_country_stride: usize,
    /// Super region whose member regions carry their own official-count
    /// error scale.
    pub high_income_super: Option<usize>,
    /// Model constants used for the prior draw and the noise scales.
    pub constants: ModelConstants,
}

impl Default for SyntheticWorldSpec {
    fn default() -> Self {
        SyntheticWorldSpec {
            super_regions: 2,
            regions_per_super: 2,
            countries_per_region: 3,
            periods: 6,
            first_year: 1990,
            period_length: 5,
            reference_period: 3,
            women_per_group: 25_000.0,
            intention_points_per_country: 6,
            intention_ranges_per_country: 1,
            abortion_points_per_country: 4,
            abortion_bounds_per_country: 3,
            indirect_per_country: 1,
            share_observations_per_country: 2,
            births_periods_per_country: 6,
            sparse_country_stride: 0,
            high_income_super: Some(0),
            constants: ModelConstants::default(),
        }
    }
}

impl SyntheticWorldSpec {
    pub fn validate(&self) -> Result<()> {
        for (label, n) in [
            ("super_regions", self.super_regions),
            ("regions_per_super", self.regions_per_super),
            ("countries_per_region", self.countries_per_region),
            ("periods", self.periods),
        ] {
            if n < 1 {
                return Err(Error::InputDomain(format!(
                    "synthetic world needs {label} >= 1, got {n}"
                )));
            }
        }
        if self.period_length < 1 {
            return Err(Error::InputDomain("period length must be positive".into()));
        }
        if !(self.women_per_group > 0.0) || !self.women_per_group.is_finite() {
            return Err(Error::InputDomain(format!(
                "women_per_group must be a positive number, got {}",
                self.women_per_group
            )));
        }
        if self.reference_period < 1 || self.reference_period > self.periods {
            return Err(Error::InputDomain(format!(
                "reference period {} outside 1..={}",
                self.reference_period, self.periods
            )));
        }
        if let Some(q) = self.high_income_super {
            if q >= self.super_regions {
                return Err(Error::Referential(format!(
                    "high-income super region {q} outside 0..{}",
                    self.super_regions
                )));
            }
        }
        self.constants.validate()
    }

    pub fn n_countries(&self) -> usize {
        self.super_regions * self.regions_per_super * self.countries_per_region
    }

    pub fn calendar(&self) -> Result<PeriodCalendar> {
        let last = self.first_year + (self.periods as u32 * self.period_length) as i32 - 1;
        let reference =
            self.first_year + ((self.reference_period - 1) as u32 * self.period_length) as i32;
        PeriodCalendar::new(self.first_year, last, self.period_length, reference)
    }

    /// Countries that report only births under this plan.
    pub fn is_sparse(&self, c: usize) -> bool {
        self.sparse_country_stride > 0 && (c + 1) % self.sparse_country_stride == 0
    }
}

/// A generated world: the inputs a fit consumes plus the parameter vector
/// that produced them. The truth is carried separately so writers can
/// seal it away from the fitting path.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub spec: SyntheticWorldSpec,
    pub geo: GeoHierarchy,
    pub cal: PeriodCalendar,
    pub sizes: GroupSizes,
    pub obs: ObservationSet,
    /// The prior draw behind every observation, in slot order.
    pub truth: Vec<f64>,
}

impl SyntheticWorld {
    /// Rebuild the prior this world was drawn from.
    pub fn prior(&self) -> Result<Prior> {
        Prior::new(
            &self.geo,
            &self.cal,
            self.spec.constants.clone(),
            self.spec.high_income_super,
        )
    }
}

/// Approximate composition of women across the seven groups.
const GROUP_WEIGHTS: [f64; N_GROUPS] = [0.30, 0.10, 0.06, 0.10, 0.22, 0.12, 0.10];

/// Generate a world from a plan and a seed. The same spec and seed always
/// produce the same bundle; all randomness flows from one stream.
pub fn generate_world(spec: &SyntheticWorldSpec, seed: u64) -> Result<SyntheticWorld> {
    spec.validate()?;
    let geo = build_geo(spec)?;
    let cal = spec.calendar()?;
    let sizes = build_sizes(spec, &geo, &cal)?;
    let prior = Prior::new(&geo, &cal, spec.constants.clone(), spec.high_income_super)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = prior.simulate(&mut rng, 1000)?;
    let state = prior.state(&truth);
    let flows = FlowTable::build_scaled(
        &sizes,
        spec.constants.loss_per_abortion,
        spec.constants.loss_per_birth,
        |c, p| state.rates_at(c, p),
    )?;

    let mut set = ObservationSet::default();
    let gen = Generator {
        spec,
        prior: &prior,
        truth: &truth,
        flows: &flows,
        n_p: cal.n_periods(),
        n_t: cal.n_years(),
        plen: cal.period_length() as usize,
    };
    for c in 0..geo.n_countries() {
        let sparse = spec.is_sparse(c);
        if !sparse {
            for i in 0..spec.intention_points_per_country {
                set.intention.push(gen.intention_point(&mut rng, c, i)?);
            }
            for i in 0..spec.intention_ranges_per_country {
                set.intention.push(gen.intention_range(&mut rng, c, i)?);
            }
            for j in 0..spec.abortion_points_per_country {
                set.abortion.push(gen.abortion_point(&mut rng, c, j));
            }
            for j in 0..spec.abortion_bounds_per_country {
                set.abortion.push(gen.abortion_bound(&mut rng, c, j));
            }
            for j in 0..spec.indirect_per_country {
                set.abortion.push(gen.abortion_indirect(&mut rng, c, j));
            }
            for k in 0..spec.share_observations_per_country {
                set.married_share.push(gen.married_share(&mut rng, c, k)?);
            }
        }
        for p in 1..=spec.births_periods_per_country.min(cal.n_periods()) {
            set.births.push(gen.births(&mut rng, c, p));
        }
    }
    set.validate(geo.n_countries(), cal.n_years(), cal.n_periods())?;

    Ok(SyntheticWorld {
        spec: spec.clone(),
        geo,
        cal,
        sizes,
        obs: set,
        truth,
    })
}

fn build_geo(spec: &SyntheticWorldSpec) -> Result<GeoHierarchy> {
    let mut rows = Vec::with_capacity(spec.n_countries());
    let mut country_id = 0;
    let mut region_id = 0;
    for q in 0..spec.super_regions {
        for _ in 0..spec.regions_per_super {
            region_id += 1;
            for _ in 0..spec.countries_per_region {
                country_id += 1;
                rows.push(CountryDef {
                    id: country_id,
                    name: format!("Country {country_id:03}"),
                    region_id,
                    super_region_id: q as u32 + 1,
                });
            }
        }
    }
    GeoHierarchy::new(rows)
}

/// Deterministic group sizes: a fixed composition, a country scale, slow
/// growth over time and a small arithmetic wiggle so no two cells match.
fn build_sizes(
    spec: &SyntheticWorldSpec,
    geo: &GeoHierarchy,
    cal: &PeriodCalendar,
) -> Result<GroupSizes> {
    let n_t = cal.n_years();
    let mut counts = Vec::with_capacity(geo.n_countries() * n_t * N_GROUPS);
    for c in 0..geo.n_countries() {
        let scale = 1.0 + 0.5 * (c % 5) as f64;
        for t in 0..n_t {
            let growth = 1.0 + 0.012 * t as f64;
            for (f, weight) in GROUP_WEIGHTS.iter().enumerate() {
                let wiggle = 0.85 + 0.03 * ((c * 31 + t * 7 + f * 13) % 11) as f64;
                counts.push((spec.women_per_group * weight * scale * growth * wiggle).round());
            }
        }
    }
    GroupSizes::new(geo, cal, counts)
}

struct Generator<'a> {
    spec: &'a SyntheticWorldSpec,
    prior: &'a Prior,
    truth: &'a [f64],
    flows: &'a FlowTable,
    n_p: usize,
    n_t: usize,
    plen: usize,
}

const SCOPES: [Scope; 3] = [Scope::All, Scope::Married, Scope::Unmarried];
const QUANTITIES: [IntentionQuantity; 2] = [
    IntentionQuantity::BirthsUnintended,
    IntentionQuantity::PregnanciesUnintended,
];
const RECALLS: [RecallWindow; 3] = [
    RecallWindow::OneYear,
    RecallWindow::ThreeYears,
    RecallWindow::FiveYears,
];

impl Generator<'_> {
    fn slot(&self, s: crate::model::Slot) -> f64 {
        self.truth[s as usize]
    }

    fn period_years(&self, p: usize) -> (usize, usize) {
        let lo = (p - 1) * self.plen;
        (lo, lo + self.plen - 1)
    }

    /// Year span for the i-th proportion observation of a country: a one
    /// or two year window inside a cycling period, with every fifth
    /// window spilling into the next period.
    fn intention_span(&self, c: usize, i: usize) -> (usize, usize) {
        let p = 1 + (i + c) % self.n_p;
        let (t0, t1) = self.period_years(p);
        let lo = t0 + i % self.plen;
        let hi = if i % 5 == 4 && p < self.n_p {
            t1 + 1
        } else {
            (lo + i % 2).min(t1)
        };
        (lo, hi)
    }

    fn ns_spread(&self, scope: Scope) -> f64 {
        let a = &self.prior.atlas;
        match scope {
            Scope::All => self.slot(a.ns_all()),
            _ => self.slot(a.ns_sub()),
        }
    }

    /// Proportion noise variance, anchored at the center of the sampling
    /// distribution rather than at the draw.
    fn proportion_var(&self, center: f64, sv: f64, scope: Scope, representative: bool) -> f64 {
        let anchor = center.clamp(1e-3, 1.0 - 1e-3);
        obs::proportion_variance(
            anchor,
            sv,
            self.ns_spread(scope),
            representative,
            self.slot(self.prior.atlas.nonrep()),
        )
    }

    fn intention_point(
        &self,
        rng: &mut ChaCha8Rng,
        c: usize,
        i: usize,
    ) -> Result<IntentionObservation> {
        let a = &self.prior.atlas;
        let (year_lo, year_hi) = self.intention_span(c, i);
        let scope = SCOPES[i % 3];
        let quantity = QUANTITIES[i % 2];
        let recall = RECALLS[(i + c) % 3];
        let representative = i % 2 == 0;
        let sampling_variance = 4e-4 * (1.0 + (i % 3) as f64);

        let modeled =
            obs::modeled_proportion(self.flows, c, year_lo, year_hi, scope, quantity)?;
        let q = a.super_of_country[c];
        let bias = recall.bias(
            self.slot(a.recall_mu3(q)).exp(),
            self.slot(a.recall_mu5(q)).exp(),
        );
        let center = modeled / bias;
        let var = self.proportion_var(center, sampling_variance, scope, representative);
        let y = sample_truncated_normal(rng, center, var.sqrt(), 0.0, 1.0)?
            .clamp(1e-4, 1.0 - 1e-4);

        Ok(IntentionObservation {
            country: c,
            year_lo,
            year_hi,
            scope,
            quantity,
            recall,
            value: IntentionValue::Point(y),
            sampling_variance,
            representative,
        })
    }

    fn intention_range(
        &self,
        rng: &mut ChaCha8Rng,
        c: usize,
        i: usize,
    ) -> Result<IntentionObservation> {
        let (year_lo, year_hi) = self.intention_span(c, i + 2);
        let scope = SCOPES[(i + 1) % 3];
        let quantity = QUANTITIES[i % 2];
        let representative = i % 2 == 1;
        let sampling_variance = 6e-4;

        let modeled =
            obs::modeled_proportion(self.flows, c, year_lo, year_hi, scope, quantity)?;
        // bracket ends on either side of the modeled value, then observed
        // ends scattered around them with the same noise the likelihood
        // assumes for its latent bounds
        let lo_center = (modeled * (0.55 + 0.3 * rng.gen::<f64>())).clamp(1e-4, 1.0 - 2e-4);
        let hi_center = (modeled + (1.0 - modeled) * (0.15 + 0.3 * rng.gen::<f64>()))
            .clamp(lo_center + 1e-5, 1.0 - 1e-4);
        let var_lo = self.proportion_var(lo_center, sampling_variance, scope, representative);
        let var_hi = self.proportion_var(hi_center, sampling_variance, scope, representative);
        let d_min = sample_truncated_normal(rng, lo_center, var_lo.sqrt(), 0.0, 1.0)?;
        let d_max = sample_truncated_normal(rng, hi_center, var_hi.sqrt(), 0.0, 1.0)?;
        let (mut min, mut max) = if d_min <= d_max { (d_min, d_max) } else { (d_max, d_min) };
        min = min.clamp(1e-4, 1.0 - 2e-4);
        max = max.clamp(min, 1.0 - 1e-4);

        Ok(IntentionObservation {
            country: c,
            year_lo,
            year_hi,
            scope,
            quantity,
            recall: RecallWindow::OneYear,
            value: IntentionValue::Range { min, max },
            sampling_variance,
            representative,
        })
    }

    /// True abortions for one country-period under a scope.
    fn psi(&self, c: usize, p: usize, scope: Scope) -> f64 {
        let (t0, t1) = self.period_years(p);
        obs::scope_abortions(self.flows, c, t0, t1, scope)
    }

    fn abortion_scope(&self, j: usize) -> Scope {
        if j % 2 == 0 {
            Scope::All
        } else {
            Scope::Married
        }
    }

    fn abortion_point(&self, rng: &mut ChaCha8Rng, c: usize, j: usize) -> AbortionObservation {
        let a = &self.prior.atlas;
        let period = 1 + (j + 2 * c) % self.n_p;
        let scope = self.abortion_scope(j);
        let psi = self.psi(c, period, scope);
        let source = [
            AbortionSource::OfficialComplete,
            AbortionSource::Survey,
            AbortionSource::StudyPoint,
        ][j % 3];
        let nonrep = source == AbortionSource::StudyPoint && j % 2 == 1;
        let (center, sd) = match source {
            AbortionSource::OfficialComplete => {
                (psi, self.slot(a.iota_of_region(a.region_of_country[c])))
            }
            AbortionSource::Survey => (
                psi * self.slot(a.beta_survey()),
                self.slot(a.iota_survey()),
            ),
            AbortionSource::StudyPoint => {
                let mut sd = self.slot(a.eta_direct());
                if nonrep {
                    sd *= (1.0 + self.slot(a.pi())).sqrt();
                }
                (psi, sd)
            }
            _ => unreachable!(),
        };
        let count = (center.ln() + sd * sample_std_normal(rng)).exp();
        AbortionObservation {
            country: c,
            period,
            scope,
            count: AbortionValue::Point(count),
            source,
            nonrepresentative_study: nonrep,
            indirect_multiplier: None,
        }
    }

    fn abortion_bound(&self, rng: &mut ChaCha8Rng, c: usize, j: usize) -> AbortionObservation {
        let a = &self.prior.atlas;
        let period = 1 + (j + 2 * c + 1) % self.n_p;
        let scope = self.abortion_scope(j + 1);
        let psi = self.psi(c, period, scope);
        let iota = self.slot(a.iota_of_region(a.region_of_country[c]));
        let eta = self.slot(a.eta_direct());
        match j % 3 {
            // an undercount: the latent floor sits below the true total
            0 => {
                let floor = psi * (0.3 + 0.6 * rng.gen::<f64>());
                let count = (floor.ln() + iota * sample_std_normal(rng)).exp();
                AbortionObservation {
                    country: c,
                    period,
                    scope,
                    count: AbortionValue::Point(count),
                    source: AbortionSource::OfficialMinimum,
                    nonrepresentative_study: false,
                    indirect_multiplier: None,
                }
            }
            // a ceiling above the true total
            1 => {
                let ceil = psi * (1.1 + 0.8 * rng.gen::<f64>());
                let count = (ceil.ln() + eta * sample_std_normal(rng)).exp();
                AbortionObservation {
                    country: c,
                    period,
                    scope,
                    count: AbortionValue::Point(count),
                    source: AbortionSource::Maximum,
                    nonrepresentative_study: false,
                    indirect_multiplier: None,
                }
            }
            // a two-sided bracket
            _ => {
                let lo = psi * (0.4 + 0.3 * rng.gen::<f64>());
                let hi = psi * (1.1 + 0.5 * rng.gen::<f64>());
                let d_min = (lo.ln() + iota * sample_std_normal(rng)).exp();
                let d_max = (hi.ln() + iota * sample_std_normal(rng)).exp();
                let (min, max) = if d_min <= d_max { (d_min, d_max) } else { (d_max, d_min) };
                AbortionObservation {
                    country: c,
                    period,
                    scope,
                    count: AbortionValue::Range { min, max },
                    source: AbortionSource::Range,
                    nonrepresentative_study: false,
                    indirect_multiplier: None,
                }
            }
        }
    }

    fn abortion_indirect(&self, rng: &mut ChaCha8Rng, c: usize, j: usize) -> AbortionObservation {
        let a = &self.prior.atlas;
        let period = 1 + (j + 2 * c + 2) % self.n_p;
        let scope = self.abortion_scope(j);
        let psi = self.psi(c, period, scope);
        let nonrep = j % 2 == 0;
        let multiplier = 2.0 + 1.5 * rng.gen::<f64>();
        let bias = multiplier.ln() + self.slot(a.eta_indirect()) * sample_std_normal(rng);
        let mut sd = self.slot(a.eta_direct());
        if nonrep {
            sd *= (1.0 + self.slot(a.pi())).sqrt();
        }
        let count = (psi.ln() + bias + sd * sample_std_normal(rng)).exp();
        AbortionObservation {
            country: c,
            period,
            scope,
            count: AbortionValue::Point(count),
            source: AbortionSource::Indirect,
            nonrepresentative_study: nonrep,
            indirect_multiplier: Some(multiplier),
        }
    }

    fn married_share(
        &self,
        rng: &mut ChaCha8Rng,
        c: usize,
        k: usize,
    ) -> Result<MarriedShareObservation> {
        let year = (3 * k + 2 * c) % self.n_t;
        let share = obs::married_abortion_share(self.flows, c, year)?;
        let sd = self.slot(self.prior.atlas.iota_prop());
        let (value, treatment) = match (k + c) % 3 {
            0 => {
                let y = (share + sd * sample_std_normal(rng)).clamp(1e-3, 1.0 - 1e-3);
                (y, ShareTreatment::Point)
            }
            1 => {
                let floor = share * (0.4 + 0.4 * rng.gen::<f64>());
                let y = sample_truncated_normal(rng, floor, sd, 0.0, 1.0)?;
                (y, ShareTreatment::Minimum)
            }
            _ => {
                let ceil = share + (1.0 - share) * (0.2 + 0.4 * rng.gen::<f64>());
                let y = sample_truncated_normal(rng, ceil, sd, 0.0, 1.0)?;
                (y, ShareTreatment::Maximum)
            }
        };
        Ok(MarriedShareObservation {
            country: c,
            year,
            value,
            treatment,
        })
    }

    fn births(&self, rng: &mut ChaCha8Rng, c: usize, period: usize) -> BirthsObservation {
        let (t0, t1) = self.period_years(period);
        let theta = obs::total_births(self.flows, c, t0, t1);
        let vr_quality = (c + period) % 2 == 0;
        let sd = if vr_quality {
            self.spec.constants.births_sd_vr
        } else {
            self.spec.constants.births_sd_other
        };
        let births = (theta.ln() + sd * sample_std_normal(rng)).exp();
        BirthsObservation {
            country: c,
            period,
            births,
            vr_quality,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{normal_cdf, normal_lpdf};
    use crate::mcmc::Target;

    fn small_spec() -> SyntheticWorldSpec {
        SyntheticWorldSpec {
            super_regions: 1,
            regions_per_super: 2,
            countries_per_region: 2,
            periods: 4,
            reference_period: 2,
            births_periods_per_country: 4,
            high_income_super: Some(0),
            ..SyntheticWorldSpec::default()
        }
    }

    #[test]
    fn degenerate_counts_are_rejected() {
        for field in 0..4 {
            let mut spec = SyntheticWorldSpec::default();
            match field {
                0 => spec.super_regions = 0,
                1 => spec.regions_per_super = 0,
                2 => spec.countries_per_region = 0,
                _ => spec.periods = 0,
            }
            assert!(spec.validate().is_err(), "field {field} accepted zero");
        }
        let mut spec = SyntheticWorldSpec::default();
        spec.reference_period = 7;
        assert!(spec.validate().is_err());
        spec.reference_period = 3;
        spec.high_income_super = Some(2);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn same_seed_reproduces_the_bundle() {
        let spec = small_spec();
        let a = generate_world(&spec, 99).unwrap();
        let b = generate_world(&spec, 99).unwrap();
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.obs, b.obs);
        for c in 0..a.geo.n_countries() {
            assert_eq!(a.geo.country_id(c), b.geo.country_id(c));
            for t in 0..a.cal.n_years() {
                for f in 0..N_GROUPS {
                    assert_eq!(a.sizes.w(c, t, f).to_bits(), b.sizes.w(c, t, f).to_bits());
                }
            }
        }

        let other = generate_world(&spec, 100).unwrap();
        assert_ne!(a.truth, other.truth);
        assert_ne!(a.obs, other.obs);
    }

    #[test]
    fn every_observation_branch_appears() {
        let world = generate_world(&SyntheticWorldSpec::default(), 5).unwrap();
        let obs = &world.obs;

        for s in [
            AbortionSource::OfficialComplete,
            AbortionSource::OfficialMinimum,
            AbortionSource::Survey,
            AbortionSource::Indirect,
            AbortionSource::StudyPoint,
            AbortionSource::Range,
            AbortionSource::Maximum,
        ] {
            assert!(
                obs.abortion.iter().any(|o| o.source == s),
                "missing abortion source {s:?}"
            );
        }
        assert!(obs.abortion.iter().any(|o| o.nonrepresentative_study));

        let points = obs
            .intention
            .iter()
            .filter(|o| matches!(o.value, IntentionValue::Point(_)))
            .count();
        let ranges = obs.intention.len() - points;
        assert!(points > 0 && ranges > 0);
        for recall in RECALLS {
            assert!(obs.intention.iter().any(|o| o.recall == recall));
        }
        for scope in SCOPES {
            assert!(obs.intention.iter().any(|o| o.scope == scope));
        }
        for quantity in QUANTITIES {
            assert!(obs.intention.iter().any(|o| o.quantity == quantity));
        }
        assert!(obs.intention.iter().any(|o| o.representative));
        assert!(obs.intention.iter().any(|o| !o.representative));
        // some windows cross a period boundary
        let plen = world.cal.period_length() as usize;
        assert!(obs
            .intention
            .iter()
            .any(|o| o.year_lo / plen != o.year_hi / plen));

        for t in [
            ShareTreatment::Point,
            ShareTreatment::Minimum,
            ShareTreatment::Maximum,
        ] {
            assert!(obs.married_share.iter().any(|o| o.treatment == t));
        }
        assert!(obs.births.iter().any(|o| o.vr_quality));
        assert!(obs.births.iter().any(|o| !o.vr_quality));
        assert_eq!(obs.births.len(), 12 * 6);
    }

    /// Mean standardized residual of the point classes stays within three
    /// standard errors of zero, with the truncation of proportion noise
    /// corrected analytically.
    #[test]
    fn point_observations_scatter_standardized_around_truth() {
        let spec = SyntheticWorldSpec {
            intention_points_per_country: 30,
            intention_ranges_per_country: 0,
            abortion_points_per_country: 30,
            abortion_bounds_per_country: 0,
            indirect_per_country: 0,
            share_observations_per_country: 0,
            ..small_spec()
        };
        let world = generate_world(&spec, 20_260_819).unwrap();
        let prior = world.prior().unwrap();
        let state = prior.state(&world.truth);
        let flows = FlowTable::build_scaled(
            &world.sizes,
            spec.constants.loss_per_abortion,
            spec.constants.loss_per_birth,
            |c, p| state.rates_at(c, p),
        )
        .unwrap();
        let gen = Generator {
            spec: &spec,
            prior: &prior,
            truth: &world.truth,
            flows: &flows,
            n_p: world.cal.n_periods(),
            n_t: world.cal.n_years(),
            plen: world.cal.period_length() as usize,
        };
        let a = &prior.atlas;

        let mut sum = 0.0;
        let mut n = 0.0;
        for o in &world.obs.intention {
            let IntentionValue::Point(y) = o.value else { unreachable!() };
            let modeled = obs::modeled_proportion(
                &flows, o.country, o.year_lo, o.year_hi, o.scope, o.quantity,
            )
            .unwrap();
            let q = a.super_of_country[o.country];
            let bias = o.recall.bias(
                world.truth[a.recall_mu3(q) as usize].exp(),
                world.truth[a.recall_mu5(q) as usize].exp(),
            );
            let center = modeled / bias;
            let sd = gen
                .proportion_var(center, o.sampling_variance, o.scope, o.representative)
                .sqrt();
            let alpha = (0.0 - center) / sd;
            let beta = (1.0 - center) / sd;
            let phi = |z: f64| normal_lpdf(z, 0.0, 1.0).exp();
            let trunc_mean =
                center + sd * (phi(alpha) - phi(beta)) / (normal_cdf(beta) - normal_cdf(alpha));
            sum += (y - trunc_mean) / sd;
            n += 1.0;
        }
        assert!(n >= 100.0);
        assert!(
            (sum / n).abs() <= 3.0 / n.sqrt(),
            "intention residual mean {} over {} points",
            sum / n,
            n
        );

        sum = 0.0;
        n = 0.0;
        for o in &world.obs.abortion {
            let AbortionValue::Point(count) = o.count else { unreachable!() };
            let psi = gen.psi(o.country, o.period, o.scope);
            let (center, sd) = match o.source {
                AbortionSource::OfficialComplete => (
                    psi,
                    world.truth[a.iota_of_region(a.region_of_country[o.country]) as usize],
                ),
                AbortionSource::Survey => (
                    psi * world.truth[a.beta_survey() as usize],
                    world.truth[a.iota_survey() as usize],
                ),
                AbortionSource::StudyPoint => {
                    let mut sd = world.truth[a.eta_direct() as usize];
                    if o.nonrepresentative_study {
                        sd *= (1.0 + world.truth[a.pi() as usize]).sqrt();
                    }
                    (psi, sd)
                }
                _ => unreachable!(),
            };
            sum += (count.ln() - center.ln()) / sd;
            n += 1.0;
        }
        assert!(n >= 100.0);
        assert!(
            (sum / n).abs() <= 3.0 / n.sqrt(),
            "abortion residual mean {} over {} points",
            sum / n,
            n
        );
    }

    /// Reported floors stay below the true totals they bound, up to the
    /// sampled reporting noise; ceilings stay above.
    #[test]
    fn bounds_sit_on_the_correct_side_of_the_truth() {
        let spec = SyntheticWorldSpec {
            abortion_bounds_per_country: 6,
            ..SyntheticWorldSpec::default()
        };
        let world = generate_world(&spec, 11).unwrap();
        let prior = world.prior().unwrap();
        let state = prior.state(&world.truth);
        let flows = FlowTable::build_scaled(
            &world.sizes,
            spec.constants.loss_per_abortion,
            spec.constants.loss_per_birth,
            |c, p| state.rates_at(c, p),
        )
        .unwrap();
        let a = &prior.atlas;
        let plen = world.cal.period_length() as usize;

        let mut minima = 0;
        let mut maxima = 0;
        for o in &world.obs.abortion {
            let t0 = (o.period - 1) * plen;
            let psi = obs::scope_abortions(&flows, o.country, t0, t0 + plen - 1, o.scope);
            match o.source {
                AbortionSource::OfficialMinimum => {
                    let AbortionValue::Point(count) = o.count else { unreachable!() };
                    let iota =
                        world.truth[a.iota_of_region(a.region_of_country[o.country]) as usize];
                    assert!(
                        count <= 0.9 * psi * (6.0 * iota).exp(),
                        "floor {count} implausibly above true total {psi}"
                    );
                    minima += 1;
                }
                AbortionSource::Maximum => {
                    let AbortionValue::Point(count) = o.count else { unreachable!() };
                    let eta = world.truth[a.eta_direct() as usize];
                    assert!(
                        count >= 1.1 * psi * (-6.0 * eta).exp(),
                        "ceiling {count} implausibly below true total {psi}"
                    );
                    maxima += 1;
                }
                AbortionSource::Range => {
                    let AbortionValue::Range { min, max } = o.count else { unreachable!() };
                    assert!(min <= max);
                }
                _ => {}
            }
        }
        assert!(minima >= 12 && maxima >= 12);
    }

    #[test]
    fn sparse_countries_only_report_births() {
        let spec = SyntheticWorldSpec {
            sparse_country_stride: 2,
            ..SyntheticWorldSpec::default()
        };
        let world = generate_world(&spec, 3).unwrap();
        for c in 0..world.geo.n_countries() {
            let quiet = spec.is_sparse(c);
            let n_other = world.obs.intention.iter().filter(|o| o.country == c).count()
                + world.obs.abortion.iter().filter(|o| o.country == c).count()
                + world
                    .obs
                    .married_share
                    .iter()
                    .filter(|o| o.country == c)
                    .count();
            if quiet {
                assert_eq!(n_other, 0, "sparse country {c} has observations");
            } else {
                assert!(n_other > 0);
            }
            assert!(world.obs.births.iter().any(|o| o.country == c));
        }
        assert!((0..world.geo.n_countries()).any(|c| spec.is_sparse(c)));
    }

    #[test]
    fn generated_bundle_supports_the_joint_model() {
        let world = generate_world(&small_spec(), 17).unwrap();
        let prior = world.prior().unwrap();
        assert!(prior.check_feasible(&world.truth).is_none());

        let model = crate::model::JointModel::new(&prior, &world.sizes, &world.obs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let init = model.init(&mut rng, 200).unwrap();
        let session = model.session(init).unwrap();
        assert!(session.log_density().is_finite());
    }
}
