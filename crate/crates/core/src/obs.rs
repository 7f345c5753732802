//! Observation types and per-datum log-likelihood terms.
//!
//! Four data classes inform a fit: birth counts per country-period,
//! proportions of pregnancies or births unintended, abortion counts, and
//! the share of abortions occurring to married women. Each class has its
//! own error model. Minimum, maximum, and range treatments constrain the
//! modeled quantities through latent bound variables that are sampled
//! alongside the model parameters; a state violating a bound indicator
//! has log-likelihood negative infinity and is rejected by the sampler.
//!
//! Everything here is a pure function of an observation, the latent
//! values attached to it, scalar error parameters, and an event-flow
//! view. Wiring observations to parameter slots is the joint model's job.

use crate::accounts::{FlowsLike, Scope};
use crate::dist;
use crate::error::{Error, Result};

// ---------------------------------------------------------------------
// intention data

/// How far before the interview the reported pregnancies or births
/// occurred. Recall windows longer than a year get a super-region bias
/// multiplier on the modeled proportion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecallWindow {
    OneYear,
    ThreeYears,
    FiveYears,
}

impl RecallWindow {
    pub fn from_years(d: u8) -> Result<Self> {
        match d {
            1 => Ok(RecallWindow::OneYear),
            3 => Ok(RecallWindow::ThreeYears),
            5 => Ok(RecallWindow::FiveYears),
            other => Err(Error::InputDomain(format!(
                "recall window must be 1, 3, or 5 years, got {other}"
            ))),
        }
    }

    pub fn years(self) -> u8 {
        match self {
            RecallWindow::OneYear => 1,
            RecallWindow::ThreeYears => 3,
            RecallWindow::FiveYears => 5,
        }
    }

    /// Bias divisor for this window given the 3- and 5-year multipliers
    /// of the observation's super-region. One-year recall is unbiased.
    pub fn bias(self, mu3: f64, mu5: f64) -> f64 {
        match self {
            RecallWindow::OneYear => 1.0,
            RecallWindow::ThreeYears => mu3,
            RecallWindow::FiveYears => mu5,
        }
    }
}

/// Whether a proportion refers to unintended births or unintended
/// pregnancies; picks which event flow enters the modeled ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntentionQuantity {
    BirthsUnintended,
    PregnanciesUnintended,
}

impl IntentionQuantity {
    pub fn label(self) -> &'static str {
        match self {
            IntentionQuantity::BirthsUnintended => "births_unintended",
            IntentionQuantity::PregnanciesUnintended => "pregnancies_unintended",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s {
            "births_unintended" => Ok(IntentionQuantity::BirthsUnintended),
            "pregnancies_unintended" => Ok(IntentionQuantity::PregnanciesUnintended),
            other => Err(Error::InputDomain(format!(
                "unknown intention quantity {other:?}"
            ))),
        }
    }
}

/// Point proportions enter the likelihood directly; ranges constrain the
/// modeled proportion between two latent bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntentionValue {
    Point(f64),
    Range { min: f64, max: f64 },
}

impl IntentionValue {
    pub fn treatment_label(self) -> &'static str {
        match self {
            IntentionValue::Point(_) => "point",
            IntentionValue::Range { .. } => "range",
        }
    }
}

/// One observed proportion of births or pregnancies unintended.
#[derive(Debug, Clone, PartialEq)]
pub struct IntentionObservation {
    /// dense country index
    pub country: usize,
    /// first and last covered year, as 0-based offsets into the calendar
    pub year_lo: usize,
    pub year_hi: usize,
    pub scope: Scope,
    pub quantity: IntentionQuantity,
    pub recall: RecallWindow,
    pub value: IntentionValue,
    pub sampling_variance: f64,
    pub representative: bool,
}

impl IntentionObservation {
    /// Latent bound variables this observation introduces.
    pub fn latent_count(&self) -> usize {
        match self.value {
            IntentionValue::Point(_) => 0,
            IntentionValue::Range { .. } => 2,
        }
    }
}

// ---------------------------------------------------------------------
// abortion data

/// Source class of an abortion count; fixes the error scale, the bias
/// treatment, and whether the count acts as a point, bound, or range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbortionSource {
    /// complete official statistic, point likelihood
    OfficialComplete,
    /// incomplete official statistic, lower bound on the modeled count
    OfficialMinimum,
    /// survey of women, point likelihood with under-report bias
    Survey,
    /// indirect-method study; the count is the study's direct component
    /// and the bias multiplier is estimated around the study's own ratio
    Indirect,
    /// direct study estimate, point likelihood
    StudyPoint,
    /// upper bound on the modeled count
    Maximum,
    /// two-sided bound on the modeled count
    Range,
}

/// Which estimated error scale a source reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorScale {
    /// per-region scale for official statistics and study counts
    Region,
    /// shared survey scale
    Survey,
    /// direct-component scale of indirect studies
    Direct,
}

impl AbortionSource {
    pub fn label(self) -> &'static str {
        match self {
            AbortionSource::OfficialComplete => "official_complete",
            AbortionSource::OfficialMinimum => "official_minimum",
            AbortionSource::Survey => "survey",
            AbortionSource::Indirect => "indirect",
            AbortionSource::StudyPoint => "study_point",
            AbortionSource::Maximum => "maximum",
            AbortionSource::Range => "range",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s {
            "official_complete" => Ok(AbortionSource::OfficialComplete),
            "official_minimum" => Ok(AbortionSource::OfficialMinimum),
            "survey" => Ok(AbortionSource::Survey),
            "indirect" => Ok(AbortionSource::Indirect),
            "study_point" => Ok(AbortionSource::StudyPoint),
            "maximum" => Ok(AbortionSource::Maximum),
            "range" => Ok(AbortionSource::Range),
            other => Err(Error::InputDomain(format!(
                "unknown abortion source {other:?}"
            ))),
        }
    }

    pub fn error_scale(self) -> ErrorScale {
        match self {
            AbortionSource::Survey => ErrorScale::Survey,
            AbortionSource::Indirect | AbortionSource::StudyPoint | AbortionSource::Maximum => {
                ErrorScale::Direct
            }
            _ => ErrorScale::Region,
        }
    }

    /// Latent variables the source introduces: one log-count per one-sided
    /// bound, two for a range, one log-bias for an indirect study.
    pub fn latent_count(self) -> usize {
        match self {
            AbortionSource::OfficialMinimum | AbortionSource::Maximum => 1,
            AbortionSource::Range => 2,
            AbortionSource::Indirect => 1,
            _ => 0,
        }
    }

    /// Sources that may carry the non-representative-study flag. Only point
    /// likelihoods inflate their variance by it, so only study-derived
    /// point classes accept it.
    pub fn study_based(self) -> bool {
        matches!(self, AbortionSource::Indirect | AbortionSource::StudyPoint)
    }
}

/// Counts are single values except for the range source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AbortionValue {
    Point(f64),
    Range { min: f64, max: f64 },
}

/// One observed abortion count for a country-period.
#[derive(Debug, Clone, PartialEq)]
pub struct AbortionObservation {
    pub country: usize,
    /// 1-based period
    pub period: usize,
    /// all women or married women only
    pub scope: Scope,
    pub count: AbortionValue,
    pub source: AbortionSource,
    /// true when the count comes from a non-representative study; inflates
    /// the error variance by the shared study multiplier
    pub nonrepresentative_study: bool,
    /// indirect studies only: the study's own total-to-direct ratio, the
    /// center of its estimated bias multiplier
    pub indirect_multiplier: Option<f64>,
}

impl AbortionObservation {
    pub fn latent_count(&self) -> usize {
        self.source.latent_count()
    }
}

// ---------------------------------------------------------------------
// married-share and births data

/// Treatment of an observed share of abortions occurring to married women.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShareTreatment {
    Point,
    Minimum,
    Maximum,
}

impl ShareTreatment {
    pub fn label(self) -> &'static str {
        match self {
            ShareTreatment::Point => "point",
            ShareTreatment::Minimum => "minimum",
            ShareTreatment::Maximum => "maximum",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s {
            "point" => Ok(ShareTreatment::Point),
            "minimum" => Ok(ShareTreatment::Minimum),
            "maximum" => Ok(ShareTreatment::Maximum),
            other => Err(Error::InputDomain(format!(
                "unknown married-share treatment {other:?}"
            ))),
        }
    }
}

/// One observed proportion of abortions occurring to married women.
#[derive(Debug, Clone, PartialEq)]
pub struct MarriedShareObservation {
    pub country: usize,
    /// 0-based year offset
    pub year: usize,
    pub value: f64,
    pub treatment: ShareTreatment,
}

impl MarriedShareObservation {
    pub fn latent_count(&self) -> usize {
        match self.treatment {
            ShareTreatment::Point => 0,
            _ => 1,
        }
    }
}

/// Births counted in one country-period.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthsObservation {
    pub country: usize,
    /// 1-based period
    pub period: usize,
    pub births: f64,
    /// high-quality vital registration; narrows the error scale
    pub vr_quality: bool,
}

// ---------------------------------------------------------------------
// observation set

/// All observations entering one fit, validated as a unit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservationSet {
    pub intention: Vec<IntentionObservation>,
    pub abortion: Vec<AbortionObservation>,
    pub married_share: Vec<MarriedShareObservation>,
    pub births: Vec<BirthsObservation>,
}

impl ObservationSet {
    pub fn len(&self) -> usize {
        self.intention.len() + self.abortion.len() + self.married_share.len() + self.births.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total latent bound/bias variables across all observations.
    pub fn latent_count(&self) -> usize {
        self.intention.iter().map(|o| o.latent_count()).sum::<usize>()
            + self.abortion.iter().map(|o| o.latent_count()).sum::<usize>()
            + self.married_share.iter().map(|o| o.latent_count()).sum::<usize>()
    }

    /// Check every per-observation invariant against the model frame:
    /// index ranges, value domains, and source/field consistency.
    pub fn validate(&self, n_countries: usize, n_years: usize, n_periods: usize) -> Result<()> {
        for (i, o) in self.intention.iter().enumerate() {
            let at = |msg: String| Error::InputDomain(format!("intention observation {i}: {msg}"));
            if o.country >= n_countries {
                return Err(at(format!("country index {} out of range", o.country)));
            }
            if o.year_lo > o.year_hi || o.year_hi >= n_years {
                return Err(at(format!(
                    "year span {}..={} outside calendar",
                    o.year_lo, o.year_hi
                )));
            }
            if !(o.sampling_variance >= 0.0) {
                return Err(at(format!(
                    "sampling variance {} must be nonnegative",
                    o.sampling_variance
                )));
            }
            match o.value {
                IntentionValue::Point(y) => {
                    if !(0.0..=1.0).contains(&y) {
                        return Err(at(format!("proportion {y} outside [0, 1]")));
                    }
                }
                IntentionValue::Range { min, max } => {
                    if !(0.0 <= min && min <= max && max <= 1.0) {
                        return Err(at(format!("range [{min}, {max}] not ordered inside [0, 1]")));
                    }
                }
            }
        }

        for (i, o) in self.abortion.iter().enumerate() {
            let at = |msg: String| Error::InputDomain(format!("abortion observation {i}: {msg}"));
            if o.country >= n_countries {
                return Err(at(format!("country index {} out of range", o.country)));
            }
            if o.period < 1 || o.period > n_periods {
                return Err(at(format!("period {} out of range", o.period)));
            }
            if o.scope == Scope::Unmarried {
                return Err(at("scope must be all or married".into()));
            }
            match (o.count, o.source) {
                (AbortionValue::Range { min, max }, AbortionSource::Range) => {
                    if !(min > 0.0 && min <= max) {
                        return Err(at(format!("count range [{min}, {max}] must be positive and ordered")));
                    }
                }
                (AbortionValue::Range { .. }, s) => {
                    return Err(at(format!("count range given but source is {}", s.label())));
                }
                (AbortionValue::Point(_), AbortionSource::Range) => {
                    return Err(at("range source needs count_min and count_max".into()));
                }
                (AbortionValue::Point(a), _) => {
                    if !(a > 0.0) {
                        return Err(at(format!("count {a} must be positive")));
                    }
                }
            }
            if o.nonrepresentative_study && !o.source.study_based() {
                return Err(at(format!(
                    "non-representative flag not allowed for source {}",
                    o.source.label()
                )));
            }
            match (o.source, o.indirect_multiplier) {
                (AbortionSource::Indirect, Some(b)) if b > 0.0 => {}
                (AbortionSource::Indirect, Some(b)) => {
                    return Err(at(format!("indirect multiplier {b} must be positive")));
                }
                (AbortionSource::Indirect, None) => {
                    return Err(at("indirect source needs a multiplier".into()));
                }
                (_, Some(_)) => {
                    return Err(at(format!(
                        "multiplier only valid for indirect source, not {}",
                        o.source.label()
                    )));
                }
                (_, None) => {}
            }
        }

        for (i, o) in self.married_share.iter().enumerate() {
            let at =
                |msg: String| Error::InputDomain(format!("married-share observation {i}: {msg}"));
            if o.country >= n_countries {
                return Err(at(format!("country index {} out of range", o.country)));
            }
            if o.year >= n_years {
                return Err(at(format!("year offset {} outside calendar", o.year)));
            }
            if !(0.0..=1.0).contains(&o.value) {
                return Err(at(format!("share {} outside [0, 1]", o.value)));
            }
        }

        for (i, o) in self.births.iter().enumerate() {
            let at = |msg: String| Error::InputDomain(format!("births observation {i}: {msg}"));
            if o.country >= n_countries {
                return Err(at(format!("country index {} out of range", o.country)));
            }
            if o.period < 1 || o.period > n_periods {
                return Err(at(format!("period {} out of range", o.period)));
            }
            if !(o.births > 0.0) {
                return Err(at(format!("births {} must be positive", o.births)));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------
// modeled quantities

/// Modeled proportion unintended: the ratio of summed unintended flows to
/// summed total flows over the observation's years and scope, pooled as a
/// ratio of sums rather than a mean of yearly ratios.
pub fn modeled_proportion(
    flows: &impl FlowsLike,
    country: usize,
    year_lo: usize,
    year_hi: usize,
    scope: Scope,
    quantity: IntentionQuantity,
) -> Result<f64> {
    let mut unintended = 0.0;
    let mut total = 0.0;
    for t in year_lo..=year_hi {
        for g in scope.groups() {
            let x = match quantity {
                IntentionQuantity::BirthsUnintended => flows.births(country, t, g.index()),
                IntentionQuantity::PregnanciesUnintended => flows.pregnancies(country, t, g.index()),
            };
            total += x;
            if g.is_unintended() {
                unintended += x;
            }
        }
    }
    if !(total > 0.0) {
        return Err(Error::NumericDegenerate(format!(
            "no {} flow in country {country}, years {year_lo}..={year_hi}",
            quantity.label()
        )));
    }
    Ok(unintended / total)
}

/// Modeled abortions in scope, summed over a year-offset span.
pub fn scope_abortions(
    flows: &impl FlowsLike,
    country: usize,
    year_lo: usize,
    year_hi: usize,
    scope: Scope,
) -> f64 {
    let mut sum = 0.0;
    for t in year_lo..=year_hi {
        for g in scope.groups() {
            sum += flows.abortions(country, t, g.index());
        }
    }
    sum
}

/// Modeled births to all women, summed over a year-offset span.
pub fn total_births(flows: &impl FlowsLike, country: usize, year_lo: usize, year_hi: usize) -> f64 {
    let mut sum = 0.0;
    for t in year_lo..=year_hi {
        for g in Scope::All.groups() {
            sum += flows.births(country, t, g.index());
        }
    }
    sum
}

/// Modeled share of one year's abortions occurring to married women.
pub fn married_abortion_share(flows: &impl FlowsLike, country: usize, year: usize) -> Result<f64> {
    let married = scope_abortions(flows, country, year, year, Scope::Married);
    let total = scope_abortions(flows, country, year, year, Scope::All);
    if !(total > 0.0) {
        return Err(Error::NumericDegenerate(format!(
            "no abortion flow in country {country}, year offset {year}"
        )));
    }
    Ok(married / total)
}

// ---------------------------------------------------------------------
// intention likelihood

/// Total variance of a proportion observation: sampling variance plus
/// non-sampling and non-representativeness components scaled by the
/// Bernoulli variance of the observed proportion. The spread arguments
/// are on the standard-deviation scale (the square roots of the variance
/// multipliers, as the multipliers' priors are stated).
pub fn proportion_variance(
    y: f64,
    sampling_variance: f64,
    ns_spread: f64,
    representative: bool,
    nonrep_spread: f64,
) -> f64 {
    let extra = ns_spread * ns_spread
        + if representative { 0.0 } else { nonrep_spread * nonrep_spread };
    sampling_variance + extra * y * (1.0 - y)
}

/// Log-density of a point proportion: the observed value around the
/// modeled proportion deflated by the recall bias, truncated to (0, 1).
pub fn intention_point_loglik(y: f64, modeled: f64, recall_bias: f64, variance: f64) -> f64 {
    dist::trunc_normal_lpdf(y, modeled / recall_bias, variance.sqrt(), 0.0, 1.0)
}

/// Log-density of a range-treated proportion: two latent bounds around
/// the observed ends, ordered, with the modeled proportion required to
/// lie between them.
#[allow(clippy::too_many_arguments)]
pub fn intention_range_loglik(
    bound_lo: f64,
    bound_hi: f64,
    y_min: f64,
    y_max: f64,
    variance_min: f64,
    variance_max: f64,
    modeled: f64,
) -> f64 {
    if modeled < bound_lo || modeled > bound_hi {
        return f64::NEG_INFINITY;
    }
    dist::trunc_normal_lpdf(bound_lo, y_min, variance_min.sqrt(), 0.0, 1.0)
        + dist::trunc_normal_lpdf(bound_hi, y_max, variance_max.sqrt(), bound_lo, 1.0)
}

// ---------------------------------------------------------------------
// abortion likelihood

fn inflated_variance(error_sd: f64, study_inflation: Option<f64>) -> f64 {
    let v = error_sd * error_sd;
    match study_inflation {
        Some(pi) => v * (1.0 + pi),
        None => v,
    }
}

/// Log-density of a point abortion count on the log scale, with a bias
/// multiplier on the modeled count and optional non-representative-study
/// variance inflation.
pub fn abortion_point_loglik(
    count: f64,
    modeled: f64,
    bias: f64,
    error_sd: f64,
    study_inflation: Option<f64>,
) -> f64 {
    let center = modeled * bias;
    if !(center > 0.0) || !(count > 0.0) {
        return f64::NEG_INFINITY;
    }
    let var = inflated_variance(error_sd, study_inflation);
    dist::normal_lpdf(count.ln(), center.ln(), var.sqrt())
}

/// Which side of the modeled count a bound constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// observed count is a floor for the modeled count
    Minimum,
    /// observed count is a ceiling for the modeled count
    Maximum,
}

/// Log-density of a one-sided bound: a latent log-count around the
/// observed count, required to sit on the stated side of the modeled
/// count.
pub fn abortion_bound_loglik(
    bound_log: f64,
    count: f64,
    error_sd: f64,
    modeled: f64,
    kind: BoundKind,
) -> f64 {
    if !(count > 0.0) {
        return f64::NEG_INFINITY;
    }
    let ok = match kind {
        BoundKind::Minimum => modeled > 0.0 && bound_log <= modeled.ln(),
        BoundKind::Maximum => !(modeled > 0.0) || bound_log >= modeled.ln(),
    };
    if !ok {
        return f64::NEG_INFINITY;
    }
    dist::normal_lpdf(bound_log, count.ln(), error_sd)
}

/// Log-density of a two-sided bound: ordered latent log-counts around the
/// observed ends with the modeled count required between them.
pub fn abortion_range_loglik(
    bound_lo_log: f64,
    bound_hi_log: f64,
    count_min: f64,
    count_max: f64,
    error_sd: f64,
    modeled: f64,
) -> f64 {
    if !(count_min > 0.0 && count_max > 0.0 && modeled > 0.0) {
        return f64::NEG_INFINITY;
    }
    let lm = modeled.ln();
    if lm < bound_lo_log || lm > bound_hi_log {
        return f64::NEG_INFINITY;
    }
    dist::normal_lpdf(bound_hi_log, count_max.ln(), error_sd)
        + dist::trunc_normal_lpdf(
            bound_lo_log,
            count_min.ln(),
            error_sd,
            f64::NEG_INFINITY,
            bound_hi_log,
        )
}

/// Log-density of an indirect study's latent log-bias around the study's
/// own total-to-direct ratio.
pub fn indirect_bias_loglik(bias_log: f64, multiplier: f64, indirect_spread: f64) -> f64 {
    if !(multiplier > 0.0) {
        return f64::NEG_INFINITY;
    }
    dist::normal_lpdf(bias_log, multiplier.ln(), indirect_spread)
}

// ---------------------------------------------------------------------
// married-share likelihood

/// Log-density of a point share observation around the modeled share.
pub fn married_share_point_loglik(share: f64, modeled: f64, share_sd: f64) -> f64 {
    dist::normal_lpdf(share, modeled, share_sd)
}

/// Log-density of a bound-treated share: a latent share around the
/// observed one on (0, 1), with the modeled share on the stated side.
pub fn married_share_bound_loglik(
    bound: f64,
    share: f64,
    share_sd: f64,
    modeled: f64,
    kind: BoundKind,
) -> f64 {
    let ok = match kind {
        BoundKind::Minimum => modeled >= bound,
        BoundKind::Maximum => modeled <= bound,
    };
    if !ok {
        return f64::NEG_INFINITY;
    }
    dist::trunc_normal_lpdf(bound, share, share_sd, 0.0, 1.0)
}

// ---------------------------------------------------------------------
// births likelihood

/// Log-density of a counted birth total around the modeled total on the
/// log scale.
pub fn births_loglik(births: f64, modeled: f64, log_sd: f64) -> f64 {
    if !(modeled > 0.0) || !(births > 0.0) {
        return f64::NEG_INFINITY;
    }
    dist::normal_lpdf(births.ln(), modeled.ln(), log_sd)
}
