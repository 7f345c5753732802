//! Demographic accounting: population groups, group sizes, and the flow
//! identities linking pregnancies, abortions, and births.
//!
//! Women of reproductive age split into seven exposure groups by marital
//! status and contraception/intention status. Per woman-year pregnancy rates
//! `omega` and abortion propensities `alpha` turn group sizes into event
//! flows:
//!
//! * pregnancies       `Omega = W * omega`
//! * abortions         `Psi   = Omega * alpha`
//! * birth rate        `theta = omega * (1 - 1.1 alpha) / 1.2`
//!
//! so that `Omega = 1.1 Psi + 1.2 Theta` holds exactly in every cell; the
//! 1.1 and 1.2 factors absorb miscarriages following abortions and births.

use crate::error::{Error, Result};
use crate::geo::{GeoHierarchy, PeriodCalendar};

/// Miscarriage load carried per abortion in the pregnancy identity.
pub const MISCARRIAGE_ABORTION_FACTOR: f64 = 1.1;
/// Miscarriage load carried per birth in the pregnancy identity.
pub const MISCARRIAGE_BIRTH_FACTOR: f64 = 1.2;

/// The seven exposure groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    /// married, no unmet need (intended pregnancies)
    MarriedIntended = 0,
    /// married, pregnancy after modern-method failure
    MarriedModernFailure = 1,
    /// married, traditional-method users
    MarriedTraditional = 2,
    /// married, unmet need for contraception
    MarriedUnmet = 3,
    /// unmarried, no unmet need (intended pregnancies)
    UnmarriedIntended = 4,
    /// unmarried, modern-method users
    UnmarriedModern = 5,
    /// unmarried, not using modern methods despite need
    UnmarriedNoModern = 6,
}

pub const N_GROUPS: usize = 7;

pub const GROUPS: [Group; N_GROUPS] = [
    Group::MarriedIntended,
    Group::MarriedModernFailure,
    Group::MarriedTraditional,
    Group::MarriedUnmet,
    Group::UnmarriedIntended,
    Group::UnmarriedModern,
    Group::UnmarriedNoModern,
];

impl Group {
    pub fn label(self) -> &'static str {
        match self {
            Group::MarriedIntended => "m.nn",
            Group::MarriedModernFailure => "m.modfail",
            Group::MarriedTraditional => "m.trad",
            Group::MarriedUnmet => "m.unmet",
            Group::UnmarriedIntended => "u.nn",
            Group::UnmarriedModern => "u.mod",
            Group::UnmarriedNoModern => "u.unmod",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        GROUPS
            .iter()
            .copied()
            .find(|g| g.label() == s)
            .ok_or_else(|| Error::InputDomain(format!("unknown group label {s:?}")))
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_married(self) -> bool {
        matches!(
            self,
            Group::MarriedIntended
                | Group::MarriedModernFailure
                | Group::MarriedTraditional
                | Group::MarriedUnmet
        )
    }

    /// Pregnancies in this group count as unintended.
    pub fn is_unintended(self) -> bool {
        !matches!(self, Group::MarriedIntended | Group::UnmarriedIntended)
    }
}

/// Population scope an observation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    All,
    Married,
    Unmarried,
}

impl Scope {
    pub fn label(self) -> &'static str {
        match self {
            Scope::All => "all",
            Scope::Married => "married",
            Scope::Unmarried => "unmarried",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Scope::All),
            "married" => Ok(Scope::Married),
            "unmarried" => Ok(Scope::Unmarried),
            other => Err(Error::InputDomain(format!("unknown scope {other:?}"))),
        }
    }

    pub fn contains(self, g: Group) -> bool {
        match self {
            Scope::All => true,
            Scope::Married => g.is_married(),
            Scope::Unmarried => !g.is_married(),
        }
    }

    pub fn groups(self) -> impl Iterator<Item = Group> {
        GROUPS.into_iter().filter(move |g| self.contains(*g))
    }
}

/// Numbers of women by group, country, and year, with period aggregates.
#[derive(Debug, Clone)]
pub struct GroupSizes {
    n_c: usize,
    n_t: usize,
    n_p: usize,
    period_len: usize,
    /// women, indexed `[c * n_t + t] * N_GROUPS + f`
    w: Vec<f64>,
    /// per-period sums, indexed `[c * n_p + p] * N_GROUPS + f`
    w_period: Vec<f64>,
    /// all-group woman-years per (c, t)
    w_total_year: Vec<f64>,
    /// all-group woman-years per (c, p)
    w_total_period: Vec<f64>,
}

impl GroupSizes {
    /// Build from per-(country, year, group) counts laid out as
    /// `counts[c][t][f]`; years and countries must cover the full grid.
    pub fn new(geo: &GeoHierarchy, cal: &PeriodCalendar, counts: Vec<f64>) -> Result<Self> {
        let n_c = geo.n_countries();
        let n_t = cal.n_years();
        let n_p = cal.n_periods();
        if counts.len() != n_c * n_t * N_GROUPS {
            return Err(Error::Structural(format!(
                "group-size table has {} cells, expected {}",
                counts.len(),
                n_c * n_t * N_GROUPS
            )));
        }
        for (i, &v) in counts.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                let c = i / (n_t * N_GROUPS);
                let t = (i / N_GROUPS) % n_t;
                let f = i % N_GROUPS;
                return Err(Error::InputDomain(format!(
                    "group size for country {}, year {}, group {} is {v}",
                    geo.country_id(c),
                    cal.first_year() + t as i32,
                    GROUPS[f].label()
                )));
            }
        }
        let period_len = cal.period_length() as usize;
        let mut w_period = vec![0.0; n_c * n_p * N_GROUPS];
        let mut w_total_year = vec![0.0; n_c * n_t];
        let mut w_total_period = vec![0.0; n_c * n_p];
        for c in 0..n_c {
            for t in 0..n_t {
                let p = t / period_len;
                for f in 0..N_GROUPS {
                    let v = counts[(c * n_t + t) * N_GROUPS + f];
                    w_period[(c * n_p + p) * N_GROUPS + f] += v;
                    w_total_year[c * n_t + t] += v;
                    w_total_period[c * n_p + p] += v;
                }
            }
        }
        Ok(Self {
            n_c,
            n_t,
            n_p,
            period_len,
            w: counts,
            w_period,
            w_total_year,
            w_total_period,
        })
    }

    pub fn n_countries(&self) -> usize {
        self.n_c
    }

    pub fn n_years(&self) -> usize {
        self.n_t
    }

    pub fn n_periods(&self) -> usize {
        self.n_p
    }

    /// Women in group `f`, country `c`, year offset `t` (0-based).
    #[inline]
    pub fn w(&self, c: usize, t: usize, f: usize) -> f64 {
        self.w[(c * self.n_t + t) * N_GROUPS + f]
    }

    /// Woman-years in group `f` over period `p` (1-based).
    #[inline]
    pub fn w_period(&self, c: usize, p: usize, f: usize) -> f64 {
        self.w_period[(c * self.n_p + (p - 1)) * N_GROUPS + f]
    }

    /// All-group women in country `c`, year offset `t`.
    #[inline]
    pub fn w_total_year(&self, c: usize, t: usize) -> f64 {
        self.w_total_year[c * self.n_t + t]
    }

    /// All-group woman-years over period `p` (1-based).
    #[inline]
    pub fn w_total_period(&self, c: usize, p: usize) -> f64 {
        self.w_total_period[c * self.n_p + (p - 1)]
    }

    pub fn period_len(&self) -> usize {
        self.period_len
    }
}

/// Pregnancies from woman-years and a pregnancy rate.
pub fn pregnancies(w: f64, omega: f64) -> f64 {
    w * omega
}

/// Abortions from pregnancies and an abortion propensity.
pub fn abortions(omega_events: f64, alpha: f64) -> f64 {
    omega_events * alpha
}

/// Birth rate per woman-year implied by a pregnancy rate and propensity.
/// The propensity must stay below 1/1.1, where births would hit zero.
pub fn birth_rate(omega: f64, alpha: f64) -> Result<f64> {
    birth_rate_scaled(
        omega,
        alpha,
        MISCARRIAGE_ABORTION_FACTOR,
        MISCARRIAGE_BIRTH_FACTOR,
    )
}

/// [`birth_rate`] with explicit loss factors, for runs that override them.
pub fn birth_rate_scaled(
    omega: f64,
    alpha: f64,
    loss_abortion: f64,
    loss_birth: f64,
) -> Result<f64> {
    if !(0.0..1.0 / loss_abortion).contains(&alpha) {
        return Err(Error::InputDomain(format!(
            "abortion propensity {alpha} outside [0, {})",
            1.0 / loss_abortion
        )));
    }
    Ok(omega * (1.0 - loss_abortion * alpha) / loss_birth)
}

/// Per-cell event flows for one country-year-group cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowCell {
    pub pregnancies: f64,
    pub abortions: f64,
    pub births: f64,
}

/// Year-level flows for every (country, year, group) cell, with period sums.
#[derive(Debug, Clone)]
pub struct FlowTable {
    n_c: usize,
    n_t: usize,
    n_p: usize,
    loss_abortion: f64,
    loss_birth: f64,
    cells: Vec<FlowCell>,
    period_cells: Vec<FlowCell>,
}

/// Anything that can serve per-cell flows: a materialized [`FlowTable`] or a
/// live view over sampler state.
pub trait FlowsLike {
    /// Pregnancies in (country, year offset, group).
    fn pregnancies(&self, c: usize, t: usize, f: usize) -> f64;
    /// Abortions in (country, year offset, group).
    fn abortions(&self, c: usize, t: usize, f: usize) -> f64;
    /// Births in (country, year offset, group).
    fn births(&self, c: usize, t: usize, f: usize) -> f64;
}

impl FlowsLike for FlowTable {
    #[inline]
    fn pregnancies(&self, c: usize, t: usize, f: usize) -> f64 {
        self.cells[(c * self.n_t + t) * N_GROUPS + f].pregnancies
    }

    #[inline]
    fn abortions(&self, c: usize, t: usize, f: usize) -> f64 {
        self.cells[(c * self.n_t + t) * N_GROUPS + f].abortions
    }

    #[inline]
    fn births(&self, c: usize, t: usize, f: usize) -> f64 {
        self.cells[(c * self.n_t + t) * N_GROUPS + f].births
    }
}

impl FlowTable {
    /// Build all flows from group sizes and a per-(country, period) supplier
    /// of rates and propensities on the natural scale.
    pub fn build(
        sizes: &GroupSizes,
        rates: impl FnMut(usize, usize) -> ([f64; N_GROUPS], [f64; N_GROUPS]),
    ) -> Result<Self> {
        Self::build_scaled(
            sizes,
            MISCARRIAGE_ABORTION_FACTOR,
            MISCARRIAGE_BIRTH_FACTOR,
            rates,
        )
    }

    /// [`FlowTable::build`] with explicit loss factors.
    pub fn build_scaled(
        sizes: &GroupSizes,
        loss_abortion: f64,
        loss_birth: f64,
        mut rates: impl FnMut(usize, usize) -> ([f64; N_GROUPS], [f64; N_GROUPS]),
    ) -> Result<Self> {
        let (n_c, n_t, n_p) = (sizes.n_c, sizes.n_t, sizes.n_p);
        let mut cells = vec![
            FlowCell {
                pregnancies: 0.0,
                abortions: 0.0,
                births: 0.0
            };
            n_c * n_t * N_GROUPS
        ];
        let mut period_cells = cells[..n_c * n_p * N_GROUPS].to_vec();
        for c in 0..n_c {
            for p in 1..=n_p {
                let (omega, alpha) = rates(c, p);
                let mut theta = [0.0; N_GROUPS];
                for f in 0..N_GROUPS {
                    theta[f] = birth_rate_scaled(omega[f], alpha[f], loss_abortion, loss_birth)?;
                }
                let t_lo = (p - 1) * sizes.period_len;
                for t in t_lo..t_lo + sizes.period_len {
                    for f in 0..N_GROUPS {
                        let w = sizes.w(c, t, f);
                        let cell = FlowCell {
                            pregnancies: pregnancies(w, omega[f]),
                            abortions: abortions(pregnancies(w, omega[f]), alpha[f]),
                            births: w * theta[f],
                        };
                        cells[(c * n_t + t) * N_GROUPS + f] = cell;
                        let pc = &mut period_cells[(c * n_p + (p - 1)) * N_GROUPS + f];
                        pc.pregnancies += cell.pregnancies;
                        pc.abortions += cell.abortions;
                        pc.births += cell.births;
                    }
                }
            }
        }
        Ok(Self {
            n_c,
            n_t,
            n_p,
            loss_abortion,
            loss_birth,
            cells,
            period_cells,
        })
    }

    pub fn n_countries(&self) -> usize {
        self.n_c
    }

    pub fn n_periods(&self) -> usize {
        self.n_p
    }

    /// Period-aggregated flows for (country, 1-based period, group).
    #[inline]
    pub fn period_cell(&self, c: usize, p: usize, f: usize) -> FlowCell {
        self.period_cells[(c * self.n_p + (p - 1)) * N_GROUPS + f]
    }

    /// Verify `Omega = 1.1 Psi + 1.2 Theta` in every year-level cell.
    pub fn check_conservation(&self, max_rel: f64) -> Result<()> {
        for (i, cell) in self.cells.iter().enumerate() {
            let lhs = cell.pregnancies;
            let rhs = self.loss_abortion * cell.abortions + self.loss_birth * cell.births;
            let scale = lhs.abs().max(rhs.abs()).max(1e-300);
            if (lhs - rhs).abs() / scale > max_rel {
                let c = i / (self.n_t * N_GROUPS);
                let t = (i / N_GROUPS) % self.n_t;
                let f = i % N_GROUPS;
                return Err(Error::Internal(format!(
                    "pregnancy identity broken at country {c}, year offset {t}, group {}: \
                     {lhs} vs {rhs}",
                    GROUPS[f].label()
                )));
            }
        }
        Ok(())
    }
}

/// Reported indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Indicator {
    /// unintended pregnancies per 1000 women per year
    UnintendedPregnancyRate,
    /// abortions per 1000 women per year
    AbortionRate,
    /// percent of unintended pregnancies ending in abortion
    PctUnintendedEndingAbortion,
    /// percent of pregnancies that are unintended
    PctPregnanciesUnintended,
    /// percent of births that are unintended
    PctBirthsUnintended,
}

pub const INDICATORS: [Indicator; 5] = [
    Indicator::UnintendedPregnancyRate,
    Indicator::AbortionRate,
    Indicator::PctUnintendedEndingAbortion,
    Indicator::PctPregnanciesUnintended,
    Indicator::PctBirthsUnintended,
];

impl Indicator {
    pub fn label(self) -> &'static str {
        match self {
            Indicator::UnintendedPregnancyRate => "unintended_pregnancy_rate",
            Indicator::AbortionRate => "abortion_rate",
            Indicator::PctUnintendedEndingAbortion => "pct_unintended_ending_abortion",
            Indicator::PctPregnanciesUnintended => "pct_pregnancies_unintended",
            Indicator::PctBirthsUnintended => "pct_births_unintended",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Indicator::UnintendedPregnancyRate | Indicator::AbortionRate => "per_1000_women",
            _ => "percent",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        INDICATORS
            .iter()
            .copied()
            .find(|i| i.label() == s)
            .ok_or_else(|| Error::InputDomain(format!("unknown indicator {s:?}")))
    }
}

/// Raw sums needed to evaluate every indicator over a set of countries and
/// one period. Sums are linear, so pooling scopes means adding these up.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IndicatorSums {
    pub woman_years: f64,
    pub pregnancies_all: f64,
    pub pregnancies_unintended: f64,
    pub abortions: f64,
    pub births_all: f64,
    pub births_unintended: f64,
}

impl IndicatorSums {
    pub fn add(&mut self, other: &IndicatorSums) {
        self.woman_years += other.woman_years;
        self.pregnancies_all += other.pregnancies_all;
        self.pregnancies_unintended += other.pregnancies_unintended;
        self.abortions += other.abortions;
        self.births_all += other.births_all;
        self.births_unintended += other.births_unintended;
    }

    /// Evaluate one indicator; `None` when its denominator is empty.
    pub fn indicator(&self, ind: Indicator) -> Option<f64> {
        let ratio = |num: f64, den: f64, scale: f64| {
            if den > 0.0 {
                Some(scale * num / den)
            } else {
                None
            }
        };
        match ind {
            Indicator::UnintendedPregnancyRate => {
                ratio(self.pregnancies_unintended, self.woman_years, 1000.0)
            }
            Indicator::AbortionRate => ratio(self.abortions, self.woman_years, 1000.0),
            Indicator::PctUnintendedEndingAbortion => {
                ratio(self.abortions, self.pregnancies_unintended, 100.0)
            }
            Indicator::PctPregnanciesUnintended => {
                ratio(self.pregnancies_unintended, self.pregnancies_all, 100.0)
            }
            Indicator::PctBirthsUnintended => {
                ratio(self.births_unintended, self.births_all, 100.0)
            }
        }
    }
}

/// Period-level indicator sums for one country.
pub fn country_period_sums(flows: &FlowTable, sizes: &GroupSizes, c: usize, p: usize) -> IndicatorSums {
    let mut s = IndicatorSums {
        woman_years: sizes.w_total_period(c, p),
        ..Default::default()
    };
    for g in GROUPS {
        let cell = flows.period_cell(c, p, g.index());
        s.pregnancies_all += cell.pregnancies;
        s.births_all += cell.births;
        s.abortions += cell.abortions;
        if g.is_unintended() {
            s.pregnancies_unintended += cell.pregnancies;
            s.births_unintended += cell.births;
        }
    }
    s
}

/// One indicator pooled over a set of countries for one period: sums of
/// events over sums of woman-years, never an average of country rates.
pub fn aggregate_indicator(
    flows: &FlowTable,
    sizes: &GroupSizes,
    countries: &[usize],
    p: usize,
    ind: Indicator,
) -> Option<f64> {
    let mut total = IndicatorSums::default();
    for &c in countries {
        total.add(&country_period_sums(flows, sizes, c, p));
    }
    total.indicator(ind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::CountryDef;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn group_labels_round_trip() {
        for g in GROUPS {
            assert_eq!(Group::from_label(g.label()).unwrap(), g);
        }
        assert!(Group::from_label("m.other").is_err());
        assert_eq!(Scope::Married.groups().count(), 4);
        assert_eq!(Scope::Unmarried.groups().count(), 3);
        assert_eq!(
            GROUPS.iter().filter(|g| g.is_unintended()).count(),
            5,
            "five of seven groups carry unintended pregnancies"
        );
    }

    #[test]
    fn flow_scalars_known_values() {
        assert_relative_eq!(pregnancies(1000.0, 0.1), 100.0, epsilon = 1e-12);
        assert_relative_eq!(pregnancies(12345.0, 0.237), 2925.765, epsilon = 1e-9);
        assert_relative_eq!(abortions(200.0, 0.25), 50.0, epsilon = 1e-12);
        assert_relative_eq!(abortions(2925.765, 0.5), 1462.8825, epsilon = 1e-9);
        assert_relative_eq!(birth_rate(0.12, 0.0).unwrap(), 0.1, epsilon = 1e-12);
        assert_relative_eq!(birth_rate(0.3, 0.5).unwrap(), 0.1125, epsilon = 1e-12);
        assert!(birth_rate(0.3, 1.0 / 1.1).is_err());
        assert!(birth_rate(0.3, -0.01).is_err());
    }

    proptest! {
        #[test]
        fn pregnancy_identity_holds_per_cell(
            w in 0.0..5e6f64,
            omega in 1e-4..2.0f64,
            alpha in 0.0..0.909f64,
        ) {
            let om = pregnancies(w, omega);
            let psi = abortions(om, alpha);
            let theta = birth_rate(omega, alpha).unwrap();
            let births = w * theta;
            let rhs = MISCARRIAGE_ABORTION_FACTOR * psi + MISCARRIAGE_BIRTH_FACTOR * births;
            let scale = om.abs().max(rhs.abs()).max(1e-12);
            prop_assert!((om - rhs).abs() / scale < 1e-12);
        }
    }

    fn tiny_world() -> (GeoHierarchy, PeriodCalendar) {
        let geo = GeoHierarchy::new(vec![
            CountryDef {
                id: 1,
                name: "a".into(),
                region_id: 1,
                super_region_id: 1,
            },
            CountryDef {
                id: 2,
                name: "b".into(),
                region_id: 1,
                super_region_id: 1,
            },
        ])
        .unwrap();
        let cal = PeriodCalendar::new(2000, 2004, 5, 2000).unwrap();
        (geo, cal)
    }

    fn flat_sizes(geo: &GeoHierarchy, cal: &PeriodCalendar, per_group: f64) -> GroupSizes {
        let n = geo.n_countries() * cal.n_years() * N_GROUPS;
        GroupSizes::new(geo, cal, vec![per_group; n]).unwrap()
    }

    #[test]
    fn group_sizes_validate_domain() {
        let (geo, cal) = tiny_world();
        let n = geo.n_countries() * cal.n_years() * N_GROUPS;
        let mut bad = vec![1.0; n];
        bad[5] = -2.0;
        assert!(matches!(
            GroupSizes::new(&geo, &cal, bad),
            Err(Error::InputDomain(_))
        ));
        assert!(matches!(
            GroupSizes::new(&geo, &cal, vec![1.0; n - 1]),
            Err(Error::Structural(_))
        ));
        let ok = flat_sizes(&geo, &cal, 10.0);
        assert_relative_eq!(ok.w_period(0, 1, 0), 50.0);
        assert_relative_eq!(ok.w_total_period(1, 1), 350.0);
        assert_relative_eq!(ok.w_total_year(0, 3), 70.0);
    }

    #[test]
    fn aggregation_pools_events_not_rates() {
        let (geo, cal) = tiny_world();
        // 1000 women per group per year in both countries
        let sizes = flat_sizes(&geo, &cal, 1000.0);
        // country 0: every unintended group rate yields abortion rate 4/1000;
        // country 1: 6/1000. With equal women the pool must sit at 5.
        let flows = FlowTable::build(&sizes, |c, _p| {
            let mut omega = [0.0; N_GROUPS];
            let mut alpha = [0.0; N_GROUPS];
            for g in GROUPS {
                if g.is_unintended() {
                    // 7 groups total, 5 unintended; abortions = W*omega*alpha
                    // rate per woman = 5/7 * omega * alpha
                    omega[g.index()] = 0.1;
                    alpha[g.index()] = if c == 0 { 0.056 } else { 0.084 };
                }
            }
            (omega, alpha)
        })
        .unwrap();
        flows.check_conservation(1e-12).unwrap();
        let r0 = aggregate_indicator(&flows, &sizes, &[0], 1, Indicator::AbortionRate).unwrap();
        let r1 = aggregate_indicator(&flows, &sizes, &[1], 1, Indicator::AbortionRate).unwrap();
        let pooled =
            aggregate_indicator(&flows, &sizes, &[0, 1], 1, Indicator::AbortionRate).unwrap();
        assert_relative_eq!(r0, 4.0, epsilon = 1e-9);
        assert_relative_eq!(r1, 6.0, epsilon = 1e-9);
        assert_relative_eq!(pooled, 0.5 * (r0 + r1), epsilon = 1e-9);
    }

    #[test]
    fn indicator_values_from_known_sums() {
        let s = IndicatorSums {
            woman_years: 10_000.0,
            pregnancies_all: 100.0,
            pregnancies_unintended: 50.0,
            abortions: 25.0,
            births_all: 40.0,
            births_unintended: 10.0,
        };
        assert_relative_eq!(
            s.indicator(Indicator::AbortionRate).unwrap(),
            2.5,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            s.indicator(Indicator::UnintendedPregnancyRate).unwrap(),
            5.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            s.indicator(Indicator::PctUnintendedEndingAbortion).unwrap(),
            50.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            s.indicator(Indicator::PctPregnanciesUnintended).unwrap(),
            50.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            s.indicator(Indicator::PctBirthsUnintended).unwrap(),
            25.0,
            epsilon = 1e-12
        );
        let empty = IndicatorSums::default();
        for ind in INDICATORS {
            assert_eq!(empty.indicator(ind), None, "undefined ratio must flag");
        }
    }

    #[test]
    fn indicator_labels_round_trip() {
        for ind in INDICATORS {
            assert_eq!(Indicator::from_label(ind.label()).unwrap(), ind);
        }
        assert!(Indicator::from_label("nope").is_err());
    }
}
