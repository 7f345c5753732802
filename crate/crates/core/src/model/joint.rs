//! The joint posterior density: prior plus observation likelihoods.
//!
//! [`JointModel`] extends the prior's parameter vector with one latent
//! coordinate per bound-treated observation (range ends, one-sided count
//! bounds, indirect-study bias multipliers) and exposes the whole thing as
//! a sampler [`Target`]. Per-coordinate updates are cheap: the model knows,
//! for every coordinate, exactly which prior factors and which observation
//! terms read it, so staging a move re-evaluates only those.

use rand_chacha::ChaCha8Rng;

use crate::accounts::{FlowsLike, Group, GroupSizes, Scope, GROUPS};
use crate::error::{Error, Result};
use crate::mcmc::{Session, Target, Transform};
use crate::model::atlas::{Atlas, SlotRole, Walk};
use crate::model::Prior;
use crate::obs::{
    self, AbortionSource, AbortionValue, BoundKind, IntentionQuantity, IntentionValue,
    ObservationSet, ShareTreatment,
};

/// Year-level flow view computed straight from a parameter vector, without
/// materializing a table. Group sizes supply the woman-years; rates come
/// from the country-period slots behind each group.
struct LiveFlows<'a> {
    atlas: &'a Atlas,
    sizes: &'a GroupSizes,
    cap: f64,
    loss_abortion: f64,
    loss_birth: f64,
    x: &'a [f64],
}

impl LiveFlows<'_> {
    #[inline]
    fn period_of(&self, t: usize) -> usize {
        t / self.sizes.period_len() + 1
    }

    #[inline]
    fn omega(&self, c: usize, p: usize, g: Group) -> f64 {
        self.atlas.log_rate(self.x, c, p, g).exp()
    }

    #[inline]
    fn alpha(&self, c: usize, p: usize, g: Group) -> f64 {
        if !g.is_unintended() {
            return 0.0;
        }
        self.atlas.alpha(self.x, c, p, g.is_married(), self.cap)
    }
}

impl FlowsLike for LiveFlows<'_> {
    fn pregnancies(&self, c: usize, t: usize, f: usize) -> f64 {
        let p = self.period_of(t);
        self.sizes.w(c, t, f) * self.omega(c, p, GROUPS[f])
    }

    fn abortions(&self, c: usize, t: usize, f: usize) -> f64 {
        let p = self.period_of(t);
        let g = GROUPS[f];
        self.sizes.w(c, t, f) * self.omega(c, p, g) * self.alpha(c, p, g)
    }

    fn births(&self, c: usize, t: usize, f: usize) -> f64 {
        let p = self.period_of(t);
        let g = GROUPS[f];
        let omega = self.omega(c, p, g);
        let alpha = self.alpha(c, p, g);
        self.sizes.w(c, t, f) * omega * (1.0 - self.loss_abortion * alpha) / self.loss_birth
    }
}

/// One likelihood term. Latent fields hold full coordinate indices (at or
/// beyond the prior block).
#[derive(Debug, Clone)]
enum Term {
    IntentionPoint { i: usize },
    IntentionRange { i: usize, lo: usize, hi: usize },
    AbortionPoint { j: usize },
    AbortionBound { j: usize, latent: usize, kind: BoundKind },
    AbortionRange { j: usize, lo: usize, hi: usize },
    AbortionIndirect { j: usize, bias: usize },
    SharePoint { k: usize },
    ShareBound { k: usize, latent: usize, kind: BoundKind },
    Births { b: usize },
}

/// Name and proposal scale of one latent coordinate.
#[derive(Debug, Clone)]
struct LatentDef {
    name: String,
    transform: Transform,
}

/// Prior, group sizes, and observations, bound together as one density
/// over `prior slots + observation latents`.
pub struct JointModel<'a> {
    pub prior: &'a Prior,
    pub sizes: &'a GroupSizes,
    pub obs: &'a ObservationSet,
    terms: Vec<Term>,
    latents: Vec<LatentDef>,
    /// coordinate -> indices of terms that read it
    deps: Vec<Vec<u32>>,
    n_core: usize,
}

impl<'a> JointModel<'a> {
    pub fn new(prior: &'a Prior, sizes: &'a GroupSizes, obs: &'a ObservationSet) -> Result<Self> {
        let a = &prior.atlas;
        if sizes.n_countries() != a.n_c || sizes.n_periods() != a.n_p {
            return Err(Error::Structural(format!(
                "group sizes cover {} countries and {} periods, model frame has {} and {}",
                sizes.n_countries(),
                sizes.n_periods(),
                a.n_c,
                a.n_p
            )));
        }
        obs.validate(a.n_c, sizes.n_years(), a.n_p)?;

        let n_core = prior.n_slots();
        let mut terms = Vec::with_capacity(obs.len());
        let mut latents: Vec<LatentDef> = Vec::with_capacity(obs.latent_count());
        let unit = Transform::Logit { lo: 0.0, hi: 1.0 };
        let next = |name: String, t: Transform, latents: &mut Vec<LatentDef>| {
            latents.push(LatentDef { name, transform: t });
            n_core + latents.len() - 1
        };

        for (i, o) in obs.intention.iter().enumerate() {
            let span_w: f64 = (o.year_lo..=o.year_hi)
                .flat_map(|t| o.scope.groups().map(move |g| sizes.w(o.country, t, g.index())))
                .sum();
            if !(span_w > 0.0) {
                return Err(Error::InputDomain(format!(
                    "intention observation {i}: no women in scope {} over its years",
                    o.scope.label()
                )));
            }
            match o.value {
                IntentionValue::Point(y) => {
                    if !(y > 0.0 && y < 1.0) {
                        return Err(Error::InputDomain(format!(
                            "intention observation {i}: point proportion {y} must lie strictly \
                             inside (0, 1)"
                        )));
                    }
                    terms.push(Term::IntentionPoint { i });
                }
                IntentionValue::Range { .. } => {
                    let lo = next(format!("latent[intention[{i}]][lo]"), unit, &mut latents);
                    let hi = next(format!("latent[intention[{i}]][hi]"), unit, &mut latents);
                    terms.push(Term::IntentionRange { i, lo, hi });
                }
            }
        }

        for (j, o) in obs.abortion.iter().enumerate() {
            let period_w: f64 = o
                .scope
                .groups()
                .map(|g| sizes.w_period(o.country, o.period, g.index()))
                .sum();
            if !(period_w > 0.0) {
                return Err(Error::InputDomain(format!(
                    "abortion observation {j}: no women in scope {} over its period",
                    o.scope.label()
                )));
            }
            terms.push(match o.source {
                AbortionSource::OfficialComplete
                | AbortionSource::Survey
                | AbortionSource::StudyPoint => Term::AbortionPoint { j },
                AbortionSource::OfficialMinimum => Term::AbortionBound {
                    j,
                    latent: next(format!("latent[abortion[{j}]][min]"), Transform::Identity, &mut latents),
                    kind: BoundKind::Minimum,
                },
                AbortionSource::Maximum => Term::AbortionBound {
                    j,
                    latent: next(format!("latent[abortion[{j}]][max]"), Transform::Identity, &mut latents),
                    kind: BoundKind::Maximum,
                },
                AbortionSource::Range => {
                    let lo = next(format!("latent[abortion[{j}]][min]"), Transform::Identity, &mut latents);
                    let hi = next(format!("latent[abortion[{j}]][max]"), Transform::Identity, &mut latents);
                    Term::AbortionRange { j, lo, hi }
                }
                AbortionSource::Indirect => Term::AbortionIndirect {
                    j,
                    bias: next(format!("latent[abortion[{j}]][bias]"), Transform::Identity, &mut latents),
                },
            });
        }

        for (k, o) in obs.married_share.iter().enumerate() {
            if !(sizes.w_total_year(o.country, o.year) > 0.0) {
                return Err(Error::InputDomain(format!(
                    "married-share observation {k}: no women in its year"
                )));
            }
            terms.push(match o.treatment {
                ShareTreatment::Point => Term::SharePoint { k },
                ShareTreatment::Minimum => Term::ShareBound {
                    k,
                    latent: next(format!("latent[share[{k}]]"), unit, &mut latents),
                    kind: BoundKind::Minimum,
                },
                ShareTreatment::Maximum => Term::ShareBound {
                    k,
                    latent: next(format!("latent[share[{k}]]"), unit, &mut latents),
                    kind: BoundKind::Maximum,
                },
            });
        }

        for (b, o) in obs.births.iter().enumerate() {
            if !(sizes.w_total_period(o.country, o.period) > 0.0) {
                return Err(Error::InputDomain(format!(
                    "births observation {b}: no women in its period"
                )));
            }
            terms.push(Term::Births { b });
        }

        let mut model = JointModel {
            prior,
            sizes,
            obs,
            terms,
            latents,
            deps: Vec::new(),
            n_core,
        };
        model.deps = model.build_deps();
        Ok(model)
    }

    pub fn n_core(&self) -> usize {
        self.n_core
    }

    pub fn n_latents(&self) -> usize {
        self.latents.len()
    }

    fn flows<'x>(&'x self, x: &'x [f64]) -> LiveFlows<'x> {
        LiveFlows {
            atlas: &self.prior.atlas,
            sizes: self.sizes,
            cap: self.prior.constants.alpha_cap(),
            loss_abortion: self.prior.constants.loss_per_abortion,
            loss_birth: self.prior.constants.loss_per_birth,
            x,
        }
    }

    /// First and last year offset of a 1-based period.
    fn period_years(&self, p: usize) -> (usize, usize) {
        let lo = (p - 1) * self.sizes.period_len();
        (lo, lo + self.sizes.period_len() - 1)
    }

    fn ns_spread(&self, scope: Scope, x: &[f64]) -> f64 {
        let a = &self.prior.atlas;
        match scope {
            Scope::All => x[a.ns_all() as usize],
            _ => x[a.ns_sub() as usize],
        }
    }

    /// Log-likelihood of one term, with overflow treated as zero density.
    fn term_ll(&self, term: &Term, x: &[f64]) -> f64 {
        let v = self.term_ll_raw(term, x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    fn term_ll_raw(&self, term: &Term, x: &[f64]) -> f64 {
        let flows = self.flows(x);
        let a = &self.prior.atlas;
        let k = &self.prior.constants;
        match *term {
            Term::IntentionPoint { i } => {
                let o = &self.obs.intention[i];
                let IntentionValue::Point(y) = o.value else { unreachable!() };
                let modeled = match obs::modeled_proportion(
                    &flows, o.country, o.year_lo, o.year_hi, o.scope, o.quantity,
                ) {
                    Ok(v) => v,
                    Err(_) => return f64::NEG_INFINITY,
                };
                let q = a.super_of_country[o.country];
                let bias = o.recall.bias(
                    x[a.recall_mu3(q) as usize].exp(),
                    x[a.recall_mu5(q) as usize].exp(),
                );
                let var = obs::proportion_variance(
                    y,
                    o.sampling_variance,
                    self.ns_spread(o.scope, x),
                    o.representative,
                    x[a.nonrep() as usize],
                );
                obs::intention_point_loglik(y, modeled, bias, var)
            }
            Term::IntentionRange { i, lo, hi } => {
                let o = &self.obs.intention[i];
                let IntentionValue::Range { min, max } = o.value else { unreachable!() };
                let modeled = match obs::modeled_proportion(
                    &flows, o.country, o.year_lo, o.year_hi, o.scope, o.quantity,
                ) {
                    Ok(v) => v,
                    Err(_) => return f64::NEG_INFINITY,
                };
                let ns = self.ns_spread(o.scope, x);
                let nr = x[a.nonrep() as usize];
                let var_min =
                    obs::proportion_variance(min, o.sampling_variance, ns, o.representative, nr);
                let var_max =
                    obs::proportion_variance(max, o.sampling_variance, ns, o.representative, nr);
                obs::intention_range_loglik(x[lo], x[hi], min, max, var_min, var_max, modeled)
            }
            Term::AbortionPoint { j } => {
                let o = &self.obs.abortion[j];
                let AbortionValue::Point(count) = o.count else { unreachable!() };
                let (t0, t1) = self.period_years(o.period);
                let modeled = obs::scope_abortions(&flows, o.country, t0, t1, o.scope);
                match o.source {
                    AbortionSource::OfficialComplete => {
                        let r = a.region_of_country[o.country];
                        let sd = x[a.iota_of_region(r) as usize];
                        obs::abortion_point_loglik(count, modeled, 1.0, sd, None)
                    }
                    AbortionSource::Survey => obs::abortion_point_loglik(
                        count,
                        modeled,
                        x[a.beta_survey() as usize],
                        x[a.iota_survey() as usize],
                        None,
                    ),
                    AbortionSource::StudyPoint => obs::abortion_point_loglik(
                        count,
                        modeled,
                        1.0,
                        x[a.eta_direct() as usize],
                        o.nonrepresentative_study.then(|| x[a.pi() as usize]),
                    ),
                    _ => unreachable!(),
                }
            }
            Term::AbortionBound { j, latent, kind } => {
                let o = &self.obs.abortion[j];
                let AbortionValue::Point(count) = o.count else { unreachable!() };
                let (t0, t1) = self.period_years(o.period);
                let modeled = obs::scope_abortions(&flows, o.country, t0, t1, o.scope);
                let sd = match kind {
                    BoundKind::Minimum => {
                        x[a.iota_of_region(a.region_of_country[o.country]) as usize]
                    }
                    BoundKind::Maximum => x[a.eta_direct() as usize],
                };
                obs::abortion_bound_loglik(x[latent], count, sd, modeled, kind)
            }
            Term::AbortionRange { j, lo, hi } => {
                let o = &self.obs.abortion[j];
                let AbortionValue::Range { min, max } = o.count else { unreachable!() };
                let (t0, t1) = self.period_years(o.period);
                let modeled = obs::scope_abortions(&flows, o.country, t0, t1, o.scope);
                let sd = x[a.iota_of_region(a.region_of_country[o.country]) as usize];
                obs::abortion_range_loglik(x[lo], x[hi], min, max, sd, modeled)
            }
            Term::AbortionIndirect { j, bias } => {
                let o = &self.obs.abortion[j];
                let AbortionValue::Point(count) = o.count else { unreachable!() };
                let (t0, t1) = self.period_years(o.period);
                let modeled = obs::scope_abortions(&flows, o.country, t0, t1, o.scope);
                obs::abortion_point_loglik(
                    count,
                    modeled,
                    x[bias].exp(),
                    x[a.eta_direct() as usize],
                    o.nonrepresentative_study.then(|| x[a.pi() as usize]),
                ) + obs::indirect_bias_loglik(
                    x[bias],
                    o.indirect_multiplier.expect("validated"),
                    x[a.eta_indirect() as usize],
                )
            }
            Term::SharePoint { k } => {
                let o = &self.obs.married_share[k];
                let modeled = match obs::married_abortion_share(&flows, o.country, o.year) {
                    Ok(v) => v,
                    Err(_) => return f64::NEG_INFINITY,
                };
                obs::married_share_point_loglik(o.value, modeled, x[a.iota_prop() as usize])
            }
            Term::ShareBound { k, latent, kind } => {
                let o = &self.obs.married_share[k];
                let modeled = match obs::married_abortion_share(&flows, o.country, o.year) {
                    Ok(v) => v,
                    Err(_) => return f64::NEG_INFINITY,
                };
                obs::married_share_bound_loglik(
                    x[latent],
                    o.value,
                    x[a.iota_prop() as usize],
                    modeled,
                    kind,
                )
            }
            Term::Births { b } => {
                let o = &self.obs.births[b];
                let (t0, t1) = self.period_years(o.period);
                let modeled = obs::total_births(&flows, o.country, t0, t1);
                let sd = if o.vr_quality { k.births_sd_vr } else { k.births_sd_other };
                obs::births_loglik(o.births, modeled, sd)
            }
        }
    }

    /// Full joint log density; the incremental session is the fast path.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        self.prior.log_prior(&x[..self.n_core])
            + self.terms.iter().map(|t| self.term_ll(t, x)).sum::<f64>()
    }

    /// First zero-density component at `x`: a violated prior factor or an
    /// observation term (indicator or truncation) with no support.
    pub fn check_feasible(&self, x: &[f64]) -> Option<String> {
        if let Some(bad) = self.prior.check_feasible(&x[..self.n_core]) {
            return Some(bad.to_string());
        }
        for (t, term) in self.terms.iter().enumerate() {
            if self.term_ll(term, x) == f64::NEG_INFINITY {
                return Some(format!("{} has zero density", self.term_label(t)));
            }
        }
        None
    }

    fn term_label(&self, t: usize) -> String {
        match self.terms[t] {
            Term::IntentionPoint { i } | Term::IntentionRange { i, .. } => {
                format!("intention observation {i}")
            }
            Term::AbortionPoint { j }
            | Term::AbortionBound { j, .. }
            | Term::AbortionRange { j, .. }
            | Term::AbortionIndirect { j, .. } => format!("abortion observation {j}"),
            Term::SharePoint { k } | Term::ShareBound { k, .. } => {
                format!("married-share observation {k}")
            }
            Term::Births { b } => format!("births observation {b}"),
        }
    }

    // ---- dependency map -------------------------------------------------

    /// Slots behind a group's pregnancy rate in one country-period.
    fn rate_slot_deps(&self, c: usize, p: usize, g: Group, out: &mut Vec<usize>) {
        let a = &self.prior.atlas;
        match g {
            Group::MarriedIntended => out.push(a.c_rate(c, p, Walk::Mnn) as usize),
            Group::MarriedModernFailure => out.push(a.c_rate(c, p, Walk::Mfail) as usize),
            Group::MarriedUnmet => out.push(a.c_rate(c, p, Walk::Munmet) as usize),
            Group::UnmarriedIntended => out.push(a.c_unn(c) as usize),
            Group::UnmarriedNoModern => out.push(a.c_rate(c, p, Walk::Uunmod) as usize),
            Group::UnmarriedModern => {
                out.push(a.c_rate(c, p, Walk::Uunmod) as usize);
                out.push(a.c_gamma(c) as usize);
            }
            Group::MarriedTraditional => {
                let q = a.super_of_country[c];
                out.push(a.q_trad0(q) as usize);
                out.push(a.c_rate(c, p, Walk::Mfail) as usize);
                out.push(a.q_rate(q, a.p0, Walk::Mfail) as usize);
            }
        }
    }

    /// Slots behind a group's abortion propensity in one country-period.
    fn alpha_slot_deps(&self, c: usize, p: usize, g: Group, out: &mut Vec<usize>) {
        if !g.is_unintended() {
            return;
        }
        let a = &self.prior.atlas;
        out.push(a.c_lam_m(c, p) as usize);
        if !g.is_married() {
            out.push(a.c_lam_u0(c) as usize);
            out.push(a.c_lam_m(c, a.p0) as usize);
        }
    }

    /// Every coordinate a term reads.
    fn term_deps(&self, term: &Term) -> Vec<usize> {
        let a = &self.prior.atlas;
        let mut v: Vec<usize> = Vec::new();
        match *term {
            Term::IntentionPoint { i } | Term::IntentionRange { i, .. } => {
                let o = &self.obs.intention[i];
                let plen = self.sizes.period_len();
                let reads_births = o.quantity == IntentionQuantity::BirthsUnintended;
                for p in (o.year_lo / plen + 1)..=(o.year_hi / plen + 1) {
                    for g in o.scope.groups() {
                        self.rate_slot_deps(o.country, p, g, &mut v);
                        if reads_births {
                            self.alpha_slot_deps(o.country, p, g, &mut v);
                        }
                    }
                }
                v.push(self.ns_slot(o.scope));
                if !o.representative {
                    v.push(a.nonrep() as usize);
                }
                match *term {
                    Term::IntentionPoint { .. } => {
                        let q = a.super_of_country[o.country];
                        match o.recall.years() {
                            3 => v.push(a.recall_mu3(q) as usize),
                            5 => v.push(a.recall_mu5(q) as usize),
                            _ => {}
                        }
                    }
                    Term::IntentionRange { lo, hi, .. } => {
                        v.push(lo);
                        v.push(hi);
                    }
                    _ => unreachable!(),
                }
            }
            Term::AbortionPoint { j }
            | Term::AbortionBound { j, .. }
            | Term::AbortionRange { j, .. }
            | Term::AbortionIndirect { j, .. } => {
                let o = &self.obs.abortion[j];
                for g in o.scope.groups().filter(|g| g.is_unintended()) {
                    self.rate_slot_deps(o.country, o.period, g, &mut v);
                    self.alpha_slot_deps(o.country, o.period, g, &mut v);
                }
                let iota_region =
                    a.iota_of_region(a.region_of_country[o.country]) as usize;
                match *term {
                    Term::AbortionPoint { .. } => match o.source {
                        AbortionSource::OfficialComplete => v.push(iota_region),
                        AbortionSource::Survey => {
                            v.push(a.iota_survey() as usize);
                            v.push(a.beta_survey() as usize);
                        }
                        AbortionSource::StudyPoint => {
                            v.push(a.eta_direct() as usize);
                            if o.nonrepresentative_study {
                                v.push(a.pi() as usize);
                            }
                        }
                        _ => unreachable!(),
                    },
                    Term::AbortionBound { latent, kind, .. } => {
                        v.push(match kind {
                            BoundKind::Minimum => iota_region,
                            BoundKind::Maximum => a.eta_direct() as usize,
                        });
                        v.push(latent);
                    }
                    Term::AbortionRange { lo, hi, .. } => {
                        v.push(iota_region);
                        v.push(lo);
                        v.push(hi);
                    }
                    Term::AbortionIndirect { bias, .. } => {
                        v.push(a.eta_direct() as usize);
                        v.push(a.eta_indirect() as usize);
                        v.push(bias);
                        if o.nonrepresentative_study {
                            v.push(a.pi() as usize);
                        }
                    }
                    _ => unreachable!(),
                }
            }
            Term::SharePoint { k } | Term::ShareBound { k, .. } => {
                let o = &self.obs.married_share[k];
                let p = o.year / self.sizes.period_len() + 1;
                for g in GROUPS.into_iter().filter(|g| g.is_unintended()) {
                    self.rate_slot_deps(o.country, p, g, &mut v);
                    self.alpha_slot_deps(o.country, p, g, &mut v);
                }
                v.push(a.iota_prop() as usize);
                if let Term::ShareBound { latent, .. } = *term {
                    v.push(latent);
                }
            }
            Term::Births { b } => {
                let o = &self.obs.births[b];
                for g in GROUPS {
                    self.rate_slot_deps(o.country, o.period, g, &mut v);
                    self.alpha_slot_deps(o.country, o.period, g, &mut v);
                }
            }
        }
        v.sort_unstable();
        v.dedup();
        v
    }

    fn ns_slot(&self, scope: Scope) -> usize {
        let a = &self.prior.atlas;
        match scope {
            Scope::All => a.ns_all() as usize,
            _ => a.ns_sub() as usize,
        }
    }

    fn build_deps(&self) -> Vec<Vec<u32>> {
        let mut deps = vec![Vec::new(); self.dim()];
        for (t, term) in self.terms.iter().enumerate() {
            for s in self.term_deps(term) {
                deps[s].push(t as u32);
            }
        }
        deps
    }

    // ---- initialization -------------------------------------------------

    /// Place every latent at a value consistent with its indicator, given
    /// the modeled quantities of the core draw.
    fn init_latents(&self, x: &mut [f64]) {
        let snapshot = x.to_vec();
        let flows = self.flows(&snapshot);
        for term in &self.terms {
            match *term {
                Term::IntentionRange { i, lo, hi } => {
                    let o = &self.obs.intention[i];
                    let m = obs::modeled_proportion(
                        &flows, o.country, o.year_lo, o.year_hi, o.scope, o.quantity,
                    )
                    .unwrap_or(0.5);
                    x[lo] = (0.5 * m).clamp(1e-6, 1.0 - 1e-6);
                    x[hi] = (m + 0.5 * (1.0 - m)).clamp(x[lo], 1.0 - 1e-6);
                }
                Term::AbortionBound { j, latent, kind } => {
                    let o = &self.obs.abortion[j];
                    let AbortionValue::Point(count) = o.count else { unreachable!() };
                    let (t0, t1) = self.period_years(o.period);
                    let psi = obs::scope_abortions(&flows, o.country, t0, t1, o.scope);
                    x[latent] = match kind {
                        BoundKind::Minimum => count.ln().min(psi.ln()) - 1e-6,
                        BoundKind::Maximum => count.ln().max(psi.ln()) + 1e-6,
                    };
                }
                Term::AbortionRange { j, lo, hi } => {
                    let o = &self.obs.abortion[j];
                    let AbortionValue::Range { min, max } = o.count else { unreachable!() };
                    let (t0, t1) = self.period_years(o.period);
                    let psi = obs::scope_abortions(&flows, o.country, t0, t1, o.scope);
                    x[lo] = min.ln().min(psi.ln()) - 1e-6;
                    x[hi] = max.ln().max(psi.ln()) + 1e-6;
                }
                Term::AbortionIndirect { j, bias } => {
                    x[bias] = self.obs.abortion[j].indirect_multiplier.expect("validated").ln();
                }
                Term::ShareBound { k, latent, kind } => {
                    let o = &self.obs.married_share[k];
                    let m = obs::married_abortion_share(&flows, o.country, o.year).unwrap_or(0.5);
                    x[latent] = match kind {
                        BoundKind::Minimum => (0.5 * m).clamp(1e-6, 1.0 - 1e-6),
                        BoundKind::Maximum => (m + 0.5 * (1.0 - m)).clamp(1e-6, 1.0 - 1e-6),
                    };
                }
                _ => {}
            }
        }
    }
}

impl Target for JointModel<'_> {
    fn dim(&self) -> usize {
        self.n_core + self.latents.len()
    }

    fn name(&self, i: usize) -> String {
        if i < self.n_core {
            self.prior.atlas.name(i as u32).to_string()
        } else {
            self.latents[i - self.n_core].name.clone()
        }
    }

    fn transform(&self, i: usize) -> Transform {
        if i >= self.n_core {
            return self.latents[i - self.n_core].transform;
        }
        let k = &self.prior.constants;
        match self.prior.atlas.role(i as u32) {
            SlotRole::SigRateRegion(_)
            | SlotRole::SigRateCountry(_)
            | SlotRole::SigDrift(_)
            | SlotRole::SigPropRegion(_)
            | SlotRole::SigPropCountry(_)
            | SlotRole::NsAll
            | SlotRole::NsSub
            | SlotRole::NonRep
            | SlotRole::Pi
            | SlotRole::IotaRegion { .. }
            | SlotRole::IotaOther
            | SlotRole::IotaSurvey
            | SlotRole::IotaSurveyBias
            | SlotRole::EtaDirect
            | SlotRole::IotaProp => Transform::Log,
            SlotRole::EtaIndirect => Transform::Logit {
                lo: k.eta_indirect_lo,
                hi: k.eta_indirect_hi,
            },
            SlotRole::BetaSurvey => Transform::Logit {
                lo: k.survey_report_lo,
                hi: k.survey_report_hi,
            },
            SlotRole::WorldLamM
            | SlotRole::WorldLamU
            | SlotRole::SuperLamM { .. }
            | SlotRole::SuperLamU0 { .. }
            | SlotRole::RegionLamM { .. }
            | SlotRole::RegionLamU0 { .. }
            | SlotRole::CountryLamM { .. }
            | SlotRole::CountryLamU0 { .. } => Transform::Logit {
                lo: k.lambda_eps,
                hi: 1.0 - k.lambda_eps,
            },
            _ => Transform::Identity,
        }
    }

    fn init(&self, rng: &mut ChaCha8Rng, max_attempts: usize) -> Result<Vec<f64>> {
        let mut last = String::from("no attempt made");
        for _ in 0..max_attempts {
            let mut x = self.prior.simulate(rng, max_attempts)?;
            x.resize(self.dim(), 0.0);
            self.init_latents(&mut x);
            if self.log_density(&x).is_finite() {
                return Ok(x);
            }
            last = self
                .check_feasible(&x)
                .unwrap_or_else(|| "non-finite density with no zero component".into());
        }
        Err(Error::Infeasible(format!(
            "no feasible initial state in {max_attempts} attempts; last failure: {last}"
        )))
    }

    fn session(&self, x: Vec<f64>) -> Result<Box<dyn Session + '_>> {
        if x.len() != self.dim() {
            return Err(Error::Structural(format!(
                "state has {} coordinates, model has {}",
                x.len(),
                self.dim()
            )));
        }
        let factor_ll: Vec<f64> = self
            .prior
            .graph
            .factors
            .iter()
            .map(|f| f.lpdf(&x[..self.n_core]))
            .collect();
        let term_ll: Vec<f64> = self.terms.iter().map(|t| self.term_ll(t, &x)).collect();
        let total = factor_ll.iter().sum::<f64>() + term_ll.iter().sum::<f64>();
        Ok(Box::new(JointSession {
            model: self,
            x,
            factor_ll,
            term_ll,
            total,
            staged: None,
        }))
    }
}

struct Staged {
    i: usize,
    old_value: f64,
    factors: Vec<(u32, f64)>,
    terms: Vec<(u32, f64)>,
    delta: f64,
}

/// Chain-local state: the vector plus cached per-factor and per-term
/// log-densities, updated through the dependency map.
pub struct JointSession<'m, 'a> {
    model: &'m JointModel<'a>,
    x: Vec<f64>,
    factor_ll: Vec<f64>,
    term_ll: Vec<f64>,
    total: f64,
    staged: Option<Staged>,
}

impl Session for JointSession<'_, '_> {
    fn state(&self) -> &[f64] {
        &self.x
    }

    fn log_density(&self) -> f64 {
        self.total
    }

    fn stage(&mut self, i: usize, v: f64) -> f64 {
        debug_assert!(self.staged.is_none(), "staged move not resolved");
        let old_value = self.x[i];
        self.x[i] = v;
        let mut staged = Staged {
            i,
            old_value,
            factors: Vec::new(),
            terms: Vec::new(),
            delta: 0.0,
        };
        if i < self.model.n_core {
            for &fi in &self.model.prior.graph.adj[i] {
                let new = self.model.prior.graph.factors[fi as usize]
                    .lpdf(&self.x[..self.model.n_core]);
                staged.delta += new - self.factor_ll[fi as usize];
                staged.factors.push((fi, new));
            }
        }
        for &ti in &self.model.deps[i] {
            let new = self.model.term_ll(&self.model.terms[ti as usize], &self.x);
            staged.delta += new - self.term_ll[ti as usize];
            staged.terms.push((ti, new));
        }
        let delta = staged.delta;
        self.staged = Some(staged);
        delta
    }

    fn commit(&mut self) {
        let staged = self.staged.take().expect("no staged move");
        for (fi, new) in staged.factors {
            self.factor_ll[fi as usize] = new;
        }
        for (ti, new) in staged.terms {
            self.term_ll[ti as usize] = new;
        }
        self.total += staged.delta;
    }

    fn rollback(&mut self) {
        let staged = self.staged.take().expect("no staged move");
        self.x[staged.i] = staged.old_value;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accounts::FlowTable;
    use crate::constants::ModelConstants;
    use crate::geo::{CountryDef, GeoHierarchy, PeriodCalendar};
    use crate::mcmc::{self, SamplerConfig};
    use crate::obs::{
        AbortionObservation, BirthsObservation, IntentionObservation, MarriedShareObservation,
    };
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use std::collections::HashSet;

    /// Three countries over two regions and two super-regions, two 5-year
    /// periods, with every observation kind represented once or twice.
    fn fixture() -> (GeoHierarchy, PeriodCalendar, GroupSizes, ObservationSet) {
        let geo = GeoHierarchy::new(vec![
            CountryDef { id: 1, name: "A".into(), region_id: 1, super_region_id: 1 },
            CountryDef { id: 2, name: "B".into(), region_id: 1, super_region_id: 1 },
            CountryDef { id: 3, name: "C".into(), region_id: 2, super_region_id: 2 },
        ])
        .unwrap();
        let cal = PeriodCalendar::new(1990, 1999, 5, 1990).unwrap();
        let mut counts = Vec::new();
        for c in 0..3usize {
            for t in 0..10usize {
                for f in 0..GROUPS.len() {
                    counts.push(1000.0 + 100.0 * f as f64 + 10.0 * t as f64 + 37.0 * c as f64);
                }
            }
        }
        let sizes = GroupSizes::new(&geo, &cal, counts).unwrap();
        let obs = ObservationSet {
            intention: vec![
                IntentionObservation {
                    country: 0,
                    year_lo: 3,
                    year_hi: 6,
                    scope: Scope::All,
                    quantity: IntentionQuantity::BirthsUnintended,
                    recall: obs::RecallWindow::FiveYears,
                    value: IntentionValue::Point(0.30),
                    sampling_variance: 0.001,
                    representative: false,
                },
                IntentionObservation {
                    country: 2,
                    year_lo: 5,
                    year_hi: 5,
                    scope: Scope::Married,
                    quantity: IntentionQuantity::PregnanciesUnintended,
                    recall: obs::RecallWindow::OneYear,
                    value: IntentionValue::Point(0.45),
                    sampling_variance: 0.0005,
                    representative: true,
                },
                IntentionObservation {
                    country: 1,
                    year_lo: 0,
                    year_hi: 3,
                    scope: Scope::Unmarried,
                    quantity: IntentionQuantity::BirthsUnintended,
                    recall: obs::RecallWindow::ThreeYears,
                    value: IntentionValue::Range { min: 0.2, max: 0.5 },
                    sampling_variance: 0.002,
                    representative: false,
                },
            ],
            abortion: vec![
                AbortionObservation {
                    country: 0,
                    period: 1,
                    scope: Scope::All,
                    count: AbortionValue::Point(2500.0),
                    source: AbortionSource::OfficialComplete,
                    nonrepresentative_study: false,
                    indirect_multiplier: None,
                },
                AbortionObservation {
                    country: 1,
                    period: 2,
                    scope: Scope::Married,
                    count: AbortionValue::Point(1200.0),
                    source: AbortionSource::Survey,
                    nonrepresentative_study: false,
                    indirect_multiplier: None,
                },
                AbortionObservation {
                    country: 2,
                    period: 1,
                    scope: Scope::All,
                    count: AbortionValue::Point(3000.0),
                    source: AbortionSource::StudyPoint,
                    nonrepresentative_study: true,
                    indirect_multiplier: None,
                },
                AbortionObservation {
                    country: 2,
                    period: 2,
                    scope: Scope::All,
                    count: AbortionValue::Point(800.0),
                    source: AbortionSource::OfficialMinimum,
                    nonrepresentative_study: false,
                    indirect_multiplier: None,
                },
                AbortionObservation {
                    country: 0,
                    period: 2,
                    scope: Scope::All,
                    count: AbortionValue::Point(9000.0),
                    source: AbortionSource::Maximum,
                    nonrepresentative_study: false,
                    indirect_multiplier: None,
                },
                AbortionObservation {
                    country: 1,
                    period: 1,
                    scope: Scope::All,
                    count: AbortionValue::Range { min: 500.0, max: 6000.0 },
                    source: AbortionSource::Range,
                    nonrepresentative_study: false,
                    indirect_multiplier: None,
                },
                AbortionObservation {
                    country: 0,
                    period: 1,
                    scope: Scope::All,
                    count: AbortionValue::Point(2000.0),
                    source: AbortionSource::Indirect,
                    nonrepresentative_study: true,
                    indirect_multiplier: Some(3.2),
                },
            ],
            married_share: vec![
                MarriedShareObservation {
                    country: 0,
                    year: 3,
                    value: 0.40,
                    treatment: ShareTreatment::Point,
                },
                MarriedShareObservation {
                    country: 1,
                    year: 7,
                    value: 0.25,
                    treatment: ShareTreatment::Minimum,
                },
                MarriedShareObservation {
                    country: 2,
                    year: 2,
                    value: 0.80,
                    treatment: ShareTreatment::Maximum,
                },
            ],
            births: vec![
                BirthsObservation { country: 0, period: 1, births: 8000.0, vr_quality: true },
                BirthsObservation { country: 2, period: 2, births: 7000.0, vr_quality: false },
            ],
        };
        (geo, cal, sizes, obs)
    }

    fn coord(model: &JointModel, name: &str) -> usize {
        (0..model.dim())
            .find(|&i| model.name(i) == name)
            .unwrap_or_else(|| panic!("no coordinate named {name}"))
    }

    /// The joint density must equal the prior plus observation terms
    /// written out by hand against a materialized flow table.
    #[test]
    fn density_sums_prior_and_hand_written_terms() {
        let (geo, cal, sizes, obs) = fixture();
        let prior = Prior::new(&geo, &cal, ModelConstants::default(), Some(0)).unwrap();
        let model = JointModel::new(&prior, &sizes, &obs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = model.init(&mut rng, 1000).unwrap();

        let a = &prior.atlas;
        let k = &prior.constants;
        let n = model.n_core();
        let st = prior.state(&x[..n]);
        let flows =
            FlowTable::build_scaled(&sizes, k.loss_per_abortion, k.loss_per_birth, |c, p| {
                st.rates_at(c, p)
            })
            .unwrap();
        let mut expected = prior.log_prior(&x[..n]);

        // intention point, all women, 5-year recall, non-representative
        let m0 = obs::modeled_proportion(
            &flows, 0, 3, 6, Scope::All, IntentionQuantity::BirthsUnintended,
        )
        .unwrap();
        expected += obs::intention_point_loglik(
            0.30,
            m0,
            x[a.recall_mu5(0) as usize].exp(),
            obs::proportion_variance(
                0.30, 0.001, x[a.ns_all() as usize], false, x[a.nonrep() as usize],
            ),
        );
        // intention point, married women, 1-year recall, representative
        let m1 = obs::modeled_proportion(
            &flows, 2, 5, 5, Scope::Married, IntentionQuantity::PregnanciesUnintended,
        )
        .unwrap();
        expected += obs::intention_point_loglik(
            0.45,
            m1,
            1.0,
            obs::proportion_variance(0.45, 0.0005, x[a.ns_sub() as usize], true, 0.0),
        );
        // intention range, unmarried women
        let m2 = obs::modeled_proportion(
            &flows, 1, 0, 3, Scope::Unmarried, IntentionQuantity::BirthsUnintended,
        )
        .unwrap();
        let ns = x[a.ns_sub() as usize];
        let nr = x[a.nonrep() as usize];
        expected += obs::intention_range_loglik(
            x[coord(&model, "latent[intention[2]][lo]")],
            x[coord(&model, "latent[intention[2]][hi]")],
            0.2,
            0.5,
            obs::proportion_variance(0.2, 0.002, ns, false, nr),
            obs::proportion_variance(0.5, 0.002, ns, false, nr),
            m2,
        );
        // complete official count, country 0 period 1, high-income region 0
        let psi00 = obs::scope_abortions(&flows, 0, 0, 4, Scope::All);
        expected += obs::abortion_point_loglik(
            2500.0, psi00, 1.0, x[a.iota_of_region(0) as usize], None,
        );
        // survey count of married women, country 1 period 2
        let psi_m = obs::scope_abortions(&flows, 1, 5, 9, Scope::Married);
        expected += obs::abortion_point_loglik(
            1200.0,
            psi_m,
            x[a.beta_survey() as usize],
            x[a.iota_survey() as usize],
            None,
        );
        // non-representative direct study, country 2 period 1
        let psi20 = obs::scope_abortions(&flows, 2, 0, 4, Scope::All);
        expected += obs::abortion_point_loglik(
            3000.0,
            psi20,
            1.0,
            x[a.eta_direct() as usize],
            Some(x[a.pi() as usize]),
        );
        // incomplete official count: latent floor, country 2 period 2 reads
        // the shared error scale of its non-high-income region
        let psi21 = obs::scope_abortions(&flows, 2, 5, 9, Scope::All);
        expected += obs::abortion_bound_loglik(
            x[coord(&model, "latent[abortion[3]][min]")],
            800.0,
            x[a.iota_other() as usize],
            psi21,
            BoundKind::Minimum,
        );
        // ceiling, country 0 period 2
        let psi01 = obs::scope_abortions(&flows, 0, 5, 9, Scope::All);
        expected += obs::abortion_bound_loglik(
            x[coord(&model, "latent[abortion[4]][max]")],
            9000.0,
            x[a.eta_direct() as usize],
            psi01,
            BoundKind::Maximum,
        );
        // two-sided bound, country 1 period 1
        let psi10 = obs::scope_abortions(&flows, 1, 0, 4, Scope::All);
        expected += obs::abortion_range_loglik(
            x[coord(&model, "latent[abortion[5]][min]")],
            x[coord(&model, "latent[abortion[5]][max]")],
            500.0,
            6000.0,
            x[a.iota_of_region(0) as usize],
            psi10,
        );
        // indirect study with latent bias, country 0 period 1
        let bias = x[coord(&model, "latent[abortion[6]][bias]")];
        expected += obs::abortion_point_loglik(
            2000.0,
            psi00,
            bias.exp(),
            x[a.eta_direct() as usize],
            Some(x[a.pi() as usize]),
        ) + obs::indirect_bias_loglik(bias, 3.2, x[a.eta_indirect() as usize]);
        // married share: point, floor, ceiling
        let s0 = obs::married_abortion_share(&flows, 0, 3).unwrap();
        expected += obs::married_share_point_loglik(0.40, s0, x[a.iota_prop() as usize]);
        let s1 = obs::married_abortion_share(&flows, 1, 7).unwrap();
        expected += obs::married_share_bound_loglik(
            x[coord(&model, "latent[share[1]]")],
            0.25,
            x[a.iota_prop() as usize],
            s1,
            BoundKind::Minimum,
        );
        let s2 = obs::married_abortion_share(&flows, 2, 2).unwrap();
        expected += obs::married_share_bound_loglik(
            x[coord(&model, "latent[share[2]]")],
            0.80,
            x[a.iota_prop() as usize],
            s2,
            BoundKind::Maximum,
        );
        // birth counts
        let b0 = obs::total_births(&flows, 0, 0, 4);
        expected += obs::births_loglik(8000.0, b0, k.births_sd_vr);
        let b1 = obs::total_births(&flows, 2, 5, 9);
        expected += obs::births_loglik(7000.0, b1, k.births_sd_other);

        assert!(expected.is_finite());
        assert_relative_eq!(model.log_density(&x), expected, max_relative = 1e-12);
    }

    /// Dropping one observation must shift the density by exactly that
    /// observation's term.
    #[test]
    fn dropping_an_observation_removes_exactly_its_term() {
        let (geo, cal, sizes, obs) = fixture();
        let prior = Prior::new(&geo, &cal, ModelConstants::default(), Some(0)).unwrap();
        let full = JointModel::new(&prior, &sizes, &obs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = full.init(&mut rng, 1000).unwrap();

        // the dropped observation carries no latent, so coordinates keep
        // their meaning in the reduced model
        let mut reduced_obs = obs.clone();
        let dropped = reduced_obs.abortion.remove(0);
        assert_eq!(dropped.latent_count(), 0);
        let reduced = JointModel::new(&prior, &sizes, &reduced_obs).unwrap();
        assert_eq!(reduced.dim(), full.dim());

        let st = prior.state(&x[..full.n_core()]);
        let k = &prior.constants;
        let flows =
            FlowTable::build_scaled(&sizes, k.loss_per_abortion, k.loss_per_birth, |c, p| {
                st.rates_at(c, p)
            })
            .unwrap();
        let term = obs::abortion_point_loglik(
            2500.0,
            obs::scope_abortions(&flows, 0, 0, 4, Scope::All),
            1.0,
            x[prior.atlas.iota_of_region(0) as usize],
            None,
        );
        assert_relative_eq!(
            full.log_density(&x) - reduced.log_density(&x),
            term,
            max_relative = 1e-9,
            epsilon = 1e-9
        );
    }

    /// Staged single-coordinate deltas must match full-density recomputes,
    /// through arbitrary commit and rollback interleavings.
    #[test]
    fn staged_deltas_match_full_recomputation() {
        let (geo, cal, sizes, obs) = fixture();
        let prior = Prior::new(&geo, &cal, ModelConstants::default(), Some(0)).unwrap();
        let model = JointModel::new(&prior, &sizes, &obs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let x = model.init(&mut rng, 1000).unwrap();
        let mut sess = model.session(x.clone()).unwrap();
        let mut mirror = x;

        for i in 0..model.dim() {
            let t = model.transform(i);
            let v = t.inverse(t.forward(mirror[i]) + 0.05);
            let mut moved = mirror.clone();
            moved[i] = v;
            let full_old = model.log_density(&mirror);
            let full_new = model.log_density(&moved);
            let delta = sess.stage(i, v);
            if full_new == f64::NEG_INFINITY {
                assert_eq!(delta, f64::NEG_INFINITY, "coordinate {}", model.name(i));
                sess.rollback();
                continue;
            }
            assert_relative_eq!(
                delta,
                full_new - full_old,
                max_relative = 1e-8,
                epsilon = 1e-8
            );
            if i % 2 == 0 {
                sess.commit();
                mirror = moved;
            } else {
                sess.rollback();
            }
        }
        assert_eq!(sess.state(), mirror.as_slice());
        assert_relative_eq!(
            sess.log_density(),
            model.log_density(&mirror),
            max_relative = 1e-9
        );
    }

    /// Any term whose value changes when a coordinate moves must list that
    /// coordinate in the dependency map.
    #[test]
    fn dependency_map_covers_every_term_change() {
        let (geo, cal, sizes, obs) = fixture();
        let prior = Prior::new(&geo, &cal, ModelConstants::default(), Some(0)).unwrap();
        let model = JointModel::new(&prior, &sizes, &obs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = model.init(&mut rng, 1000).unwrap();

        let old: Vec<f64> = model.terms.iter().map(|t| model.term_ll(t, &x)).collect();
        for i in 0..model.dim() {
            let t = model.transform(i);
            let mut moved = x.clone();
            moved[i] = t.inverse(t.forward(x[i]) + 0.07);
            for (ti, term) in model.terms.iter().enumerate() {
                let new = model.term_ll(term, &moved);
                if new.to_bits() != old[ti].to_bits() {
                    assert!(
                        model.deps[i].contains(&(ti as u32)),
                        "term {} changed when {} moved but is not a declared dependency",
                        model.term_label(ti),
                        model.name(i)
                    );
                }
            }
        }
    }

    /// Initial states must be feasible: latents bracket their modeled
    /// quantities and the full density is finite.
    #[test]
    fn init_is_feasible_across_seeds() {
        let (geo, cal, sizes, obs) = fixture();
        let prior = Prior::new(&geo, &cal, ModelConstants::default(), Some(0)).unwrap();
        let model = JointModel::new(&prior, &sizes, &obs).unwrap();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = model.init(&mut rng, 1000).unwrap();
            assert!(model.log_density(&x).is_finite(), "seed {seed}");
            assert_eq!(model.check_feasible(&x), None);
            let lo = x[coord(&model, "latent[intention[2]][lo]")];
            let hi = x[coord(&model, "latent[intention[2]][hi]")];
            let st = prior.state(&x[..model.n_core()]);
            let k = &prior.constants;
            let flows = FlowTable::build_scaled(
                &sizes,
                k.loss_per_abortion,
                k.loss_per_birth,
                |c, p| st.rates_at(c, p),
            )
            .unwrap();
            let m = obs::modeled_proportion(
                &flows, 1, 0, 3, Scope::Unmarried, IntentionQuantity::BirthsUnintended,
            )
            .unwrap();
            assert!(lo <= m && m <= hi, "seed {seed}: {lo} <= {m} <= {hi}");
        }
    }

    #[test]
    fn names_are_unique_and_transforms_follow_roles() {
        let (geo, cal, sizes, obs) = fixture();
        let k = ModelConstants::default();
        let prior = Prior::new(&geo, &cal, k.clone(), Some(0)).unwrap();
        let model = JointModel::new(&prior, &sizes, &obs).unwrap();
        assert_eq!(model.dim(), model.n_core() + 9);
        assert_eq!(model.n_latents(), 9);

        let names: HashSet<String> = (0..model.dim()).map(|i| model.name(i)).collect();
        assert_eq!(names.len(), model.dim());

        let a = &prior.atlas;
        let at = |s: u32| model.transform(s as usize);
        assert_eq!(at(a.ns_all()), Transform::Log);
        assert_eq!(at(a.iota_of_region(0)), Transform::Log);
        assert_eq!(at(a.sig_drift(crate::model::DriftSig::Tied)), Transform::Log);
        assert_eq!(
            at(a.eta_indirect()),
            Transform::Logit { lo: k.eta_indirect_lo, hi: k.eta_indirect_hi }
        );
        assert_eq!(
            at(a.beta_survey()),
            Transform::Logit { lo: k.survey_report_lo, hi: k.survey_report_hi }
        );
        assert_eq!(
            at(a.c_lam_m(1, 2)),
            Transform::Logit { lo: k.lambda_eps, hi: 1.0 - k.lambda_eps }
        );
        assert_eq!(at(a.recall_mu3(1)), Transform::Identity);
        assert_eq!(at(a.c_rate(0, 1, Walk::Mnn)), Transform::Identity);
        assert_eq!(
            model.transform(coord(&model, "latent[share[1]]")),
            Transform::Logit { lo: 0.0, hi: 1.0 }
        );
        assert_eq!(
            model.transform(coord(&model, "latent[abortion[3]][min]")),
            Transform::Identity
        );
    }

    /// A short sampler run must keep every retained state feasible.
    #[test]
    fn short_run_retains_only_feasible_states() {
        let (geo, cal, sizes, obs) = fixture();
        let prior = Prior::new(&geo, &cal, ModelConstants::default(), Some(0)).unwrap();
        let model = JointModel::new(&prior, &sizes, &obs).unwrap();
        let cfg = SamplerConfig {
            chains: 2,
            iterations: 400,
            burn_in: 200,
            thin: 2,
            adapt_window: 25,
            seed: 41,
            ..SamplerConfig::default()
        };
        let draws = mcmc::run(&model, &cfg).unwrap();
        assert_eq!(draws.n_draws(), 100);
        assert_eq!(draws.n_params(), model.dim());
        for chain in 0..draws.n_chains() {
            for d in (0..draws.n_draws()).step_by(10) {
                let state: Vec<f64> =
                    (0..draws.n_params()).map(|p| draws.value(chain, d, p)).collect();
                assert_eq!(
                    model.check_feasible(&state),
                    None,
                    "chain {chain} draw {d} left the support"
                );
            }
        }
    }
}
