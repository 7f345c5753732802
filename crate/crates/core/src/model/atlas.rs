//! Layout of the parameter vector.
//!
//! Each free scalar in the model owns one slot. Slots are ordered so that
//! every prior factor's mean, variance, and truncation bounds reference
//! only earlier slots; forward simulation can then fill the vector in one
//! left-to-right pass, and the same ordering doubles as the sampler's
//! default scan order.
//!
//! Order: global spread and observation-bias parameters, the world block,
//! then one block per super region, per region, and per country. Within
//! rate blocks the reference period comes first, then the walk steps in
//! outward period order, then the remaining level parameters.

use crate::accounts::Group;
use crate::geo::{GeoHierarchy, PeriodCalendar};
use crate::model::expr::Slot;

/// Region-level rate spread coordinates. `Uu` is shared by the unmarried
/// groups and the married traditional-use group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionSig {
    Mnn,
    Munmet,
    Unn,
    Uu,
}

/// Country-level rate spread coordinates. `Umod` scales the modern-use gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountrySig {
    Mnn,
    Munmet,
    Unn,
    Umod,
}

/// Walk-step spread coordinates, shared by all hierarchy levels. `Tied`
/// covers the no-need, unmet-need, and married-failure-adjacent walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftSig {
    Tied,
    Mfail,
    Uunmod,
}

/// Abortion-propensity spread coordinates: level of the married share,
/// level of the unmarried offset, and the married walk step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropSig {
    LamM,
    LamU,
    CapM,
}

/// The four rate families that take random-walk steps. The unmarried
/// no-need rate is constant over periods and lives in its own slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Walk {
    Mnn,
    Munmet,
    Uunmod,
    Mfail,
}

/// What a slot holds. Periods are 1-based calendar periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotRole {
    SigRateRegion(RegionSig),
    SigRateCountry(CountrySig),
    SigDrift(DriftSig),
    SigPropRegion(PropSig),
    SigPropCountry(PropSig),
    RecallMu5 { q: usize },
    RecallMu3 { q: usize },
    NsAll,
    NsSub,
    NonRep,
    Pi,
    IotaRegion { r: usize },
    IotaOther,
    IotaSurvey,
    IotaSurveyBias,
    BetaSurvey,
    EtaIndirect,
    EtaDirect,
    IotaProp,
    WorldMnn { p: usize },
    WorldUnn,
    WorldUunmod,
    WorldUmod,
    WorldMunmet,
    WorldMtrad,
    WorldMfail,
    WorldLamM,
    WorldLamU,
    SuperRate { q: usize, p: usize, w: Walk },
    SuperUnn { q: usize },
    SuperGamma { q: usize },
    SuperTrad0 { q: usize },
    SuperLamM { q: usize, p: usize },
    SuperLamU0 { q: usize },
    RegionRate { r: usize, p: usize, w: Walk },
    RegionUnn { r: usize },
    RegionGamma { r: usize },
    RegionLamM { r: usize, p: usize },
    RegionLamU0 { r: usize },
    CountryRate { c: usize, p: usize, w: Walk },
    CountryUnn { c: usize },
    CountryGamma { c: usize },
    CountryLamM { c: usize, p: usize },
    CountryLamU0 { c: usize },
    /// Observation-side latent appended after the prior block.
    Latent,
}

/// Slot layout for one model instance.
#[derive(Debug, Clone)]
pub struct Atlas {
    pub n_c: usize,
    pub n_r: usize,
    pub n_q: usize,
    pub n_p: usize,
    pub p0: usize,
    /// outward scan of periods, starting at the reference period
    pub outward: Vec<usize>,
    /// position of each period (index p-1) in the outward scan
    outward_pos: Vec<usize>,
    pub region_of_country: Vec<usize>,
    pub super_of_region: Vec<usize>,
    pub super_of_country: Vec<usize>,
    /// per region: the official-count error slot it reads
    iota_of_region: Vec<Slot>,
    roles: Vec<SlotRole>,
    names: Vec<String>,
    off_sig_rate_region: Slot,
    off_sig_rate_country: Slot,
    off_sig_drift: Slot,
    off_sig_prop_region: Slot,
    off_sig_prop_country: Slot,
    off_recall: Slot,
    s_ns_all: Slot,
    s_ns_sub: Slot,
    s_nonrep: Slot,
    s_pi: Slot,
    s_iota_other: Slot,
    s_iota_survey: Slot,
    s_iota_survey_bias: Slot,
    s_beta_survey: Slot,
    s_eta_indirect: Slot,
    s_eta_direct: Slot,
    s_iota_prop: Slot,
    off_world: Slot,
    off_super: Slot,
    super_stride: usize,
    off_region: Slot,
    region_stride: usize,
    off_country: Slot,
    country_stride: usize,
    pub n_slots: usize,
}

impl Atlas {
    /// Build the layout for a hierarchy and calendar. Regions inside
    /// `high_income_super` (an internal super-region index) each get their
    /// own official-count error slot; all others share one.
    pub fn new(geo: &GeoHierarchy, cal: &PeriodCalendar, high_income_super: Option<usize>) -> Self {
        let n_c = geo.n_countries();
        let n_r = geo.n_regions();
        let n_q = geo.n_super_regions();
        let n_p = cal.n_periods();
        let p0 = cal.reference_period();
        let outward = cal.periods_outward();
        let mut outward_pos = vec![0usize; n_p];
        for (j, &p) in outward.iter().enumerate() {
            outward_pos[p - 1] = j;
        }

        let mut roles: Vec<SlotRole> = Vec::new();
        let mut names: Vec<String> = Vec::new();
        let push = |roles: &mut Vec<SlotRole>, names: &mut Vec<String>, role: SlotRole, name: String| -> Slot {
            let s = roles.len() as Slot;
            roles.push(role);
            names.push(name);
            s
        };

        let off_sig_rate_region = roles.len() as Slot;
        for (sig, lbl) in [
            (RegionSig::Mnn, "m.nn"),
            (RegionSig::Munmet, "m.unmet"),
            (RegionSig::Unn, "u.nn"),
            (RegionSig::Uu, "u.shared"),
        ] {
            push(&mut roles, &mut names, SlotRole::SigRateRegion(sig), format!("sigma_omega_region[{lbl}]"));
        }
        let off_sig_rate_country = roles.len() as Slot;
        for (sig, lbl) in [
            (CountrySig::Mnn, "m.nn"),
            (CountrySig::Munmet, "m.unmet"),
            (CountrySig::Unn, "u.nn"),
            (CountrySig::Umod, "u.mod"),
        ] {
            push(&mut roles, &mut names, SlotRole::SigRateCountry(sig), format!("sigma_omega[{lbl}]"));
        }
        let off_sig_drift = roles.len() as Slot;
        for (sig, lbl) in [
            (DriftSig::Tied, "tied"),
            (DriftSig::Mfail, "m.modfail"),
            (DriftSig::Uunmod, "u.unmod"),
        ] {
            push(&mut roles, &mut names, SlotRole::SigDrift(sig), format!("sigma_step[{lbl}]"));
        }
        let off_sig_prop_region = roles.len() as Slot;
        for (sig, lbl) in [
            (PropSig::LamM, "level.m"),
            (PropSig::LamU, "level.u"),
            (PropSig::CapM, "step.m"),
        ] {
            push(&mut roles, &mut names, SlotRole::SigPropRegion(sig), format!("sigma_lambda_region[{lbl}]"));
        }
        let off_sig_prop_country = roles.len() as Slot;
        for (sig, lbl) in [
            (PropSig::LamM, "level.m"),
            (PropSig::LamU, "level.u"),
            (PropSig::CapM, "step.m"),
        ] {
            push(&mut roles, &mut names, SlotRole::SigPropCountry(sig), format!("sigma_lambda[{lbl}]"));
        }

        let off_recall = roles.len() as Slot;
        for q in 0..n_q {
            let qid = geo.super_region_id(q);
            push(&mut roles, &mut names, SlotRole::RecallMu5 { q }, format!("recall_bias[Q{qid}][5yr]"));
            push(&mut roles, &mut names, SlotRole::RecallMu3 { q }, format!("recall_bias[Q{qid}][3yr]"));
        }
        let s_ns_all = push(&mut roles, &mut names, SlotRole::NsAll, "nonsample_sd[all]".into());
        let s_ns_sub = push(&mut roles, &mut names, SlotRole::NsSub, "nonsample_sd[subgroup]".into());
        let s_nonrep = push(&mut roles, &mut names, SlotRole::NonRep, "nonsample_sd[nonrep]".into());
        let s_pi = push(&mut roles, &mut names, SlotRole::Pi, "incomplete_extra_sd".into());

        let mut iota_of_region = vec![Slot::MAX; n_r];
        for r in 0..n_r {
            if Some(geo.super_of_region(r)) == high_income_super {
                let rid = geo.region_id(r);
                iota_of_region[r] =
                    push(&mut roles, &mut names, SlotRole::IotaRegion { r }, format!("official_sd[R{rid}]"));
            }
        }
        let s_iota_other = push(&mut roles, &mut names, SlotRole::IotaOther, "official_sd[other]".into());
        for r in 0..n_r {
            if iota_of_region[r] == Slot::MAX {
                iota_of_region[r] = s_iota_other;
            }
        }
        let s_iota_survey = push(&mut roles, &mut names, SlotRole::IotaSurvey, "survey_sd".into());
        let s_iota_survey_bias =
            push(&mut roles, &mut names, SlotRole::IotaSurveyBias, "survey_capture_sd".into());
        let s_beta_survey = push(&mut roles, &mut names, SlotRole::BetaSurvey, "survey_capture".into());
        let s_eta_indirect = push(&mut roles, &mut names, SlotRole::EtaIndirect, "indirect_capture_sd".into());
        let s_eta_direct = push(&mut roles, &mut names, SlotRole::EtaDirect, "study_sd".into());
        let s_iota_prop = push(&mut roles, &mut names, SlotRole::IotaProp, "married_share_sd".into());

        // world block
        let off_world = roles.len() as Slot;
        push(&mut roles, &mut names, SlotRole::WorldMnn { p: p0 }, format!("omega_world[m.nn][p{p0}]"));
        push(&mut roles, &mut names, SlotRole::WorldUnn, "omega_world[u.nn]".into());
        push(&mut roles, &mut names, SlotRole::WorldUunmod, "omega_world[u.unmod]".into());
        push(&mut roles, &mut names, SlotRole::WorldUmod, "omega_world[u.mod]".into());
        push(&mut roles, &mut names, SlotRole::WorldMunmet, "omega_world[m.unmet]".into());
        push(&mut roles, &mut names, SlotRole::WorldMtrad, "omega_world[m.trad]".into());
        push(&mut roles, &mut names, SlotRole::WorldMfail, "omega_world[m.modfail]".into());
        for &p in outward.iter().skip(1) {
            push(&mut roles, &mut names, SlotRole::WorldMnn { p }, format!("omega_world[m.nn][p{p}]"));
        }
        push(&mut roles, &mut names, SlotRole::WorldLamM, "lambda_world[m]".into());
        push(&mut roles, &mut names, SlotRole::WorldLamU, "lambda_world[u]".into());

        // super-region blocks
        let off_super = roles.len() as Slot;
        for q in 0..n_q {
            let id = geo.super_region_id(q);
            Self::push_rate_block(
                &mut roles,
                &mut names,
                &outward,
                |p, w| SlotRole::SuperRate { q, p, w },
                SlotRole::SuperUnn { q },
                &format!("omega_super[Q{id}]"),
            );
            push(&mut roles, &mut names, SlotRole::SuperGamma { q }, format!("gamma_super[Q{id}]"));
            push(
                &mut roles,
                &mut names,
                SlotRole::SuperTrad0 { q },
                format!("omega_super[Q{id}][m.trad][p{p0}]"),
            );
            for &p in &outward {
                push(&mut roles, &mut names, SlotRole::SuperLamM { q, p }, format!("lambda_super[Q{id}][m][p{p}]"));
            }
            push(&mut roles, &mut names, SlotRole::SuperLamU0 { q }, format!("lambda_super[Q{id}][u][p{p0}]"));
        }
        let super_stride = if n_q > 0 { (roles.len() - off_super as usize) / n_q } else { 0 };

        // region blocks
        let off_region = roles.len() as Slot;
        for r in 0..n_r {
            let id = geo.region_id(r);
            Self::push_rate_block(
                &mut roles,
                &mut names,
                &outward,
                |p, w| SlotRole::RegionRate { r, p, w },
                SlotRole::RegionUnn { r },
                &format!("omega_region[R{id}]"),
            );
            push(&mut roles, &mut names, SlotRole::RegionGamma { r }, format!("gamma_region[R{id}]"));
            for &p in &outward {
                push(&mut roles, &mut names, SlotRole::RegionLamM { r, p }, format!("lambda_region[R{id}][m][p{p}]"));
            }
            push(&mut roles, &mut names, SlotRole::RegionLamU0 { r }, format!("lambda_region[R{id}][u][p{p0}]"));
        }
        let region_stride = if n_r > 0 { (roles.len() - off_region as usize) / n_r } else { 0 };

        // country blocks
        let off_country = roles.len() as Slot;
        for c in 0..n_c {
            let id = geo.country_id(c);
            Self::push_rate_block(
                &mut roles,
                &mut names,
                &outward,
                |p, w| SlotRole::CountryRate { c, p, w },
                SlotRole::CountryUnn { c },
                &format!("omega[C{id}]"),
            );
            push(&mut roles, &mut names, SlotRole::CountryGamma { c }, format!("gamma[C{id}]"));
            for &p in &outward {
                push(&mut roles, &mut names, SlotRole::CountryLamM { c, p }, format!("lambda[C{id}][m][p{p}]"));
            }
            push(&mut roles, &mut names, SlotRole::CountryLamU0 { c }, format!("lambda[C{id}][u][p{p0}]"));
        }
        let country_stride = if n_c > 0 { (roles.len() - off_country as usize) / n_c } else { 0 };

        let n_slots = roles.len();
        Atlas {
            n_c,
            n_r,
            n_q,
            n_p,
            p0,
            outward,
            outward_pos,
            region_of_country: (0..n_c).map(|c| geo.region_of_country(c)).collect(),
            super_of_region: (0..n_r).map(|r| geo.super_of_region(r)).collect(),
            super_of_country: (0..n_c).map(|c| geo.super_of_country(c)).collect(),
            iota_of_region,
            roles,
            names,
            off_sig_rate_region,
            off_sig_rate_country,
            off_sig_drift,
            off_sig_prop_region,
            off_sig_prop_country,
            off_recall,
            s_ns_all,
            s_ns_sub,
            s_nonrep,
            s_pi,
            s_iota_other,
            s_iota_survey,
            s_iota_survey_bias,
            s_beta_survey,
            s_eta_indirect,
            s_eta_direct,
            s_iota_prop,
            off_world,
            off_super,
            super_stride,
            off_region,
            region_stride,
            off_country,
            country_stride,
            n_slots,
        }
    }

    fn push_rate_block(
        roles: &mut Vec<SlotRole>,
        names: &mut Vec<String>,
        outward: &[usize],
        rate_role: impl Fn(usize, Walk) -> SlotRole,
        unn_role: SlotRole,
        prefix: &str,
    ) {
        let p0 = outward[0];
        let refs = [
            (rate_role(p0, Walk::Mnn), format!("{prefix}[m.nn][p{p0}]")),
            (unn_role, format!("{prefix}[u.nn]")),
            (rate_role(p0, Walk::Munmet), format!("{prefix}[m.unmet][p{p0}]")),
            (rate_role(p0, Walk::Uunmod), format!("{prefix}[u.unmod][p{p0}]")),
            (rate_role(p0, Walk::Mfail), format!("{prefix}[m.modfail][p{p0}]")),
        ];
        for (role, name) in refs {
            roles.push(role);
            names.push(name);
        }
        for &p in outward.iter().skip(1) {
            for (w, lbl) in [
                (Walk::Mnn, "m.nn"),
                (Walk::Munmet, "m.unmet"),
                (Walk::Uunmod, "u.unmod"),
                (Walk::Mfail, "m.modfail"),
            ] {
                roles.push(rate_role(p, w));
                names.push(format!("{prefix}[{lbl}][p{p}]"));
            }
        }
    }

    pub fn role(&self, s: Slot) -> SlotRole {
        self.roles[s as usize]
    }

    pub fn name(&self, s: Slot) -> &str {
        &self.names[s as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    // ---- global slots ----

    pub fn sig_rate_region(&self, s: RegionSig) -> Slot {
        self.off_sig_rate_region
            + match s {
                RegionSig::Mnn => 0,
                RegionSig::Munmet => 1,
                RegionSig::Unn => 2,
                RegionSig::Uu => 3,
            }
    }

    pub fn sig_rate_country(&self, s: CountrySig) -> Slot {
        self.off_sig_rate_country
            + match s {
                CountrySig::Mnn => 0,
                CountrySig::Munmet => 1,
                CountrySig::Unn => 2,
                CountrySig::Umod => 3,
            }
    }

    pub fn sig_drift(&self, s: DriftSig) -> Slot {
        self.off_sig_drift
            + match s {
                DriftSig::Tied => 0,
                DriftSig::Mfail => 1,
                DriftSig::Uunmod => 2,
            }
    }

    pub fn sig_prop_region(&self, s: PropSig) -> Slot {
        self.off_sig_prop_region
            + match s {
                PropSig::LamM => 0,
                PropSig::LamU => 1,
                PropSig::CapM => 2,
            }
    }

    pub fn sig_prop_country(&self, s: PropSig) -> Slot {
        self.off_sig_prop_country
            + match s {
                PropSig::LamM => 0,
                PropSig::LamU => 1,
                PropSig::CapM => 2,
            }
    }

    pub fn recall_mu5(&self, q: usize) -> Slot {
        self.off_recall + 2 * q as Slot
    }

    pub fn recall_mu3(&self, q: usize) -> Slot {
        self.off_recall + 2 * q as Slot + 1
    }

    pub fn ns_all(&self) -> Slot {
        self.s_ns_all
    }

    pub fn ns_sub(&self) -> Slot {
        self.s_ns_sub
    }

    pub fn nonrep(&self) -> Slot {
        self.s_nonrep
    }

    pub fn pi(&self) -> Slot {
        self.s_pi
    }

    pub fn iota_of_region(&self, r: usize) -> Slot {
        self.iota_of_region[r]
    }

    pub fn iota_other(&self) -> Slot {
        self.s_iota_other
    }

    pub fn iota_survey(&self) -> Slot {
        self.s_iota_survey
    }

    pub fn iota_survey_bias(&self) -> Slot {
        self.s_iota_survey_bias
    }

    pub fn beta_survey(&self) -> Slot {
        self.s_beta_survey
    }

    pub fn eta_indirect(&self) -> Slot {
        self.s_eta_indirect
    }

    pub fn eta_direct(&self) -> Slot {
        self.s_eta_direct
    }

    pub fn iota_prop(&self) -> Slot {
        self.s_iota_prop
    }

    // ---- world block ----

    pub fn w_mnn(&self, p: usize) -> Slot {
        if p == self.p0 {
            self.off_world
        } else {
            self.off_world + 7 + (self.outward_pos[p - 1] as Slot - 1)
        }
    }

    pub fn w_unn(&self) -> Slot {
        self.off_world + 1
    }

    pub fn w_uunmod(&self) -> Slot {
        self.off_world + 2
    }

    pub fn w_umod(&self) -> Slot {
        self.off_world + 3
    }

    pub fn w_munmet(&self) -> Slot {
        self.off_world + 4
    }

    pub fn w_mtrad(&self) -> Slot {
        self.off_world + 5
    }

    pub fn w_mfail(&self) -> Slot {
        self.off_world + 6
    }

    pub fn w_lam_m(&self) -> Slot {
        self.off_world + 6 + self.n_p as Slot
    }

    pub fn w_lam_u(&self) -> Slot {
        self.off_world + 7 + self.n_p as Slot
    }

    // ---- level blocks ----

    fn rate_in_block(&self, base: Slot, p: usize, w: Walk) -> Slot {
        if p == self.p0 {
            base + match w {
                Walk::Mnn => 0,
                Walk::Munmet => 2,
                Walk::Uunmod => 3,
                Walk::Mfail => 4,
            }
        } else {
            let j = self.outward_pos[p - 1] as Slot;
            base + 5
                + 4 * (j - 1)
                + match w {
                    Walk::Mnn => 0,
                    Walk::Munmet => 1,
                    Walk::Uunmod => 2,
                    Walk::Mfail => 3,
                }
        }
    }

    fn q_base(&self, q: usize) -> Slot {
        self.off_super + (q * self.super_stride) as Slot
    }

    fn r_base(&self, r: usize) -> Slot {
        self.off_region + (r * self.region_stride) as Slot
    }

    fn c_base(&self, c: usize) -> Slot {
        self.off_country + (c * self.country_stride) as Slot
    }

    pub fn q_rate(&self, q: usize, p: usize, w: Walk) -> Slot {
        self.rate_in_block(self.q_base(q), p, w)
    }

    pub fn q_unn(&self, q: usize) -> Slot {
        self.q_base(q) + 1
    }

    pub fn q_gamma(&self, q: usize) -> Slot {
        self.q_base(q) + (4 * self.n_p as Slot + 1)
    }

    pub fn q_trad0(&self, q: usize) -> Slot {
        self.q_gamma(q) + 1
    }

    pub fn q_lam_m(&self, q: usize, p: usize) -> Slot {
        self.q_trad0(q) + 1 + self.outward_pos[p - 1] as Slot
    }

    pub fn q_lam_u0(&self, q: usize) -> Slot {
        self.q_trad0(q) + 1 + self.n_p as Slot
    }

    pub fn r_rate(&self, r: usize, p: usize, w: Walk) -> Slot {
        self.rate_in_block(self.r_base(r), p, w)
    }

    pub fn r_unn(&self, r: usize) -> Slot {
        self.r_base(r) + 1
    }

    pub fn r_gamma(&self, r: usize) -> Slot {
        self.r_base(r) + (4 * self.n_p as Slot + 1)
    }

    pub fn r_lam_m(&self, r: usize, p: usize) -> Slot {
        self.r_gamma(r) + 1 + self.outward_pos[p - 1] as Slot
    }

    pub fn r_lam_u0(&self, r: usize) -> Slot {
        self.r_gamma(r) + 1 + self.n_p as Slot
    }

    pub fn c_rate(&self, c: usize, p: usize, w: Walk) -> Slot {
        self.rate_in_block(self.c_base(c), p, w)
    }

    pub fn c_unn(&self, c: usize) -> Slot {
        self.c_base(c) + 1
    }

    pub fn c_gamma(&self, c: usize) -> Slot {
        self.c_base(c) + (4 * self.n_p as Slot + 1)
    }

    pub fn c_lam_m(&self, c: usize, p: usize) -> Slot {
        self.c_gamma(c) + 1 + self.outward_pos[p - 1] as Slot
    }

    pub fn c_lam_u0(&self, c: usize) -> Slot {
        self.c_gamma(c) + 1 + self.n_p as Slot
    }

    /// Slots holding country-level rate and propensity parameters.
    pub fn country_level_slots(&self) -> Vec<Slot> {
        (self.off_country..self.n_slots as Slot).collect()
    }

    // ---- natural-scale state accessors ----

    /// Log occurrence rate for any of the seven groups, including the three
    /// derived ones (no-need married constant handling aside, `u.nn` is
    /// constant over periods, `u.mod` hangs off `u.unmod` by the country
    /// gap, and `m.trad` telescopes through the super-region reference).
    pub fn log_rate(&self, x: &[f64], c: usize, p: usize, g: Group) -> f64 {
        match g {
            Group::MarriedIntended => x[self.c_rate(c, p, Walk::Mnn) as usize],
            Group::MarriedModernFailure => x[self.c_rate(c, p, Walk::Mfail) as usize],
            Group::MarriedUnmet => x[self.c_rate(c, p, Walk::Munmet) as usize],
            Group::UnmarriedIntended => x[self.c_unn(c) as usize],
            Group::UnmarriedNoModern => x[self.c_rate(c, p, Walk::Uunmod) as usize],
            Group::UnmarriedModern => {
                x[self.c_rate(c, p, Walk::Uunmod) as usize] + x[self.c_gamma(c) as usize]
            }
            Group::MarriedTraditional => {
                let q = self.super_of_country[c];
                x[self.q_trad0(q) as usize] + x[self.c_rate(c, p, Walk::Mfail) as usize]
                    - x[self.q_rate(q, self.p0, Walk::Mfail) as usize]
            }
        }
    }

    /// Region-level log rate (used for prior checks; estimates aggregate
    /// country flows instead).
    pub fn log_rate_region(&self, x: &[f64], r: usize, p: usize, g: Group) -> f64 {
        match g {
            Group::MarriedIntended => x[self.r_rate(r, p, Walk::Mnn) as usize],
            Group::MarriedModernFailure => x[self.r_rate(r, p, Walk::Mfail) as usize],
            Group::MarriedUnmet => x[self.r_rate(r, p, Walk::Munmet) as usize],
            Group::UnmarriedIntended => x[self.r_unn(r) as usize],
            Group::UnmarriedNoModern => x[self.r_rate(r, p, Walk::Uunmod) as usize],
            Group::UnmarriedModern => {
                x[self.r_rate(r, p, Walk::Uunmod) as usize] + x[self.r_gamma(r) as usize]
            }
            Group::MarriedTraditional => {
                let q = self.super_of_region[r];
                x[self.q_trad0(q) as usize] + x[self.r_rate(r, p, Walk::Mfail) as usize]
                    - x[self.q_rate(q, self.p0, Walk::Mfail) as usize]
            }
        }
    }

    /// Super-region-level log rate.
    pub fn log_rate_super(&self, x: &[f64], q: usize, p: usize, g: Group) -> f64 {
        match g {
            Group::MarriedIntended => x[self.q_rate(q, p, Walk::Mnn) as usize],
            Group::MarriedModernFailure => x[self.q_rate(q, p, Walk::Mfail) as usize],
            Group::MarriedUnmet => x[self.q_rate(q, p, Walk::Munmet) as usize],
            Group::UnmarriedIntended => x[self.q_unn(q) as usize],
            Group::UnmarriedNoModern => x[self.q_rate(q, p, Walk::Uunmod) as usize],
            Group::UnmarriedModern => {
                x[self.q_rate(q, p, Walk::Uunmod) as usize] + x[self.q_gamma(q) as usize]
            }
            Group::MarriedTraditional => {
                x[self.q_trad0(q) as usize] + x[self.q_rate(q, p, Walk::Mfail) as usize]
                    - x[self.q_rate(q, self.p0, Walk::Mfail) as usize]
            }
        }
    }

    /// World-level log rate. Only the married no-need series walks over
    /// periods; every other group is constant at this level.
    pub fn log_rate_world(&self, x: &[f64], p: usize, g: Group) -> f64 {
        match g {
            Group::MarriedIntended => x[self.w_mnn(p) as usize],
            Group::MarriedModernFailure => x[self.w_mfail() as usize],
            Group::MarriedUnmet => x[self.w_munmet() as usize],
            Group::MarriedTraditional => x[self.w_mtrad() as usize],
            Group::UnmarriedIntended => x[self.w_unn() as usize],
            Group::UnmarriedNoModern => x[self.w_uunmod() as usize],
            Group::UnmarriedModern => x[self.w_umod() as usize],
        }
    }

    /// Married abortion propensity scale for a country-period.
    pub fn lambda_m(&self, x: &[f64], c: usize, p: usize) -> f64 {
        x[self.c_lam_m(c, p) as usize]
    }

    /// Unmarried propensity scale: the reference-period offset carried
    /// along the married path.
    pub fn lambda_u(&self, x: &[f64], c: usize, p: usize) -> f64 {
        x[self.c_lam_u0(c) as usize] + x[self.c_lam_m(c, p) as usize]
            - x[self.c_lam_m(c, self.p0) as usize]
    }

    /// Abortion proportion for a marriage class: `lambda * cap` where `cap`
    /// is the reciprocal of pregnancies per abortion.
    pub fn alpha(&self, x: &[f64], c: usize, p: usize, married: bool, cap: f64) -> f64 {
        let lam = if married { self.lambda_m(x, c, p) } else { self.lambda_u(x, c, p) };
        lam * cap
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::CountryDef;

    fn small_geo() -> GeoHierarchy {
        GeoHierarchy::new(vec![
            CountryDef { id: 11, name: "A".into(), region_id: 1, super_region_id: 1 },
            CountryDef { id: 12, name: "B".into(), region_id: 1, super_region_id: 1 },
            CountryDef { id: 21, name: "C".into(), region_id: 2, super_region_id: 2 },
        ])
        .unwrap()
    }

    #[test]
    fn slot_count_matches_block_arithmetic() {
        let geo = small_geo();
        let cal = PeriodCalendar::default_grid();
        let atlas = Atlas::new(&geo, &cal, Some(0));
        let p = cal.n_periods();
        // globals: 4+4+3+3+3 sigmas, 2 recall per super, 4 scalar, 1 hi-income
        // region iota + 1 other, 6 remaining observation scalars
        let globals = 17 + 2 * 2 + 4 + 2 + 6;
        let world = p + 8;
        let expect = globals + world + 2 * (5 * p + 4) + 2 * (5 * p + 3) + 3 * (5 * p + 3);
        assert_eq!(atlas.n_slots, expect);
    }

    #[test]
    fn every_slot_gets_a_unique_index() {
        let geo = small_geo();
        let cal = PeriodCalendar::default_grid();
        let atlas = Atlas::new(&geo, &cal, None);
        let mut seen = vec![false; atlas.n_slots];
        let mut mark = |s: Slot| {
            assert!(!seen[s as usize], "slot {s} assigned twice");
            seen[s as usize] = true;
        };
        for sig in [RegionSig::Mnn, RegionSig::Munmet, RegionSig::Unn, RegionSig::Uu] {
            mark(atlas.sig_rate_region(sig));
        }
        for sig in [CountrySig::Mnn, CountrySig::Munmet, CountrySig::Unn, CountrySig::Umod] {
            mark(atlas.sig_rate_country(sig));
        }
        for sig in [DriftSig::Tied, DriftSig::Mfail, DriftSig::Uunmod] {
            mark(atlas.sig_drift(sig));
        }
        for sig in [PropSig::LamM, PropSig::LamU, PropSig::CapM] {
            mark(atlas.sig_prop_region(sig));
            mark(atlas.sig_prop_country(sig));
        }
        for q in 0..atlas.n_q {
            mark(atlas.recall_mu5(q));
            mark(atlas.recall_mu3(q));
        }
        for s in [
            atlas.ns_all(),
            atlas.ns_sub(),
            atlas.nonrep(),
            atlas.pi(),
            atlas.iota_other(),
            atlas.iota_survey(),
            atlas.iota_survey_bias(),
            atlas.beta_survey(),
            atlas.eta_indirect(),
            atlas.eta_direct(),
            atlas.iota_prop(),
        ] {
            mark(s);
        }
        let np = atlas.n_p;
        for p in 1..=np {
            mark(atlas.w_mnn(p));
        }
        for s in [
            atlas.w_unn(),
            atlas.w_uunmod(),
            atlas.w_umod(),
            atlas.w_munmet(),
            atlas.w_mtrad(),
            atlas.w_mfail(),
            atlas.w_lam_m(),
            atlas.w_lam_u(),
        ] {
            mark(s);
        }
        for q in 0..atlas.n_q {
            mark(atlas.q_unn(q));
            mark(atlas.q_gamma(q));
            mark(atlas.q_trad0(q));
            mark(atlas.q_lam_u0(q));
            for p in 1..=np {
                mark(atlas.q_lam_m(q, p));
                for w in [Walk::Mnn, Walk::Munmet, Walk::Uunmod, Walk::Mfail] {
                    mark(atlas.q_rate(q, p, w));
                }
            }
        }
        for r in 0..atlas.n_r {
            mark(atlas.r_unn(r));
            mark(atlas.r_gamma(r));
            mark(atlas.r_lam_u0(r));
            for p in 1..=np {
                mark(atlas.r_lam_m(r, p));
                for w in [Walk::Mnn, Walk::Munmet, Walk::Uunmod, Walk::Mfail] {
                    mark(atlas.r_rate(r, p, w));
                }
            }
        }
        for c in 0..atlas.n_c {
            mark(atlas.c_unn(c));
            mark(atlas.c_gamma(c));
            mark(atlas.c_lam_u0(c));
            for p in 1..=np {
                mark(atlas.c_lam_m(c, p));
                for w in [Walk::Mnn, Walk::Munmet, Walk::Uunmod, Walk::Mfail] {
                    mark(atlas.c_rate(c, p, w));
                }
            }
        }
        assert!(seen.iter().all(|&b| b), "layout left gaps");
    }

    #[test]
    fn roles_match_slots() {
        let geo = small_geo();
        let cal = PeriodCalendar::default_grid();
        let atlas = Atlas::new(&geo, &cal, Some(1));
        assert_eq!(atlas.role(atlas.c_rate(2, 5, Walk::Mfail)), SlotRole::CountryRate {
            c: 2,
            p: 5,
            w: Walk::Mfail
        });
        assert_eq!(atlas.role(atlas.q_trad0(1)), SlotRole::SuperTrad0 { q: 1 });
        assert_eq!(atlas.role(atlas.w_mnn(1)), SlotRole::WorldMnn { p: 1 });
        assert_eq!(atlas.role(atlas.c_lam_m(0, 3)), SlotRole::CountryLamM { c: 0, p: 3 });
        // region 2 (index 1) sits in super-region index 1 and owns an iota slot
        assert_eq!(atlas.role(atlas.iota_of_region(1)), SlotRole::IotaRegion { r: 1 });
        assert_eq!(atlas.role(atlas.iota_of_region(0)), SlotRole::IotaOther);
        assert!(atlas.name(atlas.c_gamma(1)).starts_with("gamma[C12]"));
    }

    #[test]
    fn derived_rates_follow_their_parents() {
        let geo = small_geo();
        let cal = PeriodCalendar::default_grid();
        let atlas = Atlas::new(&geo, &cal, None);
        let mut x = vec![0.0; atlas.n_slots];
        let (c, p) = (0usize, 5usize);
        let q = atlas.super_of_country[c];
        x[atlas.c_rate(c, p, Walk::Uunmod) as usize] = -2.0;
        x[atlas.c_gamma(c) as usize] = -0.7;
        assert_eq!(atlas.log_rate(&x, c, p, Group::UnmarriedModern), -2.7);
        x[atlas.q_trad0(q) as usize] = -1.5;
        x[atlas.q_rate(q, atlas.p0, Walk::Mfail) as usize] = -1.0;
        x[atlas.c_rate(c, p, Walk::Mfail) as usize] = -0.8;
        assert_eq!(atlas.log_rate(&x, c, p, Group::MarriedTraditional), -1.5 - 0.8 + 1.0);
        // propensity telescope
        x[atlas.c_lam_m(c, atlas.p0) as usize] = 0.30;
        x[atlas.c_lam_m(c, p) as usize] = 0.40;
        x[atlas.c_lam_u0(c) as usize] = 0.20;
        assert!((atlas.lambda_u(&x, c, p) - 0.30f64).abs() < 1e-15);
        assert!((atlas.alpha(&x, c, p, false, 1.0 / 1.1) - 0.30 / 1.1).abs() < 1e-15);
    }
}
