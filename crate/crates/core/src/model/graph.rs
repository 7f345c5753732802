//! The full prior, emitted as one factor per slot.
//!
//! Factors are stored in slot order and each factor's expressions reference
//! only earlier slots, so a single left-to-right pass yields an exact
//! forward draw from the prior, and the summed factor log-densities give
//! the matching joint log-density. Cross-period feasibility conditions
//! (the constant unmarried gap, the derived traditional-use rate, the
//! carried unmarried propensity) are folded into truncation bounds rather
//! than enforced by rejection, so both code paths stay in lockstep.

use crate::constants::ModelConstants;
use crate::error::{Error, Result};
use crate::model::atlas::{Atlas, CountrySig, DriftSig, PropSig, RegionSig, SlotRole, Walk};
use crate::model::expr::{Aff, BoundSet, Factor, Fam, Scale, Slot};

/// The prior as an ordered factor list plus slot-to-factor adjacency.
#[derive(Debug, Clone)]
pub struct PriorGraph {
    pub factors: Vec<Factor>,
    /// for each slot, the indices of factors that read it (own factor included)
    pub adj: Vec<Vec<u32>>,
}

/// Extend an affine form with `+x[at] - x[from]`, skipping the no-op case
/// where both point at the same slot (a constant parent has no drift).
fn add_diff(a: Aff, at: Slot, from: Slot) -> Aff {
    if at == from {
        a
    } else {
        a.plus(at).minus(from)
    }
}

fn sub_diff(a: Aff, at: Slot, from: Slot) -> Aff {
    if at == from {
        a
    } else {
        a.minus(at).plus(from)
    }
}

/// Which tier of the hierarchy a block belongs to; countries hang off
/// regions, regions off super regions, super regions off the world block.
#[derive(Clone, Copy)]
enum Tier {
    Super(usize),
    Region(usize),
    Country(usize),
}

struct Emitter<'a> {
    atlas: &'a Atlas,
    k: &'a ModelConstants,
    out: Vec<Option<Factor>>,
}

impl<'a> Emitter<'a> {
    fn put(&mut self, x: Slot, fam: Fam, mean: Aff, var: Scale, lo: BoundSet, hi: BoundSet) {
        let slot = x as usize;
        debug_assert!(self.out[slot].is_none(), "factor for slot {x} emitted twice");
        let label = self.atlas.name(x).to_string();
        self.out[slot] = Some(Factor { x, fam, mean, var, lo, hi, label });
    }

    fn neighbor(&self, p: usize) -> usize {
        if p > self.atlas.p0 {
            p - 1
        } else {
            p + 1
        }
    }

    // -- per-tier slot lookups ------------------------------------------

    fn own_rate(&self, t: Tier, p: usize, w: Walk) -> Slot {
        match t {
            Tier::Super(q) => self.atlas.q_rate(q, p, w),
            Tier::Region(r) => self.atlas.r_rate(r, p, w),
            Tier::Country(c) => self.atlas.c_rate(c, p, w),
        }
    }

    fn own_unn(&self, t: Tier) -> Slot {
        match t {
            Tier::Super(q) => self.atlas.q_unn(q),
            Tier::Region(r) => self.atlas.r_unn(r),
            Tier::Country(c) => self.atlas.c_unn(c),
        }
    }

    fn parent_rate(&self, t: Tier, p: usize, w: Walk) -> Slot {
        match t {
            Tier::Super(_) => match w {
                Walk::Mnn => self.atlas.w_mnn(p),
                Walk::Munmet => self.atlas.w_munmet(),
                Walk::Uunmod => self.atlas.w_uunmod(),
                Walk::Mfail => self.atlas.w_mfail(),
            },
            Tier::Region(r) => self.atlas.q_rate(self.atlas.super_of_region[r], p, w),
            Tier::Country(c) => self.atlas.r_rate(self.atlas.region_of_country[c], p, w),
        }
    }

    fn parent_unn(&self, t: Tier) -> Slot {
        match t {
            Tier::Super(_) => self.atlas.w_unn(),
            Tier::Region(r) => self.atlas.q_unn(self.atlas.super_of_region[r]),
            Tier::Country(c) => self.atlas.r_unn(self.atlas.region_of_country[c]),
        }
    }

    fn own_gamma(&self, t: Tier) -> Slot {
        match t {
            Tier::Super(q) => self.atlas.q_gamma(q),
            Tier::Region(r) => self.atlas.r_gamma(r),
            Tier::Country(c) => self.atlas.c_gamma(c),
        }
    }

    fn own_lam_m(&self, t: Tier, p: usize) -> Slot {
        match t {
            Tier::Super(q) => self.atlas.q_lam_m(q, p),
            Tier::Region(r) => self.atlas.r_lam_m(r, p),
            Tier::Country(c) => self.atlas.c_lam_m(c, p),
        }
    }

    fn own_lam_u0(&self, t: Tier) -> Slot {
        match t {
            Tier::Super(q) => self.atlas.q_lam_u0(q),
            Tier::Region(r) => self.atlas.r_lam_u0(r),
            Tier::Country(c) => self.atlas.c_lam_u0(c),
        }
    }

    fn parent_lam_m(&self, t: Tier, p: usize) -> Slot {
        match t {
            Tier::Super(_) => self.atlas.w_lam_m(),
            Tier::Region(r) => self.atlas.q_lam_m(self.atlas.super_of_region[r], p),
            Tier::Country(c) => self.atlas.r_lam_m(self.atlas.region_of_country[c], p),
        }
    }

    fn parent_lam_u0(&self, t: Tier) -> Slot {
        match t {
            Tier::Super(_) => self.atlas.w_lam_u(),
            Tier::Region(r) => self.atlas.q_lam_u0(self.atlas.super_of_region[r]),
            Tier::Country(c) => self.atlas.r_lam_u0(self.atlas.region_of_country[c]),
        }
    }

    /// Spread slot for a reference-period rate at this tier.
    fn ref_var(&self, t: Tier, w: Walk) -> Scale {
        let s = match t {
            Tier::Country(_) => self.atlas.sig_rate_country(match w {
                Walk::Mnn => CountrySig::Mnn,
                Walk::Munmet | Walk::Mfail => CountrySig::Munmet,
                Walk::Uunmod => CountrySig::Unn,
            }),
            _ => self.atlas.sig_rate_region(match w {
                Walk::Mnn => RegionSig::Mnn,
                Walk::Munmet | Walk::Mfail => RegionSig::Munmet,
                Walk::Uunmod => RegionSig::Uu,
            }),
        };
        Scale::SdSlot(s)
    }

    fn unn_var(&self, t: Tier) -> Scale {
        Scale::SdSlot(match t {
            Tier::Country(_) => self.atlas.sig_rate_country(CountrySig::Unn),
            _ => self.atlas.sig_rate_region(RegionSig::Unn),
        })
    }

    fn gamma_var(&self, t: Tier) -> Scale {
        Scale::SdSlot(match t {
            Tier::Country(_) => self.atlas.sig_rate_country(CountrySig::Umod),
            _ => self.atlas.sig_rate_region(RegionSig::Uu),
        })
    }

    fn lam_var(&self, t: Tier, which: PropSig) -> Scale {
        Scale::SdSlot(match t {
            Tier::Country(_) => self.atlas.sig_prop_country(which),
            _ => self.atlas.sig_prop_region(which),
        })
    }

    fn drift_var(&self, w: Walk) -> Scale {
        Scale::SdSlot(self.atlas.sig_drift(match w {
            Walk::Mnn | Walk::Munmet => DriftSig::Tied,
            Walk::Uunmod => DriftSig::Uunmod,
            Walk::Mfail => DriftSig::Mfail,
        }))
    }

    /// Reference-period shrinkage is heavy-tailed at the country tier for
    /// every group; region and super-region tiers are normal.
    fn ref_fam(&self, t: Tier) -> Fam {
        match t {
            Tier::Country(_) => Fam::T3,
            _ => Fam::Normal,
        }
    }

    /// Walk steps are heavy-tailed at the country tier except the
    /// unmet-need walk, which keeps a normal step; region and super-region
    /// recursions are normal throughout.
    fn rate_fam(&self, t: Tier, w: Walk) -> Fam {
        match (t, w) {
            (Tier::Country(_), Walk::Munmet) => Fam::Normal,
            (Tier::Country(_), _) => Fam::T3,
            _ => Fam::Normal,
        }
    }

    // -- block emitters -------------------------------------------------

    /// Lower/upper envelope terms keeping the derived traditional-use rate
    /// inside the hard rate envelope; active at the country tier only.
    fn envelope(&self, t: Tier) -> Option<(Aff, Aff)> {
        let Tier::Country(c) = t else { return None };
        let q = self.atlas.super_of_country[c];
        let mfail_q0 = self.atlas.q_rate(q, self.atlas.p0, Walk::Mfail);
        let trad_q0 = self.atlas.q_trad0(q);
        let lo = Aff::konst(self.k.rate_floor.ln()).plus(mfail_q0).minus(trad_q0);
        let hi = Aff::konst(self.k.rate_ceiling.ln()).plus(mfail_q0).minus(trad_q0);
        Some((lo, hi))
    }

    fn rate_block(&mut self, t: Tier) {
        let k = self.k;
        let (ln_lo, ln_hi, ln_cap) = (k.rate_lo.ln(), k.rate_hi.ln(), k.failure_cap.ln());
        let p0 = self.atlas.p0;
        let env = self.envelope(t);

        // reference period, in dependency order
        self.put(
            self.own_rate(t, p0, Walk::Mnn),
            self.ref_fam(t),
            Aff::slot(self.parent_rate(t, p0, Walk::Mnn)),
            self.ref_var(t, Walk::Mnn),
            BoundSet::lo(vec![Aff::konst(ln_lo)]),
            BoundSet::hi(vec![Aff::konst(ln_hi)]),
        );
        self.put(
            self.own_unn(t),
            self.ref_fam(t),
            Aff::slot(self.parent_unn(t)),
            self.unn_var(t),
            BoundSet::lo(vec![Aff::konst(ln_lo)]),
            BoundSet::hi(vec![Aff::slot(self.own_rate(t, p0, Walk::Mnn))]),
        );
        for w in [Walk::Munmet, Walk::Uunmod] {
            self.put(
                self.own_rate(t, p0, w),
                self.ref_fam(t),
                Aff::slot(self.parent_rate(t, p0, w)),
                self.ref_var(t, w),
                BoundSet::lo(vec![Aff::slot(self.own_unn(t))]),
                BoundSet::hi(vec![Aff::konst(ln_hi)]),
            );
        }
        let mut mfail_lo = vec![
            Aff::slot(self.own_rate(t, p0, Walk::Mnn)),
            Aff::slot(self.own_rate(t, p0, Walk::Munmet)),
            Aff::slot(self.own_rate(t, p0, Walk::Uunmod)),
        ];
        let mut mfail_hi = vec![Aff::konst(ln_cap)];
        if let Some((e_lo, e_hi)) = env.clone() {
            mfail_lo.push(e_lo);
            mfail_hi.push(e_hi);
        }
        self.put(
            self.own_rate(t, p0, Walk::Mfail),
            self.ref_fam(t),
            Aff::slot(self.parent_rate(t, p0, Walk::Mfail)),
            self.ref_var(t, Walk::Mfail),
            BoundSet::lo(mfail_lo),
            BoundSet::hi(mfail_hi),
        );

        // walks, outward from the reference period
        for &p in self.atlas.outward.clone().iter().skip(1) {
            let ps = self.neighbor(p);
            let mean = add_diff(
                Aff::slot(self.own_rate(t, ps, Walk::Mnn)),
                self.parent_rate(t, p, Walk::Mnn),
                self.parent_rate(t, ps, Walk::Mnn),
            );
            self.put(
                self.own_rate(t, p, Walk::Mnn),
                self.rate_fam(t, Walk::Mnn),
                mean,
                self.drift_var(Walk::Mnn),
                BoundSet::lo(vec![Aff::slot(self.own_unn(t))]),
                BoundSet::hi(vec![Aff::konst(ln_hi)]),
            );

            let mean = Aff::slot(self.own_rate(t, ps, Walk::Munmet))
                .plus(self.own_rate(t, p, Walk::Mnn))
                .minus(self.own_rate(t, ps, Walk::Mnn));
            let mean = sub_diff(mean, self.parent_rate(t, p, Walk::Mnn), self.parent_rate(t, ps, Walk::Mnn));
            let mean = add_diff(mean, self.parent_rate(t, p, Walk::Munmet), self.parent_rate(t, ps, Walk::Munmet));
            self.put(
                self.own_rate(t, p, Walk::Munmet),
                self.rate_fam(t, Walk::Munmet),
                mean,
                self.drift_var(Walk::Munmet),
                BoundSet::lo(vec![Aff::slot(self.own_unn(t))]),
                BoundSet::hi(vec![Aff::konst(ln_hi)]),
            );

            let mean = add_diff(
                Aff::slot(self.own_rate(t, ps, Walk::Uunmod)),
                self.parent_rate(t, p, Walk::Uunmod),
                self.parent_rate(t, ps, Walk::Uunmod),
            );
            self.put(
                self.own_rate(t, p, Walk::Uunmod),
                self.rate_fam(t, Walk::Uunmod),
                mean,
                self.drift_var(Walk::Uunmod),
                BoundSet::lo(vec![Aff::slot(self.own_unn(t))]),
                BoundSet::hi(vec![Aff::konst(ln_hi)]),
            );

            let mean = Aff::slot(self.own_rate(t, ps, Walk::Mfail))
                .plus(self.own_rate(t, p, Walk::Munmet))
                .minus(self.own_rate(t, ps, Walk::Munmet));
            let mut lo = vec![
                Aff::slot(self.own_rate(t, p, Walk::Mnn)),
                Aff::slot(self.own_rate(t, p, Walk::Munmet)),
                Aff::slot(self.own_rate(t, p, Walk::Uunmod)),
            ];
            let mut hi = vec![Aff::konst(ln_cap)];
            if let Some((e_lo, e_hi)) = env.clone() {
                lo.push(e_lo);
                hi.push(e_hi);
            }
            self.put(
                self.own_rate(t, p, Walk::Mfail),
                self.rate_fam(t, Walk::Mfail),
                mean,
                self.drift_var(Walk::Mfail),
                BoundSet::lo(lo),
                BoundSet::hi(hi),
            );
        }

        // modern-use gap, bounded so the derived rate stays between the
        // intended rate and the unmet-need rate in every period
        let gamma_mean = match t {
            Tier::Super(_) => Aff::konst(0.0).plus(self.atlas.w_umod()).minus(self.atlas.w_uunmod()),
            Tier::Region(r) => Aff::slot(self.atlas.q_gamma(self.atlas.super_of_region[r])),
            Tier::Country(c) => Aff::slot(self.atlas.r_gamma(self.atlas.region_of_country[c])),
        };
        let gamma_fam = match t {
            Tier::Country(_) => Fam::T3,
            _ => Fam::Normal,
        };
        let gamma_lo = (1..=self.atlas.n_p)
            .map(|p| Aff::slot(self.own_unn(t)).minus(self.own_rate(t, p, Walk::Uunmod)))
            .collect();
        self.put(
            self.own_gamma(t),
            gamma_fam,
            gamma_mean,
            self.gamma_var(t),
            BoundSet::lo(gamma_lo),
            BoundSet::hi(vec![Aff::konst(0.0)]),
        );

        // super regions anchor the traditional-use telescope
        if let Tier::Super(q) = t {
            self.put(
                self.atlas.q_trad0(q),
                Fam::Normal,
                Aff::slot(self.atlas.w_mtrad()),
                Scale::SdSlot(self.atlas.sig_rate_region(RegionSig::Uu)),
                BoundSet::lo(vec![Aff::konst(self.k.trad_floor.ln())]),
                BoundSet::hi(vec![Aff::slot(self.atlas.w_munmet())]),
            );
        }

        // propensity ladder
        let eps = k.lambda_eps;
        self.put(
            self.own_lam_m(t, p0),
            Fam::Normal,
            Aff::slot(self.parent_lam_m(t, p0)),
            self.lam_var(t, PropSig::LamM),
            BoundSet::lo(vec![Aff::konst(eps)]),
            BoundSet::hi(vec![Aff::konst(1.0 - eps)]),
        );
        for &p in self.atlas.outward.clone().iter().skip(1) {
            let ps = self.neighbor(p);
            let mean = add_diff(
                Aff::slot(self.own_lam_m(t, ps)),
                self.parent_lam_m(t, p),
                self.parent_lam_m(t, ps),
            );
            self.put(
                self.own_lam_m(t, p),
                Fam::Normal,
                mean,
                self.lam_var(t, PropSig::CapM),
                BoundSet::lo(vec![Aff::konst(eps)]),
                BoundSet::hi(vec![Aff::konst(1.0 - eps)]),
            );
        }
        let mean = Aff::slot(self.own_lam_m(t, p0))
            .plus(self.parent_lam_u0(t))
            .minus(self.parent_lam_m(t, p0));
        let (lo, hi) = if matches!(t, Tier::Country(_)) {
            // the unmarried level is carried along the married path, so its
            // reference value must keep every derived period value inside
            // the open unit interval
            let lo = (1..=self.atlas.n_p)
                .map(|p| {
                    if p == p0 {
                        Aff::konst(eps)
                    } else {
                        Aff::konst(eps).plus(self.own_lam_m(t, p0)).minus(self.own_lam_m(t, p))
                    }
                })
                .collect();
            let hi = (1..=self.atlas.n_p)
                .map(|p| {
                    if p == p0 {
                        Aff::konst(1.0 - eps)
                    } else {
                        Aff::konst(1.0 - eps).plus(self.own_lam_m(t, p0)).minus(self.own_lam_m(t, p))
                    }
                })
                .collect();
            (BoundSet::lo(lo), BoundSet::hi(hi))
        } else {
            (
                BoundSet::lo(vec![Aff::konst(eps)]),
                BoundSet::hi(vec![Aff::konst(1.0 - eps)]),
            )
        };
        self.put(
            self.own_lam_u0(t),
            Fam::Normal,
            mean,
            self.lam_var(t, PropSig::LamU),
            lo,
            hi,
        );
    }

    fn world_block(&mut self) {
        let k = self.k;
        let a = self.atlas;
        let (ln_lo, ln_hi, ln_cap) = (k.rate_lo.ln(), k.rate_hi.ln(), k.failure_cap.ln());
        let ln_tfloor = k.trad_floor.ln();
        let unb = BoundSet::none();
        let uni = |lo: Vec<Aff>, hi: Vec<Aff>| (Fam::Uniform, Aff::konst(0.0), Scale::Const(1.0), BoundSet::lo(lo), BoundSet::hi(hi));

        let (f, m, v, lo, hi) = uni(vec![Aff::konst(ln_lo)], vec![Aff::konst(ln_hi)]);
        self.put(a.w_mnn(a.p0), f, m, v, lo, hi);
        let (f, m, v, lo, hi) = uni(vec![Aff::konst(ln_lo)], vec![Aff::slot(a.w_mnn(a.p0))]);
        self.put(a.w_unn(), f, m, v, lo, hi);
        let (f, m, v, lo, hi) = uni(vec![Aff::slot(a.w_unn())], vec![Aff::konst(ln_hi)]);
        self.put(a.w_uunmod(), f, m, v, lo, hi);
        let (f, m, v, lo, hi) = uni(vec![Aff::slot(a.w_unn())], vec![Aff::slot(a.w_uunmod())]);
        self.put(a.w_umod(), f, m, v, lo, hi);
        let (f, m, v, lo, hi) = uni(
            vec![Aff::slot(a.w_unn()), Aff::konst(ln_tfloor)],
            vec![Aff::konst(ln_hi)],
        );
        self.put(a.w_munmet(), f, m, v, lo, hi);
        self.put(
            a.w_mtrad(),
            Fam::Normal,
            Aff::konst(k.trad_mean.ln()),
            Scale::Const(k.trad_sd * k.trad_sd),
            BoundSet::lo(vec![Aff::konst(ln_tfloor)]),
            BoundSet::hi(vec![Aff::slot(a.w_munmet())]),
        );
        let (f, m, v, lo, hi) = uni(
            vec![Aff::slot(a.w_mnn(a.p0)), Aff::slot(a.w_munmet()), Aff::slot(a.w_uunmod())],
            vec![Aff::konst(ln_cap)],
        );
        self.put(a.w_mfail(), f, m, v, lo, hi);
        for &p in a.outward.clone().iter().skip(1) {
            let ps = self.neighbor(p);
            self.put(
                a.w_mnn(p),
                Fam::Normal,
                Aff::slot(a.w_mnn(ps)),
                Scale::SdSlot(a.sig_drift(DriftSig::Tied)),
                BoundSet::lo(vec![Aff::slot(a.w_unn())]),
                BoundSet::hi(vec![Aff::konst(ln_hi)]),
            );
        }
        self.put(
            a.w_lam_m(),
            Fam::LogisticUniform { a: k.lambda_eps, b: 1.0 - k.lambda_eps },
            Aff::konst(0.0),
            Scale::Const(1.0),
            unb.clone(),
            unb,
        );
        self.put(
            a.w_lam_u(),
            Fam::Normal,
            Aff::slot(a.w_lam_m()),
            Scale::Const(k.world_lambda_sd * k.world_lambda_sd),
            BoundSet::lo(vec![Aff::konst(k.lambda_eps)]),
            BoundSet::hi(vec![Aff::konst(1.0 - k.lambda_eps)]),
        );
    }

    fn globals(&mut self) {
        let k = self.k;
        let a = self.atlas;
        let norm = |mean: f64, sd: f64| (Fam::Normal, Aff::konst(mean), Scale::Const(sd * sd));

        for sig in [RegionSig::Mnn, RegionSig::Munmet, RegionSig::Unn, RegionSig::Uu] {
            let (f, m, v) = norm(k.sigma_rate_region_mean, k.sigma_rate_region_sd);
            self.put(
                a.sig_rate_region(sig),
                f,
                m,
                v,
                BoundSet::lo(vec![Aff::konst(k.sigma_rate_region_lo)]),
                BoundSet::hi(vec![Aff::konst(k.sigma_rate_region_hi)]),
            );
        }
        for (sig, upper) in [
            (CountrySig::Mnn, RegionSig::Mnn),
            (CountrySig::Munmet, RegionSig::Munmet),
            (CountrySig::Unn, RegionSig::Unn),
            (CountrySig::Umod, RegionSig::Uu),
        ] {
            let (f, m, v) = norm(k.sigma_rate_mean, k.sigma_rate_sd);
            self.put(
                a.sig_rate_country(sig),
                f,
                m,
                v,
                BoundSet::lo(vec![Aff::konst(k.sigma_rate_lo)]),
                BoundSet::hi(vec![Aff::slot(a.sig_rate_region(upper))]),
            );
        }
        for sig in [DriftSig::Tied, DriftSig::Mfail, DriftSig::Uunmod] {
            let (f, m, v) = norm(k.sigma_drift_region_mean, k.sigma_drift_region_sd);
            let mut hi = vec![Aff::konst(k.sigma_drift_region_hi)];
            if sig == DriftSig::Mfail {
                hi.push(Aff::slot(a.sig_drift(DriftSig::Tied)));
            }
            self.put(
                a.sig_drift(sig),
                f,
                m,
                v,
                BoundSet::lo(vec![Aff::konst(k.sigma_drift_region_lo)]),
                BoundSet::hi(hi),
            );
        }
        for (sig, hi) in [
            (PropSig::LamM, BoundSet::hi(vec![Aff::konst(k.sigma_prop_region_hi)])),
            (PropSig::LamU, BoundSet::hi(vec![Aff::slot(a.sig_prop_region(PropSig::LamM))])),
            (PropSig::CapM, BoundSet::hi(vec![Aff::slot(a.sig_prop_region(PropSig::LamM))])),
        ] {
            let (f, m, v) = norm(k.sigma_prop_region_mean, k.sigma_prop_region_sd);
            self.put(
                a.sig_prop_region(sig),
                f,
                m,
                v,
                BoundSet::lo(vec![Aff::konst(k.sigma_prop_region_lo)]),
                hi,
            );
        }
        for (sig, hi) in [
            (
                PropSig::LamM,
                BoundSet::hi(vec![Aff::slot(a.sig_prop_region(PropSig::LamM))]),
            ),
            (
                PropSig::LamU,
                BoundSet::hi_max(vec![
                    Aff::slot(a.sig_prop_region(PropSig::LamU)),
                    Aff::slot(a.sig_prop_country(PropSig::LamM)),
                ]),
            ),
            (
                PropSig::CapM,
                BoundSet::hi(vec![Aff::slot(a.sig_prop_region(PropSig::CapM))]),
            ),
        ] {
            let (f, m, v) = norm(k.sigma_prop_mean, k.sigma_prop_sd);
            self.put(
                a.sig_prop_country(sig),
                f,
                m,
                v,
                BoundSet::lo(vec![Aff::konst(k.sigma_prop_lo)]),
                hi,
            );
        }
        for q in 0..a.n_q {
            let (f, m, v) = norm(k.recall_mean_5, k.recall_sd_5);
            self.put(
                a.recall_mu5(q),
                f,
                m,
                v,
                BoundSet::lo(vec![Aff::konst(0.0)]),
                BoundSet::none(),
            );
            let (f, m, v) = norm(k.recall_mean_3, k.recall_sd_3);
            self.put(
                a.recall_mu3(q),
                f,
                m,
                v,
                BoundSet::lo(vec![Aff::konst(0.0)]),
                BoundSet::hi(vec![Aff::slot(a.recall_mu5(q))]),
            );
        }
        for s in [a.ns_all(), a.ns_sub(), a.nonrep()] {
            let (f, m, v) = norm(k.ns_scale_mean, k.ns_scale_sd);
            self.put(
                s,
                f,
                m,
                v,
                BoundSet::lo(vec![Aff::konst(k.ns_scale_lo)]),
                BoundSet::hi(vec![Aff::konst(k.ns_scale_hi)]),
            );
        }
        self.put(
            a.pi(),
            Fam::Normal,
            Aff::konst(k.pi_mean),
            Scale::Const(k.pi_var),
            BoundSet::lo(vec![Aff::konst(k.pi_lo)]),
            BoundSet::hi(vec![Aff::konst(k.pi_hi)]),
        );
        let official = |slot: Slot, this: &mut Self| {
            this.put(
                slot,
                Fam::Normal,
                Aff::konst(k.iota_official_mean),
                Scale::Const(k.iota_official_var),
                BoundSet::lo(vec![Aff::konst(k.iota_official_lo)]),
                BoundSet::hi(vec![Aff::konst(k.iota_official_hi)]),
            );
        };
        for r in 0..a.n_r {
            let s = a.iota_of_region(r);
            if matches!(a.role(s), SlotRole::IotaRegion { .. }) {
                official(s, self);
            }
        }
        official(a.iota_other(), self);
        self.put(
            a.iota_survey(),
            Fam::Normal,
            Aff::konst(k.iota_survey_mean),
            Scale::Const(k.iota_survey_var),
            BoundSet::lo(vec![Aff::konst(k.iota_survey_lo)]),
            BoundSet::hi(vec![Aff::konst(k.iota_survey_hi)]),
        );
        self.put(
            a.iota_survey_bias(),
            Fam::Normal,
            Aff::konst(k.iota_survey_bias_mean),
            Scale::Const(k.iota_survey_bias_var),
            BoundSet::lo(vec![Aff::konst(k.iota_survey_bias_lo)]),
            BoundSet::hi(vec![Aff::konst(k.iota_survey_bias_hi)]),
        );
        self.put(
            a.beta_survey(),
            Fam::Normal,
            Aff::konst(k.survey_report_mean),
            Scale::SdSlot(a.iota_survey_bias()),
            BoundSet::lo(vec![Aff::konst(k.survey_report_lo)]),
            BoundSet::hi(vec![Aff::konst(k.survey_report_hi)]),
        );
        self.put(
            a.eta_indirect(),
            Fam::Uniform,
            Aff::konst(0.0),
            Scale::Const(1.0),
            BoundSet::lo(vec![Aff::konst(k.eta_indirect_lo)]),
            BoundSet::hi(vec![Aff::konst(k.eta_indirect_hi)]),
        );
        self.put(
            a.eta_direct(),
            Fam::Normal,
            Aff::konst(k.eta_direct_mean),
            Scale::VarSlot(a.eta_indirect()),
            BoundSet::lo(vec![Aff::konst(k.eta_direct_lo)]),
            BoundSet::hi(vec![Aff::konst(k.eta_direct_hi)]),
        );
        self.put(
            a.iota_prop(),
            Fam::Normal,
            Aff::konst(k.iota_prop_mean),
            Scale::Const(k.iota_prop_sd * k.iota_prop_sd),
            BoundSet::lo(vec![Aff::konst(k.iota_prop_lo)]),
            BoundSet::hi(vec![Aff::konst(k.iota_prop_hi)]),
        );
    }
}

impl PriorGraph {
    pub fn build(atlas: &Atlas, k: &ModelConstants) -> Result<Self> {
        let mut e = Emitter {
            atlas,
            k,
            out: vec![None; atlas.n_slots],
        };
        e.globals();
        e.world_block();
        for q in 0..atlas.n_q {
            e.rate_block(Tier::Super(q));
        }
        for r in 0..atlas.n_r {
            e.rate_block(Tier::Region(r));
        }
        for c in 0..atlas.n_c {
            e.rate_block(Tier::Country(c));
        }

        let mut factors = Vec::with_capacity(atlas.n_slots);
        for (i, f) in e.out.into_iter().enumerate() {
            let f = f.ok_or_else(|| Error::Internal(format!("slot {i} has no prior factor")))?;
            if f.x as usize != i {
                return Err(Error::Internal(format!("factor misfiled at slot {i}")));
            }
            for p in f.parent_slots() {
                if p as usize >= i {
                    return Err(Error::Internal(format!(
                        "factor {} reads slot {p} that is not sampled before it",
                        f.label
                    )));
                }
            }
            factors.push(f);
        }

        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); atlas.n_slots];
        for (i, f) in factors.iter().enumerate() {
            adj[f.x as usize].push(i as u32);
            for p in f.parent_slots() {
                adj[p as usize].push(i as u32);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(PriorGraph { factors, adj })
    }
}
