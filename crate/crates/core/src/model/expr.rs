//! Expression vocabulary for prior factors.
//!
//! Every prior statement in the model is "one coordinate follows a location
//! family (or uniform) whose mean, variance, and truncation bounds are
//! simple expressions of earlier coordinates". Keeping those expressions as
//! data (rather than closures) lets the graph derive slot-to-factor
//! adjacency mechanically, which the coordinate-wise sampler depends on.

use crate::dist;
use crate::error::{Error, Result};
use rand_chacha::ChaCha8Rng;

/// Index of one scalar coordinate in the parameter vector.
pub type Slot = u32;

/// Affine form `k + sum(x[plus]) - sum(x[minus])`.
#[derive(Debug, Clone, Default)]
pub struct Aff {
    pub k: f64,
    pub plus: Vec<Slot>,
    pub minus: Vec<Slot>,
}

impl Aff {
    pub fn konst(k: f64) -> Self {
        Aff {
            k,
            ..Default::default()
        }
    }

    pub fn slot(s: Slot) -> Self {
        Aff {
            k: 0.0,
            plus: vec![s],
            minus: vec![],
        }
    }

    pub fn plus(mut self, s: Slot) -> Self {
        self.plus.push(s);
        self
    }

    pub fn minus(mut self, s: Slot) -> Self {
        self.minus.push(s);
        self
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.k;
        for &s in &self.plus {
            v += x[s as usize];
        }
        for &s in &self.minus {
            v -= x[s as usize];
        }
        v
    }

    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        self.plus.iter().chain(self.minus.iter()).copied()
    }
}

/// A truncation bound: the max (or min) over affine terms. An empty term
/// list means the bound is absent.
#[derive(Debug, Clone)]
pub struct BoundSet {
    pub terms: Vec<Aff>,
    pub take_max: bool,
}

impl BoundSet {
    pub fn none() -> Self {
        BoundSet {
            terms: vec![],
            take_max: false,
        }
    }

    /// Lower bound: max over terms.
    pub fn lo(terms: Vec<Aff>) -> Self {
        BoundSet {
            terms,
            take_max: true,
        }
    }

    /// Upper bound: min over terms.
    pub fn hi(terms: Vec<Aff>) -> Self {
        BoundSet {
            terms,
            take_max: false,
        }
    }

    /// Upper bound that is a max of terms (used where a prior allows the
    /// looser of two scales).
    pub fn hi_max(terms: Vec<Aff>) -> Self {
        BoundSet {
            terms,
            take_max: true,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], empty: f64) -> f64 {
        let mut it = self.terms.iter();
        let first = match it.next() {
            Some(t) => t.eval(x),
            None => return empty,
        };
        it.fold(first, |acc, t| {
            let v = t.eval(x);
            if self.take_max {
                acc.max(v)
            } else {
                acc.min(v)
            }
        })
    }

    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        self.terms.iter().flat_map(|t| t.slots())
    }
}

/// Variance of a factor.
#[derive(Debug, Clone, Copy)]
pub enum Scale {
    /// fixed variance
    Const(f64),
    /// variance = x[slot]^2 (slot stores a standard deviation)
    SdSlot(Slot),
    /// variance = x[slot] (slot stores a variance)
    VarSlot(Slot),
}

impl Scale {
    #[inline]
    pub fn variance(&self, x: &[f64]) -> f64 {
        match *self {
            Scale::Const(v) => v,
            Scale::SdSlot(s) => {
                let sd = x[s as usize];
                sd * sd
            }
            Scale::VarSlot(s) => x[s as usize],
        }
    }

    pub fn slots(&self) -> impl Iterator<Item = Slot> {
        match *self {
            Scale::Const(_) => None.into_iter(),
            Scale::SdSlot(s) | Scale::VarSlot(s) => Some(s).into_iter(),
        }
    }
}

/// Distribution family of a factor.
#[derive(Debug, Clone, Copy)]
pub enum Fam {
    Normal,
    T3,
    Uniform,
    /// The logistic transform of a U(a, b) variate; density
    /// 1/((b-a) x (1-x)) on (logistic(a), logistic(b)).
    LogisticUniform { a: f64, b: f64 },
}

/// One prior statement: coordinate `x` follows `fam` with the given mean,
/// variance, and truncation, all conditional on earlier coordinates.
#[derive(Debug, Clone)]
pub struct Factor {
    pub x: Slot,
    pub fam: Fam,
    pub mean: Aff,
    pub var: Scale,
    pub lo: BoundSet,
    pub hi: BoundSet,
    pub label: String,
}

impl Factor {
    /// Log-density of the coordinate's current value given its parents.
    /// Any violated or degenerate truncation yields −∞.
    pub fn lpdf(&self, x: &[f64]) -> f64 {
        let v = x[self.x as usize];
        let lo = self.lo.eval(x, f64::NEG_INFINITY);
        let hi = self.hi.eval(x, f64::INFINITY);
        match self.fam {
            Fam::Normal => {
                dist::trunc_normal_lpdf(v, self.mean.eval(x), self.var.variance(x).sqrt(), lo, hi)
            }
            Fam::T3 => dist::trunc_t3_lpdf(v, self.mean.eval(x), self.var.variance(x), lo, hi),
            Fam::Uniform => dist::uniform_lpdf(v, lo, hi),
            Fam::LogisticUniform { a, b } => {
                let (xlo, xhi) = (dist::logistic(a), dist::logistic(b));
                if !(v > xlo && v < xhi) {
                    return f64::NEG_INFINITY;
                }
                -(b - a).ln() - v.ln() - (1.0 - v).ln()
            }
        }
    }

    /// Forward draw of the coordinate given its parents.
    pub fn sample(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Result<f64> {
        use rand::Rng;
        let lo = self.lo.eval(x, f64::NEG_INFINITY);
        let hi = self.hi.eval(x, f64::INFINITY);
        match self.fam {
            Fam::Normal => {
                dist::sample_truncated_normal(rng, self.mean.eval(x), self.var.variance(x).sqrt(), lo, hi)
            }
            Fam::T3 => dist::sample_truncated_t3(rng, self.mean.eval(x), self.var.variance(x), lo, hi),
            Fam::Uniform => {
                if !(lo < hi) {
                    return Err(Error::InputDomain(format!(
                        "empty uniform support [{lo}, {hi}] for {}",
                        self.label
                    )));
                }
                Ok(lo + (hi - lo) * rng.gen::<f64>())
            }
            Fam::LogisticUniform { a, b } => Ok(dist::logistic(a + (b - a) * rng.gen::<f64>())),
        }
    }

    /// Every slot this factor reads, other than its own coordinate.
    pub fn parent_slots(&self) -> Vec<Slot> {
        let mut v: Vec<Slot> = self
            .mean
            .slots()
            .chain(self.var.slots())
            .chain(self.lo.slots())
            .chain(self.hi.slots())
            .collect();
        v.sort_unstable();
        v.dedup();
        v.retain(|&s| s != self.x);
        v
    }
}
