//! The sampler core: transforms, configuration, chain driver, and draws.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dist;
use crate::error::{Error, Result};

/// Proposal scale for one coordinate. Proposals are Gaussian steps on the
/// transformed axis; the Jacobian of the inverse map enters the acceptance
/// ratio so the chain targets the density on the original axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    /// unbounded coordinates
    Identity,
    /// positive coordinates
    Log,
    /// coordinates confined to a fixed open interval
    Logit { lo: f64, hi: f64 },
}

impl Transform {
    pub fn forward(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Log => x.ln(),
            Transform::Logit { lo, hi } => dist::logit((x - lo) / (hi - lo)),
        }
    }

    pub fn inverse(self, z: f64) -> f64 {
        match self {
            Transform::Identity => z,
            Transform::Log => z.exp(),
            Transform::Logit { lo, hi } => lo + (hi - lo) * dist::logistic(z),
        }
    }

    /// Log of |dx/dz| evaluated at x.
    pub fn log_jacobian(self, x: f64) -> f64 {
        match self {
            Transform::Identity => 0.0,
            Transform::Log => x.ln(),
            Transform::Logit { lo, hi } => (x - lo).ln() + (hi - x).ln() - (hi - lo).ln(),
        }
    }
}

/// Log of the Metropolis acceptance ratio for a move of one coordinate from
/// `old` to `new` under transform `t`, where `delta` is the log-density
/// change on the original axis.
pub(crate) fn log_accept_ratio(delta: f64, t: Transform, old: f64, new: f64) -> f64 {
    delta + t.log_jacobian(new) - t.log_jacobian(old)
}

/// Run-length, adaptation, and reproducibility settings for one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// independent chains; at least two so convergence can be assessed
    pub chains: usize,
    /// full sweeps per chain, burn-in included
    pub iterations: usize,
    /// sweeps discarded from the front of each chain
    pub burn_in: usize,
    /// keep every `thin`-th post-burn-in sweep
    pub thin: usize,
    /// sweeps per step-size adaptation batch
    pub adapt_window: usize,
    /// acceptance rate the adaptation steers toward
    pub target_accept: f64,
    /// initial proposal step on the transformed scale
    pub init_step: f64,
    /// base seed; chain k draws from stream seed + k
    pub seed: u64,
    /// attempts to find a feasible initial state before giving up
    pub max_init_attempts: usize,
    /// visit coordinates in shuffled order each sweep instead of fixed order
    pub random_scan: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 4,
            iterations: 50_000,
            burn_in: 25_000,
            thin: 5,
            adapt_window: 50,
            target_accept: 0.44,
            init_step: 0.1,
            seed: 0,
            max_init_attempts: 1000,
            random_scan: false,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains < 2 {
            return Err(Error::Config("at least two chains are required".into()));
        }
        if self.burn_in > self.iterations {
            return Err(Error::Config(format!(
                "burn-in {} exceeds iteration count {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 || self.adapt_window == 0 {
            return Err(Error::Config("thinning and adaptation window must be positive".into()));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::Config(format!(
                "target acceptance {} outside (0, 1)",
                self.target_accept
            )));
        }
        if !(self.init_step > 0.0) || self.max_init_attempts == 0 {
            return Err(Error::Config("step size and init attempts must be positive".into()));
        }
        Ok(())
    }

    /// Retained draws per chain.
    pub fn n_retained(&self) -> usize {
        let kept = self.iterations - self.burn_in;
        kept.div_ceil(self.thin)
    }
}

/// A joint density the engine can sample from.
pub trait Target: Sync {
    /// Number of free coordinates.
    fn dim(&self) -> usize;

    /// Reporting name of coordinate `i`.
    fn name(&self, i: usize) -> String;

    /// Proposal transform for coordinate `i`.
    fn transform(&self, i: usize) -> Transform;

    /// Draw a state with finite log-density.
    fn init(&self, rng: &mut ChaCha8Rng, max_attempts: usize) -> Result<Vec<f64>>;

    /// Per-chain evaluation state positioned at `x`.
    fn session(&self, x: Vec<f64>) -> Result<Box<dyn Session + '_>>;
}

/// Mutable per-chain evaluation state. Implementations may cache partial
/// sums so that staging a single-coordinate move costs far less than a
/// full density evaluation.
pub trait Session {
    /// Current state vector.
    fn state(&self) -> &[f64];

    /// Log-density of the current state.
    fn log_density(&self) -> f64;

    /// Log-density change if coordinate `i` took value `v`. The move is
    /// staged: it must be either committed or rolled back before the next
    /// call to `stage`.
    fn stage(&mut self, i: usize, v: f64) -> f64;

    /// Keep the staged move.
    fn commit(&mut self);

    /// Discard the staged move.
    fn rollback(&mut self);
}

/// Target over a plain density function; staging recomputes the full
/// density. Suited to small models, oracles, and examples.
pub struct FnTarget<F: Fn(&[f64]) -> f64 + Sync> {
    pub names: Vec<String>,
    pub transforms: Vec<Transform>,
    pub start: Vec<f64>,
    pub log_density: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Target for FnTarget<F> {
    fn dim(&self) -> usize {
        self.start.len()
    }

    fn name(&self, i: usize) -> String {
        self.names[i].clone()
    }

    fn transform(&self, i: usize) -> Transform {
        self.transforms[i]
    }

    fn init(&self, _rng: &mut ChaCha8Rng, _max_attempts: usize) -> Result<Vec<f64>> {
        if !(self.log_density)(&self.start).is_finite() {
            return Err(Error::Infeasible(
                "starting point has non-finite log-density".into(),
            ));
        }
        Ok(self.start.clone())
    }

    fn session(&self, x: Vec<f64>) -> Result<Box<dyn Session + '_>> {
        let cur = (self.log_density)(&x);
        Ok(Box::new(FnSession { log_density: &self.log_density, x, cur, staged: None }))
    }
}

struct FnSession<'a, F: Fn(&[f64]) -> f64> {
    log_density: &'a F,
    x: Vec<f64>,
    cur: f64,
    staged: Option<(usize, f64, f64)>,
}

impl<F: Fn(&[f64]) -> f64> Session for FnSession<'_, F> {
    fn state(&self) -> &[f64] {
        &self.x
    }

    fn log_density(&self) -> f64 {
        self.cur
    }

    fn stage(&mut self, i: usize, v: f64) -> f64 {
        debug_assert!(self.staged.is_none(), "staged move not resolved");
        let old = self.x[i];
        self.x[i] = v;
        let new = (self.log_density)(&self.x);
        self.staged = Some((i, old, new));
        new - self.cur
    }

    fn commit(&mut self) {
        let (_, _, new) = self.staged.take().expect("no staged move");
        self.cur = new;
    }

    fn rollback(&mut self) {
        let (i, old, _) = self.staged.take().expect("no staged move");
        self.x[i] = old;
    }
}

/// Retained states and bookkeeping for one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    /// row-major draws, `n_draws` rows of `dim` values
    pub values: Vec<f64>,
    pub n_draws: usize,
    /// per-coordinate acceptance fraction over the whole run
    pub acceptance: Vec<f64>,
    /// per-coordinate proposal steps after adaptation froze
    pub step_sizes: Vec<f64>,
    /// wall-clock seconds; informational only, never written to outputs
    pub seconds: f64,
}

/// Posterior draws from all chains of one run.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    names: Vec<String>,
    chains: Vec<ChainDraws>,
}

impl PosteriorDraws {
    pub fn new(names: Vec<String>, chains: Vec<ChainDraws>) -> Result<Self> {
        let dim = names.len();
        for (k, ch) in chains.iter().enumerate() {
            if ch.values.len() != ch.n_draws * dim {
                return Err(Error::Structural(format!(
                    "chain {k}: {} values do not form {} draws of {dim}",
                    ch.values.len(),
                    ch.n_draws
                )));
            }
            if ch.n_draws != chains[0].n_draws {
                return Err(Error::Structural("chains carry unequal draw counts".into()));
            }
        }
        Ok(PosteriorDraws { names, chains })
    }

    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    /// Retained draws per chain.
    pub fn n_draws(&self) -> usize {
        self.chains.first().map_or(0, |c| c.n_draws)
    }

    pub fn n_params(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn chains(&self) -> &[ChainDraws] {
        &self.chains
    }

    #[inline]
    pub fn value(&self, chain: usize, draw: usize, param: usize) -> f64 {
        self.chains[chain].values[draw * self.names.len() + param]
    }

    /// One parameter's trajectory within one chain.
    pub fn chain_series(&self, chain: usize, param: usize) -> Vec<f64> {
        (0..self.n_draws()).map(|d| self.value(chain, d, param)).collect()
    }

    /// One parameter's draws pooled across chains, chain-major.
    pub fn pooled(&self, param: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_chains() * self.n_draws());
        for c in 0..self.n_chains() {
            for d in 0..self.n_draws() {
                out.push(self.value(c, d, param));
            }
        }
        out
    }
}

/// Sample the target. Chains run concurrently, each fully determined by
/// `cfg.seed` plus its chain index.
pub fn run<T: Target + ?Sized>(target: &T, cfg: &SamplerConfig) -> Result<PosteriorDraws> {
    cfg.validate()?;
    let names = (0..target.dim()).map(|i| target.name(i)).collect();
    let chains = (0..cfg.chains)
        .into_par_iter()
        .map(|k| run_chain(target, cfg, k))
        .collect::<Result<Vec<_>>>()?;
    PosteriorDraws::new(names, chains)
}

fn run_chain<T: Target + ?Sized>(target: &T, cfg: &SamplerConfig, chain: usize) -> Result<ChainDraws> {
    let start = Instant::now();
    let dim = target.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(chain as u64));
    let transforms: Vec<Transform> = (0..dim).map(|i| target.transform(i)).collect();

    let init = target.init(&mut rng, cfg.max_init_attempts)?;
    let mut sess = target.session(init)?;
    if !sess.log_density().is_finite() {
        return Err(Error::Infeasible(format!(
            "chain {chain}: initial state has non-finite log-density"
        )));
    }

    let mut steps = vec![cfg.init_step; dim];
    let mut accepted = vec![0u64; dim];
    let mut proposed = vec![0u64; dim];
    let mut batch_accepted = vec![0u64; dim];
    let mut batch_proposed = vec![0u64; dim];
    let mut order: Vec<usize> = (0..dim).collect();
    let mut values = Vec::with_capacity(cfg.n_retained() * dim);
    let mut n_draws = 0usize;

    for iter in 0..cfg.iterations {
        if cfg.random_scan {
            order.shuffle(&mut rng);
        }
        for &i in &order {
            let old = sess.state()[i];
            let t = transforms[i];
            let z = t.forward(old) + steps[i] * dist::sample_std_normal(&mut rng);
            let v = t.inverse(z);
            proposed[i] += 1;
            batch_proposed[i] += 1;
            let delta = sess.stage(i, v);
            if delta.is_nan() {
                return Err(Error::Internal(format!(
                    "chain {chain}: log-density change is NaN at coordinate {} = {v}",
                    target.name(i)
                )));
            }
            let log_alpha = log_accept_ratio(delta, t, old, v);
            let u: f64 = rng.gen();
            if u.max(f64::MIN_POSITIVE).ln() < log_alpha {
                sess.commit();
                accepted[i] += 1;
                batch_accepted[i] += 1;
            } else {
                sess.rollback();
            }
        }

        // step-size adaptation, burn-in only; frozen afterwards so the
        // retained draws come from a fixed kernel
        if iter < cfg.burn_in && (iter + 1) % cfg.adapt_window == 0 {
            let batch = (iter + 1) / cfg.adapt_window;
            let gain = (batch as f64).powf(-0.5).min(1.0);
            for i in 0..dim {
                if batch_proposed[i] > 0 {
                    let rate = batch_accepted[i] as f64 / batch_proposed[i] as f64;
                    steps[i] *= ((rate - cfg.target_accept) * gain).exp();
                }
                batch_accepted[i] = 0;
                batch_proposed[i] = 0;
            }
        }

        if iter >= cfg.burn_in && (iter - cfg.burn_in) % cfg.thin == 0 {
            values.extend_from_slice(sess.state());
            n_draws += 1;
        }
    }

    let acceptance = accepted
        .iter()
        .zip(&proposed)
        .map(|(&a, &p)| if p == 0 { 0.0 } else { a as f64 / p as f64 })
        .collect();
    Ok(ChainDraws {
        values,
        n_draws,
        acceptance,
        step_sizes: steps,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::diagnostics::diagnostics;
    use proptest::prelude::*;

    fn std_normal_target() -> FnTarget<impl Fn(&[f64]) -> f64 + Sync> {
        FnTarget {
            names: vec!["x".into()],
            transforms: vec![Transform::Identity],
            start: vec![0.3],
            log_density: |x: &[f64]| -0.5 * x[0] * x[0],
        }
    }

    #[test]
    fn standard_normal_moments_match() {
        let cfg = SamplerConfig {
            chains: 2,
            iterations: 30_000,
            burn_in: 5_000,
            thin: 1,
            seed: 42,
            ..SamplerConfig::default()
        };
        let draws = run(&std_normal_target(), &cfg).unwrap();
        let xs = draws.pooled(0);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);

        let ess = diagnostics(&draws).unwrap()[0].ess;
        assert!(ess > 100.0, "ess {ess}");
        let se = (var / ess).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean} vs se {se}");
        assert!((var.sqrt() - 1.0).abs() < 0.05, "sd {}", var.sqrt());

        // adaptation should have homed in on the target acceptance rate
        for ch in draws.chains() {
            assert!((0.25..0.65).contains(&ch.acceptance[0]), "{}", ch.acceptance[0]);
        }
    }

    #[test]
    fn conjugate_posterior_matches_closed_form() {
        // prior N(m0, v0) on a log-rate, one observation y ~ N(x, v)
        let (m0, v0) = (-1.0, 0.25);
        let (y, v) = (-0.4, 0.09);
        let target = FnTarget {
            names: vec!["log_rate".into()],
            transforms: vec![Transform::Identity],
            start: vec![m0],
            log_density: move |x: &[f64]| {
                let prior = -0.5 * (x[0] - m0).powi(2) / v0;
                let lik = -0.5 * (y - x[0]).powi(2) / v;
                prior + lik
            },
        };
        let post_var = 1.0 / (1.0 / v0 + 1.0 / v);
        let post_mean = post_var * (m0 / v0 + y / v);

        let cfg = SamplerConfig {
            chains: 2,
            iterations: 30_000,
            burn_in: 5_000,
            thin: 1,
            seed: 7,
            ..SamplerConfig::default()
        };
        let draws = run(&target, &cfg).unwrap();
        let xs = draws.pooled(0);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);

        let ess = diagnostics(&draws).unwrap()[0].ess;
        let se = (var / ess).sqrt();
        assert!((mean - post_mean).abs() < 3.0 * se, "mean {mean} vs {post_mean}");
        assert!((var.sqrt() / post_var.sqrt() - 1.0).abs() < 0.05);
    }

    #[test]
    fn zero_retained_draws_is_not_an_error() {
        let cfg = SamplerConfig {
            chains: 2,
            iterations: 200,
            burn_in: 200,
            thin: 5,
            seed: 1,
            ..SamplerConfig::default()
        };
        let draws = run(&std_normal_target(), &cfg).unwrap();
        assert_eq!(draws.n_draws(), 0);
        assert_eq!(draws.pooled(0), Vec::<f64>::new());
    }

    #[test]
    fn identical_seeds_reproduce_bitwise() {
        let cfg = SamplerConfig {
            chains: 2,
            iterations: 500,
            burn_in: 100,
            thin: 2,
            seed: 99,
            ..SamplerConfig::default()
        };
        let a = run(&std_normal_target(), &cfg).unwrap();
        let b = run(&std_normal_target(), &cfg).unwrap();
        for (ca, cb) in a.chains().iter().zip(b.chains()) {
            assert_eq!(ca.values, cb.values);
            assert_eq!(ca.step_sizes, cb.step_sizes);
        }
        // chains with different indices follow different streams
        assert_ne!(a.chains()[0].values, a.chains()[1].values);

        let other = SamplerConfig { seed: 100, ..cfg };
        let c = run(&std_normal_target(), &other).unwrap();
        assert_ne!(a.chains()[0].values, c.chains()[0].values);
    }

    #[test]
    fn adaptation_freezes_at_burn_in() {
        let base = SamplerConfig {
            chains: 2,
            iterations: 2_100,
            burn_in: 2_000,
            thin: 1,
            seed: 5,
            ..SamplerConfig::default()
        };
        let short = run(&std_normal_target(), &base).unwrap();
        let long = run(
            &std_normal_target(),
            &SamplerConfig { iterations: 12_000, ..base },
        )
        .unwrap();
        // same burn-in, very different post-burn-in lengths: if adaptation
        // kept going the final steps would differ
        for (s, l) in short.chains().iter().zip(long.chains()) {
            assert_eq!(s.step_sizes, l.step_sizes);
        }
    }

    #[test]
    fn acceptance_ratio_satisfies_detailed_balance() {
        // two coupled coordinates, one log- and one logit-transformed
        let logp = |x: &[f64]| {
            -0.5 * (x[0].ln() + 1.0).powi(2) - 0.5 * ((x[1] - 0.3) * 10.0).powi(2)
                + (x[0] * x[1]).sin()
        };
        let target = FnTarget {
            names: vec!["a".into(), "b".into()],
            transforms: vec![Transform::Log, Transform::Logit { lo: 0.0, hi: 1.0 }],
            start: vec![0.5, 0.4],
            log_density: logp,
        };
        let mut sess = target.session(vec![0.5, 0.4]).unwrap();
        for (i, old, new) in [(0usize, 0.5, 0.9), (1, 0.4, 0.7), (0, 0.5, 0.02), (1, 0.4, 0.11)] {
            let t = target.transform(i);
            let fwd = sess.stage(i, new);
            sess.rollback();
            // evaluate the reverse move from a session positioned at the end state
            let mut x_end = sess.state().to_vec();
            x_end[i] = new;
            let mut back = target.session(x_end).unwrap();
            let bwd = back.stage(i, old);
            back.rollback();

            assert!((fwd + bwd).abs() <= 1e-12, "stage deltas disagree: {fwd} vs {bwd}");
            let la_fwd = log_accept_ratio(fwd, t, old, new);
            let la_bwd = log_accept_ratio(bwd, t, new, old);
            // Metropolis identity: A(x,y)/A(y,x) = pi_z(y)/pi_z(x)
            let lhs = la_fwd.min(0.0) - la_bwd.min(0.0);
            assert!((lhs - la_fwd).abs() <= 1e-12, "{lhs} vs {la_fwd}");
        }
    }

    #[test]
    fn config_validation_rejects_bad_settings() {
        let ok = SamplerConfig::default();
        assert!(ok.validate().is_ok());
        assert!(SamplerConfig { chains: 1, ..ok.clone() }.validate().is_err());
        assert!(SamplerConfig { burn_in: 60_000, ..ok.clone() }.validate().is_err());
        assert!(SamplerConfig { thin: 0, ..ok.clone() }.validate().is_err());
        assert!(SamplerConfig { target_accept: 1.0, ..ok.clone() }.validate().is_err());
        assert!(SamplerConfig { init_step: 0.0, ..ok.clone() }.validate().is_err());
        assert_eq!(ok.n_retained(), 5_000);
    }

    #[test]
    fn random_scan_still_reproduces() {
        let cfg = SamplerConfig {
            chains: 2,
            iterations: 400,
            burn_in: 100,
            thin: 1,
            seed: 3,
            random_scan: true,
            ..SamplerConfig::default()
        };
        let target = FnTarget {
            names: vec!["a".into(), "b".into()],
            transforms: vec![Transform::Identity, Transform::Identity],
            start: vec![0.0, 0.0],
            log_density: |x: &[f64]| -0.5 * (x[0] * x[0] + x[1] * x[1]),
        };
        let a = run(&target, &cfg).unwrap();
        let b = run(&target, &cfg).unwrap();
        assert_eq!(a.chains()[0].values, b.chains()[0].values);
    }

    proptest! {
        #[test]
        fn transforms_round_trip(x in 1e-6f64..1e6) {
            let t = Transform::Log;
            prop_assert!((t.inverse(t.forward(x)) - x).abs() / x < 1e-12);
        }

        #[test]
        fn logit_round_trips_and_stays_inside(u in 0.001f64..0.999, lo in -3.0f64..0.0, width in 0.5f64..4.0) {
            let t = Transform::Logit { lo, hi: lo + width };
            let x = lo + width * u;
            let back = t.inverse(t.forward(x));
            prop_assert!((back - x).abs() < 1e-9 * width.max(1.0));
            prop_assert!(back > lo && back < lo + width);
        }

        #[test]
        fn jacobians_match_numeric_derivatives(z in -3.0f64..3.0) {
            for t in [Transform::Identity, Transform::Log, Transform::Logit { lo: 0.2, hi: 1.7 }] {
                let h = 1e-6;
                let dx = (t.inverse(z + h) - t.inverse(z - h)) / (2.0 * h);
                let x = t.inverse(z);
                prop_assert!((t.log_jacobian(x) - dx.ln()).abs() < 1e-5);
            }
        }
    }
}
