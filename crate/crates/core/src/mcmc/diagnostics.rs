//! Convergence diagnostics: split-chain shrink factor and effective
//! sample size from pooled autocorrelations.

use crate::error::{Error, Result};
use crate::mcmc::engine::PosteriorDraws;

/// Convergence summary for one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDiagnostics {
    pub name: String,
    /// potential scale reduction on split chains
    pub rhat: f64,
    /// effective sample size across all chains
    pub ess: f64,
    /// the parameter never moved in any chain
    pub zero_variance: bool,
}

/// Split each chain in half and compare within- and between-sequence
/// variation for every parameter.
pub fn diagnostics(draws: &PosteriorDraws) -> Result<Vec<ParamDiagnostics>> {
    if draws.n_chains() < 2 {
        return Err(Error::InputDomain(
            "diagnostics need at least two chains".into(),
        ));
    }
    if draws.n_draws() < 10 {
        return Err(Error::InputDomain(format!(
            "diagnostics need at least 10 retained draws per chain, got {}",
            draws.n_draws()
        )));
    }
    let half = draws.n_draws() / 2;
    let mut out = Vec::with_capacity(draws.n_params());
    for p in 0..draws.n_params() {
        let mut seqs: Vec<Vec<f64>> = Vec::with_capacity(2 * draws.n_chains());
        for c in 0..draws.n_chains() {
            let series = draws.chain_series(c, p);
            seqs.push(series[..half].to_vec());
            seqs.push(series[half..2 * half].to_vec());
        }
        out.push(param_diagnostics(draws.names()[p].clone(), &seqs));
    }
    Ok(out)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Autocovariance at lag `t`, normalized by sequence length.
fn autocov(xs: &[f64], m: f64, t: usize) -> f64 {
    let n = xs.len();
    (0..n - t).map(|i| (xs[i] - m) * (xs[i + t] - m)).sum::<f64>() / n as f64
}

fn param_diagnostics(name: String, seqs: &[Vec<f64>]) -> ParamDiagnostics {
    let n = seqs[0].len();
    let m = seqs.len();
    let means: Vec<f64> = seqs.iter().map(|s| mean(s)).collect();
    let w = seqs.iter().map(|s| sample_var(s)).sum::<f64>() / m as f64;
    let b_over_n = sample_var(&means);
    let var_plus = (n - 1) as f64 / n as f64 * w + b_over_n;

    if var_plus <= 0.0 || !var_plus.is_finite() {
        // every sequence is constant at the same value
        return ParamDiagnostics { name, rhat: 1.0, ess: 0.0, zero_variance: true };
    }
    if w <= 0.0 {
        // constant within every sequence but the sequences disagree
        return ParamDiagnostics { name, rhat: f64::INFINITY, ess: 0.0, zero_variance: false };
    }
    let rhat = (var_plus / w).sqrt();

    // pooled autocorrelations, summed over lag pairs until a pair goes
    // non-positive, with a monotone cap on the pair sums
    let max_lag = n - 1;
    let rho = |t: usize| {
        let acov = seqs
            .iter()
            .zip(&means)
            .map(|(s, &mu)| autocov(s, mu, t))
            .sum::<f64>()
            / m as f64;
        1.0 - (w - acov) / var_plus
    };
    let mut tau = -1.0 + 2.0 * (rho(0) + if max_lag >= 1 { rho(1) } else { 0.0 });
    let mut prev_pair = rho(0) + if max_lag >= 1 { rho(1) } else { 0.0 };
    let mut t = 2;
    while t + 1 <= max_lag {
        let mut pair = rho(t) + rho(t + 1);
        if pair <= 0.0 {
            break;
        }
        pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        t += 2;
    }
    let total = (m * n) as f64;
    let ess = (total / tau.max(1.0 / total)).min(total);
    ParamDiagnostics { name, rhat, ess, zero_variance: false }
}

/// The parameter with the largest shrink factor, ignoring constants.
pub fn max_rhat(diags: &[ParamDiagnostics]) -> Option<&ParamDiagnostics> {
    diags
        .iter()
        .filter(|d| !d.zero_variance)
        .max_by(|a, b| a.rhat.total_cmp(&b.rhat))
}

/// The parameter with the smallest effective sample size, ignoring constants.
pub fn min_ess(diags: &[ParamDiagnostics]) -> Option<&ParamDiagnostics> {
    diags
        .iter()
        .filter(|d| !d.zero_variance)
        .min_by(|a, b| a.ess.total_cmp(&b.ess))
}
