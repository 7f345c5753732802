//! Fixed model constants with their default values.
//!
//! Every field can be overridden from the `[constants]` table of a run
//! configuration; the TOML key is the field name. Values marked "variance"
//! are variances, values marked "sd" are standard deviations, matching how
//! each prior is written.

use crate::accounts::{MISCARRIAGE_ABORTION_FACTOR, MISCARRIAGE_BIRTH_FACTOR};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConstants {
    /// `loss_per_abortion`: pregnancies per abortion in the flow identity.
    pub loss_per_abortion: f64,
    /// `loss_per_birth`: pregnancies per birth in the flow identity.
    pub loss_per_birth: f64,

    /// `rate_floor`: hard lower envelope for any pregnancy rate per woman-year.
    pub rate_floor: f64,
    /// `rate_ceiling`: hard upper envelope for any pregnancy rate per woman-year.
    pub rate_ceiling: f64,
    /// `rate_lo`: natural-scale base of the log(.001) truncation bound.
    pub rate_lo: f64,
    /// `rate_hi`: natural-scale base of the log(1.1) truncation bound.
    pub rate_hi: f64,
    /// `failure_cap`: natural-scale base of the log(5) bound on method-failure rates.
    pub failure_cap: f64,

    /// `trad_mean`: prior median of the world traditional-method failure rate.
    pub trad_mean: f64,
    /// `trad_sd`: sd of the log-scale prior on the world traditional rate.
    pub trad_sd: f64,
    /// `trad_floor`: natural-scale lower bound on traditional rates.
    pub trad_floor: f64,

    /// `recall_mean_3`: mean of log recall-bias multiplier at 3-year recall.
    pub recall_mean_3: f64,
    /// `recall_sd_3`: sd of log recall-bias multiplier at 3-year recall.
    pub recall_sd_3: f64,
    /// `recall_mean_5`: mean of log recall-bias multiplier at 5-year recall.
    pub recall_mean_5: f64,
    /// `recall_sd_5`: sd of log recall-bias multiplier at 5-year recall.
    pub recall_sd_5: f64,

    /// `survey_report_mean`: prior mean share of abortions reported in surveys.
    pub survey_report_mean: f64,
    /// `survey_report_lo`: lower truncation of the survey reporting share.
    pub survey_report_lo: f64,
    /// `survey_report_hi`: upper truncation of the survey reporting share.
    pub survey_report_hi: f64,

    /// `lambda_eps`: half-width trimmed off the (0,1) support of propensities.
    pub lambda_eps: f64,
    /// `world_lambda_sd`: sd of the world unmarried propensity around the married one.
    pub world_lambda_sd: f64,

    /// `sigma_rate_mean`: prior mean of country-level rate sds.
    pub sigma_rate_mean: f64,
    /// `sigma_rate_sd`: prior sd of country-level rate sds.
    pub sigma_rate_sd: f64,
    /// `sigma_rate_lo`: lower truncation of country-level rate sds.
    pub sigma_rate_lo: f64,
    /// `sigma_rate_region_mean`: prior mean of regional rate sds.
    pub sigma_rate_region_mean: f64,
    /// `sigma_rate_region_sd`: prior sd of regional rate sds.
    pub sigma_rate_region_sd: f64,
    /// `sigma_rate_region_lo`: lower truncation of regional rate sds.
    pub sigma_rate_region_lo: f64,
    /// `sigma_rate_region_hi`: upper truncation of regional rate sds.
    pub sigma_rate_region_hi: f64,

    /// `sigma_drift_region_mean`: prior mean of time-trend sds (shared across levels).
    pub sigma_drift_region_mean: f64,
    /// `sigma_drift_region_sd`: prior sd of time-trend sds.
    pub sigma_drift_region_sd: f64,
    /// `sigma_drift_region_lo`: lower truncation of time-trend sds.
    pub sigma_drift_region_lo: f64,
    /// `sigma_drift_region_hi`: upper truncation of time-trend sds.
    pub sigma_drift_region_hi: f64,

    /// `sigma_prop_mean`: prior mean of country-level propensity sds.
    pub sigma_prop_mean: f64,
    /// `sigma_prop_sd`: prior sd of country-level propensity sds.
    pub sigma_prop_sd: f64,
    /// `sigma_prop_lo`: lower truncation of country-level propensity sds.
    pub sigma_prop_lo: f64,
    /// `sigma_prop_region_mean`: prior mean of regional propensity sds.
    pub sigma_prop_region_mean: f64,
    /// `sigma_prop_region_sd`: prior sd of regional propensity sds.
    pub sigma_prop_region_sd: f64,
    /// `sigma_prop_region_lo`: lower truncation of regional propensity sds.
    pub sigma_prop_region_lo: f64,
    /// `sigma_prop_region_hi`: upper truncation of regional propensity sds.
    pub sigma_prop_region_hi: f64,

    /// `ns_scale_mean`: prior mean of sqrt non-sampling variance multipliers.
    pub ns_scale_mean: f64,
    /// `ns_scale_sd`: prior sd of sqrt non-sampling variance multipliers.
    pub ns_scale_sd: f64,
    /// `ns_scale_lo`: lower truncation of sqrt variance multipliers.
    pub ns_scale_lo: f64,
    /// `ns_scale_hi`: upper truncation of sqrt variance multipliers.
    pub ns_scale_hi: f64,

    /// `pi_mean`: prior mean of the non-representative-study variance inflation.
    pub pi_mean: f64,
    /// `pi_var`: prior variance of the variance inflation.
    pub pi_var: f64,
    /// `pi_lo`: lower truncation of the variance inflation.
    pub pi_lo: f64,
    /// `pi_hi`: upper truncation of the variance inflation.
    pub pi_hi: f64,

    /// `iota_official_mean`: prior mean of official-statistics error scales.
    pub iota_official_mean: f64,
    /// `iota_official_var`: prior variance of official error scales.
    pub iota_official_var: f64,
    /// `iota_official_lo`: lower truncation of official error scales.
    pub iota_official_lo: f64,
    /// `iota_official_hi`: upper truncation of official error scales.
    pub iota_official_hi: f64,

    /// `iota_survey_mean`: prior mean of the survey error scale.
    pub iota_survey_mean: f64,
    /// `iota_survey_var`: prior variance of the survey error scale.
    pub iota_survey_var: f64,
    /// `iota_survey_lo`: lower truncation of the survey error scale.
    pub iota_survey_lo: f64,
    /// `iota_survey_hi`: upper truncation of the survey error scale.
    pub iota_survey_hi: f64,

    /// `iota_survey_bias_mean`: prior mean of the survey reporting-share sd.
    pub iota_survey_bias_mean: f64,
    /// `iota_survey_bias_var`: prior variance of the survey reporting-share sd.
    pub iota_survey_bias_var: f64,
    /// `iota_survey_bias_lo`: lower truncation of the survey reporting-share sd.
    pub iota_survey_bias_lo: f64,
    /// `iota_survey_bias_hi`: upper truncation of the survey reporting-share sd.
    pub iota_survey_bias_hi: f64,

    /// `eta_indirect_lo`: lower end of the uniform prior on the indirect-method sd.
    pub eta_indirect_lo: f64,
    /// `eta_indirect_hi`: upper end of the uniform prior on the indirect-method sd.
    pub eta_indirect_hi: f64,
    /// `eta_direct_mean`: prior mean of the direct-component error scale.
    pub eta_direct_mean: f64,
    /// `eta_direct_lo`: lower truncation of the direct-component error scale.
    pub eta_direct_lo: f64,
    /// `eta_direct_hi`: upper truncation of the direct-component error scale.
    pub eta_direct_hi: f64,

    /// `iota_prop_mean`: prior mean of the married-share error scale.
    pub iota_prop_mean: f64,
    /// `iota_prop_sd`: prior sd of the married-share error scale.
    pub iota_prop_sd: f64,
    /// `iota_prop_lo`: lower truncation of the married-share error scale.
    pub iota_prop_lo: f64,
    /// `iota_prop_hi`: upper truncation of the married-share error scale.
    pub iota_prop_hi: f64,

    /// `births_sd_vr`: log-scale sd of birth counts under complete vital registration.
    pub births_sd_vr: f64,
    /// `births_sd_other`: log-scale sd of birth counts elsewhere.
    pub births_sd_other: f64,
}

impl Default for ModelConstants {
    fn default() -> Self {
        Self {
            loss_per_abortion: MISCARRIAGE_ABORTION_FACTOR,
            loss_per_birth: MISCARRIAGE_BIRTH_FACTOR,
            rate_floor: 1e-4,
            rate_ceiling: 5.0,
            rate_lo: 0.001,
            rate_hi: 1.1,
            failure_cap: 5.0,
            trad_mean: 0.23,
            trad_sd: 0.5,
            trad_floor: 0.061,
            recall_mean_3: 1.1f64.ln(),
            recall_sd_3: 0.05,
            recall_mean_5: 1.2f64.ln(),
            recall_sd_5: 0.05,
            survey_report_mean: 0.65,
            survey_report_lo: 0.0475,
            survey_report_hi: 1.0,
            lambda_eps: 1e-6,
            world_lambda_sd: 0.5,
            sigma_rate_mean: 0.01,
            sigma_rate_sd: 0.5,
            sigma_rate_lo: 0.01,
            sigma_rate_region_mean: 0.001,
            sigma_rate_region_sd: 0.5,
            sigma_rate_region_lo: 0.001,
            sigma_rate_region_hi: 3.0,
            sigma_drift_region_mean: 0.01,
            sigma_drift_region_sd: 0.5,
            sigma_drift_region_lo: 0.01,
            sigma_drift_region_hi: 1.0,
            sigma_prop_mean: 0.001,
            sigma_prop_sd: 0.5,
            sigma_prop_lo: 0.001,
            sigma_prop_region_mean: 0.001,
            sigma_prop_region_sd: 0.5,
            sigma_prop_region_lo: 0.001,
            sigma_prop_region_hi: 3.0,
            ns_scale_mean: 0.01,
            ns_scale_sd: 0.5,
            ns_scale_lo: 0.01,
            ns_scale_hi: 4.0,
            pi_mean: 0.01,
            pi_var: 4.0,
            pi_lo: 0.01,
            pi_hi: 4.0,
            iota_official_mean: 0.025,
            iota_official_var: 4.0,
            iota_official_lo: 0.025,
            iota_official_hi: 1.0,
            iota_survey_mean: 0.05,
            iota_survey_var: 4.0,
            iota_survey_lo: 0.05,
            iota_survey_hi: 1.0,
            iota_survey_bias_mean: 0.125,
            iota_survey_bias_var: 4.0,
            iota_survey_bias_lo: 0.125,
            iota_survey_bias_hi: 1.0,
            eta_indirect_lo: 0.1,
            eta_indirect_hi: 0.2,
            eta_direct_mean: 0.05,
            eta_direct_lo: 0.05,
            eta_direct_hi: 1.0,
            iota_prop_mean: 0.01,
            iota_prop_sd: 0.5,
            iota_prop_lo: 0.01,
            iota_prop_hi: 4.0,
            births_sd_vr: 0.025,
            births_sd_other: 0.05,
        }
    }
}

impl ModelConstants {
    /// Upper bound on the abortion propensity implied by the loss factor.
    pub fn alpha_cap(&self) -> f64 {
        1.0 / self.loss_per_abortion
    }

    pub fn validate(&self) -> Result<()> {
        let positive: [(&str, f64); 10] = [
            ("loss_per_abortion", self.loss_per_abortion),
            ("loss_per_birth", self.loss_per_birth),
            ("trad_sd", self.trad_sd),
            ("recall_sd_3", self.recall_sd_3),
            ("recall_sd_5", self.recall_sd_5),
            ("world_lambda_sd", self.world_lambda_sd),
            ("pi_var", self.pi_var),
            ("iota_official_var", self.iota_official_var),
            ("iota_survey_var", self.iota_survey_var),
            ("iota_survey_bias_var", self.iota_survey_bias_var),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("constant {name} must be positive, got {v}")));
            }
        }
        let ordered: [(&str, f64, f64); 12] = [
            ("rate_floor < rate_ceiling", self.rate_floor, self.rate_ceiling),
            ("rate_lo < rate_hi", self.rate_lo, self.rate_hi),
            ("rate_hi <= failure_cap", self.rate_hi, self.failure_cap),
            ("trad_floor < trad_mean", self.trad_floor, self.trad_mean),
            (
                "survey_report_lo < survey_report_hi",
                self.survey_report_lo,
                self.survey_report_hi,
            ),
            (
                "sigma_rate_region_lo < sigma_rate_region_hi",
                self.sigma_rate_region_lo,
                self.sigma_rate_region_hi,
            ),
            (
                "sigma_drift_region_lo < sigma_drift_region_hi",
                self.sigma_drift_region_lo,
                self.sigma_drift_region_hi,
            ),
            (
                "sigma_prop_region_lo < sigma_prop_region_hi",
                self.sigma_prop_region_lo,
                self.sigma_prop_region_hi,
            ),
            ("ns_scale_lo < ns_scale_hi", self.ns_scale_lo, self.ns_scale_hi),
            ("pi_lo < pi_hi", self.pi_lo, self.pi_hi),
            (
                "eta_indirect_lo < eta_indirect_hi",
                self.eta_indirect_lo,
                self.eta_indirect_hi,
            ),
            ("eta_direct_lo < eta_direct_hi", self.eta_direct_lo, self.eta_direct_hi),
        ];
        for (name, lo, hi) in ordered {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!(
                    "constants must satisfy {name}, got {lo} vs {hi}"
                )));
            }
        }
        if !(self.rate_lo > 0.0 && self.rate_floor > 0.0 && self.trad_floor > 0.0) {
            return Err(Error::Config("rate bounds must be positive".into()));
        }
        if !(self.lambda_eps > 0.0 && self.lambda_eps < 0.5) {
            return Err(Error::Config(format!(
                "lambda_eps must lie in (0, 0.5), got {}",
                self.lambda_eps
            )));
        }
        if !(self.births_sd_vr > 0.0 && self.births_sd_other > 0.0) {
            return Err(Error::Config("birth-count sds must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_match_published_values() {
        let k = ModelConstants::default();
        k.validate().unwrap();
        assert_eq!(k.loss_per_abortion, 1.1);
        assert_eq!(k.loss_per_birth, 1.2);
        assert_eq!(k.rate_lo, 0.001);
        assert_eq!(k.rate_hi, 1.1);
        assert_eq!(k.failure_cap, 5.0);
        assert_eq!(k.trad_mean, 0.23);
        assert_eq!(k.trad_floor, 0.061);
        assert_eq!(k.survey_report_mean, 0.65);
        assert_eq!(k.births_sd_vr, 0.025);
        assert!((k.alpha_cap() - 1.0 / 1.1).abs() < 1e-15);
    }

    #[test]
    fn partial_toml_override_keeps_other_defaults() {
        let k: ModelConstants = toml::from_str("trad_mean = 0.3\nrate_ceiling = 6.0").unwrap();
        assert_eq!(k.trad_mean, 0.3);
        assert_eq!(k.rate_ceiling, 6.0);
        assert_eq!(k.rate_lo, 0.001);
        k.validate().unwrap();
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(toml::from_str::<ModelConstants>("no_such_constant = 1.0").is_err());
    }

    #[test]
    fn bad_orderings_rejected() {
        let mut k = ModelConstants::default();
        k.rate_floor = 10.0;
        assert!(k.validate().is_err());
        let mut k = ModelConstants::default();
        k.lambda_eps = 0.7;
        assert!(k.validate().is_err());
    }
}
