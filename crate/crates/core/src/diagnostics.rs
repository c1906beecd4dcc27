//! Covariate balance between each treated stratum and its weighted controls.
//!
//! Balance is measured by the absolute standardized mean difference (ASMD).
//! To judge whether the remaining imbalance is acceptable for a small
//! stratum, the observed number of covariates above a threshold is set
//! against the number expected in a randomized trial of the same size: in
//! such a trial the ASMD is approximately `|N(0, 1/n1 + 1/n0)|`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::stats::normal_cdf;
use crate::weights::WeightedDataset;

fn weighted_moments(values: &[f64], weights: &[f64]) -> Result<(f64, f64)> {
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: values.len(),
            got: weights.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::AllZeroWeights);
    }
    let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
    let var = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - mean) * (v - mean))
        .sum::<f64>()
        / total;
    Ok((mean, var))
}

/// `|m1 - m0| / sqrt((v1 + v0) / 2)` with weighted means and variances
/// (variances use normalized weights, no small-sample correction).
///
/// Two constant samples with different values give `f64::INFINITY`.
pub fn asmd(values_1: &[f64], weights_1: &[f64], values_0: &[f64], weights_0: &[f64]) -> Result<f64> {
    let (m1, v1) = weighted_moments(values_1, weights_1)?;
    let (m0, v0) = weighted_moments(values_0, weights_0)?;
    let diff = (m1 - m0).abs();
    let pooled = ((v1 + v0) / 2.0).sqrt();
    if pooled == 0.0 {
        return Ok(if diff == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(diff / pooled)
}

/// Expected number of covariates with ASMD above `threshold` in a
/// randomized trial with arm sizes `n_1` and `n_0`.
pub fn expected_exceedances(n_1: f64, n_0: f64, num_covariates: usize, threshold: f64) -> Result<f64> {
    if n_1 < 2.0 || n_0 < 2.0 {
        return Err(Error::InvalidConfig(format!(
            "arm sizes must be at least 2, got {n_1} and {n_0}"
        )));
    }
    let se = (1.0 / n_1 + 1.0 / n_0).sqrt();
    // two-sided tail 2(1 - Phi(z)) = 2 Phi(-z), without cancellation
    Ok(num_covariates as f64 * 2.0 * normal_cdf(-threshold / se))
}

/// Kish effective sample size `(sum w)^2 / sum w^2`.
pub fn effective_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateBalance {
    pub covariate: String,
    pub adjusted: f64,
    pub unadjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exceedance {
    pub threshold: f64,
    pub observed_adjusted: usize,
    pub observed_unadjusted: usize,
    /// Benchmark with the Kish effective sizes of the two pseudo-populations.
    pub expected_effective: f64,
    /// Benchmark with both arms the size of the treated stratum (1:1 trial).
    pub expected_stratum_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumBalance {
    pub stratum: usize,
    pub label: String,
    pub covariates: Vec<CovariateBalance>,
    pub n_effective_treated: f64,
    pub n_effective_control: f64,
    /// Rounded total weight of the treated pseudo-population.
    pub n_stratum: f64,
    pub exceedances: Vec<Exceedance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub thresholds: Vec<f64>,
    pub strata: Vec<StratumBalance>,
}

impl BalanceReport {
    /// Long format `stratum,covariate,adjusted,unadjusted`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["stratum", "covariate", "adjusted", "unadjusted"])?;
        for s in &self.strata {
            for c in &s.covariates {
                w.write_record([
                    s.label.clone(),
                    c.covariate.clone(),
                    c.adjusted.to_string(),
                    c.unadjusted.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub const DEFAULT_THRESHOLDS: [f64; 2] = [0.1, 0.25];

/// Adjusted balance compares the treated pseudo-population (observed
/// members at weight 1 plus missing-status subjects at `w_a1`) with the
/// control arm weighted by `w_a0`. Unadjusted balance compares the observed
/// stratum members with the unweighted control arm.
pub fn balance_report(ds: &Dataset, wd: &WeightedDataset, thresholds: &[f64]) -> Result<BalanceReport> {
    let frame = Frame::from_dataset(ds);
    if wd.len() != frame.len() {
        return Err(Error::DimensionMismatch {
            expected: frame.len(),
            got: wd.len(),
        });
    }
    let names = ds.covariate_names();
    let k = names.len();
    let (treated, control) = frame.arm_indices();
    let column = |rows: &[usize], c: usize| -> Vec<f64> { rows.iter().map(|&i| frame.covariates(i)[c]).collect() };
    let ctrl_unit = vec![1.0; control.len()];

    let mut strata = Vec::with_capacity(ds.num_strata());
    for a in 1..=ds.num_strata() {
        let wt: Vec<f64> = treated.iter().map(|&i| wd.weight(i, a)).collect();
        let wc: Vec<f64> = control.iter().map(|&i| wd.weight(i, a)).collect();
        let raw: Vec<usize> = treated
            .iter()
            .copied()
            .filter(|&i| frame.stratum(i) == Some(a))
            .collect();
        let raw_unit = vec![1.0; raw.len()];

        let mut covariates = Vec::with_capacity(k);
        for (c, name) in names.iter().enumerate() {
            let adjusted = asmd(&column(&treated, c), &wt, &column(&control, c), &wc)?;
            let unadjusted = asmd(&column(&raw, c), &raw_unit, &column(&control, c), &ctrl_unit)?;
            covariates.push(CovariateBalance {
                covariate: name.clone(),
                adjusted,
                unadjusted,
            });
        }

        let n_t = effective_size(&wt);
        let n_c = effective_size(&wc);
        let n_stratum = wt.iter().sum::<f64>().round();
        let mut exceedances = Vec::with_capacity(thresholds.len());
        for &t in thresholds {
            exceedances.push(Exceedance {
                threshold: t,
                observed_adjusted: covariates.iter().filter(|c| c.adjusted > t).count(),
                observed_unadjusted: covariates.iter().filter(|c| c.unadjusted > t).count(),
                expected_effective: expected_exceedances(n_t.round().max(2.0), n_c.round().max(2.0), k, t)?,
                expected_stratum_size: expected_exceedances(n_stratum.max(2.0), n_stratum.max(2.0), k, t)?,
            });
        }
        strata.push(StratumBalance {
            stratum: a,
            label: ds.stratum_labels()[a - 1].clone(),
            covariates,
            n_effective_treated: n_t,
            n_effective_control: n_c,
            n_stratum,
            exceedances,
        });
    }
    Ok(BalanceReport {
        thresholds: thresholds.to_vec(),
        strata,
    })
}
