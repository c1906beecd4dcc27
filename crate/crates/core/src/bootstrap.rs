//! Nonparametric bootstrap over the whole estimation pipeline.
//!
//! Each replicate resamples subjects with replacement within each
//! randomized arm, refits every weight model and recomputes every stratum
//! effect. Replicate `b` draws from the stream `seed -> bootstrap b`, so the
//! replicate values do not depend on the number of worker threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{estimate_frame, AnalysisOptions, PointEstimate, StratumEstimate};
use crate::frame::Frame;
use crate::rng::{Domain, Seed};
use crate::stats::{quantile_sorted, sample_sd, Z_975};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// `point +/- 1.96 se`.
    #[default]
    Normal,
    /// 2.5% and 97.5% quantiles of the replicate estimates.
    Percentile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: Seed,
    pub ci: CiMethod,
    /// Largest tolerated fraction of failed replicates.
    pub max_failure_rate: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 1000,
            seed: Seed(1),
            ci: CiMethod::Normal,
            max_failure_rate: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Successful replicate estimates in replicate order.
    pub estimates: Vec<f64>,
    pub se: f64,
    pub ci: [f64; 2],
    pub n_failed: usize,
}

/// Draws a resample stratified by arm.
pub fn resample_indices<R: Rng>(treated: &[usize], control: &[usize], rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(treated.len() + control.len());
    for group in [treated, control] {
        for _ in 0..group.len() {
            out.push(group[rng.random_range(0..group.len())]);
        }
    }
    out
}

/// Runs the replicates on a frame. Returns, per replicate, the per-stratum
/// points or `None` for a failed replicate.
pub fn replicate_points(frame: &Frame, opts: &AnalysisOptions, replicates: usize, seed: Seed) -> Vec<Option<Vec<f64>>> {
    let (treated, control) = frame.arm_indices();
    let run = |b: usize| {
        let mut rng = seed.child(Domain::Bootstrap, b as u64).rng();
        let idx = resample_indices(&treated, &control, &mut rng);
        let sample = frame.gather(&idx);
        estimate_frame(&sample, opts)
            .ok()
            .map(|v| v.into_iter().map(|p| p.point).collect())
    };
    // Nested inside a parallel simulation the outer loop already saturates
    // the pool; stay sequential there.
    if rayon::current_thread_index().is_some() {
        (0..replicates).map(run).collect()
    } else {
        (0..replicates).into_par_iter().map(run).collect()
    }
}

/// Summarizes replicates into per-stratum results around `points`.
pub fn summarize(
    points: &[PointEstimate],
    replicates: &[Option<Vec<f64>>],
    cfg: &BootstrapConfig,
) -> Result<Vec<BootstrapResult>> {
    let total = replicates.len();
    let n_failed = replicates.iter().filter(|r| r.is_none()).count();
    if n_failed as f64 > cfg.max_failure_rate * total as f64 || total - n_failed < 2 {
        return Err(Error::TooManyFailures {
            failed: n_failed,
            total,
        });
    }
    Ok(points
        .iter()
        .enumerate()
        .map(|(k, pe)| {
            let estimates: Vec<f64> = replicates.iter().flatten().map(|v| v[k]).collect();
            let se = sample_sd(&estimates);
            let ci = match cfg.ci {
                CiMethod::Normal => [pe.point - Z_975 * se, pe.point + Z_975 * se],
                CiMethod::Percentile => {
                    let mut sorted = estimates.clone();
                    sorted.sort_by(f64::total_cmp);
                    [quantile_sorted(&sorted, 0.025), quantile_sorted(&sorted, 0.975)]
                }
            };
            BootstrapResult {
                estimates,
                se,
                ci,
                n_failed,
            }
        })
        .collect())
}

/// Bootstrap standard errors and intervals for every stratum.
pub fn bootstrap_estimate(ds: &Dataset, opts: &AnalysisOptions, cfg: &BootstrapConfig) -> Result<Vec<BootstrapResult>> {
    if cfg.replicates < 2 {
        return Err(Error::InvalidConfig("need at least 2 bootstrap replicates".into()));
    }
    let frame = Frame::from_dataset(ds);
    let points = estimate_frame(&frame, opts)?;
    let reps = replicate_points(&frame, opts, cfg.replicates, cfg.seed);
    summarize(&points, &reps, cfg)
}

/// Point estimates with bootstrap SE and CI filled in.
pub fn analyze(ds: &Dataset, opts: &AnalysisOptions, cfg: &BootstrapConfig) -> Result<Vec<StratumEstimate>> {
    if cfg.replicates < 2 {
        return Err(Error::InvalidConfig("need at least 2 bootstrap replicates".into()));
    }
    let frame = Frame::from_dataset(ds);
    let points = estimate_frame(&frame, opts)?;
    let reps = replicate_points(&frame, opts, cfg.replicates, cfg.seed);
    let boot = summarize(&points, &reps, cfg)?;
    Ok(points
        .iter()
        .zip(boot)
        .enumerate()
        .map(|(k, (pe, b))| StratumEstimate {
            stratum: k + 1,
            label: ds.stratum_labels()[k].clone(),
            effect_type: opts.effect,
            point: pe.point,
            se: Some(b.se),
            ci: Some(b.ci),
            n_eff: pe.n_eff,
            strategy: opts.strategy,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EffectiveSize;

    #[test]
    fn stratified_resample_preserves_arm_sizes() {
        let treated = [0, 2, 4, 6];
        let control = [1, 3, 5];
        let mut rng = Seed(9).rng();
        let idx = resample_indices(&treated, &control, &mut rng);
        assert_eq!(idx.len(), 7);
        assert!(idx[..4].iter().all(|i| treated.contains(i)));
        assert!(idx[4..].iter().all(|i| control.contains(i)));
    }

    fn pe(point: f64) -> PointEstimate {
        PointEstimate {
            point,
            n_eff: EffectiveSize {
                treated: 1.0,
                control: 1.0,
            },
        }
    }

    #[test]
    fn constant_replicates_have_zero_se() {
        let reps = vec![Some(vec![0.25]); 50];
        let r = summarize(&[pe(0.25)], &reps, &BootstrapConfig::default()).unwrap();
        assert_eq!(r[0].se, 0.0);
        assert_eq!(r[0].ci, [0.25, 0.25]);
        assert_eq!(r[0].n_failed, 0);
    }

    #[test]
    fn failures_are_counted_and_capped() {
        let mut reps: Vec<Option<Vec<f64>>> = (0..20).map(|i| Some(vec![i as f64])).collect();
        reps[3] = None;
        let r = summarize(&[pe(1.0)], &reps, &BootstrapConfig::default()).unwrap();
        assert_eq!(r[0].n_failed, 1);
        assert_eq!(r[0].estimates.len() + r[0].n_failed, 20);
        reps[..3].fill(None);
        assert!(matches!(
            summarize(&[pe(1.0)], &reps, &BootstrapConfig::default()),
            Err(Error::TooManyFailures { failed: 4, total: 20 })
        ));
    }

    #[test]
    fn percentile_interval_brackets_replicates() {
        let reps: Vec<Option<Vec<f64>>> = (0..=100).map(|i| Some(vec![i as f64 / 100.0])).collect();
        let cfg = BootstrapConfig {
            ci: CiMethod::Percentile,
            ..Default::default()
        };
        let r = summarize(&[pe(0.5)], &reps, &cfg).unwrap();
        assert!((r[0].ci[0] - 0.025).abs() < 1e-12);
        assert!((r[0].ci[1] - 0.975).abs() < 1e-12);
    }
}
