//! Stratum-specific treatment effects from weighted pseudo-populations.
//!
//! For stratum `a` the treated pseudo-population is every treated subject
//! with weight `w[i][a]` (1 for observed members of `a`, `w_a1` for subjects
//! with missing status, 0 otherwise) and the control pseudo-population is
//! the whole control arm with weight `w_a0`. The effect is a functional of
//! the two weighted outcome distributions: a difference of weighted means
//! for binary outcomes, or the log hazard ratio of a weighted Cox fit.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, EndpointKind};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::glm::{fit_logistic, FitOptions};
use crate::survival::CoxProblem;
use crate::weights::{WeightModelSet, WeightSpec, WeightedDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectType {
    RateDifference,
    LogHazardRatio,
}

impl EffectType {
    pub fn for_endpoint(kind: EndpointKind) -> EffectType {
        match kind {
            EndpointKind::Binary => EffectType::RateDifference,
            EndpointKind::TimeToEvent => EffectType::LogHazardRatio,
        }
    }
}

/// How treated subjects with missing stratum are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Reweight them by `w_a1(x, b)`.
    Proposed,
    /// Assign them all to one stratum (1-based), then weigh as if fully
    /// observed.
    ImputeAllToStratum(usize),
    /// Drop them; controls are reweighted toward subjects who would have
    /// had their status observed.
    CompleteCase,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Proposed => write!(f, "proposed"),
            Strategy::ImputeAllToStratum(a) => write!(f, "impute:{a}"),
            Strategy::CompleteCase => write!(f, "complete-case"),
        }
    }
}

/// Parses `proposed`, `complete-case` or `impute:<stratum>`. A stratum given
/// by label is resolved later against the dataset, so the number here is
/// only filled for numeric input.
impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Strategy::Proposed),
            "complete-case" | "complete_case" => Ok(Strategy::CompleteCase),
            _ => match s.strip_prefix("impute:") {
                Some(a) => a
                    .parse()
                    .map(Strategy::ImputeAllToStratum)
                    .map_err(|_| Error::InvalidConfig(format!("unknown stratum `{a}`"))),
                None => Err(Error::InvalidConfig(format!("unknown strategy `{s}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSize {
    pub treated: f64,
    pub control: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumEstimate {
    /// 1-based stratum number.
    pub stratum: usize,
    pub label: String,
    pub effect_type: EffectType,
    pub point: f64,
    pub se: Option<f64>,
    pub ci: Option<[f64; 2]>,
    /// Sums of weights in each pseudo-population.
    pub n_eff: EffectiveSize,
    pub strategy: Strategy,
}

/// Point estimate and pseudo-population sizes for one stratum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimate {
    pub point: f64,
    pub n_eff: EffectiveSize,
}

fn pseudo_population_sizes(frame: &Frame, weights: &[f64], a: usize) -> Result<EffectiveSize> {
    let (mut t, mut c) = (0.0, 0.0);
    for (i, &w) in weights.iter().enumerate() {
        if frame.is_treated(i) {
            t += w;
        } else {
            c += w;
        }
    }
    if !(t > 0.0) {
        return Err(Error::EmptyPseudoPopulation {
            stratum: a,
            arm: "treated",
        });
    }
    if !(c > 0.0) {
        return Err(Error::EmptyPseudoPopulation {
            stratum: a,
            arm: "control",
        });
    }
    Ok(EffectiveSize { treated: t, control: c })
}

/// Weighted mean outcome of the treated pseudo-population minus that of the
/// control pseudo-population.
fn rate_difference(frame: &Frame, weights: &[f64]) -> f64 {
    let (mut st, mut wt, mut sc, mut wc) = (0.0, 0.0, 0.0, 0.0);
    for (i, &w) in weights.iter().enumerate() {
        let y = frame.outcome(i);
        if frame.is_treated(i) {
            st += w * y;
            wt += w;
        } else {
            sc += w * y;
            wc += w;
        }
    }
    st / wt - sc / wc
}

/// Effects for every stratum from one set of weights. The Cox risk-set
/// ordering is shared across strata.
pub fn effects_from_weights(frame: &Frame, wd: &WeightedDataset, kind: EffectType) -> Result<Vec<PointEstimate>> {
    if wd.len() != frame.len() {
        return Err(Error::DimensionMismatch {
            expected: frame.len(),
            got: wd.len(),
        });
    }
    let cox = match kind {
        EffectType::LogHazardRatio => {
            if frame.endpoint() != EndpointKind::TimeToEvent {
                return Err(Error::WrongEndpointKind);
            }
            Some(CoxProblem::new(frame.outcomes(), frame.events(), frame.treated())?)
        }
        EffectType::RateDifference => None,
    };
    (1..=wd.num_strata())
        .map(|a| {
            let w = wd.stratum_column(a);
            let n_eff = pseudo_population_sizes(frame, &w, a)?;
            let point = match &cox {
                Some(problem) => problem.fit(&w)?.log_hazard_ratio,
                None => rate_difference(frame, &w),
            };
            Ok(PointEstimate { point, n_eff })
        })
        .collect()
}

/// Effect in stratum `a` (1-based) for a dataset and its weights.
pub fn estimate_stratum_effect(
    ds: &Dataset,
    wd: &WeightedDataset,
    a: usize,
    kind: EffectType,
) -> Result<StratumEstimate> {
    if a == 0 || a > ds.num_strata() {
        return Err(Error::InvalidConfig(format!("stratum {a} out of range")));
    }
    let frame = Frame::from_dataset(ds);
    let all = effects_from_weights(&frame, wd, kind)?;
    let pe = all[a - 1];
    Ok(StratumEstimate {
        stratum: a,
        label: ds.stratum_labels()[a - 1].clone(),
        effect_type: kind,
        point: pe.point,
        se: None,
        ci: None,
        n_eff: pe.n_eff,
        strategy: Strategy::Proposed,
    })
}

/// Everything needed to turn a frame into per-stratum effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub strategy: Strategy,
    pub weights: WeightSpec,
    pub effect: EffectType,
}

impl AnalysisOptions {
    pub fn new(endpoint: EndpointKind) -> Self {
        AnalysisOptions {
            strategy: Strategy::Proposed,
            weights: WeightSpec::default(),
            effect: EffectType::for_endpoint(endpoint),
        }
    }
}

/// Stratum weights under a sensitivity strategy. Returns the frame the
/// weights refer to (imputation rewrites strata).
pub fn strategy_weights(frame: &Frame, opts: &AnalysisOptions) -> Result<(Frame, WeightedDataset)> {
    match opts.strategy {
        Strategy::Proposed => {
            let ms = WeightModelSet::fit(frame, &opts.weights)?;
            let wd = ms.weigh(frame)?;
            Ok((frame.clone(), wd))
        }
        Strategy::ImputeAllToStratum(a) => {
            if a == 0 || a > frame.num_strata() {
                return Err(Error::InvalidConfig(format!("stratum {a} out of range")));
            }
            let imputed = frame.impute_missing(a);
            let ms = WeightModelSet::fit(&imputed, &opts.weights)?;
            let wd = ms.weigh(&imputed)?;
            Ok((imputed, wd))
        }
        Strategy::CompleteCase => {
            let ms = WeightModelSet::fit(frame, &opts.weights)?;
            let mut wd = ms.weigh(frame)?;
            complete_case_adjust(frame, &ms, &mut wd)?;
            Ok((frame.clone(), wd))
        }
    }
}

/// Zeroes the weights of treated subjects with missing status and tilts the
/// control weights by `P(M = 0 | x)`, fitted on the treated arm. Each
/// stratum's control weights are rescaled to keep their original total.
fn complete_case_adjust(frame: &Frame, ms: &WeightModelSet, wd: &mut WeightedDataset) -> Result<()> {
    let j = frame.num_strata();
    let treated: Vec<usize> = (0..frame.len()).filter(|&i| frame.is_treated(i)).collect();
    if !treated.iter().any(|&i| frame.is_missing(i)) {
        return Ok(());
    }
    let cols = &ms.covariates;
    let design = DMatrix::from_fn(treated.len(), 1 + cols.len(), |r, c| {
        if c == 0 {
            1.0
        } else {
            frame.covariates(treated[r])[cols[c - 1]]
        }
    });
    let observed: Vec<bool> = treated.iter().map(|&i| !frame.is_missing(i)).collect();
    let fit = fit_logistic(&design, &observed, &vec![1.0; treated.len()], &FitOptions::default())?;

    let mut before = vec![0.0; j];
    let mut after = vec![0.0; j];
    let mut row = vec![0.0; 1 + cols.len()];
    row[0] = 1.0;
    for i in 0..frame.len() {
        if frame.is_treated(i) {
            if frame.is_missing(i) {
                wd.subject_mut(i).fill(0.0);
            }
            continue;
        }
        for (r, &c) in row[1..].iter_mut().zip(cols) {
            *r = frame.covariates(i)[c];
        }
        let p_obs = fit.prob(&row);
        for (a, w) in wd.subject_mut(i).iter_mut().enumerate() {
            before[a] += *w;
            *w *= p_obs;
            after[a] += *w;
        }
    }
    for i in (0..frame.len()).filter(|&i| !frame.is_treated(i)) {
        for (a, w) in wd.subject_mut(i).iter_mut().enumerate() {
            if after[a] > 0.0 {
                *w *= before[a] / after[a];
            }
        }
    }
    Ok(())
}

/// Full point-estimation pipeline on a frame: weight models, weights,
/// effects. This is the unit the bootstrap repeats.
pub fn estimate_frame(frame: &Frame, opts: &AnalysisOptions) -> Result<Vec<PointEstimate>> {
    let (frame, wd) = strategy_weights(frame, opts)?;
    effects_from_weights(&frame, &wd, opts.effect)
}

/// Point estimates for every stratum under a strategy (no inference).
pub fn estimate_with_strategy(ds: &Dataset, opts: &AnalysisOptions) -> Result<Vec<StratumEstimate>> {
    let frame = Frame::from_dataset(ds);
    let points = estimate_frame(&frame, opts)?;
    Ok(points
        .into_iter()
        .enumerate()
        .map(|(k, pe)| StratumEstimate {
            stratum: k + 1,
            label: ds.stratum_labels()[k].clone(),
            effect_type: opts.effect,
            point: pe.point,
            se: None,
            ci: None,
            n_eff: pe.n_eff,
            strategy: opts.strategy,
        })
        .collect())
}
