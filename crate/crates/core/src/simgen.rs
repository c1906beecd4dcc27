//! Simulation study: data-generating process, true values and the
//! replicate runner.
//!
//! Each simulated subject carries two standard-normal prognostic covariates
//! `x1, x2`, three independent noise covariates `z1..z3`, a binary
//! post-landmark measure `B`, the binary stratum `A`, a missingness flag `M`
//! and both potential outcomes:
//!
//! ```text
//! logit P(B = 1 | X)    = g0 + g1 x1 + g2 x2
//! logit P(A = 1 | X, B) = a0 + a1 x1 + a2 x2 + a3 B
//! logit P(M = 1 | X)    = k0 + k1 x1 + k2 x2
//! binary:  logit P(Y0 = 1 | X) = b00 + b1 x1 + b2 x2
//!          logit P(Y1 = 1 | X, B) = b01 + b1 x1 + b2 x2 + b3 B
//! survival: T0 ~ Exp(rate exp(b00 + b1 x1 + b2 x2))
//!           T1 ~ Exp(rate exp(b01 + b1 x1 + b2 x2 + b3 B))
//! ```
//!
//! Survival outcomes are censored at a fixed administrative cutoff. The
//! first half of the subjects is randomized to the experimental arm. The
//! latent quantities of every subject are kept in a separate [`Latent`]
//! record that estimators never see; the [`Dataset`] only holds what a trial
//! would observe.
//!
//! Stratum 1 is `A = 1` ("positive"), stratum 2 is `A = 0` ("negative").

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{replicate_points, summarize, BootstrapConfig, CiMethod};
use crate::data::{Arm, Dataset, EndpointKind, Outcome, Subject};
use crate::error::{Error, Result};
use crate::estimators::{estimate_frame, AnalysisOptions, EffectType, Strategy};
use crate::frame::Frame;
use crate::glm::logistic;
use crate::rng::{Domain, Seed};
use crate::stats::{mean, quantile_sorted, sample_sd, CompensatedSum};
use crate::survival::CoxProblem;
use crate::weights::{WeightMode, WeightSpec};

pub const COVARIATE_NAMES: [&str; 5] = ["x1", "x2", "z1", "z2", "z3"];
pub const STRATUM_LABELS: [&str; 2] = ["positive", "negative"];

/// Which covariates and models feed the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// `(x1, x2)` and `B`.
    Proposed,
    /// `(x1, x2, z1, z2, z3)` and `B`.
    NoiseCovariates,
    /// `x1` and `B` only: a confounder of stratum and outcome is left out.
    NoPrincipalIgnorability,
    /// `(x1, x2)` without `B`: one `A | X` model for missing treated and
    /// controls.
    WeightWithoutB,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Proposed,
        Scenario::NoiseCovariates,
        Scenario::NoPrincipalIgnorability,
        Scenario::WeightWithoutB,
    ];

    pub fn weight_spec(self) -> WeightSpec {
        let (cols, mode) = match self {
            Scenario::Proposed => (vec![0, 1], WeightMode::Marginalized),
            Scenario::NoiseCovariates => (vec![0, 1, 2, 3, 4], WeightMode::Marginalized),
            Scenario::NoPrincipalIgnorability => (vec![0], WeightMode::Marginalized),
            Scenario::WeightWithoutB => (vec![0, 1], WeightMode::CovariatesOnly),
        };
        WeightSpec {
            covariates: Some(cols),
            mode,
            ..Default::default()
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Proposed => "proposed",
            Scenario::NoiseCovariates => "noise-covariates",
            Scenario::NoPrincipalIgnorability => "no-principal-ignorability",
            Scenario::WeightWithoutB => "weight-without-b",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.to_string() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Total sample size, split 1:1.
    pub n: usize,
    pub endpoint: EndpointKind,
    pub seed: Seed,
    pub alpha: [f64; 4],
    pub gamma: [f64; 3],
    pub xi: [f64; 3],
    /// `(b00, b01, b1, b2, b3)` for binary outcomes.
    pub beta_binary: [f64; 5],
    /// `(b00, b01, b1, b2, b3)` for survival outcomes.
    pub beta_tte: [f64; 5],
    /// Target fraction of administratively censored subjects.
    pub censoring_rate: f64,
    pub scenario: Scenario,
    pub reps: usize,
    /// Bootstrap replicates per simulated trial; 0 skips inference.
    pub boot: usize,
    /// Size of the full-knowledge sample behind the true values.
    pub truth_size: usize,
    /// Size of the pilot sample for the censoring cutoff.
    pub pilot_size: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            n: 2000,
            endpoint: EndpointKind::Binary,
            seed: Seed(1),
            alpha: [-2.0, 1.0, -2.0, 2.0],
            gamma: [-1.0, 1.0, 1.0],
            xi: [-2.0, -1.0, -3.0],
            beta_binary: [-2.0, 2.0, 1.0, 2.0, -4.0],
            beta_tte: [-2.0, -3.5, 1.0, 3.0, 4.0],
            censoring_rate: 0.20,
            scenario: Scenario::Proposed,
            reps: 500,
            boot: 1000,
            truth_size: 10_000_000,
            pilot_size: 1_000_000,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!("n must be even and >= 4, got {}", self.n)));
        }
        if !(self.censoring_rate > 0.0 && self.censoring_rate < 1.0) {
            return Err(Error::InvalidConfig("censoring rate must be in (0, 1)".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidConfig("reps must be positive".into()));
        }
        if self.boot == 1 {
            return Err(Error::InvalidConfig("boot must be 0 or at least 2".into()));
        }
        Ok(())
    }

    fn beta(&self) -> [f64; 5] {
        match self.endpoint {
            EndpointKind::Binary => self.beta_binary,
            EndpointKind::TimeToEvent => self.beta_tte,
        }
    }
}

/// Everything about a simulated subject, observed or not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Latent {
    pub x: [f64; 5],
    pub b: bool,
    pub a: bool,
    pub m: bool,
    /// Binary: `P(Y0 = 1)`, `P(Y1 = 1)`. Survival: unused (0).
    pub p0: f64,
    pub p1: f64,
    /// Binary: drawn responses as 0/1. Survival: uncensored event times.
    pub y0: f64,
    pub y1: f64,
}

impl Latent {
    pub fn stratum(&self) -> usize {
        if self.a {
            1
        } else {
            2
        }
    }
}

fn bernoulli<R: Rng>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// Draws one subject. The number and order of draws is fixed, whatever the
/// endpoint, so both endpoints share covariates, `A`, `B` and `M` for a seed.
pub fn draw_latent<R: Rng>(cfg: &SimulationConfig, rng: &mut R) -> Latent {
    let mut x = [0.0; 5];
    for v in &mut x {
        *v = rng.sample(StandardNormal);
    }
    let [x1, x2, ..] = x;
    let [g0, g1, g2] = cfg.gamma;
    let [a0, a1, a2, a3] = cfg.alpha;
    let [k0, k1, k2] = cfg.xi;
    let b = bernoulli(rng, logistic(g0 + g1 * x1 + g2 * x2));
    let bf = f64::from(u8::from(b));
    let a = bernoulli(rng, logistic(a0 + a1 * x1 + a2 * x2 + a3 * bf));
    let m = bernoulli(rng, logistic(k0 + k1 * x1 + k2 * x2));
    let [b00, b01, b1, b2, b3] = cfg.beta();
    let eta0 = b00 + b1 * x1 + b2 * x2;
    let eta1 = b01 + b1 * x1 + b2 * x2 + b3 * bf;
    let u0: f64 = rng.random();
    let u1: f64 = rng.random();
    let e0: f64 = rng.sample(Exp1);
    let e1: f64 = rng.sample(Exp1);
    match cfg.endpoint {
        EndpointKind::Binary => {
            let (p0, p1) = (logistic(eta0), logistic(eta1));
            Latent {
                x,
                b,
                a,
                m,
                p0,
                p1,
                y0: f64::from(u8::from(u0 < p0)),
                y1: f64::from(u8::from(u1 < p1)),
            }
        }
        EndpointKind::TimeToEvent => Latent {
            x,
            b,
            a,
            m,
            p0: 0.0,
            p1: 0.0,
            y0: e0 / eta0.exp(),
            y1: e1 / eta1.exp(),
        },
    }
}

/// A simulated trial: the observable dataset plus the hidden truth, row
/// for row.
#[derive(Debug, Clone)]
pub struct SimulatedTrial {
    pub dataset: Dataset,
    pub latent: Vec<Latent>,
}

fn observe(cfg: &SimulationConfig, i: usize, treated: bool, l: &Latent, cutoff: f64) -> Subject {
    let outcome = match cfg.endpoint {
        EndpointKind::Binary => Outcome::Binary {
            y: if treated { l.y1 } else { l.y0 } > 0.5,
        },
        EndpointKind::TimeToEvent => {
            let t = if treated { l.y1 } else { l.y0 };
            Outcome::Survival {
                time: t.min(cutoff),
                event: t <= cutoff,
            }
        }
    };
    Subject {
        id: format!("sim{i}"),
        arm: if treated { Arm::Experimental } else { Arm::Control },
        stratum: (treated && !l.m).then(|| l.stratum()),
        missing: treated && l.m,
        post_measure: treated.then(|| i64::from(u8::from(l.b))),
        covariates: l.x.to_vec(),
        outcome,
    }
}

/// Generates one trial of `cfg.n` subjects from `seed`. `cutoff` is the
/// administrative censoring time (ignored for binary endpoints).
pub fn generate_trial(cfg: &SimulationConfig, seed: Seed, cutoff: f64) -> Result<SimulatedTrial> {
    let mut rng = seed.rng();
    let latent: Vec<Latent> = (0..cfg.n).map(|_| draw_latent(cfg, &mut rng)).collect();
    let half = cfg.n / 2;
    let subjects = latent
        .iter()
        .enumerate()
        .map(|(i, l)| observe(cfg, i, i < half, l, cutoff))
        .collect();
    let names = COVARIATE_NAMES.iter().map(|s| s.to_string()).collect();
    let dataset = Dataset::new(subjects, names, 2, cfg.endpoint)?
        .with_stratum_labels(STRATUM_LABELS.iter().map(|s| s.to_string()).collect())?;
    Ok(SimulatedTrial { dataset, latent })
}

/// Generates the dataset of replicate `replicate_seed`.
pub fn generate_replicate(cfg: &SimulationConfig, replicate_seed: Seed, cutoff: f64) -> Result<Dataset> {
    generate_trial(cfg, replicate_seed, cutoff).map(|t| t.dataset)
}

/// Time below which a fraction `1 - rate` of `times` falls.
pub fn censoring_cutoff(times: &mut [f64], rate: f64) -> f64 {
    times.sort_by(f64::total_cmp);
    quantile_sorted(times, 1.0 - rate)
}

/// Seed of the pilot sample behind the censoring cutoff. It is fixed so the
/// cutoff is a property of the generating model, not of a run.
pub const PILOT_SEED: Seed = Seed(0x5EED_CE05);

/// Fixed administrative censoring time giving `cfg.censoring_rate`
/// censoring on a pilot sample randomized 1:1.
pub fn calibrate_censoring(cfg: &SimulationConfig) -> Result<f64> {
    if cfg.endpoint != EndpointKind::TimeToEvent {
        return Err(Error::WrongEndpointKind);
    }
    let n = cfg.pilot_size.max(2);
    let half = n / 2;
    let mut times = chunked(
        n,
        PILOT_SEED.child(Domain::Calibration, 0),
        |i, l| {
            if i < half {
                l.y1
            } else {
                l.y0
            }
        },
        cfg,
    );
    Ok(censoring_cutoff(&mut times, cfg.censoring_rate))
}

const CHUNK: usize = 1 << 16;

/// Draws `n` subjects in fixed-size chunks, each from its own stream, and
/// maps them through `f(global_index, latent)`. Output order is global index
/// order regardless of thread count.
fn chunked<T: Send>(n: usize, seed: Seed, f: impl Fn(usize, &Latent) -> T + Sync, cfg: &SimulationConfig) -> Vec<T> {
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.child(Domain::Chunk, c as u64).rng();
            let start = c * CHUNK;
            let end = (start + CHUNK).min(n);
            (start..end).map(|i| f(i, &draw_latent(cfg, &mut rng))).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// True effects `[stratum 1 (A = 1), stratum 2 (A = 0)]`.
///
/// Binary: the mean of `P(Y1 = 1) - P(Y0 = 1)` over subjects in the
/// stratum. Survival: the unweighted Cox log hazard ratio fitted on a
/// randomized full-knowledge sample, comparing treated and control subjects
/// of the same stratum.
pub fn true_values(cfg: &SimulationConfig, cutoff: f64) -> Result<[f64; 2]> {
    let n = cfg.truth_size.max(4);
    let seed = cfg.seed.child(Domain::Truth, 0);
    match cfg.endpoint {
        EndpointKind::Binary => {
            let diffs = chunked(n, seed, |_, l| (l.a, l.p1 - l.p0), cfg);
            let mut out = [0.0; 2];
            for (k, want) in [true, false].into_iter().enumerate() {
                let s: CompensatedSum = diffs.iter().filter(|d| d.0 == want).map(|d| d.1).collect();
                let c = diffs.iter().filter(|d| d.0 == want).count();
                out[k] = s.value() / c as f64;
            }
            Ok(out)
        }
        EndpointKind::TimeToEvent => {
            let half = n / 2;
            // (stratum is A = 1, observed time, event, treated)
            let rows = chunked(
                n,
                seed,
                |i, l| {
                    let treated = i < half;
                    let t = if treated { l.y1 } else { l.y0 };
                    (l.a, t.min(cutoff), t <= cutoff, treated)
                },
                cfg,
            );
            let mut out = [0.0; 2];
            for (k, want) in [true, false].into_iter().enumerate() {
                let sel: Vec<_> = rows.iter().filter(|r| r.0 == want).collect();
                let times: Vec<f64> = sel.iter().map(|r| r.1).collect();
                let events: Vec<bool> = sel.iter().map(|r| r.2).collect();
                let treated: Vec<bool> = sel.iter().map(|r| r.3).collect();
                drop(sel);
                let fit = CoxProblem::new(&times, &events, &treated)?.fit(&vec![1.0; times.len()])?;
                out[k] = fit.log_hazard_ratio;
            }
            Ok(out)
        }
    }
}

/// Outcome of one simulated trial, per stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    /// `None` when the point estimate or the bootstrap failed.
    pub estimates: Option<Vec<ReplicateEstimate>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateEstimate {
    pub point: f64,
    pub se: Option<f64>,
    pub ci: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumSummary {
    pub stratum: usize,
    pub label: String,
    pub truth: f64,
    pub mean: f64,
    /// Empirical standard deviation of the estimates across replicates.
    pub se: f64,
    /// Average bootstrap standard error.
    pub see: Option<f64>,
    /// Fraction of 95% intervals covering the truth.
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub config: SimulationConfig,
    pub effect_type: EffectType,
    pub censoring_cutoff: Option<f64>,
    pub strata: Vec<StratumSummary>,
    pub replicates_ok: usize,
    pub replicates_failed: usize,
    pub replicates: Vec<ReplicateRecord>,
}

impl ScenarioResult {
    /// One row per stratum: `scenario,endpoint,n,stratum,truth,mean,se,see,cp`.
    pub fn write_table_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "scenario", "endpoint", "n", "stratum", "truth", "mean", "se", "see", "cp",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for s in &self.strata {
            w.write_record([
                self.config.scenario.to_string(),
                serde_json::to_value(self.config.endpoint)?
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
                self.config.n.to_string(),
                s.label.clone(),
                format!("{:.6}", s.truth),
                format!("{:.6}", s.mean),
                format!("{:.6}", s.se),
                opt(s.see),
                opt(s.coverage),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Censoring cutoff and true values for a configuration, computed once and
/// shared by every replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub cutoff: f64,
    pub truth: [f64; 2],
}

pub fn reference_values(cfg: &SimulationConfig) -> Result<Reference> {
    let cutoff = match cfg.endpoint {
        EndpointKind::TimeToEvent => calibrate_censoring(cfg)?,
        EndpointKind::Binary => f64::INFINITY,
    };
    Ok(Reference {
        cutoff,
        truth: true_values(cfg, cutoff)?,
    })
}

fn run_replicate(cfg: &SimulationConfig, opts: &AnalysisOptions, r: usize, cutoff: f64) -> ReplicateRecord {
    let seed = cfg.seed.child(Domain::Replicate, r as u64);
    let attempt = || -> Result<Vec<ReplicateEstimate>> {
        let ds = generate_replicate(cfg, seed, cutoff)?;
        let frame = Frame::from_dataset(&ds);
        let points = estimate_frame(&frame, opts)?;
        if cfg.boot == 0 {
            return Ok(points
                .iter()
                .map(|p| ReplicateEstimate {
                    point: p.point,
                    se: None,
                    ci: None,
                })
                .collect());
        }
        let bcfg = BootstrapConfig {
            replicates: cfg.boot,
            seed,
            ci: CiMethod::Normal,
            ..Default::default()
        };
        let reps = replicate_points(&frame, opts, cfg.boot, seed);
        let boot = summarize(&points, &reps, &bcfg)?;
        Ok(points
            .iter()
            .zip(boot)
            .map(|(p, b)| ReplicateEstimate {
                point: p.point,
                se: Some(b.se),
                ci: Some(b.ci),
            })
            .collect())
    };
    ReplicateRecord {
        replicate: r,
        estimates: attempt().ok(),
    }
}

/// Runs `cfg.reps` simulated trials with precomputed reference values.
pub fn run_scenario_with(cfg: &SimulationConfig, reference: &Reference) -> Result<ScenarioResult> {
    cfg.validate()?;
    let opts = AnalysisOptions {
        strategy: Strategy::Proposed,
        weights: cfg.scenario.weight_spec(),
        effect: EffectType::for_endpoint(cfg.endpoint),
    };
    let replicates: Vec<ReplicateRecord> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| run_replicate(cfg, &opts, r, reference.cutoff))
        .collect();
    let ok: Vec<&Vec<ReplicateEstimate>> = replicates.iter().filter_map(|r| r.estimates.as_ref()).collect();
    if ok.len() < 2 {
        return Err(Error::TooManyFailures {
            failed: cfg.reps - ok.len(),
            total: cfg.reps,
        });
    }
    let strata = (0..2)
        .map(|k| {
            let points: Vec<f64> = ok.iter().map(|e| e[k].point).collect();
            let truth = reference.truth[k];
            let (see, coverage) = if cfg.boot > 0 {
                let ses: Vec<f64> = ok.iter().filter_map(|e| e[k].se).collect();
                let covered = ok
                    .iter()
                    .filter_map(|e| e[k].ci)
                    .filter(|ci| ci[0] <= truth && truth <= ci[1])
                    .count();
                (Some(mean(&ses)), Some(covered as f64 / ok.len() as f64))
            } else {
                (None, None)
            };
            StratumSummary {
                stratum: k + 1,
                label: STRATUM_LABELS[k].to_string(),
                truth,
                mean: mean(&points),
                se: sample_sd(&points),
                see,
                coverage,
            }
        })
        .collect();
    Ok(ScenarioResult {
        config: cfg.clone(),
        effect_type: opts.effect,
        censoring_cutoff: (cfg.endpoint == EndpointKind::TimeToEvent).then_some(reference.cutoff),
        strata,
        replicates_ok: ok.len(),
        replicates_failed: cfg.reps - ok.len(),
        replicates,
    })
}

pub fn run_scenario(cfg: &SimulationConfig) -> Result<ScenarioResult> {
    cfg.validate()?;
    let reference = reference_values(cfg)?;
    run_scenario_with(cfg, &reference)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(endpoint: EndpointKind) -> SimulationConfig {
        SimulationConfig {
            n: 400,
            endpoint,
            reps: 4,
            boot: 0,
            truth_size: 200_000,
            pilot_size: 100_000,
            ..Default::default()
        }
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.to_string().parse::<Scenario>().unwrap(), s);
        }
        assert!("nope".parse::<Scenario>().is_err());
    }

    #[test]
    fn controls_never_expose_stratum_or_post_measure() {
        let t = generate_trial(&small(EndpointKind::Binary), Seed(5), f64::INFINITY).unwrap();
        let mut hidden_positive = 0;
        for (s, l) in t.dataset.subjects().iter().zip(&t.latent) {
            if s.arm == Arm::Control {
                assert_eq!(s.stratum, None);
                assert_eq!(s.post_measure, None);
                hidden_positive += usize::from(l.a);
            } else if !s.missing {
                assert_eq!(s.stratum, Some(l.stratum()));
            }
        }
        // the truth exists, it is just not in the dataset
        assert!(hidden_positive > 0);
    }

    #[test]
    fn huge_negative_intercept_removes_missingness() {
        let cfg = SimulationConfig {
            xi: [-1e3, 0.0, 0.0],
            ..small(EndpointKind::Binary)
        };
        let ds = generate_replicate(&cfg, Seed(2), f64::INFINITY).unwrap();
        assert!(ds.subjects().iter().all(|s| !s.missing));
    }

    #[test]
    fn cutoff_of_equal_times_is_that_time() {
        let mut t = vec![3.5; 100];
        assert_eq!(censoring_cutoff(&mut t, 0.2), 3.5);
    }

    #[test]
    fn doubling_rates_halves_cutoff() {
        let base = small(EndpointKind::TimeToEvent);
        let mut doubled = base.clone();
        doubled.beta_tte[0] += std::f64::consts::LN_2;
        doubled.beta_tte[1] += std::f64::consts::LN_2;
        let c1 = calibrate_censoring(&base).unwrap();
        let c2 = calibrate_censoring(&doubled).unwrap();
        assert!((c2 - c1 / 2.0).abs() < 1e-9 * c1, "{c1} {c2}");
    }

    #[test]
    fn same_seed_same_result() {
        let cfg = SimulationConfig {
            boot: 5,
            ..small(EndpointKind::Binary)
        };
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn null_outcome_model_has_zero_truth() {
        // Y1 and Y0 share the linear predictor when b01 = b00 and b3 = 0.
        let cfg = SimulationConfig {
            beta_binary: [-2.0, -2.0, 1.0, 2.0, 0.0],
            ..small(EndpointKind::Binary)
        };
        let t = true_values(&cfg, f64::INFINITY).unwrap();
        assert_eq!(t, [0.0, 0.0]);
    }
}
