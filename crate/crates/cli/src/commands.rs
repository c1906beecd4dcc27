use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use pstrata::estimators::strategy_weights;
use pstrata::simgen::{self, SimulationConfig};
use pstrata::survival::weighted_km;
use pstrata::{
    apply_landmark, balance_report, bootstrap_estimate, estimate_with_strategy, ingest_csv, AnalysisOptions,
    BootstrapConfig, CsvSchema, Dataset, EndpointKind, Error, Frame, OutcomeColumns, Seed, Strategy, WeightSpec,
};
use serde::Serialize;

use crate::args::{AnalyzeArgs, DataArgs, DiagnoseArgs, SimulateArgs};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Usage(_) | CommandError::Run(Error::InvalidConfig(_)) => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CommandError>;

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: Option<u64>,
    config: &'a C,
    result: R,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CommandError::Write {
            path: path.display().to_string(),
            source,
        })
}

fn finish<W: Write>(mut w: W, path: &Path) -> Result<()> {
    w.flush().map_err(|source| CommandError::Write {
        path: path.display().to_string(),
        source,
    })
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    match out {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(text.as_bytes()).map_err(|source| CommandError::Write {
                path: path.display().to_string(),
                source,
            })?;
            finish(w, path)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fixed<const N: usize>(name: &str, v: &Option<Vec<f64>>, default: [f64; N]) -> Result<[f64; N]> {
    match v {
        None => Ok(default),
        Some(v) => v
            .as_slice()
            .try_into()
            .map_err(|_| CommandError::Usage(format!("--{name} takes {N} comma-separated values, got {}", v.len()))),
    }
}

pub fn simulation_config(args: &SimulateArgs) -> Result<SimulationConfig> {
    let d = SimulationConfig::default();
    let cfg = SimulationConfig {
        n: args.n,
        endpoint: args.endpoint.into(),
        seed: Seed(args.seed),
        alpha: fixed("alpha", &args.alpha, d.alpha)?,
        gamma: fixed("gamma", &args.gamma, d.gamma)?,
        xi: fixed("xi", &args.xi, d.xi)?,
        beta_binary: fixed("beta-binary", &args.beta_binary, d.beta_binary)?,
        beta_tte: fixed("beta-tte", &args.beta_tte, d.beta_tte)?,
        censoring_rate: args.censoring_rate,
        scenario: args.scenario,
        reps: args.reps,
        boot: args.boot,
        truth_size: args.truth_size,
        pilot_size: args.pilot_size,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = simulation_config(args)?;
    let result = simgen::run_scenario(&cfg)?;
    if let Some(path) = &args.table {
        let mut w = create(path)?;
        result.write_table_csv(&mut w)?;
        finish(w, path)?;
    }
    for s in &result.strata {
        eprintln!(
            "{:>9}: truth {:.4}  mean {:.4}  se {:.4}  see {}  cp {}",
            s.label,
            s.truth,
            s.mean,
            s.se,
            s.see.map_or("-".into(), |v| format!("{v:.4}")),
            s.coverage.map_or("-".into(), |v| format!("{v:.3}")),
        );
    }
    emit_json(
        &Envelope {
            tool: "pstrata",
            version: env!("CARGO_PKG_VERSION"),
            command: "simulate",
            seed: Some(args.seed),
            config: args,
            result,
        },
        args.out.as_deref(),
    )
}

fn schema(args: &DataArgs) -> CsvSchema {
    let outcome = match (&args.y_col, &args.time_col, &args.event_col) {
        (Some(y), _, _) => Some(OutcomeColumns::Binary { y: y.clone() }),
        (None, Some(t), Some(e)) => Some(OutcomeColumns::Survival {
            time: t.clone(),
            event: e.clone(),
        }),
        _ => None,
    };
    CsvSchema {
        id: args.id_col.clone(),
        arm: args.arm_col.clone(),
        stratum: args.stratum_col.clone(),
        missing: args.missing_col.clone(),
        post_measure: args.post_col.clone(),
        covariates: args.covariates.clone().unwrap_or_default(),
        outcome,
        missing_token: args.missing_token.clone(),
        num_strata: args.num_strata,
        stratum_labels: args.labels.clone(),
    }
}

#[derive(Debug, Serialize)]
struct DataSummary {
    subjects: usize,
    treated: usize,
    control: usize,
    missing_status: usize,
    excluded_by_landmark: usize,
    covariates: Vec<String>,
    strata: Vec<String>,
}

struct Loaded {
    ds: Dataset,
    spec: WeightSpec,
    summary: DataSummary,
}

fn load(args: &DataArgs) -> Result<Loaded> {
    let ds = ingest_csv(&args.data, &schema(args))?;
    let (ds, excluded) = match args.landmark {
        Some(t) => apply_landmark(&ds, t)?,
        None => (ds, 0),
    };
    ds.check_coverage()?;
    let covariates = match &args.weight_covariates {
        None => None,
        Some(names) => Some(
            names
                .iter()
                .map(|n| {
                    ds.covariate_index(n)
                        .ok_or_else(|| CommandError::Usage(format!("unknown weight covariate `{n}`")))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    let spec = WeightSpec {
        covariates,
        mode: args.weight_mode.into(),
        max_weight: args.max_weight,
        ridge: args.ridge,
    };
    let subjects = ds.subjects();
    let treated = subjects.iter().filter(|s| s.arm.is_treated()).count();
    let summary = DataSummary {
        subjects: subjects.len(),
        treated,
        control: subjects.len() - treated,
        missing_status: subjects.iter().filter(|s| s.missing).count(),
        excluded_by_landmark: excluded,
        covariates: ds.covariate_names().to_vec(),
        strata: ds.stratum_labels().to_vec(),
    };
    Ok(Loaded { ds, spec, summary })
}

/// `impute:<label>` is resolved against the dataset's stratum labels.
pub fn parse_strategy(text: &str, ds: &Dataset) -> Result<Strategy> {
    if let Some(target) = text.strip_prefix("impute:") {
        return ds
            .resolve_stratum(target)
            .map(Strategy::ImputeAllToStratum)
            .ok_or_else(|| CommandError::Usage(format!("unknown stratum `{target}` in --strategy")));
    }
    text.parse().map_err(|e: Error| CommandError::Usage(e.to_string()))
}

#[derive(Debug, Serialize)]
struct AnalyzeResult {
    data: DataSummary,
    strategy: String,
    bootstrap_replicates: usize,
    bootstrap_failed: Option<usize>,
    estimates: Vec<pstrata::StratumEstimate>,
}

pub fn analyze(args: &AnalyzeArgs) -> Result<()> {
    if args.boot == 1 {
        return Err(CommandError::Usage("--boot must be 0 or at least 2".into()));
    }
    let Loaded { ds, spec, summary } = load(&args.data)?;
    let strategy = parse_strategy(&args.strategy, &ds)?;
    let mut opts = AnalysisOptions::new(ds.endpoint());
    opts.strategy = strategy;
    opts.weights = spec;

    let mut estimates = estimate_with_strategy(&ds, &opts)?;
    let mut failed = None;
    if args.boot > 0 {
        let cfg = BootstrapConfig {
            replicates: args.boot,
            seed: Seed(args.seed),
            ci: args.ci.into(),
            ..Default::default()
        };
        let boot = bootstrap_estimate(&ds, &opts, &cfg)?;
        for (e, b) in estimates.iter_mut().zip(&boot) {
            e.se = Some(b.se);
            e.ci = Some(b.ci);
        }
        failed = boot.first().map(|b| b.n_failed);
    }

    if args.weights_out.is_some() || args.km_out.is_some() {
        let (frame, wd) = strategy_weights(&Frame::from_dataset(&ds), &opts)?;
        if let Some(path) = &args.weights_out {
            let mut w = create(path)?;
            wd.write_csv(&ds, &mut w)?;
            finish(w, path)?;
        }
        if let Some(path) = &args.km_out {
            if ds.endpoint() != EndpointKind::TimeToEvent {
                return Err(CommandError::Usage("--km-out needs a time-to-event endpoint".into()));
            }
            let mut w = csv::Writer::from_writer(create(path)?);
            let io = |e: csv::Error| Error::from(e);
            w.write_record(["stratum", "arm", "time", "survival", "at_risk", "events"])
                .map_err(io)?;
            let times = frame.outcomes();
            let events = frame.events();
            for a in 1..=ds.num_strata() {
                for (arm, treated) in [("experimental", true), ("control", false)] {
                    let weights: Vec<f64> = (0..frame.len())
                        .map(|i| {
                            if frame.is_treated(i) == treated {
                                wd.weight(i, a)
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    let km = weighted_km(times, events, &weights)?;
                    for k in 0..km.time.len() {
                        w.write_record([
                            ds.stratum_labels()[a - 1].clone(),
                            arm.to_string(),
                            format!("{:?}", km.time[k]),
                            format!("{:?}", km.survival[k]),
                            format!("{:?}", km.at_risk[k]),
                            format!("{:?}", km.events[k]),
                        ])
                        .map_err(io)?;
                    }
                }
            }
            w.flush().map_err(|source| CommandError::Write {
                path: path.display().to_string(),
                source,
            })?;
        }
    }

    for e in &estimates {
        match e.ci {
            Some([lo, hi]) => eprintln!("{:>9}: {:.4} [{lo:.4}, {hi:.4}]", e.label, e.point),
            None => eprintln!("{:>9}: {:.4}", e.label, e.point),
        }
    }
    emit_json(
        &Envelope {
            tool: "pstrata",
            version: env!("CARGO_PKG_VERSION"),
            command: "analyze",
            seed: Some(args.seed),
            config: args,
            result: AnalyzeResult {
                data: summary,
                strategy: strategy.to_string(),
                bootstrap_replicates: args.boot,
                bootstrap_failed: failed,
                estimates,
            },
        },
        args.out.as_deref(),
    )
}

#[derive(Debug, Serialize)]
struct DiagnoseResult {
    data: DataSummary,
    balance: pstrata::BalanceReport,
}

pub fn diagnose(args: &DiagnoseArgs) -> Result<()> {
    if args.thresholds.iter().any(|t| t.is_nan() || *t < 0.0) {
        return Err(CommandError::Usage("thresholds must be non-negative".into()));
    }
    let Loaded { ds, spec, summary } = load(&args.data)?;
    let ms = pstrata::WeightModelSet::fit(&Frame::from_dataset(&ds), &spec)?;
    let wd = pstrata::build_weighted_dataset(&ds, &ms)?;
    let report = balance_report(&ds, &wd, &args.thresholds)?;
    if let Some(path) = &args.csv {
        let mut w = create(path)?;
        report.write_csv(&mut w)?;
        finish(w, path)?;
    }
    for s in &report.strata {
        for e in &s.exceedances {
            eprintln!(
                "{:>9} > {}: adjusted {}  unadjusted {}  expected {:.2}",
                s.label, e.threshold, e.observed_adjusted, e.observed_unadjusted, e.expected_stratum_size
            );
        }
    }
    emit_json(
        &Envelope {
            tool: "pstrata",
            version: env!("CARGO_PKG_VERSION"),
            command: "diagnose",
            seed: None,
            config: args,
            result: DiagnoseResult {
                data: summary,
                balance: report,
            },
        },
        args.out.as_deref(),
    )
}
