//! Treatment effects within principal strata defined by a biomarker that is
//! measured after randomization and is missing for part of the treated arm.
//!
//! Stratum membership is known only for treated subjects whose status was
//! observed. Everyone else (treated subjects with missing status and the
//! whole control arm) enters each stratum's pseudo-population with a weight
//! equal to an estimated membership probability. The effect in a stratum is
//! then a weighted contrast between arms: a rate difference for binary
//! endpoints or a Cox log hazard ratio for time-to-event endpoints.
//!
//! ```
//! use pstrata::{simgen, AnalysisOptions, EndpointKind, Seed};
//!
//! let cfg = simgen::SimulationConfig { n: 600, ..Default::default() };
//! let ds = simgen::generate_replicate(&cfg, Seed(7), f64::INFINITY).unwrap();
//! let opts = AnalysisOptions::new(EndpointKind::Binary);
//! let est = pstrata::estimate_with_strategy(&ds, &opts).unwrap();
//! assert_eq!(est.len(), 2);
//! assert!(est.iter().all(|e| e.point.abs() <= 1.0));
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod frame;
pub mod glm;
pub mod rng;
pub mod simgen;
pub mod stats;
pub mod survival;
pub mod weights;

pub use bootstrap::{analyze, bootstrap_estimate, BootstrapConfig, BootstrapResult, CiMethod};
pub use data::{
    apply_landmark, ingest_csv, partition, read_csv, write_csv, Arm, CsvSchema, Dataset, EndpointKind, Outcome,
    OutcomeColumns, Partition, Subject,
};
pub use diagnostics::{balance_report, BalanceReport};
pub use error::{Error, Result};
pub use estimators::{
    estimate_stratum_effect, estimate_with_strategy, AnalysisOptions, EffectType, Strategy, StratumEstimate,
};
pub use frame::Frame;
pub use rng::{Domain, Seed};
pub use weights::{build_weighted_dataset, fit_weight_models, WeightMode, WeightModelSet, WeightSpec, WeightedDataset};
