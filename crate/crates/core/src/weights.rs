//! Stratum weights for the treated subjects with missing status and for the
//! control arm.
//!
//! Two classification models are fitted on the experimental arm only:
//!
//! * the stratum model, `P(A = a | X, B)`, on treated subjects whose stratum
//!   is observed;
//! * the post-measure model, `P(B = b | X)`, on every treated subject.
//!
//! A treated subject with missing stratum receives the stratum model's
//! prediction at its own `(x, b)`. A control subject never has `B`, so its
//! weight marginalizes the stratum model over the post-measure model:
//!
//! ```text
//! w_a0(x) = sum_b P(A = a | x, b) P(B = b | x)
//! ```
//!
//! which keeps the implied `A | X` model compatible with the `A | X, B`
//! model. `B` must be categorical, so the sum is exact.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::glm::{fit_multinomial, FitOptions, MultinomialFit, ProbabilityModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Stratum model on `(X, B)`; controls marginalize over `B | X`.
    #[default]
    Marginalized,
    /// Stratum model on `X` alone, used for missing treated subjects and
    /// controls alike. The post-measure is ignored.
    CovariatesOnly,
}

/// Which covariates enter the weight models and how they are combined.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightSpec {
    /// Covariate column indices; `None` uses every covariate.
    pub covariates: Option<Vec<usize>>,
    pub mode: WeightMode,
    /// Optional cap on model-based weights. Off by default; when set, the
    /// per-subject weights no longer sum to one.
    pub max_weight: Option<f64>,
    /// Ridge penalty for the weight models (0 = plain maximum likelihood).
    pub ridge: f64,
}

impl WeightSpec {
    fn columns(&self, frame: &Frame) -> Result<Vec<usize>> {
        match &self.covariates {
            None => Ok((0..frame.num_covariates()).collect()),
            Some(cols) => {
                if let Some(&c) = cols.iter().find(|&&c| c >= frame.num_covariates()) {
                    return Err(Error::DimensionMismatch {
                        expected: frame.num_covariates(),
                        got: c + 1,
                    });
                }
                Ok(cols.clone())
            }
        }
    }
}

/// Fitted models behind the stratum weights.
#[derive(Debug, Clone)]
pub struct WeightModelSet {
    /// Classes are strata `1..=J` in order; the last stratum is reference.
    pub stratum_model: MultinomialFit,
    /// Classes follow `b_levels`. `None` when only one level was observed
    /// (point mass) or in [`WeightMode::CovariatesOnly`].
    pub post_model: Option<MultinomialFit>,
    pub num_strata: usize,
    /// Sorted distinct post-measure levels seen in the treated arm.
    pub b_levels: Vec<i64>,
    pub covariates: Vec<usize>,
    pub mode: WeightMode,
    pub max_weight: Option<f64>,
}

impl WeightModelSet {
    pub fn fit(frame: &Frame, spec: &WeightSpec) -> Result<WeightModelSet> {
        let cols = spec.columns(frame)?;
        let j = frame.num_strata();
        let opts = FitOptions {
            ridge: spec.ridge,
            ..Default::default()
        };

        let treated: Vec<usize> = (0..frame.len()).filter(|&i| frame.is_treated(i)).collect();
        if treated.is_empty() {
            return Err(Error::DegenerateStratum(1));
        }
        let observed: Vec<usize> = treated
            .iter()
            .copied()
            .filter(|&i| frame.stratum(i).is_some())
            .collect();
        let mut seen = vec![false; j];
        for &i in &observed {
            seen[frame.stratum(i).unwrap() - 1] = true;
        }
        if let Some(a) = seen.iter().position(|s| !s) {
            return Err(Error::DegenerateStratum(a + 1));
        }

        let mut b_levels: Vec<i64> = Vec::new();
        if spec.mode == WeightMode::Marginalized {
            for &i in &treated {
                let b = frame.post_measure(i).ok_or_else(|| Error::InvalidValue {
                    row: i + 1,
                    column: "b".into(),
                    reason: "post-landmark measure is required for treated subjects".into(),
                })?;
                b_levels.push(b);
            }
            b_levels.sort_unstable();
            b_levels.dedup();
        }

        let mut ms = WeightModelSet {
            stratum_model: placeholder(),
            post_model: None,
            num_strata: j,
            b_levels,
            covariates: cols,
            mode: spec.mode,
            max_weight: spec.max_weight,
        };

        let width = ms.stratum_width();
        let mut design = DMatrix::zeros(observed.len(), width);
        let mut row = vec![0.0; width];
        for (r, &i) in observed.iter().enumerate() {
            ms.stratum_row(frame.covariates(i), ms.level_index(frame.post_measure(i)), &mut row);
            design.row_mut(r).copy_from_slice(&row);
        }
        let labels: Vec<usize> = observed.iter().map(|&i| frame.stratum(i).unwrap() - 1).collect();
        ms.stratum_model = fit_multinomial(&design, &labels, j, &vec![1.0; observed.len()], &opts)?;

        if ms.mode == WeightMode::Marginalized && ms.b_levels.len() > 1 {
            let width = 1 + ms.covariates.len();
            let mut design = DMatrix::zeros(treated.len(), width);
            let mut row = vec![0.0; width];
            for (r, &i) in treated.iter().enumerate() {
                ms.base_row(frame.covariates(i), &mut row);
                design.row_mut(r).copy_from_slice(&row);
            }
            let labels: Vec<usize> = treated
                .iter()
                .map(|&i| ms.level_index(frame.post_measure(i)).unwrap())
                .collect();
            ms.post_model = Some(fit_multinomial(
                &design,
                &labels,
                ms.b_levels.len(),
                &vec![1.0; treated.len()],
                &opts,
            )?);
        }
        Ok(ms)
    }

    fn uses_b(&self) -> bool {
        self.mode == WeightMode::Marginalized && self.b_levels.len() > 1
    }

    /// Design width of the stratum model: intercept, covariates, and one
    /// indicator per non-reference post-measure level.
    fn stratum_width(&self) -> usize {
        1 + self.covariates.len() + if self.uses_b() { self.b_levels.len() - 1 } else { 0 }
    }

    fn level_index(&self, b: Option<i64>) -> Option<usize> {
        b.and_then(|b| self.b_levels.binary_search(&b).ok())
    }

    fn base_row(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
        for (o, &c) in out[1..].iter_mut().zip(&self.covariates) {
            *o = x[c];
        }
    }

    /// The first level is the reference for the indicators.
    fn stratum_row(&self, x: &[f64], level: Option<usize>, out: &mut [f64]) {
        self.base_row(x, out);
        if self.uses_b() {
            let off = 1 + self.covariates.len();
            out[off..].fill(0.0);
            if let Some(l) = level.filter(|&l| l > 0) {
                out[off + l - 1] = 1.0;
            }
        }
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        let need = self.covariates.iter().max().map_or(0, |m| m + 1);
        if x.len() < need {
            return Err(Error::DimensionMismatch {
                expected: need,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn cap(&self, w: &mut [f64]) {
        if let Some(m) = self.max_weight {
            for v in w {
                *v = v.min(m);
            }
        }
    }

    /// Writes `P(A = . | x, b)` for a treated subject with missing stratum.
    fn fill_missing(&self, x: &[f64], level: Option<usize>, row: &mut [f64], out: &mut [f64]) {
        self.stratum_row(x, level, row);
        self.stratum_model.predict_into(row, out);
        self.cap(out);
    }

    /// Writes `sum_b P(A = . | x, b) P(B = b | x)` for a control subject.
    fn fill_control(&self, x: &[f64], row: &mut [f64], scratch: &mut [f64], out: &mut [f64]) {
        match &self.post_model {
            Some(pm) if self.uses_b() => {
                let nb = self.b_levels.len();
                let mut pb = vec![0.0; nb];
                self.base_row(x, row);
                pm.predict_into(&row[..1 + self.covariates.len()], &mut pb);
                out.fill(0.0);
                for (l, &p) in pb.iter().enumerate() {
                    self.stratum_row(x, Some(l), row);
                    self.stratum_model.predict_into(row, scratch);
                    for (o, s) in out.iter_mut().zip(scratch.iter()) {
                        *o += p * s;
                    }
                }
            }
            // One post-measure level, or covariates-only mode.
            _ => {
                self.stratum_row(x, Some(0), row);
                self.stratum_model.predict_into(row, out);
            }
        }
        self.cap(out);
    }

    /// `w_a1(x, b)` for every stratum.
    pub fn weight_missing_treated(&self, x: &[f64], b: i64) -> Result<Vec<f64>> {
        self.check_x(x)?;
        let level = if self.mode == WeightMode::Marginalized {
            Some(self.b_levels.binary_search(&b).map_err(|_| Error::UnknownBLevel(b))?)
        } else {
            None
        };
        let mut row = vec![0.0; self.stratum_width()];
        let mut out = vec![0.0; self.num_strata];
        self.fill_missing(x, level, &mut row, &mut out);
        Ok(out)
    }

    /// `w_a0(x)` for every stratum.
    pub fn weight_control(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_x(x)?;
        let mut row = vec![0.0; self.stratum_width()];
        let mut scratch = vec![0.0; self.num_strata];
        let mut out = vec![0.0; self.num_strata];
        self.fill_control(x, &mut row, &mut scratch, &mut out);
        Ok(out)
    }

    /// Stratum weights for every subject of `frame`.
    pub fn weigh(&self, frame: &Frame) -> Result<WeightedDataset> {
        let j = self.num_strata;
        if frame.num_strata() != j {
            return Err(Error::DimensionMismatch {
                expected: j,
                got: frame.num_strata(),
            });
        }
        let n = frame.len();
        let mut weights = vec![0.0; n * j];
        let mut row = vec![0.0; self.stratum_width()];
        let mut scratch = vec![0.0; j];
        for i in 0..n {
            let out = &mut weights[i * j..(i + 1) * j];
            let x = frame.covariates(i);
            if frame.is_treated(i) {
                match frame.stratum(i) {
                    Some(a) => out[a - 1] = 1.0,
                    None => {
                        let level = if self.uses_b() {
                            let b = frame.post_measure(i);
                            Some(self.level_index(b).ok_or(Error::UnknownBLevel(b.unwrap_or(i64::MIN)))?)
                        } else {
                            None
                        };
                        self.fill_missing(x, level, &mut row, out);
                    }
                }
            } else {
                self.fill_control(x, &mut row, &mut scratch, out);
            }
        }
        Ok(WeightedDataset { num_strata: j, weights })
    }
}

fn placeholder() -> MultinomialFit {
    MultinomialFit {
        coefficients: vec![vec![0.0]],
        covariance: DMatrix::zeros(1, 1),
        converged: false,
        iterations: 0,
        log_likelihood: 0.0,
    }
}

/// Per-subject, per-stratum weights, in dataset order.
///
/// Treated subjects with observed stratum carry exact 0/1 indicators,
/// treated subjects with missing stratum carry `w_a1`, controls `w_a0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDataset {
    num_strata: usize,
    weights: Vec<f64>,
}

impl WeightedDataset {
    pub fn from_parts(num_strata: usize, weights: Vec<f64>) -> Result<Self> {
        if num_strata == 0 || !weights.len().is_multiple_of(num_strata) {
            return Err(Error::DimensionMismatch {
                expected: num_strata,
                got: weights.len(),
            });
        }
        Ok(WeightedDataset { num_strata, weights })
    }

    pub fn num_strata(&self) -> usize {
        self.num_strata
    }

    pub fn len(&self) -> usize {
        self.weights.len() / self.num_strata
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// All stratum weights of subject `i`.
    pub fn subject(&self, i: usize) -> &[f64] {
        &self.weights[i * self.num_strata..(i + 1) * self.num_strata]
    }

    pub fn subject_mut(&mut self, i: usize) -> &mut [f64] {
        let j = self.num_strata;
        &mut self.weights[i * j..(i + 1) * j]
    }

    /// Weight of subject `i` in stratum `a` (1-based).
    pub fn weight(&self, i: usize, a: usize) -> f64 {
        self.weights[i * self.num_strata + a - 1]
    }

    /// Column of stratum `a` (1-based) across all subjects.
    pub fn stratum_column(&self, a: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i, a)).collect()
    }

    /// Writes the long-format dump `id,stratum_level,weight`.
    pub fn write_csv<W: Write>(&self, ds: &Dataset, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id", "stratum_level", "weight"])?;
        for (i, s) in ds.subjects().iter().enumerate() {
            for a in 1..=self.num_strata {
                w.write_record([
                    s.id.clone(),
                    ds.stratum_labels()[a - 1].clone(),
                    format!("{:?}", self.weight(i, a)),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn fit_weight_models(ds: &Dataset, spec: &WeightSpec) -> Result<WeightModelSet> {
    WeightModelSet::fit(&Frame::from_dataset(ds), spec)
}

pub fn weight_missing_treated(ms: &WeightModelSet, x: &[f64], b: i64) -> Result<Vec<f64>> {
    ms.weight_missing_treated(x, b)
}

pub fn weight_control(ms: &WeightModelSet, x: &[f64]) -> Result<Vec<f64>> {
    ms.weight_control(x)
}

pub fn build_weighted_dataset(ds: &Dataset, ms: &WeightModelSet) -> Result<WeightedDataset> {
    ms.weigh(&Frame::from_dataset(ds))
}
