//! Column-oriented copy of a [`Dataset`] used by the estimation pipeline.
//!
//! Resampling and refitting happen thousands of times per analysis, so the
//! pipeline works on flat columns instead of per-subject records. A frame
//! built from a validated dataset inherits its invariants; frames produced
//! by [`Frame::gather`] may repeat subjects.

use crate::data::{Arm, Dataset, EndpointKind, Outcome};

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    num_strata: usize,
    endpoint: EndpointKind,
    num_covariates: usize,
    treated: Vec<bool>,
    stratum: Vec<Option<usize>>,
    post: Vec<Option<i64>>,
    x: Vec<f64>,
    /// Binary response as 0/1, or the observed time.
    outcome: Vec<f64>,
    /// Event indicator; always `true` for binary endpoints.
    event: Vec<bool>,
}

impl Frame {
    pub fn from_dataset(ds: &Dataset) -> Frame {
        let n = ds.len();
        let mut f = Frame {
            num_strata: ds.num_strata(),
            endpoint: ds.endpoint(),
            num_covariates: ds.covariate_names().len(),
            treated: Vec::with_capacity(n),
            stratum: Vec::with_capacity(n),
            post: Vec::with_capacity(n),
            x: Vec::with_capacity(n * ds.covariate_names().len()),
            outcome: Vec::with_capacity(n),
            event: Vec::with_capacity(n),
        };
        for s in ds.subjects() {
            f.treated.push(s.arm == Arm::Experimental);
            f.stratum.push(s.stratum);
            f.post.push(s.post_measure);
            f.x.extend_from_slice(&s.covariates);
            match s.outcome {
                Outcome::Binary { y } => {
                    f.outcome.push(f64::from(u8::from(y)));
                    f.event.push(true);
                }
                Outcome::Survival { time, event } => {
                    f.outcome.push(time);
                    f.event.push(event);
                }
            }
        }
        f
    }

    /// A new frame made of the given rows, repeats allowed.
    pub fn gather(&self, rows: &[usize]) -> Frame {
        let k = self.num_covariates;
        let mut x = Vec::with_capacity(rows.len() * k);
        for &i in rows {
            x.extend_from_slice(self.covariates(i));
        }
        Frame {
            num_strata: self.num_strata,
            endpoint: self.endpoint,
            num_covariates: k,
            treated: rows.iter().map(|&i| self.treated[i]).collect(),
            stratum: rows.iter().map(|&i| self.stratum[i]).collect(),
            post: rows.iter().map(|&i| self.post[i]).collect(),
            x,
            outcome: rows.iter().map(|&i| self.outcome[i]).collect(),
            event: rows.iter().map(|&i| self.event[i]).collect(),
        }
    }

    /// Assigns stratum `a` to every treated subject whose stratum is missing.
    pub fn impute_missing(&self, a: usize) -> Frame {
        let mut f = self.clone();
        for i in 0..f.len() {
            if f.treated[i] && f.stratum[i].is_none() {
                f.stratum[i] = Some(a);
            }
        }
        f
    }

    pub fn len(&self) -> usize {
        self.treated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.treated.is_empty()
    }

    pub fn num_strata(&self) -> usize {
        self.num_strata
    }

    pub fn endpoint(&self) -> EndpointKind {
        self.endpoint
    }

    pub fn num_covariates(&self) -> usize {
        self.num_covariates
    }

    pub fn covariates(&self, i: usize) -> &[f64] {
        &self.x[i * self.num_covariates..(i + 1) * self.num_covariates]
    }

    pub fn is_treated(&self, i: usize) -> bool {
        self.treated[i]
    }

    pub fn stratum(&self, i: usize) -> Option<usize> {
        self.stratum[i]
    }

    /// Treated with unknown stratum.
    pub fn is_missing(&self, i: usize) -> bool {
        self.treated[i] && self.stratum[i].is_none()
    }

    pub fn post_measure(&self, i: usize) -> Option<i64> {
        self.post[i]
    }

    pub fn outcome(&self, i: usize) -> f64 {
        self.outcome[i]
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcome
    }

    pub fn events(&self) -> &[bool] {
        &self.event
    }

    pub fn treated(&self) -> &[bool] {
        &self.treated
    }

    /// Row indices of each arm, in order: `(treated, control)`.
    pub fn arm_indices(&self) -> (Vec<usize>, Vec<usize>) {
        (0..self.len()).partition(|&i| self.treated[i])
    }
}

impl From<&Dataset> for Frame {
    fn from(ds: &Dataset) -> Self {
        Frame::from_dataset(ds)
    }
}
