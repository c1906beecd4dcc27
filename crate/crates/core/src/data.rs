//! Trial data: subjects, datasets, CSV ingestion and landmark filtering.
//!
//! A [`Dataset`] holds one record per randomized subject. Stratum membership
//! is only ever observed in the experimental arm, and even there it may be
//! missing (`missing == true`). Control subjects never carry a stratum or a
//! post-landmark measure; those are counterfactual quantities.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    Experimental,
    Control,
}

impl Arm {
    pub fn is_treated(self) -> bool {
        matches!(self, Arm::Experimental)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    Binary,
    TimeToEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Binary { y: bool },
    Survival { time: f64, event: bool },
}

impl Outcome {
    pub fn kind(&self) -> EndpointKind {
        match self {
            Outcome::Binary { .. } => EndpointKind::Binary,
            Outcome::Survival { .. } => EndpointKind::TimeToEvent,
        }
    }
}

/// One randomized participant.
///
/// `stratum` is 1-based (`1..=J`). `missing` is only meaningful for treated
/// subjects and is always `false` for controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub id: String,
    pub arm: Arm,
    pub stratum: Option<usize>,
    pub missing: bool,
    pub post_measure: Option<i64>,
    pub covariates: Vec<f64>,
    pub outcome: Outcome,
}

impl Subject {
    /// Checks the arm/stratum/missingness consistency rules for one subject.
    fn check(&self, row: usize, num_strata: usize) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InconsistentMissingness {
                row,
                reason: reason.to_string(),
            })
        };
        match self.arm {
            Arm::Control => {
                if self.stratum.is_some() {
                    return bad("control subject has a stratum value");
                }
                if self.post_measure.is_some() {
                    return bad("control subject has a post-landmark measure");
                }
                if self.missing {
                    return bad("control subject has a missing-status flag");
                }
            }
            Arm::Experimental => match (self.missing, self.stratum) {
                (false, None) => return bad("treated subject with missing=0 has no stratum"),
                (true, Some(_)) => return bad("treated subject with missing=1 has a stratum"),
                _ => {}
            },
        }
        if let Some(a) = self.stratum {
            if a == 0 || a > num_strata {
                return Err(Error::InvalidValue {
                    row,
                    column: "stratum".into(),
                    reason: format!("stratum {a} outside 1..={num_strata}"),
                });
            }
        }
        if self.arm.is_treated() && self.post_measure.is_none() {
            return Err(Error::InvalidValue {
                row,
                column: "b".into(),
                reason: "post-landmark measure is required for treated subjects".into(),
            });
        }
        if self.covariates.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue {
                row,
                column: "covariates".into(),
                reason: "non-finite covariate".into(),
            });
        }
        if let Outcome::Survival { time, .. } = self.outcome {
            if !(time > 0.0 && time.is_finite()) {
                return Err(Error::InvalidValue {
                    row,
                    column: "time".into(),
                    reason: format!("survival time must be positive, got {time}"),
                });
            }
        }
        Ok(())
    }
}

/// A validated, immutable collection of subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    subjects: Vec<Subject>,
    covariate_names: Vec<String>,
    num_strata: usize,
    stratum_labels: Vec<String>,
    endpoint: EndpointKind,
}

impl Dataset {
    /// Validates every subject and the dataset-wide shape.
    ///
    /// Stratum coverage (every level observed among treated subjects with
    /// known status) is not required here; it is checked by
    /// [`Dataset::check_coverage`] and again when weight models are fitted,
    /// so that degenerate resamples surface as fitting errors.
    pub fn new(
        subjects: Vec<Subject>,
        covariate_names: Vec<String>,
        num_strata: usize,
        endpoint: EndpointKind,
    ) -> Result<Self> {
        if num_strata < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 strata, got {num_strata}"
            )));
        }
        if subjects.is_empty() {
            return Err(Error::InvalidDataset("no subjects".into()));
        }
        let k = covariate_names.len();
        let mut ids = BTreeSet::new();
        for (i, s) in subjects.iter().enumerate() {
            let row = i + 1;
            if s.covariates.len() != k {
                return Err(Error::InvalidValue {
                    row,
                    column: "covariates".into(),
                    reason: format!("expected {k} covariates, got {}", s.covariates.len()),
                });
            }
            if s.outcome.kind() != endpoint {
                return Err(Error::InvalidValue {
                    row,
                    column: "outcome".into(),
                    reason: "outcome type differs from the dataset endpoint".into(),
                });
            }
            if !ids.insert(s.id.as_str()) {
                return Err(Error::InvalidValue {
                    row,
                    column: "id".into(),
                    reason: format!("duplicate id `{}`", s.id),
                });
            }
            s.check(row, num_strata)?;
        }
        let stratum_labels = (1..=num_strata).map(|a| a.to_string()).collect();
        Ok(Dataset {
            subjects,
            covariate_names,
            num_strata,
            stratum_labels,
            endpoint,
        })
    }

    /// Replaces the display labels of the strata (e.g. `positive,negative`).
    pub fn with_stratum_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.num_strata {
            return Err(Error::InvalidConfig(format!(
                "{} stratum labels given for {} strata",
                labels.len(),
                self.num_strata
            )));
        }
        self.stratum_labels = labels;
        Ok(self)
    }

    /// Requires both arms to be present and every stratum level to be
    /// observed at least once among treated subjects with known status.
    pub fn check_coverage(&self) -> Result<()> {
        let treated = self.subjects.iter().filter(|s| s.arm.is_treated()).count();
        if treated == 0 || treated == self.subjects.len() {
            return Err(Error::InvalidDataset(
                "both arms must contain at least one subject".into(),
            ));
        }
        for a in 1..=self.num_strata {
            if !self.subjects.iter().any(|s| s.stratum == Some(a)) {
                return Err(Error::DegenerateStratum(a));
            }
        }
        Ok(())
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn num_strata(&self) -> usize {
        self.num_strata
    }

    pub fn stratum_labels(&self) -> &[String] {
        &self.stratum_labels
    }

    /// Looks up a stratum by label or by its 1-based number.
    pub fn resolve_stratum(&self, name: &str) -> Option<usize> {
        if let Some(i) = self.stratum_labels.iter().position(|l| l == name) {
            return Some(i + 1);
        }
        name.parse::<usize>().ok().filter(|a| (1..=self.num_strata).contains(a))
    }

    pub fn endpoint(&self) -> EndpointKind {
        self.endpoint
    }

    /// Index of a covariate by name.
    pub fn covariate_index(&self, name: &str) -> Option<usize> {
        self.covariate_names.iter().position(|c| c == name)
    }

    /// Builds a dataset from already-validated parts, keeping labels.
    fn derive(&self, subjects: Vec<Subject>) -> Dataset {
        Dataset {
            subjects,
            covariate_names: self.covariate_names.clone(),
            num_strata: self.num_strata,
            stratum_labels: self.stratum_labels.clone(),
            endpoint: self.endpoint,
        }
    }

    /// Returns a copy in which `f` has rewritten every subject. The result
    /// is re-validated.
    pub fn map_subjects(&self, f: impl FnMut(&Subject) -> Subject) -> Result<Dataset> {
        let subjects: Vec<Subject> = self.subjects.iter().map(f).collect();
        let ds = Dataset::new(subjects, self.covariate_names.clone(), self.num_strata, self.endpoint)?;
        ds.with_stratum_labels(self.stratum_labels.clone())
    }
}

/// Removes subjects whose event or censoring time precedes the landmark.
///
/// Survival times of retained subjects are kept on the original time scale.
pub fn apply_landmark(ds: &Dataset, landmark_time: f64) -> Result<(Dataset, usize)> {
    if ds.endpoint != EndpointKind::TimeToEvent {
        return Err(Error::WrongEndpointKind);
    }
    if !(landmark_time > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "landmark time must be positive, got {landmark_time}"
        )));
    }
    let kept: Vec<Subject> = ds
        .subjects
        .iter()
        .filter(|s| match s.outcome {
            Outcome::Survival { time, .. } => time >= landmark_time,
            Outcome::Binary { .. } => unreachable!("endpoint checked above"),
        })
        .cloned()
        .collect();
    let excluded = ds.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::InvalidDataset("landmark filtering removed every subject".into()));
    }
    Ok((ds.derive(kept), excluded))
}

/// Subject indices grouped by observed status.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    /// `observed[a - 1]`: treated subjects with known stratum `a`.
    pub observed: Vec<Vec<usize>>,
    /// Treated subjects with missing stratum.
    pub missing: Vec<usize>,
    pub control: Vec<usize>,
}

pub fn partition(ds: &Dataset) -> Partition {
    let mut p = Partition {
        observed: vec![Vec::new(); ds.num_strata],
        ..Default::default()
    };
    for (i, s) in ds.subjects.iter().enumerate() {
        match (s.arm, s.stratum) {
            (Arm::Control, _) => p.control.push(i),
            (Arm::Experimental, Some(a)) => p.observed[a - 1].push(i),
            (Arm::Experimental, None) => p.missing.push(i),
        }
    }
    p
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OutcomeColumns {
    Binary { y: String },
    Survival { time: String, event: String },
}

/// Column-name mapping for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub id: String,
    pub arm: String,
    pub stratum: String,
    pub missing: String,
    pub post_measure: String,
    /// Covariate columns. Empty means every column not mapped elsewhere,
    /// in file order.
    pub covariates: Vec<String>,
    /// `None` means: `time`/`event` if a `time` column exists, else `y`.
    pub outcome: Option<OutcomeColumns>,
    /// Extra token read as missing, besides the empty string.
    pub missing_token: Option<String>,
    /// Number of strata; inferred from the largest observed level if unset.
    pub num_strata: Option<usize>,
    pub stratum_labels: Option<Vec<String>>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            id: "id".into(),
            arm: "arm".into(),
            stratum: "stratum".into(),
            missing: "missing".into(),
            post_measure: "b".into(),
            covariates: Vec::new(),
            outcome: None,
            missing_token: None,
            num_strata: None,
            stratum_labels: None,
        }
    }
}

pub fn ingest_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema)
}

/// Reads a dataset from any CSV source. Row numbers in errors are 1-based
/// data rows (the header is not counted).
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let id_c = col(&schema.id)?;
    let arm_c = col(&schema.arm)?;
    let stratum_c = col(&schema.stratum)?;
    let missing_c = col(&schema.missing)?;
    let b_c = col(&schema.post_measure)?;
    let outcome = match &schema.outcome {
        Some(o) => o.clone(),
        None if headers.iter().any(|h| h == "time") => OutcomeColumns::Survival {
            time: "time".into(),
            event: "event".into(),
        },
        None => OutcomeColumns::Binary { y: "y".into() },
    };
    let (outcome_cols, endpoint) = match &outcome {
        OutcomeColumns::Binary { y } => (vec![col(y)?], EndpointKind::Binary),
        OutcomeColumns::Survival { time, event } => (vec![col(time)?, col(event)?], EndpointKind::TimeToEvent),
    };
    let mapped: Vec<usize> = [id_c, arm_c, stratum_c, missing_c, b_c]
        .into_iter()
        .chain(outcome_cols.iter().copied())
        .collect();
    let cov_cols: Vec<usize> = if schema.covariates.is_empty() {
        (0..headers.len()).filter(|c| !mapped.contains(c)).collect()
    } else {
        schema.covariates.iter().map(|c| col(c)).collect::<Result<_>>()?
    };
    let covariate_names: Vec<String> = cov_cols.iter().map(|&c| headers[c].clone()).collect();

    let is_missing = |v: &str| v.is_empty() || schema.missing_token.as_deref() == Some(v);
    let mut subjects = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let invalid = |c: usize, reason: String| Error::InvalidValue {
            row,
            column: headers[c].clone(),
            reason,
        };
        let flag = |c: usize| -> Result<Option<bool>> {
            let v = field(c);
            if is_missing(v) {
                return Ok(None);
            }
            match v {
                "0" => Ok(Some(false)),
                "1" => Ok(Some(true)),
                _ => Err(invalid(c, format!("expected 0 or 1, got `{v}`"))),
            }
        };
        let int = |c: usize| -> Result<Option<i64>> {
            let v = field(c);
            if is_missing(v) {
                return Ok(None);
            }
            v.parse::<i64>()
                .map(Some)
                .map_err(|_| invalid(c, format!("expected an integer, got `{v}`")))
        };
        let float = |c: usize| -> Result<f64> {
            let v = field(c);
            v.parse::<f64>()
                .map_err(|_| invalid(c, format!("expected a number, got `{v}`")))
        };

        let arm = match flag(arm_c)? {
            Some(true) => Arm::Experimental,
            Some(false) => Arm::Control,
            None => return Err(invalid(arm_c, "arm is required".into())),
        };
        let stratum = match int(stratum_c)? {
            Some(a) if a >= 1 => Some(a as usize),
            Some(a) => return Err(invalid(stratum_c, format!("stratum must be >= 1, got {a}"))),
            None => None,
        };
        let missing_raw = flag(missing_c)?;
        let missing = match arm {
            // Controls carry no missing-status information; any value is ignored.
            Arm::Control => false,
            Arm::Experimental => match missing_raw {
                Some(m) => m,
                None => {
                    return Err(Error::InconsistentMissingness {
                        row,
                        reason: "treated subject without a missing-status flag".into(),
                    })
                }
            },
        };
        let post_measure = int(b_c)?;
        let covariates = cov_cols.iter().map(|&c| float(c)).collect::<Result<Vec<_>>>()?;
        let outcome = match endpoint {
            EndpointKind::Binary => match flag(outcome_cols[0])? {
                Some(y) => Outcome::Binary { y },
                None => return Err(invalid(outcome_cols[0], "outcome is required".into())),
            },
            EndpointKind::TimeToEvent => Outcome::Survival {
                time: float(outcome_cols[0])?,
                event: flag(outcome_cols[1])?.ok_or_else(|| invalid(outcome_cols[1], "event is required".into()))?,
            },
        };
        let s = Subject {
            id: field(id_c).to_string(),
            arm,
            stratum,
            missing,
            post_measure,
            covariates,
            outcome,
        };
        // Consistency is checked before the dataset-wide pass so errors carry
        // the offending row even when the stratum count is still unknown.
        s.check(row, usize::MAX)?;
        subjects.push(s);
    }

    let observed_max = subjects.iter().filter_map(|s| s.stratum).max().unwrap_or(0);
    let num_strata = schema.num_strata.unwrap_or(observed_max.max(2));
    let ds = Dataset::new(subjects, covariate_names, num_strata, endpoint)?;
    ds.check_coverage()?;
    match &schema.stratum_labels {
        Some(labels) => ds.with_stratum_labels(labels.clone()),
        None => Ok(ds),
    }
}

/// Writes a dataset in the canonical column layout accepted by [`read_csv`]
/// with the default schema.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ["id", "arm", "stratum", "missing", "b"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(ds.covariate_names.iter().cloned());
    match ds.endpoint {
        EndpointKind::Binary => header.push("y".into()),
        EndpointKind::TimeToEvent => {
            header.push("time".into());
            header.push("event".into());
        }
    }
    w.write_record(&header)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for s in &ds.subjects {
        let mut rec = vec![
            s.id.clone(),
            u8::from(s.arm.is_treated()).to_string(),
            opt(s.stratum.map(|a| a.to_string())),
            if s.arm.is_treated() {
                u8::from(s.missing).to_string()
            } else {
                String::new()
            },
            opt(s.post_measure.map(|b| b.to_string())),
        ];
        // `{:?}` on f64 is the shortest representation that round-trips.
        rec.extend(s.covariates.iter().map(|v| format!("{v:?}")));
        match s.outcome {
            Outcome::Binary { y } => rec.push(u8::from(y).to_string()),
            Outcome::Survival { time, event } => {
                rec.push(format!("{time:?}"));
                rec.push(u8::from(event).to_string());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv(ds, std::fs::File::create(path)?)
}
