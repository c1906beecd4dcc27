//! Weighted Kaplan–Meier curves and a weighted single-covariate Cox model.
//!
//! Tied event times use the Breslow convention: every subject whose time
//! equals the event time is in the risk set for all tied events.

use std::cmp::Ordering;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

fn check_inputs(times: &[f64], events: &[bool], weights: &[f64]) -> Result<()> {
    let n = times.len();
    for len in [events.len(), weights.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::InvalidConfig("weights must be finite and nonnegative".into()));
    }
    if times.iter().any(|t| t.is_nan()) {
        return Err(Error::InvalidConfig("times must not be NaN".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmCurve {
    /// Distinct observed times (events and censorings), increasing.
    pub time: Vec<f64>,
    /// Survival just after each time.
    pub survival: Vec<f64>,
    /// Weighted number at risk just before each time.
    pub at_risk: Vec<f64>,
    /// Weighted number of events at each time.
    pub events: Vec<f64>,
}

impl KmCurve {
    /// Step-function evaluation, right-continuous.
    pub fn survival_at(&self, t: f64) -> f64 {
        match self.time.partition_point(|&s| s <= t) {
            0 => 1.0,
            k => self.survival[k - 1],
        }
    }

    /// Writes `time,survival,at_risk` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time", "survival", "at_risk"])?;
        for i in 0..self.time.len() {
            w.write_record([
                self.time[i].to_string(),
                self.survival[i].to_string(),
                self.at_risk[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Product-limit estimate with weighted event and at-risk counts.
/// Subjects with zero weight are ignored entirely.
pub fn weighted_km(times: &[f64], events: &[bool], weights: &[f64]) -> Result<KmCurve> {
    check_inputs(times, events, weights)?;
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::AllZeroWeights);
    }
    let mut order: Vec<usize> = (0..times.len()).filter(|&i| weights[i] > 0.0).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));

    // Risk sets from suffix sums, so the last one holds exactly the
    // remaining weight instead of a running difference.
    let mut suffix = vec![0.0; order.len() + 1];
    for k in (0..order.len()).rev() {
        suffix[k] = suffix[k + 1] + weights[order[k]];
    }
    let mut curve = KmCurve {
        time: Vec::new(),
        survival: Vec::new(),
        at_risk: Vec::new(),
        events: Vec::new(),
    };
    let mut surv = 1.0;
    let mut k = 0;
    while k < order.len() {
        let t = times[order[k]];
        let at_risk = suffix[k];
        let mut d = 0.0;
        while k < order.len() && times[order[k]] == t {
            let i = order[k];
            if events[i] {
                d += weights[i];
            }
            k += 1;
        }
        if d > 0.0 {
            surv *= (1.0 - d / at_risk).max(0.0);
        }
        curve.time.push(t);
        curve.survival.push(surv);
        curve.at_risk.push(at_risk);
        curve.events.push(d);
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoxFit {
    pub log_hazard_ratio: f64,
    /// Model-based standard error from the weighted information.
    pub se: f64,
    /// Score divided by the total event weight, at the estimate.
    pub score: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Event times and treatment flags sorted once, refit under many weightings.
#[derive(Debug, Clone)]
pub struct CoxProblem<'a> {
    times: &'a [f64],
    events: &'a [bool],
    treated: &'a [bool],
    /// Indices by decreasing time.
    order: Vec<usize>,
}

impl<'a> CoxProblem<'a> {
    pub fn new(times: &'a [f64], events: &'a [bool], treated: &'a [bool]) -> Result<Self> {
        let n = times.len();
        for len in [events.len(), treated.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| times[b].partial_cmp(&times[a]).unwrap_or(Ordering::Equal));
        Ok(CoxProblem {
            times,
            events,
            treated,
            order,
        })
    }

    /// Maximizes the weighted Breslow partial likelihood in the log hazard
    /// ratio of `treated` versus not.
    pub fn fit(&self, weights: &[f64]) -> Result<CoxFit> {
        check_inputs(self.times, self.events, weights)?;
        let terms = self.risk_terms(weights);
        fit_terms(&terms)
    }

    /// Collapses the data to one `(n0, n1, d1, d)` tuple per distinct event
    /// time: weighted at-risk counts per group, treated and total event weight.
    fn risk_terms(&self, weights: &[f64]) -> Vec<[f64; 4]> {
        let mut terms = Vec::new();
        let (mut n0, mut n1) = (0.0, 0.0);
        let mut k = 0;
        let order = &self.order;
        while k < order.len() {
            let t = self.times[order[k]];
            let (mut d0, mut d1) = (0.0, 0.0);
            while k < order.len() && self.times[order[k]] == t {
                let i = order[k];
                let w = weights[i];
                if self.treated[i] {
                    n1 += w;
                    if self.events[i] {
                        d1 += w;
                    }
                } else {
                    n0 += w;
                    if self.events[i] {
                        d0 += w;
                    }
                }
                k += 1;
            }
            if d0 + d1 > 0.0 {
                terms.push([n0, n1, d1, d0 + d1]);
            }
        }
        terms
    }
}

/// Log partial likelihood, normalized score and normalized information.
fn partial_likelihood(terms: &[[f64; 4]], beta: f64, total_d: f64) -> (f64, f64, f64) {
    let e = beta.exp();
    let (mut ll, mut u, mut info) = (0.0, 0.0, 0.0);
    for &[n0, n1, d1, d] in terms {
        let denom = n0 + n1 * e;
        let p = n1 * e / denom;
        ll += d1 * beta - d * denom.ln();
        u += d1 - d * p;
        info += d * n0 * n1 * e / (denom * denom);
    }
    (ll / total_d, u / total_d, info / total_d)
}

fn fit_terms(terms: &[[f64; 4]]) -> Result<CoxFit> {
    const TOL: f64 = 1e-8;
    const MAX_ITER: usize = 100;
    const LIMIT: f64 = 30.0;

    let total_d: f64 = terms.iter().map(|t| t[3]).sum();
    if !(total_d > 0.0) {
        return Err(Error::NoEvents);
    }
    let total_d1: f64 = terms.iter().map(|t| t[2]).sum();
    if total_d1 <= 0.0 || total_d1 >= total_d {
        return Err(Error::MonotoneLikelihood);
    }
    let mut beta = 0.0;
    let (mut ll, mut u, mut info) = partial_likelihood(terms, beta, total_d);
    for iter in 0..MAX_ITER {
        if u.abs() < TOL {
            // One more Newton step costs a single pass and brings the
            // estimate to rounding precision.
            if info > 0.0 {
                let polished = beta + u / info;
                let eval = partial_likelihood(terms, polished, total_d);
                if eval.1.abs() <= u.abs() {
                    beta = polished;
                    (_, u, info) = eval;
                }
            }
            return Ok(CoxFit {
                log_hazard_ratio: beta,
                se: (1.0 / (info * total_d)).sqrt(),
                score: u,
                converged: true,
                iterations: iter,
            });
        }
        if !(info > 0.0) {
            return Err(Error::MonotoneLikelihood);
        }
        let step = u / info;
        let mut t = 1.0;
        let mut next = beta + step;
        let mut eval = partial_likelihood(terms, next, total_d);
        let mut halvings = 0;
        while !(eval.0 >= ll - 1e-12 * ll.abs()) && halvings < 40 {
            t *= 0.5;
            halvings += 1;
            next = beta + t * step;
            eval = partial_likelihood(terms, next, total_d);
        }
        beta = next;
        if beta.abs() > LIMIT {
            return Err(Error::MonotoneLikelihood);
        }
        (ll, u, info) = eval;
    }
    Err(Error::NotConverged(MAX_ITER))
}

/// One-shot weighted Cox fit with a single binary treatment covariate.
pub fn weighted_cox_hr(times: &[f64], events: &[bool], treated: &[bool], weights: &[f64]) -> Result<CoxFit> {
    CoxProblem::new(times, events, treated)?.fit(weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_weights_match_textbook_km() {
        // times 1,2,2,3,4 ; events 1,1,0,1,0
        // t=1: 5 at risk, 1 event -> 4/5
        // t=2: 4 at risk, 1 event -> 4/5 * 3/4 = 3/5
        // t=3: 2 at risk, 1 event -> 3/5 * 1/2 = 3/10
        let km = weighted_km(&[2.0, 1.0, 3.0, 2.0, 4.0], &[true, true, true, false, false], &[1.0; 5]).unwrap();
        assert_eq!(km.time, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(km.at_risk, vec![5.0, 4.0, 2.0, 1.0]);
        let expect = [0.8, 0.6, 0.3, 0.3];
        for (s, e) in km.survival.iter().zip(expect) {
            assert!((s - e).abs() < 1e-15);
        }
        assert_eq!(km.survival_at(0.5), 1.0);
        assert!((km.survival_at(2.5) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn all_censored_is_flat() {
        let km = weighted_km(&[1.0, 2.0, 3.0], &[false; 3], &[1.0, 2.0, 0.5]).unwrap();
        assert!(km.survival.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn zero_weights_are_rejected() {
        assert!(matches!(
            weighted_km(&[1.0, 2.0], &[true, true], &[0.0, 0.0]),
            Err(Error::AllZeroWeights)
        ));
    }

    #[test]
    fn weight_two_equals_duplicate() {
        let t = [3.0, 1.0, 2.0, 5.0];
        let e = [true, true, false, true];
        let weighted = weighted_km(&t, &e, &[1.0, 2.0, 1.0, 1.0]).unwrap();
        let dup = weighted_km(&[3.0, 1.0, 1.0, 2.0, 5.0], &[true, true, true, false, true], &[1.0; 5]).unwrap();
        assert_eq!(weighted, dup);
    }

    #[test]
    fn cox_errors() {
        let t = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            weighted_cox_hr(&t, &[false; 4], &[true, false, true, false], &[1.0; 4]),
            Err(Error::NoEvents)
        ));
        assert!(matches!(
            weighted_cox_hr(&t, &[true, false, true, false], &[true, false, true, false], &[1.0; 4]),
            Err(Error::MonotoneLikelihood)
        ));
    }

    #[test]
    fn cox_weight_two_equals_duplicate() {
        let t = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let e = [true, true, false, true, true, true];
        let z = [true, false, true, false, true, false];
        let w = weighted_cox_hr(&t, &e, &z, &[1.0, 1.0, 2.0, 1.0, 1.0, 2.0]).unwrap();
        let d = weighted_cox_hr(
            &[1.0, 2.0, 3.0, 3.0, 4.0, 5.0, 6.0, 6.0],
            &[true, true, false, false, true, true, true, true],
            &[true, false, true, true, false, true, false, false],
            &[1.0; 8],
        )
        .unwrap();
        assert!((w.log_hazard_ratio - d.log_hazard_ratio).abs() < 1e-12);
    }

    #[test]
    fn cox_score_is_zero_at_estimate() {
        let t = [0.5, 1.2, 1.9, 2.4, 3.3, 3.3, 4.1, 5.0, 6.2, 7.7];
        let e = [true, true, false, true, true, true, false, true, true, false];
        let z = [true, false, true, true, false, true, false, false, true, false];
        let w = [1.0, 0.3, 2.0, 0.7, 1.1, 0.9, 1.0, 1.5, 0.2, 1.0];
        let fit = weighted_cox_hr(&t, &e, &z, &w).unwrap();
        assert!(fit.converged);
        assert!(fit.score.abs() < 1e-8);
        let scaled: Vec<f64> = w.iter().map(|v| v * 7.5).collect();
        let again = weighted_cox_hr(&t, &e, &z, &scaled).unwrap();
        assert!((fit.log_hazard_ratio - again.log_hazard_ratio).abs() < 1e-10);
    }
}
