//! Independent brute-force oracles for the fitting routines: the likelihoods
//! are written out directly and maximized without derivatives. Each
//! `*_discrepancy` function returns how far the library is from the oracle.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use pstrata::glm::{fit_logistic, fit_multinomial, FitOptions};
use pstrata::survival::{weighted_cox_hr, weighted_km};
use pstrata::Seed;

/// Worst absolute coefficient error and worst relative standard-error error.
#[derive(Debug, Clone, Copy, Default)]
pub struct Discrepancy {
    pub estimate: f64,
    pub se_rel: f64,
}

impl Discrepancy {
    pub fn max(self, other: Discrepancy) -> Discrepancy {
        Discrepancy {
            estimate: self.estimate.max(other.estimate),
            se_rel: self.se_rel.max(other.se_rel),
        }
    }
}

/// Plain Nelder–Mead with restarts from the best vertex.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, start: &[f64]) -> Vec<f64> {
    let d = start.len();
    let mut best = start.to_vec();
    for _restart in 0..6 {
        let mut simplex: Vec<Vec<f64>> = vec![best.clone()];
        for i in 0..d {
            let mut v = best.clone();
            v[i] += 0.5;
            simplex.push(v);
        }
        let mut vals: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
        for _ in 0..20_000 {
            let mut idx: Vec<usize> = (0..=d).collect();
            idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
            vals = idx.iter().map(|&i| vals[i]).collect();
            if (vals[d] - vals[0]).abs() < 1e-15 * (1.0 + vals[0].abs()) {
                break;
            }
            let centroid: Vec<f64> = (0..d)
                .map(|j| simplex[..d].iter().map(|v| v[j]).sum::<f64>() / d as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                (0..d)
                    .map(|j| centroid[j] + t * (simplex[d][j] - centroid[j]))
                    .collect()
            };
            let r = along(-1.0);
            let fr = f(&r);
            if fr < vals[0] {
                let e = along(-2.0);
                let fe = f(&e);
                if fe < fr {
                    simplex[d] = e;
                    vals[d] = fe;
                } else {
                    simplex[d] = r;
                    vals[d] = fr;
                }
            } else if fr < vals[d - 1] {
                simplex[d] = r;
                vals[d] = fr;
            } else {
                let c = if fr < vals[d] { along(-0.5) } else { along(0.5) };
                let fc = f(&c);
                if fc < vals[d].min(fr) {
                    simplex[d] = c;
                    vals[d] = fc;
                } else {
                    for i in 1..=d {
                        simplex[i] = (0..d)
                            .map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]))
                            .collect();
                        vals[i] = f(&simplex[i]);
                    }
                }
            }
        }
        let i = (0..=d).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
        best = simplex[i].clone();
    }
    best
}

/// Central-difference Hessian.
fn hessian(f: &dyn Fn(&[f64]) -> f64, at: &[f64]) -> DMatrix<f64> {
    let d = at.len();
    let h = 1e-4;
    DMatrix::from_fn(d, d, |i, j| {
        let g = |di: f64, dj: f64| {
            let mut v = at.to_vec();
            v[i] += di;
            v[j] += dj;
            f(&v)
        };
        (g(h, h) - g(h, -h) - g(-h, h) + g(-h, -h)) / (4.0 * h * h)
    })
}

struct Sample {
    design: DMatrix<f64>,
    weights: Vec<f64>,
    classes: Vec<usize>,
}

fn sample(seed: u64, n: usize, num_classes: usize) -> Sample {
    let mut rng = Seed(seed).rng();
    let design = DMatrix::from_fn(n, 3, |_, c| if c == 0 { 1.0 } else { rng.sample(StandardNormal) });
    let weights = (0..n).map(|_| 0.2 + rng.random::<f64>()).collect();
    let classes = (0..n)
        .map(|i| {
            let eta: Vec<f64> = (0..num_classes)
                .map(|k| {
                    if k + 1 == num_classes {
                        0.0
                    } else {
                        0.4 * k as f64 + design[(i, 1)] - 0.5 * design[(i, 2)]
                    }
                })
                .collect();
            let z: f64 = eta.iter().map(|e| e.exp()).sum();
            let mut u = rng.random::<f64>() * z;
            for (k, e) in eta.iter().enumerate() {
                u -= e.exp();
                if u <= 0.0 {
                    return k;
                }
            }
            num_classes - 1
        })
        .collect();
    Sample {
        design,
        weights,
        classes,
    }
}

fn multinomial_nll(s: &Sample, num_classes: usize, theta: &[f64]) -> f64 {
    let p = s.design.ncols();
    let mut nll = 0.0;
    for i in 0..s.design.nrows() {
        let eta: Vec<f64> = (0..num_classes)
            .map(|k| {
                if k + 1 == num_classes {
                    0.0
                } else {
                    (0..p).map(|j| theta[k * p + j] * s.design[(i, j)]).sum()
                }
            })
            .collect();
        let log_z = eta.iter().map(|e| e.exp()).sum::<f64>().ln();
        nll -= s.weights[i] * (eta[s.classes[i]] - log_z);
    }
    nll
}

/// Weighted logistic regression on 60 rows against Nelder–Mead on the
/// written-out likelihood; standard errors against a numerical Hessian.
pub fn logistic_discrepancy(seed: u64) -> Discrepancy {
    let s = sample(seed, 60, 2);
    // class 0 is "success" against reference class 1
    let y: Vec<bool> = s.classes.iter().map(|&c| c == 0).collect();
    let fit = fit_logistic(&s.design, &y, &s.weights, &FitOptions::default()).unwrap();
    let nll = |t: &[f64]| multinomial_nll(&s, 2, t);
    let brute = nelder_mead(&nll, &[0.0; 3]);
    let cov = hessian(&nll, &brute).try_inverse().unwrap();
    let mut d = Discrepancy::default();
    for (j, (a, b)) in fit.coefficients.iter().zip(&brute).enumerate() {
        d.estimate = d.estimate.max((a - b).abs());
        d.se_rel = d
            .se_rel
            .max((fit.standard_errors()[j] / cov[(j, j)].sqrt() - 1.0).abs());
    }
    d
}

/// Three-class version of [`logistic_discrepancy`].
pub fn multinomial_discrepancy(seed: u64) -> Discrepancy {
    let s = sample(seed, 60, 3);
    let fit = fit_multinomial(&s.design, &s.classes, 3, &s.weights, &FitOptions::default()).unwrap();
    let nll = |t: &[f64]| multinomial_nll(&s, 3, t);
    let brute = nelder_mead(&nll, &[0.0; 6]);
    let cov = hessian(&nll, &brute).try_inverse().unwrap();
    let mut d = Discrepancy::default();
    for (j, (a, b)) in fit.coefficients.concat().iter().zip(&brute).enumerate() {
        d.estimate = d.estimate.max((a - b).abs());
        d.se_rel = d
            .se_rel
            .max((fit.covariance[(j, j)].sqrt() / cov[(j, j)].sqrt() - 1.0).abs());
    }
    d
}

/// Breslow partial log-likelihood, one event at a time over the full risk set.
fn breslow(times: &[f64], events: &[bool], treated: &[bool], w: &[f64], beta: f64) -> f64 {
    let score = |i: usize| if treated[i] { beta } else { 0.0 };
    let mut ll = 0.0;
    for i in 0..times.len() {
        if !events[i] {
            continue;
        }
        let denom: f64 = (0..times.len())
            .filter(|&j| times[j] >= times[i])
            .map(|j| w[j] * score(j).exp())
            .sum();
        ll += w[i] * (score(i) - denom.ln());
    }
    ll
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-10 {
        let (a, b) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if f(a) > f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

/// Weighted Cox on 50 rows with integer (heavily tied) times against a golden
/// section search on the Breslow likelihood.
pub fn cox_discrepancy(seed: u64) -> Discrepancy {
    let mut rng = Seed(seed).rng();
    let n = 50;
    let treated: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let times: Vec<f64> = treated
        .iter()
        .map(|&t| (rng.random::<f64>() * if t { 12.0 } else { 8.0 }).ceil())
        .collect();
    let events: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.75).collect();
    let w: Vec<f64> = (0..n).map(|_| 0.1 + rng.random::<f64>()).collect();

    let fit = weighted_cox_hr(&times, &events, &treated, &w).unwrap();
    let ll = |b: f64| breslow(&times, &events, &treated, &w, b);
    let beta = golden_max(ll, -5.0, 5.0);
    let h = 1e-4;
    let info = -(ll(beta + h) - 2.0 * ll(beta) + ll(beta - h)) / (h * h);
    Discrepancy {
        estimate: (fit.log_hazard_ratio - beta).abs(),
        se_rel: (fit.se * info.sqrt() - 1.0).abs(),
    }
}

/// Weighted KM with integer weights against the same data with every row
/// repeated `weight` times, and against a hand-written product-limit.
pub fn km_duplication_discrepancy(seed: u64) -> f64 {
    let mut rng = Seed(seed).rng();
    let n = 40;
    let times: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 10.0).ceil()).collect();
    let events: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.6).collect();
    let w: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..4u8))).collect();

    let (mut dt, mut de) = (Vec::new(), Vec::new());
    for i in 0..n {
        for _ in 0..w[i] as usize {
            dt.push(times[i]);
            de.push(events[i]);
        }
    }
    let weighted = weighted_km(&times, &events, &w).unwrap();
    let expanded = weighted_km(&dt, &de, &vec![1.0; dt.len()]).unwrap();
    if weighted.time != expanded.time || weighted.events != expanded.events {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for (a, b) in weighted.survival.iter().zip(&expanded.survival) {
        worst = worst.max((a - b).abs());
    }
    let mut surv = 1.0;
    for &t in &expanded.time {
        let at_risk = dt.iter().filter(|&&s| s >= t).count() as f64;
        let d = dt.iter().zip(&de).filter(|&(&s, &e)| s == t && e).count() as f64;
        surv *= 1.0 - d / at_risk;
        worst = worst.max((expanded.survival_at(t) - surv).abs());
    }
    worst
}
