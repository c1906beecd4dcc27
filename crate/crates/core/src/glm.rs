//! Weighted binary and multinomial logistic regression.
//!
//! Both fits maximize the case-weighted log-likelihood by damped Newton
//! iteration. Convergence is judged on the gradient of the log-likelihood
//! divided by the total case weight, so that rescaling every weight by a
//! constant changes neither the path nor the answer.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Max-norm tolerance on the normalized gradient.
    pub tol: f64,
    pub max_iter: usize,
    /// Any coefficient beyond this magnitude is reported as separation.
    pub separation_limit: f64,
    /// L2 penalty on the non-intercept coefficients (per unit of case weight).
    pub ridge: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol: 1e-8,
            max_iter: 100,
            separation_limit: 30.0,
            ridge: 0.0,
        }
    }
}

/// Models that map a design row (intercept included) to class probabilities.
pub trait ProbabilityModel {
    /// Expected length of a design row.
    fn num_inputs(&self) -> usize;

    fn num_classes(&self) -> usize;

    /// Writes class probabilities into `out` without checking dimensions.
    fn predict_into(&self, row: &[f64], out: &mut [f64]);

    fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.num_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.num_inputs(),
                got: row.len(),
            });
        }
        let mut out = vec![0.0; self.num_classes()];
        self.predict_into(row, &mut out);
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct LogitFit {
    /// Intercept first, in design-column order.
    pub coefficients: Vec<f64>,
    /// Inverse of the observed information (case weights included).
    pub covariance: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
}

impl LogitFit {
    /// `P(y = 1 | row)`.
    pub fn prob(&self, row: &[f64]) -> f64 {
        logistic(dot(&self.coefficients, row))
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.coefficients.len())
            .map(|j| self.covariance[(j, j)].max(0.0).sqrt())
            .collect()
    }
}

/// Class 0 is `y = 0`, class 1 is `y = 1`.
impl ProbabilityModel for LogitFit {
    fn num_inputs(&self) -> usize {
        self.coefficients.len()
    }

    fn num_classes(&self) -> usize {
        2
    }

    fn predict_into(&self, row: &[f64], out: &mut [f64]) {
        let p = self.prob(row);
        out[0] = 1.0 - p;
        out[1] = p;
    }
}

/// Multinomial logit with the last class as reference.
#[derive(Debug, Clone)]
pub struct MultinomialFit {
    /// `coefficients[k]` is the coefficient vector of class `k` against the
    /// reference class `num_classes - 1`.
    pub coefficients: Vec<Vec<f64>>,
    /// Inverse observed information over the class-major stacked parameters.
    pub covariance: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
}

impl ProbabilityModel for MultinomialFit {
    fn num_inputs(&self) -> usize {
        self.coefficients[0].len()
    }

    fn num_classes(&self) -> usize {
        self.coefficients.len() + 1
    }

    fn predict_into(&self, row: &[f64], out: &mut [f64]) {
        let k = self.coefficients.len();
        for (o, beta) in out.iter_mut().zip(&self.coefficients) {
            *o = dot(beta, row);
        }
        out[k] = 0.0;
        softmax_in_place(&mut out[..=k]);
    }
}

pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^eta)` without overflow.
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    for x in v.iter_mut() {
        *x /= s;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_shapes(design: &DMatrix<f64>, len: usize, weights: &[f64]) -> Result<()> {
    if design.nrows() != len {
        return Err(Error::DimensionMismatch {
            expected: design.nrows(),
            got: len,
        });
    }
    if weights.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            got: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidConfig(
            "case weights must be finite and nonnegative".into(),
        ));
    }
    Ok(())
}

const STEP_TOL: f64 = 1e-4;

/// Objective, gradient and negative Hessian of a (normalized) log-likelihood.
struct Eval {
    value: f64,
    grad: DVector<f64>,
    info: DMatrix<f64>,
}

/// Damped Newton ascent shared by both fits. `eval(theta, need_derivs)`
/// returns the normalized objective and, when asked, its derivatives.
fn newton(
    dim: usize,
    opts: &FitOptions,
    mut eval: impl FnMut(&DVector<f64>, bool) -> Eval,
) -> Result<(DVector<f64>, usize, Eval)> {
    let mut theta = DVector::zeros(dim);
    let mut cur = eval(&theta, true);
    for iter in 0..opts.max_iter {
        let step = cur.info.clone().cholesky().ok_or(Error::Singular)?.solve(&cur.grad);
        // A vanishing gradient alone is not enough: under separation the
        // gradient decays while the Newton step stays of order one.
        if cur.grad.amax() < opts.tol && step.amax() < STEP_TOL * (1.0 + theta.amax()) {
            // Quadratic convergence: the final step lands at rounding
            // precision, and the information barely moves.
            return Ok((theta + step, iter, cur));
        }
        // The full step nearly always succeeds, so its derivatives are
        // computed up front and reused as the next iterate.
        let mut t = 1.0;
        let mut next_theta = &theta + &step;
        let mut next = eval(&next_theta, true);
        let mut halvings = 0;
        while !(next.value >= cur.value - 1e-12 * cur.value.abs()) && halvings < 40 {
            t *= 0.5;
            halvings += 1;
            next_theta = &theta + &step * t;
            next = eval(&next_theta, false);
        }
        if halvings > 0 {
            next = eval(&next_theta, true);
        }
        theta = next_theta;
        if theta.amax() > opts.separation_limit {
            return Err(Error::Separation {
                limit: opts.separation_limit,
            });
        }
        cur = next;
    }
    Err(Error::NotConverged(opts.max_iter))
}

fn total_weight(weights: &[f64]) -> Result<f64> {
    let w: f64 = weights.iter().sum();
    if w > 0.0 {
        Ok(w)
    } else {
        Err(Error::AllZeroWeights)
    }
}

/// Fits `logit P(y = 1) = design * beta` by weighted maximum likelihood.
///
/// `design` must already contain the intercept column.
pub fn fit_logistic(
    design: &DMatrix<f64>,
    response: &[bool],
    case_weights: &[f64],
    opts: &FitOptions,
) -> Result<LogitFit> {
    check_shapes(design, response.len(), case_weights)?;
    let total = total_weight(case_weights)?;
    let (mut pos, mut neg) = (0.0, 0.0);
    for (&y, &w) in response.iter().zip(case_weights) {
        if y {
            pos += w;
        } else {
            neg += w;
        }
    }
    if pos <= 0.0 || neg <= 0.0 {
        // No interior maximum when only one class carries weight.
        return Err(Error::Separation {
            limit: opts.separation_limit,
        });
    }
    let p = design.ncols();
    let n = design.nrows();
    let y: DVector<f64> = DVector::from_iterator(n, response.iter().map(|&b| f64::from(u8::from(b))));
    let w = DVector::from_column_slice(case_weights);

    let eval = |beta: &DVector<f64>, derivs: bool| {
        let eta = design * beta;
        let mut ll = 0.0;
        for i in 0..n {
            if w[i] > 0.0 {
                ll += w[i] * (y[i] * eta[i] - softplus(eta[i]));
            }
        }
        let penalty: f64 = beta.iter().skip(1).map(|b| b * b).sum::<f64>();
        let value = ll / total - 0.5 * opts.ridge * penalty;
        if !derivs {
            return Eval {
                value,
                grad: DVector::zeros(0),
                info: DMatrix::zeros(0, 0),
            };
        }
        let mut resid = DVector::zeros(n);
        let mut curv = DVector::zeros(n);
        for i in 0..n {
            let pi = logistic(eta[i]);
            resid[i] = w[i] * (y[i] - pi) / total;
            curv[i] = w[i] * pi * logistic(-eta[i]) / total;
        }
        let mut grad = design.tr_mul(&resid);
        let mut scaled = design.clone();
        for mut col in scaled.column_iter_mut() {
            col.component_mul_assign(&curv);
        }
        let mut info = design.tr_mul(&scaled);
        for j in 1..p {
            grad[j] -= opts.ridge * beta[j];
            info[(j, j)] += opts.ridge;
        }
        Eval { value, grad, info }
    };

    let (beta, iterations, last) = newton(p, opts, eval)?;
    let covariance = inverse_information(last.info, total)?;
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    Ok(LogitFit {
        log_likelihood: logistic_log_likelihood(design, response, case_weights, &coefficients),
        coefficients,
        covariance,
        converged: true,
        iterations,
    })
}

/// Covariance from the normalized information at the optimum.
fn inverse_information(info: DMatrix<f64>, total: f64) -> Result<DMatrix<f64>> {
    (info * total).cholesky().map(|c| c.inverse()).ok_or(Error::Singular)
}

/// Fits a multinomial logit for classes `0..num_classes`, with class
/// `num_classes - 1` as reference.
pub fn fit_multinomial(
    design: &DMatrix<f64>,
    response: &[usize],
    num_classes: usize,
    case_weights: &[f64],
    opts: &FitOptions,
) -> Result<MultinomialFit> {
    check_shapes(design, response.len(), case_weights)?;
    if num_classes < 2 {
        return Err(Error::InvalidConfig("need at least two classes".into()));
    }
    if let Some(&bad) = response.iter().find(|&&c| c >= num_classes) {
        return Err(Error::InvalidConfig(format!(
            "class label {bad} outside 0..{num_classes}"
        )));
    }
    let total = total_weight(case_weights)?;
    let mut class_weight = vec![0.0; num_classes];
    for (&c, &w) in response.iter().zip(case_weights) {
        class_weight[c] += w;
    }
    if class_weight.iter().any(|&w| w <= 0.0) {
        return Err(Error::Separation {
            limit: opts.separation_limit,
        });
    }

    let n = design.nrows();
    let p = design.ncols();
    let k = num_classes - 1;
    let dim = k * p;

    // Row-major copy: the loop below walks one subject at a time.
    let rows: Vec<f64> = (0..n).flat_map(|i| (0..p).map(move |j| design[(i, j)])).collect();
    let eval = |theta: &DVector<f64>, derivs: bool| {
        let theta = theta.as_slice();
        let mut eta = vec![0.0; k];
        let mut value = 0.0;
        let mut grad = vec![0.0; if derivs { dim } else { 0 }];
        // upper triangle, mirrored once at the end
        let mut info = vec![0.0; if derivs { dim * dim } else { 0 }];
        for i in 0..n {
            let wi = case_weights[i];
            if wi <= 0.0 {
                continue;
            }
            let row = &rows[i * p..(i + 1) * p];
            let mut m = 0.0f64;
            for c in 0..k {
                eta[c] = dot(&theta[c * p..(c + 1) * p], row);
                m = m.max(eta[c]);
            }
            let y = response[i];
            let eta_y = if y < k { eta[y] } else { 0.0 };
            // eta[c] becomes exp(eta_c - m); the reference class is exp(-m)
            let mut sum = (-m).exp();
            for e in eta.iter_mut() {
                let v = (*e - m).exp();
                sum += v;
                *e = v;
            }
            value += wi * (eta_y - m - sum.ln());
            if !derivs {
                continue;
            }
            let ws = wi / total;
            for e in eta.iter_mut() {
                *e /= sum;
            }
            let p_ref = (-m).exp() / sum;
            for c in 0..k {
                let r = ws * (f64::from(u8::from(y == c)) - eta[c]);
                for j in 0..p {
                    grad[c * p + j] += r * row[j];
                }
                for d in c..k {
                    // 1 - p_c summed from the other classes keeps precision
                    // when p_c is close to one.
                    let cw = if c == d {
                        ws * eta[c]
                            * (p_ref
                                + eta
                                    .iter()
                                    .enumerate()
                                    .filter(|&(e, _)| e != c)
                                    .map(|(_, q)| q)
                                    .sum::<f64>())
                    } else {
                        -ws * eta[c] * eta[d]
                    };
                    for j in 0..p {
                        let a = cw * row[j];
                        let base = (c * p + j) * dim + d * p;
                        let from = if c == d { j } else { 0 };
                        for l in from..p {
                            info[base + l] += a * row[l];
                        }
                    }
                }
            }
        }
        let mut grad = DVector::from_vec(grad);
        let mut info = if derivs {
            DMatrix::from_fn(
                dim,
                dim,
                |r, c| if r <= c { info[r * dim + c] } else { info[c * dim + r] },
            )
        } else {
            DMatrix::zeros(0, 0)
        };
        let mut penalty = 0.0;
        for c in 0..k {
            for j in 1..p {
                let b = theta[c * p + j];
                penalty += b * b;
                if derivs {
                    grad[c * p + j] -= opts.ridge * b;
                    info[(c * p + j, c * p + j)] += opts.ridge;
                }
            }
        }
        Eval {
            value: value / total - 0.5 * opts.ridge * penalty,
            grad,
            info,
        }
    };

    let (theta, iterations, last) = newton(dim, opts, eval)?;
    let value = last.value;
    let covariance = inverse_information(last.info, total)?;
    let coefficients = (0..k).map(|c| theta.as_slice()[c * p..(c + 1) * p].to_vec()).collect();
    let penalty: f64 = (0..k)
        .flat_map(|c| (1..p).map(move |j| c * p + j))
        .map(|i| theta[i] * theta[i])
        .sum();
    Ok(MultinomialFit {
        coefficients,
        covariance,
        converged: true,
        iterations,
        log_likelihood: value * total + 0.5 * opts.ridge * total * penalty,
    })
}

/// Weighted log-likelihood of a binary logit at arbitrary coefficients.
pub fn logistic_log_likelihood(design: &DMatrix<f64>, response: &[bool], case_weights: &[f64], beta: &[f64]) -> f64 {
    let beta = DVector::from_column_slice(beta);
    let eta = design * beta;
    eta.iter()
        .zip(response)
        .zip(case_weights)
        .map(|((&e, &y), &w)| w * (if y { e } else { 0.0 } - softplus(e)))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn design_from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    fn simulated(n: usize, beta: &[f64], seed: u64) -> (DMatrix<f64>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = beta.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut r = vec![1.0];
                r.extend((1..p).map(|_| rng.random_range(-2.0..2.0)));
                r
            })
            .collect();
        let y = rows
            .iter()
            .map(|r| rng.random::<f64>() < logistic(dot(beta, r)))
            .collect();
        (design_from_rows(&rows), y)
    }

    #[test]
    fn constant_response_is_separation() {
        let x = design_from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]);
        let r = fit_logistic(&x, &[true, true, true], &[1.0; 3], &FitOptions::default());
        assert!(matches!(r, Err(Error::Separation { .. })));
    }

    #[test]
    fn perfectly_separated_data_is_detected() {
        let x = design_from_rows(&[vec![1.0, -2.0], vec![1.0, -1.0], vec![1.0, 1.0], vec![1.0, 2.0]]);
        let r = fit_logistic(&x, &[false, false, true, true], &[1.0; 4], &FitOptions::default());
        assert!(matches!(r, Err(Error::Separation { .. })));
    }

    #[test]
    fn symmetric_two_point_design_gives_zero() {
        let x = design_from_rows(&[vec![1.0, -1.0], vec![1.0, -1.0], vec![1.0, 1.0], vec![1.0, 1.0]]);
        let fit = fit_logistic(&x, &[true, false, true, false], &[1.0; 4], &FitOptions::default()).unwrap();
        assert!(fit.coefficients.iter().all(|b| b.abs() < 1e-12));
    }

    #[test]
    fn zero_coefficients_predict_one_half() {
        let fit = LogitFit {
            coefficients: vec![0.0; 3],
            covariance: DMatrix::identity(3, 3),
            converged: true,
            iterations: 0,
            log_likelihood: 0.0,
        };
        assert_eq!(fit.predict_proba(&[1.0, 3.0, -2.0]).unwrap(), vec![0.5, 0.5]);
        assert!(matches!(
            fit.predict_proba(&[1.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn generator_coefficients_at_origin_with_b_one() {
        // logit P(A = 1 | x, b) = -2 + x1 - 2 x2 + 2 b
        let fit = LogitFit {
            coefficients: vec![-2.0, 1.0, -2.0, 2.0],
            covariance: DMatrix::identity(4, 4),
            converged: true,
            iterations: 0,
            log_likelihood: 0.0,
        };
        assert!((fit.prob(&[1.0, 0.0, 0.0, 1.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn converged_fit_has_small_gradient() {
        let (x, y) = simulated(400, &[0.3, -1.0, 0.7], 7);
        let w: Vec<f64> = (0..400).map(|i| 0.5 + (i % 3) as f64).collect();
        let fit = fit_logistic(&x, &y, &w, &FitOptions::default()).unwrap();
        let beta = DVector::from_column_slice(&fit.coefficients);
        let eta = &x * beta;
        let total: f64 = w.iter().sum();
        let mut g = vec![0.0; 3];
        for i in 0..400 {
            let r = f64::from(u8::from(y[i])) - logistic(eta[i]);
            for j in 0..3 {
                g[j] += w[i] * r * x[(i, j)] / total;
            }
        }
        assert!(g.iter().all(|v| v.abs() < 1e-6), "{g:?}");
    }

    #[test]
    fn doubling_weights_leaves_coefficients_unchanged() {
        let (x, y) = simulated(300, &[-0.5, 1.2, 0.4], 11);
        let w: Vec<f64> = (0..300).map(|i| 1.0 + (i % 4) as f64 * 0.25).collect();
        let w2: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
        let a = fit_logistic(&x, &y, &w, &FitOptions::default()).unwrap();
        let b = fit_logistic(&x, &y, &w2, &FitOptions::default()).unwrap();
        for (u, v) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn recovers_generating_coefficients_at_large_n() {
        let truth = [-2.0, 1.0, -2.0, 2.0];
        let (x, y) = simulated(10_000, &truth, 3);
        let fit = fit_logistic(&x, &y, &vec![1.0; 10_000], &FitOptions::default()).unwrap();
        for ((b, t), se) in fit.coefficients.iter().zip(truth).zip(fit.standard_errors()) {
            assert!((b - t).abs() < 3.0 * se, "{b} vs {t} (se {se})");
        }
    }

    #[test]
    fn multinomial_with_two_classes_matches_logistic() {
        let (x, y) = simulated(250, &[0.2, 0.8, -1.1], 5);
        let w: Vec<f64> = (0..250).map(|i| 1.0 + (i % 2) as f64).collect();
        let logit = fit_logistic(&x, &y, &w, &FitOptions::default()).unwrap();
        // class 0 = (y == 1), reference class 1 = (y == 0)
        let labels: Vec<usize> = y.iter().map(|&b| usize::from(!b)).collect();
        let multi = fit_multinomial(&x, &labels, 2, &w, &FitOptions::default()).unwrap();
        for (u, v) in logit.coefficients.iter().zip(&multi.coefficients[0]) {
            assert!((u - v).abs() < 1e-6);
        }
        assert!((logit.log_likelihood - multi.log_likelihood).abs() < 1e-8);
    }

    #[test]
    fn multinomial_constant_response_is_separation() {
        let x = design_from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]);
        let r = fit_multinomial(&x, &[1, 1, 1], 3, &[1.0; 3], &FitOptions::default());
        assert!(matches!(r, Err(Error::Separation { .. })));
    }

    #[test]
    fn multinomial_probabilities_sum_to_one() {
        let fit = MultinomialFit {
            coefficients: vec![vec![0.3, -1.0], vec![2.0, 0.5]],
            covariance: DMatrix::identity(4, 4),
            converged: true,
            iterations: 0,
            log_likelihood: 0.0,
        };
        for x in [-30.0, -1.0, 0.0, 4.0, 50.0] {
            let p = fit.predict_proba(&[1.0, x]).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn ridge_shrinks_toward_zero() {
        let (x, y) = simulated(200, &[0.0, 2.0], 9);
        let w = vec![1.0; 200];
        let plain = fit_logistic(&x, &y, &w, &FitOptions::default()).unwrap();
        let ridge = fit_logistic(
            &x,
            &y,
            &w,
            &FitOptions {
                ridge: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(ridge.coefficients[1].abs() < plain.coefficients[1].abs());
    }
}
