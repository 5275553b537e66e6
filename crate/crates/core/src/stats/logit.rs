//! Binomial logistic regression by IRLS (Newton–Raphson on the
//! log-likelihood) with Wald inference.

use nalgebra::{DMatrix, DVector};

use super::design::DesignMatrix;
use super::special::normal_two_sided;
use super::StatsError;

pub const MAX_IRLS_ITER: usize = 25;
pub const IRLS_TOL: f64 = 1e-8;
/// Coefficients beyond this magnitude signal (quasi-)separation.
pub const SEPARATION_BOUND: f64 = 15.0;
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Column whose odds ratio is reported.
    pub group: usize,
    pub odds_ratio: f64,
    pub ci95: (f64, f64),
    pub p_value: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Log-likelihood at the start and after every iteration.
    pub loglik_trace: Vec<f64>,
}

impl RegressionFit {
    pub fn coefficient(&self, name: &str) -> Option<(f64, f64)> {
        let j = self.names.iter().position(|n| n == name)?;
        Some((self.coefficients[j], self.std_errors[j]))
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn log_likelihood(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter()
        .zip(y)
        .map(|(&z, &yi)| {
            // y z - ln(1 + e^z), stable in both tails.
            let log1pexp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            yi * z - log1pexp
        })
        .sum()
}

/// Fisher information XᵀWX with W = p(1-p).
fn information(x: &DMatrix<f64>, beta: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let p = (x * beta).map(sigmoid);
    let mut xw = x.clone();
    for (i, mut row) in xw.row_iter_mut().enumerate() {
        row *= p[i] * (1.0 - p[i]);
    }
    (x.transpose() * xw, p)
}

fn invert_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>, StatsError> {
    m.clone().cholesky().map(|c| c.inverse()).ok_or(StatsError::Singular)
}

/// Fits `y ~ X` and reports the odds ratio of column `group`.
pub fn fit_binomial_logit(design: &DesignMatrix, y: &[bool], group: usize) -> Result<RegressionFit, StatsError> {
    let x = &design.x;
    assert_eq!(x.nrows(), y.len(), "outcome length differs from design rows");
    assert!(group < x.ncols(), "group column out of range");
    let positives = y.iter().filter(|v| **v).count();
    if positives == 0 || positives == y.len() {
        return Err(StatsError::SingleClass);
    }
    design.check_full_rank()?;

    let yf: Vec<f64> = y.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
    let yv = DVector::from_column_slice(&yf);
    let mut beta = DVector::zeros(x.ncols());
    let mut ll = log_likelihood(x, &yf, &beta);
    let mut loglik_trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_IRLS_ITER {
        iterations += 1;
        let (info, p) = information(x, &beta);
        let score = x.transpose() * (&yv - p);
        let step = info.clone().cholesky().ok_or(StatsError::Singular)?.solve(&score);
        // Step-halving keeps the log-likelihood non-decreasing.
        let mut scale = 1.0;
        let mut candidate = &beta + &step;
        let mut cand_ll = log_likelihood(x, &yf, &candidate);
        while cand_ll < ll && scale > 1e-6 {
            scale *= 0.5;
            candidate = &beta + &step * scale;
            cand_ll = log_likelihood(x, &yf, &candidate);
        }
        if cand_ll < ll {
            candidate = beta.clone();
            cand_ll = ll;
        }
        let max_change = (&candidate - &beta).amax();
        beta = candidate;
        ll = cand_ll;
        loglik_trace.push(ll);
        if let Some(j) = beta.iter().position(|b| b.abs() > SEPARATION_BOUND || !b.is_finite()) {
            return Err(StatsError::QuasiSeparation { column: design.names[j].clone() });
        }
        if max_change < IRLS_TOL {
            converged = true;
            break;
        }
    }

    let (info, _) = information(x, &beta);
    let cov = invert_spd(&info)?;
    let std_errors: Vec<f64> = (0..beta.len()).map(|j| cov[(j, j)].sqrt()).collect();
    let b = beta[group];
    let se = std_errors[group];
    Ok(RegressionFit {
        names: design.names.clone(),
        coefficients: beta.iter().copied().collect(),
        std_errors,
        group,
        odds_ratio: b.exp(),
        ci95: ((b - Z_95 * se).exp(), (b + Z_95 * se).exp()),
        p_value: normal_two_sided(b / se),
        converged,
        iterations,
        loglik_trace,
    })
}

/// Two-group design (intercept + indicator) expanded from 2×2 counts:
/// `a`/`b` events/non-events in the group, `c`/`d` in the reference.
pub fn two_by_two_design(a: usize, b: usize, c: usize, d: usize) -> (DesignMatrix, Vec<bool>) {
    let mut rows = Vec::with_capacity(a + b + c + d);
    let mut y = Vec::with_capacity(a + b + c + d);
    for (g, count, outcome) in [(1.0, a, true), (1.0, b, false), (0.0, c, true), (0.0, d, false)] {
        for _ in 0..count {
            rows.push(vec![1.0, g]);
            y.push(outcome);
        }
    }
    (DesignMatrix::from_rows(vec!["intercept".into(), "group".into()], &rows), y)
}
