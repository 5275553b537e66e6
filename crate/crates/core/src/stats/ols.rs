//! Ordinary least squares and adjusted group means by marginal
//! standardization.

use nalgebra::DVector;

use super::design::DesignMatrix;
use super::special::student_t_two_sided;
use super::StatsError;

#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub residual_variance: f64,
    pub residual_dof: usize,
}

impl OlsFit {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum()
    }
}

pub fn fit_ols(design: &DesignMatrix, y: &[f64]) -> Result<OlsFit, StatsError> {
    let x = &design.x;
    assert_eq!(x.nrows(), y.len(), "outcome length differs from design rows");
    design.check_full_rank()?;
    let yv = DVector::from_column_slice(y);
    let xtx = x.transpose() * x;
    let chol = xtx.cholesky().ok_or(StatsError::Singular)?;
    let beta = chol.solve(&(x.transpose() * &yv));
    let resid = &yv - x * &beta;
    let n = x.nrows();
    let k = x.ncols();
    let residual_dof = n.saturating_sub(k);
    let residual_variance = if residual_dof > 0 { resid.norm_squared() / residual_dof as f64 } else { f64::NAN };
    let inv = chol.inverse();
    let std_errors = (0..k).map(|j| (residual_variance * inv[(j, j)]).sqrt()).collect();
    Ok(OlsFit {
        names: design.names.clone(),
        coefficients: beta.iter().copied().collect(),
        std_errors,
        residual_variance,
        residual_dof,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdjustedMeans {
    /// Mean prediction with every row's group indicator set to 0.
    pub reference: f64,
    /// Mean prediction with every row's group indicator set to 1.
    pub group: f64,
    /// t-test p-value of the group coefficient.
    pub p_value: f64,
    pub fit: OlsFit,
}

impl AdjustedMeans {
    pub fn gap(&self) -> f64 {
        self.group - self.reference
    }
}

/// OLS of `y` on the design, then the average prediction over the pooled
/// sample with the 0/1 column `group` forced to each level.
pub fn adjusted_means_linear(design: &DesignMatrix, y: &[f64], group: usize) -> Result<AdjustedMeans, StatsError> {
    assert!(group < design.ncols(), "group column out of range");
    let fit = fit_ols(design, y)?;
    let n = design.nrows() as f64;
    let mut sums = [0.0f64; 2];
    for i in 0..design.nrows() {
        let mut row: Vec<f64> = design.x.row(i).iter().copied().collect();
        for (level, sum) in sums.iter_mut().enumerate() {
            row[group] = level as f64;
            *sum += fit.predict_row(&row);
        }
    }
    let t = fit.coefficients[group] / fit.std_errors[group];
    let p_value = if fit.residual_dof > 0 { student_t_two_sided(t, fit.residual_dof as f64) } else { f64::NAN };
    Ok(AdjustedMeans { reference: sums[0] / n, group: sums[1] / n, p_value, fit })
}
