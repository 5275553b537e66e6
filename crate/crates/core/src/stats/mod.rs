//! Evaluation statistics: logistic regression by IRLS, OLS adjusted means,
//! the Pearson chi-square test and report tables built on them.

mod chisq;
mod design;
mod logit;
mod ols;
pub mod special;
mod tables;

use thiserror::Error;

pub use chisq::{chi_square_independence, ChiSquareResult};
pub use design::DesignMatrix;
pub use logit::{
    fit_binomial_logit, two_by_two_design, RegressionFit, IRLS_TOL, MAX_IRLS_ITER, SEPARATION_BOUND, Z_95,
};
pub use ols::{adjusted_means_linear, fit_ols, AdjustedMeans, OlsFit};
pub use tables::{
    adjusted_means_table, comparison_design, format_p, precision_table, render_adjusted_means, render_histogram,
    render_precision_table, render_risk_table, risk_distribution_table, AdjustedMeansRecord, AdjustedMeansRow,
    AdjustedMeansTable, ChiSquareRow, Comparison, GroupRow, OddsRatioBlock, OddsRatioRow, PrecisionTable, RiskCountRow,
    RiskTable, TriggerGroup,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("design matrix is rank deficient; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("quasi-separation: coefficient of {column} exceeds the bound")]
    QuasiSeparation { column: String },
    #[error("outcome contains a single class")]
    SingleClass,
    #[error("information matrix is singular")]
    Singular,
    #[error("zero expected count in row {row}, column {col}")]
    ZeroExpected { row: usize, col: usize },
    #[error("{0}")]
    InvalidArgument(String),
}
