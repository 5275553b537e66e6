use nalgebra::DMatrix;

use super::StatsError;

/// Named-column design matrix. Rows are observations (inspections).
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Self {
        let k = names.len();
        assert!(rows.iter().all(|r| r.len() == k), "row width differs from column count");
        let x = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
        DesignMatrix { names, x }
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Errors naming every column that is (numerically) a linear combination
    /// of the columns before it.
    pub fn check_full_rank(&self) -> Result<(), StatsError> {
        let collinear = collinear_columns(&self.x);
        if collinear.is_empty() {
            Ok(())
        } else {
            Err(StatsError::RankDeficient { columns: collinear.into_iter().map(|j| self.names[j].clone()).collect() })
        }
    }
}

/// Modified Gram–Schmidt over columns; a column whose residual after
/// projecting out the earlier independent columns is negligible relative to
/// its own norm is reported.
fn collinear_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
    let mut out = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        let mut r = col;
        for q in &basis {
            let proj = q.dot(&r);
            r -= q * proj;
        }
        let rn = r.norm();
        if norm == 0.0 || rn <= 1e-9 * norm.max(1.0) {
            out.push(j);
        } else {
            basis.push(r / rn);
        }
    }
    out
}
