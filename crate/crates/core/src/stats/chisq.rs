use super::special::chi_square_sf;
use super::StatsError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of independence on an r×c table of counts, no
/// continuity correction.
pub fn chi_square_independence(table: &[Vec<f64>]) -> Result<ChiSquareResult, StatsError> {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    if r < 2 || c < 2 || table.iter().any(|row| row.len() != c) {
        return Err(StatsError::InvalidArgument("table must be rectangular and at least 2x2".into()));
    }
    if table.iter().flatten().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(StatsError::InvalidArgument("counts must be finite and non-negative".into()));
    }
    let row_sums: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let mut statistic = 0.0;
    for i in 0..r {
        for j in 0..c {
            let expected = row_sums[i] * col_sums[j] / total.max(f64::MIN_POSITIVE);
            if expected <= 0.0 {
                return Err(StatsError::ZeroExpected { row: i, col: j });
            }
            let d = table[i][j] - expected;
            statistic += d * d / expected;
        }
    }
    let dof = (r - 1) * (c - 1);
    Ok(ChiSquareResult { statistic, dof, p_value: chi_square_sf(statistic, dof as f64) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::special::ln_gamma;
    use proptest::prelude::*;

    fn density(x: f64, k: f64) -> f64 {
        ((k / 2.0 - 1.0) * x.ln() - x / 2.0 - (k / 2.0) * 2f64.ln() - ln_gamma(k / 2.0)).exp()
    }

    /// Composite Simpson in u = √x, which smooths the dof-1 density near
    /// zero; the tail past u = 20 is negligible.
    fn tail_by_quadrature(x: f64, k: f64) -> f64 {
        let (a, b) = (x.sqrt(), 20.0f64);
        let n = 200_000;
        let h = (b - a) / n as f64;
        let f = |u: f64| density(u * u, k) * 2.0 * u;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn upper_tail_matches_quadrature() {
        for k in 1..=5 {
            for x in [0.05, 0.5, 1.0, 2.5, 5.0, 9.0, 16.0] {
                let q = tail_by_quadrature(x, k as f64);
                let p = chi_square_sf(x, k as f64);
                assert!((p - q).abs() < 1e-8, "dof {k} x {x}: {p} vs {q}");
            }
        }
    }

    #[test]
    fn risk_distribution_difference_is_significant() {
        let t = vec![vec![84.0, 39.0, 9.0], vec![5702.0, 2325.0, 2759.0]];
        let res = chi_square_independence(&t).unwrap();
        assert_eq!(res.dof, 2);
        assert!(res.p_value < 0.001, "{res:?}");
    }

    #[test]
    fn identical_rows_give_zero() {
        let t = vec![vec![10.0, 20.0, 30.0], vec![20.0, 40.0, 60.0]];
        let res = chi_square_independence(&t).unwrap();
        assert!(res.statistic.abs() < 1e-12);
        assert!((res.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_expected_is_error() {
        let t = vec![vec![10.0, 0.0], vec![5.0, 0.0]];
        assert!(matches!(chi_square_independence(&t), Err(StatsError::ZeroExpected { row: 0, col: 1 })));
    }

    proptest! {
        #[test]
        fn statistic_invariant_under_permutation(
            cells in proptest::collection::vec(1u32..500, 12),
            row_rot in 0usize..3,
            col_rot in 0usize..4,
        ) {
            let t: Vec<Vec<f64>> = cells.chunks(4).map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect();
            let mut p = t.clone();
            p.rotate_left(row_rot);
            for row in &mut p {
                row.rotate_left(col_rot);
                row.swap(0, 3);
            }
            let a = chi_square_independence(&t).unwrap();
            let b = chi_square_independence(&p).unwrap();
            prop_assert!((a.statistic - b.statistic).abs() <= 1e-9 * a.statistic.max(1.0));
            prop_assert_eq!(a.dof, b.dof);
        }
    }
}
