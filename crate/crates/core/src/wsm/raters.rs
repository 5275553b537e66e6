//! Rater judgments: majority aggregation with MD tie-break, and
//! Krippendorff's alpha for nominal data.

use super::WsmError;

/// Votes on one query. A `None` vote is missing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JudgmentRow {
    pub md: Vec<Option<bool>>,
    pub non_md: Vec<Option<bool>>,
}

impl JudgmentRow {
    pub fn complete(md: [bool; 3], non_md: [bool; 3]) -> Self {
        JudgmentRow { md: md.iter().map(|&v| Some(v)).collect(), non_md: non_md.iter().map(|&v| Some(v)).collect() }
    }

    pub fn votes(&self) -> impl Iterator<Item = Option<bool>> + '_ {
        self.md.iter().chain(self.non_md.iter()).copied()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JudgmentMatrix {
    pub rows: Vec<JudgmentRow>,
}

impl JudgmentMatrix {
    pub fn alpha(&self) -> Result<f64, WsmError> {
        let units: Vec<Vec<Option<u8>>> =
            self.rows.iter().map(|r| r.votes().map(|v| v.map(u8::from)).collect()).collect();
        krippendorff_alpha(&units)
    }

    pub fn aggregate(&self) -> Result<Vec<bool>, WsmError> {
        self.rows.iter().map(aggregate_rater_votes).collect()
    }
}

/// Majority of six votes; a 3–3 tie goes to the majority of the three MD
/// votes.
pub fn aggregate_rater_votes(row: &JudgmentRow) -> Result<bool, WsmError> {
    if row.md.len() != 3 || row.non_md.len() != 3 {
        return Err(WsmError::MalformedVotes(format!(
            "expected 3 MD and 3 non-MD votes, got {} and {}",
            row.md.len(),
            row.non_md.len()
        )));
    }
    let flatten = |votes: &[Option<bool>]| -> Result<usize, WsmError> {
        votes.iter().try_fold(0, |acc, v| match v {
            Some(true) => Ok(acc + 1),
            Some(false) => Ok(acc),
            None => Err(WsmError::MalformedVotes("missing vote".into())),
        })
    };
    let md_yes = flatten(&row.md)?;
    let yes = md_yes + flatten(&row.non_md)?;
    Ok(match yes.cmp(&3) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => md_yes >= 2,
    })
}

/// Krippendorff's alpha with the nominal metric. Each unit is the list of
/// values assigned by the raters (missing allowed); only units with at least
/// two values are pairable. If no disagreement is expected at all, alpha is
/// defined as 1.
pub fn krippendorff_alpha(units: &[Vec<Option<u8>>]) -> Result<f64, WsmError> {
    if units.len() < 2 {
        return Err(WsmError::InvalidArgument("alpha needs at least two units".into()));
    }
    if units.iter().map(Vec::len).max().unwrap_or(0) < 2 {
        return Err(WsmError::InvalidArgument("alpha needs at least two raters".into()));
    }
    let mut totals = [0f64; 256];
    let mut observed = 0.0;
    let mut n = 0.0;
    for unit in units {
        let mut counts = [0u32; 256];
        let mut m = 0u32;
        for v in unit.iter().flatten() {
            counts[*v as usize] += 1;
            m += 1;
        }
        if m < 2 {
            continue;
        }
        let m = f64::from(m);
        // Ordered pairs of different values in the unit, weighted 1/(m-1).
        let same: f64 = counts.iter().map(|&c| f64::from(c) * f64::from(c)).sum();
        observed += (m * m - same) / (m - 1.0);
        for (t, c) in totals.iter_mut().zip(counts.iter()) {
            *t += f64::from(*c);
        }
        n += m;
    }
    if n == 0.0 {
        return Err(WsmError::InvalidArgument("no pairable units".into()));
    }
    let expected = n * n - totals.iter().map(|t| t * t).sum::<f64>();
    if expected == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}
