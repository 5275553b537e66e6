//! Human-readable summary rebuilt from the artifact CSVs.

use std::fmt::Write as _;
use std::path::Path;

use super::artifacts::{
    read_inspections, read_metrics, require, ArtifactPaths, ADJUSTED_MEANS_HEADER, CHI_SQUARE_HEADER,
    ODDS_RATIO_HEADER, PRECISION_HEADER, RISK_HEADER,
};
use super::{at, PipelineError};
use crate::locmodel::{read_daily_list, read_histogram};
use crate::logdata::{read_csv, Trigger};
use crate::stats::{
    render_adjusted_means, render_histogram, render_precision_table, render_risk_table, AdjustedMeansRecord,
    ChiSquareRow, GroupRow, OddsRatioRow, RiskCountRow,
};

fn load<T: serde::de::DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>, PipelineError> {
    require(path, "report")?;
    read_csv(path, header).map_err(at("report"))
}

/// Renders the risk distribution with its chi-square test, the precision
/// and odds-ratio block, adjusted violation means, the attribution
/// histogram and the classifier metrics. Fails naming the first missing
/// artifact.
pub fn report(dir: &Path) -> Result<String, PipelineError> {
    let paths = ArtifactPaths::new(dir);
    let metrics = read_metrics(&paths.wsm_metrics(), "report")?;
    require(&paths.daily_lists(), "report")?;
    let daily = read_daily_list(&paths.daily_lists()).map_err(at("report"))?;
    let inspections = read_inspections(&paths.inspections(), "report")?;
    let risk: Vec<RiskCountRow> = load(&paths.risk_distribution(), &RISK_HEADER)?;
    let chi: Vec<ChiSquareRow> = load(&paths.chi_square(), &CHI_SQUARE_HEADER)?;
    let precision: Vec<GroupRow> = load(&paths.precision(), &PRECISION_HEADER)?;
    let odds: Vec<OddsRatioRow> = load(&paths.odds_ratios(), &ODDS_RATIO_HEADER)?;
    let adjusted: Vec<AdjustedMeansRecord> = load(&paths.adjusted_means(), &ADJUSTED_MEANS_HEADER)?;
    require(&paths.histogram(), "report")?;
    let histogram = read_histogram(&paths.histogram()).map_err(at("report"))?;

    let mut out = String::new();
    let _ = writeln!(out, "Query classifier");
    for m in &metrics {
        let _ = writeln!(out, "  {:<20} {}", m.metric, m.value);
    }
    let days: std::collections::BTreeSet<_> = daily.iter().map(|r| r.date).collect();
    let finder = inspections.iter().filter(|i| i.trigger == Trigger::Finder).count();
    let _ = writeln!(out, "\nDaily lists");
    let _ = writeln!(out, "  {} ranked entries on {} days", daily.len(), days.len());
    let _ = writeln!(out, "  {finder} FINDER inspections of {} in total", inspections.len());

    let _ = writeln!(out, "\nRisk level of inspected restaurants");
    let no_test = ChiSquareRow { statistic: None, dof: None, p_value: None, status: "missing".into() };
    out.push_str(&render_risk_table(&risk, chi.first().unwrap_or(&no_test)));
    let _ = writeln!(out, "\nUnsafe inspections by trigger");
    out.push_str(&render_precision_table(&precision, &odds));
    let _ = writeln!(out, "\nViolations per inspection, adjusted for city and risk level");
    out.push_str(&render_adjusted_means(&adjusted));
    let _ = writeln!(out, "\nRecency rank of the attributed source visit");
    let labels: Vec<&str> = histogram.iter().map(|h| h.rank.as_str()).collect();
    let fractions: Vec<f64> = histogram.iter().map(|h| h.fraction).collect();
    out.push_str(&render_histogram(&labels, &fractions));
    Ok(out)
}
