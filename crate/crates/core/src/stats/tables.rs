//! Report tables: risk distribution by trigger group, unsafe-outcome
//! precision with odds-ratio fits, and adjusted violation means.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::chisq::{chi_square_independence, ChiSquareResult};
use super::design::DesignMatrix;
use super::logit::{fit_binomial_logit, RegressionFit};
use super::ols::adjusted_means_linear;
use super::StatsError;
use crate::logdata::{City, InspectionRecord, RestaurantRecord, RiskLevel, Trigger};

/// Inspection groups compared in the reports. `Baseline` is every
/// non-FINDER inspection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TriggerGroup {
    Finder,
    Baseline,
    Routine,
    Complaint,
}

impl TriggerGroup {
    pub const ALL: [TriggerGroup; 4] =
        [TriggerGroup::Finder, TriggerGroup::Baseline, TriggerGroup::Routine, TriggerGroup::Complaint];

    pub fn contains(self, t: Trigger) -> bool {
        match self {
            TriggerGroup::Finder => t == Trigger::Finder,
            TriggerGroup::Baseline => t != Trigger::Finder,
            TriggerGroup::Routine => t == Trigger::Routine,
            TriggerGroup::Complaint => t == Trigger::Complaint,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TriggerGroup::Finder => "FINDER",
            TriggerGroup::Baseline => "BASELINE",
            TriggerGroup::Routine => "ROUTINE",
            TriggerGroup::Complaint => "COMPLAINT",
        }
    }
}

/// FINDER against one comparator group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Comparison {
    pub against: TriggerGroup,
}

impl Comparison {
    pub const ALL: [Comparison; 3] = [
        Comparison { against: TriggerGroup::Baseline },
        Comparison { against: TriggerGroup::Complaint },
        Comparison { against: TriggerGroup::Routine },
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: TriggerGroup,
    /// `None` is the all-strata row.
    pub stratum: Option<RiskLevel>,
    pub n: usize,
    pub unsafe_count: usize,
}

impl GroupRow {
    pub fn unsafe_fraction(&self) -> Option<f64> {
        (self.n > 0).then(|| self.unsafe_count as f64 / self.n as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OddsRatioBlock {
    pub comparison: Comparison,
    /// Inspections entering the fit.
    pub n: usize,
    pub fit: Result<RegressionFit, StatsError>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionTable {
    pub rows: Vec<GroupRow>,
    pub odds_ratios: Vec<OddsRatioBlock>,
}

impl PrecisionTable {
    pub fn row(&self, group: TriggerGroup, stratum: Option<RiskLevel>) -> &GroupRow {
        self.rows.iter().find(|r| r.group == group && r.stratum == stratum).expect("every group/stratum row is emitted")
    }

    pub fn odds_ratio(&self, against: TriggerGroup) -> Option<&RegressionFit> {
        self.odds_ratios.iter().find(|b| b.comparison.against == against).and_then(|b| b.fit.as_ref().ok())
    }
}

fn lookup(registry: &[RestaurantRecord]) -> HashMap<&str, &RestaurantRecord> {
    registry.iter().map(|r| (r.restaurant_id.as_str(), r)).collect()
}

fn resolve<'a>(
    inspections: &'a [InspectionRecord],
    registry: &'a [RestaurantRecord],
) -> Result<Vec<(&'a InspectionRecord, &'a RestaurantRecord)>, StatsError> {
    let reg = lookup(registry);
    inspections
        .iter()
        .map(|i| {
            reg.get(i.restaurant_id.as_str())
                .map(|r| (i, *r))
                .ok_or_else(|| StatsError::InvalidArgument(format!("restaurant {} not in registry", i.restaurant_id)))
        })
        .collect()
}

/// Design for FINDER vs `against`: intercept, FINDER indicator, city
/// dummies (first city in sort order is the reference), Medium/Low risk
/// dummies (High is the reference). Only levels present in the selected
/// rows get a column. Rows are restricted to cities in which the
/// comparator group has inspections. Returns the design and the selected
/// inspections in row order.
pub fn comparison_design<'a>(
    inspections: &'a [InspectionRecord],
    registry: &'a [RestaurantRecord],
    against: TriggerGroup,
) -> Result<(DesignMatrix, Vec<&'a InspectionRecord>), StatsError> {
    let resolved = resolve(inspections, registry)?;
    let comparator_cities: BTreeSet<&City> =
        resolved.iter().filter(|(i, _)| against.contains(i.trigger)).map(|(_, r)| &r.city).collect();
    let selected: Vec<_> = resolved
        .into_iter()
        .filter(|(i, r)| {
            (i.trigger == Trigger::Finder || against.contains(i.trigger)) && comparator_cities.contains(&r.city)
        })
        .collect();
    let cities: Vec<&City> = selected.iter().map(|(_, r)| &r.city).collect::<BTreeSet<_>>().into_iter().collect();
    let risks: Vec<RiskLevel> = selected
        .iter()
        .map(|(_, r)| r.risk_level)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|l| *l != RiskLevel::High)
        .collect();
    let mut names = vec!["intercept".to_string(), "finder".to_string()];
    names.extend(cities.iter().skip(1).map(|c| format!("city:{c}")));
    names.extend(risks.iter().map(|l| format!("risk:{}", l.as_str())));
    let rows: Vec<Vec<f64>> = selected
        .iter()
        .map(|(i, r)| {
            let mut row = vec![1.0, f64::from(u8::from(i.trigger == Trigger::Finder))];
            row.extend(cities.iter().skip(1).map(|c| f64::from(u8::from(**c == r.city))));
            row.extend(risks.iter().map(|l| f64::from(u8::from(*l == r.risk_level))));
            row
        })
        .collect();
    Ok((DesignMatrix::from_rows(names, &rows), selected.into_iter().map(|(i, _)| i).collect()))
}

/// Unsafe counts per trigger group and risk stratum, plus a fixed-effects
/// logistic fit of FINDER against each comparator. A fit that cannot be
/// computed (single class, separation, empty group) is kept as its error.
pub fn precision_table(
    inspections: &[InspectionRecord],
    registry: &[RestaurantRecord],
) -> Result<PrecisionTable, StatsError> {
    let resolved = resolve(inspections, registry)?;
    let mut rows = Vec::new();
    for group in TriggerGroup::ALL {
        for stratum in std::iter::once(None).chain(RiskLevel::ALL.into_iter().map(Some)) {
            let (n, unsafe_count) = resolved
                .iter()
                .filter(|(i, r)| group.contains(i.trigger) && stratum.is_none_or(|s| s == r.risk_level))
                .fold((0, 0), |(n, u), (i, _)| (n + 1, u + usize::from(i.outcome.is_unsafe())));
            rows.push(GroupRow { group, stratum, n, unsafe_count });
        }
    }
    let mut odds_ratios = Vec::new();
    for comparison in Comparison::ALL {
        let (design, selected) = comparison_design(inspections, registry, comparison.against)?;
        let y: Vec<bool> = selected.iter().map(|i| i.outcome.is_unsafe()).collect();
        let n = y.len();
        let has_both = selected.iter().any(|i| i.trigger == Trigger::Finder)
            && selected.iter().any(|i| i.trigger != Trigger::Finder);
        let fit = if !has_both {
            Err(StatsError::InvalidArgument(format!(
                "no FINDER or {} inspections to compare",
                comparison.against.as_str()
            )))
        } else {
            fit_binomial_logit(&design, &y, 1)
        };
        odds_ratios.push(OddsRatioBlock { comparison, n, fit });
    }
    Ok(PrecisionTable { rows, odds_ratios })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiskTable {
    /// Counts indexed by `RiskLevel::index`.
    pub finder: [usize; 3],
    pub baseline: [usize; 3],
    pub test: Result<ChiSquareResult, StatsError>,
}

/// Risk-level distribution of FINDER vs BASELINE inspections with a
/// chi-square test of independence.
pub fn risk_distribution_table(
    inspections: &[InspectionRecord],
    registry: &[RestaurantRecord],
) -> Result<RiskTable, StatsError> {
    let resolved = resolve(inspections, registry)?;
    let mut finder = [0usize; 3];
    let mut baseline = [0usize; 3];
    for (i, r) in resolved {
        let slot = if i.trigger == Trigger::Finder { &mut finder } else { &mut baseline };
        slot[r.risk_level.index()] += 1;
    }
    let table = vec![finder.iter().map(|&c| c as f64).collect(), baseline.iter().map(|&c| c as f64).collect()];
    Ok(RiskTable { finder, baseline, test: chi_square_independence(&table) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdjustedMeansRow {
    pub measure: &'static str,
    pub raw_finder: Option<f64>,
    pub raw_baseline: Option<f64>,
    /// (FINDER, BASELINE, p-value) when the regression can be fit.
    pub adjusted: Result<(f64, f64, f64), StatsError>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdjustedMeansTable {
    pub rows: Vec<AdjustedMeansRow>,
}

/// Critical and major violation counts, FINDER vs BASELINE, adjusted for
/// city and risk level.
/// A violation count read off an inspection, with its name.
type Measure = (&'static str, fn(&InspectionRecord) -> i64);

pub fn adjusted_means_table(
    inspections: &[InspectionRecord],
    registry: &[RestaurantRecord],
) -> Result<AdjustedMeansTable, StatsError> {
    let (design, selected) = comparison_design(inspections, registry, TriggerGroup::Baseline)?;
    let mut rows = Vec::new();
    let measures: [Measure; 2] = [("critical", |i| i.critical_count), ("major", |i| i.major_count)];
    for (measure, get) in measures {
        let y: Vec<f64> = selected.iter().map(|i| get(i) as f64).collect();
        let raw = |finder: bool| {
            let v: Vec<f64> = selected
                .iter()
                .zip(&y)
                .filter(|(i, _)| (i.trigger == Trigger::Finder) == finder)
                .map(|(_, y)| *y)
                .collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        let (raw_finder, raw_baseline) = (raw(true), raw(false));
        let adjusted = if raw_finder.is_none() || raw_baseline.is_none() {
            Err(StatsError::InvalidArgument("both groups need inspections".into()))
        } else {
            adjusted_means_linear(&design, &y, 1).map(|m| (m.group, m.reference, m.p_value))
        };
        rows.push(AdjustedMeansRow { measure, raw_finder, raw_baseline, adjusted });
    }
    Ok(AdjustedMeansTable { rows })
}

fn status<T>(r: &Result<T, StatsError>) -> String {
    match r {
        Ok(_) => "ok".into(),
        Err(e) => e.to_string(),
    }
}

/// One risk-level count of one group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskCountRow {
    pub group: TriggerGroup,
    pub risk_level: RiskLevel,
    pub count: usize,
}

/// Chi-square result, or the reason it is absent in `status`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareRow {
    pub statistic: Option<f64>,
    pub dof: Option<usize>,
    pub p_value: Option<f64>,
    pub status: String,
}

impl RiskTable {
    pub fn count_rows(&self) -> Vec<RiskCountRow> {
        [(TriggerGroup::Finder, &self.finder), (TriggerGroup::Baseline, &self.baseline)]
            .into_iter()
            .flat_map(|(group, counts)| {
                RiskLevel::ALL.into_iter().map(move |l| RiskCountRow { group, risk_level: l, count: counts[l.index()] })
            })
            .collect()
    }

    pub fn chi_square_row(&self) -> ChiSquareRow {
        let ok = self.test.as_ref().ok();
        ChiSquareRow {
            statistic: ok.map(|c| c.statistic),
            dof: ok.map(|c| c.dof),
            p_value: ok.map(|c| c.p_value),
            status: status(&self.test),
        }
    }
}

/// FINDER odds ratio against one comparator, or the reason it is absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OddsRatioRow {
    pub against: TriggerGroup,
    pub n: usize,
    pub odds_ratio: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub p_value: Option<f64>,
    pub status: String,
}

impl PrecisionTable {
    pub fn odds_ratio_rows(&self) -> Vec<OddsRatioRow> {
        self.odds_ratios
            .iter()
            .map(|b| {
                let ok = b.fit.as_ref().ok();
                OddsRatioRow {
                    against: b.comparison.against,
                    n: b.n,
                    odds_ratio: ok.map(|f| f.odds_ratio),
                    ci_low: ok.map(|f| f.ci95.0),
                    ci_high: ok.map(|f| f.ci95.1),
                    p_value: ok.map(|f| f.p_value),
                    status: status(&b.fit),
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjustedMeansRecord {
    pub measure: String,
    pub raw_finder: Option<f64>,
    pub raw_baseline: Option<f64>,
    pub adjusted_finder: Option<f64>,
    pub adjusted_baseline: Option<f64>,
    pub p_value: Option<f64>,
    pub status: String,
}

impl AdjustedMeansTable {
    pub fn records(&self) -> Vec<AdjustedMeansRecord> {
        self.rows
            .iter()
            .map(|r| {
                let ok = r.adjusted.as_ref().ok();
                AdjustedMeansRecord {
                    measure: r.measure.into(),
                    raw_finder: r.raw_finder,
                    raw_baseline: r.raw_baseline,
                    adjusted_finder: ok.map(|a| a.0),
                    adjusted_baseline: ok.map(|a| a.1),
                    p_value: ok.map(|a| a.2),
                    status: status(&r.adjusted),
                }
            })
            .collect()
    }
}

pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".into()
    } else {
        format!("{p:.3}")
    }
}

fn pct(count: usize, n: usize) -> String {
    if n == 0 {
        "-".into()
    } else {
        format!("{} ({:.1}%)", count, 100.0 * count as f64 / n as f64)
    }
}

pub fn render_risk_table(counts: &[RiskCountRow], test: &ChiSquareRow) -> String {
    let count = |g: TriggerGroup, l: RiskLevel| {
        counts.iter().filter(|r| r.group == g && r.risk_level == l).map(|r| r.count).sum::<usize>()
    };
    let total = |g: TriggerGroup| RiskLevel::ALL.iter().map(|&l| count(g, l)).sum::<usize>();
    let (nf, nb) = (total(TriggerGroup::Finder), total(TriggerGroup::Baseline));
    let mut out = String::new();
    let _ = writeln!(out, "{:<10} {:>16} {:>16}", "Risk level", "FINDER", "BASELINE");
    for level in RiskLevel::ALL {
        let _ = writeln!(
            out,
            "{:<10} {:>16} {:>16}",
            level.as_str(),
            pct(count(TriggerGroup::Finder, level), nf),
            pct(count(TriggerGroup::Baseline, level), nb)
        );
    }
    let _ = writeln!(out, "{:<10} {:>16} {:>16}", "total", nf, nb);
    match (test.statistic, test.dof, test.p_value) {
        (Some(x), Some(dof), Some(p)) => {
            let _ = writeln!(out, "chi-square {x:.3} on {dof} dof, p {}", format_p(p));
        }
        _ => {
            let _ = writeln!(out, "chi-square not available: {}", test.status);
        }
    }
    out
}

pub fn render_precision_table(rows: &[GroupRow], odds_ratios: &[OddsRatioRow]) -> String {
    let row = |g: TriggerGroup, s: Option<RiskLevel>| rows.iter().find(|r| r.group == g && r.stratum == s);
    let cell = |g, s| row(g, s).map_or("-".to_string(), |r| pct(r.unsafe_count, r.n));
    let mut out = String::new();
    let _ = write!(out, "{:<10}", "Stratum");
    for g in TriggerGroup::ALL {
        let _ = write!(out, " {:>16}", g.as_str());
    }
    out.push('\n');
    for stratum in std::iter::once(None).chain(RiskLevel::ALL.into_iter().map(Some)) {
        let _ = write!(out, "{:<10}", stratum.map_or("overall", RiskLevel::as_str));
        for g in TriggerGroup::ALL {
            let _ = write!(out, " {:>16}", cell(g, stratum));
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<10}", "n");
    for g in TriggerGroup::ALL {
        let _ = write!(out, " {:>16}", row(g, None).map_or(0, |r| r.n));
    }
    out.push('\n');
    for o in odds_ratios {
        let label = format!("FINDER vs {}", o.against.as_str());
        match (o.odds_ratio, o.ci_low, o.ci_high, o.p_value) {
            (Some(or), Some(lo), Some(hi), Some(p)) => {
                let _ = writeln!(out, "{label:<22} OR {or:.2} [{lo:.2}-{hi:.2}] p {} (n={})", format_p(p), o.n);
            }
            _ => {
                let _ = writeln!(out, "{label:<22} OR not available: {} (n={})", o.status, o.n);
            }
        }
    }
    out
}

pub fn render_adjusted_means(records: &[AdjustedMeansRecord]) -> String {
    let fmt = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.2}"));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>10} {:>10} {:>10} {:>10} {:>8}",
        "Violation", "raw FINDER", "raw BASE", "adj FINDER", "adj BASE", "p"
    );
    for r in records {
        let _ = writeln!(
            out,
            "{:<10} {:>10} {:>10} {:>10} {:>10} {:>8}",
            r.measure,
            fmt(r.raw_finder),
            fmt(r.raw_baseline),
            fmt(r.adjusted_finder),
            fmt(r.adjusted_baseline),
            r.p_value.map_or("-".into(), format_p)
        );
    }
    out
}

/// Horizontal bar chart of attribution fractions over recency ranks.
pub fn render_histogram(labels: &[&str], fractions: &[f64]) -> String {
    let mut out = String::new();
    for (label, f) in labels.iter().zip(fractions) {
        let bar = "#".repeat((f * 50.0).round() as usize);
        let _ = writeln!(out, "{label:>3} {:>6.1}% {bar}", 100.0 * f);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logdata::Outcome;
    use chrono::NaiveDate;
    use rand::{Rng, SeedableRng};

    fn reg(id: &str, city: &str, risk: RiskLevel) -> RestaurantRecord {
        RestaurantRecord { restaurant_id: id.into(), city: City(city.into()), risk_level: risk }
    }

    fn insp(id: &str, trigger: Trigger, is_unsafe: bool) -> InspectionRecord {
        InspectionRecord {
            restaurant_id: id.into(),
            date: NaiveDate::from_ymd_opt(2016, 7, 1).unwrap(),
            trigger,
            outcome: if is_unsafe { Outcome::Unsafe } else { Outcome::Safe },
            critical_count: i64::from(is_unsafe),
            major_count: 0,
        }
    }

    fn repeat(out: &mut Vec<InspectionRecord>, n: usize, id: &str, t: Trigger, u: bool) {
        out.extend((0..n).map(|_| insp(id, t, u)));
    }

    #[test]
    fn published_counts_reproduce_fractions() {
        let registry = vec![reg("r1", "a", RiskLevel::High)];
        let mut rows = Vec::new();
        repeat(&mut rows, 69, "r1", Trigger::Finder, true);
        repeat(&mut rows, 63, "r1", Trigger::Finder, false);
        repeat(&mut rows, 2662, "r1", Trigger::Routine, true);
        repeat(&mut rows, 8124, "r1", Trigger::Routine, false);
        let t = precision_table(&rows, &registry).unwrap();
        let finder = t.row(TriggerGroup::Finder, None);
        let base = t.row(TriggerGroup::Baseline, None);
        assert_eq!((finder.n, finder.unsafe_count), (132, 69));
        assert_eq!((base.n, base.unsafe_count), (10786, 2662));
        assert_eq!(format!("{:.1}", 100.0 * finder.unsafe_fraction().unwrap()), "52.3");
        assert_eq!(format!("{:.1}", 100.0 * base.unsafe_fraction().unwrap()), "24.7");
        let or = t.odds_ratio(TriggerGroup::Baseline).unwrap().odds_ratio;
        assert!((or - (69.0 / 63.0) / (2662.0 / 8124.0)).abs() < 1e-6);
        // No complaint inspections: that comparison is absent.
        assert!(t.odds_ratio(TriggerGroup::Complaint).is_none());
        assert_eq!(t.row(TriggerGroup::Complaint, None).n, 0);
        assert!(render_precision_table(&t.rows, &t.odds_ratio_rows()).contains("52.3%"));
    }

    #[test]
    fn all_safe_reports_zero_and_no_fit() {
        let registry = vec![reg("r1", "a", RiskLevel::High), reg("r2", "a", RiskLevel::Low)];
        let rows = vec![
            insp("r1", Trigger::Finder, false),
            insp("r2", Trigger::Routine, false),
            insp("r2", Trigger::Complaint, false),
        ];
        let t = precision_table(&rows, &registry).unwrap();
        for r in &t.rows {
            assert!(r.unsafe_fraction().is_none_or(|f| f == 0.0));
        }
        for b in &t.odds_ratios {
            assert_eq!(b.fit, Err(StatsError::SingleClass));
        }
        render_precision_table(&t.rows, &t.odds_ratio_rows());
    }

    #[test]
    fn strata_match_group_by() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let cities = ["x", "y"];
        let registry: Vec<RestaurantRecord> =
            (0..40).map(|k| reg(&format!("r{k}"), cities[k % 2], RiskLevel::ALL[k % 3])).collect();
        let triggers = [Trigger::Finder, Trigger::Routine, Trigger::Complaint];
        let rows: Vec<InspectionRecord> = (0..1000)
            .map(|_| {
                let k = rng.random_range(0..40);
                insp(&format!("r{k}"), triggers[rng.random_range(0..3)], rng.random_bool(0.3))
            })
            .collect();
        let t = precision_table(&rows, &registry).unwrap();
        // Group-by over (trigger, risk) with a plain map.
        let mut counts: HashMap<(Trigger, RiskLevel), (usize, usize)> = HashMap::new();
        for i in &rows {
            let k: usize = i.restaurant_id[1..].parse().unwrap();
            let e = counts.entry((i.trigger, RiskLevel::ALL[k % 3])).or_default();
            e.0 += 1;
            e.1 += usize::from(i.outcome.is_unsafe());
        }
        for level in RiskLevel::ALL {
            let get = |t: Trigger| counts.get(&(t, level)).copied().unwrap_or_default();
            let f = get(Trigger::Finder);
            let r = get(Trigger::Routine);
            let c = get(Trigger::Complaint);
            let row = t.row(TriggerGroup::Finder, Some(level));
            assert_eq!((row.n, row.unsafe_count), f);
            let row = t.row(TriggerGroup::Baseline, Some(level));
            assert_eq!((row.n, row.unsafe_count), (r.0 + c.0, r.1 + c.1));
            let row = t.row(TriggerGroup::Routine, Some(level));
            assert_eq!((row.n, row.unsafe_count), r);
        }
        let total = t.row(TriggerGroup::Finder, None).n + t.row(TriggerGroup::Baseline, None).n;
        assert_eq!(total, rows.len());
        assert!(t.odds_ratios.iter().all(|b| b.fit.is_ok()));
    }

    #[test]
    fn unknown_restaurant_is_rejected() {
        let rows = vec![insp("nope", Trigger::Finder, true)];
        assert!(precision_table(&rows, &[]).is_err());
    }

    #[test]
    fn design_uses_reference_levels_and_comparator_cities() {
        let registry = vec![
            reg("a1", "alpha", RiskLevel::High),
            reg("a2", "alpha", RiskLevel::Low),
            reg("b1", "beta", RiskLevel::Medium),
        ];
        let rows = vec![
            insp("a1", Trigger::Finder, true),
            insp("a2", Trigger::Complaint, false),
            insp("b1", Trigger::Finder, true),
            insp("b1", Trigger::Routine, false),
        ];
        let (d, sel) = comparison_design(&rows, &registry, TriggerGroup::Baseline).unwrap();
        assert_eq!(d.names, vec!["intercept", "finder", "city:beta", "risk:medium", "risk:low"]);
        assert_eq!(sel.len(), 4);
        let (d, sel) = comparison_design(&rows, &registry, TriggerGroup::Complaint).unwrap();
        assert_eq!(d.names, vec!["intercept", "finder", "risk:low"]);
        assert_eq!(sel.len(), 2);
    }

    #[test]
    fn risk_table_counts_and_test() {
        let mut registry = Vec::new();
        let mut rows = Vec::new();
        for (k, (level, f, b)) in
            [(RiskLevel::High, 84, 5702), (RiskLevel::Medium, 39, 2325), (RiskLevel::Low, 9, 2759)]
                .into_iter()
                .enumerate()
        {
            let id = format!("r{k}");
            registry.push(reg(&id, "a", level));
            repeat(&mut rows, f, &id, Trigger::Finder, false);
            repeat(&mut rows, b, &id, Trigger::Routine, false);
        }
        let t = risk_distribution_table(&rows, &registry).unwrap();
        assert_eq!(t.finder, [84, 39, 9]);
        assert_eq!(t.baseline, [5702, 2325, 2759]);
        assert!(t.test.as_ref().unwrap().p_value < 0.001);
        assert!(render_risk_table(&t.count_rows(), &t.chi_square_row()).contains("<0.001"));
    }

    #[test]
    fn adjusted_means_single_pattern_equal_raw() {
        let registry = vec![reg("r1", "a", RiskLevel::High)];
        let mut rows = Vec::new();
        repeat(&mut rows, 10, "r1", Trigger::Finder, true);
        repeat(&mut rows, 10, "r1", Trigger::Finder, false);
        repeat(&mut rows, 5, "r1", Trigger::Routine, true);
        repeat(&mut rows, 15, "r1", Trigger::Routine, false);
        let t = adjusted_means_table(&rows, &registry).unwrap();
        let crit = &t.rows[0];
        let (f, b, _) = crit.adjusted.clone().unwrap();
        assert!((f - 0.5).abs() < 1e-12 && (b - 0.25).abs() < 1e-12);
        assert_eq!(crit.raw_finder, Some(0.5));
        // Major counts are all zero; the fit still works.
        assert!(render_adjusted_means(&t.records()).contains("critical"));
    }
}
