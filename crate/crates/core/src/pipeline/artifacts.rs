//! Artifact directory layout, writers, readers and the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::stages::{RankOutput, Tables, TrainOutput, WsmEvaluation};
use super::{at, ErrorKind, PipelineError, RunConfig};
use crate::citysim::{GroundTruth, LatentState, World};
use crate::locmodel::{write_daily_list, write_histogram};
use crate::logdata::{read_csv, write_csv, write_dataset, Dataset, DatasetPaths, InspectionRecord, INSPECTION_HEADER};
use crate::privacy::write_released;

pub const QUERY_LABEL_HEADER: [&str; 2] = ["text", "symptom"];
pub const RESTAURANT_STATE_HEADER: [&str; 2] = ["restaurant_id", "latent_state"];
pub const METRIC_HEADER: [&str; 2] = ["metric", "value"];
pub const RISK_HEADER: [&str; 3] = ["group", "risk_level", "count"];
pub const CHI_SQUARE_HEADER: [&str; 4] = ["statistic", "dof", "p_value", "status"];
pub const PRECISION_HEADER: [&str; 4] = ["group", "stratum", "n", "unsafe_count"];
pub const ODDS_RATIO_HEADER: [&str; 7] = ["against", "n", "odds_ratio", "ci_low", "ci_high", "p_value", "status"];
pub const ADJUSTED_MEANS_HEADER: [&str; 7] =
    ["measure", "raw_finder", "raw_baseline", "adjusted_finder", "adjusted_baseline", "p_value", "status"];

/// File locations inside one artifact directory.
#[derive(Clone, Debug, PartialEq)]
pub struct ArtifactPaths {
    pub root: PathBuf,
}

/// (relative path, producing stage) for every file a run may write.
const FILES: [(&str, &str); 21] = [
    ("config.txt", "config"),
    ("dataset/queries.jsonl", "simulate"),
    ("dataset/visits.csv", "simulate"),
    ("dataset/restaurants.csv", "simulate"),
    ("dataset/inspections.csv", "simulate"),
    ("truth/query_labels.csv", "simulate"),
    ("truth/restaurant_states.csv", "simulate"),
    ("model.json", "train-wsm"),
    ("wsm_training.csv", "train-wsm"),
    ("wsm_metrics.csv", "eval-wsm"),
    ("daily_lists.csv", "rank"),
    ("released.csv", "rank"),
    ("histogram.csv", "rank"),
    ("inspections.csv", "inspect"),
    ("risk_distribution.csv", "evaluate"),
    ("chi_square.csv", "evaluate"),
    ("precision.csv", "evaluate"),
    ("odds_ratios.csv", "evaluate"),
    ("adjusted_means.csv", "evaluate"),
    ("report.txt", "report"),
    ("manifest.json", "manifest"),
];

impl ArtifactPaths {
    pub fn new(root: impl AsRef<Path>) -> Self {
        ArtifactPaths { root: root.as_ref().to_path_buf() }
    }

    fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn dataset(&self) -> DatasetPaths {
        DatasetPaths::in_dir(self.root.join("dataset"))
    }
    pub fn config(&self) -> PathBuf {
        self.file("config.txt")
    }
    pub fn query_labels(&self) -> PathBuf {
        self.file("truth/query_labels.csv")
    }
    pub fn restaurant_states(&self) -> PathBuf {
        self.file("truth/restaurant_states.csv")
    }
    pub fn model(&self) -> PathBuf {
        self.file("model.json")
    }
    pub fn wsm_training(&self) -> PathBuf {
        self.file("wsm_training.csv")
    }
    pub fn wsm_metrics(&self) -> PathBuf {
        self.file("wsm_metrics.csv")
    }
    pub fn daily_lists(&self) -> PathBuf {
        self.file("daily_lists.csv")
    }
    pub fn released(&self) -> PathBuf {
        self.file("released.csv")
    }
    pub fn histogram(&self) -> PathBuf {
        self.file("histogram.csv")
    }
    pub fn inspections(&self) -> PathBuf {
        self.file("inspections.csv")
    }
    pub fn risk_distribution(&self) -> PathBuf {
        self.file("risk_distribution.csv")
    }
    pub fn chi_square(&self) -> PathBuf {
        self.file("chi_square.csv")
    }
    pub fn precision(&self) -> PathBuf {
        self.file("precision.csv")
    }
    pub fn odds_ratios(&self) -> PathBuf {
        self.file("odds_ratios.csv")
    }
    pub fn adjusted_means(&self) -> PathBuf {
        self.file("adjusted_means.csv")
    }
    pub fn report(&self) -> PathBuf {
        self.file("report.txt")
    }
    pub fn manifest(&self) -> PathBuf {
        self.file("manifest.json")
    }

    /// Creates the directory and removes artifacts of an earlier run so no
    /// stale file survives. Other files are left alone.
    pub fn prepare(&self) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.root)?;
        for (name, _) in FILES {
            let p = self.file(name);
            if p.is_file() {
                std::fs::remove_file(p)?;
            }
        }
        Ok(())
    }
}

fn stage_of(relative: &str) -> &'static str {
    FILES.iter().find(|(n, _)| *n == relative).map_or("other", |(_, s)| s)
}

/// Fails with a data error naming the file when it does not exist.
pub fn require(path: &Path, stage: &'static str) -> Result<(), PipelineError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(PipelineError::new(stage, ErrorKind::Data, format!("missing artifact {}", path.display())))
    }
}

pub fn write_config(paths: &ArtifactPaths, cfg: &RunConfig) -> Result<(), PipelineError> {
    std::fs::create_dir_all(&paths.root).map_err(at("config"))?;
    std::fs::write(paths.config(), cfg.to_text()).map_err(at("config"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct QueryLabelRow {
    text: String,
    symptom: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RestaurantStateRow {
    restaurant_id: String,
    latent_state: String,
}

/// Writes the pseudonymized dataset and the evaluator-only truth files
/// (query labels and latent restaurant states; no user ids).
pub fn write_simulation(
    paths: &ArtifactPaths,
    world: &World,
    dataset: &Dataset,
    truth: &GroundTruth,
) -> Result<(), PipelineError> {
    write_dataset(dataset, &paths.dataset()).map_err(at("simulate"))?;
    let labels: Vec<QueryLabelRow> =
        truth.text_truth.iter().map(|(t, &s)| QueryLabelRow { text: t.clone(), symptom: s }).collect();
    write_csv(&paths.query_labels(), &QUERY_LABEL_HEADER, &labels).map_err(at("simulate"))?;
    let states: Vec<RestaurantStateRow> = world
        .restaurants
        .iter()
        .map(|r| RestaurantStateRow {
            restaurant_id: r.record.restaurant_id.clone(),
            latent_state: match r.latent {
                LatentState::Safe => "safe".into(),
                LatentState::Unsafe => "unsafe".into(),
            },
        })
        .collect();
    write_csv(&paths.restaurant_states(), &RESTAURANT_STATE_HEADER, &states).map_err(at("simulate"))
}

pub fn read_query_labels(path: &Path) -> Result<BTreeMap<String, bool>, PipelineError> {
    require(path, "eval-wsm")?;
    let rows: Vec<QueryLabelRow> = read_csv(path, &QUERY_LABEL_HEADER).map_err(at("eval-wsm"))?;
    Ok(rows.into_iter().map(|r| (r.text, r.symptom)).collect())
}

/// One `metric,value` line; values are numbers or a status text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub metric: String,
    pub value: String,
}

fn metric(name: &str, value: impl ToString) -> MetricValue {
    MetricValue { metric: name.into(), value: value.to_string() }
}

pub fn read_metrics(path: &Path, stage: &'static str) -> Result<Vec<MetricValue>, PipelineError> {
    require(path, stage)?;
    read_csv(path, &METRIC_HEADER).map_err(at(stage))
}

pub fn read_wsm_metrics(path: &Path) -> Result<Vec<MetricValue>, PipelineError> {
    read_metrics(path, "report")
}

pub fn write_training(paths: &ArtifactPaths, train: &TrainOutput) -> Result<(), PipelineError> {
    train.model.save(&paths.model()).map_err(at("train-wsm"))?;
    let mut rows = vec![
        metric("examples", train.examples),
        metric("positives", train.positives),
        metric("final_loss", train.report.final_loss),
    ];
    for (i, loss) in train.report.epoch_losses.iter().enumerate() {
        rows.push(metric(&format!("loss_epoch_{}", i + 1), loss));
    }
    write_csv(&paths.wsm_training(), &METRIC_HEADER, &rows).map_err(at("train-wsm"))
}

pub fn write_evaluation(paths: &ArtifactPaths, eval: &WsmEvaluation) -> Result<(), PipelineError> {
    let mut rows = Vec::new();
    match &eval.metrics {
        Ok(m) => {
            rows.push(metric("status", "ok"));
            rows.extend(m.rows().iter().map(|(k, v)| metric(k, v)));
        }
        Err(reason) => rows.push(metric("status", reason)),
    }
    if let Some(a) = eval.alpha {
        rows.push(metric("krippendorff_alpha", a));
    }
    rows.push(metric("eval_size", eval.sample_size));
    rows.push(metric("rater_positives", eval.rater_positives));
    if let Some(a) = eval.rater_accuracy {
        rows.push(metric("rater_accuracy", a));
    }
    write_csv(&paths.wsm_metrics(), &METRIC_HEADER, &rows).map_err(at("eval-wsm"))
}

pub fn write_rank(paths: &ArtifactPaths, rank: &RankOutput, privacy: bool) -> Result<(), PipelineError> {
    write_daily_list(&paths.daily_lists(), &rank.daily).map_err(at("rank"))?;
    if privacy {
        write_released(&paths.released(), &rank.released).map_err(at("rank"))?;
    }
    write_histogram(&paths.histogram(), &rank.histogram).map_err(at("rank"))
}

pub fn write_inspections(paths: &ArtifactPaths, inspections: &[InspectionRecord]) -> Result<(), PipelineError> {
    write_csv(&paths.inspections(), &INSPECTION_HEADER, inspections).map_err(at("inspect"))
}

pub fn read_inspections(path: &Path, stage: &'static str) -> Result<Vec<InspectionRecord>, PipelineError> {
    require(path, stage)?;
    read_csv(path, &INSPECTION_HEADER).map_err(at(stage))
}

pub fn write_tables(paths: &ArtifactPaths, t: &Tables) -> Result<(), PipelineError> {
    let e = at("evaluate");
    write_csv(&paths.risk_distribution(), &RISK_HEADER, &t.risk.count_rows()).map_err(&e)?;
    write_csv(&paths.chi_square(), &CHI_SQUARE_HEADER, &[t.risk.chi_square_row()]).map_err(&e)?;
    write_csv(&paths.precision(), &PRECISION_HEADER, &t.precision.rows).map_err(&e)?;
    write_csv(&paths.odds_ratios(), &ODDS_RATIO_HEADER, &t.precision.odds_ratio_rows()).map_err(&e)?;
    write_csv(&paths.adjusted_means(), &ADJUSTED_MEANS_HEADER, &t.adjusted.records()).map_err(&e)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub stage: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub config_hash: String,
    /// Wall-clock creation time; the only non-reproducible field.
    pub created_at: String,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        require(path, "manifest")?;
        let body = std::fs::read_to_string(path).map_err(at("manifest"))?;
        serde_json::from_str(&body).map_err(|e| PipelineError::new("manifest", ErrorKind::Data, e.to_string()))
    }
}

pub fn sha256_file(path: &Path) -> std::io::Result<(String, u64)> {
    let body = std::fs::read(path)?;
    Ok((hex::encode(Sha256::digest(&body)), body.len() as u64))
}

fn collect_files(dir: &Path, root: &Path, out: &mut Vec<String>) -> std::io::Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            collect_files(&p, root, out)?;
        } else {
            let rel = p.strip_prefix(root).expect("under root");
            out.push(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"));
        }
    }
    Ok(())
}

/// Checksums every file in the directory except the manifest itself.
pub fn write_manifest(paths: &ArtifactPaths, cfg: &RunConfig) -> Result<Manifest, PipelineError> {
    let e = at("manifest");
    let mut names = Vec::new();
    collect_files(&paths.root, &paths.root, &mut names).map_err(&e)?;
    let mut files = Vec::new();
    for name in names.into_iter().filter(|n| n != "manifest.json") {
        let (sha256, bytes) = sha256_file(&paths.root.join(&name)).map_err(&e)?;
        files.push(ManifestEntry { stage: stage_of(&name).into(), path: name, sha256, bytes });
    }
    let manifest = Manifest {
        seed: cfg.seed,
        config_hash: cfg.hash(),
        created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        files,
    };
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(paths.manifest(), body + "\n").map_err(&e)?;
    Ok(manifest)
}
