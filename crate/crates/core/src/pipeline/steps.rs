//! Stage-by-stage commands over one artifact directory. Each step reads
//! what earlier steps wrote, writes its own files and refreshes the
//! manifest, so running the steps in order reproduces `run_pipeline`.

use std::collections::HashSet;

use super::artifacts::{self, read_inspections, read_query_labels, require, ArtifactPaths};
use super::stages::{self, weak_labels};
use super::{at, PipelineError, RunConfig};
use crate::locmodel::read_daily_list;
use crate::logdata::{load_dataset, Dataset};
use crate::wsm::WsmModel;

fn paths(cfg: &RunConfig) -> ArtifactPaths {
    ArtifactPaths::new(&cfg.output_dir)
}

fn dataset(p: &ArtifactPaths, stage: &'static str) -> Result<Dataset, PipelineError> {
    let files = p.dataset();
    for f in files.all() {
        require(f, stage)?;
    }
    load_dataset(&files).map_err(at(stage))
}

fn model(p: &ArtifactPaths, stage: &'static str) -> Result<WsmModel, PipelineError> {
    require(&p.model(), stage)?;
    WsmModel::load(&p.model()).map_err(at(stage))
}

fn finish(p: &ArtifactPaths, cfg: &RunConfig) -> Result<(), PipelineError> {
    artifacts::write_manifest(p, cfg).map(|_| ())
}

/// Clears earlier artifacts, writes the config, the dataset and the truth
/// files.
pub fn simulate(cfg: &RunConfig) -> Result<(), PipelineError> {
    cfg.validate()?;
    let p = paths(cfg);
    let (world, dataset, truth) = stages::simulate_stage(cfg)?;
    p.prepare().map_err(at("write"))?;
    artifacts::write_config(&p, cfg)?;
    artifacts::write_simulation(&p, &world, &dataset, &truth)?;
    finish(&p, cfg)
}

pub fn train_wsm(cfg: &RunConfig) -> Result<(), PipelineError> {
    let p = paths(cfg);
    let data = dataset(&p, "train-wsm")?;
    let train = stages::train_stage(cfg, &data.queries)?;
    artifacts::write_training(&p, &train)?;
    finish(&p, cfg)
}

pub fn eval_wsm(cfg: &RunConfig) -> Result<(), PipelineError> {
    let p = paths(cfg);
    let data = dataset(&p, "eval-wsm")?;
    let model = model(&p, "eval-wsm")?;
    let labels = read_query_labels(&p.query_labels())?;
    let train_texts = weak_labels(cfg, &data.queries)?.map_or_else(HashSet::new, |s| s.texts());
    let eval = stages::eval_stage(cfg, &data.queries, &model, &labels, &train_texts)?;
    artifacts::write_evaluation(&p, &eval)?;
    finish(&p, cfg)
}

pub fn rank(cfg: &RunConfig) -> Result<(), PipelineError> {
    let p = paths(cfg);
    let data = dataset(&p, "rank")?;
    let model = model(&p, "rank")?;
    let out = stages::rank_stage(cfg, &data, &model)?;
    artifacts::write_rank(&p, &out, cfg.privacy.enabled)?;
    finish(&p, cfg)
}

/// Inspects the ranked picks; the world is regenerated from the seed.
pub fn inspect(cfg: &RunConfig) -> Result<(), PipelineError> {
    let p = paths(cfg);
    let data = dataset(&p, "inspect")?;
    require(&p.daily_lists(), "inspect")?;
    let daily = read_daily_list(&p.daily_lists()).map_err(at("inspect"))?;
    let world = stages::world(cfg)?;
    let all = stages::inspect_stage(cfg, &world, &data.inspections, &daily)?;
    artifacts::write_inspections(&p, &all)?;
    finish(&p, cfg)
}

pub fn evaluate(cfg: &RunConfig) -> Result<(), PipelineError> {
    let p = paths(cfg);
    let data = dataset(&p, "evaluate")?;
    let inspections = read_inspections(&p.inspections(), "evaluate")?;
    let tables = stages::evaluate_stage(&inspections, &data.restaurants)?;
    artifacts::write_tables(&p, &tables)?;
    finish(&p, cfg)
}

/// Writes report.txt and returns its text.
pub fn report(cfg: &RunConfig) -> Result<String, PipelineError> {
    let p = paths(cfg);
    let text = super::report(&p.root)?;
    std::fs::write(p.report(), &text).map_err(at("report"))?;
    finish(&p, cfg)?;
    Ok(text)
}
