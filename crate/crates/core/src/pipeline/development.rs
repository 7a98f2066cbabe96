use crate::config::Config;
use crate::error::Result;
use crate::predictor::{cluster_personas, relabel_with_clusters, train, Clustering, TrainReport, TwoPhaseModel};
use crate::synth::{emit_dataset, DatasetSpec, LabeledSample};

#[derive(Debug, Clone)]
pub struct DevelopmentRun {
    pub samples: Vec<LabeledSample>,
    pub model: TwoPhaseModel,
    pub report: TrainReport,
    /// Present when the model was trained on discovered clusters.
    pub clustering: Option<Clustering>,
}

pub fn generate_dev_dataset(config: &Config, seed: u64) -> Result<Vec<LabeledSample>> {
    config.validate()?;
    let dev = &config.development;
    emit_dataset(&DatasetSpec {
        personas: &config.personas,
        demands: &config.demands,
        generator: &config.generator,
        geometry: config.cell.geometry(),
        users_per_persona: dev.users_per_persona,
        duration_s: dev.duration_s,
        ts_len: config.simulation.ts_len_s,
        seed,
        sampling: dev.sampling,
    })
}

/// Trains on `samples`; with `withhold_personas` the generator labels are
/// dropped and replaced by k-means clusters first.
pub fn train_on(
    samples: &[LabeledSample],
    config: &Config,
    withhold_personas: bool,
    seed: u64,
) -> Result<(TwoPhaseModel, TrainReport, Option<Clustering>)> {
    if withhold_personas {
        let clustering = cluster_personas(samples, config.development.num_clusters, seed, &config.demands)?;
        let mut relabeled = samples.to_vec();
        relabel_with_clusters(&mut relabeled, &clustering);
        let (model, report) = train(&relabeled, &config.demands, config.learning)?;
        Ok((model, report, Some(clustering)))
    } else {
        let (model, report) = train(samples, &config.demands, config.learning)?;
        Ok((model, report, None))
    }
}

pub fn run_development(config: &Config, seed: u64) -> Result<DevelopmentRun> {
    let samples = generate_dev_dataset(config, seed)?;
    let (model, report, clustering) = train_on(&samples, config, config.development.withhold_personas, seed)?;
    Ok(DevelopmentRun {
        samples,
        model,
        report,
        clustering,
    })
}
