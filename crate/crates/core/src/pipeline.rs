//! generate → label → balance → train → evaluate, for one family and one
//! master seed. Every stochastic step draws from a named stream of the
//! master seed.

use std::ops::RangeInclusive;
use std::time::{Duration, Instant};

use std::collections::HashSet;

use crate::data::{
    build_dataset, generate_instances, random_walk, DataConfig, GeneratorSpec, LabeledDataset,
    SkipRecord,
};
use crate::domains::DomainTag;
use crate::oracle::FeatureTag;
use crate::pddl::{GroundTask, InstanceDef};
use crate::policy::{evaluate_suite, CoverageTable, GnnValuer, DEFAULT_MAX_STEPS};
use crate::probe::{collect, evaluate, fit, ProbeConfig, ProbeLoss};
use crate::rng::{stream, stream_seed};
use crate::trainer::{train, vocabulary, Samples, TrainConfig, Trained};

/// Instance sizes and counts per split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: RangeInclusive<usize>,
    pub train_count: usize,
    pub val: RangeInclusive<usize>,
    pub val_count: usize,
    pub test: RangeInclusive<usize>,
    pub test_count: usize,
    /// Optimal-cost filters on the initial states.
    pub train_cost: Option<RangeInclusive<u32>>,
    pub val_cost: Option<RangeInclusive<u32>>,
    pub test_cost: Option<RangeInclusive<u32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub tag: DomainTag,
    pub split: Split,
    pub walk_length: usize,
    pub cap: usize,
    /// `seeds` and `shuffle_seed` are overwritten from the master seed.
    pub train: TrainConfig,
    pub seeds_per_run: usize,
    pub max_steps: usize,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(tag: DomainTag, split: Split, train: TrainConfig) -> Self {
        PipelineConfig {
            tag,
            split,
            walk_length: 50,
            cap: crate::data::DEFAULT_CAP,
            train,
            seeds_per_run: 1,
            max_steps: DEFAULT_MAX_STEPS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub train: Vec<(InstanceDef, GroundTask, u32)>,
    pub val: Vec<(InstanceDef, GroundTask, u32)>,
    pub test: Vec<(InstanceDef, GroundTask, u32)>,
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub instances: Generated,
    pub train_set: LabeledDataset,
    pub val_set: LabeledDataset,
    pub skipped: Vec<SkipRecord>,
    pub trained: Trained,
    pub eval_seed: u64,
    pub coverage: CoverageTable,
    pub elapsed: Duration,
}

fn named(v: &[(InstanceDef, GroundTask, u32)]) -> Vec<(String, GroundTask)> {
    v.iter()
        .map(|(i, t, _)| (i.name.clone(), t.clone()))
        .collect()
}

pub fn generate_split(tag: DomainTag, split: &Split, seed: u64) -> Result<Generated, crate::Error> {
    let part = |name: &str,
                sizes: &RangeInclusive<usize>,
                count: usize,
                cost: Option<RangeInclusive<u32>>|
     -> Result<_, crate::Error> {
        let mut spec = GeneratorSpec::new(tag, sizes.clone(), count);
        spec.cost = cost;
        let g = generate_instances(&spec, stream_seed(seed, &format!("split/{name}")))?;
        if g.shortfall > 0 {
            return Err(crate::Error::Config(format!(
                "could not generate {count} {name} instances for {tag}"
            )));
        }
        // Names must be unique across splits.
        Ok(g.instances
            .into_iter()
            .map(|(mut i, t, c)| {
                i.name = format!("{name}-{}", i.name);
                (i, t, c)
            })
            .collect::<Vec<_>>())
    };
    Ok(Generated {
        train: part(
            "train",
            &split.train,
            split.train_count,
            split.train_cost.clone(),
        )?,
        val: part("val", &split.val, split.val_count, split.val_cost.clone())?,
        test: part(
            "test",
            &split.test,
            split.test_count,
            split.test_cost.clone(),
        )?,
    })
}

pub fn run(config: &PipelineConfig) -> Result<PipelineResult, crate::Error> {
    let start = Instant::now();
    let tag = config.tag;
    let instances = generate_split(tag, &config.split, config.seed)?;
    let data = |name: &str| DataConfig {
        walk_length: config.walk_length,
        cap: config.cap,
        seed: stream_seed(config.seed, &format!("data/{name}")),
        ..DataConfig::default()
    };
    let (train_set, mut skipped) = build_dataset(tag, &named(&instances.train), data("train"));
    let (val_set, more) = build_dataset(tag, &named(&instances.val), data("val"));
    skipped.extend(more);

    let domain = tag.domain();
    let train_samples = Samples::from_dataset(&domain, &train_set)?;
    let val_samples = Samples::from_dataset(&domain, &val_set)?;
    let mut tc = config.train.clone();
    tc.seeds = (0..config.seeds_per_run)
        .map(|i| stream_seed(config.seed, &format!("init/{i}")))
        .collect();
    tc.shuffle_seed = stream_seed(config.seed, "shuffle");
    let trained = train(&tc, &vocabulary(tag)?, &train_samples, &val_samples)?;

    let eval_seed = stream_seed(config.seed, "eval");
    let valuer = GnnValuer {
        model: trained.model.clone(),
        seed: eval_seed,
    };
    let coverage = evaluate_suite(
        &valuer,
        tag.as_str(),
        &named(&instances.test),
        config.max_steps,
    )?;
    Ok(PipelineResult {
        instances,
        train_set,
        val_set,
        skipped,
        trained,
        eval_seed,
        coverage,
        elapsed: start.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub feature: FeatureTag,
    pub train: ProbeLoss,
    pub test: ProbeLoss,
    pub train_states: usize,
    pub test_states: usize,
}

/// Fits a linear probe on the training samples of a run and tests it on the
/// distinct states of one random walk per test instance.
pub fn probe(
    result: &PipelineResult,
    feature: FeatureTag,
    walk_length: usize,
    config: ProbeConfig,
) -> Result<ProbeReport, crate::Error> {
    let domain = feature.domain().domain();
    let model = &result.trained.model;
    let (tasks, items) = result.train_set.grounded_samples(&domain)?;
    let train_ds = collect(model, feature, &tasks, &items, result.eval_seed)?;

    let test_tasks: Vec<GroundTask> = result
        .instances
        .test
        .iter()
        .map(|(_, t, _)| t.clone())
        .collect();
    let mut rng = stream(result.eval_seed, "probe-walks");
    let mut test_items = Vec::new();
    for (i, t) in test_tasks.iter().enumerate() {
        let mut seen = HashSet::new();
        for s in random_walk(t, walk_length, &mut rng) {
            if seen.insert(s.clone()) {
                test_items.push((i, s));
            }
        }
    }
    let test_ds = collect(model, feature, &test_tasks, &test_items, result.eval_seed)?;
    let (fitted, train) = fit(&train_ds, config)?;
    let test = evaluate(&fitted, &test_ds)?;
    Ok(ProbeReport {
        feature,
        train,
        test,
        train_states: train_ds.len(),
        test_states: test_ds.len(),
    })
}
