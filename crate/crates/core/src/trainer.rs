//! Supervised training with per-epoch validation and best-snapshot
//! selection across seeded runs.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::data::LabeledDataset;
use crate::domains::DomainTag;
use crate::gnn::{
    init_embeddings, Aggregation, GnnConfig, GnnError, GnnModel, RelationalStructure, Vocabulary,
};
use crate::numeric::{Adam, AdamConfig, Checkpoint, Graph, Tensor};
use crate::pddl::DomainDef;
use crate::rng::{stream, stream_seed};

/// Structures with their targets.
#[derive(Debug, Clone, Default)]
pub struct Samples {
    pub structures: Vec<RelationalStructure>,
    pub labels: Vec<f64>,
}

impl Samples {
    pub fn new(structures: Vec<RelationalStructure>, labels: Vec<f64>) -> Self {
        assert_eq!(structures.len(), labels.len(), "one label per structure");
        Samples { structures, labels }
    }

    pub fn from_dataset(domain: &DomainDef, ds: &LabeledDataset) -> Result<Self, crate::Error> {
        let structures = ds.structures(domain)?;
        let labels = ds.samples.iter().map(|s| s.label as f64).collect();
        Ok(Samples::new(structures, labels))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub l1: f64,
    pub seeds: Vec<u64>,
    pub shuffle_seed: u64,
    pub model: GnnConfig,
    /// Wall-clock limit per seeded run, checked between epochs.
    pub time_budget: Option<Duration>,
}

impl TrainConfig {
    /// Defaults for an aggregation: L1 weight 1e-4 for sum, none for
    /// smooth-max.
    pub fn for_aggregation(aggregation: Aggregation) -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 16,
            lr: 2e-4,
            l1: match aggregation {
                Aggregation::Sum => 1e-4,
                Aggregation::SmoothMax => 0.0,
            },
            seeds: (0..5).collect(),
            shuffle_seed: 0,
            model: GnnConfig {
                aggregation,
                ..GnnConfig::default()
            },
            time_budget: None,
        }
    }

    pub fn validate(&self) -> Result<(), crate::Error> {
        let bad = |m: &str| Err(crate::Error::Config(m.to_string()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(self.l1 >= 0.0 && self.l1.is_finite()) {
            return bad("l1 coefficient must be non-negative");
        }
        if self.model.q != 1 {
            return bad("training regresses a scalar value; q must be 1");
        }
        self.model.validate()?;
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::for_aggregation(Aggregation::SmoothMax)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 0 is the initialized model before any update.
    pub epoch: usize,
    /// Mean batch objective (data term plus penalty); NaN for epoch 0.
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub epochs: Vec<EpochStats>,
    /// `(epoch, validation loss)` of the best snapshot.
    pub best: Option<(usize, f64)>,
    pub aborted: Option<String>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub runs: Vec<SeedRun>,
    /// `(index into runs, epoch)` of the returned model.
    pub selected: Option<(usize, usize)>,
    pub best_val_loss: f64,
    pub wall_clock: Duration,
}

impl TrainReport {
    /// Key/value text; timing lines are prefixed `time.` so reports can be
    /// compared with them filtered out.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "best_val_loss\t{}", self.best_val_loss).unwrap();
        match self.selected {
            Some((r, e)) => {
                writeln!(out, "selected\tseed={}\tepoch={e}", self.runs[r].seed).unwrap()
            }
            None => writeln!(out, "selected\tnone").unwrap(),
        }
        for r in &self.runs {
            writeln!(
                out,
                "run\tseed={}\tepochs={}",
                r.seed,
                r.epochs.len().saturating_sub(1)
            )
            .unwrap();
            if let Some(a) = &r.aborted {
                writeln!(out, "aborted\tseed={}\t{a}", r.seed).unwrap();
            }
            for e in &r.epochs {
                writeln!(
                    out,
                    "epoch\tseed={}\t{}\ttrain={}\tval={}",
                    r.seed, e.epoch, e.train_loss, e.val_loss
                )
                .unwrap();
            }
            writeln!(
                out,
                "time.run\tseed={}\t{:.3}s",
                r.seed,
                r.elapsed.as_secs_f64()
            )
            .unwrap();
        }
        writeln!(out, "time.total\t{:.3}s", self.wall_clock.as_secs_f64()).unwrap();
        out
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: GnnModel,
    /// Model-initialization seed of the selected run.
    pub seed: u64,
    pub report: TrainReport,
}

impl Trained {
    pub fn checkpoint(&self) -> Checkpoint {
        self.model.to_checkpoint(self.seed)
    }
}

/// Fixed initial-embedding seed for evaluating sample `i`.
pub fn eval_seed(master: u64, i: usize) -> u64 {
    stream_seed(master, &format!("eval/{i}"))
}

const EVAL_CHUNK: usize = 64;

/// Mean `|v − label|` without the penalty; sample `i` uses
/// `eval_seed(seed, i)`.
pub fn evaluate_loss(model: &GnnModel, samples: &Samples, seed: u64) -> Result<f64, GnnError> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for start in (0..samples.len()).step_by(EVAL_CHUNK) {
        let end = (start + EVAL_CHUNK).min(samples.len());
        let refs: Vec<&RelationalStructure> = samples.structures[start..end].iter().collect();
        let seeds: Vec<u64> = (start..end).map(|i| eval_seed(seed, i)).collect();
        let v = model.values(&refs, &seeds)?;
        total += v
            .iter()
            .zip(&samples.labels[start..end])
            .map(|(p, l)| (p - l).abs())
            .sum::<f64>();
    }
    Ok(total / samples.len() as f64)
}

/// The model vocabulary used for a family.
pub fn vocabulary(tag: DomainTag) -> Result<Vocabulary, GnnError> {
    Vocabulary::for_domain(&tag.domain(), tag.goal_predicates())
}

fn train_step(
    model: &mut GnnModel,
    adam: &mut Adam,
    samples: &Samples,
    batch: &[usize],
    seeds: &[u64],
    l1: f64,
) -> Result<f64, GnnError> {
    let refs: Vec<&RelationalStructure> = batch.iter().map(|&i| &samples.structures[i]).collect();
    let init: Vec<Tensor> = refs
        .iter()
        .zip(seeds)
        .map(|(s, &seed)| init_embeddings(s.objects, &model.config, seed))
        .collect();
    let targets: Vec<f64> = batch.iter().map(|&i| samples.labels[i]).collect();
    let mut g = Graph::new();
    let (out, params) = model.build(&mut g, &refs, &init)?;
    let data = g.l1_loss(out.value, &targets);
    let loss = if l1 > 0.0 {
        let penalty = g.l1_penalty(&params, l1);
        g.add(data, penalty)
    } else {
        data
    };
    let value = g.value(loss).item();
    if !value.is_finite() {
        return Ok(value);
    }
    model.params.zero_grad();
    g.backward(loss, &mut model.params);
    adam.step(&mut model.params)?;
    Ok(value)
}

fn run_seed(
    config: &TrainConfig,
    vocab: &Vocabulary,
    train: &Samples,
    val: &Samples,
    seed: u64,
) -> Result<(SeedRun, Option<GnnModel>), GnnError> {
    let start = Instant::now();
    let mut model = GnnModel::new(config.model, vocab.clone(), seed)?;
    let val_seed = stream_seed(config.shuffle_seed, "validation");
    let initial = evaluate_loss(&model, val, val_seed)?;
    let mut run = SeedRun {
        seed,
        epochs: vec![EpochStats {
            epoch: 0,
            train_loss: f64::NAN,
            val_loss: initial,
        }],
        best: None,
        aborted: None,
        elapsed: Duration::ZERO,
    };
    let mut best_model = None;
    if initial.is_finite() {
        run.best = Some((0, initial));
        best_model = Some(model.clone());
    }
    let mut adam = Adam::new(
        AdamConfig {
            lr: config.lr,
            ..AdamConfig::default()
        },
        &model.params,
    );
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut shuffle = stream(config.shuffle_seed, &format!("shuffle/{seed}"));
    'epochs: for epoch in 1..=config.epochs {
        if config.time_budget.is_some_and(|b| start.elapsed() >= b) {
            break;
        }
        order.shuffle(&mut shuffle);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let seeds: Vec<u64> = batch
                .iter()
                .map(|&i| stream_seed(seed, &format!("init/{epoch}/{i}")))
                .collect();
            let loss = train_step(&mut model, &mut adam, train, batch, &seeds, config.l1)?;
            if !loss.is_finite() {
                run.aborted = Some(format!("non-finite loss at epoch {epoch}, batch {b}"));
                break 'epochs;
            }
            sum += loss;
            batches += 1;
        }
        let val_loss = evaluate_loss(&model, val, val_seed)?;
        if !val_loss.is_finite() {
            run.aborted = Some(format!("non-finite validation loss at epoch {epoch}"));
            break;
        }
        run.epochs.push(EpochStats {
            epoch,
            train_loss: if batches > 0 {
                sum / batches as f64
            } else {
                f64::NAN
            },
            val_loss,
        });
        if run.best.is_none_or(|(_, b)| val_loss < b) {
            run.best = Some((epoch, val_loss));
            best_model = Some(model.clone());
        }
    }
    run.elapsed = start.elapsed();
    Ok((run, best_model))
}

/// Trains one model per seed and returns the snapshot with the lowest
/// validation loss over all `(seed, epoch)` pairs; ties go to the earlier
/// seed. Seeds whose loss diverges are recorded and skipped.
pub fn train(
    config: &TrainConfig,
    vocab: &Vocabulary,
    train: &Samples,
    val: &Samples,
) -> Result<Trained, crate::Error> {
    config.validate()?;
    let model = GnnModel::new(config.model, vocab.clone(), 0)?;
    for s in train.structures.iter().chain(&val.structures) {
        model.check(s)?;
    }
    let start = Instant::now();
    let results: Vec<Result<(SeedRun, Option<GnnModel>), GnnError>> = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, vocab, train, val, seed))
        .collect();
    let mut runs = Vec::new();
    let mut best: Option<(usize, usize, f64, GnnModel)> = None;
    for (i, r) in results.into_iter().enumerate() {
        let (run, m) = r?;
        if let (Some((epoch, loss)), Some(m)) = (run.best, m) {
            if best.as_ref().is_none_or(|b| loss < b.2) {
                best = Some((i, epoch, loss, m));
            }
        }
        runs.push(run);
    }
    let (idx, epoch, loss, model) = best.ok_or_else(|| {
        crate::Error::Training("every seeded run diverged before producing a snapshot".into())
    })?;
    Ok(Trained {
        seed: config.seeds[idx],
        model,
        report: TrainReport {
            runs,
            selected: Some((idx, epoch)),
            best_val_loss: loss,
            wall_clock: start.elapsed(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains;
    use crate::gnn::encode;
    use crate::pddl::load_task;

    fn blocks_sample() -> Samples {
        let t = load_task(
            domains::BLOCKS,
            include_str!("../fixtures/instances/blocks-clear-4.pddl"),
        )
        .unwrap();
        Samples::new(vec![encode(&t, &t.initial)], vec![3.0])
    }

    fn small(aggregation: Aggregation) -> TrainConfig {
        TrainConfig {
            epochs: 3,
            seeds: vec![0],
            model: GnnConfig {
                k: 4,
                rounds: 2,
                aggregation,
                ..GnnConfig::default()
            },
            ..TrainConfig::for_aggregation(aggregation)
        }
    }

    fn vocab() -> Vocabulary {
        vocabulary(DomainTag::BlocksClear).unwrap()
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let s = blocks_sample();
        let config = TrainConfig {
            epochs: 0,
            ..small(Aggregation::Sum)
        };
        let t = train(&config, &vocab(), &s, &s).unwrap();
        assert_eq!(t.report.runs[0].epochs.len(), 1);
        assert_eq!(t.report.selected, Some((0, 0)));
        let fresh = GnnModel::new(config.model, vocab(), 0).unwrap();
        assert_eq!(t.model.params, fresh.params);
        assert_eq!(t.report.best_val_loss, t.report.runs[0].epochs[0].val_loss);
    }

    #[test]
    fn selection_takes_global_minimum() {
        let s = blocks_sample();
        let config = TrainConfig {
            seeds: vec![3, 9, 1],
            ..small(Aggregation::SmoothMax)
        };
        let t = train(&config, &vocab(), &s, &s).unwrap();
        let min = t
            .report
            .runs
            .iter()
            .flat_map(|r| r.epochs.iter().map(|e| e.val_loss))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(t.report.best_val_loss, min);
        let (r, e) = t.report.selected.unwrap();
        assert_eq!(t.report.runs[r].epochs[e].val_loss, min);
        assert_eq!(t.seed, config.seeds[r]);
        assert_eq!(
            evaluate_loss(&t.model, &s, stream_seed(config.shuffle_seed, "validation")).unwrap(),
            min
        );
    }

    #[test]
    fn training_is_reproducible() {
        let s = blocks_sample();
        let config = small(Aggregation::Sum);
        let a = train(&config, &vocab(), &s, &s).unwrap();
        let b = train(&config, &vocab(), &s, &s).unwrap();
        assert_eq!(a.checkpoint().to_bytes(), b.checkpoint().to_bytes());
        let strip = |t: &str| {
            t.lines()
                .filter(|l| !l.starts_with("time."))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&a.report.to_text()), strip(&b.report.to_text()));
    }

    #[test]
    fn evaluate_loss_examples() {
        let t = load_task(
            domains::BLOCKS,
            include_str!("../fixtures/instances/blocks-clear-4.pddl"),
        )
        .unwrap();
        let config = GnnConfig {
            k: 2,
            rounds: 1,
            ..GnnConfig::default()
        };
        let mut m = GnnModel::new(config, vocab(), 0).unwrap();
        // Zero every parameter: the network outputs exactly 0.
        let ids: Vec<_> = m.params.ids().collect();
        for id in ids {
            m.params.value_mut(id).data_mut().fill(0.0);
        }
        let s = encode(&t, &t.initial);
        let two = Samples::new(vec![s.clone(), s.clone()], vec![0.0, 2.0]);
        assert_eq!(evaluate_loss(&m, &two, 0).unwrap(), 1.0);
        let three = Samples::new(vec![s.clone(), s.clone(), s], vec![1.0, 0.0, 5.0]);
        assert_eq!(evaluate_loss(&m, &three, 0).unwrap(), 2.0);
        assert_eq!(evaluate_loss(&m, &Samples::default(), 0).unwrap(), 0.0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let s = blocks_sample();
        for config in [
            TrainConfig {
                lr: 0.0,
                ..small(Aggregation::Sum)
            },
            TrainConfig {
                seeds: vec![],
                ..small(Aggregation::Sum)
            },
            TrainConfig {
                batch_size: 0,
                ..small(Aggregation::Sum)
            },
        ] {
            assert!(matches!(
                train(&config, &vocab(), &s, &s),
                Err(crate::Error::Config(_))
            ));
        }
    }

    #[test]
    fn single_sample_overfit() {
        let s = blocks_sample();
        for aggregation in [Aggregation::Sum, Aggregation::SmoothMax] {
            let config = TrainConfig {
                epochs: 500,
                model: GnnConfig {
                    k: 16,
                    rounds: 10,
                    aggregation,
                    ..GnnConfig::default()
                },
                ..small(aggregation)
            };
            let t = train(&config, &vocab(), &s, &s).unwrap();
            eprintln!(
                "{aggregation}: {} {:?}",
                t.report.best_val_loss, t.report.selected
            );
            assert!(
                t.report.best_val_loss < 0.05,
                "{aggregation}: {}",
                t.report.best_val_loss
            );
        }
    }

    #[test]
    fn diverging_run_is_recorded() {
        let s = Samples::new(blocks_sample().structures, vec![f64::NAN]);
        let config = small(Aggregation::Sum);
        assert!(train(&config, &vocab(), &s, &blocks_sample())
            .is_ok_and(|t| t.report.runs[0].aborted.is_some()));
    }
}
