//! `key = value` experiment files for `repro`. Blank lines and `#` comments
//! are ignored; unknown keys are errors.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use relvalue::pipeline::{PipelineConfig, Split};
use relvalue::trainer::TrainConfig;
use relvalue::{Aggregation, DomainTag, Error, GnnConfig};

pub fn parse_range<T: FromStr + Copy>(s: &str) -> Result<RangeInclusive<T>, String> {
    let bad = || format!("expected `a-b` or `a`, got `{s}`");
    match s.split_once('-') {
        Some((a, b)) => {
            Ok(a.trim().parse().map_err(|_| bad())?..=b.trim().parse().map_err(|_| bad())?)
        }
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            Ok(v..=v)
        }
    }
}

pub fn parse_aggregation(s: &str) -> Result<Aggregation, String> {
    match s {
        "sum" => Ok(Aggregation::Sum),
        "max" | "smooth-max" => Ok(Aggregation::SmoothMax),
        _ => Err(format!("unknown aggregation `{s}` (sum or max)")),
    }
}

/// Everything `repro` needs. Every stochastic step derives from `seed`.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub domain: DomainTag,
    pub seed: u64,
    pub out: PathBuf,
    pub split: Split,
    pub walk_length: usize,
    pub cap: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub k: usize,
    pub rounds: usize,
    pub seeds_per_run: usize,
    pub time_budget: Option<Duration>,
    pub max_steps: usize,
    pub aggregations: Vec<Aggregation>,
    pub probe_iterations: usize,
    pub probe_walk_length: usize,
    pub min_optimal_rate: f64,
    pub max_probe_loss: f64,
}

const KEYS: &[&str] = &[
    "domain",
    "seed",
    "out",
    "train_sizes",
    "train_count",
    "train_cost",
    "val_sizes",
    "val_count",
    "val_cost",
    "test_sizes",
    "test_count",
    "test_cost",
    "walk_length",
    "cap",
    "epochs",
    "batch_size",
    "lr",
    "k",
    "rounds",
    "seeds_per_run",
    "time_budget_secs",
    "max_steps",
    "aggregations",
    "probe_iterations",
    "probe_walk_length",
    "min_optimal_rate",
    "max_probe_loss",
];

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, Error> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected `key = value`", n + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(config_err(format!("line {}: unknown key `{k}`", n + 1)));
        }
        if map.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(config_err(format!("line {}: duplicate key `{k}`", n + 1)));
        }
    }
    Ok(map)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let map = parse_pairs(text)?;
        let get = |k: &str| map.get(k).map(String::as_str);
        fn value<T: FromStr>(
            map: &BTreeMap<String, String>,
            k: &str,
            default: T,
        ) -> Result<T, Error> {
            match map.get(k) {
                None => Ok(default),
                Some(v) => v
                    .parse()
                    .map_err(|_| config_err(format!("bad value `{v}` for `{k}`"))),
            }
        }
        let range =
            |k: &str, default: RangeInclusive<usize>| -> Result<RangeInclusive<usize>, Error> {
                get(k).map_or(Ok(default), |v| {
                    parse_range(v).map_err(|e| config_err(format!("{k}: {e}")))
                })
            };
        let cost = |k: &str| -> Result<Option<RangeInclusive<u32>>, Error> {
            get(k)
                .map(|v| parse_range(v).map_err(|e| config_err(format!("{k}: {e}"))))
                .transpose()
        };
        let domain: DomainTag = get("domain")
            .ok_or_else(|| config_err("missing `domain`"))?
            .parse()
            .map_err(|e: String| config_err(e))?;
        let aggregations = get("aggregations")
            .unwrap_or("sum,max")
            .split(',')
            .map(|a| parse_aggregation(a.trim()).map_err(config_err))
            .collect::<Result<Vec<_>, _>>()?;
        let time_budget: Option<u64> = get("time_budget_secs")
            .map(|v| {
                v.parse()
                    .map_err(|_| config_err(format!("bad value `{v}` for `time_budget_secs`")))
            })
            .transpose()?;
        let c = ExperimentConfig {
            domain,
            seed: value(&map, "seed", 0)?,
            out: PathBuf::from(get("out").unwrap_or("runs/repro")),
            split: Split {
                train: range("train_sizes", 2..=7)?,
                train_count: value(&map, "train_count", 40)?,
                val: range("val_sizes", 7..=8)?,
                val_count: value(&map, "val_count", 6)?,
                test: range("test_sizes", 8..=12)?,
                test_count: value(&map, "test_count", 20)?,
                train_cost: cost("train_cost")?,
                val_cost: cost("val_cost")?,
                test_cost: cost("test_cost")?,
            },
            walk_length: value(&map, "walk_length", 50)?,
            cap: value(&map, "cap", relvalue::data::DEFAULT_CAP)?,
            epochs: value(&map, "epochs", 200)?,
            batch_size: value(&map, "batch_size", 16)?,
            lr: value(&map, "lr", 2e-4)?,
            k: value(&map, "k", 16)?,
            rounds: value(&map, "rounds", 10)?,
            seeds_per_run: value(&map, "seeds_per_run", 1)?,
            time_budget: time_budget.map(Duration::from_secs),
            max_steps: value(&map, "max_steps", relvalue::policy::DEFAULT_MAX_STEPS)?,
            aggregations,
            probe_iterations: value(&map, "probe_iterations", 10_000)?,
            probe_walk_length: value(&map, "probe_walk_length", 30)?,
            min_optimal_rate: value(&map, "min_optimal_rate", 0.9)?,
            max_probe_loss: value(&map, "max_probe_loss", 0.5)?,
        };
        if c.seeds_per_run == 0 {
            return Err(config_err("`seeds_per_run` must be positive"));
        }
        Ok(c)
    }

    pub fn pipeline(&self, aggregation: Aggregation) -> PipelineConfig {
        let mut tc = TrainConfig::for_aggregation(aggregation);
        tc.epochs = self.epochs;
        tc.batch_size = self.batch_size;
        tc.lr = self.lr;
        tc.time_budget = self.time_budget;
        tc.model = GnnConfig {
            k: self.k,
            rounds: self.rounds,
            aggregation,
            ..GnnConfig::default()
        };
        let mut p = PipelineConfig::new(self.domain, self.split.clone(), tc);
        p.walk_length = self.walk_length;
        p.cap = self.cap;
        p.seeds_per_run = self.seeds_per_run;
        p.max_steps = self.max_steps;
        p.seed = self.seed;
        p
    }
}
