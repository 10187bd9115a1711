//! Linear probes from the network's readout activations to hand-crafted
//! features: `y ≈ x A + b` fitted under the L1 loss `Σ_i |y'_i − y_i|`.

use std::fmt;

use crate::gnn::{encode, GnnModel};
use crate::numeric::{glorot_uniform, Adam, AdamConfig, Graph, ParamStore, Tensor};
use crate::oracle::{handcrafted_feature_vector, FeatureTag};
use crate::pddl::{GroundTask, State};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeDataset {
    pub feature: FeatureTag,
    /// Readout layers 3, 4 and 5 concatenated, one row per state.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

impl ProbeDataset {
    pub fn new(
        feature: FeatureTag,
        x: Vec<Vec<f64>>,
        y: Vec<Vec<f64>>,
    ) -> Result<Self, ProbeError> {
        if x.len() != y.len() {
            return Err(ProbeError::Shape(format!(
                "{} inputs but {} targets",
                x.len(),
                y.len()
            )));
        }
        let dx = x.first().map_or(0, Vec::len);
        if x.iter().any(|r| r.len() != dx) {
            return Err(ProbeError::Shape("inputs of different widths".into()));
        }
        if y.iter().any(|r| r.len() != feature.len()) {
            return Err(ProbeError::Shape(format!(
                "{feature} targets must have {} entries",
                feature.len()
            )));
        }
        Ok(ProbeDataset { feature, x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// The Σ variant of the targets; `None` if the feature set has none.
    pub fn sigma(&self) -> Option<ProbeDataset> {
        let tag = self.feature.sigma()?;
        let y = self
            .y
            .iter()
            .map(|v| {
                crate::oracle::FeatureVector {
                    tag: self.feature,
                    values: v.clone(),
                }
                .sigma()
                .values
            })
            .collect();
        Some(ProbeDataset {
            feature: tag,
            x: self.x.clone(),
            y,
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbeError {
    #[error("probe data: {0}")]
    Shape(String),
    #[error("probe fit needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("probe evaluation on an empty dataset")]
    Empty,
    #[error("probe fit diverged at iteration {iteration} (loss {loss})")]
    Diverged { iteration: usize, loss: f64 },
}

/// The Σ feature set for a tag, if any.
pub fn sigma_variant(tag: FeatureTag) -> Option<FeatureTag> {
    tag.sigma()
}

/// Forward passes with one fixed embedding seed, paired with the
/// hand-crafted features of each state. `items` index into `tasks`.
pub fn collect(
    model: &GnnModel,
    feature: FeatureTag,
    tasks: &[GroundTask],
    items: &[(usize, State)],
    seed: u64,
) -> Result<ProbeDataset, crate::Error> {
    let mut x = Vec::with_capacity(items.len());
    let mut y = Vec::with_capacity(items.len());
    for (t, state) in items {
        let task = &tasks[*t];
        let (_, trace) = model.forward(&encode(task, state), seed)?;
        x.push(trace.readout_features());
        y.push(handcrafted_feature_vector(feature, task, state)?.values);
    }
    Ok(ProbeDataset::new(feature, x, y)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub iterations: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            iterations: 10_000,
            lr: 1e-2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbe {
    /// `dim(x) × dim(y)`, row-major.
    pub a: Tensor,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeLoss {
    /// Mean over states of `Σ_i |y'_i − y_i|`.
    pub mean: f64,
    /// The same sum without dividing by the number of states.
    pub total: f64,
}

impl fmt::Display for ProbeLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mean={:.6} total={:.6}", self.mean, self.total)
    }
}

impl LinearProbe {
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let dy = self.b.len();
        let mut out = self.b.clone();
        for (i, xi) in x.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += xi * self.a.data()[i * dy + j];
            }
        }
        out
    }
}

pub fn evaluate(probe: &LinearProbe, ds: &ProbeDataset) -> Result<ProbeLoss, ProbeError> {
    if ds.is_empty() {
        return Err(ProbeError::Empty);
    }
    let total: f64 =
        ds.x.iter()
            .zip(&ds.y)
            .map(|(x, y)| {
                probe
                    .predict(x)
                    .iter()
                    .zip(y)
                    .map(|(p, t)| (p - t).abs())
                    .sum::<f64>()
            })
            .sum();
    Ok(ProbeLoss {
        mean: total / ds.len() as f64,
        total,
    })
}

/// Full-batch Adam on the L1 objective over standardized inputs; the
/// standardization is folded back into `A` and `b`. The learning rate
/// decays linearly to 1% of its initial value, and the best iterate is kept.
pub fn fit(ds: &ProbeDataset, config: ProbeConfig) -> Result<(LinearProbe, ProbeLoss), ProbeError> {
    let n = ds.len();
    if n < 2 {
        return Err(ProbeError::TooFewSamples(n));
    }
    let (dx, dy) = (ds.input_dim(), ds.feature.len());
    let mean: Vec<f64> = (0..dx)
        .map(|j| ds.x.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let scale: Vec<f64> = (0..dx)
        .map(|j| {
            let var = ds.x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n as f64;
            if var > 1e-24 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut z = Vec::with_capacity(n * dx);
    for r in &ds.x {
        z.extend(r.iter().enumerate().map(|(j, v)| (v - mean[j]) / scale[j]));
    }
    let z = Tensor::new(n, dx, z);
    let targets: Vec<f64> = ds.y.iter().flatten().copied().collect();

    let mut store = ParamStore::new();
    let mut rng = seeded(config.seed);
    let mut a0 = glorot_uniform(dx, dy, &mut rng);
    a0.data_mut().iter_mut().for_each(|v| *v *= 0.01);
    let a_id = store.add("A", a0);
    let b_id = store.add("b", Tensor::zeros(1, dy));
    let mut adam = Adam::new(
        AdamConfig {
            lr: config.lr,
            ..AdamConfig::default()
        },
        &store,
    );
    let mut best: Option<(f64, Tensor, Tensor)> = None;
    for it in 0..=config.iterations {
        let mut g = Graph::new();
        let x = g.input(z.clone());
        let a = g.param(&store, a_id);
        let b = g.param(&store, b_id);
        let pred = g.dense(x, a, b);
        let mean_entry = g.l1_loss(pred, &targets);
        // Mean over states of the per-state sum.
        let loss = g.scale(mean_entry, dy as f64);
        let value = g.value(loss).item();
        if !value.is_finite() {
            return Err(ProbeError::Diverged {
                iteration: it,
                loss: value,
            });
        }
        if best.as_ref().is_none_or(|(l, _, _)| value < *l) {
            best = Some((value, store.value(a_id).clone(), store.value(b_id).clone()));
        }
        if it == config.iterations {
            break;
        }
        store.zero_grad();
        g.backward(loss, &mut store);
        adam.config.lr = config.lr * (1.0 - 0.99 * it as f64 / config.iterations as f64);
        adam.step(&mut store)
            .expect("gradients populated by zero_grad");
    }
    let (_, a, b) = best.expect("at least one iterate");
    // x A' + b' = ((x − μ) / σ) A + b
    let mut raw_a = Tensor::zeros(dx, dy);
    let mut raw_b = b.data().to_vec();
    for i in 0..dx {
        for j in 0..dy {
            let w = a.get(i, j) / scale[i];
            raw_a.data_mut()[i * dy + j] = w;
            raw_b[j] -= w * mean[i];
        }
    }
    let probe = LinearProbe { a: raw_a, b: raw_b };
    let loss = evaluate(&probe, ds)?;
    Ok((probe, loss))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_x(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seeded(seed);
        (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect()
    }

    #[test]
    fn realizable_target_is_fitted() {
        let x = random_x(60, 5, 1);
        let y: Vec<Vec<f64>> = x
            .iter()
            .map(|r| vec![2.0 * r[0] - r[3] + 0.5, 4.0 - 3.0 * r[1]])
            .collect();
        let ds = ProbeDataset::new(FeatureTag::BlocksClear, x, y).unwrap();
        let (_, loss) = fit(&ds, ProbeConfig::default()).unwrap();
        assert!(loss.mean < 1e-3, "{loss}");
    }

    #[test]
    fn constant_input_recovers_median() {
        let mut rng = seeded(7);
        let y: Vec<Vec<f64>> = (0..41)
            .map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(-5.0..5.0)])
            .collect();
        let x = vec![vec![1.0, 1.0]; y.len()];
        let ds = ProbeDataset::new(FeatureTag::BlocksClear, x, y.clone()).unwrap();
        let (_, loss) = fit(&ds, ProbeConfig::default()).unwrap();
        let mut optimum = 0.0;
        for j in 0..2 {
            let mut col: Vec<f64> = y.iter().map(|r| r[j]).collect();
            col.sort_by(f64::total_cmp);
            let med = col[col.len() / 2];
            optimum += col.iter().map(|v| (v - med).abs()).sum::<f64>() / col.len() as f64;
        }
        assert!(
            (loss.mean - optimum).abs() < 1e-3,
            "{} vs {optimum}",
            loss.mean
        );
    }

    #[test]
    fn perfect_probe_and_baseline_ordering() {
        let x = random_x(30, 3, 2);
        let y: Vec<Vec<f64>> = x.iter().map(|r| vec![r[0] + r[1], r[2]]).collect();
        let ds = ProbeDataset::new(FeatureTag::BlocksClear, x.clone(), y).unwrap();
        let exact = LinearProbe {
            a: Tensor::new(3, 2, vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0]),
            b: vec![0.0, 0.0],
        };
        assert_eq!(evaluate(&exact, &ds).unwrap().mean, 0.0);
        let intercept_only =
            ProbeDataset::new(FeatureTag::BlocksClear, vec![vec![0.0]; 30], ds.y.clone()).unwrap();
        let (_, base) = fit(&intercept_only, ProbeConfig::default()).unwrap();
        let (_, full) = fit(&ds, ProbeConfig::default()).unwrap();
        assert!(full.mean < base.mean);
        assert!((full.total - full.mean * 30.0).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let one =
            ProbeDataset::new(FeatureTag::Visitall, vec![vec![1.0]], vec![vec![1.0]]).unwrap();
        assert_eq!(
            fit(&one, ProbeConfig::default()).unwrap_err(),
            ProbeError::TooFewSamples(1)
        );
        let empty = ProbeDataset::new(FeatureTag::Visitall, vec![], vec![]).unwrap();
        let p = LinearProbe {
            a: Tensor::zeros(1, 1),
            b: vec![0.0],
        };
        assert_eq!(evaluate(&p, &empty).unwrap_err(), ProbeError::Empty);
        assert!(
            ProbeDataset::new(FeatureTag::Visitall, vec![vec![1.0]], vec![vec![1.0, 2.0]]).is_err()
        );
    }

    #[test]
    fn sigma_sums_the_paired_features() {
        assert_eq!(
            sigma_variant(FeatureTag::BlocksOn),
            Some(FeatureTag::BlocksOnSigma)
        );
        assert_eq!(
            sigma_variant(FeatureTag::Transport).map(FeatureTag::len),
            Some(3)
        );
        assert_eq!(sigma_variant(FeatureTag::Gripper), None);
        let ds = ProbeDataset::new(
            FeatureTag::BlocksOn,
            vec![vec![0.0]],
            vec![vec![1.0, 0.0, 2.0, 3.0, 0.0, 1.0]],
        )
        .unwrap();
        let s = ds.sigma().unwrap();
        assert_eq!(s.y[0], vec![1.0, 0.0, 5.0, 0.0, 1.0]);
    }
}
