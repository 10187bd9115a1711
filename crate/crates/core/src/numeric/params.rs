use rand::Rng;

use super::{NumericError, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

/// Named trainable tensors with same-shaped gradient accumulators.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Tensor>,
    grads: Vec<Tensor>,
    has_grad: Vec<bool>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    /// Registers a parameter. Panics on a duplicate name.
    pub fn add(&mut self, name: &str, value: Tensor) -> ParamId {
        assert!(self.id(name).is_none(), "duplicate parameter `{name}`");
        self.names.push(name.to_string());
        self.grads.push(Tensor::zeros(value.rows(), value.cols()));
        self.values.push(value);
        self.has_grad.push(false);
        ParamId(self.names.len() - 1)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.names.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id.0]
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.grads[id.0]
    }

    pub fn has_grad(&self, id: ParamId) -> bool {
        self.has_grad[id.0]
    }

    /// Zeroes all accumulators and marks them populated, so parameters
    /// that a batch does not touch step with a zero gradient.
    pub fn zero_grad(&mut self) {
        for (g, h) in self.grads.iter_mut().zip(&mut self.has_grad) {
            g.data_mut().fill(0.0);
            *h = true;
        }
    }

    pub(crate) fn accumulate(&mut self, id: ParamId, g: &Tensor) {
        assert_eq!(
            self.grads[id.0].shape(),
            g.shape(),
            "gradient shape {:?} for parameter `{}` of shape {:?}",
            g.shape(),
            self.names[id.0],
            self.grads[id.0].shape()
        );
        for (a, b) in self.grads[id.0].data_mut().iter_mut().zip(g.data()) {
            *a += b;
        }
        self.has_grad[id.0] = true;
    }

    /// `Σ|θ|` over all parameters in registration order.
    pub fn abs_sum(&self) -> f64 {
        self.values.iter().map(Tensor::abs_sum).sum()
    }

    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(|v| v.data().len()).sum()
    }

    pub fn named(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }
}

/// Uniform in `±√(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Tensor {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    Tensor::new(fan_in, fan_out, data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig, store: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = store
            .values
            .iter()
            .map(|t| vec![0.0; t.data().len()])
            .collect();
        Adam {
            config,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, store: &mut ParamStore) -> Result<(), NumericError> {
        if let Some(i) = store.has_grad.iter().position(|h| !h) {
            return Err(NumericError::MissingGradient {
                name: store.names[i].clone(),
            });
        }
        assert_eq!(
            self.m.len(),
            store.len(),
            "optimizer built for a different parameter set"
        );
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for i in 0..store.len() {
            let g = store.grads[i].data();
            let p = store.values[i].data_mut();
            for j in 0..g.len() {
                let m = &mut self.m[i][j];
                let v = &mut self.v[i][j];
                *m = beta1 * *m + (1.0 - beta1) * g[j];
                *v = beta2 * *v + (1.0 - beta2) * g[j] * g[j];
                p[j] -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            }
        }
        store.has_grad.fill(false);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn one(value: f64, grad: f64) -> (ParamStore, ParamId) {
        let mut s = ParamStore::new();
        let id = s.add("p", Tensor::scalar(value));
        s.zero_grad();
        s.accumulate(id, &Tensor::scalar(grad));
        (s, id)
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let (mut s, id) = one(1.5, 0.0);
        let mut adam = Adam::new(AdamConfig::default(), &s);
        adam.step(&mut s).unwrap();
        assert_eq!(s.value(id).item(), 1.5);
    }

    #[test]
    fn constant_gradient_moves_against_its_sign() {
        let (mut s, id) = one(0.0, 3.0);
        let mut adam = Adam::new(AdamConfig::default(), &s);
        for _ in 0..50 {
            s.zero_grad();
            s.accumulate(id, &Tensor::scalar(3.0));
            adam.step(&mut s).unwrap();
        }
        assert!(s.value(id).item() < 0.0);
    }

    #[test]
    fn first_step_magnitude_is_lr() {
        for g in [1e-3, 0.5, 70.0] {
            let (mut s, id) = one(0.0, g);
            let mut adam = Adam::new(
                AdamConfig {
                    lr: 0.01,
                    ..AdamConfig::default()
                },
                &s,
            );
            adam.step(&mut s).unwrap();
            // m̂ = g, v̂ = g², so the step is lr · g / (|g| + ε).
            let expected = -0.01 * g / (g.abs() + 1e-8);
            assert!((s.value(id).item() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_gradient_is_rejected() {
        let mut s = ParamStore::new();
        s.add("p", Tensor::scalar(0.0));
        let mut adam = Adam::new(AdamConfig::default(), &s);
        assert!(matches!(
            adam.step(&mut s),
            Err(NumericError::MissingGradient { .. })
        ));
    }

    #[test]
    fn glorot_respects_bound() {
        let t = glorot_uniform(4, 8, &mut seeded(3));
        let bound = (6.0f64 / 12.0).sqrt();
        assert!(t.data().iter().all(|x| x.abs() <= bound));
    }
}
