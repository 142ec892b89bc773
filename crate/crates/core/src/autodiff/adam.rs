use super::{ParamStore, Tensor};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias-corrected moment estimates, reading the gradient buffers
/// of a [`ParamStore`].
#[derive(Clone, Debug)]
pub struct Adam {
    config: AdamConfig,
    step: u64,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
}

impl Adam {
    pub fn new(store: &ParamStore, config: AdamConfig) -> Self {
        let zeros = || store.ids().map(|id| Tensor::zeros(store.value(id).shape())).collect();
        Adam {
            config,
            step: 0,
            first: zeros(),
            second: zeros(),
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, store: &mut ParamStore) {
        assert_eq!(self.first.len(), store.len(), "optimizer built for another store");
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for ((value, grad), (m, v)) in store.grads_mut().zip(self.first.iter_mut().zip(self.second.iter_mut())) {
            let iter = value
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()));
            for ((p, &g), (m, v)) in iter {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= learning_rate * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
