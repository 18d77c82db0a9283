use serde::{Deserialize, Serialize};

use crate::{shape_err, Gradients, NnError, ParamStore, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 penalty added to the gradient; 0 disables it.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0 }
    }
}

/// Bias-corrected Adam with per-parameter moment buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
}

impl Adam {
    pub fn new(store: &ParamStore, config: AdamConfig) -> Self {
        let zeros = || store.iter().map(|(_, t)| Tensor::zeros(t.shape())).collect();
        Self { config, step: 0, first: zeros(), second: zeros() }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.config.lr = lr;
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) -> Result<(), NnError> {
        if store.len() != self.first.len() {
            return Err(shape_err("adam", format!("{} params, {} moment buffers", store.len(), self.first.len())));
        }
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps, weight_decay } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for id in store.ids() {
            let g = grads.get(id);
            g.ensure_finite("adam")?;
            let p = store.get_mut(id);
            if p.shape() != g.shape() {
                return Err(shape_err("adam", format!("{:?} vs {:?}", p.shape(), g.shape())));
            }
            let m = self.first[id.0].data_mut();
            let v = self.second[id.0].data_mut();
            for (((pi, &gi), mi), vi) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                let gi = gi + weight_decay * *pi;
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *pi -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Polynomial decay `base_lr * (1 - epoch / max_epochs)^power`, clamped at
/// zero past the last epoch.
pub fn poly_lr(base_lr: f64, epoch: usize, max_epochs: usize, power: f64) -> f64 {
    if max_epochs == 0 {
        return base_lr;
    }
    let frac = (1.0 - epoch as f64 / max_epochs as f64).max(0.0);
    base_lr * frac.powf(power)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with(values: Vec<f64>) -> (ParamStore, crate::ParamId) {
        let mut s = ParamStore::new();
        let id = s.add("p", Tensor::vector(values));
        (s, id)
    }

    #[test]
    fn first_step_moves_by_lr_against_sign() {
        let (mut store, id) = store_with(vec![1.0, 1.0, 1.0]);
        let mut grads = Gradients::zeros_like(&store);
        grads.accumulate(id, &Tensor::vector(vec![0.3, -2.0, 1e-3])).unwrap();
        let mut adam = Adam::new(&store, AdamConfig { lr: 0.01, ..Default::default() });
        adam.step(&mut store, &grads).unwrap();
        let moved: Vec<f64> = store.get(id).data().iter().map(|p| p - 1.0).collect();
        for (d, s) in moved.iter().zip([-1.0, 1.0, -1.0]) {
            assert!((d - s * 0.01).abs() < 1e-6, "{d}");
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let (mut store, _) = store_with(vec![0.5, -0.25]);
        let before = store.clone();
        let grads = Gradients::zeros_like(&store);
        Adam::new(&store, AdamConfig::default()).step(&mut store, &grads).unwrap();
        assert_eq!(store, before);
    }

    #[test]
    fn poly_lr_formula() {
        assert_eq!(poly_lr(1e-4, 0, 100, 0.9), 1e-4);
        assert_eq!(poly_lr(1e-4, 100, 100, 0.9), 0.0);
        assert!((poly_lr(1e-4, 50, 100, 0.9) - 1e-4 * 0.5f64.powf(0.9)).abs() < 1e-20);
    }

    #[test]
    fn rejects_non_finite_gradients() {
        let (mut store, id) = store_with(vec![0.0]);
        let mut grads = Gradients::zeros_like(&store);
        grads.accumulate(id, &Tensor::vector(vec![f64::NAN])).unwrap();
        assert!(Adam::new(&store, AdamConfig::default()).step(&mut store, &grads).is_err());
    }
}
