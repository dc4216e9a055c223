use serde::{Deserialize, Serialize};

use super::layers::Params;
use crate::{Error, Real, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Cosine-anneal the rate to `learning_rate * final_lr_fraction` over training.
    pub final_lr_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub seed: u64,
    /// Standard deviation of Gaussian noise added to latents during autoencoder training.
    pub latent_noise: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 16,
            learning_rate: 1e-3,
            final_lr_fraction: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            seed: 0,
            latent_noise: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidInput("batch_size must be positive".into()));
        }
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !finite_nonneg(self.learning_rate) || !finite_nonneg(self.weight_decay) || !finite_nonneg(self.latent_noise) {
            return Err(Error::InvalidInput("learning rate, weight decay and latent noise must be finite and nonnegative".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(Error::InvalidInput("Adam moments must lie in [0, 1) and eps must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.final_lr_fraction) {
            return Err(Error::InvalidInput("final_lr_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Learning rate at `step` of `total` steps.
    pub fn rate_at(&self, step: usize, total: usize) -> f64 {
        let progress = if total <= 1 { 0.0 } else { step as f64 / (total - 1) as f64 };
        let f = self.final_lr_fraction + (1.0 - self.final_lr_fraction) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        self.learning_rate * f
    }
}

/// Adam with bias correction and L2 weight decay folded into the gradient.
#[derive(Clone, Debug)]
pub struct Adam<M> {
    m: M,
    v: M,
    t: i32,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
}

impl<M> Adam<M> {
    pub fn new<T: Real>(model: &M, cfg: &TrainConfig) -> Self
    where
        M: Params<T>,
    {
        Self {
            m: model.zeros_like(),
            v: model.zeros_like(),
            t: 0,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.eps,
            weight_decay: cfg.weight_decay,
        }
    }

    pub fn step<T: Real>(&mut self, model: &mut M, grad: &M, lr: f64)
    where
        M: Params<T>,
    {
        self.t += 1;
        let (b1, b2) = (T::lit(self.beta1), T::lit(self.beta2));
        let c1 = T::lit(1.0 - self.beta1.powi(self.t));
        let c2 = T::lit(1.0 - self.beta2.powi(self.t));
        let (lr, eps, wd) = (T::lit(lr), T::lit(self.eps), T::lit(self.weight_decay));
        let one = T::one();
        let layers = model.layers_mut().into_iter().zip(grad.layers()).zip(self.m.layers_mut().into_iter().zip(self.v.layers_mut()));
        for ((p, g), (m, v)) in layers {
            let update = |p: &mut T, g: T, m: &mut T, v: &mut T| {
                let g = g + wd * *p;
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let mh = *m / c1;
                let vh = *v / c2;
                *p = *p - lr * mh / (vh.sqrt() + eps);
            };
            ndarray::Zip::from(&mut p.w).and(&g.w).and(&mut m.w).and(&mut v.w).for_each(|p, &g, m, v| update(p, g, m, v));
            ndarray::Zip::from(&mut p.b).and(&g.b).and(&mut m.b).and(&mut v.b).for_each(|p, &g, m, v| update(p, g, m, v));
        }
    }
}
