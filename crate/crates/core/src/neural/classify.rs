use ndarray::{Array1, Axis};
use serde::{Deserialize, Serialize};

use super::layers::{Dense, Params};
use super::loss::{logistic_loss, sigmoid};
use super::trunk::{cloud_matrix, PointTrunk, TrunkConfig};
use crate::geometry::PointCloud;
use crate::{rng, Real};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClsConfig {
    pub trunk: TrunkConfig,
}

impl Default for ClsConfig {
    fn default() -> Self {
        Self { trunk: TrunkConfig { hidden: vec![32, 64], feat: 64 } }
    }
}

/// Binary whole-cloud classifier: point trunk, max-pool, one logit.
///
/// Accepts clouds of any size, so scores are exactly invariant to point order.
#[derive(Clone, Debug, PartialEq)]
pub struct Classifier<T> {
    pub trunk: PointTrunk<T>,
    pub head: Dense<T>,
}

impl<T: Real> Classifier<T> {
    pub fn new(cfg: &ClsConfig, seed: u64) -> Self {
        let mut g = rng::derived(seed, "cls-init", 0);
        let trunk = PointTrunk::new(&cfg.trunk, &mut g);
        let head = Dense::he_uniform(cfg.trunk.feat, 1, &mut g);
        Self { trunk, head }
    }

    pub fn logit(&self, cloud: &PointCloud<T>) -> T {
        let pooled = self.trunk.pooled(cloud);
        self.head.forward(pooled.view().insert_axis(Axis(0)))[[0, 0]]
    }

    /// Probability that the cloud carries the semantic.
    pub fn probability(&self, cloud: &PointCloud<T>) -> T {
        sigmoid(self.logit(cloud))
    }

    /// Weighted logistic loss over `(cloud, is_positive, weight)` and its gradient.
    pub fn batch_loss_grad(&self, batch: &[(&PointCloud<T>, bool, T)]) -> (T, Classifier<T>) {
        let mut grad = self.zeros_like();
        let mut loss = T::zero();
        for (c, pos, w) in batch {
            let cache = self.trunk.forward(cloud_matrix(c).view());
            let pooled = cache.pooled.view().insert_axis(Axis(0));
            let logit = self.head.forward(pooled)[[0, 0]];
            let (l, d) = logistic_loss(logit, *pos);
            loss = loss + l * *w;
            let dl = Array1::from_elem(1, d * *w);
            let dp = self.head.backward(pooled, dl.view().insert_axis(Axis(0)), &mut grad.head);
            self.trunk.backward_pooled(&cache, &dp.row(0).to_owned(), &mut grad.trunk);
        }
        (loss, grad)
    }
}

impl<T: Real> Params<T> for Classifier<T> {
    fn layers(&self) -> Vec<&Dense<T>> {
        self.trunk.layers.iter().chain(std::iter::once(&self.head)).collect()
    }

    fn layers_mut(&mut self) -> Vec<&mut Dense<T>> {
        self.trunk.layers.iter_mut().chain(std::iter::once(&mut self.head)).collect()
    }

    fn layer_names(&self) -> Vec<String> {
        (0..self.trunk.layers.len()).map(|i| format!("trunk.{i}")).chain(std::iter::once("head".to_string())).collect()
    }
}
