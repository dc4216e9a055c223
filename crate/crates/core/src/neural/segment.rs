use ndarray::{concatenate, s, Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::layers::{apply_leaky, leaky_backward, Dense, Params};
use super::loss::softmax_xent;
use super::trunk::{cloud_matrix, PointTrunk, TrunkConfig};
use crate::geometry::PointCloud;
use crate::{rng, Error, Real, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegConfig {
    pub trunk: TrunkConfig,
    pub hidden: usize,
    pub parts: usize,
}

impl Default for SegConfig {
    fn default() -> Self {
        Self { trunk: TrunkConfig::default(), hidden: 64, parts: 4 }
    }
}

/// Per-point part classifier over `[xyz, first-layer feature, pooled feature]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Segmenter<T> {
    pub trunk: PointTrunk<T>,
    /// `[(3 + local + feat) -> hidden, hidden -> parts]`.
    pub head: Vec<Dense<T>>,
}

struct SegForward<T> {
    trunk: super::trunk::TrunkCache<T>,
    local: Array2<T>,
    hidden: Array2<T>,
    logits: Array2<T>,
}

impl<T: Real> Segmenter<T> {
    pub fn new(cfg: &SegConfig, seed: u64) -> Self {
        let mut g = rng::derived(seed, "seg-init", 0);
        let trunk = PointTrunk::new(&cfg.trunk, &mut g);
        let inputs = 3 + trunk.local_width() + trunk.feat();
        let head = vec![Dense::he_uniform(inputs, cfg.hidden, &mut g), Dense::he_uniform(cfg.hidden, cfg.parts, &mut g)];
        Self { trunk, head }
    }

    pub fn parts(&self) -> usize {
        self.head[1].outputs()
    }

    fn split(&self) -> usize {
        3 + self.trunk.local_width()
    }

    fn forward(&self, cloud: &PointCloud<T>) -> SegForward<T> {
        let trunk = self.trunk.forward(cloud_matrix(cloud).view());
        let local = concatenate(Axis(1), &[trunk.acts[0].view(), trunk.acts[1].view()]).unwrap();
        let k = self.split();
        let w = &self.head[0].w;
        let global = trunk.pooled.view().insert_axis(Axis(0)).dot(&w.slice(s![k.., ..])) + &self.head[0].b;
        let hidden = apply_leaky(local.dot(&w.slice(s![..k, ..])) + &global.row(0));
        let logits = self.head[1].forward(hidden.view());
        SegForward { trunk, local, hidden, logits }
    }

    /// Per-point class logits (`N x parts`).
    pub fn logits(&self, cloud: &PointCloud<T>) -> Array2<T> {
        self.forward(cloud).logits
    }

    /// Most likely part per point; ties go to the lower part id.
    pub fn predict(&self, cloud: &PointCloud<T>) -> Vec<u8> {
        self.logits(cloud)
            .outer_iter()
            .map(|r| {
                let mut best = 0;
                for (i, &v) in r.iter().enumerate() {
                    if v > r[best] {
                        best = i;
                    }
                }
                best as u8
            })
            .collect()
    }

    /// Per-point accuracy against stored labels.
    pub fn accuracy(&self, cloud: &PointCloud<T>) -> Result<f64> {
        let labels = cloud.labels().ok_or_else(|| Error::InvalidInput("segmenter accuracy needs labels".into()))?;
        let pred = self.predict(cloud);
        Ok(pred.iter().zip(labels).filter(|(a, b)| a == b).count() as f64 / labels.len() as f64)
    }

    /// Mean per-point cross-entropy over the batch and its gradient.
    pub fn batch_loss_grad(&self, batch: &[&PointCloud<T>]) -> Result<(T, Segmenter<T>)> {
        let mut grad = self.zeros_like();
        let total: usize = batch.iter().map(|c| c.len()).sum();
        let scale = T::one() / T::from_usize(total).unwrap();
        let mut loss = T::zero();
        let k = self.split();
        for c in batch {
            let labels = c.labels().ok_or_else(|| Error::InvalidInput("segmenter training needs labels".into()))?;
            if labels.iter().any(|&l| l as usize >= self.parts()) {
                return Err(Error::InvalidInput("part label out of range".into()));
            }
            let f = self.forward(c);
            let (l, mut dlogits) = softmax_xent(&f.logits, labels);
            loss = loss + l * scale;
            dlogits.mapv_inplace(|v| v * scale);
            let dh = self.head[1].backward(f.hidden.view(), dlogits.view(), &mut grad.head[1]);
            let dpre = leaky_backward(f.hidden.view(), dh);
            let dsum: Array1<T> = dpre.sum_axis(Axis(0));
            let w0 = &self.head[0].w;
            {
                let g0 = &mut grad.head[0];
                let mut gl = g0.w.slice_mut(s![..k, ..]);
                gl += &f.local.t().dot(&dpre);
                let pooled = f.trunk.pooled.view().insert_axis(Axis(1));
                let mut gg = g0.w.slice_mut(s![k.., ..]);
                gg += &pooled.dot(&dsum.view().insert_axis(Axis(0)));
                g0.b += &dsum;
            }
            let dlocal = dpre.dot(&w0.slice(s![..k, ..]).t());
            let d_pooled = w0.slice(s![k.., ..]).dot(&dsum);
            let d_first = dlocal.slice(s![.., 3..]).to_owned();
            self.trunk.backward_dense(&f.trunk, &d_pooled, &[(0, d_first)], &mut grad.trunk);
        }
        Ok((loss, grad))
    }
}

impl<T: Real> Params<T> for Segmenter<T> {
    fn layers(&self) -> Vec<&Dense<T>> {
        self.trunk.layers.iter().chain(self.head.iter()).collect()
    }

    fn layers_mut(&mut self) -> Vec<&mut Dense<T>> {
        self.trunk.layers.iter_mut().chain(self.head.iter_mut()).collect()
    }

    fn layer_names(&self) -> Vec<String> {
        (0..self.trunk.layers.len())
            .map(|i| format!("trunk.{i}"))
            .chain((0..self.head.len()).map(|i| format!("head.{i}")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_permutes_predictions() {
        let seg = Segmenter::<f64>::new(&SegConfig { trunk: TrunkConfig { hidden: vec![8, 16], feat: 16 }, hidden: 8, parts: 4 }, 3);
        let spec = crate::synthgen::sample_spec(2, &Default::default()).unwrap();
        let c = crate::synthgen::realize_point_cloud(&spec, 128, 1).unwrap();
        let perm: Vec<usize> = (0..128).map(|i| (i * 37) % 128).collect();
        let a = seg.predict(&c);
        let b = seg.predict(&c.permuted(&perm));
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(b[i], a[p]);
        }
    }
}
