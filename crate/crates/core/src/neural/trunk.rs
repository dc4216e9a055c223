use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::layers::{apply_leaky, leaky_backward, Dense};
use crate::geometry::PointCloud;
use crate::{rng, Error, Real, Result};

/// Widths of the shared per-point MLP: `3 -> hidden.. -> feat`, then max-pool.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrunkConfig {
    pub hidden: Vec<usize>,
    pub feat: usize,
}

impl Default for TrunkConfig {
    fn default() -> Self {
        Self { hidden: vec![64, 128], feat: 128 }
    }
}

/// Permutation-invariant point feature extractor: a shared per-point MLP with
/// leaky activations followed by a coordinate-wise max over points.
#[derive(Clone, Debug, PartialEq)]
pub struct PointTrunk<T> {
    pub layers: Vec<Dense<T>>,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Clone, Debug)]
pub struct TrunkCache<T> {
    /// `acts[0]` is the input; `acts[l + 1]` the output of layer `l`.
    pub acts: Vec<Array2<T>>,
    /// Row attaining the max of each pooled channel (lowest row on ties).
    pub argmax: Vec<usize>,
    pub pooled: Array1<T>,
}

pub fn cloud_matrix<T: Real>(cloud: &PointCloud<T>) -> Array2<T> {
    Array2::from_shape_vec((cloud.len(), 3), cloud.to_flat()).expect("flat cloud has 3 columns")
}

impl<T: Real> PointTrunk<T> {
    pub fn new(cfg: &TrunkConfig, g: &mut rng::Rng) -> Self {
        let mut dims = vec![3];
        dims.extend(&cfg.hidden);
        dims.push(cfg.feat);
        Self { layers: dims.windows(2).map(|w| Dense::he_uniform(w[0], w[1], g)).collect() }
    }

    pub fn feat(&self) -> usize {
        self.layers.last().map_or(3, |l| l.outputs())
    }

    /// Width of the first layer output, the per-point feature used by the segmenter.
    pub fn local_width(&self) -> usize {
        self.layers[0].outputs()
    }

    pub fn forward(&self, x: ArrayView2<T>) -> TrunkCache<T> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        for l in &self.layers {
            let a = apply_leaky(l.forward(acts.last().unwrap().view()));
            acts.push(a);
        }
        let last = acts.last().unwrap();
        let mut argmax = vec![0usize; last.ncols()];
        let mut pooled = Array1::from_elem(last.ncols(), T::neg_infinity());
        for (r, row) in last.outer_iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v > pooled[c] {
                    pooled[c] = v;
                    argmax[c] = r;
                }
            }
        }
        TrunkCache { acts, argmax, pooled }
    }

    pub fn pooled(&self, cloud: &PointCloud<T>) -> Array1<T> {
        self.forward(cloud_matrix(cloud).view()).pooled
    }

    /// Backpropagates a gradient on the pooled feature. Only the rows selected
    /// by the max-pool receive gradient, so the pass runs on those rows alone.
    pub fn backward_pooled(&self, cache: &TrunkCache<T>, d_pooled: &Array1<T>, grad: &mut PointTrunk<T>) {
        let mut rows: Vec<usize> = cache.argmax.clone();
        rows.sort_unstable();
        rows.dedup();
        let mut d = Array2::zeros((rows.len(), self.feat()));
        for (c, &r) in cache.argmax.iter().enumerate() {
            let i = rows.binary_search(&r).unwrap();
            d[[i, c]] = d[[i, c]] + d_pooled[c];
        }
        let pick = |a: &Array2<T>| a.select(Axis(0), &rows);
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let out = pick(&cache.acts[l + 1]);
            let dz = leaky_backward(out.view(), d);
            let input = pick(&cache.acts[l]);
            if l == 0 {
                layer.accumulate(input.view(), dz.view(), &mut grad.layers[l]);
                return;
            }
            d = layer.backward(input.view(), dz.view(), &mut grad.layers[l]);
        }
    }

    /// Dense backward with a pooled gradient plus optional per-point gradients
    /// injected at the outputs of individual layers (`(layer, N x width)`).
    pub fn backward_dense(
        &self,
        cache: &TrunkCache<T>,
        d_pooled: &Array1<T>,
        inject: &[(usize, Array2<T>)],
        grad: &mut PointTrunk<T>,
    ) {
        let n = cache.acts[0].nrows();
        let mut d = Array2::zeros((n, self.feat()));
        for (c, &r) in cache.argmax.iter().enumerate() {
            d[[r, c]] = d[[r, c]] + d_pooled[c];
        }
        for (l, layer) in self.layers.iter().enumerate().rev() {
            for (at, g) in inject {
                if *at == l {
                    d += g;
                }
            }
            let dz = leaky_backward(cache.acts[l + 1].view(), d);
            if l == 0 {
                layer.accumulate(cache.acts[0].view(), dz.view(), &mut grad.layers[0]);
                return;
            }
            d = layer.backward(cache.acts[l].view(), dz.view(), &mut grad.layers[l]);
        }
    }
}

pub(crate) fn check_points<T: Real>(cloud: &PointCloud<T>, expected: usize) -> Result<()> {
    if cloud.len() != expected {
        return Err(Error::ShapeMismatch { expected: format!("{expected} points"), got: format!("{} points", cloud.len()) });
    }
    Ok(())
}

pub(crate) fn row<T: Real>(m: &Array2<T>, i: usize) -> Array1<T> {
    m.slice(s![i, ..]).to_owned()
}
