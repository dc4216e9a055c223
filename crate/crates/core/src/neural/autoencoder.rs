use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::layers::{apply_leaky, leaky_backward, Dense, Params};
use super::loss::chamfer_loss_and_grad;
use super::trunk::{check_points, cloud_matrix, row, PointTrunk, TrunkCache, TrunkConfig};
use super::{LatentCode, LatentSpace};
use crate::geometry::PointCloud;
use crate::{rng, Error, Real, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AeConfig {
    pub trunk: TrunkConfig,
    pub latent: usize,
    pub decoder_hidden: Vec<usize>,
    pub input_points: usize,
    pub output_points: usize,
}

impl AeConfig {
    pub fn object() -> Self {
        Self { trunk: TrunkConfig::default(), latent: 64, decoder_hidden: vec![256, 512], input_points: 512, output_points: 512 }
    }

    pub fn part() -> Self {
        Self { trunk: TrunkConfig::default(), latent: 32, decoder_hidden: vec![256, 512], input_points: 256, output_points: 256 }
    }
}

/// Point cloud to latent: per-point trunk, max-pool, linear head.
#[derive(Clone, Debug, PartialEq)]
pub struct PointEncoder<T> {
    pub trunk: PointTrunk<T>,
    pub head: Dense<T>,
    pub input_points: usize,
    pub space: LatentSpace,
}

/// Latent to point cloud: MLP with leaky hidden layers and a linear `3 * N` output.
#[derive(Clone, Debug, PartialEq)]
pub struct PointDecoder<T> {
    pub layers: Vec<Dense<T>>,
    pub output_points: usize,
    pub space: LatentSpace,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutoEncoder<T> {
    pub encoder: PointEncoder<T>,
    pub decoder: PointDecoder<T>,
}

impl<T: Real> PointEncoder<T> {
    pub fn latent_dim(&self) -> usize {
        self.head.outputs()
    }

    pub fn encode(&self, cloud: &PointCloud<T>) -> Result<LatentCode<T>> {
        check_points(cloud, self.input_points)?;
        let pooled = self.trunk.pooled(cloud);
        let z = self.head.forward(pooled.view().insert_axis(Axis(0)));
        Ok(LatentCode::new(z.row(0).to_vec(), self.space))
    }

    fn forward_cache(&self, cloud: &PointCloud<T>) -> (TrunkCache<T>, Array1<T>) {
        let cache = self.trunk.forward(cloud_matrix(cloud).view());
        let z = self.head.forward(cache.pooled.view().insert_axis(Axis(0)));
        (cache, row(&z, 0))
    }

    fn backward(&self, cache: &TrunkCache<T>, dz: &Array1<T>, grad: &mut PointEncoder<T>) {
        let pooled = cache.pooled.view().insert_axis(Axis(0));
        let dp = self.head.backward(pooled, dz.view().insert_axis(Axis(0)), &mut grad.head);
        self.trunk.backward_pooled(cache, &row(&dp, 0), &mut grad.trunk);
    }
}

impl<T: Real> PointDecoder<T> {
    pub fn latent_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn decode(&self, z: &LatentCode<T>) -> Result<PointCloud<T>> {
        if z.dim() != self.latent_dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("latent of dimension {}", self.latent_dim()),
                got: format!("dimension {}", z.dim()),
            });
        }
        let x = Array2::from_shape_vec((1, z.dim()), z.values.clone()).unwrap();
        let out = self.forward_batch(&x).pop().unwrap();
        PointCloud::from_flat(out.row(0).as_slice().unwrap())
            .map_err(|e| Error::Diverged(format!("decoder produced an invalid cloud: {e}")))
    }

    /// Returns the activations of every layer; the last entry is the `B x 3N` output.
    fn forward_batch(&self, z: &Array2<T>) -> Vec<Array2<T>> {
        let mut acts: Vec<Array2<T>> = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let x = acts.last().unwrap_or(z);
            let y = l.forward(x.view());
            acts.push(if i < last { apply_leaky(y) } else { y });
        }
        acts
    }

    fn backward_batch(&self, z: &Array2<T>, acts: &[Array2<T>], d_out: Array2<T>, grad: &mut PointDecoder<T>) -> Array2<T> {
        let mut d = d_out;
        for i in (0..self.layers.len()).rev() {
            if i + 1 < self.layers.len() {
                d = leaky_backward(acts[i].view(), d);
            }
            let input = if i == 0 { z } else { &acts[i - 1] };
            d = self.layers[i].backward(input.view(), d.view(), &mut grad.layers[i]);
        }
        d
    }
}

impl<T: Real> AutoEncoder<T> {
    pub fn new(cfg: &AeConfig, space: LatentSpace, seed: u64) -> Self {
        let mut g = rng::derived(seed, "ae-init", 0);
        let trunk = PointTrunk::new(&cfg.trunk, &mut g);
        let head = Dense::he_uniform(cfg.trunk.feat, cfg.latent, &mut g);
        let mut dims = vec![cfg.latent];
        dims.extend(&cfg.decoder_hidden);
        dims.push(3 * cfg.output_points);
        let layers = dims.windows(2).map(|w| Dense::he_uniform(w[0], w[1], &mut g)).collect();
        Self {
            encoder: PointEncoder { trunk, head, input_points: cfg.input_points, space },
            decoder: PointDecoder { layers, output_points: cfg.output_points, space },
        }
    }

    pub fn space(&self) -> LatentSpace {
        self.encoder.space
    }

    pub fn reconstruct(&self, cloud: &PointCloud<T>) -> Result<PointCloud<T>> {
        self.decoder.decode(&self.encoder.encode(cloud)?)
    }

    /// Mean Chamfer loss over `batch` and its parameter gradient.
    ///
    /// `noise`, when given, is added to the latents (one row per sample).
    pub fn batch_loss_grad(&self, batch: &[&PointCloud<T>], noise: Option<&Array2<T>>) -> Result<(T, AutoEncoder<T>)> {
        let b = batch.len();
        let d = self.encoder.latent_dim();
        let mut caches = Vec::with_capacity(b);
        let mut z = Array2::zeros((b, d));
        for (i, c) in batch.iter().enumerate() {
            check_points(c, self.encoder.input_points)?;
            let (cache, zi) = self.encoder.forward_cache(c);
            z.row_mut(i).assign(&zi);
            caches.push(cache);
        }
        if let Some(n) = noise {
            z += n;
        }
        let acts = self.decoder.forward_batch(&z);
        let out = acts.last().unwrap();
        let mut d_out = Array2::zeros(out.raw_dim());
        let mut loss = T::zero();
        let inv_b = T::one() / T::from_usize(b).unwrap();
        for i in 0..b {
            let pred = PointCloud::from_flat(out.row(i).as_slice().unwrap())
                .map_err(|_| Error::Diverged("non-finite decoder output".into()))?;
            let (l, g) = chamfer_loss_and_grad(&pred, batch[i])?;
            loss = loss + l * inv_b;
            let flat = g.into_shape_with_order(3 * pred.len()).unwrap();
            d_out.row_mut(i).assign(&(flat * inv_b));
        }
        let mut grad = self.zeros_like();
        let dz = self.decoder.backward_batch(&z, &acts, d_out, &mut grad.decoder);
        for (i, cache) in caches.iter().enumerate() {
            self.encoder.backward(cache, &row(&dz, i), &mut grad.encoder);
        }
        Ok((loss, grad))
    }
}

impl<T: Real> Params<T> for AutoEncoder<T> {
    fn layers(&self) -> Vec<&Dense<T>> {
        let mut v: Vec<&Dense<T>> = self.encoder.trunk.layers.iter().collect();
        v.push(&self.encoder.head);
        v.extend(self.decoder.layers.iter());
        v
    }

    fn layers_mut(&mut self) -> Vec<&mut Dense<T>> {
        let mut v: Vec<&mut Dense<T>> = self.encoder.trunk.layers.iter_mut().collect();
        v.push(&mut self.encoder.head);
        v.extend(self.decoder.layers.iter_mut());
        v
    }

    fn layer_names(&self) -> Vec<String> {
        let mut v: Vec<String> = (0..self.encoder.trunk.layers.len()).map(|i| format!("encoder.trunk.{i}")).collect();
        v.push("encoder.head".into());
        v.extend((0..self.decoder.layers.len()).map(|i| format!("decoder.{i}")));
        v
    }
}
