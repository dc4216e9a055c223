use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::autoencoder::{AeConfig, AutoEncoder};
use super::classify::{ClsConfig, Classifier};
use super::layers::Params;
use super::optim::{Adam, TrainConfig};
use super::segment::{SegConfig, Segmenter};
use super::LatentSpace;
use crate::geometry::PointCloud;
use crate::{rng, Error, Real, Result};

/// Per-epoch mean training loss.
pub type LossCurve = Vec<f64>;

fn epoch_order(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::derived(seed, "epoch-order", epoch as u64));
    order
}

fn check_loss(loss: f64, what: &str, epoch: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged(format!("{what}: non-finite loss {loss} in epoch {}", epoch + 1)))
    }
}

/// Generic minibatch Adam loop. `batch_grad` returns the batch mean loss and gradient.
fn fit<T: Real, M: Params<T>>(
    model: &mut M,
    n: usize,
    cfg: &TrainConfig,
    what: &str,
    mut batch_grad: impl FnMut(&M, &[usize], usize) -> Result<(T, M)>,
) -> Result<LossCurve> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::Precondition(format!("{what}: empty training set")));
    }
    let steps_per_epoch = n.div_ceil(cfg.batch_size);
    let total = steps_per_epoch * cfg.epochs;
    let mut adam = Adam::new(model, cfg);
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut step = 0;
    for epoch in 0..cfg.epochs {
        let order = epoch_order(n, cfg.seed, epoch);
        let mut sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grad) = batch_grad(model, batch, step)?;
            let loss = loss.to_f64_lossy();
            check_loss(loss, what, epoch)?;
            if !grad.all_finite() {
                return Err(Error::Diverged(format!("{what}: non-finite gradient in epoch {}", epoch + 1)));
            }
            adam.step(model, &grad, cfg.rate_at(step, total));
            sum += loss * batch.len() as f64;
            step += 1;
        }
        curve.push(sum / n as f64);
    }
    Ok(curve)
}

pub fn train_autoencoder<T: Real>(
    data: &[PointCloud<T>],
    ae_cfg: &AeConfig,
    cfg: &TrainConfig,
    space: LatentSpace,
) -> Result<(AutoEncoder<T>, LossCurve)> {
    let mut model = AutoEncoder::new(ae_cfg, space, cfg.seed);
    let curve = continue_autoencoder(&mut model, data, cfg)?;
    Ok((model, curve))
}

pub fn continue_autoencoder<T: Real>(model: &mut AutoEncoder<T>, data: &[PointCloud<T>], cfg: &TrainConfig) -> Result<LossCurve> {
    let normal = Normal::new(0.0, cfg.latent_noise.max(f64::MIN_POSITIVE)).unwrap();
    let latent = model.encoder.latent_dim();
    fit(model, data.len(), cfg, "autoencoder", |m, idx, step| {
        let batch: Vec<&PointCloud<T>> = idx.iter().map(|&i| &data[i]).collect();
        let noise = (cfg.latent_noise > 0.0).then(|| {
            let mut g = rng::derived(cfg.seed, "latent-noise", step as u64);
            Array2::from_shape_simple_fn((idx.len(), latent), || T::lit(normal.sample(&mut g)))
        });
        m.batch_loss_grad(&batch, noise.as_ref())
    })
}

pub fn train_segmenter<T: Real>(data: &[PointCloud<T>], seg_cfg: &SegConfig, cfg: &TrainConfig) -> Result<(Segmenter<T>, LossCurve)> {
    let mut model = Segmenter::new(seg_cfg, cfg.seed);
    let curve = fit(&mut model, data.len(), cfg, "segmenter", |m, idx, _| {
        let batch: Vec<&PointCloud<T>> = idx.iter().map(|&i| &data[i]).collect();
        m.batch_loss_grad(&batch)
    })?;
    Ok((model, curve))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub train_accuracy: f64,
    pub heldout_accuracy: f64,
    pub train_count: usize,
    pub heldout_count: usize,
}

/// Seeded stratified split: the first `round(0.2 n)` of each shuffled class are held out.
pub fn stratified_split(n_pos: usize, n_neg: usize, seed: u64) -> (Vec<(usize, bool)>, Vec<(usize, bool)>) {
    let mut train = Vec::new();
    let mut held = Vec::new();
    for (n, pos) in [(n_pos, true), (n_neg, false)] {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng::derived(seed, "split", pos as u64));
        let k = if n >= 2 { ((n as f64) * 0.2).round().max(1.0) as usize } else { 0 };
        for (j, &i) in idx.iter().enumerate() {
            if j < k { held.push((i, pos)) } else { train.push((i, pos)) }
        }
    }
    (train, held)
}

/// Trains a class-balanced binary classifier on an 80/20 stratified split.
pub fn train_classifier<T: Real>(
    positives: &[PointCloud<T>],
    negatives: &[PointCloud<T>],
    cls_cfg: &ClsConfig,
    cfg: &TrainConfig,
) -> Result<(Classifier<T>, ClassifierReport)> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Precondition("classifier training needs positive and negative examples".into()));
    }
    let (train, held) = stratified_split(positives.len(), negatives.len(), cfg.seed);
    let get = |&(i, pos): &(usize, bool)| if pos { &positives[i] } else { &negatives[i] };
    let n_pos = train.iter().filter(|x| x.1).count().max(1) as f64;
    let n_neg = train.iter().filter(|x| !x.1).count().max(1) as f64;
    let mut model = Classifier::new(cls_cfg, cfg.seed);
    fit(&mut model, train.len(), cfg, "classifier", |m, idx, _| {
        let batch: Vec<(&PointCloud<T>, bool, T)> = idx
            .iter()
            .map(|&k| {
                let e = &train[k];
                let w = if e.1 { 0.5 / n_pos } else { 0.5 / n_neg };
                (get(e), e.1, T::lit(w * train.len() as f64 / idx.len() as f64))
            })
            .collect();
        Ok(m.batch_loss_grad(&batch))
    })?;
    let acc = |set: &[(usize, bool)]| {
        if set.is_empty() {
            return f64::NAN;
        }
        let hit = set.iter().filter(|e| (m_prob(&model, get(e)) >= 0.5) == e.1).count();
        hit as f64 / set.len() as f64
    };
    let report = ClassifierReport { train_accuracy: acc(&train), heldout_accuracy: acc(&held), train_count: train.len(), heldout_count: held.len() };
    Ok((model, report))
}

fn m_prob<T: Real>(m: &Classifier<T>, c: &PointCloud<T>) -> f64 {
    m.probability(c).to_f64_lossy()
}
