//! Point-cloud networks written from scratch: a max-pooled point encoder, an
//! MLP decoder, a per-point segmentation head and binary classifiers, with
//! Chamfer-loss backpropagation and Adam.

mod autoencoder;
pub mod checkpoint;
mod classify;
mod gradcheck;
pub mod layers;
mod loss;
mod optim;
mod segment;
mod train;
mod trunk;

pub use autoencoder::{AeConfig, AutoEncoder, PointDecoder, PointEncoder};
pub use checkpoint::{Arch, Checkpoint};
pub use classify::{ClsConfig, Classifier};
pub use gradcheck::{finite_diff_check, RELATIVE_FLOOR};
pub use layers::{Dense, Params};
pub use loss::{chamfer_loss_and_grad, logistic_loss, sigmoid, softmax_xent};
pub use optim::{Adam, TrainConfig};
pub use segment::{SegConfig, Segmenter};
pub use train::{
    continue_autoencoder, stratified_split, train_autoencoder, train_classifier, train_segmenter, ClassifierReport, LossCurve,
};
pub use trunk::{cloud_matrix, PointTrunk, TrunkCache, TrunkConfig};

use serde::{Deserialize, Serialize};

use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatentSpace {
    Part,
    Object,
}

/// A latent vector tagged with the space it lives in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentCode<T> {
    pub values: Vec<T>,
    pub space: LatentSpace,
}

impl<T: Real> LatentCode<T> {
    pub fn new(values: Vec<T>, space: LatentSpace) -> Self {
        Self { values, space }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn distance(&self, other: &Self) -> T {
        self.values.iter().zip(&other.values).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt()
    }
}
