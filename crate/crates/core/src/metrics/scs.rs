use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::probes::{EditBatch, PartLabeler, ProbeSet};
use crate::directions::SemanticDirection;
use crate::geometry::PointCloud;
use crate::neural::{train_classifier, Classifier, ClassifierReport, ClsConfig, PointDecoder, TrainConfig};
use crate::semdiscovery::part_input;
use crate::synthgen::PartId;
use crate::{Error, Result};

/// Points per part crop fed to part-level classifiers.
const CROP_POINTS: usize = 128;
const CROP_SEED: u64 = 0x5C5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierLevel {
    Object,
    Part,
}

/// A binary classifier for one attribute together with its accuracy report.
#[derive(Clone, Debug)]
pub struct SemanticClassifier {
    pub attribute: String,
    pub part: PartId,
    pub level: ClassifierLevel,
    pub model: Classifier<f64>,
    pub report: ClassifierReport,
}

impl SemanticClassifier {
    pub fn probability(&self, cloud: &PointCloud<f64>, labels: &[u8]) -> Result<f64> {
        Ok(self.model.probability(&classifier_input(cloud, labels, self.level, self.part)?))
    }
}

/// Whole cloud for object level; the labelled part crop, re-normalised, for part level.
pub fn classifier_input(cloud: &PointCloud<f64>, labels: &[u8], level: ClassifierLevel, part: PartId) -> Result<PointCloud<f64>> {
    match level {
        ClassifierLevel::Object => Ok(cloud.unlabeled()),
        ClassifierLevel::Part => Ok(part_input(&cloud.relabeled(labels.to_vec())?, part, CROP_POINTS, CROP_SEED)?.0),
    }
}

/// Trains the classifier of `attribute` on (labelled) clouds whose attribute sets are given.
pub fn train_semantic_classifier(
    clouds: &[(&PointCloud<f64>, &[u8], &BTreeSet<String>)],
    attribute: &str,
    part: PartId,
    level: ClassifierLevel,
    cls_cfg: &ClsConfig,
    cfg: &TrainConfig,
) -> Result<SemanticClassifier> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (c, l, attrs) in clouds {
        let x = classifier_input(c, l, level, part)?;
        if attrs.contains(attribute) { pos.push(x) } else { neg.push(x) }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Degenerate(format!("attribute {attribute} has {} positives and {} negatives", pos.len(), neg.len())));
    }
    let (model, report) = train_classifier(&pos, &neg, cls_cfg, cfg)?;
    Ok(SemanticClassifier { attribute: attribute.to_string(), part, level, model, report })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScsReport {
    pub direction_id: String,
    pub attribute: String,
    pub level: ClassifierLevel,
    pub alpha: f64,
    /// Fraction of edits classified as carrying the attribute.
    pub rate: f64,
    pub mean_probability: f64,
    pub count: usize,
}

/// Fraction of `n_samples` probe edits by `alpha` (latent units) along
/// `direction` that `classifier` accepts.
#[allow(clippy::too_many_arguments)]
pub fn scs(
    probes: &ProbeSet,
    direction: &SemanticDirection,
    alpha: f64,
    n_samples: usize,
    seed: u64,
    decoder: &PointDecoder<f64>,
    labeler: &dyn PartLabeler,
    classifier: &SemanticClassifier,
) -> Result<ScsReport> {
    scs_report(&EditBatch::build(probes, direction, alpha, n_samples, seed, decoder, labeler)?, classifier)
}

/// SCS of one classifier over an already edited batch.
pub fn scs_report(batch: &EditBatch, classifier: &SemanticClassifier) -> Result<ScsReport> {
    if batch.is_empty() {
        return Err(Error::Precondition("empty edit batch".into()));
    }
    let mut hits = 0;
    let mut total_p = 0.0;
    for (cloud, labels) in batch.clouds.iter().zip(&batch.labels) {
        let p = classifier.probability(cloud, labels)?;
        total_p += p;
        hits += usize::from(p >= 0.5);
    }
    let n = batch.len() as f64;
    Ok(ScsReport {
        direction_id: batch.direction_id.clone(),
        attribute: classifier.attribute.clone(),
        level: classifier.level,
        alpha: batch.alpha,
        rate: hits as f64 / n,
        mean_probability: total_p / n,
        count: batch.len(),
    })
}
