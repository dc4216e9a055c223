use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::probes::{EditBatch, PartLabeler, ProbeSet};
use super::scs::{ClassifierLevel, SemanticClassifier};
use super::sls::{sls_from_labels, SlsOutcome};
use crate::directions::{fit_linear_svm, DirectionBank, LabeledLatentSet, ObjectLatents, SemanticDirection, SvmConfig};
use crate::neural::{stratified_split, PointDecoder};
use crate::semdiscovery::{silhouette_score, PartLatentBank, SemanticCluster};
use crate::synthgen::{DatasetManifest, PartId};
use crate::{Error, Result};

/// Object-level style tuple `(legs, armrest, recline bucket)` used as one label.
pub fn subclass_labels(manifest: &DatasetManifest, indices: &[usize]) -> Vec<String> {
    indices
        .iter()
        .map(|&i| {
            let s = &manifest.objects[i].spec;
            let recline = if s.back_recline_deg > manifest.rules.recline_deg { "reclined" } else { "upright" };
            format!("{:?}+{:?}+{recline}", s.leg_style, s.armrest_style).to_lowercase()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubclassConfig {
    /// Edit length in units of each direction's signed-distance deviation.
    pub alpha: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Subclasses with fewer training objects are skipped.
    pub min_count: usize,
    pub svm: SvmConfig,
}

impl Default for SubclassConfig {
    fn default() -> Self {
        Self { alpha: 2.0, n_samples: 200, seed: 0, min_count: 10, svm: SvmConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartSilhouettes {
    pub part: PartId,
    /// `None` when discovery kept a single cluster.
    pub discovered: Option<f64>,
    pub subclass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubclassDirection {
    pub id: String,
    pub count: usize,
    pub heldout_acc: Option<f64>,
    pub sls_by_part: BTreeMap<PartId, Option<f64>>,
    /// SLS of the part the direction localises best, or of its own part for discovered directions.
    pub sls: Option<f64>,
    pub multi_part_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubclassAblation {
    pub silhouettes: Vec<PartSilhouettes>,
    pub subclass: Vec<SubclassDirection>,
    pub latnav: Vec<SubclassDirection>,
    pub mean_sls_subclass: Option<f64>,
    pub mean_sls_latnav: Option<f64>,
    pub multi_part_rate_subclass: f64,
    pub multi_part_rate_latnav: f64,
    pub skipped: Vec<String>,
}

fn decisions(classifiers: &[SemanticClassifier], cloud: &crate::geometry::PointCloud<f64>, labels: &[u8]) -> Result<Vec<bool>> {
    classifiers.iter().map(|c| c.probability(cloud, labels).map(|p| p >= 0.5)).collect()
}

/// Fraction of probe edits that flip classifier decisions on at least two parts.
#[allow(clippy::too_many_arguments)]
pub fn multi_part_change_rate(
    probes: &ProbeSet,
    direction: &SemanticDirection,
    alpha: f64,
    n_samples: usize,
    seed: u64,
    decoder: &PointDecoder<f64>,
    labeler: &dyn PartLabeler,
    classifiers: &[SemanticClassifier],
) -> Result<f64> {
    Ok(edit_stats(probes, direction, alpha, n_samples, seed, decoder, labeler, classifiers)?.1)
}

/// Mean SLS per part and the multi-part flip rate from one pass over the probes.
#[allow(clippy::too_many_arguments)]
fn edit_stats(
    probes: &ProbeSet,
    direction: &SemanticDirection,
    alpha: f64,
    n_samples: usize,
    seed: u64,
    decoder: &PointDecoder<f64>,
    labeler: &dyn PartLabeler,
    classifiers: &[SemanticClassifier],
) -> Result<(BTreeMap<PartId, Option<f64>>, f64)> {
    let batch = EditBatch::build(probes, direction, alpha, n_samples, seed, decoder, labeler)?;
    let needs_labels = classifiers.iter().any(|c| c.level == ClassifierLevel::Part);
    let mut sums: BTreeMap<PartId, (f64, usize)> = PartId::ALL.iter().map(|&p| (p, (0.0, 0))).collect();
    let mut multi = 0;
    for ((&i, edited), labels) in batch.draws.iter().zip(&batch.clouds).zip(&batch.labels) {
        for part in PartId::ALL {
            match sls_from_labels(&probes.decoded[i], &probes.labels[i], edited, labels, part) {
                Ok(SlsOutcome::Value(v)) => {
                    let e = sums.get_mut(&part).unwrap();
                    e.0 += v;
                    e.1 += 1;
                }
                Ok(SlsOutcome::ZeroDenominator { .. }) | Err(Error::NoPartPoints { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let before = decisions(classifiers, &probes.decoded[i], if needs_labels { &probes.labels[i] } else { &[] })?;
        let after = decisions(classifiers, edited, if needs_labels { labels } else { &[] })?;
        let parts: BTreeSet<PartId> = classifiers.iter().zip(before.iter().zip(&after)).filter(|(_, (b, a))| b != a).map(|(c, _)| c.part).collect();
        multi += usize::from(parts.len() >= 2);
    }
    let by_part = sums.into_iter().map(|(p, (s, n))| (p, (n > 0).then(|| s / n as f64))).collect();
    Ok((by_part, multi as f64 / n_samples as f64))
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = xs.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Subclass-as-proxy comparison: silhouettes of the style-tuple labelling in
/// each part latent space, and SLS and multi-part flip rates of SVM directions
/// fitted to style tuples against the discovered directions.
#[allow(clippy::too_many_arguments)]
pub fn run_subclass_ablation(
    manifest: &DatasetManifest,
    bank: &PartLatentBank<f64>,
    clusters: &[SemanticCluster],
    object_latents: &ObjectLatents,
    latnav: &DirectionBank,
    probes: &ProbeSet,
    decoder: &PointDecoder<f64>,
    labeler: &dyn PartLabeler,
    classifiers: &[SemanticClassifier],
    config: &SubclassConfig,
) -> Result<SubclassAblation> {
    let mut silhouettes = Vec::new();
    for part in PartId::ALL {
        let entries = bank.for_part(part);
        if entries.is_empty() {
            continue;
        }
        let idx: Vec<usize> = entries.iter().map(|e| e.object_index).collect();
        let names = subclass_labels(manifest, &idx);
        let ids: BTreeMap<&str, usize> = names.iter().collect::<BTreeSet<_>>().into_iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
        let labels: Vec<usize> = names.iter().map(|s| ids[s.as_str()]).collect();
        let points: Vec<Vec<f64>> = entries.iter().map(|e| e.latent.values.clone()).collect();
        let discovered = clusters.iter().find(|c| c.part == part).and_then(|c| c.silhouette);
        silhouettes.push(PartSilhouettes { part, discovered, subclass: silhouette_score(&points, &labels)? });
    }

    let position: BTreeMap<&str, usize> = manifest.objects.iter().enumerate().map(|(i, o)| (o.id.as_str(), i)).collect();
    let idx: Vec<usize> = object_latents
        .ids
        .iter()
        .map(|id| position.get(id.as_str()).copied().ok_or_else(|| Error::UnknownId(format!("object {id} is not in the manifest"))))
        .collect::<Result<_>>()?;
    let names = subclass_labels(manifest, &idx);
    let mut subclass = Vec::new();
    let mut skipped = Vec::new();
    for name in names.iter().collect::<BTreeSet<_>>() {
        let mut positives = Vec::new();
        let mut negatives = Vec::new();
        for ((id, z), n) in object_latents.ids.iter().zip(&object_latents.latents).zip(&names) {
            let e = (id.clone(), z.values.clone());
            if n == name { positives.push(e) } else { negatives.push(e) }
        }
        if positives.len() < config.min_count {
            skipped.push(format!("subclass/{name}: {} objects", positives.len()));
            continue;
        }
        let (train, heldout) = stratified_split(positives.len(), negatives.len(), config.seed);
        let set = LabeledLatentSet { semantic: format!("subclass/{name}"), part: PartId::Legs, positives, negatives, train, heldout };
        let mut d = fit_linear_svm(&set, &config.svm)?;
        d.part = None;
        let (sls_by_part, multi_part_rate) =
            edit_stats(probes, &d, config.alpha * d.dist_std, config.n_samples, config.seed, decoder, labeler, classifiers)?;
        let sls = sls_by_part.values().flatten().copied().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
        subclass.push(SubclassDirection { id: d.id.clone(), count: set.positives.len(), heldout_acc: d.heldout_acc, sls_by_part, sls, multi_part_rate });
    }

    let mut latnav_rows = Vec::new();
    for d in &latnav.directions {
        let (sls_by_part, multi_part_rate) =
            edit_stats(probes, d, config.alpha * d.dist_std, config.n_samples, config.seed, decoder, labeler, classifiers)?;
        let sls = d.part.and_then(|p| sls_by_part[&p]);
        latnav_rows.push(SubclassDirection { id: d.id.clone(), count: 0, heldout_acc: d.heldout_acc, sls_by_part, sls, multi_part_rate });
    }

    Ok(SubclassAblation {
        silhouettes,
        mean_sls_subclass: mean(subclass.iter().filter_map(|d| d.sls)),
        mean_sls_latnav: mean(latnav_rows.iter().filter_map(|d| d.sls)),
        multi_part_rate_subclass: mean(subclass.iter().map(|d| d.multi_part_rate)).unwrap_or(0.0),
        multi_part_rate_latnav: mean(latnav_rows.iter().map(|d| d.multi_part_rate)).unwrap_or(0.0),
        subclass,
        latnav: latnav_rows,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{generate_dataset, GenConfig};

    #[test]
    fn subclass_labels_are_style_tuples() {
        let ds = generate_dataset(&GenConfig { train_count: 10, heldout_count: 2, points: 64, ..GenConfig::default() }).unwrap();
        let labels = subclass_labels(&ds.manifest, &(0..12).collect::<Vec<_>>());
        for (l, o) in labels.iter().zip(&ds.manifest.objects) {
            let parts: Vec<&str> = l.split('+').collect();
            assert_eq!(parts.len(), 3);
            assert_eq!(o.attributes.contains("backrest/reclined"), parts[2] == "reclined");
        }
    }
}
