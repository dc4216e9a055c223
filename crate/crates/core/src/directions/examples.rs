use std::collections::{BTreeMap, BTreeSet};

use crate::neural::{stratified_split, LatentCode};
use crate::semdiscovery::SemanticCluster;
use crate::synthgen::PartId;
use crate::{Error, Result};

/// Object latents keyed by object id, in a fixed order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObjectLatents {
    pub ids: Vec<String>,
    pub latents: Vec<LatentCode<f64>>,
}

impl ObjectLatents {
    pub fn new(ids: Vec<String>, latents: Vec<LatentCode<f64>>) -> Result<Self> {
        if ids.len() != latents.len() {
            return Err(Error::ShapeMismatch { expected: format!("{} latents", ids.len()), got: latents.len().to_string() });
        }
        Ok(Self { ids, latents })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.latents.iter().map(|z| z.values.clone()).collect()
    }
}

/// Positive and negative object latents for one semantic with an 80/20
/// stratified split. `train` and `heldout` index into `positives` (`true`)
/// or `negatives` (`false`).
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledLatentSet {
    pub semantic: String,
    pub part: PartId,
    pub positives: Vec<(String, Vec<f64>)>,
    pub negatives: Vec<(String, Vec<f64>)>,
    pub train: Vec<(usize, bool)>,
    pub heldout: Vec<(usize, bool)>,
}

impl LabeledLatentSet {
    pub fn example(&self, (i, pos): (usize, bool)) -> &[f64] {
        if pos { &self.positives[i].1 } else { &self.negatives[i].1 }
    }

    /// Every example, positives first.
    pub fn all(&self) -> impl Iterator<Item = &[f64]> {
        self.positives.iter().chain(&self.negatives).map(|(_, v)| v.as_slice())
    }

    /// The same examples with the classes exchanged.
    pub fn swapped(&self) -> Self {
        let flip = |v: &[(usize, bool)]| v.iter().map(|&(i, p)| (i, !p)).collect();
        Self {
            semantic: self.semantic.clone(),
            part: self.part,
            positives: self.negatives.clone(),
            negatives: self.positives.clone(),
            train: flip(&self.train),
            heldout: flip(&self.heldout),
        }
    }
}

/// Members of the cluster are positives, every other object is a negative.
pub fn build_examples(cluster: &SemanticCluster, latents: &ObjectLatents, seed: u64) -> Result<LabeledLatentSet> {
    let index: BTreeMap<&str, usize> = latents.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let missing: Vec<&str> = cluster.members.iter().map(String::as_str).filter(|id| !index.contains_key(id)).collect();
    if !missing.is_empty() {
        return Err(Error::UnknownId(format!("no object latent for {}", missing.join(", "))));
    }
    let members: BTreeSet<&str> = cluster.members.iter().map(String::as_str).collect();
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (id, z) in latents.ids.iter().zip(&latents.latents) {
        let entry = (id.clone(), z.values.clone());
        if members.contains(id.as_str()) { positives.push(entry) } else { negatives.push(entry) }
    }
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Degenerate(format!("{}: {} positives, {} negatives", cluster.semantic_id(), positives.len(), negatives.len())));
    }
    let (train, heldout) = stratified_split(positives.len(), negatives.len(), seed);
    Ok(LabeledLatentSet { semantic: cluster.semantic_id(), part: cluster.part, positives, negatives, train, heldout })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::LatentSpace;

    fn latents(n: usize) -> ObjectLatents {
        let ids = (0..n).map(|i| format!("chair-{i:04}")).collect();
        let z = (0..n).map(|i| LatentCode::new(vec![i as f64, 0.0], LatentSpace::Object)).collect();
        ObjectLatents::new(ids, z).unwrap()
    }

    fn cluster(members: &[usize]) -> SemanticCluster {
        SemanticCluster {
            part: PartId::Legs,
            cluster_id: 0,
            name: "swivel".into(),
            members: members.iter().map(|i| format!("chair-{i:04}")).collect(),
            member_indices: members.to_vec(),
            centroid: vec![0.0],
            size_fraction: 0.5,
            purity: 1.0,
            silhouette: None,
        }
    }

    #[test]
    fn partition_of_the_bank() {
        let set = build_examples(&cluster(&[1, 3, 5, 7, 9]), &latents(20), 0).unwrap();
        assert_eq!(set.positives.len() + set.negatives.len(), 20);
        assert_eq!(set.positives.len(), 5);
        assert_eq!(set.train.len() + set.heldout.len(), 20);
        assert_eq!(set.heldout.iter().filter(|e| e.1).count(), 1);
        assert_eq!(set.semantic, "legs/swivel");
    }

    #[test]
    fn all_members_is_degenerate() {
        let all: Vec<usize> = (0..10).collect();
        assert!(matches!(build_examples(&cluster(&all), &latents(10), 0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn missing_latent_is_reported() {
        let err = build_examples(&cluster(&[1, 30]), &latents(10), 0).unwrap_err();
        assert!(err.to_string().contains("chair-0030"));
    }

    #[test]
    fn latent_may_be_positive_for_two_semantics() {
        let z = latents(10);
        let a = build_examples(&cluster(&[2, 3]), &z, 0).unwrap();
        let mut other = cluster(&[3, 4]);
        other.part = PartId::Backrest;
        other.name = "curved".into();
        let b = build_examples(&other, &z, 0).unwrap();
        assert!(a.positives.iter().any(|p| p.0 == "chair-0003"));
        assert!(b.positives.iter().any(|p| p.0 == "chair-0003"));
    }
}
