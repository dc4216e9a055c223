//! Semantic directions in the object latent space: example sets from part
//! clusters, linear SVM hyperplanes, PCA and weight-factorisation baselines,
//! and cosine analysis.

mod analysis;
mod examples;
mod fit;
mod svm;

pub use analysis::{
    closedform_baseline_directions, cosine_similarity_matrix, random_directions, match_baselines_to_semantics, pca_baseline_directions, symmetric_eigen, BaselineMatch,
};
pub use examples::{build_examples, LabeledLatentSet, ObjectLatents};
pub use fit::fit_part_directions;
pub use svm::{fit_linear_svm, SvmConfig};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::synthgen::PartId;
use crate::{Error, Result};

pub const BANK_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    LatNav,
    PcaBaseline,
    ClosedFormBaseline,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemanticDirection {
    /// `part/semantic` for discovered directions, `pca/3` style for baselines.
    pub id: String,
    pub part: Option<PartId>,
    pub semantic: String,
    /// Unit normal of the hyperplane, oriented towards the positive examples.
    pub normal: Vec<f64>,
    /// Signed distance of `z` is `normal . z + bias`.
    pub bias: f64,
    pub train_acc: Option<f64>,
    pub heldout_acc: Option<f64>,
    /// Population standard deviation of signed distances over the object latents.
    pub dist_std: f64,
    pub provenance: Provenance,
    /// Eigenvalue for baseline components.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalue: Option<f64>,
}

impl SemanticDirection {
    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn signed_distance(&self, z: &[f64]) -> f64 {
        dot(&self.normal, z) + self.bias
    }

    /// The same hyperplane with its orientation reversed.
    pub fn flipped(&self) -> Self {
        Self { normal: self.normal.iter().map(|v| -v).collect(), bias: -self.bias, ..self.clone() }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Directions tied to one object-autoencoder checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionBank {
    pub format_version: u32,
    pub space_id: String,
    pub checkpoint_hash: String,
    pub directions: Vec<SemanticDirection>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl DirectionBank {
    pub fn new(space_id: impl Into<String>, checkpoint_hash: impl Into<String>, directions: Vec<SemanticDirection>) -> Result<Self> {
        let bank = Self {
            format_version: BANK_FORMAT_VERSION,
            space_id: space_id.into(),
            checkpoint_hash: checkpoint_hash.into(),
            directions,
            metadata: BTreeMap::new(),
        };
        bank.validate()?;
        Ok(bank)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != BANK_FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported direction bank version {}", self.format_version)));
        }
        let dim = self.directions.first().map(SemanticDirection::dim);
        let mut ids = std::collections::BTreeSet::new();
        for d in &self.directions {
            if Some(d.dim()) != dim {
                return Err(Error::ShapeMismatch { expected: format!("dimension {}", dim.unwrap_or(0)), got: format!("{} in {}", d.dim(), d.id) });
            }
            let norm = dot(&d.normal, &d.normal).sqrt();
            if !((norm - 1.0).abs() <= 1e-9) {
                return Err(Error::InvalidInput(format!("direction {} has norm {norm}", d.id)));
            }
            if !ids.insert(d.id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate direction id {}", d.id)));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> Option<usize> {
        self.directions.first().map(SemanticDirection::dim)
    }

    pub fn get(&self, id: &str) -> Result<&SemanticDirection> {
        self.directions.iter().find(|d| d.id == id).ok_or_else(|| Error::UnknownId(format!("direction {id}")))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bank: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        bank.validate()?;
        Ok(bank)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir(id: &str, normal: Vec<f64>) -> SemanticDirection {
        SemanticDirection {
            id: id.into(),
            part: Some(PartId::Legs),
            semantic: "swivel".into(),
            normal,
            bias: 0.25,
            train_acc: Some(1.0),
            heldout_acc: Some(0.95),
            dist_std: 0.5,
            provenance: Provenance::LatNav,
            eigenvalue: None,
        }
    }

    #[test]
    fn json_round_trip() {
        let bank = DirectionBank::new("obj", "abc", vec![dir("legs/swivel", vec![0.6, 0.8]), dir("legs/straight", vec![1.0, 0.0])]).unwrap();
        let back: DirectionBank = serde_json::from_str(&bank.to_json().unwrap()).unwrap();
        assert_eq!(back, bank);
        assert_eq!(bank.get("legs/straight").unwrap().normal, vec![1.0, 0.0]);
        assert!(matches!(bank.get("nope"), Err(Error::UnknownId(_))));
    }

    #[test]
    fn rejects_bad_banks() {
        assert!(DirectionBank::new("o", "h", vec![dir("a", vec![1.0, 1.0])]).is_err());
        assert!(DirectionBank::new("o", "h", vec![dir("a", vec![1.0, 0.0]), dir("b", vec![1.0])]).is_err());
        assert!(DirectionBank::new("o", "h", vec![dir("a", vec![1.0, 0.0]), dir("a", vec![0.0, 1.0])]).is_err());
    }

    #[test]
    fn flip_negates_distance() {
        let d = dir("a", vec![0.6, 0.8]);
        let z = [0.3, -1.2];
        assert_eq!(d.flipped().signed_distance(&z), -d.signed_distance(&z));
    }
}
