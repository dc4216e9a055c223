//! Procedural part-labelled chairs with known semantic attributes.
//!
//! Every object is a pure function of its [`ChairSpec`] and a sampling seed,
//! so the generator doubles as the ground-truth oracle for evaluation.

mod attributes;
mod dataset;
mod partmix;
mod realize;
mod spec;

pub use attributes::{attribute_part, true_attributes, AttributeRules, ATTRIBUTE_NAMES};
pub use dataset::{generate_dataset, Dataset, DatasetManifest, GenConfig, ManifestEntry, Split};
pub use partmix::{mix_from_sources, naive_part_mix, MixedObject};
pub use realize::{realize_part, realize_point_cloud, realize_with_transform};
pub use spec::{sample_spec, ArmrestStyle, ChairSpec, LegStyle, SpecRanges, StyleWeights};

use serde::{Deserialize, Serialize};

/// Part categories of the chair class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartId {
    Backrest = 0,
    Seat = 1,
    Legs = 2,
    Armrest = 3,
}

impl PartId {
    pub const ALL: [PartId; 4] = [PartId::Backrest, PartId::Seat, PartId::Legs, PartId::Armrest];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> u8 {
        self as u8
    }

    pub fn from_label(l: u8) -> Option<Self> {
        Self::ALL.get(l as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            PartId::Backrest => "backrest",
            PartId::Seat => "seat",
            PartId::Legs => "legs",
            PartId::Armrest => "armrest",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(s))
    }
}

impl std::fmt::Display for PartId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
