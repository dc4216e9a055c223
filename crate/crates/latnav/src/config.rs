use std::path::Path;

use latnav_core::directions::SvmConfig;
use latnav_core::metrics::SubclassConfig;
use latnav_core::neural::{AeConfig, ClsConfig, SegConfig, TrainConfig, TrunkConfig};
use latnav_core::rng::derived_seed;
use latnav_core::semdiscovery::ClusteringConfig;
use latnav_core::synthgen::GenConfig;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AeStageConfig {
    pub arch: AeConfig,
    #[serde(default)]
    pub train: TrainConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegStageConfig {
    pub arch: SegConfig,
    pub train: TrainConfig,
    /// Also train on autoencoder reconstructions of the training objects,
    /// labelled by their nearest original point.
    pub reconstructions: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClsStageConfig {
    pub arch: ClsConfig,
    pub train: TrainConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Edit length in units of each direction's signed-distance deviation.
    pub alpha: f64,
    pub n_samples: usize,
    /// Probes for the positive/negative edit comparison.
    pub negative_probes: usize,
    /// Components kept by each unsupervised baseline.
    pub baseline_components: usize,
    /// Probes used to match baseline components to semantics.
    pub match_probes: usize,
    pub random_directions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartMixConfig {
    pub mixed_count: usize,
    pub alpha: f64,
    pub n_samples: usize,
}

/// Every stage's settings in one document. Section seeds are derived from
/// the top-level `seed` when the pipeline runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub format_version: u32,
    pub seed: u64,
    pub data: GenConfig,
    pub part_ae: AeStageConfig,
    pub object_ae: AeStageConfig,
    pub segmenter: SegStageConfig,
    pub classifier: ClsStageConfig,
    pub clustering: ClusteringConfig,
    pub svm: SvmConfig,
    pub evaluation: EvalConfig,
    pub subclass: SubclassConfig,
    pub partmix: PartMixConfig,
}

impl Default for SegStageConfig {
    fn default() -> Self {
        Self { arch: SegConfig::default(), train: TrainConfig { epochs: 12, ..TrainConfig::default() }, reconstructions: true }
    }
}

impl Default for ClsStageConfig {
    fn default() -> Self {
        Self {
            arch: ClsConfig { trunk: TrunkConfig { hidden: vec![16, 32], feat: 32 } },
            train: TrainConfig { epochs: 15, ..TrainConfig::default() },
        }
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { alpha: 2.0, n_samples: 200, negative_probes: 100, baseline_components: 8, match_probes: 50, random_directions: 5 }
    }
}

impl Default for PartMixConfig {
    fn default() -> Self {
        Self { mixed_count: 600, alpha: 2.0, n_samples: 200 }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            format_version: CONFIG_FORMAT_VERSION,
            seed: 0,
            data: GenConfig::default(),
            part_ae: AeStageConfig { arch: AeConfig::part(), train: TrainConfig { epochs: 20, ..TrainConfig::default() } },
            object_ae: AeStageConfig { arch: AeConfig::object(), train: TrainConfig { epochs: 30, ..TrainConfig::default() } },
            segmenter: SegStageConfig::default(),
            classifier: ClsStageConfig::default(),
            clustering: ClusteringConfig::default(),
            svm: SvmConfig::default(),
            evaluation: EvalConfig::default(),
            subclass: SubclassConfig::default(),
            partmix: PartMixConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != CONFIG_FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported config format_version {}", self.format_version)));
        }
        self.clustering.validate().map_err(|e| Error::Config(e.to_string()))?;
        let e = &self.evaluation;
        if !(e.alpha.is_finite()) || e.n_samples == 0 || e.negative_probes == 0 || e.match_probes == 0 || e.baseline_components == 0 {
            return Err(Error::Config("evaluation alpha must be finite and every count positive".into()));
        }
        if self.data.points != self.object_ae.arch.input_points || self.data.part_points != self.part_ae.arch.input_points {
            return Err(Error::Config(format!(
                "autoencoder inputs ({} object, {} part points) must match the dataset ({} object, {} part points)",
                self.object_ae.arch.input_points, self.part_ae.arch.input_points, self.data.points, self.data.part_points
            )));
        }
        Ok(())
    }

    /// Copy with every section seed derived from the top-level seed.
    pub fn resolved(&self) -> Self {
        let s = self.seed;
        let mut c = self.clone();
        c.data.seed = s;
        c.part_ae.train.seed = derived_seed(s, "part-ae", 0);
        c.object_ae.train.seed = derived_seed(s, "object-ae", 0);
        c.segmenter.train.seed = derived_seed(s, "segmenter", 0);
        c.classifier.train.seed = derived_seed(s, "classifier", 0);
        c.subclass.seed = derived_seed(s, "subclass", 0);
        c
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}
