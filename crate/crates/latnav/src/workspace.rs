use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use latnav_core::directions::DirectionBank;
use latnav_core::metrics::{ClassifierLevel, SemanticClassifier};
use latnav_core::neural::{AutoEncoder, Checkpoint, ClassifierReport, Segmenter};
use latnav_core::semdiscovery::{PartLatentBank, SemanticCluster};
use latnav_core::synthgen::{Dataset, PartId};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const INDEX_FORMAT_VERSION: u32 = 1;

pub const DATA_DIR: &str = "data";
pub const MANIFEST: &str = "data/manifest.json";
pub const PART_AE: &str = "checkpoints/part_ae.json";
pub const OBJECT_AE: &str = "checkpoints/object_ae.json";
pub const SEGMENTER: &str = "checkpoints/segmenter.json";
pub const CLASSIFIER_DIR: &str = "checkpoints/classifiers";
pub const CLASSIFIER_INDEX: &str = "checkpoints/classifiers/index.json";
pub const PART_BANK: &str = "banks/part_bank.json";
pub const CLUSTERS: &str = "banks/clusters.json";
pub const DIRECTIONS: &str = "banks/directions.json";
pub const PCA_BANK: &str = "banks/pca.json";
pub const CLOSEDFORM_BANK: &str = "banks/closedform.json";
pub const REPORTS_DIR: &str = "reports";

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn file_hash(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::Workspace(format!("{}: {e}", path.display())))?))
}

/// Output files of one completed stage and the key it was run under.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub key: String,
    /// Workspace-relative path to content hash.
    pub outputs: BTreeMap<String, String>,
}

impl StageRecord {
    pub fn digest(&self) -> String {
        let mut text = String::new();
        for (p, h) in &self.outputs {
            text.push_str(&format!("{p}\t{h}\n"));
        }
        sha256_hex(text.as_bytes())
    }
}

/// `workspace.json`: completed stages with content hashes of their outputs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkspaceIndex {
    pub format_version: u32,
    pub stages: BTreeMap<String, StageRecord>,
    /// Hash over every stage's outputs.
    pub index_hash: String,
}

impl WorkspaceIndex {
    pub fn compute_hash(&self) -> String {
        let mut text = String::new();
        for (name, r) in &self.stages {
            text.push_str(&format!("{name}\t{}\n", r.digest()));
        }
        sha256_hex(text.as_bytes())
    }
}

/// Directory layout of a workspace root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkspaceLayout {
    pub root: PathBuf,
}

impl WorkspaceLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn index_path(&self) -> PathBuf {
        self.root.join("workspace.json")
    }

    pub fn create_dirs(&self) -> Result<()> {
        for d in [DATA_DIR, "checkpoints", CLASSIFIER_DIR, "banks", REPORTS_DIR] {
            fs::create_dir_all(self.path(d))?;
        }
        Ok(())
    }

    pub fn load_index(&self) -> Result<WorkspaceIndex> {
        let p = self.index_path();
        if !p.exists() {
            return Ok(WorkspaceIndex { format_version: INDEX_FORMAT_VERSION, ..Default::default() });
        }
        let idx: WorkspaceIndex = serde_json::from_str(&fs::read_to_string(&p)?).map_err(|e| Error::Workspace(format!("workspace.json: {e}")))?;
        if idx.format_version != INDEX_FORMAT_VERSION {
            return Err(Error::Workspace(format!("unsupported workspace.json format_version {}", idx.format_version)));
        }
        Ok(idx)
    }

    pub fn save_index(&self, index: &mut WorkspaceIndex) -> Result<()> {
        index.format_version = INDEX_FORMAT_VERSION;
        index.index_hash = index.compute_hash();
        fs::write(self.index_path(), serde_json::to_string_pretty(index)?)?;
        Ok(())
    }

    /// Files whose current content no longer matches the index.
    pub fn verify(&self, index: &WorkspaceIndex) -> Vec<String> {
        let mut bad = Vec::new();
        for r in index.stages.values() {
            for (p, h) in &r.outputs {
                if file_hash(&self.path(p)).ok().as_ref() != Some(h) {
                    bad.push(p.clone());
                }
            }
        }
        bad
    }

    fn require(&self, rel: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if p.exists() {
            Ok(p)
        } else {
            Err(Error::Workspace(format!("{} is missing; run the stage that produces it first", p.display())))
        }
    }

    pub fn read_json<T: serde::de::DeserializeOwned>(&self, rel: &str) -> Result<T> {
        Ok(serde_json::from_str(&fs::read_to_string(self.require(rel)?)?)?)
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<()> {
        let p = self.path(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(p, serde_json::to_string_pretty(value)?)?;
        Ok(())
    }

    pub fn write_text(&self, rel: &str, text: &str) -> Result<()> {
        let p = self.path(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(p, text)?;
        Ok(())
    }

    pub fn dataset(&self) -> Result<Dataset> {
        self.require(MANIFEST)?;
        Ok(Dataset::read(&self.path(DATA_DIR))?)
    }

    /// Autoencoder and the content hash of its checkpoint file.
    pub fn autoencoder(&self, rel: &str) -> Result<(AutoEncoder<f64>, String)> {
        let p = self.require(rel)?;
        Ok((Checkpoint::load(&p)?.autoencoder()?, file_hash(&p)?))
    }

    pub fn segmenter(&self) -> Result<(Segmenter<f64>, String)> {
        let p = self.require(SEGMENTER)?;
        Ok((Checkpoint::load(&p)?.segmenter()?, file_hash(&p)?))
    }

    pub fn part_bank(&self) -> Result<PartLatentBank<f64>> {
        self.read_json(PART_BANK)
    }

    pub fn clusters(&self) -> Result<Vec<SemanticCluster>> {
        self.read_json(CLUSTERS)
    }

    pub fn direction_bank(&self, rel: &str) -> Result<DirectionBank> {
        Ok(DirectionBank::load(&self.require(rel)?)?)
    }

    /// Direction bank checked against the object autoencoder it was fitted on.
    pub fn checked_direction_bank(&self, rel: &str) -> Result<(DirectionBank, AutoEncoder<f64>, String)> {
        let bank = self.direction_bank(rel)?;
        let (ae, hash) = self.autoencoder(OBJECT_AE)?;
        if bank.checkpoint_hash != hash {
            return Err(Error::HashMismatch { expected: bank.checkpoint_hash, found: hash });
        }
        Ok((bank, ae, hash))
    }

    pub fn classifiers(&self) -> Result<Vec<SemanticClassifier>> {
        let entries: Vec<ClassifierEntry> = self.read_json(CLASSIFIER_INDEX)?;
        entries
            .into_iter()
            .map(|e| {
                let model = Checkpoint::load(&self.require(&e.file)?)?.classifier()?;
                Ok(SemanticClassifier { attribute: e.attribute, part: e.part, level: e.level, model, report: e.report })
            })
            .collect()
    }
}

/// Entry of the classifier index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierEntry {
    pub attribute: String,
    pub part: PartId,
    pub level: ClassifierLevel,
    pub file: String,
    pub report: ClassifierReport,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_hash_tracks_outputs() {
        let mut a = WorkspaceIndex::default();
        a.stages.insert("s".into(), StageRecord { key: "k".into(), outputs: BTreeMap::from([("x".into(), "1".into())]) });
        let h = a.compute_hash();
        let mut b = a.clone();
        b.stages.get_mut("s").unwrap().key = "other".into();
        assert_eq!(b.compute_hash(), h);
        b.stages.get_mut("s").unwrap().outputs.insert("x".into(), "2".into());
        assert_ne!(b.compute_hash(), h);
    }

    #[test]
    fn verify_reports_modified_files() {
        let dir = tempfile::tempdir().unwrap();
        let ws = WorkspaceLayout::new(dir.path());
        ws.write_text("reports/a.txt", "hello").unwrap();
        let mut idx = WorkspaceIndex::default();
        idx.stages.insert(
            "s".into(),
            StageRecord { key: "k".into(), outputs: BTreeMap::from([("reports/a.txt".into(), file_hash(&ws.path("reports/a.txt")).unwrap())]) },
        );
        assert!(ws.verify(&idx).is_empty());
        ws.write_text("reports/a.txt", "changed").unwrap();
        assert_eq!(ws.verify(&idx), vec!["reports/a.txt".to_string()]);
    }
}
