//! JSON checkpoints: architecture descriptor plus named flat parameter arrays.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::autoencoder::{AeConfig, AutoEncoder};
use super::classify::{ClsConfig, Classifier};
use super::layers::Params;
use super::optim::TrainConfig;
use super::segment::{SegConfig, Segmenter};
use super::LatentSpace;
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Arch {
    AutoEncoder { config: AeConfig, space: LatentSpace },
    Segmenter { config: SegConfig },
    Classifier { config: ClsConfig },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub arch: Arch,
    /// `<layer>.weight` (row-major, inputs x outputs) and `<layer>.bias`.
    pub params: BTreeMap<String, Vec<f64>>,
    pub train_config: Option<TrainConfig>,
    pub seed: u64,
    pub loss_curve: Vec<f64>,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
}

fn export<M: Params<f64>>(m: &M) -> BTreeMap<String, Vec<f64>> {
    let mut out = BTreeMap::new();
    for (l, name) in m.layers().into_iter().zip(m.layer_names()) {
        out.insert(format!("{name}.weight"), l.w.iter().copied().collect());
        out.insert(format!("{name}.bias"), l.b.to_vec());
    }
    out
}

fn import<M: Params<f64>>(mut m: M, params: &BTreeMap<String, Vec<f64>>) -> Result<M> {
    let names = m.layer_names();
    let expected: usize = names.len() * 2;
    if params.len() != expected {
        return Err(Error::ShapeMismatch { expected: format!("{expected} parameter arrays"), got: format!("{}", params.len()) });
    }
    for (l, name) in m.layers_mut().into_iter().zip(names) {
        let (rows, cols) = l.w.dim();
        let w = params.get(&format!("{name}.weight")).ok_or_else(|| Error::Parse(format!("missing {name}.weight")))?;
        let b = params.get(&format!("{name}.bias")).ok_or_else(|| Error::Parse(format!("missing {name}.bias")))?;
        if w.len() != rows * cols || b.len() != cols {
            return Err(Error::ShapeMismatch {
                expected: format!("{name}: {rows}x{cols} weight, {cols} bias"),
                got: format!("{} weight values, {} bias values", w.len(), b.len()),
            });
        }
        if w.iter().chain(b).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("{name} holds non-finite parameters")));
        }
        l.w = Array2::from_shape_vec((rows, cols), w.clone()).unwrap();
        l.b = Array1::from_vec(b.clone());
    }
    Ok(m)
}

impl Checkpoint {
    fn new(arch: Arch, params: BTreeMap<String, Vec<f64>>, train: Option<&TrainConfig>, curve: &[f64]) -> Self {
        Self {
            format_version: CHECKPOINT_VERSION,
            arch,
            params,
            seed: train.map_or(0, |t| t.seed),
            train_config: train.cloned(),
            loss_curve: curve.to_vec(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn from_autoencoder(ae: &AutoEncoder<f64>, config: &AeConfig, train: Option<&TrainConfig>, curve: &[f64]) -> Self {
        Self::new(Arch::AutoEncoder { config: config.clone(), space: ae.space() }, export(ae), train, curve)
    }

    pub fn from_segmenter(seg: &Segmenter<f64>, config: &SegConfig, train: Option<&TrainConfig>, curve: &[f64]) -> Self {
        Self::new(Arch::Segmenter { config: config.clone() }, export(seg), train, curve)
    }

    pub fn from_classifier(cls: &Classifier<f64>, config: &ClsConfig, train: Option<&TrainConfig>, curve: &[f64]) -> Self {
        Self::new(Arch::Classifier { config: config.clone() }, export(cls), train, curve)
    }

    fn check_version(&self) -> Result<()> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(Error::Parse(format!("unsupported checkpoint version {}", self.format_version)));
        }
        Ok(())
    }

    pub fn autoencoder(&self) -> Result<AutoEncoder<f64>> {
        self.check_version()?;
        match &self.arch {
            Arch::AutoEncoder { config, space } => import(AutoEncoder::new(config, *space, 0), &self.params),
            other => Err(Error::InvalidInput(format!("checkpoint holds {other:?}, not an autoencoder"))),
        }
    }

    pub fn segmenter(&self) -> Result<Segmenter<f64>> {
        self.check_version()?;
        match &self.arch {
            Arch::Segmenter { config } => import(Segmenter::new(config, 0), &self.params),
            other => Err(Error::InvalidInput(format!("checkpoint holds {other:?}, not a segmenter"))),
        }
    }

    pub fn classifier(&self) -> Result<Classifier<f64>> {
        self.check_version()?;
        match &self.arch {
            Arch::Classifier { config } => import(Classifier::new(config, 0), &self.params),
            other => Err(Error::InvalidInput(format!("checkpoint holds {other:?}, not a classifier"))),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::trunk::TrunkConfig;

    fn cfg() -> AeConfig {
        AeConfig { trunk: TrunkConfig { hidden: vec![4, 6], feat: 6 }, latent: 3, decoder_hidden: vec![5], input_points: 8, output_points: 8 }
    }

    #[test]
    fn roundtrip_is_exact() {
        let ae = AutoEncoder::<f64>::new(&cfg(), LatentSpace::Part, 42);
        let ck = Checkpoint::from_autoencoder(&ae, &cfg(), None, &[1.0, 0.5]);
        let back: Checkpoint = serde_json::from_str(&ck.to_json().unwrap()).unwrap();
        assert_eq!(back.autoencoder().unwrap(), ae);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let ae = AutoEncoder::<f64>::new(&cfg(), LatentSpace::Part, 42);
        let mut ck = Checkpoint::from_autoencoder(&ae, &cfg(), None, &[]);
        ck.params.get_mut("decoder.0.bias").unwrap().pop();
        assert!(matches!(ck.autoencoder(), Err(Error::ShapeMismatch { .. })));
        assert!(ck.segmenter().is_err());
    }
}
