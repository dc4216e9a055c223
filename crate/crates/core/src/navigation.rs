//! Latent-space editing: translation along semantic directions, decoding of
//! the edited latents, and alpha sweeps with a periphery quality proxy.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::directions::DirectionBank;
use crate::geometry::{chamfer_distance, PointCloud};
use crate::neural::{AutoEncoder, LatentCode, LatentSpace};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaUnits {
    Absolute,
    /// Multiples of the direction's signed-distance standard deviation.
    #[default]
    DistStd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditTerm {
    pub direction_id: String,
    pub alpha: f64,
    #[serde(default)]
    pub units: AlphaUnits,
}

impl EditTerm {
    pub fn new(direction_id: impl Into<String>, alpha: f64, units: AlphaUnits) -> Self {
        Self { direction_id: direction_id.into(), alpha, units }
    }
}

/// Parses `part/semantic:signed-float` in [`AlphaUnits::DistStd`].
impl FromStr for EditTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (id, alpha) = s.rsplit_once(':').ok_or_else(|| Error::Parse(format!("edit term {s:?} is not id:alpha")))?;
        let alpha: f64 = alpha.trim().parse().map_err(|_| Error::Parse(format!("bad alpha in edit term {s:?}")))?;
        if id.is_empty() || !alpha.is_finite() {
            return Err(Error::Parse(format!("bad edit term {s:?}")));
        }
        Ok(Self::new(id, alpha, AlphaUnits::DistStd))
    }
}

/// Alpha of each term in latent units.
pub fn absolute_alphas(terms: &[EditTerm], bank: &DirectionBank) -> Result<Vec<f64>> {
    terms
        .iter()
        .map(|t| {
            if !t.alpha.is_finite() {
                return Err(Error::InvalidInput(format!("alpha {} for {}", t.alpha, t.direction_id)));
            }
            let d = bank.get(&t.direction_id)?;
            Ok(match t.units {
                AlphaUnits::Absolute => t.alpha,
                AlphaUnits::DistStd => t.alpha * d.dist_std,
            })
        })
        .collect()
}

/// `z + sum(alpha_i * q_i)`. Zero-alpha terms are skipped, so an all-zero edit
/// returns `base` unchanged.
pub fn translate_latent(base: &LatentCode<f64>, terms: &[EditTerm], bank: &DirectionBank) -> Result<LatentCode<f64>> {
    if base.space != LatentSpace::Object {
        return Err(Error::InvalidInput(format!("edits apply to object latents, got a {:?} latent", base.space)));
    }
    let alphas = absolute_alphas(terms, bank)?;
    let mut out = base.clone();
    for (t, a) in terms.iter().zip(alphas) {
        let q = &bank.get(&t.direction_id)?.normal;
        if q.len() != out.dim() {
            return Err(Error::ShapeMismatch { expected: format!("dimension {}", out.dim()), got: format!("{} for {}", q.len(), t.direction_id) });
        }
        if a != 0.0 {
            out.values.iter_mut().zip(q).for_each(|(z, qi)| *z += a * qi);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneDistance {
    pub direction_id: String,
    pub before: f64,
    pub after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditDiagnostics {
    pub norm_before: f64,
    pub norm_after: f64,
    pub distances: Vec<HyperplaneDistance>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EditResult {
    pub original_latent: LatentCode<f64>,
    pub edited_latent: LatentCode<f64>,
    pub original: PointCloud<f64>,
    pub edited: PointCloud<f64>,
    pub applied_alphas: Vec<f64>,
    pub diagnostics: EditDiagnostics,
}

pub enum EditInput<'a> {
    Cloud(&'a PointCloud<f64>),
    Latent(&'a LatentCode<f64>),
}

/// An object autoencoder paired with a direction bank fitted in its latent space.
pub struct Editor<'a> {
    pub ae: &'a AutoEncoder<f64>,
    pub bank: &'a DirectionBank,
}

impl<'a> Editor<'a> {
    /// Fails when the bank was fitted against a different checkpoint.
    pub fn new(ae: &'a AutoEncoder<f64>, checkpoint_hash: &str, bank: &'a DirectionBank) -> Result<Self> {
        if bank.checkpoint_hash != checkpoint_hash {
            return Err(Error::Precondition(format!(
                "direction bank belongs to checkpoint {}, not {checkpoint_hash}",
                bank.checkpoint_hash
            )));
        }
        if bank.dim().is_some_and(|d| d != ae.encoder.latent_dim()) {
            return Err(Error::ShapeMismatch { expected: format!("dimension {}", ae.encoder.latent_dim()), got: format!("{:?}", bank.dim()) });
        }
        Ok(Self { ae, bank })
    }

    pub fn latent(&self, input: EditInput<'_>) -> Result<LatentCode<f64>> {
        match input {
            EditInput::Cloud(c) => self.ae.encoder.encode(c),
            EditInput::Latent(z) => Ok(z.clone()),
        }
    }

    pub fn edit(&self, input: EditInput<'_>, terms: &[EditTerm]) -> Result<EditResult> {
        let z = self.latent(input)?;
        let edited_latent = translate_latent(&z, terms, self.bank)?;
        let original = self.ae.decoder.decode(&z)?;
        let edited = if edited_latent == z { original.clone() } else { self.ae.decoder.decode(&edited_latent)? };
        let mut seen = std::collections::BTreeSet::new();
        let distances = terms
            .iter()
            .filter(|t| seen.insert(t.direction_id.clone()))
            .map(|t| {
                let d = self.bank.get(&t.direction_id)?;
                Ok(HyperplaneDistance {
                    direction_id: t.direction_id.clone(),
                    before: d.signed_distance(&z.values),
                    after: d.signed_distance(&edited_latent.values),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EditResult {
            applied_alphas: absolute_alphas(terms, self.bank)?,
            diagnostics: EditDiagnostics { norm_before: z.norm(), norm_after: edited_latent.norm(), distances },
            original_latent: z,
            edited_latent,
            original,
            edited,
        })
    }
}

/// Decoded training objects used as the quality reference for sweeps.
#[derive(Clone, Debug, Default)]
pub struct ReferenceSet {
    pub latents: Vec<Vec<f64>>,
    pub clouds: Vec<PointCloud<f64>>,
    /// Candidates compared by Chamfer distance after a latent-space prefilter.
    pub shortlist: usize,
}

impl ReferenceSet {
    pub fn new(latents: Vec<Vec<f64>>, clouds: Vec<PointCloud<f64>>) -> Result<Self> {
        if latents.len() != clouds.len() {
            return Err(Error::ShapeMismatch { expected: format!("{} clouds", latents.len()), got: clouds.len().to_string() });
        }
        Ok(Self { latents, clouds, shortlist: 8 })
    }

    /// Chamfer distance from `cloud` to the closest reference among the
    /// `shortlist` references nearest to `z` in latent space.
    pub fn quality(&self, z: &[f64], cloud: &PointCloud<f64>) -> Result<Option<f64>> {
        if self.latents.is_empty() {
            return Ok(None);
        }
        let mut order: Vec<(f64, usize)> =
            self.latents.iter().enumerate().map(|(i, r)| (r.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum(), i)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut best = f64::INFINITY;
        for &(_, i) in order.iter().take(self.shortlist.max(1)) {
            best = best.min(chamfer_distance(cloud, &self.clouds[i])?);
        }
        Ok(Some(best))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepStep {
    /// Requested alpha, in the sweep's units.
    pub alpha: f64,
    pub absolute_alpha: f64,
    pub signed_distance: f64,
    pub latent_norm: f64,
    pub cloud: PointCloud<f64>,
    pub quality: Option<f64>,
}

/// One decode per alpha along a single direction.
pub fn sweep(
    base: &LatentCode<f64>,
    direction_id: &str,
    alphas: &[f64],
    units: AlphaUnits,
    ae: &AutoEncoder<f64>,
    bank: &DirectionBank,
    references: &ReferenceSet,
) -> Result<Vec<SweepStep>> {
    let d = bank.get(direction_id)?;
    alphas
        .iter()
        .map(|&alpha| {
            let term = EditTerm::new(direction_id, alpha, units);
            let z = translate_latent(base, std::slice::from_ref(&term), bank)?;
            let cloud = ae.decoder.decode(&z)?;
            Ok(SweepStep {
                alpha,
                absolute_alpha: absolute_alphas(std::slice::from_ref(&term), bank)?[0],
                signed_distance: d.signed_distance(&z.values),
                latent_norm: z.norm(),
                quality: references.quality(&z.values, &cloud)?,
                cloud,
            })
        })
        .collect()
}
