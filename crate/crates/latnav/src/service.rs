use std::collections::BTreeMap;

use latnav_core::directions::DirectionBank;
use latnav_core::geometry::PointCloud;
use latnav_core::metrics::{sls_from_labels, PartLabeler, SlsOutcome};
use latnav_core::navigation::{EditDiagnostics, EditInput, EditTerm, Editor};
use latnav_core::neural::{AutoEncoder, LatentCode, LatentSpace, Segmenter};
use latnav_core::synthgen::{Dataset, PartId};
use serde::{Deserialize, Serialize};

use crate::workspace::{WorkspaceLayout, DIRECTIONS, OBJECT_AE};
use crate::{Error, Result};

pub const API_FORMAT_VERSION: u32 = 1;

/// Immutable model state shared by the CLI editing verbs and the HTTP service.
pub struct EditService {
    pub dataset: Dataset,
    pub ae: AutoEncoder<f64>,
    pub checkpoint_hash: String,
    pub segmenter: Segmenter<f64>,
    pub bank: DirectionBank,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EditRequest {
    #[serde(default)]
    pub object_id: Option<String>,
    #[serde(default)]
    pub latent: Option<Vec<f64>>,
    #[serde(default)]
    pub terms: Vec<EditTerm>,
    /// When given, must equal the served checkpoint hash.
    #[serde(default)]
    pub checkpoint_hash: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EditResponse {
    pub format_version: u32,
    pub checkpoint_hash: String,
    pub object_id: Option<String>,
    pub original_latent: Vec<f64>,
    pub edited_latent: Vec<f64>,
    /// Flat `x, y, z` triples.
    pub original: Vec<f64>,
    pub original_labels: Vec<u8>,
    pub edited: Vec<f64>,
    pub edited_labels: Vec<u8>,
    pub applied_alphas: Vec<f64>,
    pub diagnostics: EditDiagnostics,
    /// SLS of each part for this edit; `null` when undefined.
    pub sls: BTreeMap<PartId, Option<f64>>,
}

impl EditService {
    pub fn load(ws: &WorkspaceLayout) -> Result<Self> {
        let dataset = ws.dataset()?;
        let (ae, checkpoint_hash) = ws.autoencoder(OBJECT_AE)?;
        let (segmenter, _) = ws.segmenter()?;
        let bank = ws.direction_bank(DIRECTIONS)?;
        Ok(Self { dataset, ae, checkpoint_hash, segmenter, bank })
    }

    /// The bank's checkpoint hash when it differs from the loaded autoencoder.
    pub fn hash_mismatch(&self) -> Option<Error> {
        (self.bank.checkpoint_hash != self.checkpoint_hash)
            .then(|| Error::HashMismatch { expected: self.bank.checkpoint_hash.clone(), found: self.checkpoint_hash.clone() })
    }

    pub fn object(&self, id: &str) -> Result<&PointCloud<f64>> {
        let i = self.dataset.position(id).ok_or_else(|| latnav_core::Error::UnknownId(format!("object {id}")))?;
        Ok(&self.dataset.clouds[i])
    }

    pub fn edit(&self, req: &EditRequest) -> Result<EditResponse> {
        if let Some(e) = self.hash_mismatch() {
            return Err(e);
        }
        if let Some(h) = &req.checkpoint_hash {
            if *h != self.checkpoint_hash {
                return Err(Error::HashMismatch { expected: h.clone(), found: self.checkpoint_hash.clone() });
            }
        }
        let editor = Editor::new(&self.ae, &self.checkpoint_hash, &self.bank)?;
        let latent;
        let cloud;
        let input = match (&req.object_id, &req.latent) {
            (Some(id), None) => {
                cloud = self.object(id)?.unlabeled();
                EditInput::Cloud(&cloud)
            }
            (None, Some(z)) => {
                latent = LatentCode::new(z.clone(), LatentSpace::Object);
                if z.len() != self.ae.encoder.latent_dim() || z.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Usage(format!("latent must hold {} finite values", self.ae.encoder.latent_dim())));
                }
                EditInput::Latent(&latent)
            }
            _ => return Err(Error::Usage("give exactly one of object_id and latent".into())),
        };
        let r = editor.edit(input, &req.terms)?;
        let original_labels = self.segmenter.part_labels(&r.original)?;
        let edited_labels = if r.edited == r.original { original_labels.clone() } else { self.segmenter.part_labels(&r.edited)? };
        let mut sls = BTreeMap::new();
        for part in PartId::ALL {
            let v = match sls_from_labels(&r.original, &original_labels, &r.edited, &edited_labels, part) {
                Ok(SlsOutcome::Value(v)) => Some(v),
                Ok(SlsOutcome::ZeroDenominator { .. }) | Err(latnav_core::Error::NoPartPoints { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            sls.insert(part, v);
        }
        Ok(EditResponse {
            format_version: API_FORMAT_VERSION,
            checkpoint_hash: self.checkpoint_hash.clone(),
            object_id: req.object_id.clone(),
            original_latent: r.original_latent.values,
            edited_latent: r.edited_latent.values,
            original: r.original.to_flat(),
            original_labels,
            edited: r.edited.to_flat(),
            edited_labels,
            applied_alphas: r.applied_alphas,
            diagnostics: r.diagnostics,
            sls,
        })
    }
}
