use rand::seq::SliceRandom;

use crate::directions::SemanticDirection;
use crate::geometry::PointCloud;
use crate::neural::{AutoEncoder, LatentCode, PointDecoder, Segmenter};
use crate::{parallel, rng, Error, Result};

/// Assigns a part label to every point of a cloud.
pub trait PartLabeler: Sync {
    fn part_labels(&self, cloud: &PointCloud<f64>) -> Result<Vec<u8>>;
}

impl PartLabeler for Segmenter<f64> {
    fn part_labels(&self, cloud: &PointCloud<f64>) -> Result<Vec<u8>> {
        Ok(self.predict(cloud))
    }
}

/// Uses the labels stored in the cloud.
#[derive(Clone, Copy, Debug, Default)]
pub struct GroundTruth;

impl PartLabeler for GroundTruth {
    fn part_labels(&self, cloud: &PointCloud<f64>) -> Result<Vec<u8>> {
        cloud.labels().map(<[u8]>::to_vec).ok_or_else(|| Error::InvalidInput("ground-truth labelling needs a labelled cloud".into()))
    }
}

/// `n` draws cycling through a seeded permutation of `0..available`.
pub fn probe_order(available: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..available).collect();
    perm.shuffle(&mut rng::derived(seed, "probes", 0));
    (0..n).map(|i| perm[i % available.max(1)]).collect()
}

/// Held-out objects with their latents, reconstructions and reconstruction labels.
#[derive(Clone, Debug)]
pub struct ProbeSet {
    pub ids: Vec<String>,
    pub latents: Vec<LatentCode<f64>>,
    pub decoded: Vec<PointCloud<f64>>,
    pub labels: Vec<Vec<u8>>,
}

impl ProbeSet {
    pub fn build(ids: Vec<String>, clouds: &[PointCloud<f64>], ae: &AutoEncoder<f64>, labeler: &dyn PartLabeler) -> Result<Self> {
        if ids.len() != clouds.len() {
            return Err(Error::ShapeMismatch { expected: format!("{} clouds", ids.len()), got: clouds.len().to_string() });
        }
        if ids.is_empty() {
            return Err(Error::Precondition("empty probe set".into()));
        }
        let latents = parallel::map(clouds, |c| ae.encoder.encode(&c.unlabeled()))?;
        let decoded = parallel::map(&latents, |z| ae.decoder.decode(z))?;
        let labels = parallel::map(&decoded, |c| labeler.part_labels(c))?;
        Ok(Self { ids, latents, decoded, labels })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn draws(&self, n: usize, seed: u64) -> Vec<usize> {
        probe_order(self.len(), n, seed)
    }
}

pub(crate) fn translated(z: &LatentCode<f64>, direction: &SemanticDirection, alpha: f64) -> LatentCode<f64> {
    let mut out = z.clone();
    if alpha != 0.0 {
        out.values.iter_mut().zip(&direction.normal).for_each(|(v, q)| *v += alpha * q);
    }
    out
}

/// Seeded probe draws edited by `alpha` (latent units) along one direction,
/// decoded and labelled once for every metric computed from them.
#[derive(Clone, Debug)]
pub struct EditBatch {
    pub direction_id: String,
    pub alpha: f64,
    /// Probe index of each edit.
    pub draws: Vec<usize>,
    pub clouds: Vec<PointCloud<f64>>,
    pub labels: Vec<Vec<u8>>,
}

impl EditBatch {
    pub fn build(
        probes: &ProbeSet,
        direction: &SemanticDirection,
        alpha: f64,
        n_samples: usize,
        seed: u64,
        decoder: &PointDecoder<f64>,
        labeler: &dyn PartLabeler,
    ) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::Precondition("n_samples must be at least 1".into()));
        }
        let draws = probes.draws(n_samples, seed);
        let edited = parallel::map(&draws, |&i| {
            if alpha == 0.0 {
                return Ok((probes.decoded[i].clone(), probes.labels[i].clone()));
            }
            let c = decoder.decode(&translated(&probes.latents[i], direction, alpha))?;
            let l = labeler.part_labels(&c)?;
            Ok((c, l))
        })?;
        let (clouds, labels) = edited.into_iter().unzip();
        Ok(Self { direction_id: direction.id.clone(), alpha, draws, clouds, labels })
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}
