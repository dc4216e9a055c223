use rand::Rng;

use super::{Dataset, PartId};
use crate::geometry::{normalize_unit_sphere, resample, PointCloud};
use crate::{rng, Error, Result};

/// A chair stitched together from parts of other chairs.
#[derive(Clone, Debug)]
pub struct MixedObject {
    pub cloud: PointCloud<f64>,
    /// Dataset index each part was taken from, indexed by `PartId`.
    pub sources: [usize; PartId::COUNT],
}

/// Concatenates each part's labelled points from its source object, without
/// any connectivity repair, then resamples to `n_points`.
pub fn mix_from_sources(dataset: &Dataset, sources: [usize; PartId::COUNT], n_points: usize, seed: u64) -> Result<MixedObject> {
    let mut pieces = Vec::new();
    for part in PartId::ALL {
        let src = sources[part.index()];
        let cloud = dataset.clouds.get(src).ok_or_else(|| Error::UnknownId(format!("object index {src}")))?;
        if let Some(p) = cloud.part(part.label()) {
            pieces.push(p);
        }
    }
    let joined = PointCloud::concat(&pieces)?;
    let (cloud, _) = normalize_unit_sphere(&resample(&joined, n_points, seed)?)?;
    Ok(MixedObject { cloud, sources })
}

pub fn naive_part_mix(dataset: &Dataset, pool: &[usize], n_out: usize, seed: u64) -> Result<Vec<MixedObject>> {
    if n_out == 0 {
        return Ok(Vec::new());
    }
    if pool.len() < 4 {
        return Err(Error::Precondition(format!("part mixing needs at least 4 objects, got {}", pool.len())));
    }
    let n_points = dataset.manifest.config.points;
    (0..n_out)
        .map(|k| {
            let mut g = rng::derived(seed, "part-mix", k as u64);
            let mut sources = [0; PartId::COUNT];
            for s in sources.iter_mut() {
                *s = pool[g.random_range(0..pool.len())];
            }
            mix_from_sources(dataset, sources, n_points, seed.wrapping_add(k as u64))
        })
        .collect()
}
