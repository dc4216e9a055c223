use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_unit_sphere, resample, PointCloud};
use crate::neural::{LatentCode, LatentSpace, PointEncoder};
use crate::synthgen::{realize_part, Dataset, PartId};
use crate::{rng, Real, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BankEntry<T> {
    pub object_id: String,
    /// Index of the object in the dataset manifest.
    pub object_index: usize,
    pub part: PartId,
    pub latent: LatentCode<T>,
    /// Normalisation scale of the part before encoding; zero for the empty-part sentinel.
    pub scale: T,
    pub empty: bool,
}

/// Part latents of every (object, part) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartLatentBank<T> {
    pub part_points: usize,
    pub entries: Vec<BankEntry<T>>,
}

#[derive(Clone, Debug)]
pub struct BankBuild<T> {
    pub bank: PartLatentBank<T>,
    /// `(object id, part, message)` for entries that could not be encoded.
    pub errors: Vec<(String, PartId, String)>,
}

/// Stand-in cloud for an absent part: every point at the origin.
pub fn sentinel_cloud<T: Real>(n: usize) -> PointCloud<T> {
    PointCloud::new(vec![[T::zero(); 3]; n]).expect("sentinel is non-empty")
}

/// Part-encoder input for one labelled part: resampled, then re-normalised.
/// Returns the sentinel (and scale 0) when the part has no points.
pub fn part_input<T: Real>(cloud: &PointCloud<T>, part: PartId, n: usize, seed: u64) -> Result<(PointCloud<T>, T, bool)> {
    match cloud.part(part.label()) {
        None => Ok((sentinel_cloud(n), T::zero(), true)),
        Some(p) => {
            let p = resample(&p, n, seed)?;
            let (normed, t) = normalize_unit_sphere(&p)?;
            Ok((normed.unlabeled(), t.scale, false))
        }
    }
}


/// Part-encoder input for a generated object: the part sampled densely from its
/// specification. The scale is the radius of the labelled part in the stored
/// object cloud. Returns the sentinel (and scale 0) when the part is absent.
pub fn dataset_part_input(dataset: &Dataset, object: usize, part: PartId, n: usize, seed: u64) -> Result<(PointCloud<f64>, f64, bool)> {
    let spec = &dataset.manifest.objects[object].spec;
    match realize_part(spec, part, n, rng::derived_seed(seed ^ spec.seed, "part-input", part.index() as u64))? {
        None => Ok((sentinel_cloud(n), 0.0, true)),
        Some(p) => {
            let scale = match dataset.clouds[object].part(part.label()) {
                Some(sub) => normalize_unit_sphere(&sub).map_or(0.0, |(_, t)| t.scale),
                None => 0.0,
            };
            Ok((p.unlabeled(), scale, false))
        }
    }
}

/// Encodes every part of the selected objects with the part encoder.
pub fn build_part_latent_bank(dataset: &Dataset, objects: &[usize], encoder: &PointEncoder<f64>, seed: u64) -> BankBuild<f64> {
    let n = encoder.input_points;
    let mut entries = Vec::with_capacity(objects.len() * PartId::COUNT);
    let mut errors = Vec::new();
    for &i in objects {
        let id = &dataset.manifest.objects[i].id;
        for part in PartId::ALL {
            let res = dataset_part_input(dataset, i, part, n, seed).and_then(|(input, scale, empty)| {
                let mut latent = encoder.encode(&input)?;
                latent.space = LatentSpace::Part;
                Ok(BankEntry { object_id: id.clone(), object_index: i, part, latent, scale, empty })
            });
            match res {
                Ok(e) => entries.push(e),
                Err(e) => errors.push((id.clone(), part, e.to_string())),
            }
        }
    }
    BankBuild { bank: PartLatentBank { part_points: n, entries }, errors }
}

impl<T: Real> PartLatentBank<T> {
    pub fn for_part(&self, part: PartId) -> Vec<&BankEntry<T>> {
        self.entries.iter().filter(|e| e.part == part).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{AeConfig, AutoEncoder, TrunkConfig};
    use crate::synthgen::{generate_dataset, GenConfig, LegStyle};

    fn small_encoder() -> PointEncoder<f64> {
        let cfg = AeConfig { trunk: TrunkConfig { hidden: vec![16, 16], feat: 16 }, latent: 8, decoder_hidden: vec![8], input_points: 64, output_points: 8 };
        AutoEncoder::new(&cfg, LatentSpace::Part, 1).encoder
    }

    #[test]
    fn four_entries_per_object() {
        let ds = generate_dataset(&GenConfig { train_count: 10, heldout_count: 0, points: 256, ..Default::default() }).unwrap();
        let objs: Vec<usize> = (0..10).collect();
        let b = build_part_latent_bank(&ds, &objs, &small_encoder(), 0);
        assert!(b.errors.is_empty());
        assert_eq!(b.bank.entries.len(), 40);
        for e in &b.bank.entries {
            assert_eq!(e.latent.space, LatentSpace::Part);
            let none = ds.manifest.objects[e.object_index].attributes.contains("armrest/none");
            assert_eq!(e.empty, e.part == PartId::Armrest && none);
        }
    }

    #[test]
    fn identical_leg_specs_give_identical_latents() {
        let mut ds = generate_dataset(&GenConfig { train_count: 2, heldout_count: 0, points: 256, ..Default::default() }).unwrap();
        let mut spec = ds.manifest.objects[0].spec.clone();
        spec.leg_style = LegStyle::Swivel5;
        ds.manifest.objects[0].spec = spec.clone();
        ds.manifest.objects[1].spec = spec.clone();
        let c = crate::synthgen::realize_point_cloud(&spec, 256, 3).unwrap();
        ds.clouds = vec![c.clone(), c];
        let bank = build_part_latent_bank(&ds, &[0, 1], &small_encoder(), 0).bank;
        let legs = bank.for_part(PartId::Legs);
        assert_eq!(legs[0].latent.values, legs[1].latent.values);
    }
}
