use serde::{Deserialize, Serialize};

use super::probes::{EditBatch, PartLabeler, ProbeSet};
use crate::directions::SemanticDirection;
use crate::geometry::{chamfer_distance, PointCloud};
use crate::neural::PointDecoder;
use crate::synthgen::PartId;
use crate::{Error, Result};

/// Denominators below this are reported instead of divided by.
pub const DENOMINATOR_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SlsOutcome {
    Value(f64),
    /// The complement did not change; `numerator` is the part's change.
    ZeroDenominator { numerator: f64 },
}

fn split(cloud: &PointCloud<f64>, labels: &[u8], part: PartId) -> (Option<PointCloud<f64>>, Option<PointCloud<f64>>) {
    let inside: Vec<[f64; 3]> = cloud.points().iter().zip(labels).filter(|(_, &l)| l == part.label()).map(|(p, _)| *p).collect();
    let outside: Vec<[f64; 3]> = cloud.points().iter().zip(labels).filter(|(_, &l)| l != part.label()).map(|(p, _)| *p).collect();
    (PointCloud::new(inside).ok(), PointCloud::new(outside).ok())
}

/// Chamfer change of part `part` divided by the Chamfer change of the rest,
/// with labels supplied for both clouds.
pub fn sls_from_labels(original: &PointCloud<f64>, original_labels: &[u8], edited: &PointCloud<f64>, edited_labels: &[u8], part: PartId) -> Result<SlsOutcome> {
    if original_labels.len() != original.len() || edited_labels.len() != edited.len() {
        return Err(Error::ShapeMismatch { expected: "one label per point".into(), got: "label count differs".into() });
    }
    let (oa, oc) = split(original, original_labels, part);
    let (ea, ec) = split(edited, edited_labels, part);
    let missing = |x: &Option<PointCloud<f64>>, which: &'static str, what: String| x.is_none().then_some(Error::NoPartPoints { part: what, which });
    let err = missing(&oa, "original", part.to_string())
        .or_else(|| missing(&ea, "edited", part.to_string()))
        .or_else(|| missing(&oc, "original", format!("complement of {part}")))
        .or_else(|| missing(&ec, "edited", format!("complement of {part}")));
    if let Some(e) = err {
        return Err(e);
    }
    let (oa, oc, ea, ec) = (oa.unwrap(), oc.unwrap(), ea.unwrap(), ec.unwrap());
    let numerator = chamfer_distance(&oa, &ea)?;
    let denominator = chamfer_distance(&oc, &ec)?;
    Ok(if denominator < DENOMINATOR_FLOOR { SlsOutcome::ZeroDenominator { numerator } } else { SlsOutcome::Value(numerator / denominator) })
}

/// Semantic localisation of one edit, segmenting both clouds with `labeler`.
pub fn sls_single(original: &PointCloud<f64>, edited: &PointCloud<f64>, part: PartId, labeler: &dyn PartLabeler) -> Result<SlsOutcome> {
    let lo = labeler.part_labels(original)?;
    let le = labeler.part_labels(edited)?;
    sls_from_labels(original, &lo, edited, &le, part)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Excluded {
    pub object_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlsReport {
    pub direction_id: String,
    pub part: PartId,
    /// Translation length in latent units.
    pub alpha: f64,
    pub values: Vec<f64>,
    /// Mean over `values`; `None` when every sample was excluded.
    pub mean: Option<f64>,
    pub count: usize,
    pub excluded: Vec<Excluded>,
    pub segmenter: String,
}

/// Mean SLS of `part` over `n_samples` seeded probe draws edited by `alpha`
/// (latent units) along `direction`.
#[allow(clippy::too_many_arguments)]
pub fn sls_expectation(
    probes: &ProbeSet,
    direction: &SemanticDirection,
    part: PartId,
    alpha: f64,
    n_samples: usize,
    seed: u64,
    decoder: &PointDecoder<f64>,
    labeler: &dyn PartLabeler,
    segmenter_id: &str,
) -> Result<SlsReport> {
    let batch = EditBatch::build(probes, direction, alpha, n_samples, seed, decoder, labeler)?;
    sls_report(probes, &batch, part, segmenter_id)
}

/// SLS of `part` over an already edited batch.
pub fn sls_report(probes: &ProbeSet, batch: &EditBatch, part: PartId, segmenter_id: &str) -> Result<SlsReport> {
    let mut values = Vec::new();
    let mut excluded = Vec::new();
    for ((&i, edited), labels) in batch.draws.iter().zip(&batch.clouds).zip(&batch.labels) {
        match sls_from_labels(&probes.decoded[i], &probes.labels[i], edited, labels, part) {
            Ok(SlsOutcome::Value(v)) => values.push(v),
            Ok(SlsOutcome::ZeroDenominator { numerator }) => {
                excluded.push(Excluded { object_id: probes.ids[i].clone(), reason: format!("zero denominator, numerator {numerator}") })
            }
            Err(e @ Error::NoPartPoints { .. }) => excluded.push(Excluded { object_id: probes.ids[i].clone(), reason: e.to_string() }),
            Err(e) => return Err(e),
        }
    }
    let mean = (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
    Ok(SlsReport {
        direction_id: batch.direction_id.clone(),
        part,
        alpha: batch.alpha,
        count: values.len(),
        values,
        mean,
        excluded,
        segmenter: segmenter_id.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::GroundTruth;
    use crate::synthgen::{realize_point_cloud, sample_spec, StyleWeights};

    fn chair() -> PointCloud<f64> {
        realize_point_cloud(&sample_spec(5, &StyleWeights::default()).unwrap(), 256, 1).unwrap()
    }

    fn shift(cloud: &PointCloud<f64>, moves: &[(PartId, f64)]) -> PointCloud<f64> {
        let labels = cloud.labels().unwrap();
        let pts = cloud
            .points()
            .iter()
            .zip(labels)
            .map(|(p, l)| {
                let dx = moves.iter().find(|m| m.0.label() == *l).map_or(0.0, |m| m.1);
                [p[0] + dx, p[1], p[2]]
            })
            .collect();
        PointCloud::with_labels(pts, labels.to_vec()).unwrap()
    }

    fn brute(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
        let dir = |x: &[[f64; 3]], y: &[[f64; 3]]| {
            x.iter().map(|p| y.iter().map(|q| (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>()).fold(f64::INFINITY, f64::min)).sum::<f64>() / x.len() as f64
        };
        dir(a, b) + dir(b, a)
    }

    fn subset(c: &PointCloud<f64>, keep: impl Fn(u8) -> bool) -> Vec<[f64; 3]> {
        c.points().iter().zip(c.labels().unwrap()).filter(|(_, l)| keep(**l)).map(|(p, _)| *p).collect()
    }

    #[test]
    fn identical_clouds_have_zero_denominator() {
        let c = chair();
        assert_eq!(sls_single(&c, &c, PartId::Legs, &GroundTruth).unwrap(), SlsOutcome::ZeroDenominator { numerator: 0.0 });
    }

    #[test]
    fn rigid_part_shift_has_zero_denominator() {
        let c = chair();
        let e = shift(&c, &[(PartId::Legs, 0.1)]);
        let SlsOutcome::ZeroDenominator { numerator } = sls_single(&c, &e, PartId::Legs, &GroundTruth).unwrap() else {
            panic!("expected a zero denominator")
        };
        let legs = PartId::Legs.label();
        assert!((numerator - brute(&subset(&c, |l| l == legs), &subset(&e, |l| l == legs))).abs() < 1e-12);
        assert!(numerator > 0.0 && numerator <= 0.02 + 1e-12);
    }

    #[test]
    fn matches_brute_force_oracle() {
        let c = chair();
        let e = shift(&c, &[(PartId::Legs, 0.1), (PartId::Seat, 0.01)]);
        let legs = PartId::Legs.label();
        let expected = brute(&subset(&c, |l| l == legs), &subset(&e, |l| l == legs)) / brute(&subset(&c, |l| l != legs), &subset(&e, |l| l != legs));
        let SlsOutcome::Value(v) = sls_single(&c, &e, PartId::Legs, &GroundTruth).unwrap() else { panic!("expected a value") };
        assert!((v - expected).abs() < 1e-9 * expected, "{v} vs {expected}");
        assert!(v > 1.0);
    }

    #[test]
    fn invariant_to_rigid_translation() {
        let c = chair();
        let e = shift(&c, &[(PartId::Legs, 0.1), (PartId::Seat, 0.01)]);
        let SlsOutcome::Value(a) = sls_single(&c, &e, PartId::Legs, &GroundTruth).unwrap() else { panic!() };
        let SlsOutcome::Value(b) = sls_single(&c.translated([0.3, -0.2, 0.7]), &e.translated([0.3, -0.2, 0.7]), PartId::Legs, &GroundTruth).unwrap() else {
            panic!()
        };
        assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn missing_part_is_reported() {
        let c = chair();
        let no_arms = realize_point_cloud(&{
            let mut s = sample_spec(5, &StyleWeights::default()).unwrap();
            s.armrest_style = crate::synthgen::ArmrestStyle::None;
            s
        }, 256, 1)
        .unwrap();
        assert!(matches!(sls_single(&no_arms, &c, PartId::Armrest, &GroundTruth), Err(Error::NoPartPoints { which: "original", .. })));
    }
}
