use latnav_core::directions::{DirectionBank, Provenance, SemanticDirection};
use latnav_core::geometry::{chamfer_distance, farthest_point_indices, normalize_unit_sphere, PointCloud, SpatialIndex};
use latnav_core::navigation::{translate_latent, AlphaUnits, EditTerm};
use latnav_core::neural::{LatentCode, LatentSpace};
use latnav_core::semdiscovery::silhouette_score;
use proptest::prelude::*;

fn points(max: usize) -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(-10.0f64..10.0), 1..max)
}

fn brute_nearest(points: &[[f64; 3]], q: &[f64; 3]) -> f64 {
    points.iter().map(|p| (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>()).fold(f64::INFINITY, f64::min)
}

fn bank(normals: Vec<Vec<f64>>) -> DirectionBank {
    let dirs = normals
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
            SemanticDirection {
                id: format!("seat/s{i}"),
                part: None,
                semantic: format!("s{i}"),
                normal: v.iter().map(|x| x / n).collect(),
                bias: 0.0,
                train_acc: None,
                heldout_acc: None,
                dist_std: 0.5,
                provenance: Provenance::LatNav,
                eigenvalue: None,
            }
        })
        .collect();
    DirectionBank::new("object", "h", dirs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nearest_neighbour_is_exact(cloud in points(200), q in prop::array::uniform3(-12.0f64..12.0)) {
        let index = SpatialIndex::from_points(&cloud);
        let (i, d) = index.nearest(&q);
        prop_assert_eq!(d, brute_nearest(&cloud, &q));
        prop_assert_eq!(d, (0..3).map(|k| (cloud[i][k] - q[k]).powi(2)).sum::<f64>());
    }

    #[test]
    fn chamfer_is_a_symmetric_premetric(a in points(100), b in points(100)) {
        let (a, b) = (PointCloud::new(a).unwrap(), PointCloud::new(b).unwrap());
        let ab = chamfer_distance(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, chamfer_distance(&b, &a).unwrap());
        prop_assert_eq!(chamfer_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn single_precision_chamfer_tracks_double(a in points(50), b in points(50)) {
        let single = |p: &[[f64; 3]]| PointCloud::<f32>::new(p.iter().map(|x| x.map(|v| v as f32)).collect()).unwrap();
        let lo = chamfer_distance(&single(&a), &single(&b)).unwrap() as f64;
        let hi = chamfer_distance(&PointCloud::new(a).unwrap(), &PointCloud::new(b).unwrap()).unwrap();
        prop_assert!((lo - hi).abs() <= 1e-4 * hi.max(1.0));
    }

    #[test]
    fn farthest_point_indices_are_distinct(cloud in points(120), n in 1usize..40) {
        let idx = farthest_point_indices(&cloud, n);
        prop_assert_eq!(idx.len(), n.min(cloud.len()));
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), idx.len());
    }

    #[test]
    fn normalisation_fits_the_unit_sphere(cloud in prop::collection::vec(prop::array::uniform3(-10.0f64..10.0), 2..80)) {
        prop_assume!(cloud.iter().any(|p| p != &cloud[0]));
        let (unit, norm) = normalize_unit_sphere(&PointCloud::new(cloud.clone()).unwrap()).unwrap();
        let radius = unit.points().iter().map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
        prop_assert!((radius - 1.0).abs() < 1e-9);
        for (p, q) in norm.invert(&unit).points().iter().zip(&cloud) {
            for k in 0..3 {
                prop_assert!((p[k] - q[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn silhouette_is_bounded(pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 4..40), seed in 0usize..1000) {
        let labels: Vec<usize> = (0..pts.len()).map(|i| (i * 7 + seed) % 3).collect();
        prop_assume!(labels.iter().collect::<std::collections::BTreeSet<_>>().len() >= 2);
        let s = silhouette_score(&pts, &labels).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s));
    }

    #[test]
    fn translation_is_linear(
        normals in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 6), 2..4),
        z in prop::collection::vec(-3.0f64..3.0, 6),
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
    ) {
        let bank = bank(normals);
        let z = LatentCode::new(z, LatentSpace::Object);
        let t = |id: &str, alpha: f64| EditTerm::new(id, alpha, AlphaUnits::DistStd);
        let joint = translate_latent(&z, &[t("seat/s0", a), t("seat/s1", b)], &bank).unwrap();
        let chained = translate_latent(&translate_latent(&z, &[t("seat/s1", b)], &bank).unwrap(), &[t("seat/s0", a)], &bank).unwrap();
        for (x, y) in joint.values.iter().zip(&chained.values) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        let d = bank.get("seat/s0").unwrap();
        let moved = translate_latent(&z, &[t("seat/s0", a)], &bank).unwrap();
        let shift = d.signed_distance(&moved.values) - d.signed_distance(&z.values);
        prop_assert!((shift - a * d.dist_std).abs() <= 1e-12);
    }
}
