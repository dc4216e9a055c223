use super::{PointCloud, SpatialIndex};
use crate::real::KahanSum;
use crate::{Error, Real, Result};

/// For each point of `from`, the id of and squared distance to its nearest point in `to`.
pub fn nearest_matches<T: Real>(from: &PointCloud<T>, to: &SpatialIndex<T>) -> Vec<(usize, T)> {
    from.points().iter().map(|p| to.nearest(p)).collect()
}

/// Mean squared nearest-neighbour distance from `from` to `to`.
pub fn directed_chamfer<T: Real>(from: &PointCloud<T>, to: &SpatialIndex<T>) -> T {
    let acc: KahanSum<T> = from.points().iter().map(|p| to.nearest(p).1).collect();
    acc.value() / T::from_usize(from.len()).unwrap()
}

/// Symmetric Chamfer distance: the sum of both directed mean-of-squared-minimum terms.
pub fn chamfer_distance<T: Real>(a: &PointCloud<T>, b: &PointCloud<T>) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("chamfer distance needs two non-empty clouds".into()));
    }
    let ia = SpatialIndex::build(a);
    let ib = SpatialIndex::build(b);
    Ok(directed_chamfer(a, &ib) + directed_chamfer(b, &ia))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::dist2;
    use rand::Rng;

    fn brute(a: &PointCloud<f64>, b: &PointCloud<f64>) -> f64 {
        let dir = |x: &PointCloud<f64>, y: &PointCloud<f64>| {
            let mut s = 0.0;
            for p in x.points() {
                let mut m = f64::INFINITY;
                for q in y.points() {
                    m = m.min(dist2(p, q));
                }
                s += m;
            }
            s / x.len() as f64
        };
        dir(a, b) + dir(b, a)
    }

    fn random_cloud(rng: &mut crate::rng::Rng, n: usize) -> PointCloud<f64> {
        PointCloud::new((0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect()).unwrap()
    }

    #[test]
    fn identity_is_zero() {
        let mut rng = crate::rng::seeded(1);
        let p = random_cloud(&mut rng, 40);
        assert_eq!(chamfer_distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn unit_pair() {
        let a = PointCloud::new(vec![[0.0, 0.0, 0.0]]).unwrap();
        let b = PointCloud::new(vec![[1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(chamfer_distance(&a, &b).unwrap(), 2.0);
    }

    #[test]
    fn matches_brute_force_and_is_symmetric() {
        let mut rng = crate::rng::seeded(50);
        let a = random_cloud(&mut rng, 50);
        let b = random_cloud(&mut rng, 50);
        let cd = chamfer_distance(&a, &b).unwrap();
        assert!((cd - brute(&a, &b)).abs() <= 1e-12 * cd.max(1.0));
        assert_eq!(cd, chamfer_distance(&b, &a).unwrap());
    }

    #[test]
    fn single_precision_path() {
        let a = PointCloud::<f32>::new(vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let b = PointCloud::<f32>::new(vec![[1.0, 0.0, 0.0]]).unwrap();
        assert!((chamfer_distance(&a, &b).unwrap() - 2.5).abs() < 1e-6);
    }
}
