use rand_distr::{Distribution, Normal};

use super::{dist2, Point3, PointCloud};
use crate::{rng, Error, Real, Result};

/// Standard deviation of the jitter added to duplicated points when up-sampling.
pub const UPSAMPLE_JITTER: f64 = 0.005;

/// Farthest-point sampling order starting from point 0; ties pick the lowest id.
pub fn farthest_point_indices<T: Real>(points: &[Point3<T>], n: usize) -> Vec<usize> {
    let n = n.min(points.len());
    if n == 0 {
        return Vec::new();
    }
    let mut chosen = Vec::with_capacity(n);
    let mut min_d = vec![T::infinity(); points.len()];
    let mut current = 0;
    for _ in 0..n {
        chosen.push(current);
        min_d[current] = T::neg_infinity();
        let c = points[current];
        let mut next = 0;
        let mut far = T::neg_infinity();
        for (i, p) in points.iter().enumerate() {
            let d = dist2(p, &c);
            if d < min_d[i] {
                min_d[i] = d;
            }
            if min_d[i] > far {
                far = min_d[i];
                next = i;
            }
        }
        current = next;
    }
    chosen
}

/// Resamples to exactly `n` points.
///
/// Down-sampling (and `n == len`) keeps the farthest-point selection in
/// selection order. Up-sampling keeps every original point and appends
/// jittered copies of seeded random sources, which inherit their labels.
pub fn resample<T: Real>(cloud: &PointCloud<T>, n: usize, seed: u64) -> Result<PointCloud<T>> {
    if n == 0 {
        return Err(Error::InvalidInput("resample target size must be positive".into()));
    }
    if n <= cloud.len() {
        return Ok(cloud.permuted(&farthest_point_indices(cloud.points(), n)));
    }
    let mut r = rng::seeded(seed);
    let normal = Normal::new(0.0, UPSAMPLE_JITTER).unwrap();
    let src = cloud.points();
    let mut points = src.to_vec();
    let mut labels = cloud.labels().map(|l| l.to_vec());
    let dist = rand::distr::Uniform::new(0, src.len()).unwrap();
    while points.len() < n {
        let i = dist.sample(&mut r);
        let p = src[i];
        let j = |x: T, r: &mut rng::Rng| x + T::lit(normal.sample(r));
        let q = [j(p[0], &mut r), j(p[1], &mut r), j(p[2], &mut r)];
        points.push(q);
        if let (Some(l), Some(orig)) = (labels.as_mut(), cloud.labels()) {
            l.push(orig[i]);
        }
    }
    match labels {
        Some(l) => PointCloud::with_labels(points, l),
        None => PointCloud::new(points),
    }
}

/// Transform applied by [`normalize_unit_sphere`]: `out = (in - centroid) / scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normalization<T> {
    pub centroid: Point3<T>,
    pub scale: T,
}

impl<T: Real> Normalization<T> {
    /// Maps a normalised cloud back into the original frame.
    pub fn invert(&self, cloud: &PointCloud<T>) -> PointCloud<T> {
        cloud.affine(self.scale, self.centroid)
    }
}

/// Centres a cloud on its centroid and scales it into the unit sphere.
pub fn normalize_unit_sphere<T: Real>(cloud: &PointCloud<T>) -> Result<(PointCloud<T>, Normalization<T>)> {
    let c = cloud.centroid();
    let centred = cloud.translated([-c[0], -c[1], -c[2]]);
    let scale = centred.max_radius();
    if !(scale > T::lit(1e-12)) {
        return Err(Error::Degenerate("cannot normalise a cloud whose points are all identical".into()));
    }
    let out = centred.affine(T::one() / scale, [T::zero(); 3]);
    Ok((out, Normalization { centroid: c, scale }))
}
