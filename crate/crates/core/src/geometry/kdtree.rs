use super::{dist2, Point3, PointCloud};
use crate::Real;

/// Balanced 3-d tree over a cloud's points for exact nearest-neighbour queries.
///
/// Nodes live implicitly in a permuted point array: the node for a range
/// `[lo, hi)` is its midpoint, split on the axis of largest extent.
#[derive(Clone, Debug)]
pub struct SpatialIndex<T> {
    points: Vec<Point3<T>>,
    ids: Vec<u32>,
    axes: Vec<u8>,
}

impl<T: Real> SpatialIndex<T> {
    pub fn build(cloud: &PointCloud<T>) -> Self {
        Self::from_points(cloud.points())
    }

    pub fn from_points(points: &[Point3<T>]) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut axes = vec![0u8; points.len()];
        build(points, &mut order, 0, &mut axes);
        let pts = order.iter().map(|&i| points[i as usize]).collect();
        Self { points: pts, ids: order, axes }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Exact nearest stored point as `(id, squared distance)`; ties go to the lowest id.
    ///
    /// Panics on an empty index.
    pub fn nearest(&self, query: &Point3<T>) -> (usize, T) {
        assert!(!self.points.is_empty(), "nearest-neighbour query on an empty index");
        let mut best = (u32::MAX, T::infinity());
        self.search(0, self.points.len(), query, &mut best);
        (best.0 as usize, best.1)
    }

    fn search(&self, lo: usize, hi: usize, q: &Point3<T>, best: &mut (u32, T)) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let p = &self.points[mid];
        let d = dist2(p, q);
        let id = self.ids[mid];
        if d < best.1 || (d == best.1 && id < best.0) {
            *best = (id, d);
        }
        if hi - lo == 1 {
            return;
        }
        let axis = self.axes[mid] as usize;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < T::zero() { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.search(near.0, near.1, q, best);
        // `<=` keeps equal-distance candidates reachable for the id tie-break.
        if diff * diff <= best.1 {
            self.search(far.0, far.1, q, best);
        }
    }
}

fn build<T: Real>(points: &[Point3<T>], order: &mut [u32], offset: usize, axes: &mut [u8]) {
    if order.len() <= 1 {
        return;
    }
    let mut lo = [T::infinity(); 3];
    let mut hi = [T::neg_infinity(); 3];
    for &i in order.iter() {
        let p = &points[i as usize];
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let axis = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).partial_cmp(&(hi[b] - lo[b])).unwrap().then(b.cmp(&a)))
        .unwrap();
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis]
            .partial_cmp(&points[b as usize][axis])
            .unwrap()
            .then(a.cmp(&b))
    });
    axes[offset + mid] = axis as u8;
    let (left, right) = order.split_at_mut(mid);
    build(points, left, offset, axes);
    build(points, &mut right[1..], offset + mid + 1, axes);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn linear_scan(points: &[Point3<f64>], q: &Point3<f64>) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d = dist2(p, q);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    #[test]
    fn single_point_index() {
        let idx = SpatialIndex::from_points(&[[0.0, 0.0, 0.0]]);
        assert_eq!(idx.nearest(&[5.0, 0.0, 0.0]), (0, 25.0));
    }

    #[test]
    fn query_on_stored_point() {
        let pts = vec![[0.0, 0.0, 0.0], [1.0, 2.0, 3.0], [-1.0, 0.5, 0.0]];
        let idx = SpatialIndex::from_points(&pts);
        assert_eq!(idx.nearest(&[1.0, 2.0, 3.0]), (1, 0.0));
    }

    #[test]
    fn ties_resolve_to_lowest_id() {
        let pts = vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]];
        let idx = SpatialIndex::from_points(&pts);
        assert_eq!(idx.nearest(&[0.0, 0.0, 0.0]).0, 0);
        assert_eq!(idx.nearest(&[1.0, 0.0, 0.0]).0, 0);
    }

    #[test]
    fn matches_linear_scan() {
        let mut rng = crate::rng::seeded(11);
        let pts: Vec<Point3<f64>> =
            (0..200).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let idx = SpatialIndex::from_points(&pts);
        for _ in 0..50 {
            let q = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
            assert_eq!(idx.nearest(&q), linear_scan(&pts, &q));
        }
    }

    #[test]
    fn matches_linear_scan_on_lattice_with_ties() {
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..4 {
                    pts.push([i as f64, j as f64, k as f64]);
                }
            }
        }
        let idx = SpatialIndex::from_points(&pts);
        for i in 0..9 {
            for j in 0..9 {
                let q = [i as f64 * 0.5, j as f64 * 0.5, 1.5];
                assert_eq!(idx.nearest(&q), linear_scan(&pts, &q), "query {q:?}");
            }
        }
    }
}
