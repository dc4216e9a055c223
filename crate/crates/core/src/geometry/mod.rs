//! Point-set mathematics: clouds, exact nearest-neighbour search, Chamfer
//! distance, resampling and canonicalisation.

mod chamfer;
pub mod io;
mod kdtree;
mod sampling;

pub use chamfer::{chamfer_distance, directed_chamfer, nearest_matches};
pub use kdtree::SpatialIndex;
pub use sampling::{farthest_point_indices, normalize_unit_sphere, resample, Normalization};

use crate::{Error, Real, Result};

pub type Point3<T> = [T; 3];

#[inline]
pub fn dist2<T: Real>(a: &Point3<T>, b: &Point3<T>) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// An ordered set of 3D points with optional per-point part labels.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud<T> {
    points: Vec<Point3<T>>,
    labels: Option<Vec<u8>>,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: Vec<Point3<T>>) -> Result<Self> {
        Self::build(points, None)
    }

    pub fn with_labels(points: Vec<Point3<T>>, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} labels", points.len()),
                got: format!("{} labels", labels.len()),
            });
        }
        Self::build(points, Some(labels))
    }

    fn build(points: Vec<Point3<T>>, labels: Option<Vec<u8>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Precondition("point cloud must contain at least one point".into()));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidInput(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<T>] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn into_parts(self) -> (Vec<Point3<T>>, Option<Vec<u8>>) {
        (self.points, self.labels)
    }

    /// Drops the labels.
    pub fn unlabeled(&self) -> Self {
        Self { points: self.points.clone(), labels: None }
    }

    /// Returns a copy carrying the given labels.
    pub fn relabeled(&self, labels: Vec<u8>) -> Result<Self> {
        Self::with_labels(self.points.clone(), labels)
    }

    /// Points whose label satisfies `keep`, or `None` if no point qualifies.
    pub fn select_labels(&self, labels: &[u8], keep: impl Fn(u8) -> bool) -> Option<Self> {
        let mut pts = Vec::new();
        let mut lab = Vec::new();
        for (p, &l) in self.points.iter().zip(labels) {
            if keep(l) {
                pts.push(*p);
                lab.push(l);
            }
        }
        if pts.is_empty() {
            None
        } else {
            Some(Self { points: pts, labels: Some(lab) })
        }
    }

    /// Subset of points carrying part label `part` (using the stored labels).
    pub fn part(&self, part: u8) -> Option<Self> {
        let labels = self.labels.as_ref()?;
        self.select_labels(labels, |l| l == part)
    }

    pub fn translated(&self, offset: Point3<T>) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| [p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]])
            .collect();
        Self { points, labels: self.labels.clone() }
    }

    /// Applies `p -> p * scale + offset`.
    pub fn affine(&self, scale: T, offset: Point3<T>) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| {
                [p[0] * scale + offset[0], p[1] * scale + offset[1], p[2] * scale + offset[2]]
            })
            .collect();
        Self { points, labels: self.labels.clone() }
    }

    pub fn centroid(&self) -> Point3<T> {
        let mut acc = [crate::real::KahanSum::new(); 3];
        for p in &self.points {
            for k in 0..3 {
                acc[k].add(p[k]);
            }
        }
        let n = T::from_usize(self.points.len()).unwrap();
        [acc[0].value() / n, acc[1].value() / n, acc[2].value() / n]
    }

    pub fn max_radius(&self) -> T {
        self.points
            .iter()
            .map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt())
            .fold(T::zero(), T::max)
    }

    /// Whether the cloud is centred on the origin and fits the unit sphere.
    pub fn is_normalized(&self, tol: T) -> bool {
        let c = self.centroid();
        let r = self.max_radius();
        (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt() <= tol && r > T::zero() && r <= T::one() + tol
    }

    /// Concatenates clouds; labels are kept only if every input has them.
    pub fn concat(parts: &[Self]) -> Result<Self> {
        let mut points = Vec::new();
        let mut labels = Some(Vec::new());
        for c in parts {
            points.extend_from_slice(&c.points);
            match (&mut labels, &c.labels) {
                (Some(acc), Some(l)) => acc.extend_from_slice(l),
                _ => labels = None,
            }
        }
        Self::build(points, labels)
    }

    /// Reorders points (and labels) by `perm[i]` = source index of output point `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let points = perm.iter().map(|&i| self.points[i]).collect();
        let labels = self.labels.as_ref().map(|l| perm.iter().map(|&i| l[i]).collect());
        Self { points, labels }
    }

    pub fn cast<U: Real>(&self) -> PointCloud<U> {
        let points = self
            .points
            .iter()
            .map(|p| [U::lit(p[0].to_f64_lossy()), U::lit(p[1].to_f64_lossy()), U::lit(p[2].to_f64_lossy())])
            .collect();
        PointCloud { points, labels: self.labels.clone() }
    }

    /// Row-major `N x 3` coordinates.
    pub fn to_flat(&self) -> Vec<T> {
        self.points.iter().flat_map(|p| p.iter().copied()).collect()
    }

    pub fn from_flat(flat: &[T]) -> Result<Self> {
        if flat.len() % 3 != 0 {
            return Err(Error::InvalidInput(format!("flat coordinate length {} is not a multiple of 3", flat.len())));
        }
        Self::new(flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
    }
}
