use ndarray::Array2;

use crate::geometry::{PointCloud, SpatialIndex};
use crate::real::KahanSum;
use crate::{Error, Real, Result};

/// Chamfer distance and its gradient with respect to the predicted points,
/// holding nearest-neighbour matches fixed (lowest id on ties).
pub fn chamfer_loss_and_grad<T: Real>(pred: &PointCloud<T>, target: &PointCloud<T>) -> Result<(T, Array2<T>)> {
    if pred.is_empty() || target.is_empty() {
        return Err(Error::Precondition("chamfer loss needs non-empty clouds".into()));
    }
    let p = pred.points();
    let q = target.points();
    let ip = SpatialIndex::build(pred);
    let iq = SpatialIndex::build(target);
    let np = T::from_usize(p.len()).unwrap();
    let nq = T::from_usize(q.len()).unwrap();
    let two = T::lit(2.0);
    let mut grad = Array2::zeros((p.len(), 3));
    let mut fwd = KahanSum::new();
    for (i, pi) in p.iter().enumerate() {
        let (j, d) = iq.nearest(pi);
        fwd.add(d);
        for k in 0..3 {
            grad[[i, k]] = grad[[i, k]] + two * (pi[k] - q[j][k]) / np;
        }
    }
    let mut bwd = KahanSum::new();
    for qj in q {
        let (i, d) = ip.nearest(qj);
        bwd.add(d);
        for k in 0..3 {
            grad[[i, k]] = grad[[i, k]] + two * (p[i][k] - qj[k]) / nq;
        }
    }
    Ok((fwd.value() / np + bwd.value() / nq, grad))
}

/// Numerically stable binary cross-entropy on a logit; returns `(loss, d loss / d logit)`.
pub fn logistic_loss<T: Real>(logit: T, positive: bool) -> (T, T) {
    let y = if positive { T::one() } else { T::zero() };
    let loss = logit.max(T::zero()) - logit * y + (T::one() + (-logit.abs()).exp()).ln();
    (loss, sigmoid(logit) - y)
}

pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Softmax cross-entropy per row; returns the summed loss and `d loss / d logits`.
pub fn softmax_xent<T: Real>(logits: &Array2<T>, labels: &[u8]) -> (T, Array2<T>) {
    let mut grad = logits.clone();
    let mut loss = T::zero();
    for (mut row, &y) in grad.outer_iter_mut().zip(labels) {
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        row.mapv_inplace(|v| (v - m).exp());
        let z: T = row.iter().copied().sum();
        row.mapv_inplace(|v| v / z);
        loss = loss - row[y as usize].max(T::min_positive_value()).ln();
        row[y as usize] = row[y as usize] - T::one();
    }
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identical_clouds() {
        let c = PointCloud::new(vec![[0.0, 1.0, 2.0], [1.0, 1.0, 1.0]]).unwrap();
        let (l, g) = chamfer_loss_and_grad(&c, &c).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_pair() {
        let p = PointCloud::new(vec![[1.0, 0.0, 0.0]]).unwrap();
        let t = PointCloud::new(vec![[0.0, 0.0, 0.0]]).unwrap();
        let (l, g) = chamfer_loss_and_grad(&p, &t).unwrap();
        assert_eq!(l, 2.0);
        assert_eq!(g.row(0).to_vec(), vec![4.0, 0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut g = crate::rng::seeded(20);
        let mut cloud = |n| PointCloud::new((0..n).map(|_| [g.random_range(-1.0..1.0), g.random_range(-1.0..1.0), g.random_range(-1.0..1.0)]).collect()).unwrap();
        let pred = cloud(20);
        let target = cloud(20);
        let (_, grad) = chamfer_loss_and_grad(&pred, &target).unwrap();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..20 {
            for k in 0..3 {
                let mut plus = pred.points().to_vec();
                let mut minus = plus.clone();
                plus[i][k] += h;
                minus[i][k] -= h;
                let lp = crate::geometry::chamfer_distance(&PointCloud::new(plus).unwrap(), &target).unwrap();
                let lm = crate::geometry::chamfer_distance(&PointCloud::new(minus).unwrap(), &target).unwrap();
                let fd: f64 = (lp - lm) / (2.0 * h);
                let a: f64 = grad[[i, k]];
                worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-6));
            }
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn logistic_matches_definition() {
        let (l, d) = logistic_loss(0.0_f64, true);
        assert!((l - 2f64.ln()).abs() < 1e-15);
        assert!((d + 0.5).abs() < 1e-15);
        let (l, _) = logistic_loss(-800.0_f64, true);
        assert!((l - 800.0).abs() < 1e-9);
    }
}
