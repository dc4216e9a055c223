use super::layers::Params;
use crate::Real;

/// Denominator floor, as a fraction of the largest analytic gradient entry, so
/// parameters with near-zero gradient are judged against the gradient scale.
pub const RELATIVE_FLOOR: f64 = 1e-3;

/// Largest relative disagreement between `analytic` and central differences of `loss`.
///
/// The error for one parameter is `|a - f| / max(|a|, |f|, RELATIVE_FLOOR * max_j |a_j|)`.
pub fn finite_diff_check<T: Real, M: Params<T>>(model: &M, analytic: &M, loss: impl Fn(&M) -> T, h: f64) -> f64 {
    let grads = analytic.flatten();
    let scale = grads.iter().fold(0.0f64, |m, g| m.max(g.to_f64_lossy().abs()));
    let floor = (RELATIVE_FLOOR * scale).max(1e-300);
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (i, a) in grads.into_iter().enumerate() {
        let orig = *probe.param_mut(i).unwrap();
        *probe.param_mut(i).unwrap() = orig + T::lit(h);
        let up = loss(&probe).to_f64_lossy();
        *probe.param_mut(i).unwrap() = orig - T::lit(h);
        let down = loss(&probe).to_f64_lossy();
        *probe.param_mut(i).unwrap() = orig;
        let fd = (up - down) / (2.0 * h);
        let a = a.to_f64_lossy();
        let err = (a - fd).abs() / a.abs().max(fd.abs()).max(floor);
        worst = worst.max(err);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::autoencoder::{AeConfig, AutoEncoder};
    use crate::neural::classify::{ClsConfig, Classifier};
    use crate::neural::layers::Dense;
    use crate::neural::segment::{SegConfig, Segmenter};
    use crate::neural::trunk::TrunkConfig;
    use crate::neural::LatentSpace;
    use crate::synthgen::{realize_point_cloud, sample_spec, StyleWeights};
    use ndarray::array;

    #[derive(Clone)]
    struct Linear(Dense<f64>);

    impl Params<f64> for Linear {
        fn layers(&self) -> Vec<&Dense<f64>> {
            vec![&self.0]
        }
        fn layers_mut(&mut self) -> Vec<&mut Dense<f64>> {
            vec![&mut self.0]
        }
        fn layer_names(&self) -> Vec<String> {
            vec!["linear".into()]
        }
    }

    #[test]
    fn linear_layer_is_exact() {
        let net = Linear(Dense { w: array![[0.3, -0.2], [0.1, 0.7], [-0.5, 0.4]], b: array![0.05, -0.1] });
        let x = array![[1.0, 2.0, -1.0], [0.5, -0.3, 0.2]];
        let coef = array![[1.0, -2.0], [0.5, 3.0]];
        // Loss is linear in the parameters: sum(coef * (x w + b)).
        let loss = |m: &Linear| (m.0.forward(x.view()) * &coef).sum();
        let mut g = net.zeros_like();
        net.0.backward(x.view(), coef.view(), &mut g.0);
        assert!(finite_diff_check(&net, &g, loss, 1e-5) < 1e-8);
    }

    fn small_ae() -> (AutoEncoder<f64>, crate::geometry::PointCloud<f64>) {
        let cfg = AeConfig {
            trunk: TrunkConfig { hidden: vec![8, 16], feat: 16 },
            latent: 8,
            decoder_hidden: vec![16, 24],
            input_points: 32,
            output_points: 32,
        };
        let ae = AutoEncoder::new(&cfg, LatentSpace::Object, 9);
        let c = realize_point_cloud(&sample_spec(3, &StyleWeights::default()).unwrap(), 64, 1).unwrap();
        let c = crate::geometry::resample(&c, 32, 0).unwrap().unlabeled();
        (ae, c)
    }

    #[test]
    fn autoencoder_gradients() {
        let (ae, c) = small_ae();
        assert!(ae.param_count() <= 10_000);
        let (_, g) = ae.batch_loss_grad(&[&c], None).unwrap();
        let err = finite_diff_check(&ae, &g, |m| m.batch_loss_grad(&[&c], None).unwrap().0, 1e-5);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn error_shrinks_with_step() {
        let (ae, c) = small_ae();
        let (_, g) = ae.batch_loss_grad(&[&c], None).unwrap();
        let errs: Vec<f64> =
            [1e-2, 1e-3, 1e-4, 1e-5].iter().map(|&h| finite_diff_check(&ae, &g, |m| m.batch_loss_grad(&[&c], None).unwrap().0, h)).collect();
        // The loss is piecewise quadratic, so once no kink lies within the step
        // only rounding error (well below 1e-6) is left.
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "errors {errs:?}");
        }
        assert!(errs[0] > 100.0 * errs[3], "errors {errs:?}");
    }

    #[test]
    fn segmenter_gradients() {
        let seg = Segmenter::<f64>::new(&SegConfig { trunk: TrunkConfig { hidden: vec![6, 10], feat: 10 }, hidden: 8, parts: 4 }, 4);
        let c = realize_point_cloud(&sample_spec(5, &StyleWeights::default()).unwrap(), 64, 2).unwrap();
        let (_, g) = seg.batch_loss_grad(&[&c]).unwrap();
        let err = finite_diff_check(&seg, &g, |m| m.batch_loss_grad(&[&c]).unwrap().0, 1e-5);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn classifier_gradients() {
        let cls = Classifier::<f64>::new(&ClsConfig { trunk: TrunkConfig { hidden: vec![6, 10], feat: 10 } }, 5);
        // Inputs chosen so no pre-activation sits within the step of a kink.
        let a = realize_point_cloud(&sample_spec(16, &StyleWeights::default()).unwrap(), 64, 2).unwrap();
        let b = realize_point_cloud(&sample_spec(17, &StyleWeights::default()).unwrap(), 64, 2).unwrap();
        let batch = [(&a, true, 0.7), (&b, false, 1.3)];
        let (_, g) = cls.batch_loss_grad(&batch);
        let err = finite_diff_check(&cls, &g, |m| m.batch_loss_grad(&batch).0, 1e-5);
        assert!(err < 1e-4, "max relative error {err}");
    }
}
