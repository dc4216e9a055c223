use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{rng, Real};

pub const LEAKY_SLOPE: f64 = 0.01;

#[inline]
pub fn leaky<T: Real>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        x * T::lit(LEAKY_SLOPE)
    }
}

/// Derivative of the leaky rectifier recovered from its output (the sign is preserved).
#[inline]
pub fn leaky_grad_from_output<T: Real>(y: T) -> T {
    if y > T::zero() {
        T::one()
    } else {
        T::lit(LEAKY_SLOPE)
    }
}

/// Fully connected layer computing `x · w + b` on row vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    /// `inputs x outputs`.
    pub w: Array2<T>,
    pub b: Array1<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { w: Array2::zeros((inputs, outputs)), b: Array1::zeros(outputs) }
    }

    /// Uniform fan-in scaled initialisation, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, zero bias.
    pub fn he_uniform(inputs: usize, outputs: usize, g: &mut rng::Rng) -> Self {
        let lim = (6.0 / inputs as f64).sqrt();
        let w = Array2::from_shape_simple_fn((inputs, outputs), || T::lit(g.random_range(-lim..lim)));
        Self { w, b: Array1::zeros(outputs) }
    }

    pub fn inputs(&self) -> usize {
        self.w.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.w.ncols()
    }

    pub fn forward(&self, x: ArrayView2<T>) -> Array2<T> {
        x.dot(&self.w) + &self.b
    }

    /// Accumulates parameter gradients for upstream `dy` into `grad`; returns `dx`.
    pub fn backward(&self, x: ArrayView2<T>, dy: ArrayView2<T>, grad: &mut Dense<T>) -> Array2<T> {
        self.accumulate(x, dy, grad);
        dy.dot(&self.w.t())
    }

    pub fn accumulate(&self, x: ArrayView2<T>, dy: ArrayView2<T>, grad: &mut Dense<T>) {
        ndarray::linalg::general_mat_mul(T::one(), &x.t(), &dy, T::one(), &mut grad.w);
        grad.b += &dy.sum_axis(Axis(0));
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.inputs(), self.outputs())
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

pub fn apply_leaky<T: Real>(mut z: Array2<T>) -> Array2<T> {
    z.mapv_inplace(leaky);
    z
}

/// Multiplies `dy` elementwise by the leaky derivative evaluated from the layer output `y`.
pub fn leaky_backward<T: Real>(y: ArrayView2<T>, mut dy: Array2<T>) -> Array2<T> {
    ndarray::Zip::from(&mut dy).and(&y).for_each(|d, &v| *d = *d * leaky_grad_from_output(v));
    dy
}

/// A model whose trainable state is an ordered list of dense layers.
///
/// Gradients and optimiser moments are stored in values of the same type,
/// so every update is a walk over matching layer lists.
pub trait Params<T: Real>: Clone {
    fn layers(&self) -> Vec<&Dense<T>>;
    fn layers_mut(&mut self) -> Vec<&mut Dense<T>>;
    /// Stable names of the layers, used in checkpoints.
    fn layer_names(&self) -> Vec<String>;

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for l in z.layers_mut() {
            l.w.fill(T::zero());
            l.b.fill(T::zero());
        }
        z
    }

    fn param_count(&self) -> usize {
        self.layers().iter().map(|l| l.param_count()).sum()
    }

    fn scale_grads(&mut self, s: T) {
        for l in self.layers_mut() {
            l.w.mapv_inplace(|x| x * s);
            l.b.mapv_inplace(|x| x * s);
        }
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.layers_mut().into_iter().zip(other.layers()) {
            a.w += &b.w;
            a.b += &b.b;
        }
    }

    fn all_finite(&self) -> bool {
        self.layers().iter().all(|l| l.w.iter().chain(l.b.iter()).all(|x| x.is_finite()))
    }

    /// Flat copy of every parameter in layer order (weights row-major, then bias).
    fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in self.layers() {
            out.extend(l.w.iter().copied());
            out.extend(l.b.iter().copied());
        }
        out
    }

    /// Mutable access to parameter `index` of the flattened order.
    fn param_mut(&mut self, mut index: usize) -> Option<&mut T> {
        for l in self.layers_mut() {
            if index < l.w.len() {
                return l.w.as_slice_mut().map(|s| &mut s[index]);
            }
            index -= l.w.len();
            if index < l.b.len() {
                return l.b.as_slice_mut().map(|s| &mut s[index]);
            }
            index -= l.b.len();
        }
        None
    }
}

/// Serializable layer-size description, shared by every network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub name: String,
    pub inputs: usize,
    pub outputs: usize,
}

pub fn shapes_of<T: Real, M: Params<T>>(m: &M) -> Vec<LayerShape> {
    m.layers()
        .iter()
        .zip(m.layer_names())
        .map(|(l, name)| LayerShape { name, inputs: l.inputs(), outputs: l.outputs() })
        .collect()
}
