//! Dense networks with optional binary weight masks, trained with Adam on a
//! clamped binary cross-entropy.

mod checkpoint;
mod made;
mod mnd;
mod train;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, read_header, save_checkpoint, write_checkpoint,
    CheckpointHeader, Checkpointable,
    LoadedModel, ModelKind, TensorEntry, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use made::{build_masks, MadeConfig, MadeMasks, MadeNetwork};
pub use mnd::{MndConfig, MndNetwork};
pub use train::{train, LossCurve, TrainConfig, Trainable};

use std::fmt::{Debug, Display};

use ndarray::{Array1, Array2, ArrayView2, Axis, LinalgScalar, ScalarOperand, Zip};
use num_traits::{Float, NumAssign};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Probabilities are clamped to `[EPS_CLIP, 1 - EPS_CLIP]` inside the loss.
pub const EPS_CLIP: f64 = 1e-7;

/// Floating-point element type of a network.
pub trait Scalar:
    Float + NumAssign + LinalgScalar + ScalarOperand + Send + Sync + Debug + Display + Default + 'static
{
    const DTYPE: &'static str;
    const BYTES: usize;
    fn c(v: f64) -> Self;
    fn f(self) -> f64;
    fn put_le(self, out: &mut Vec<u8>);
    fn get_le(bytes: &[u8]) -> Self;
}

impl Scalar for f64 {
    const DTYPE: &'static str = "f64";
    const BYTES: usize = 8;
    #[inline]
    fn c(v: f64) -> Self {
        v
    }
    #[inline]
    fn f(self) -> f64 {
        self
    }
    fn put_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn get_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
}

impl Scalar for f32 {
    const DTYPE: &'static str = "f32";
    const BYTES: usize = 4;
    #[inline]
    fn c(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn f(self) -> f64 {
        self as f64
    }
    fn put_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn get_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    Double,
    Single,
}

impl Precision {
    pub fn dtype(self) -> &'static str {
        match self {
            Precision::Double => "f64",
            Precision::Single => "f32",
        }
    }
}

/// `sigmoid(x)` without overflow for large `|x|`.
#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Affine map `y = W x + b` with `W` stored `out x in`. Masked entries of
/// `weight` are zero and receive zero gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
    pub mask: Option<Array2<T>>,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(n_in: usize, n_out: usize, mask: Option<Array2<T>>) -> Self {
        if let Some(m) = &mask {
            assert_eq!(m.dim(), (n_out, n_in), "mask shape");
        }
        Self {
            weight: Array2::zeros((n_out, n_in)),
            bias: Array1::zeros(n_out),
            mask,
        }
    }

    /// Uniform `(-1/sqrt(fan_in), 1/sqrt(fan_in))` weights, zero biases.
    pub fn init<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let fan_in = self.weight.ncols().max(1) as f64;
        let bound = 1.0 / fan_in.sqrt();
        self.weight
            .mapv_inplace(|_| T::c(rng.random_range(-bound..bound)));
        self.bias.fill(T::zero());
        self.apply_mask();
    }

    pub fn apply_mask(&mut self) {
        if let Some(m) = &self.mask {
            self.weight *= m;
        }
    }

    pub fn n_in(&self) -> usize {
        self.weight.ncols()
    }

    pub fn n_out(&self) -> usize {
        self.weight.nrows()
    }

    /// `x W^T + b` for a batch `x` of shape `batch x in`.
    pub fn forward(&self, x: ArrayView2<T>) -> Array2<T> {
        let mut y = x.dot(&self.weight.t());
        y += &self.bias;
        y
    }

    /// Trainable entries: unmasked weights plus biases.
    pub fn num_parameters(&self) -> usize {
        let w = match &self.mask {
            Some(m) => m.iter().filter(|&&v| v != T::zero()).count(),
            None => self.weight.len(),
        };
        w + self.bias.len()
    }
}

/// Gradients, shaped like the layers.
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub weight: Vec<Array2<T>>,
    pub bias: Vec<Array1<T>>,
}

/// ReLU hidden layers, linear output producing logits.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<T> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> Mlp<T> {
    pub fn n_in(&self) -> usize {
        self.layers[0].n_in()
    }

    pub fn n_out(&self) -> usize {
        self.layers.last().expect("non-empty").n_out()
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(Layer::num_parameters).sum()
    }

    /// Activations of the last hidden layer.
    pub fn hidden(&self, x: ArrayView2<T>) -> Array2<T> {
        let mut a = x.to_owned();
        for layer in &self.layers[..self.layers.len() - 1] {
            a = layer.forward(a.view());
            a.mapv_inplace(relu);
        }
        a
    }

    pub fn logits(&self, x: ArrayView2<T>) -> Array2<T> {
        let h = self.hidden(x);
        self.layers.last().expect("non-empty").forward(h.view())
    }

    pub fn probabilities(&self, x: ArrayView2<T>) -> Array2<T> {
        self.logits(x).mapv(sigmoid)
    }

    /// Logit of output `i` only, from last-hidden activations.
    pub fn output_logit(&self, hidden: ArrayView2<T>, i: usize) -> Array1<T> {
        let out = self.layers.last().expect("non-empty");
        let mut z = hidden.dot(&out.weight.row(i));
        z += out.bias[i];
        z
    }

    /// Mean over the batch of the summed clamped BCE between
    /// `sigmoid(logits(x))` and `y`.
    pub fn loss(&self, x: ArrayView2<T>, y: ArrayView2<T>) -> f64 {
        let p = self.probabilities(x);
        bce(p.view(), y)
    }

    /// Loss and exact gradients (masked entries zero).
    pub fn loss_and_grad(&self, x: ArrayView2<T>, y: ArrayView2<T>) -> (f64, Gradients<T>) {
        let batch = x.nrows();
        assert_eq!(y.nrows(), batch, "target batch size");
        assert_eq!(y.ncols(), self.n_out(), "target width");
        let nl = self.layers.len();
        // acts[l] is the input to layer l
        let mut acts: Vec<Array2<T>> = Vec::with_capacity(nl);
        acts.push(x.to_owned());
        for layer in &self.layers[..nl - 1] {
            let mut a = layer.forward(acts.last().expect("pushed").view());
            a.mapv_inplace(relu);
            acts.push(a);
        }
        let logits = self.layers[nl - 1].forward(acts[nl - 1].view());
        let p = logits.mapv(sigmoid);
        let loss = bce(p.view(), y);

        let eps = T::c(EPS_CLIP);
        let inv_b = T::one() / T::c(batch as f64);
        let mut delta = Array2::zeros(p.dim());
        Zip::from(&mut delta)
            .and(&p)
            .and(y)
            .for_each(|d, &pi, &yi| {
                // the clamp has zero derivative where it is active
                *d = if pi < eps || pi > T::one() - eps {
                    T::zero()
                } else {
                    (pi - yi) * inv_b
                };
            });

        let mut gw = vec![Array2::zeros((0, 0)); nl];
        let mut gb = vec![Array1::zeros(0); nl];
        for l in (0..nl).rev() {
            let layer = &self.layers[l];
            let mut dw = delta.t().dot(&acts[l]);
            if let Some(m) = &layer.mask {
                dw *= m;
            }
            gw[l] = dw;
            gb[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut prev = delta.dot(&layer.weight);
                Zip::from(&mut prev).and(&acts[l]).for_each(|d, &a| {
                    if a <= T::zero() {
                        *d = T::zero();
                    }
                });
                delta = prev;
            }
        }
        (loss, Gradients { weight: gw, bias: gb })
    }
}

#[inline]
fn relu<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

/// Clamped binary cross-entropy, summed over columns, averaged over rows.
pub fn bce<T: Scalar>(p: ArrayView2<T>, y: ArrayView2<T>) -> f64 {
    let mut total = 0.0;
    Zip::from(p).and(y).for_each(|&pi, &yi| {
        let pi = pi.f().clamp(EPS_CLIP, 1.0 - EPS_CLIP);
        let yi = yi.f();
        total -= yi * pi.ln() + (1.0 - yi) * (1.0 - pi).ln();
    });
    total / p.nrows().max(1) as f64
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m_w: Vec<Array2<T>>,
    v_w: Vec<Array2<T>>,
    m_b: Vec<Array1<T>>,
    v_b: Vec<Array1<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(net: &Mlp<T>) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m_w: net.layers.iter().map(|l| Array2::zeros(l.weight.dim())).collect(),
            v_w: net.layers.iter().map(|l| Array2::zeros(l.weight.dim())).collect(),
            m_b: net.layers.iter().map(|l| Array1::zeros(l.bias.dim())).collect(),
            v_b: net.layers.iter().map(|l| Array1::zeros(l.bias.dim())).collect(),
        }
    }

    pub fn step(&mut self, net: &mut Mlp<T>, grads: &Gradients<T>, lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let b1 = T::c(self.beta1);
        let b2 = T::c(self.beta2);
        let c1 = T::c(1.0 - self.beta1);
        let c2 = T::c(1.0 - self.beta2);
        let corr1 = T::c(1.0 / (1.0 - self.beta1.powi(t)));
        let corr2 = T::c(1.0 / (1.0 - self.beta2.powi(t)));
        let lr = T::c(lr);
        let eps = T::c(self.eps);
        let update = |w: &mut T, m: &mut T, v: &mut T, g: T| {
            *m = b1 * *m + c1 * g;
            *v = b2 * *v + c2 * g * g;
            let mh = *m * corr1;
            let vh = *v * corr2;
            *w -= lr * mh / (vh.sqrt() + eps);
        };
        for (l, layer) in net.layers.iter_mut().enumerate() {
            Zip::from(&mut layer.weight)
                .and(&mut self.m_w[l])
                .and(&mut self.v_w[l])
                .and(&grads.weight[l])
                .for_each(|w, m, v, &g| update(w, m, v, g));
            Zip::from(&mut layer.bias)
                .and(&mut self.m_b[l])
                .and(&mut self.v_b[l])
                .and(&grads.bias[l])
                .for_each(|w, m, v, &g| update(w, m, v, g));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Purpose};
    use ndarray::array;

    fn small_net() -> Mlp<f64> {
        let mut rng = stream_rng(1, Purpose::Init, 0);
        let mut layers = vec![Layer::zeros(3, 5, None), Layer::zeros(5, 2, None)];
        for l in &mut layers {
            l.init(&mut rng);
        }
        Mlp { layers }
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!(sigmoid(-800.0f64) >= 0.0);
        assert_eq!(sigmoid(800.0f64), 1.0);
        assert!((sigmoid(2.0f64) - 1.0 / (1.0 + (-2.0f64).exp())).abs() < 1e-16);
    }

    #[test]
    fn adam_first_step_is_signed_lr() {
        let mut net = small_net();
        let before = net.clone();
        let mut adam = AdamState::new(&net);
        let grads = Gradients {
            weight: net.layers.iter().map(|l| l.weight.mapv(|_| 0.3)).collect(),
            bias: net.layers.iter().map(|l| l.bias.mapv(|_| -2.0)).collect(),
        };
        adam.step(&mut net, &grads, 1e-3);
        for (a, b) in net.layers.iter().zip(&before.layers) {
            for (x, y) in a.weight.iter().zip(&b.weight) {
                assert!((x - y + 1e-3).abs() < 1e-9);
            }
            for (x, y) in a.bias.iter().zip(&b.bias) {
                assert!((x - y - 1e-3).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn adam_zero_gradient_no_change() {
        let mut net = small_net();
        let before = net.clone();
        let mut adam = AdamState::new(&net);
        let grads = Gradients {
            weight: net.layers.iter().map(|l| l.weight.mapv(|_| 0.0)).collect(),
            bias: net.layers.iter().map(|l| l.bias.mapv(|_| 0.0)).collect(),
        };
        adam.step(&mut net, &grads, 1e-3);
        assert_eq!(net, before);
    }

    #[test]
    fn bias_gradient_is_mean_residual() {
        let net = small_net();
        let x = array![[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]];
        let y = array![[1.0, 0.0], [1.0, 1.0]];
        let (_, g) = net.loss_and_grad(x.view(), y.view());
        let p = net.probabilities(x.view());
        for i in 0..2 {
            let want = (p[[0, i]] - y[[0, i]] + p[[1, i]] - y[[1, i]]) / 2.0;
            assert!((g.bias[1][i] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_net_loss_is_uniform() {
        let net = Mlp {
            layers: vec![Layer::<f64>::zeros(3, 4, None), Layer::zeros(4, 3, None)],
        };
        let x = array![[1.0, 0.0, 1.0]];
        assert!((net.loss(x.view(), x.view()) - 3.0 * 2f64.ln()).abs() < 1e-12);
    }
}
