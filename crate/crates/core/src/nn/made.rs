use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{sigmoid, Layer, Mlp, Precision, Scalar, TrainConfig};
use crate::error::{Error, Result};
use crate::gf2::BinaryVector;
use crate::noise::{write_row, LabeledSample};
use crate::rng::{stream_rng, Purpose};

/// Shape and training settings of a MADE over `(gamma, beta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MadeConfig {
    /// Length of `gamma`, the leading variables.
    pub n_syndrome: usize,
    /// Length of `beta`, the trailing variables.
    pub n_sector: usize,
    /// Number of hidden layers.
    pub depth: usize,
    /// Hidden size is `width * n_in`.
    pub width: usize,
    #[serde(default)]
    pub precision: Precision,
    pub train: TrainConfig,
}

impl MadeConfig {
    pub fn new(n_syndrome: usize, n_sector: usize, depth: usize, width: usize) -> Self {
        Self {
            n_syndrome,
            n_sector,
            depth,
            width,
            precision: Precision::Double,
            train: TrainConfig::default(),
        }
    }

    pub fn n_in(&self) -> usize {
        self.n_syndrome + self.n_sector
    }

    pub fn hidden_size(&self) -> usize {
        self.width * self.n_in()
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.width == 0 {
            return Err(Error::InvalidParameter(
                "depth and width must be at least 1".into(),
            ));
        }
        if self.n_in() == 0 {
            return Err(Error::InvalidParameter("model has no variables".into()));
        }
        self.train.validate()
    }
}

/// Connectivity of a MADE: per-hidden-layer degrees and 0/1 masks
/// (`masks[l]` is `out x in` for layer `l`, the last one feeding outputs).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MadeMasks {
    pub degrees: Vec<Vec<usize>>,
    pub masks: Vec<Array2<u8>>,
}

/// Inputs carry degrees `1..=n_in`; hidden unit `h` gets `1 + h mod (n_in - 1)`.
/// Hidden units see inputs of degree `<= deg`, later hidden units see earlier
/// ones of degree `<= deg'`, and output `i` (1-based) sees hidden units of
/// degree `< i`.
pub fn build_masks(n_in: usize, depth: usize, hidden: usize) -> MadeMasks {
    let span = n_in.saturating_sub(1).max(1);
    let layer_deg: Vec<usize> = (0..hidden).map(|h| 1 + h % span).collect();
    let degrees = vec![layer_deg.clone(); depth];
    let mut masks = Vec::with_capacity(depth + 1);
    masks.push(Array2::from_shape_fn((hidden, n_in), |(h, j)| {
        u8::from(layer_deg[h] > j)
    }));
    for _ in 1..depth {
        masks.push(Array2::from_shape_fn((hidden, hidden), |(h2, h1)| {
            u8::from(layer_deg[h2] >= layer_deg[h1])
        }));
    }
    masks.push(Array2::from_shape_fn((n_in, hidden), |(i, h)| {
        u8::from(i + 1 > layer_deg[h])
    }));
    MadeMasks { degrees, masks }
}

/// Masked autoregressive density model. Output `i` is
/// `P(bit_i = 1 | bits_<i)` in the order `gamma` then `beta`.
#[derive(Clone, Debug, PartialEq)]
pub struct MadeNetwork<T = f64> {
    pub config: MadeConfig,
    pub mlp: Mlp<T>,
    pub degrees: Vec<Vec<usize>>,
    /// Fingerprint of the code or DEM the model was trained for.
    pub fingerprint: Option<String>,
}

impl<T: Scalar> MadeNetwork<T> {
    /// All weights and biases zero, masks in place.
    pub fn zeros(config: MadeConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_in();
        let h = config.hidden_size();
        let MadeMasks { degrees, masks } = build_masks(n, config.depth, h);
        let mut layers = Vec::with_capacity(masks.len());
        for mask in masks {
            let (o, i) = mask.dim();
            layers.push(Layer::zeros(i, o, Some(mask.mapv(|b| T::c(b as f64)))));
        }
        Ok(Self {
            config,
            mlp: Mlp { layers },
            degrees,
            fingerprint: None,
        })
    }

    /// Random initialization from `config.train.seed`.
    pub fn new(config: MadeConfig) -> Result<Self> {
        let mut net = Self::zeros(config)?;
        let mut rng = stream_rng(net.config.train.seed, Purpose::Init, 0);
        for layer in &mut net.mlp.layers {
            layer.init(&mut rng);
        }
        Ok(net)
    }

    pub fn with_fingerprint(mut self, fingerprint: impl Into<String>) -> Self {
        self.fingerprint = Some(fingerprint.into());
        self
    }

    pub fn n_in(&self) -> usize {
        self.config.n_in()
    }

    pub fn n_syndrome(&self) -> usize {
        self.config.n_syndrome
    }

    pub fn n_sector(&self) -> usize {
        self.config.n_sector
    }

    pub fn num_parameters(&self) -> usize {
        self.mlp.num_parameters()
    }

    /// Per-position probabilities for a batch of `0/1` rows.
    pub fn forward_batch(&self, x: ArrayView2<T>) -> Array2<T> {
        self.mlp.probabilities(x)
    }

    pub fn forward(&self, bits: &BinaryVector) -> Result<Vec<f64>> {
        let x = self.encode(bits)?;
        Ok(self.forward_batch(x.view()).iter().map(|p| p.f()).collect())
    }

    fn encode(&self, bits: &BinaryVector) -> Result<Array2<T>> {
        if bits.len() != self.n_in() {
            return Err(Error::Dimension {
                expected: self.n_in(),
                found: bits.len(),
            });
        }
        let mut x = Array2::zeros((1, self.n_in()));
        for i in bits.iter_ones() {
            x[[0, i]] = T::one();
        }
        Ok(x)
    }

    /// `P(bit_i = 1 | prefix_<i)`, ignoring `prefix` entries at `>= i`.
    pub fn conditional(&self, prefix: &BinaryVector, i: usize) -> Result<f64> {
        if i >= self.n_in() {
            return Err(Error::InvalidParameter(format!(
                "position {i} out of range for {} variables",
                self.n_in()
            )));
        }
        let mut x = self.encode(prefix)?;
        for j in i..self.n_in() {
            x[[0, j]] = T::zero();
        }
        let h = self.mlp.hidden(x.view());
        Ok(sigmoid(self.mlp.output_logit(h.view(), i)[0]).f())
    }

    /// `log q(bits)` from the chain rule, unclamped.
    pub fn log_prob(&self, bits: &BinaryVector) -> Result<f64> {
        let p = self.forward(bits)?;
        Ok(p.iter()
            .zip(bits.iter())
            .map(|(&pi, b)| if b { pi.ln() } else { (1.0 - pi).ln() })
            .sum())
    }

    /// Mean clamped negative log-likelihood over samples.
    pub fn nll_loss(&self, batch: &[LabeledSample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::InvalidParameter("empty batch".into()));
        }
        let x = self.samples_to_matrix(batch)?;
        Ok(self.mlp.loss(x.view(), x.view()))
    }

    pub(crate) fn samples_to_matrix(&self, batch: &[LabeledSample]) -> Result<Array2<T>> {
        let mut x = Array2::zeros((batch.len(), self.n_in()));
        for (r, s) in batch.iter().enumerate() {
            if s.gamma.len() != self.n_syndrome() || s.beta.len() != self.n_sector() {
                return Err(Error::Dimension {
                    expected: self.n_in(),
                    found: s.gamma.len() + s.beta.len(),
                });
            }
            write_row(&mut x, r, s);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Purpose};
    use rand::Rng;

    fn random_net(n_syndrome: usize, n_sector: usize, depth: usize, width: usize, seed: u64) -> MadeNetwork {
        let mut cfg = MadeConfig::new(n_syndrome, n_sector, depth, width);
        cfg.train.seed = seed;
        let mut net = MadeNetwork::<f64>::new(cfg).unwrap();
        // nonzero biases so every path matters
        let mut rng = stream_rng(seed, Purpose::Generic, 1);
        for l in &mut net.mlp.layers {
            l.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        }
        net
    }

    #[test]
    fn first_output_has_no_parents() {
        let m = build_masks(3, 1, 2);
        assert!(m.masks[1].row(0).iter().all(|&b| b == 0));
        assert_eq!(m.degrees[0], vec![1, 2]);
    }

    #[test]
    fn mask_paths_respect_order() {
        let n = 6;
        let m = build_masks(n, 3, 14);
        // connectivity product, output x input
        let mut reach = m.masks[0].mapv(|b| b as u32);
        for mask in &m.masks[1..] {
            reach = mask.mapv(|b| b as u32).dot(&reach);
        }
        for i in 0..n {
            for j in 0..n {
                assert_eq!(reach[[i, j]] > 0, j < i, "output {i} input {j}");
            }
        }
    }

    #[test]
    fn degrees_balanced() {
        let m = build_masks(7, 1, 40);
        let mut counts = [0usize; 7];
        for &d in &m.degrees[0] {
            counts[d] += 1;
        }
        let live = &counts[1..];
        assert!(live.iter().max().unwrap() - live.iter().min().unwrap() <= 1);
    }

    #[test]
    fn zero_net_is_uniform() {
        let net = MadeNetwork::<f64>::zeros(MadeConfig::new(3, 2, 2, 2)).unwrap();
        let p = net.forward(&BinaryVector::from_u8s(&[1, 0, 1, 1, 0])).unwrap();
        assert!(p.iter().all(|&v| v == 0.5));
        let s = LabeledSample {
            alpha: None,
            gamma: BinaryVector::from_u8s(&[1, 0, 1]),
            beta: BinaryVector::from_u8s(&[0, 1]),
        };
        let loss = net.nll_loss(&[s.clone(), s]).unwrap();
        assert!((loss - 5.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bias_only_output() {
        let mut net = MadeNetwork::<f64>::zeros(MadeConfig::new(2, 2, 1, 1)).unwrap();
        net.mlp.layers[1].bias[2] = 1.3;
        for bits in [[0u8, 0, 0, 0], [1, 1, 1, 1], [0, 1, 0, 1]] {
            let p = net.forward(&BinaryVector::from_u8s(&bits)).unwrap();
            assert!((p[2] - 1.0 / (1.0 + (-1.3f64).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn perturbation_causality() {
        let net = random_net(5, 3, 2, 2, 9);
        let mut rng = stream_rng(3, Purpose::Generic, 0);
        for _ in 0..50 {
            let bits = BinaryVector::from_bits((0..8).map(|_| rng.random::<bool>()));
            let base = net.forward(&bits).unwrap();
            for j in 0..8 {
                let mut b = bits.clone();
                b.flip(j);
                let p = net.forward(&b).unwrap();
                for i in 0..=j {
                    assert_eq!(p[i], base[i]);
                }
            }
        }
    }

    #[test]
    fn normalized_over_all_strings() {
        let net = random_net(6, 4, 2, 2, 4);
        let total: f64 = (0u64..1 << 10)
            .map(|v| net.log_prob(&BinaryVector::from_u64(10, v)).unwrap().exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-10, "{total}");
    }

    #[test]
    fn conditional_ignores_suffix() {
        let net = random_net(3, 2, 2, 2, 5);
        let a = BinaryVector::from_u8s(&[1, 0, 1, 0, 0]);
        let b = BinaryVector::from_u8s(&[1, 0, 1, 1, 1]);
        for i in 0..5 {
            let ca = net.conditional(&a, i).unwrap();
            let mut pad = a.clone();
            for j in i..5 {
                pad.set(j, false);
            }
            assert_eq!(ca, net.forward(&pad).unwrap()[i]);
            if i <= 3 {
                assert_eq!(ca, net.conditional(&b, i).unwrap());
            }
        }
        assert!(net.conditional(&a, 5).is_err());
    }

    #[test]
    fn toy_chain_rule_matches_loss() {
        let net = random_net(2, 2, 1, 2, 6);
        let mut total = 0.0;
        for v in 0u64..16 {
            let bits = BinaryVector::from_u64(4, v);
            let q = net.log_prob(&bits).unwrap().exp();
            total += q;
            let s = LabeledSample {
                alpha: None,
                gamma: bits.slice(0, 2),
                beta: bits.slice(2, 4),
            };
            // explicit product of conditionals
            let mut chain = 1.0;
            for i in 0..4 {
                let c = net.conditional(&bits, i).unwrap();
                chain *= if bits.get(i) { c } else { 1.0 - c };
            }
            assert!((chain - q).abs() < 1e-14);
            assert!((net.nll_loss(&[s]).unwrap() + q.ln()).abs() < 1e-12);
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_set_conditional() {
        // one hidden unit of degree 1 reading bit 0; output 1 reads it
        let mut net = MadeNetwork::<f64>::zeros(MadeConfig::new(2, 2, 1, 1)).unwrap();
        let l0 = &mut net.mlp.layers[0];
        for h in 0..l0.n_out() {
            if net.degrees[0][h] == 1 {
                l0.weight[[h, 0]] = 2.0;
                l0.bias[h] = 0.5;
            }
        }
        let h1 = net.degrees[0].iter().position(|&d| d == 1).unwrap();
        net.mlp.layers[1].weight[[1, h1]] = -1.5;
        net.mlp.layers[1].bias[1] = 0.25;
        let bits = BinaryVector::from_u8s(&[1, 0, 0, 0]);
        let want = 1.0 / (1.0 + (-(-1.5 * 2.5 + 0.25f64)).exp());
        assert!((net.conditional(&bits, 1).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn masked_weight_gradient_zero() {
        let net = random_net(4, 2, 2, 2, 7);
        let x = Array2::from_shape_fn((8, 6), |(r, c)| ((r * 7 + c * 3) % 2) as f64);
        let (_, g) = net.mlp.loss_and_grad(x.view(), x.view());
        for (gw, layer) in g.weight.iter().zip(&net.mlp.layers) {
            let mask = layer.mask.as_ref().unwrap();
            for (gv, mv) in gw.iter().zip(mask) {
                if *mv == 0.0 {
                    assert_eq!(*gv, 0.0);
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let net = random_net(8, 4, 3, 2, 8);
        let mut rng = stream_rng(8, Purpose::Generic, 2);
        let x = Array2::from_shape_fn((16, 12), |_| rng.random::<bool>() as u8 as f64);
        let worst = max_fd_error(&net, &x);
        assert!(worst < 1e-5, "{worst}");
    }

    pub(crate) const FD_FLOOR: f64 = 1e-4;

    pub(crate) fn max_fd_error(net: &MadeNetwork, x: &Array2<f64>) -> f64 {
        let (_, g) = net.mlp.loss_and_grad(x.view(), x.view());
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        let mut probe = net.clone();
        // below 1e-4 the central difference is dominated by roundoff
        let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(FD_FLOOR);
        for l in 0..net.mlp.layers.len() {
            let (rows, cols) = net.mlp.layers[l].weight.dim();
            for r in 0..rows {
                for c in 0..cols {
                    if net.mlp.layers[l].mask.as_ref().unwrap()[[r, c]] == 0.0 {
                        continue;
                    }
                    let w0 = probe.mlp.layers[l].weight[[r, c]];
                    probe.mlp.layers[l].weight[[r, c]] = w0 + h;
                    let up = probe.mlp.loss(x.view(), x.view());
                    probe.mlp.layers[l].weight[[r, c]] = w0 - h;
                    let down = probe.mlp.loss(x.view(), x.view());
                    probe.mlp.layers[l].weight[[r, c]] = w0;
                    worst = worst.max(rel(g.weight[l][[r, c]], (up - down) / (2.0 * h)));
                }
            }
            for r in 0..net.mlp.layers[l].bias.len() {
                let b0 = probe.mlp.layers[l].bias[r];
                probe.mlp.layers[l].bias[r] = b0 + h;
                let up = probe.mlp.loss(x.view(), x.view());
                probe.mlp.layers[l].bias[r] = b0 - h;
                let down = probe.mlp.loss(x.view(), x.view());
                probe.mlp.layers[l].bias[r] = b0;
                worst = worst.max(rel(g.bias[l][r], (up - down) / (2.0 * h)));
            }
        }
        worst
    }
}
