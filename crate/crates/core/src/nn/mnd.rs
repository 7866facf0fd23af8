use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{build_masks, Layer, MadeConfig, Mlp, Precision, Scalar, TrainConfig};
use crate::error::{Error, Result};
use crate::gf2::BinaryVector;
use crate::rng::{stream_rng, Purpose};

/// Plain MLP mapping `gamma` to independent per-bit sector probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MndConfig {
    pub n_syndrome: usize,
    pub n_sector: usize,
    pub depth: usize,
    pub hidden: usize,
    #[serde(default)]
    pub precision: Precision,
    pub train: TrainConfig,
}

impl MndConfig {
    pub fn num_parameters(&self) -> usize {
        let (m, s, h) = (self.n_syndrome, self.n_sector, self.hidden);
        (m + 1) * h + (self.depth - 1) * (h + 1) * h + (h + 1) * s
    }

    /// Same depth and training settings as `made`, hidden size chosen so the
    /// trainable parameter count is as close as possible to the MADE's
    /// unmasked count.
    pub fn matching(made: &MadeConfig) -> Self {
        let masks = build_masks(made.n_in(), made.depth, made.hidden_size());
        let target: usize = masks
            .masks
            .iter()
            .map(|m| m.iter().filter(|&&b| b == 1).count() + m.nrows())
            .sum();
        let mut cfg = MndConfig {
            n_syndrome: made.n_syndrome,
            n_sector: made.n_sector,
            depth: made.depth,
            hidden: 1,
            precision: made.precision,
            train: made.train.clone(),
        };
        let mut best = (usize::MAX, 1);
        for h in 1..=made.hidden_size().max(1) * 2 {
            cfg.hidden = h;
            let n = cfg.num_parameters();
            let diff = n.abs_diff(target);
            if diff < best.0 {
                best = (diff, h);
            }
            if n > target {
                break;
            }
        }
        cfg.hidden = best.1;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.hidden == 0 || self.n_syndrome == 0 {
            return Err(Error::InvalidParameter(
                "depth, hidden size and syndrome length must be at least 1".into(),
            ));
        }
        self.train.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MndNetwork<T = f64> {
    pub config: MndConfig,
    pub mlp: Mlp<T>,
    pub fingerprint: Option<String>,
}

impl<T: Scalar> MndNetwork<T> {
    pub fn zeros(config: MndConfig) -> Result<Self> {
        config.validate()?;
        let h = config.hidden;
        let mut layers = vec![Layer::zeros(config.n_syndrome, h, None)];
        for _ in 1..config.depth {
            layers.push(Layer::zeros(h, h, None));
        }
        layers.push(Layer::zeros(h, config.n_sector, None));
        Ok(Self {
            config,
            mlp: Mlp { layers },
            fingerprint: None,
        })
    }

    pub fn new(config: MndConfig) -> Result<Self> {
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

    pub fn num_parameters(&self) -> usize {
        self.mlp.num_parameters()
    }

    /// Marginal sector probabilities for a batch of syndromes.
    pub fn forward_batch(&self, gamma: ArrayView2<T>) -> Array2<T> {
        self.mlp.probabilities(gamma)
    }

    /// Independent thresholding; `p = 0.5` decodes to 0.
    pub fn decode(&self, gamma: &BinaryVector) -> Result<BinaryVector> {
        if gamma.len() != self.config.n_syndrome {
            return Err(Error::Dimension {
                expected: self.config.n_syndrome,
                found: gamma.len(),
            });
        }
        let mut x = Array2::zeros((1, gamma.len()));
        for i in gamma.iter_ones() {
            x[[0, i]] = T::one();
        }
        let p = self.forward_batch(x.view());
        Ok(BinaryVector::from_bits(
            p.row(0).iter().map(|&v| v > T::c(0.5)),
        ))
    }
}
