//! Noise models, error sampling and labelled training data.

use ndarray::Array2;
use num_traits::Float;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::code::ElsFrame;
use crate::dem::DetectorErrorModel;
use crate::error::{Error, Result};
use crate::gf2::BinaryVector;
use crate::pauli::{Pauli, PauliOperator};
use crate::rng::{stream_rng, Purpose};
use rayon::prelude::*;

/// Code-capacity noise, i.i.d. over qubits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `P(X) = P(Y) = P(Z) = p/3`.
    Depolarizing { p: f64 },
    /// Independent X and Z flips, each with probability `p`.
    IndependentXz { p: f64 },
}

impl NoiseModel {
    pub fn depolarizing(p: f64) -> Result<Self> {
        let m = NoiseModel::Depolarizing { p };
        m.validate()?;
        Ok(m)
    }

    pub fn independent_xz(p: f64) -> Result<Self> {
        let m = NoiseModel::IndependentXz { p };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if (0.0..=1.0).contains(&p) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "physical error rate {p} outside [0, 1]"
            )))
        }
    }

    pub fn p(&self) -> f64 {
        match *self {
            NoiseModel::Depolarizing { p } | NoiseModel::IndependentXz { p } => p,
        }
    }

    /// Same family at a different rate.
    pub fn with_p(&self, p: f64) -> Result<Self> {
        let m = match self {
            NoiseModel::Depolarizing { .. } => NoiseModel::Depolarizing { p },
            NoiseModel::IndependentXz { .. } => NoiseModel::IndependentXz { p },
        };
        m.validate()?;
        Ok(m)
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::Depolarizing { .. } => "depolarizing",
            NoiseModel::IndependentXz { .. } => "independent_xz",
        }
    }

    /// Single-qubit probabilities `[P(I), P(X), P(Y), P(Z)]`.
    pub fn qubit_probabilities(&self) -> [f64; 4] {
        match *self {
            NoiseModel::Depolarizing { p } => [1.0 - p, p / 3.0, p / 3.0, p / 3.0],
            NoiseModel::IndependentXz { p } => {
                [(1.0 - p) * (1.0 - p), p * (1.0 - p), p * p, p * (1.0 - p)]
            }
        }
    }

    /// Marginal probability that one symplectic bit (an x- or z-component)
    /// is set.
    pub fn bit_prior(&self) -> f64 {
        match *self {
            NoiseModel::Depolarizing { p } => 2.0 * p / 3.0,
            NoiseModel::IndependentXz { p } => p,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> PauliOperator {
        let [_, px, py, pz] = self.qubit_probabilities();
        let (c1, c2, c3) = (px, px + py, px + py + pz);
        let mut x = BinaryVector::zeros(n);
        let mut z = BinaryVector::zeros(n);
        for q in 0..n {
            let u: f64 = rng.random();
            if u >= c3 {
                continue;
            }
            if u < c1 {
                x.set(q, true);
            } else if u < c2 {
                x.set(q, true);
                z.set(q, true);
            } else {
                z.set(q, true);
            }
        }
        PauliOperator::new(x, z).expect("equal lengths")
    }

    /// `log P(E)`; `-inf` for impossible errors.
    pub fn log_probability(&self, error: &PauliOperator) -> f64 {
        let n = error.num_qubits();
        let y = error.x_part().and_weight(error.z_part());
        let counts = [
            n - error.weight(),
            error.x_part().weight() - y,
            y,
            error.z_part().weight() - y,
        ];
        log_weight(&self.qubit_probabilities(), &counts)
    }

    /// `log P` of each single-qubit Pauli, indexed as [`Pauli`] `I, X, Y, Z`.
    pub fn qubit_log_probabilities(&self) -> [f64; 4] {
        self.qubit_probabilities().map(f64::ln)
    }
}

fn log_weight(probs: &[f64; 4], counts: &[usize; 4]) -> f64 {
    let mut total = 0.0;
    for (&pr, &c) in probs.iter().zip(counts) {
        if c > 0 {
            if pr == 0.0 {
                return f64::NEG_INFINITY;
            }
            total += c as f64 * pr.ln();
        }
    }
    total
}

/// I.i.d. depolarizing error on `n` qubits.
pub fn sample_depolarizing<R: Rng + ?Sized>(p: f64, n: usize, rng: &mut R) -> Result<PauliOperator> {
    Ok(NoiseModel::depolarizing(p)?.sample(n, rng))
}

pub fn error_probability(model: &NoiseModel, error: &PauliOperator) -> f64 {
    model.log_probability(error)
}

/// One labelled error. `alpha` is absent for DEM samples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub alpha: Option<BinaryVector>,
    pub beta: BinaryVector,
    pub gamma: BinaryVector,
}

impl LabeledSample {
    /// Network input order: `gamma` then `beta`.
    pub fn joint_bits(&self) -> BinaryVector {
        self.gamma.concat(&self.beta)
    }
}

pub fn sample_code_capacity<R: Rng + ?Sized>(
    frame: &ElsFrame,
    model: &NoiseModel,
    rng: &mut R,
) -> LabeledSample {
    let e = model.sample(frame.n(), rng);
    let cfg = frame.decompose(&e).expect("sampled on frame.n() qubits");
    LabeledSample {
        alpha: Some(cfg.alpha),
        beta: cfg.beta,
        gamma: cfg.gamma,
    }
}

pub fn sample_dem<R: Rng + ?Sized>(dem: &DetectorErrorModel, rng: &mut R) -> LabeledSample {
    let mut gamma = BinaryVector::zeros(dem.num_detectors);
    let mut beta = BinaryVector::zeros(dem.num_observables);
    for mech in &dem.mechanisms {
        if rng.random::<f64>() < mech.probability {
            for &d in &mech.detectors {
                gamma.flip(d);
            }
            for &l in &mech.observables {
                beta.flip(l);
            }
        }
    }
    LabeledSample {
        alpha: None,
        beta,
        gamma,
    }
}

/// Anything that streams labelled samples for training or evaluation.
pub trait SampleSource: Send + Sync {
    /// Length of `gamma`.
    fn syndrome_len(&self) -> usize;
    /// Length of `beta`.
    fn sector_len(&self) -> usize;
    fn draw(&self, rng: &mut dyn RngCore) -> LabeledSample;
    /// Fingerprint of the underlying code or DEM.
    fn fingerprint(&self) -> String;
}

#[derive(Clone, Debug)]
pub struct CodeCapacitySource {
    pub frame: ElsFrame,
    pub model: NoiseModel,
}

impl CodeCapacitySource {
    pub fn new(frame: ElsFrame, model: NoiseModel) -> Result<Self> {
        model.validate()?;
        Ok(Self { frame, model })
    }
}

impl SampleSource for CodeCapacitySource {
    fn syndrome_len(&self) -> usize {
        self.frame.m()
    }

    fn sector_len(&self) -> usize {
        2 * self.frame.k()
    }

    fn draw(&self, rng: &mut dyn RngCore) -> LabeledSample {
        sample_code_capacity(&self.frame, &self.model, rng)
    }

    fn fingerprint(&self) -> String {
        self.frame.code().fingerprint()
    }
}

#[derive(Clone, Debug)]
pub struct DemSource {
    pub dem: DetectorErrorModel,
}

impl DemSource {
    pub fn new(dem: DetectorErrorModel) -> Result<Self> {
        dem.validate()?;
        Ok(Self { dem })
    }
}

impl SampleSource for DemSource {
    fn syndrome_len(&self) -> usize {
        self.dem.num_detectors
    }

    fn sector_len(&self) -> usize {
        self.dem.num_observables
    }

    fn draw(&self, rng: &mut dyn RngCore) -> LabeledSample {
        sample_dem(&self.dem, rng)
    }

    fn fingerprint(&self) -> String {
        self.dem.fingerprint()
    }
}

/// Writes sample bits into row `row` as `0/1` activations, `gamma` first.
pub fn write_row<T: Float>(out: &mut Array2<T>, row: usize, sample: &LabeledSample) {
    let m = sample.gamma.len();
    for i in sample.gamma.iter_ones() {
        out[[row, i]] = T::one();
    }
    for i in sample.beta.iter_ones() {
        out[[row, m + i]] = T::one();
    }
}

/// A `batch x (m + 2k)` matrix of fresh samples.
pub fn sample_batch<T: Float>(
    source: &dyn SampleSource,
    rng: &mut dyn RngCore,
    batch: usize,
) -> Array2<T> {
    let width = source.syndrome_len() + source.sector_len();
    let mut out = Array2::zeros((batch, width));
    for r in 0..batch {
        let s = source.draw(rng);
        write_row(&mut out, r, &s);
    }
    out
}

/// Rows drawn per random stream in [`sample_batch_streamed`].
pub const STREAM_CHUNK: usize = 64;

/// A batch whose row chunks come from independent streams
/// `(seed, purpose, batch_id << 24 | chunk)`, filled in parallel.
pub fn sample_batch_streamed<T: Float + Send>(
    source: &dyn SampleSource,
    seed: u64,
    purpose: Purpose,
    batch_id: u64,
    batch: usize,
) -> Array2<T> {
    let chunks = batch.div_ceil(STREAM_CHUNK);
    let drawn: Vec<Vec<LabeledSample>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, purpose, (batch_id << 24) | c as u64);
            let len = STREAM_CHUNK.min(batch - c * STREAM_CHUNK);
            (0..len).map(|_| source.draw(&mut rng)).collect()
        })
        .collect();
    let width = source.syndrome_len() + source.sector_len();
    let mut out = Array2::zeros((batch, width));
    for (r, s) in drawn.iter().flatten().enumerate() {
        write_row(&mut out, r, s);
    }
    out
}

/// Exhaustive `(error, log P)` over all `4^n` Paulis, for oracles on tiny codes.
pub fn enumerate_paulis(n: usize) -> impl Iterator<Item = PauliOperator> {
    assert!(n <= 16, "4^n enumeration limited to n <= 16");
    (0u64..1u64 << (2 * n)).map(move |idx| {
        let mut op = PauliOperator::identity(n);
        for q in 0..n {
            let p = Pauli::from_bits((idx >> (2 * q)) & 1 == 1, (idx >> (2 * q + 1)) & 1 == 1);
            op.set(q, p);
        }
        op
    })
}
