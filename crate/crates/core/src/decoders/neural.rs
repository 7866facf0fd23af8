use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use ndarray::{s, Array2};

use super::{check_len, DecodeResult, Decoder};
use crate::error::{Error, Result};
use crate::gf2::BinaryVector;
use crate::nn::{MadeNetwork, MndNetwork, Scalar};

/// Rows per forward pass when decoding large batches.
const DECODE_CHUNK: usize = 1024;

fn check_fingerprint(found: Option<&str>, expected: Option<&str>) -> Result<()> {
    match (expected, found) {
        (Some(want), Some(got)) if want != got => Err(Error::FingerprintMismatch {
            expected: want.to_string(),
            found: got.to_string(),
        }),
        (Some(want), None) => Err(Error::FingerprintMismatch {
            expected: want.to_string(),
            found: String::new(),
        }),
        _ => Ok(()),
    }
}

fn encode_rows<T: Scalar>(gammas: &[BinaryVector], width: usize) -> Array2<T> {
    let mut x = Array2::zeros((gammas.len(), width));
    for (r, g) in gammas.iter().enumerate() {
        for i in g.iter_ones() {
            x[[r, i]] = T::one();
        }
    }
    x
}

/// Generative decoder: sequential argmax over the sector conditionals of a
/// trained MADE, one forward pass per sector bit.
#[derive(Debug)]
pub struct GndDecoder<T = f64> {
    net: MadeNetwork<T>,
    row_passes: AtomicU64,
    decoded: AtomicU64,
    name: String,
}

impl<T: Scalar> GndDecoder<T> {
    /// Wraps `net`, refusing it if `expected_fingerprint` is given and the
    /// network was trained for a different code or DEM.
    pub fn new(net: MadeNetwork<T>, expected_fingerprint: Option<&str>) -> Result<Self> {
        check_fingerprint(net.fingerprint.as_deref(), expected_fingerprint)?;
        Ok(Self {
            net,
            row_passes: AtomicU64::new(0),
            decoded: AtomicU64::new(0),
            name: "gnd".into(),
        })
    }

    pub fn network(&self) -> &MadeNetwork<T> {
        &self.net
    }

    /// Forward passes summed over all syndromes decoded so far.
    pub fn forward_passes(&self) -> u64 {
        self.row_passes.load(Ordering::Relaxed)
    }

    pub fn syndromes_decoded(&self) -> u64 {
        self.decoded.load(Ordering::Relaxed)
    }

    pub fn reset_counters(&self) {
        self.row_passes.store(0, Ordering::Relaxed);
        self.decoded.store(0, Ordering::Relaxed);
    }

    /// Decodes a batch, also returning the conditional used at every step.
    fn run(&self, gammas: &[BinaryVector]) -> Result<(Vec<BinaryVector>, Vec<Vec<f64>>)> {
        let (m, k2) = (self.net.n_syndrome(), self.net.n_sector());
        for g in gammas {
            check_len(g, m)?;
        }
        let mut x: Array2<T> = encode_rows(gammas, m + k2);
        let mut cond = vec![Vec::with_capacity(k2); gammas.len()];
        for i in 0..k2 {
            let hidden = self.net.mlp.hidden(x.view());
            let logits = self.net.mlp.output_logit(hidden.view(), m + i);
            self.row_passes
                .fetch_add(gammas.len() as u64, Ordering::Relaxed);
            for (r, &z) in logits.iter().enumerate() {
                cond[r].push(crate::nn::sigmoid(z).f());
                // p > 1/2 iff logit > 0; exact ties decode to 0
                if z > T::zero() {
                    x[[r, m + i]] = T::one();
                }
            }
        }
        self.decoded
            .fetch_add(gammas.len() as u64, Ordering::Relaxed);
        let betas = x
            .slice(s![.., m..])
            .rows()
            .into_iter()
            .map(|row| BinaryVector::from_bits(row.iter().map(|&v| v > T::zero())))
            .collect();
        Ok((betas, cond))
    }

    pub fn decode_detailed(&self, gamma: &BinaryVector) -> Result<DecodeResult> {
        let start = Instant::now();
        let (mut betas, mut cond) = self.run(std::slice::from_ref(gamma))?;
        Ok(DecodeResult {
            beta_hat: betas.pop().expect("one row"),
            conditionals: cond.pop(),
            elapsed: start.elapsed(),
        })
    }
}

impl<T: Scalar> Decoder for GndDecoder<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn syndrome_len(&self) -> usize {
        self.net.n_syndrome()
    }

    fn sector_len(&self) -> usize {
        self.net.n_sector()
    }

    fn decode(&self, gamma: &BinaryVector) -> Result<BinaryVector> {
        Ok(self.run(std::slice::from_ref(gamma))?.0.pop().expect("one row"))
    }

    fn decode_batch(&self, gammas: &[BinaryVector]) -> Result<Vec<BinaryVector>> {
        let mut out = Vec::with_capacity(gammas.len());
        for chunk in gammas.chunks(DECODE_CHUNK) {
            out.extend(self.run(chunk)?.0);
        }
        Ok(out)
    }
}

/// Sequential-argmax decode of one syndrome with a MADE.
pub fn gnd_decode<T: Scalar>(net: &MadeNetwork<T>, gamma: &BinaryVector) -> Result<DecodeResult> {
    GndDecoder::new(net.clone(), None)?.decode_detailed(gamma)
}

/// Marginal decoder: independent thresholding of per-bit MLP outputs.
#[derive(Clone, Debug)]
pub struct MndDecoder<T = f64> {
    net: MndNetwork<T>,
    name: String,
}

impl<T: Scalar> MndDecoder<T> {
    pub fn new(net: MndNetwork<T>, expected_fingerprint: Option<&str>) -> Result<Self> {
        check_fingerprint(net.fingerprint.as_deref(), expected_fingerprint)?;
        Ok(Self {
            net,
            name: "mnd".into(),
        })
    }

    pub fn network(&self) -> &MndNetwork<T> {
        &self.net
    }
}

impl<T: Scalar> Decoder for MndDecoder<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn syndrome_len(&self) -> usize {
        self.net.config.n_syndrome
    }

    fn sector_len(&self) -> usize {
        self.net.config.n_sector
    }

    fn decode(&self, gamma: &BinaryVector) -> Result<BinaryVector> {
        self.net.decode(gamma)
    }

    fn decode_batch(&self, gammas: &[BinaryVector]) -> Result<Vec<BinaryVector>> {
        let m = self.syndrome_len();
        let mut out = Vec::with_capacity(gammas.len());
        for chunk in gammas.chunks(DECODE_CHUNK) {
            for g in chunk {
                check_len(g, m)?;
            }
            let x: Array2<T> = encode_rows(chunk, m);
            let logits = self.net.mlp.logits(x.view());
            out.extend(
                logits
                    .rows()
                    .into_iter()
                    .map(|row| BinaryVector::from_bits(row.iter().map(|&z| z > T::zero()))),
            );
        }
        Ok(out)
    }
}
