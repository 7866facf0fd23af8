//! Syndrome-to-sector decoders behind one interface.

mod bp;
mod mld;
mod neural;
mod osd;

pub use bp::{bp_min_sum, BinaryProblem, BpOsdDecoder, BpResult, DEFAULT_BP_ITERS, DEFAULT_BP_NORM};
pub use mld::{exact_mld_decode, ExactMld, DEFAULT_MLD_BUDGET, MLD_TIE_TOL};
pub use neural::{gnd_decode, GndDecoder, MndDecoder};
pub use osd::{osd_postprocess, OsdMode, DEFAULT_OSD_ORDER};

use std::sync::Arc;
use std::time::Duration;

use crate::code::ElsFrame;
use crate::error::{Error, Result};
use crate::gf2::BinaryVector;
use crate::nn::LoadedModel;
use crate::pauli::PauliOperator;

/// Output of a single instrumented decode.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    pub beta_hat: BinaryVector,
    /// `P(beta_i = 1 | gamma, beta_hat_<i)` per step, GND only.
    pub conditionals: Option<Vec<f64>>,
    pub elapsed: Duration,
}

/// Maps a syndrome `gamma` to a sector estimate `beta_hat`.
pub trait Decoder: Send + Sync {
    fn name(&self) -> &str;
    fn syndrome_len(&self) -> usize;
    fn sector_len(&self) -> usize;
    fn decode(&self, gamma: &BinaryVector) -> Result<BinaryVector>;

    fn decode_batch(&self, gammas: &[BinaryVector]) -> Result<Vec<BinaryVector>> {
        gammas.iter().map(|g| self.decode(g)).collect()
    }
}

pub(crate) fn check_len(gamma: &BinaryVector, want: usize) -> Result<()> {
    if gamma.len() == want {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected: want,
            found: gamma.len(),
        })
    }
}

/// GND for a MADE checkpoint, MND for an MLP one.
pub fn decoder_from_checkpoint(
    model: LoadedModel,
    expected_fingerprint: Option<&str>,
) -> Result<Arc<dyn Decoder>> {
    Ok(match model {
        LoadedModel::MadeF64(net) => Arc::new(GndDecoder::new(net, expected_fingerprint)?),
        LoadedModel::MadeF32(net) => Arc::new(GndDecoder::new(net, expected_fingerprint)?),
        LoadedModel::MndF64(net) => Arc::new(MndDecoder::new(net, expected_fingerprint)?),
        LoadedModel::MndF32(net) => Arc::new(MndDecoder::new(net, expected_fingerprint)?),
    })
}

/// Sector of an error estimate that reproduces `gamma`.
pub fn decoder_logical_projection(
    frame: &ElsFrame,
    estimate: &PauliOperator,
    gamma: &BinaryVector,
) -> Result<BinaryVector> {
    let cfg = frame.decompose(estimate)?;
    if &cfg.gamma != gamma {
        return Err(Error::Contract(format!(
            "estimate has syndrome {}, expected {}",
            cfg.gamma, gamma
        )));
    }
    Ok(cfg.beta)
}
