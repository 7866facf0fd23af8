use std::sync::Arc;

use super::BenchTarget;
use crate::code::ElsFrame;
use crate::decoders::{BinaryProblem, BpOsdDecoder, Decoder, ExactMld};
use crate::dem::DetectorErrorModel;
use crate::error::{Error, Result};
use crate::noise::{CodeCapacitySource, DemSource, NoiseModel, SampleSource};

/// What errors are drawn from.
#[derive(Clone, Debug)]
pub enum Workload {
    /// Code-capacity noise; the model's rate is replaced by each sweep point.
    CodeCapacity { frame: ElsFrame, noise: NoiseModel },
    /// A fixed DEM; sweep error rates act as labels only.
    Dem(DetectorErrorModel),
}

impl Workload {
    pub fn fingerprint(&self) -> String {
        match self {
            Workload::CodeCapacity { frame, .. } => frame.code().fingerprint(),
            Workload::Dem(dem) => dem.fingerprint(),
        }
    }

    pub fn syndrome_len(&self) -> usize {
        match self {
            Workload::CodeCapacity { frame, .. } => frame.m(),
            Workload::Dem(dem) => dem.num_detectors,
        }
    }

    pub fn sector_len(&self) -> usize {
        match self {
            Workload::CodeCapacity { frame, .. } => 2 * frame.k(),
            Workload::Dem(dem) => dem.num_observables,
        }
    }

    pub fn source(&self, p: f64) -> Result<Box<dyn SampleSource>> {
        Ok(match self {
            Workload::CodeCapacity { frame, noise } => {
                Box::new(CodeCapacitySource::new(frame.clone(), noise.with_p(p)?)?)
            }
            Workload::Dem(dem) => Box::new(DemSource::new(dem.clone())?),
        })
    }
}

/// The built-in decoders (`mld`, `bposd`) plus optional trained `gnd` and
/// `mnd` networks.
pub struct StandardTarget {
    pub workload: Workload,
    pub gnd: Option<Arc<dyn Decoder>>,
    pub mnd: Option<Arc<dyn Decoder>>,
}

impl StandardTarget {
    pub fn new(workload: Workload) -> Self {
        Self {
            workload,
            gnd: None,
            mnd: None,
        }
    }
}

impl BenchTarget for StandardTarget {
    fn source(&self, p: f64) -> Result<Box<dyn SampleSource>> {
        self.workload.source(p)
    }

    fn decoder(&self, name: &str, p: f64) -> Result<Arc<dyn Decoder>> {
        let missing = |what: &str| Error::InvalidParameter(format!("decoder {what} needs a checkpoint"));
        match (name, &self.workload) {
            ("gnd", _) => self.gnd.clone().ok_or_else(|| missing("gnd")),
            ("mnd", _) => self.mnd.clone().ok_or_else(|| missing("mnd")),
            ("mld", Workload::CodeCapacity { frame, noise }) => {
                Ok(Arc::new(ExactMld::new(frame.clone(), noise.with_p(p)?)?))
            }
            ("mld", Workload::Dem(_)) => Err(Error::InvalidParameter(
                "exact MLD is only available for code-capacity noise".into(),
            )),
            ("bposd", Workload::CodeCapacity { frame, noise }) => Ok(Arc::new(BpOsdDecoder::new(
                BinaryProblem::from_code(frame, &noise.with_p(p)?)?,
            ))),
            ("bposd", Workload::Dem(dem)) => {
                Ok(Arc::new(BpOsdDecoder::new(BinaryProblem::from_dem(dem)?)))
            }
            (other, _) => Err(Error::InvalidParameter(format!(
                "unknown decoder {other:?} (expected gnd, mnd, mld or bposd)"
            ))),
        }
    }
}
