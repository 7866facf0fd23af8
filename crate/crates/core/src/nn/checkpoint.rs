//! Binary checkpoints.
//!
//! Layout: the 8-byte magic `GNDCKPT1`, a little-endian `u64` header length,
//! a UTF-8 JSON [`CheckpointHeader`], then every tensor listed in the header
//! manifest as raw little-endian IEEE-754 values in row-major order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MadeConfig, MadeNetwork, MndConfig, MndNetwork, Mlp, Scalar};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"GNDCKPT1";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Made,
    Mlp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub kind: ModelKind,
    pub dtype: String,
    pub config: serde_json::Value,
    pub fingerprint: Option<String>,
    pub tensors: Vec<TensorEntry>,
}

/// A checkpoint of any supported kind and precision.
#[derive(Clone, Debug, PartialEq)]
pub enum LoadedModel {
    MadeF64(MadeNetwork<f64>),
    MadeF32(MadeNetwork<f32>),
    MndF64(MndNetwork<f64>),
    MndF32(MndNetwork<f32>),
}

impl LoadedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            LoadedModel::MadeF64(_) | LoadedModel::MadeF32(_) => ModelKind::Made,
            LoadedModel::MndF64(_) | LoadedModel::MndF32(_) => ModelKind::Mlp,
        }
    }

    pub fn fingerprint(&self) -> Option<&str> {
        match self {
            LoadedModel::MadeF64(n) => n.fingerprint.as_deref(),
            LoadedModel::MadeF32(n) => n.fingerprint.as_deref(),
            LoadedModel::MndF64(n) => n.fingerprint.as_deref(),
            LoadedModel::MndF32(n) => n.fingerprint.as_deref(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            LoadedModel::MadeF64(n) => write_checkpoint(n),
            LoadedModel::MadeF32(n) => write_checkpoint(n),
            LoadedModel::MndF64(n) => write_checkpoint(n),
            LoadedModel::MndF32(n) => write_checkpoint(n),
        }
    }
}

/// Models that can be written to a checkpoint.
pub trait Checkpointable {
    fn encode(&self) -> Vec<u8>;
}

impl<T: Scalar> Checkpointable for MadeNetwork<T> {
    fn encode(&self) -> Vec<u8> {
        encode(
            ModelKind::Made,
            T::DTYPE,
            serde_json::to_value(&self.config).expect("config serializes"),
            self.fingerprint.clone(),
            &self.mlp,
        )
    }
}

impl<T: Scalar> Checkpointable for MndNetwork<T> {
    fn encode(&self) -> Vec<u8> {
        encode(
            ModelKind::Mlp,
            T::DTYPE,
            serde_json::to_value(&self.config).expect("config serializes"),
            self.fingerprint.clone(),
            &self.mlp,
        )
    }
}

pub fn write_checkpoint(model: &impl Checkpointable) -> Vec<u8> {
    model.encode()
}

pub fn save_checkpoint(model: &impl Checkpointable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.encode()).map_err(|e| Error::io(path, e))
}

fn encode<T: Scalar>(
    kind: ModelKind,
    dtype: &str,
    config: serde_json::Value,
    fingerprint: Option<String>,
    mlp: &Mlp<T>,
) -> Vec<u8> {
    let mut tensors = Vec::new();
    for (i, l) in mlp.layers.iter().enumerate() {
        tensors.push(TensorEntry {
            name: format!("layers.{i}.weight"),
            shape: vec![l.weight.nrows(), l.weight.ncols()],
        });
        tensors.push(TensorEntry {
            name: format!("layers.{i}.bias"),
            shape: vec![l.bias.len()],
        });
    }
    let header = CheckpointHeader {
        format_version: CHECKPOINT_VERSION,
        kind,
        dtype: dtype.to_string(),
        config,
        fingerprint,
        tensors,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + json.len() + mlp.num_parameters() * T::BYTES);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for l in &mlp.layers {
        for &v in l.weight.iter() {
            v.put_le(&mut out);
        }
        for &v in l.bias.iter() {
            v.put_le(&mut out);
        }
    }
    out
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

/// Splits a blob into its header and tensor payload.
pub fn read_header(bytes: &[u8]) -> Result<(CheckpointHeader, &[u8])> {
    if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
        if bytes.len() >= 8 && bytes[..7] == CHECKPOINT_MAGIC[..7] {
            return Err(corrupt(format!(
                "unsupported checkpoint version tag {:?}",
                String::from_utf8_lossy(&bytes[..8])
            )));
        }
        return Err(corrupt("not a checkpoint or truncated header"));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let end = usize::try_from(len)
        .ok()
        .and_then(|l| l.checked_add(16))
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| corrupt("truncated header"))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[16..end])
        .map_err(|e| corrupt(format!("bad header: {e}")))?;
    if header.format_version != CHECKPOINT_VERSION {
        return Err(corrupt(format!(
            "unsupported format version {}",
            header.format_version
        )));
    }
    Ok((header, &bytes[end..]))
}

/// Decodes a checkpoint, refusing it if `expected_fingerprint` is given and
/// differs from the stored one.
pub fn read_checkpoint(bytes: &[u8], expected_fingerprint: Option<&str>) -> Result<LoadedModel> {
    let (header, payload) = read_header(bytes)?;
    if let Some(want) = expected_fingerprint {
        let found = header.fingerprint.as_deref().unwrap_or("");
        if found != want {
            return Err(Error::FingerprintMismatch {
                expected: want.to_string(),
                found: found.to_string(),
            });
        }
    }
    let bad_cfg = |e: serde_json::Error| corrupt(format!("bad config: {e}"));
    match (header.kind, header.dtype.as_str()) {
        (ModelKind::Made, "f64") => {
            let cfg: MadeConfig = serde_json::from_value(header.config.clone()).map_err(bad_cfg)?;
            let mut net = MadeNetwork::<f64>::zeros(cfg)?;
            fill(&mut net.mlp, &header, payload)?;
            net.fingerprint = header.fingerprint;
            Ok(LoadedModel::MadeF64(net))
        }
        (ModelKind::Made, "f32") => {
            let cfg: MadeConfig = serde_json::from_value(header.config.clone()).map_err(bad_cfg)?;
            let mut net = MadeNetwork::<f32>::zeros(cfg)?;
            fill(&mut net.mlp, &header, payload)?;
            net.fingerprint = header.fingerprint;
            Ok(LoadedModel::MadeF32(net))
        }
        (ModelKind::Mlp, "f64") => {
            let cfg: MndConfig = serde_json::from_value(header.config.clone()).map_err(bad_cfg)?;
            let mut net = MndNetwork::<f64>::zeros(cfg)?;
            fill(&mut net.mlp, &header, payload)?;
            net.fingerprint = header.fingerprint;
            Ok(LoadedModel::MndF64(net))
        }
        (ModelKind::Mlp, "f32") => {
            let cfg: MndConfig = serde_json::from_value(header.config.clone()).map_err(bad_cfg)?;
            let mut net = MndNetwork::<f32>::zeros(cfg)?;
            fill(&mut net.mlp, &header, payload)?;
            net.fingerprint = header.fingerprint;
            Ok(LoadedModel::MndF32(net))
        }
        (_, other) => Err(corrupt(format!("unsupported dtype {other:?}"))),
    }
}

pub fn load_checkpoint(
    path: impl AsRef<Path>,
    expected_fingerprint: Option<&str>,
) -> Result<LoadedModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes, expected_fingerprint)
}

fn fill<T: Scalar>(mlp: &mut Mlp<T>, header: &CheckpointHeader, payload: &[u8]) -> Result<()> {
    if header.tensors.len() != 2 * mlp.layers.len() {
        return Err(corrupt("tensor manifest does not match the config"));
    }
    let mut pos = 0usize;
    let mut take = |entry: &TensorEntry, shape: &[usize], dst: &mut dyn Iterator<Item = &mut T>| {
        if entry.shape != shape {
            return Err(corrupt(format!(
                "tensor {} has shape {:?}, config implies {:?}",
                entry.name, entry.shape, shape
            )));
        }
        let count: usize = shape.iter().product();
        let end = pos + count * T::BYTES;
        if end > payload.len() {
            return Err(corrupt("truncated tensor data"));
        }
        for (v, chunk) in dst.zip(payload[pos..end].chunks_exact(T::BYTES)) {
            *v = T::get_le(chunk);
        }
        pos = end;
        Ok(())
    };
    for (i, layer) in mlp.layers.iter_mut().enumerate() {
        let wshape = [layer.weight.nrows(), layer.weight.ncols()];
        take(&header.tensors[2 * i], &wshape, &mut layer.weight.iter_mut())?;
        let bshape = [layer.bias.len()];
        take(&header.tensors[2 * i + 1], &bshape, &mut layer.bias.iter_mut())?;
        if let Some(mask) = &layer.mask {
            if layer
                .weight
                .iter()
                .zip(mask)
                .any(|(&w, &m)| m == T::zero() && w != T::zero())
            {
                return Err(corrupt(format!("layer {i} has weights outside its mask")));
            }
        }
    }
    if pos != payload.len() {
        return Err(corrupt("trailing bytes after tensor data"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::BinaryVector;
    use crate::nn::Precision;

    fn net() -> MadeNetwork<f64> {
        let mut cfg = MadeConfig::new(4, 2, 2, 2);
        cfg.train.seed = 11;
        MadeNetwork::new(cfg).unwrap().with_fingerprint("abc")
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let n = net();
        let bytes = write_checkpoint(&n);
        assert_eq!(&bytes[..8], CHECKPOINT_MAGIC);
        let LoadedModel::MadeF64(back) = read_checkpoint(&bytes, Some("abc")).unwrap() else {
            panic!("wrong kind");
        };
        assert_eq!(back, n);
        let bits = BinaryVector::from_u8s(&[1, 0, 1, 1, 0, 1]);
        assert_eq!(back.forward(&bits).unwrap(), n.forward(&bits).unwrap());
        assert_eq!(write_checkpoint(&back), bytes);
    }

    #[test]
    fn single_precision_and_mnd_round_trip() {
        let mut cfg = MadeConfig::new(4, 2, 1, 2);
        cfg.precision = Precision::Single;
        let made = MadeNetwork::<f32>::new(cfg.clone()).unwrap();
        assert_eq!(
            read_checkpoint(&write_checkpoint(&made), None).unwrap(),
            LoadedModel::MadeF32(made)
        );
        let mnd = MndNetwork::<f64>::new(MndConfig::matching(&cfg)).unwrap();
        assert_eq!(
            read_checkpoint(&write_checkpoint(&mnd), None).unwrap(),
            LoadedModel::MndF64(mnd)
        );
    }

    #[test]
    fn truncation_is_corrupt() {
        let bytes = write_checkpoint(&net());
        for cut in [0, 5, 12, 40, bytes.len() - 1] {
            assert!(
                matches!(read_checkpoint(&bytes[..cut], None), Err(Error::Checkpoint(_))),
                "cut {cut}"
            );
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(read_checkpoint(&extra, None), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn wrong_fingerprint_refused() {
        let bytes = write_checkpoint(&net());
        assert!(matches!(
            read_checkpoint(&bytes, Some("other")),
            Err(Error::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn version_mismatch_reported() {
        let mut bytes = write_checkpoint(&net());
        bytes[7] = b'9';
        match read_checkpoint(&bytes, None) {
            Err(Error::Checkpoint(m)) => assert!(m.contains("version"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let n = net();
        save_checkpoint(&n, &path).unwrap();
        assert_eq!(load_checkpoint(&path, None).unwrap(), LoadedModel::MadeF64(n));
    }
}
