//! Python bindings: codes, DEMs, sampling, training and decoding.
//!
//! Bit vectors cross the boundary as lists of 0/1 ints.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use gnd_core::bench::{bench_point, BenchTarget, EstimateOptions, StandardTarget, Workload};
use gnd_core::code::{
    bb_code, brute_distance, defected_surface_code, load_code_file, parse_qcode,
    rotated_surface_code, write_qcode, BbTerm, Distance, ElsFrame, StabilizerCode,
};
use gnd_core::decoders::{decoder_from_checkpoint, gnd_decode, Decoder};
use gnd_core::dem::{load_dem_file, parse_dem, serialize_dem, DetectorErrorModel};
use gnd_core::gf2::BinaryVector;
use gnd_core::nn::{
    load_checkpoint, read_checkpoint, train as train_net, LoadedModel, MadeConfig, MadeNetwork,
    MndConfig, MndNetwork, Precision, Scalar,
};
use gnd_core::noise::{NoiseModel, SampleSource};
use gnd_core::pauli::PauliOperator;
use gnd_core::rng::{stream_rng, Purpose};
use gnd_core::Error;

create_exception!(gnd, GndError, PyException);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_)
        | Error::Dimension { .. }
        | Error::Parse { .. }
        | Error::InvalidCode(_) => PyValueError::new_err(e.to_string()),
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => GndError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for gnd_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn bits_in(v: Vec<u8>, len: usize) -> PyResult<BinaryVector> {
    if v.len() != len {
        return Err(PyValueError::new_err(format!("expected {len} bits, got {}", v.len())));
    }
    if v.iter().any(|&b| b > 1) {
        return Err(PyValueError::new_err("bits must be 0 or 1"));
    }
    Ok(BinaryVector::from_u8s(&v))
}

/// A batch of bit rows.
type Bits = Vec<Vec<u32>>;

// `Vec<u8>` would surface as `bytes`
fn bits_out(v: &BinaryVector) -> Vec<u32> {
    v.iter().map(u32::from).collect()
}

fn noise_model(noise: &str, p: f64) -> PyResult<NoiseModel> {
    match noise {
        "depolarizing" => NoiseModel::depolarizing(p).py(),
        "xz" => NoiseModel::independent_xz(p).py(),
        other => Err(PyValueError::new_err(format!(
            "unknown noise {other:?} (expected depolarizing or xz)"
        ))),
    }
}

/// A stabilizer code with its logical/pure-error frame.
#[pyclass(name = "StabilizerCode", module = "gnd", frozen)]
struct PyCode {
    frame: ElsFrame,
}

impl PyCode {
    fn wrap(code: StabilizerCode) -> PyResult<Self> {
        Ok(Self {
            frame: ElsFrame::build(&code).py()?,
        })
    }

    fn code(&self) -> &StabilizerCode {
        self.frame.code()
    }
}

#[pymethods]
impl PyCode {
    #[staticmethod]
    fn rotated_surface(d: usize) -> PyResult<Self> {
        Self::wrap(rotated_surface_code(d).py()?)
    }

    /// Bivariate bicycle code; terms like `"x3"`, `"y1"`, `"x1y2"`, `"1"`.
    #[staticmethod]
    fn bivariate_bicycle(l: usize, m: usize, a: Vec<String>, b: Vec<String>) -> PyResult<Self> {
        let parse = |v: &[String]| {
            v.iter()
                .map(|t| t.parse::<BbTerm>().py())
                .collect::<PyResult<Vec<_>>>()
        };
        Self::wrap(bb_code(l, m, &parse(&a)?, &parse(&b)?).py()?)
    }

    #[staticmethod]
    fn defected_surface(d: usize, defects: Vec<(usize, usize)>) -> PyResult<Self> {
        Self::wrap(defected_surface_code(d, &defects).py()?)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Self::wrap(load_code_file(path).py()?)
    }

    #[staticmethod]
    #[pyo3(signature = (text, name = "code"))]
    fn from_qcode(text: &str, name: &str) -> PyResult<Self> {
        Self::wrap(parse_qcode(text, name).py()?)
    }

    fn to_qcode(&self) -> String {
        write_qcode(self.code())
    }

    #[getter]
    fn n(&self) -> usize {
        self.code().n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.code().m()
    }

    #[getter]
    fn k(&self) -> usize {
        self.code().k()
    }

    #[getter]
    fn name(&self) -> String {
        self.code().name().to_string()
    }

    #[getter]
    fn is_css(&self) -> bool {
        self.code().is_css()
    }

    #[getter]
    fn fingerprint(&self) -> String {
        self.code().fingerprint()
    }

    /// Known distance, if the code carries one.
    #[getter]
    fn known_distance(&self) -> Option<usize> {
        self.code().distance()
    }

    /// Exhaustive distance search up to `max_weight`; None if larger.
    fn distance(&self, py: Python<'_>, max_weight: usize) -> PyResult<Option<usize>> {
        let code = self.code().clone();
        match py.detach(|| brute_distance(&code, max_weight)).py()? {
            Distance::Exact(d) => Ok(Some(d)),
            Distance::Unknown => Ok(None),
        }
    }

    /// Stabilizer generators as Pauli strings (`"XIZ..."`).
    fn stabilizers(&self) -> Vec<String> {
        self.frame.stabilizers().iter().map(|s| s.to_string()).collect()
    }

    /// Logical operators in frame order `X_0, Z_0, X_1, ...`.
    fn logicals(&self) -> Vec<String> {
        self.frame.logicals().iter().map(|s| s.to_string()).collect()
    }

    fn syndrome(&self, error: &str) -> PyResult<Vec<u32>> {
        let e = parse_pauli(error)?;
        Ok(bits_out(&self.frame.syndrome(&e).py()?))
    }

    /// Logical sector `beta` of a Pauli error.
    fn sector(&self, error: &str) -> PyResult<Vec<u32>> {
        let e = parse_pauli(error)?;
        Ok(bits_out(&self.frame.sector(&e).py()?))
    }

    fn __repr__(&self) -> String {
        let c = self.code();
        let d = c.distance().map_or("?".into(), |d| d.to_string());
        format!("StabilizerCode({:?}, [[{},{},{}]])", c.name(), c.n(), c.k(), d)
    }
}

fn parse_pauli(s: &str) -> PyResult<PauliOperator> {
    s.parse::<PauliOperator>().py()
}

#[pyclass(name = "DetectorErrorModel", module = "gnd", frozen)]
struct PyDem {
    dem: DetectorErrorModel,
}

#[pymethods]
impl PyDem {
    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self {
            dem: load_dem_file(path).py()?,
        })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self {
            dem: parse_dem(text).py()?,
        })
    }

    fn to_text(&self) -> String {
        serialize_dem(&self.dem)
    }

    #[getter]
    fn num_detectors(&self) -> usize {
        self.dem.num_detectors
    }

    #[getter]
    fn num_observables(&self) -> usize {
        self.dem.num_observables
    }

    #[getter]
    fn num_mechanisms(&self) -> usize {
        self.dem.mechanisms.len()
    }

    #[getter]
    fn fingerprint(&self) -> String {
        self.dem.fingerprint()
    }

    fn detector_marginals(&self) -> Vec<f64> {
        self.dem.detector_marginals()
    }

    fn __repr__(&self) -> String {
        format!(
            "DetectorErrorModel({} detectors, {} observables, {} mechanisms)",
            self.dem.num_detectors,
            self.dem.num_observables,
            self.dem.mechanisms.len()
        )
    }
}

/// A code or a DEM, as accepted by the sampling and training functions.
#[derive(FromPyObject)]
enum SourceArg<'py> {
    Code(PyRef<'py, PyCode>),
    Dem(PyRef<'py, PyDem>),
}

impl SourceArg<'_> {
    fn workload(&self, p: f64, noise: &str) -> PyResult<Workload> {
        Ok(match self {
            SourceArg::Code(c) => Workload::CodeCapacity {
                frame: c.frame.clone(),
                noise: noise_model(noise, p)?,
            },
            SourceArg::Dem(d) => Workload::Dem(d.dem.clone()),
        })
    }
}

/// Draws `shots` labelled samples; returns `(syndromes, sectors)`.
#[pyfunction]
#[pyo3(signature = (source, shots, seed, p = 0.0, noise = "depolarizing"))]
fn sample(
    source: SourceArg<'_>,
    shots: usize,
    seed: u64,
    p: f64,
    noise: &str,
) -> PyResult<(Bits, Bits)> {
    let src = source.workload(p, noise)?.source(p).py()?;
    let mut rng = stream_rng(seed, Purpose::Sampling, 0);
    let (mut gammas, mut betas) = (Vec::with_capacity(shots), Vec::with_capacity(shots));
    for _ in 0..shots {
        let s = src.draw(&mut rng);
        gammas.push(bits_out(&s.gamma));
        betas.push(bits_out(&s.beta));
    }
    Ok((gammas, betas))
}

/// A trained (or freshly initialised) network.
#[pyclass(name = "Model", module = "gnd", frozen)]
struct PyModel {
    model: LoadedModel,
    decoder: Arc<dyn Decoder>,
}

impl PyModel {
    fn wrap(model: LoadedModel) -> PyResult<Self> {
        let decoder = decoder_from_checkpoint(model.clone(), None).py()?;
        Ok(Self { model, decoder })
    }
}

#[pymethods]
impl PyModel {
    /// Loads a checkpoint, optionally checking it against a code or DEM.
    #[staticmethod]
    #[pyo3(signature = (path, source = None))]
    fn load(path: std::path::PathBuf, source: Option<SourceArg<'_>>) -> PyResult<Self> {
        let fp = source.map(|s| s.workload(0.0, "depolarizing")).transpose()?;
        let fp = fp.map(|w| w.fingerprint());
        Self::wrap(load_checkpoint(path, fp.as_deref()).py()?)
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Self::wrap(read_checkpoint(data, None).py()?)
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.model.to_bytes()
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        std::fs::write(&path, self.model.to_bytes())
            .map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))
    }

    /// `"made"` or `"mnd"`.
    #[getter]
    fn kind(&self) -> &'static str {
        match self.model {
            LoadedModel::MadeF64(_) | LoadedModel::MadeF32(_) => "made",
            LoadedModel::MndF64(_) | LoadedModel::MndF32(_) => "mnd",
        }
    }

    #[getter]
    fn dtype(&self) -> &'static str {
        match self.model {
            LoadedModel::MadeF64(_) | LoadedModel::MndF64(_) => "f64",
            LoadedModel::MadeF32(_) | LoadedModel::MndF32(_) => "f32",
        }
    }

    #[getter]
    fn fingerprint(&self) -> Option<String> {
        self.model.fingerprint().map(String::from)
    }

    #[getter]
    fn syndrome_len(&self) -> usize {
        self.decoder.syndrome_len()
    }

    #[getter]
    fn sector_len(&self) -> usize {
        self.decoder.sector_len()
    }

    fn decode(&self, syndrome: Vec<u8>) -> PyResult<Vec<u32>> {
        let g = bits_in(syndrome, self.decoder.syndrome_len())?;
        Ok(bits_out(&self.decoder.decode(&g).py()?))
    }

    fn decode_batch(&self, py: Python<'_>, syndromes: Vec<Vec<u8>>) -> PyResult<Bits> {
        let m = self.decoder.syndrome_len();
        let gs = syndromes
            .into_iter()
            .map(|s| bits_in(s, m))
            .collect::<PyResult<Vec<_>>>()?;
        let out = py.detach(|| self.decoder.decode_batch(&gs)).py()?;
        Ok(out.iter().map(bits_out).collect())
    }

    /// Sequential decode returning `(beta_hat, conditionals)`, where
    /// `conditionals[j]` is the network's P(beta_j = 1 | gamma, beta_<j).
    /// MADE models only.
    fn decode_detailed(&self, syndrome: Vec<u8>) -> PyResult<(Vec<u32>, Vec<f64>)> {
        let g = bits_in(syndrome, self.decoder.syndrome_len())?;
        let r = match &self.model {
            LoadedModel::MadeF64(n) => gnd_decode(n, &g).py()?,
            LoadedModel::MadeF32(n) => gnd_decode(n, &g).py()?,
            _ => return Err(PyValueError::new_err("decode_detailed needs a MADE model")),
        };
        Ok((bits_out(&r.beta_hat), r.conditionals.unwrap_or_default()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(kind={:?}, dtype={:?}, syndrome_len={}, sector_len={})",
            self.kind(),
            self.dtype(),
            self.decoder.syndrome_len(),
            self.decoder.sector_len()
        )
    }
}

fn fit<T: Wrap>(
    model: &str,
    cfg: MadeConfig,
    src: &dyn SampleSource,
    losses: &mut Vec<(usize, f64)>,
) -> gnd_core::Result<LoadedModel> {
    let fp = src.fingerprint();
    let mut record = |step, loss| losses.push((step, loss));
    if model == "mnd" {
        let mut mcfg = MndConfig::matching(&cfg);
        mcfg.precision = cfg.precision;
        let mut net = MndNetwork::<T>::new(mcfg)?.with_fingerprint(fp);
        train_net(&mut net, src, &mut record)?;
        Ok(T::wrap_mnd(net))
    } else {
        let mut net = MadeNetwork::<T>::new(cfg)?.with_fingerprint(fp);
        train_net(&mut net, src, &mut record)?;
        Ok(T::wrap_made(net))
    }
}

trait Wrap: Scalar {
    fn wrap_made(n: MadeNetwork<Self>) -> LoadedModel;
    fn wrap_mnd(n: MndNetwork<Self>) -> LoadedModel;
}

impl Wrap for f64 {
    fn wrap_made(n: MadeNetwork<f64>) -> LoadedModel {
        LoadedModel::MadeF64(n)
    }
    fn wrap_mnd(n: MndNetwork<f64>) -> LoadedModel {
        LoadedModel::MndF64(n)
    }
}

impl Wrap for f32 {
    fn wrap_made(n: MadeNetwork<f32>) -> LoadedModel {
        LoadedModel::MadeF32(n)
    }
    fn wrap_mnd(n: MndNetwork<f32>) -> LoadedModel {
        LoadedModel::MndF32(n)
    }
}

/// Trains a MADE (`model="made"`) or the marginal baseline (`"mnd"`) on
/// fresh samples. Returns `(model, [(step, smoothed_loss), ...])`.
#[pyfunction]
#[pyo3(signature = (
    source, p = 0.0, *, noise = "depolarizing", model = "made", depth = 3, width = 10,
    steps = 10_000, batch = 512, lr = 1e-3, seed = 0, dtype = "f64", log_every = 100
))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    source: SourceArg<'_>,
    p: f64,
    noise: &str,
    model: &str,
    depth: usize,
    width: usize,
    steps: usize,
    batch: usize,
    lr: f64,
    seed: u64,
    dtype: &str,
    log_every: usize,
) -> PyResult<(PyModel, Vec<(usize, f64)>)> {
    if model != "made" && model != "mnd" {
        return Err(PyValueError::new_err(format!("unknown model {model:?}")));
    }
    let src = source.workload(p, noise)?.source(p).py()?;
    let mut cfg = MadeConfig::new(src.syndrome_len(), src.sector_len(), depth, width);
    cfg.precision = match dtype {
        "f64" => Precision::Double,
        "f32" => Precision::Single,
        other => return Err(PyValueError::new_err(format!("unknown dtype {other:?}"))),
    };
    cfg.train.train_steps = steps;
    cfg.train.batch_size = batch;
    cfg.train.learning_rate = lr;
    cfg.train.seed = seed;
    cfg.train.log_every = log_every;
    cfg.validate().py()?;
    let mut losses = Vec::new();
    let loaded = py
        .detach(|| match cfg.precision {
            Precision::Double => fit::<f64>(model, cfg, src.as_ref(), &mut losses),
            Precision::Single => fit::<f32>(model, cfg, src.as_ref(), &mut losses),
        })
        .py()?;
    Ok((PyModel::wrap(loaded)?, losses))
}

/// A classical decoder: exact maximum-likelihood or BP+OSD.
#[pyclass(name = "Decoder", module = "gnd", frozen)]
struct PyDecoder {
    inner: Arc<dyn Decoder>,
}

#[pymethods]
impl PyDecoder {
    /// Exact coset enumeration (code-capacity noise only).
    #[staticmethod]
    #[pyo3(signature = (code, p, noise = "depolarizing"))]
    fn exact_mld(code: PyRef<'_, PyCode>, p: f64, noise: &str) -> PyResult<Self> {
        let target = StandardTarget::new(SourceArg::Code(code).workload(p, noise)?);
        Ok(Self {
            inner: target.decoder("mld", p).py()?,
        })
    }

    /// Min-sum BP with combination-sweep OSD.
    #[staticmethod]
    #[pyo3(signature = (source, p = 0.0, noise = "depolarizing"))]
    fn bp_osd(source: SourceArg<'_>, p: f64, noise: &str) -> PyResult<Self> {
        let target = StandardTarget::new(source.workload(p, noise)?);
        Ok(Self {
            inner: target.decoder("bposd", p).py()?,
        })
    }

    #[staticmethod]
    fn from_model(model: PyRef<'_, PyModel>) -> Self {
        Self {
            inner: model.decoder.clone(),
        }
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    fn decode(&self, syndrome: Vec<u8>) -> PyResult<Vec<u32>> {
        let g = bits_in(syndrome, self.inner.syndrome_len())?;
        Ok(bits_out(&self.inner.decode(&g).py()?))
    }

    fn decode_batch(&self, py: Python<'_>, syndromes: Vec<Vec<u8>>) -> PyResult<Bits> {
        let m = self.inner.syndrome_len();
        let gs = syndromes
            .into_iter()
            .map(|s| bits_in(s, m))
            .collect::<PyResult<Vec<_>>>()?;
        let out = py.detach(|| self.inner.decode_batch(&gs)).py()?;
        Ok(out.iter().map(bits_out).collect())
    }

    fn __repr__(&self) -> String {
        format!("Decoder({:?})", self.inner.name())
    }
}

/// Monte Carlo logical error rate of `decoder` (a Decoder or Model) on
/// `source` at rate `p`. Returns a dict with the CSV row fields.
#[pyfunction]
#[pyo3(signature = (decoder, source, p = 0.0, *, shots = 10_000, tasks = 1, seed = 0, noise = "depolarizing"))]
#[allow(clippy::too_many_arguments)]
fn estimate_ler<'py>(
    py: Python<'py>,
    decoder: &Bound<'py, PyAny>,
    source: SourceArg<'_>,
    p: f64,
    shots: usize,
    tasks: usize,
    seed: u64,
    noise: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let dec = if let Ok(d) = decoder.cast::<PyDecoder>() {
        d.get().inner.clone()
    } else if let Ok(m) = decoder.cast::<PyModel>() {
        m.get().decoder.clone()
    } else {
        return Err(PyValueError::new_err("decoder must be a Decoder or a Model"));
    };
    let work = source.workload(p, noise)?;
    let label = match &source {
        SourceArg::Code(c) => c.code().name().to_string(),
        SourceArg::Dem(_) => "dem".to_string(),
    };
    let src = work.source(p).py()?;
    let opts = EstimateOptions::new(tasks, shots, seed);
    let row = py
        .detach(|| bench_point(&label, p, src.as_ref(), dec.as_ref(), opts))
        .py()?;
    let d = PyDict::new(py);
    d.set_item("code", row.code)?;
    d.set_item("decoder", row.decoder)?;
    d.set_item("p", row.p)?;
    d.set_item("shots", row.shots)?;
    d.set_item("failures", row.failures)?;
    d.set_item("ler", row.ler)?;
    d.set_item("ci_lo", row.ci_lo)?;
    d.set_item("ci_hi", row.ci_hi)?;
    d.set_item("latency_s", row.latency_s)?;
    d.set_item("task_sd", row.task_sd)?;
    Ok(d)
}

#[pymodule]
fn gnd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GndError", m.py().get_type::<GndError>())?;
    m.add_class::<PyCode>()?;
    m.add_class::<PyDem>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyDecoder>()?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_ler, m)?)?;
    Ok(())
}
