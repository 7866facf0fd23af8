use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};

use gnd_core::bench::{self, BenchRow, StandardTarget, SweepConfig, Workload};
use gnd_core::code::{
    bb_code, brute_distance_of_kind, defected_surface_code, load_code_file, rotated_surface_code,
    write_qcode, BbTerm, Distance, DistanceKind, ElsFrame, StabilizerCode,
};
use gnd_core::decoders::{decoder_from_checkpoint, Decoder, GndDecoder};
use gnd_core::dem::{load_dem_file, parse_dem, serialize_dem};
use gnd_core::gf2::BinaryVector;
use gnd_core::nn::{
    load_checkpoint, save_checkpoint, train as train_model, LoadedModel, MadeConfig, MadeNetwork,
    MndConfig, MndNetwork, Precision, Scalar,
};
use gnd_core::noise::{NoiseModel, SampleSource};
use gnd_core::rng::{entropy_seed, stream_rng, Purpose};
use gnd_core::Error as CoreError;

use crate::{
    usage, BenchArgs, CodeCommand, DecodeArgs, DemCommand, DistanceArg, Family, ModelArg,
    NoiseArg, Outcome, PlotArgs, PrecisionArg, SampleArgs, SourceArgs, TrainArgs,
};

/// Core errors caused by bad arguments are usage errors.
fn classify(e: CoreError) -> crate::Failure {
    match e {
        CoreError::InvalidParameter(msg) => usage(msg),
        other => other.into(),
    }
}

fn write_or_print(text: &str, output: Option<&Path>) -> Outcome {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

/// `rsc<d>` names a rotated surface code; anything else is a QCODE path.
fn load_code(spec: &str) -> Result<StabilizerCode, crate::Failure> {
    if let Some(d) = spec.strip_prefix("rsc").and_then(|d| d.parse::<usize>().ok()) {
        if !Path::new(spec).exists() {
            return rotated_surface_code(d).map_err(classify);
        }
    }
    Ok(load_code_file(spec).with_context(|| format!("loading code {spec}"))?)
}

fn seed_or_fresh(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = entropy_seed();
        eprintln!("seed: {s}");
        s
    })
}

fn noise_model(kind: NoiseArg, p: f64) -> Result<NoiseModel, crate::Failure> {
    match kind {
        NoiseArg::Depolarizing => NoiseModel::depolarizing(p),
        NoiseArg::Xz => NoiseModel::independent_xz(p),
    }
    .map_err(classify)
}

fn workload(source: &SourceArgs, p: Option<f64>) -> Result<Workload, crate::Failure> {
    match (&source.code, &source.dem) {
        (Some(code), None) => {
            let frame = ElsFrame::build(&load_code(code)?)?;
            let p = p.unwrap_or(0.1);
            let noise = noise_model(source.noise.unwrap_or(NoiseArg::Depolarizing), p)?;
            Ok(Workload::CodeCapacity { frame, noise })
        }
        (None, Some(dem)) => Ok(Workload::Dem(
            load_dem_file(dem).with_context(|| format!("loading {}", dem.display()))?,
        )),
        _ => Err(usage("exactly one of --code or --dem is required")),
    }
}

pub fn code(cmd: CodeCommand) -> Outcome {
    match cmd {
        CodeCommand::Gen { family } => {
            let (code, output) = match family {
                Family::RotatedSurface { d, output } => {
                    if d < 3 || d.is_multiple_of(2) {
                        return Err(usage(format!("--d must be odd and at least 3, got {d}")));
                    }
                    (rotated_surface_code(d).map_err(classify)?, output)
                }
                Family::Bb { l, m, a, b, output } => {
                    let terms = |v: &[String]| -> Result<Vec<BbTerm>, crate::Failure> {
                        v.iter().map(|t| t.parse().map_err(classify)).collect()
                    };
                    (bb_code(l, m, &terms(&a)?, &terms(&b)?).map_err(classify)?, output)
                }
                Family::Defected { d, defects, output } => {
                    let corners = defects
                        .iter()
                        .map(|s| {
                            let (r, c) = s
                                .split_once(':')
                                .ok_or_else(|| usage(format!("defect {s:?} is not row:col")))?;
                            let parse = |x: &str| {
                                x.parse::<usize>()
                                    .map_err(|_| usage(format!("defect {s:?} is not row:col")))
                            };
                            Ok((parse(r)?, parse(c)?))
                        })
                        .collect::<Result<Vec<_>, crate::Failure>>()?;
                    (defected_surface_code(d, &corners).map_err(classify)?, output)
                }
            };
            write_or_print(&write_qcode(&code), output.as_deref())
        }
        CodeCommand::Info { file } => {
            let code = load_code(&file.to_string_lossy())?;
            let d = code.distance().map_or("?".to_string(), |d| d.to_string());
            println!("[[{},{},{}]]", code.n(), code.k(), d);
            println!("name: {}", code.name());
            println!("n: {}", code.n());
            println!("k: {}", code.k());
            println!("m: {}", code.m());
            println!("css: {}", code.is_css());
            println!(
                "max check weight: {}",
                code.stabilizers().iter().map(|s| s.weight()).max().unwrap_or(0)
            );
            println!("fingerprint: {}", code.fingerprint());
            Ok(())
        }
        CodeCommand::Validate { file } => {
            let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            match gnd_core::code::parse_qcode(&text, &file.to_string_lossy()) {
                Ok(code) => {
                    println!("ok: [[{},{}]], {} independent commuting generators", code.n(), code.k(), code.m());
                    Ok(())
                }
                Err(CoreError::InvalidCode(violations)) => {
                    for v in &violations {
                        println!("violation: {v}");
                    }
                    Err(anyhow!("{} violation(s)", violations.len()).into())
                }
                Err(e) => Err(e.into()),
            }
        }
        CodeCommand::Distance { file, max_weight, kind } => {
            let code = load_code(&file.to_string_lossy())?;
            let kind = match kind {
                DistanceArg::Full => DistanceKind::Full,
                DistanceArg::X => DistanceKind::XOnly,
                DistanceArg::Z => DistanceKind::ZOnly,
            };
            match brute_distance_of_kind(&code, max_weight, kind)? {
                Distance::Exact(d) => println!("{d}"),
                Distance::Unknown => println!("> {max_weight}"),
            }
            Ok(())
        }
    }
}

pub fn dem(cmd: DemCommand) -> Outcome {
    let DemCommand::Check { file, output } = cmd;
    let dem = load_dem_file(&file).with_context(|| format!("loading {}", file.display()))?;
    dem.validate()?;
    let text = serialize_dem(&dem);
    let again = parse_dem(&text)?;
    if again != dem {
        return Err(anyhow!("serialized model does not parse back to the same mechanisms").into());
    }
    println!(
        "{} mechanisms, {} detectors, {} observables",
        dem.mechanisms.len(),
        dem.num_detectors,
        dem.num_observables
    );
    println!("fingerprint: {}", dem.fingerprint());
    if let Some(path) = output {
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

pub fn sample(a: SampleArgs) -> Outcome {
    let work = workload(&a.source, a.p)?;
    if matches!(work, Workload::CodeCapacity { .. }) && a.p.is_none() {
        return Err(usage("--p is required with --code"));
    }
    let seed = seed_or_fresh(a.seed);
    let src = work.source(a.p.unwrap_or(0.0).max(0.0))?;
    let mut rng = stream_rng(seed, Purpose::Sampling, 0);
    let mut out = format!("# seed {seed}\n# syndrome sector\n");
    for _ in 0..a.shots {
        let s = src.draw(&mut rng);
        out.push_str(&format!("{} {}\n", bits(&s.gamma), bits(&s.beta)));
    }
    write_or_print(&out, a.output.as_deref())
}

fn bits(v: &BinaryVector) -> String {
    v.iter().map(|b| if b { '1' } else { '0' }).collect()
}

/// Everything `train` accepts, as read from `--config`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainFile {
    code: Option<String>,
    dem: Option<PathBuf>,
    noise: Option<NoiseArg>,
    p: Option<f64>,
    model: Option<ModelArg>,
    depth: Option<usize>,
    width: Option<usize>,
    steps: Option<usize>,
    batch: Option<usize>,
    lr: Option<f64>,
    seed: Option<u64>,
    precision: Option<PrecisionArg>,
    log_every: Option<usize>,
    output: Option<PathBuf>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, crate::Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn train(a: TrainArgs) -> Outcome {
    let file: TrainFile = match &a.config {
        Some(path) => read_json(path)?,
        None => TrainFile::default(),
    };
    let source = SourceArgs {
        code: a.source.code.or(file.code),
        dem: a.source.dem.or(file.dem),
        noise: a.source.noise.or(file.noise),
    };
    if source.code.is_some() && source.dem.is_some() {
        return Err(usage("--code and --dem are mutually exclusive"));
    }
    let p = a.p.or(file.p);
    let work = workload(&source, p)?;
    if matches!(work, Workload::CodeCapacity { .. }) && p.is_none() {
        return Err(usage("--p is required with --code"));
    }
    let output = a
        .output
        .or(file.output)
        .ok_or_else(|| usage("-o/--output checkpoint path is required"))?;
    let src = work.source(p.unwrap_or(0.0))?;

    let mut cfg = MadeConfig::new(
        src.syndrome_len(),
        src.sector_len(),
        a.depth.or(file.depth).unwrap_or(3),
        a.width.or(file.width).unwrap_or(10),
    );
    cfg.precision = match a.precision.or(file.precision).unwrap_or(PrecisionArg::F64) {
        PrecisionArg::F64 => Precision::Double,
        PrecisionArg::F32 => Precision::Single,
    };
    cfg.train.train_steps = a.steps.or(file.steps).unwrap_or(10_000);
    cfg.train.batch_size = a.batch.or(file.batch).unwrap_or(512);
    cfg.train.learning_rate = a.lr.or(file.lr).unwrap_or(1e-3);
    cfg.train.log_every = a.log_every.or(file.log_every).unwrap_or(100);
    cfg.train.seed = seed_or_fresh(a.seed.or(file.seed));
    cfg.validate().map_err(classify)?;
    let fp = src.fingerprint();
    let model = a.model.or(file.model).unwrap_or(ModelArg::Made);

    let progress = |step: usize, loss: f64| eprintln!("step {step:>8}  loss {loss:.6}");
    let curve = match (model, cfg.precision) {
        (ModelArg::Made, Precision::Double) => {
            fit_made::<f64>(&cfg, src.as_ref(), &fp, &output, progress)?
        }
        (ModelArg::Made, Precision::Single) => {
            fit_made::<f32>(&cfg, src.as_ref(), &fp, &output, progress)?
        }
        (ModelArg::Mnd, Precision::Double) => {
            fit_mnd::<f64>(&cfg, src.as_ref(), &fp, &output, progress)?
        }
        (ModelArg::Mnd, Precision::Single) => {
            fit_mnd::<f32>(&cfg, src.as_ref(), &fp, &output, progress)?
        }
    };
    let curve_path = loss_curve_path(&output);
    fs::write(&curve_path, curve.to_csv())
        .with_context(|| format!("writing {}", curve_path.display()))?;
    eprintln!("wrote {} and {}", output.display(), curve_path.display());
    Ok(())
}

fn loss_curve_path(ckpt: &Path) -> PathBuf {
    let mut name = ckpt.file_name().unwrap_or_default().to_os_string();
    name.push(".loss.csv");
    ckpt.with_file_name(name)
}

fn fit_made<T: Scalar>(
    cfg: &MadeConfig,
    src: &dyn SampleSource,
    fp: &str,
    output: &Path,
    progress: impl FnMut(usize, f64),
) -> anyhow::Result<gnd_core::nn::LossCurve> {
    let mut net = MadeNetwork::<T>::new(cfg.clone())?.with_fingerprint(fp);
    eprintln!("MADE: {} inputs, {} parameters", net.n_in(), net.num_parameters());
    let curve = train_model(&mut net, src, progress)?;
    save_checkpoint(&net, output)?;
    Ok(curve)
}

fn fit_mnd<T: Scalar>(
    cfg: &MadeConfig,
    src: &dyn SampleSource,
    fp: &str,
    output: &Path,
    progress: impl FnMut(usize, f64),
) -> anyhow::Result<gnd_core::nn::LossCurve> {
    let mut mcfg = MndConfig::matching(cfg);
    mcfg.precision = cfg.precision;
    let mut net = MndNetwork::<T>::new(mcfg)?.with_fingerprint(fp);
    eprintln!("MND: {} parameters", net.num_parameters());
    let curve = train_model(&mut net, src, progress)?;
    save_checkpoint(&net, output)?;
    Ok(curve)
}

fn parse_bit_line(line: &str, len: usize) -> anyhow::Result<BinaryVector> {
    let bits: Vec<bool> = line
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(anyhow!("invalid bit {other:?} in syndrome line")),
        })
        .collect::<anyhow::Result<_>>()?;
    if bits.len() != len {
        return Err(anyhow!("syndrome line has {} bits, expected {len}", bits.len()));
    }
    Ok(BinaryVector::from_bits(bits))
}

pub fn decode(a: DecodeArgs) -> Outcome {
    let expected = if a.source.code.is_some() || a.source.dem.is_some() {
        Some(workload(&a.source, None)?.fingerprint())
    } else {
        None
    };
    let model = load_checkpoint(&a.ckpt, expected.as_deref())
        .with_context(|| format!("loading {}", a.ckpt.display()))?;
    let (m, k2) = match &model {
        LoadedModel::MadeF64(n) => (n.n_syndrome(), n.n_sector()),
        LoadedModel::MadeF32(n) => (n.n_syndrome(), n.n_sector()),
        LoadedModel::MndF64(n) => (n.config.n_syndrome, n.config.n_sector),
        LoadedModel::MndF32(n) => (n.config.n_syndrome, n.config.n_sector),
    };
    let gammas: Vec<BinaryVector> = match (&a.syndrome, &a.syndrome_file) {
        (Some(hex), None) => vec![BinaryVector::from_hex(hex, m)?],
        (None, Some(path)) => fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| parse_bit_line(l, m))
            .collect::<anyhow::Result<_>>()?,
        _ => return Err(usage("one of --syndrome or --syndrome-file is required")),
    };
    println!("# syndrome beta_hat conditionals");
    match model {
        LoadedModel::MadeF64(net) => print_gnd(GndDecoder::new(net, None)?, &gammas)?,
        LoadedModel::MadeF32(net) => print_gnd(GndDecoder::new(net, None)?, &gammas)?,
        other => {
            let dec = decoder_from_checkpoint(other, None)?;
            for g in &gammas {
                println!("{} {} -", g.to_hex(), bits(&dec.decode(g)?));
            }
        }
    }
    log::info!("decoded {} syndromes, {k2} sector bits each", gammas.len());
    Ok(())
}

fn print_gnd<T: Scalar>(dec: GndDecoder<T>, gammas: &[BinaryVector]) -> Outcome {
    for g in gammas {
        let r = dec.decode_detailed(g)?;
        let cond = r
            .conditionals
            .unwrap_or_default()
            .iter()
            .map(|c| format!("{c:.6}"))
            .collect::<Vec<_>>()
            .join(",");
        println!("{} {} {}", g.to_hex(), bits(&r.beta_hat), cond);
    }
    Ok(())
}

/// JSON schema of `bench --config`; every field may be overridden by a flag.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchFile {
    code: Option<String>,
    dem: Option<PathBuf>,
    noise: Option<NoiseArg>,
    p: Option<Vec<f64>>,
    decoders: Option<Vec<String>>,
    gnd_ckpt: Option<PathBuf>,
    mnd_ckpt: Option<PathBuf>,
    tasks: Option<usize>,
    shots: Option<usize>,
    seed: Option<u64>,
    label: Option<String>,
    out: Option<PathBuf>,
}

pub fn bench(a: BenchArgs) -> Outcome {
    let file: BenchFile = match &a.config {
        Some(path) => read_json(path)?,
        None => BenchFile::default(),
    };
    let source = SourceArgs {
        code: a.source.code.or(file.code),
        dem: a.source.dem.or(file.dem),
        noise: a.source.noise.or(file.noise),
    };
    if source.code.is_some() && source.dem.is_some() {
        return Err(usage("--code and --dem are mutually exclusive"));
    }
    let rates = a.p.or(file.p).ok_or_else(|| usage("--p is required"))?;
    let decoders = a
        .decoders
        .or(file.decoders)
        .unwrap_or_else(|| vec!["mld".into()]);
    let work = workload(&source, rates.first().copied())?;
    let fp = work.fingerprint();
    let mut target = StandardTarget::new(work);
    if let Some(path) = a.gnd_ckpt.or(file.gnd_ckpt) {
        target.gnd = Some(load_decoder(&path, &fp)?);
    }
    if let Some(path) = a.mnd_ckpt.or(file.mnd_ckpt) {
        target.mnd = Some(load_decoder(&path, &fp)?);
    }
    let label = a
        .label
        .or(file.label)
        .or_else(|| source.code.clone())
        .or_else(|| source.dem.as_ref().map(|d| d.display().to_string()))
        .unwrap_or_default();
    let seed = seed_or_fresh(a.seed.or(file.seed));
    let config = SweepConfig {
        code: label,
        error_rates: rates,
        decoders,
        tasks: a.tasks.or(file.tasks).unwrap_or(1),
        shots_per_task: a.shots.or(file.shots).unwrap_or(10_000),
        seed,
        target: serde_json::json!({
            "code": source.code,
            "dem": source.dem,
            "noise": source.noise.unwrap_or(NoiseArg::Depolarizing),
            "fingerprint": fp,
        }),
    };
    config.validate().map_err(classify)?;
    let out = a.out.or(file.out).unwrap_or_else(|| PathBuf::from("bench-run"));
    let outcome = bench::sweep(&config, &target, Some(&out))?;
    print_table(&outcome.rows)?;
    for (dec, p, msg) in &outcome.failed {
        eprintln!("failed: {dec} at p={p}: {msg}");
    }
    eprintln!("results in {}", out.display());
    if outcome.failed.is_empty() {
        Ok(())
    } else {
        Err(anyhow!("{} point(s) failed", outcome.failed.len()).into())
    }
}

fn load_decoder(path: &Path, fp: &str) -> Result<Arc<dyn Decoder>, crate::Failure> {
    let model =
        load_checkpoint(path, Some(fp)).with_context(|| format!("loading {}", path.display()))?;
    Ok(decoder_from_checkpoint(model, Some(fp))?)
}

fn print_table(rows: &[BenchRow]) -> Outcome {
    let mut out = std::io::stdout().lock();
    writeln!(out, "decoder\tp\tshots\tfailures\tler\tci_lo\tci_hi\tlatency_s")?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.4e}\t{:.4e}\t{:.4e}\t{:.3e}",
            r.decoder, r.p, r.shots, r.failures, r.ler, r.ci_lo, r.ci_hi, r.latency_s
        )?;
    }
    Ok(())
}

pub fn plot(a: PlotArgs) -> Outcome {
    let rows = bench::read_csv(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    if rows.is_empty() {
        return Err(anyhow!("{} has no result rows", a.input.display()).into());
    }
    bench::write_svg(&rows, &a.title, &a.output)?;
    Ok(())
}
