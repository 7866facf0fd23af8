//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines come out in order.
//! Every tolerance, seed and budget is a constant below.

use std::path::{Path, PathBuf};
use std::time::Instant;

use gnd_core::bench::{bench_point, EstimateOptions};
use gnd_core::code::{load_code_file, rotated_surface_code, ElsConfig, ElsFrame, StabilizerCode};
use gnd_core::decoders::{
    bp_min_sum, osd_postprocess, BinaryProblem, Decoder, ExactMld, GndDecoder, MndDecoder,
    OsdMode, DEFAULT_BP_ITERS, DEFAULT_BP_NORM, DEFAULT_OSD_ORDER, MLD_TIE_TOL,
};
use gnd_core::dem::{load_dem_file, parse_dem, serialize_dem, DetectorErrorModel};
use gnd_core::gf2::BinaryVector;
use gnd_core::nn::{train, MadeConfig, MadeNetwork, MndConfig, MndNetwork, Precision};
use gnd_core::noise::{sample_dem, CodeCapacitySource, DemSource, NoiseModel, SampleSource};
use gnd_core::pauli::PauliOperator;
use gnd_core::rng::{stream_rng, Purpose};
use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;

// 1
const ROUND_TRIPS: usize = 10_000;
const ROUND_TRIP_SECONDS: f64 = 10.0;
// 2
const MLD_ORACLE_RATES: [f64; 2] = [0.05, 0.1];
const MLD_ORACLE_SECONDS: f64 = 300.0;
// 3
const FD_STEP: f64 = 1e-5;
const FD_MAX_REL_ERR: f64 = 1e-5;
/// Gradients smaller than this are compared on an absolute scale.
const FD_FLOOR: f64 = 1e-4;
// 4
const CAUSALITY_INPUTS: usize = 100;
// 5
const NORMALIZATION_TOL: f64 = 1e-10;
// 6
const TRAIN_P_SURFACE: f64 = 0.189;
const EVAL_P_D3: f64 = 0.1;
const D3_SHOTS: usize = 100_000;
const D3_LER_RATIO_MAX: f64 = 1.10;
const D3_AGREEMENT_MIN: f64 = 0.99;
const D3_TRAIN_MINUTES: f64 = 30.0;
// 7
const TRAIN_P_BB: f64 = 0.1;
const BB_TASKS: usize = 10;
const BB_SHOTS_PER_TASK: usize = 100_000;
const PARAM_BUDGET_REL_TOL: f64 = 0.05;
// 8
const OSD_TRIALS: usize = 100_000;
const OSD_TRIAL_P: f64 = 0.05;
const BPOSD_VS_MLD_P: f64 = 0.05;
const BPOSD_VS_MLD_SHOTS: usize = 20_000;
// 9
const MONOTONE_RATES: [f64; 4] = [0.02, 0.05, 0.10, 0.15];
const MONOTONE_SHOTS: usize = 100_000;
const D5_EVAL_P: f64 = 0.05;
// 10
const DEM_SHOTS: usize = 1_000_000;
const DEM_SIGMAS: f64 = 3.0;
const DEM_TRAIN_STEPS: usize = 2_000;
const DEM_TRAIN_STEP_LIMIT: usize = 10_000;
// 11
const PASS_COUNT_SYNDROMES: usize = 1_000;
/// Per-syndrome GPU decode times of 2M-67M parameter networks, an
/// order-of-magnitude reference only.
const REFERENCE_LATENCY_S: (f64, f64) = (8.5e-4, 9.3e-3);

const SEED: u64 = 20_240_501;

type Outcome = Result<(bool, String), String>;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn frame_of(code: &StabilizerCode) -> ElsFrame {
    ElsFrame::build(code).expect("frame")
}

fn depolarizing(p: f64) -> NoiseModel {
    NoiseModel::depolarizing(p).expect("noise")
}

fn random_bits<R: Rng>(n: usize, rng: &mut R) -> BinaryVector {
    BinaryVector::from_bits((0..n).map(|_| rng.random::<bool>()))
}

// ---------------------------------------------------------------- oracles

/// Pauli string characters; commutation is checked on letters directly.
fn letters(p: &PauliOperator) -> Vec<u8> {
    p.to_string().into_bytes()
}

fn anticommute(a: &[u8], b: &[u8]) -> bool {
    a.iter()
        .zip(b)
        .filter(|(&x, &y)| x != b'I' && y != b'I' && x != y)
        .count()
        % 2
        == 1
}

/// Exhaustive MLD over all `4^n` Paulis for every syndrome. Returns, per
/// syndrome index, the chosen sector index.
fn brute_force_mld(frame: &ElsFrame, p: f64) -> Vec<u64> {
    let n = frame.n();
    let stabs: Vec<Vec<u8>> = frame.stabilizers().iter().map(letters).collect();
    let logs: Vec<Vec<u8>> = frame.logicals().iter().map(letters).collect();
    let k2 = logs.len();
    let m = stabs.len();
    let mut table = vec![vec![0.0f64; 1 << k2]; 1 << m];
    let alphabet = *b"IXYZ";
    let mut e = vec![b'I'; n];
    for idx in 0..4usize.pow(n as u32) {
        let mut r = idx;
        let mut weight = 0;
        for q in e.iter_mut() {
            *q = alphabet[r % 4];
            weight += usize::from(r % 4 != 0);
            r /= 4;
        }
        let prob = (p / 3.0).powi(weight as i32) * (1.0 - p).powi((n - weight) as i32);
        let gamma = stabs
            .iter()
            .enumerate()
            .fold(0usize, |acc, (j, s)| acc | (usize::from(anticommute(&e, s)) << j));
        // sector bit 2i pairs with l_i^z, bit 2i+1 with l_i^x
        let beta = (0..k2).fold(0usize, |acc, s| {
            acc | (usize::from(anticommute(&e, &logs[s ^ 1])) << s)
        });
        table[gamma][beta] += prob;
    }
    table
        .iter()
        .map(|row| {
            let max = row.iter().copied().fold(0.0, f64::max);
            (0..row.len() as u64)
                .filter(|&b| row[b as usize] >= max / (1.0 + MLD_TIE_TOL))
                .min_by_key(|&b| (0..k2).map(|i| (b >> i) & 1).collect::<Vec<_>>())
                .unwrap()
        })
        .collect()
}

/// P(detector fires) for independent mechanisms: (1 - prod(1 - 2 p_i)) / 2.
fn xor_marginals(dem: &DetectorErrorModel) -> Vec<f64> {
    let mut prod = vec![1.0f64; dem.num_detectors];
    for mech in &dem.mechanisms {
        for &d in &mech.detectors {
            prod[d] *= 1.0 - 2.0 * mech.probability;
        }
    }
    prod.iter().map(|q| (1.0 - q) / 2.0).collect()
}

// ---------------------------------------------------------------- criteria

fn els_round_trip() -> Outcome {
    let codes = [
        ("[[9,1,3]]", rotated_surface_code(3).map_err(|e| e.to_string())?),
        ("bb_18_4_4", load_code_file(data("codes/bb_18_4_4.qcode")).map_err(|e| e.to_string())?),
        ("qldpc_30_6_4", load_code_file(data("codes/qldpc_30_6_4.qcode")).map_err(|e| e.to_string())?),
    ];
    let start = Instant::now();
    let mut failures = 0usize;
    for (i, (_, code)) in codes.iter().enumerate() {
        let frame = frame_of(code);
        let (n, m, k) = (frame.n(), frame.m(), frame.k());
        let mut rng = stream_rng(SEED, Purpose::Generic, i as u64);
        for _ in 0..ROUND_TRIPS {
            let e = PauliOperator::from_symplectic(&random_bits(2 * n, &mut rng)).unwrap();
            let cfg = frame.decompose(&e).unwrap();
            if frame.compose(&cfg).unwrap() != e {
                failures += 1;
            }
            let cfg = ElsConfig {
                alpha: random_bits(m, &mut rng),
                beta: random_bits(2 * k, &mut rng),
                gamma: random_bits(m, &mut rng),
            };
            if frame.decompose(&frame.compose(&cfg).unwrap()).unwrap() != cfg {
                failures += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let names: Vec<_> = codes.iter().map(|(n, _)| *n).collect();
    Ok((
        failures == 0 && secs < ROUND_TRIP_SECONDS,
        format!(
            "{} codes ({}), {ROUND_TRIPS} Paulis + {ROUND_TRIPS} configurations each, {failures} mismatches, {secs:.2}s (limit {ROUND_TRIP_SECONDS}s)",
            codes.len(),
            names.join(", ")
        ),
    ))
}

fn mld_oracle() -> Outcome {
    let frame = frame_of(&rotated_surface_code(3).unwrap());
    let start = Instant::now();
    let mut mismatches = 0;
    let mut checked = 0;
    for &p in &MLD_ORACLE_RATES {
        let oracle = brute_force_mld(&frame, p);
        let mld = ExactMld::new(frame.clone(), depolarizing(p)).unwrap();
        for (s, &want) in oracle.iter().enumerate() {
            let got = mld.decode(&BinaryVector::from_u64(frame.m(), s as u64)).unwrap();
            checked += 1;
            if got.to_u64() != want {
                mismatches += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        mismatches == 0 && secs < MLD_ORACLE_SECONDS,
        format!(
            "[[9,1,3]] at p in {MLD_ORACLE_RATES:?}: {checked} syndromes vs 4^9-Pauli enumeration, {mismatches} mismatches, {secs:.1}s"
        ),
    ))
}

fn toy_net(m: usize, k2: usize, depth: usize, width: usize, seed: u64) -> MadeNetwork<f64> {
    let mut cfg = MadeConfig::new(m, k2, depth, width);
    cfg.train.seed = seed;
    let mut net = MadeNetwork::<f64>::new(cfg).unwrap();
    // non-zero biases so every parameter gets a generic gradient
    let mut rng = stream_rng(seed, Purpose::Generic, 99);
    for layer in &mut net.mlp.layers {
        layer.bias.mapv_inplace(|_| rng.random::<f64>() - 0.5);
    }
    net
}

fn gradient_check() -> Outcome {
    let net = toy_net(8, 4, 3, 2, SEED);
    let n_in = net.n_in();
    let mut rng = stream_rng(SEED, Purpose::Generic, 3);
    let x = Array2::from_shape_fn((32, n_in), |_| f64::from(u8::from(rng.random::<bool>())));
    let (_, g) = net.mlp.loss_and_grad(x.view(), x.view());
    let mut probe = net.clone();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(FD_FLOOR);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let fd = |probe: &mut MadeNetwork<f64>, set: &dyn Fn(&mut MadeNetwork<f64>, f64), v0: f64| {
        set(probe, v0 + FD_STEP);
        let up = probe.mlp.loss(x.view(), x.view());
        set(probe, v0 - FD_STEP);
        let down = probe.mlp.loss(x.view(), x.view());
        set(probe, v0);
        (up - down) / (2.0 * FD_STEP)
    };
    for l in 0..net.mlp.layers.len() {
        let (rows, cols) = net.mlp.layers[l].weight.dim();
        for r in 0..rows {
            for c in 0..cols {
                if net.mlp.layers[l].mask.as_ref().unwrap()[[r, c]] == 0.0 {
                    continue;
                }
                let v0 = net.mlp.layers[l].weight[[r, c]];
                let num = fd(&mut probe, &|p, v| p.mlp.layers[l].weight[[r, c]] = v, v0);
                worst = worst.max(rel(g.weight[l][[r, c]], num));
                count += 1;
            }
        }
        for r in 0..net.mlp.layers[l].bias.len() {
            let v0 = net.mlp.layers[l].bias[r];
            let num = fd(&mut probe, &|p, v| p.mlp.layers[l].bias[r] = v, v0);
            worst = worst.max(rel(g.bias[l][r], num));
            count += 1;
        }
    }
    Ok((
        worst < FD_MAX_REL_ERR,
        format!("n_in={n_in}, depth 3, {count} parameters, max relative error {worst:.2e} (limit {FD_MAX_REL_ERR:e}, step {FD_STEP:e})"),
    ))
}

fn causality() -> Outcome {
    let net = toy_net(8, 4, 3, 3, SEED + 1);
    let n = net.n_in();
    let mut rng = stream_rng(SEED, Purpose::Generic, 4);
    let mut violations = 0;
    for _ in 0..CAUSALITY_INPUTS {
        let x = Array2::from_shape_fn((1, n), |_| f64::from(u8::from(rng.random::<bool>())));
        let base = net.mlp.logits(x.view());
        for j in 0..n {
            let mut y = x.clone();
            y[[0, j]] = 1.0 - y[[0, j]];
            let out = net.mlp.logits(y.view());
            violations += (0..=j).filter(|&i| out[[0, i]] != base[[0, i]]).count();
        }
    }
    Ok((
        violations == 0,
        format!("{CAUSALITY_INPUTS} inputs x {n} positions, {violations} outputs at positions <= j changed"),
    ))
}

fn normalization() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut shapes = Vec::new();
    for (i, &(m, k2, depth, width)) in [(8, 4, 3, 2), (5, 2, 1, 3), (10, 2, 2, 1)].iter().enumerate() {
        let net = toy_net(m, k2, depth, width, SEED + 10 + i as u64);
        let n = net.n_in();
        let x = Array2::from_shape_fn((1 << n, n), |(r, c)| ((r >> c) & 1) as f64);
        let probs = net.forward_batch(x.view());
        let total: f64 = (0..1usize << n)
            .map(|r| {
                (0..n)
                    .map(|c| if x[[r, c]] == 1.0 { probs[[r, c]] } else { 1.0 - probs[[r, c]] })
                    .product::<f64>()
            })
            .sum();
        worst = worst.max((total - 1.0).abs());
        shapes.push(format!("n_in={n}"));
    }
    Ok((
        worst < NORMALIZATION_TOL,
        format!("{}: max |sum - 1| = {worst:.2e} (limit {NORMALIZATION_TOL:e})", shapes.join(", ")),
    ))
}

fn train_made(
    source: &dyn SampleSource,
    depth: usize,
    width: usize,
    steps: usize,
    lr: f64,
    precision: Precision,
    seed: u64,
) -> MadeConfig {
    let mut cfg = MadeConfig::new(source.syndrome_len(), source.sector_len(), depth, width);
    cfg.train.train_steps = steps;
    cfg.train.batch_size = 512;
    cfg.train.learning_rate = lr;
    cfg.train.seed = seed;
    cfg.train.log_every = (steps / 10).max(1);
    cfg.precision = precision;
    cfg
}

fn gnd_matches_mld() -> Outcome {
    let frame = frame_of(&rotated_surface_code(3).unwrap());
    let train_src = CodeCapacitySource::new(frame.clone(), depolarizing(TRAIN_P_SURFACE)).unwrap();
    let cfg = train_made(&train_src, 2, 10, 3_000, 1e-3, Precision::Double, SEED);
    let start = Instant::now();
    let mut net = MadeNetwork::<f64>::new(cfg).unwrap();
    train(&mut net, &train_src, |_, _| {}).map_err(|e| e.to_string())?;
    let minutes = start.elapsed().as_secs_f64() / 60.0;
    let gnd = GndDecoder::new(net, None).unwrap();

    let eval = CodeCapacitySource::new(frame.clone(), depolarizing(EVAL_P_D3)).unwrap();
    let mld = ExactMld::new(frame.clone(), depolarizing(EVAL_P_D3)).unwrap();
    let opts = EstimateOptions::new(1, D3_SHOTS, SEED);
    let g = bench_point("rsc3", EVAL_P_D3, &eval, &gnd, opts).unwrap();
    let m = bench_point("rsc3", EVAL_P_D3, &eval, &mld, opts).unwrap();
    let ratio = g.ler / m.ler;

    // agreement: the GND sector attains the maximal coset probability
    let mut rng = stream_rng(SEED, Purpose::Generic, 6);
    let gammas: Vec<_> = (0..D3_SHOTS).map(|_| eval.draw(&mut rng).gamma).collect();
    let betas = gnd.decode_batch(&gammas).unwrap();
    let tol = (1.0 + MLD_TIE_TOL).ln();
    let (mut optimal, mut identical) = (0usize, 0usize);
    for (gamma, beta) in gammas.iter().zip(&betas) {
        let (best, table) = mld.decode_with_table(gamma).unwrap();
        let max = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        optimal += usize::from(table[beta.to_u64() as usize] >= max - tol);
        identical += usize::from(&best == beta);
    }
    let agreement = optimal as f64 / D3_SHOTS as f64;
    Ok((
        ratio <= D3_LER_RATIO_MAX && agreement >= D3_AGREEMENT_MIN && minutes <= D3_TRAIN_MINUTES,
        format!(
            "p={EVAL_P_D3}, {D3_SHOTS} shots: GND {:.5} vs MLD {:.5}, ratio {ratio:.3} (limit {D3_LER_RATIO_MAX}); MLD-optimal sector on {:.2}% of syndromes (limit {:.0}%), identical label {:.2}%; training {minutes:.1} min",
            g.ler,
            m.ler,
            100.0 * agreement,
            100.0 * D3_AGREEMENT_MIN,
            100.0 * identical as f64 / D3_SHOTS as f64
        ),
    ))
}

struct BbModels {
    frame: ElsFrame,
    gnd: GndDecoder<f32>,
}

fn gnd_beats_mnd() -> Result<((bool, String), BbModels), String> {
    let code = load_code_file(data("codes/bb_18_4_4.qcode")).map_err(|e| e.to_string())?;
    let frame = frame_of(&code);
    let src = CodeCapacitySource::new(frame.clone(), depolarizing(TRAIN_P_BB)).unwrap();
    let cfg = train_made(&src, 3, 10, 20_000, 3e-3, Precision::Single, SEED);
    let mcfg = MndConfig::matching(&cfg);
    let mut made = MadeNetwork::<f32>::new(cfg.clone()).unwrap();
    let mut mnd = MndNetwork::<f32>::new(mcfg.clone()).unwrap();
    let (pm, pn) = (made.num_parameters(), mnd.num_parameters());
    let start = Instant::now();
    let lm = train(&mut made, &src, |_, _| {}).map_err(|e| e.to_string())?;
    let ln = train(&mut mnd, &src, |_, _| {}).map_err(|e| e.to_string())?;
    let train_min = start.elapsed().as_secs_f64() / 60.0;
    let gnd = GndDecoder::new(made, None).unwrap();
    let mndd = MndDecoder::new(mnd, None).unwrap();
    let opts = EstimateOptions::new(BB_TASKS, BB_SHOTS_PER_TASK, SEED);
    let g = bench_point("bb18", TRAIN_P_BB, &src, &gnd, opts).unwrap();
    let m = bench_point("bb18", TRAIN_P_BB, &src, &mndd, opts).unwrap();
    let budget_gap = (pm as f64 - pn as f64).abs() / pm as f64;
    let pass = g.ci_hi < m.ci_lo && budget_gap <= PARAM_BUDGET_REL_TOL && cfg.train.train_steps == mcfg.train.train_steps;
    let line = format!(
        "[[18,4,4]] at p={TRAIN_P_BB}, {BB_TASKS}x{BB_SHOTS_PER_TASK} shots: GND {:.4} [{:.4}, {:.4}] vs MND {:.4} [{:.4}, {:.4}]; parameters {pm} vs {pn} (gap {:.1}%, limit {:.0}%), {} steps each, final NLL {:.4} vs {:.4}, training {train_min:.1} min",
        g.ler,
        g.ci_lo,
        g.ci_hi,
        m.ler,
        m.ci_lo,
        m.ci_hi,
        100.0 * budget_gap,
        100.0 * PARAM_BUDGET_REL_TOL,
        cfg.train.train_steps,
        lm.final_smoothed().unwrap_or(f64::NAN),
        ln.final_smoothed().unwrap_or(f64::NAN),
    );
    Ok(((pass, line), BbModels { frame, gnd }))
}

fn bposd_sanity() -> Outcome {
    let mut bad = 0usize;
    let mut total = 0usize;
    let mut names = Vec::new();
    for file in ["bb_18_4_4.qcode", "qldpc_30_6_4.qcode", "defected_rsc7_k4.qcode"] {
        let frame = frame_of(&load_code_file(data(&format!("codes/{file}"))).map_err(|e| e.to_string())?);
        let model = depolarizing(OSD_TRIAL_P);
        let problem = BinaryProblem::from_code(&frame, &model).unwrap();
        let n = frame.n();
        let chunks = OSD_TRIALS.div_ceil(1000);
        let failures: usize = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream_rng(SEED, Purpose::Generic, 800 + c as u64);
                let mut bad = 0;
                for _ in 0..1000.min(OSD_TRIALS - c * 1000) {
                    let e = model.sample(n, &mut rng);
                    let gamma = frame.syndrome(&e).unwrap();
                    let bp = bp_min_sum(&problem, &gamma, DEFAULT_BP_ITERS, DEFAULT_BP_NORM).unwrap();
                    let est = osd_postprocess(&problem, &gamma, &bp.posterior, DEFAULT_OSD_ORDER, OsdMode::CombinationSweep)
                        .unwrap();
                    // estimate is [e_x | e_z]; check it as a Pauli against the frame
                    let pauli = PauliOperator::from_symplectic(&est).unwrap();
                    bad += usize::from(frame.syndrome(&pauli).unwrap() != gamma);
                }
                bad
            })
            .sum();
        bad += failures;
        total += OSD_TRIALS;
        names.push(file.trim_end_matches(".qcode"));
    }

    let frame = frame_of(&load_code_file(data("codes/bb_18_4_4.qcode")).unwrap());
    let model = depolarizing(BPOSD_VS_MLD_P);
    let src = CodeCapacitySource::new(frame.clone(), model).unwrap();
    let opts = EstimateOptions::new(1, BPOSD_VS_MLD_SHOTS, SEED);
    let mld = ExactMld::new(frame.clone(), model).unwrap();
    let bposd = gnd_core::decoders::BpOsdDecoder::new(BinaryProblem::from_code(&frame, &model).unwrap());
    let m = bench_point("bb18", BPOSD_VS_MLD_P, &src, &mld, opts).unwrap();
    let b = bench_point("bb18", BPOSD_VS_MLD_P, &src, &bposd, opts).unwrap();
    Ok((
        bad == 0 && b.ler >= m.ler,
        format!(
            "OSD satisfied the syndrome in {}/{total} trials ({}); [[18,4,4]] at p={BPOSD_VS_MLD_P}, {BPOSD_VS_MLD_SHOTS} shots: BP+OSD {:.4} >= MLD {:.4}",
            total - bad,
            names.join(", "),
            b.ler,
            m.ler
        ),
    ))
}

fn monotonicity() -> Outcome {
    let frame3 = frame_of(&rotated_surface_code(3).unwrap());
    let opts = EstimateOptions::new(1, MONOTONE_SHOTS, SEED);
    let mut lers = Vec::new();
    for &p in &MONOTONE_RATES {
        let src = CodeCapacitySource::new(frame3.clone(), depolarizing(p)).unwrap();
        let mld = ExactMld::new(frame3.clone(), depolarizing(p)).unwrap();
        lers.push(bench_point("rsc3", p, &src, &mld, opts).unwrap().ler);
    }
    let monotone = lers.windows(2).all(|w| w[0] < w[1]);
    let d3_at = lers[MONOTONE_RATES.iter().position(|&p| p == D5_EVAL_P).unwrap()];

    let frame5 = frame_of(&rotated_surface_code(5).unwrap());
    let train_src = CodeCapacitySource::new(frame5.clone(), depolarizing(TRAIN_P_SURFACE)).unwrap();
    let cfg = train_made(&train_src, 3, 10, 10_000, 1e-3, Precision::Single, SEED);
    let mut net = MadeNetwork::<f32>::new(cfg).unwrap();
    let start = Instant::now();
    train(&mut net, &train_src, |_, _| {}).map_err(|e| e.to_string())?;
    let minutes = start.elapsed().as_secs_f64() / 60.0;
    let gnd = GndDecoder::new(net, None).unwrap();
    let eval = CodeCapacitySource::new(frame5, depolarizing(D5_EVAL_P)).unwrap();
    let g5 = bench_point("rsc5", D5_EVAL_P, &eval, &gnd, opts).unwrap();
    let lers_txt: Vec<_> = lers.iter().map(|l| format!("{l:.5}")).collect();
    Ok((
        monotone && g5.ler < d3_at,
        format!(
            "d=3 MLD LER over p={MONOTONE_RATES:?}: [{}] ({}); d=5 GND (trained once at p={TRAIN_P_SURFACE}, {minutes:.1} min) at p={D5_EVAL_P}: {:.5} < d=3 MLD {d3_at:.5}",
            lers_txt.join(", "),
            if monotone { "increasing" } else { "NOT increasing" },
            g5.ler
        ),
    ))
}

fn dem_path() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for file in ["repetition_d3_r3.dem", "surface_d3_r3.dem"] {
        let dem = load_dem_file(data(&format!("dem/{file}"))).map_err(|e| e.to_string())?;
        let again = parse_dem(&serialize_dem(&dem)).map_err(|e| e.to_string())?;
        let round_trip = again == dem;
        let want = xor_marginals(&dem);
        let chunks = DEM_SHOTS.div_ceil(10_000);
        let counts = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream_rng(SEED, Purpose::Generic, 1000 + c as u64);
                let mut counts = vec![0u64; dem.num_detectors];
                for _ in 0..10_000.min(DEM_SHOTS - c * 10_000) {
                    for d in sample_dem(&dem, &mut rng).gamma.iter_ones() {
                        counts[d] += 1;
                    }
                }
                counts
            })
            .reduce(
                || vec![0u64; dem.num_detectors],
                |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
            );
        let n = DEM_SHOTS as f64;
        let worst_z = want
            .iter()
            .zip(&counts)
            .map(|(&q, &c)| {
                let sd = (q * (1.0 - q) / n).sqrt();
                if sd == 0.0 {
                    if c == 0 { 0.0 } else { f64::INFINITY }
                } else {
                    (c as f64 / n - q).abs() / sd
                }
            })
            .fold(0.0, f64::max);
        pass &= round_trip && worst_z <= DEM_SIGMAS;
        notes.push(format!(
            "{file}: round trip {}, max marginal deviation {worst_z:.2} sigma",
            if round_trip { "identical" } else { "DIFFERS" }
        ));
    }

    let dem = load_dem_file(data("dem/repetition_d3_r3.dem")).unwrap();
    let bits = dem.num_detectors + dem.num_observables;
    let src = DemSource::new(dem).unwrap();
    let cfg = train_made(&src, 2, 10, DEM_TRAIN_STEPS, 1e-3, Precision::Double, SEED);
    let mut net = MadeNetwork::<f64>::new(cfg).unwrap();
    let curve = train(&mut net, &src, |_, _| {}).map_err(|e| e.to_string())?;
    let nll = curve.final_smoothed().unwrap_or(f64::INFINITY);
    let uniform = bits as f64 * std::f64::consts::LN_2;
    pass &= nll < uniform && DEM_TRAIN_STEPS <= DEM_TRAIN_STEP_LIMIT;
    notes.push(format!(
        "GND on repetition_d3_r3 after {DEM_TRAIN_STEPS} steps: smoothed NLL {nll:.4} < uniform {uniform:.4}"
    ));
    Ok((pass, notes.join("; ")))
}

fn decode_cost(models: Option<&BbModels>) -> Outcome {
    let Some(BbModels { frame, gnd }) = models else {
        return Err("no trained [[18,4,4]] model (criterion 7 did not run)".into());
    };
    let k = frame.k();
    let src = CodeCapacitySource::new(frame.clone(), depolarizing(TRAIN_P_BB)).unwrap();
    let mut rng = stream_rng(SEED, Purpose::Generic, 11);
    let gammas: Vec<_> = (0..PASS_COUNT_SYNDROMES).map(|_| src.draw(&mut rng).gamma).collect();
    gnd.reset_counters();
    gnd.decode_batch(&gammas).unwrap();
    let batch_passes = gnd.forward_passes();
    gnd.reset_counters();
    for g in gammas.iter().take(100) {
        gnd.decode(g).unwrap();
    }
    let single_passes = gnd.forward_passes();
    let expected = (2 * k * PASS_COUNT_SYNDROMES) as u64;
    let row = bench_point("bb18", TRAIN_P_BB, &src, gnd, EstimateOptions::new(1, 20_000, SEED)).unwrap();
    Ok((
        batch_passes == expected && single_passes == (2 * k * 100) as u64,
        format!(
            "k={k}: {batch_passes} passes for {PASS_COUNT_SYNDROMES} batched syndromes (expected {expected}), {single_passes} for 100 single decodes; mean latency {:.2e} s/syndrome on this CPU (reference range for much larger GPU models {:.1e}-{:.1e} s)",
            row.latency_s, REFERENCE_LATENCY_S.0, REFERENCE_LATENCY_S.1
        ),
    ))
}

fn report(id: usize, title: &str, start: Instant, outcome: Outcome) -> bool {
    let secs = start.elapsed().as_secs_f64();
    let (ok, detail) = match outcome {
        Ok((ok, detail)) => (ok, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!("[{}] {id:>2}. {title}: {detail} [{secs:.1}s]", if ok { "PASS" } else { "FAIL" });
    ok
}

fn main() {
    // `cargo test -- <filter>` passes arguments; a filter that does not
    // mention acceptance skips the suite
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    // ACCEPTANCE_ONLY=6,9 runs a subset (7 is implied by 11)
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let wanted = |id: usize| only.as_ref().is_none_or(|o| o.contains(&id) || (id == 7 && o.contains(&11)));
    println!("acceptance suite");
    let mut results = Vec::new();
    macro_rules! run {
        ($id:expr, $title:expr, $f:expr) => {{
            if wanted($id) {
                let t = Instant::now();
                results.push(report($id, $title, t, $f));
            }
        }};
    }
    run!(1, "ELS round trip", els_round_trip());
    run!(2, "exact MLD vs exhaustive enumeration", mld_oracle());
    run!(3, "MADE gradient check", gradient_check());
    run!(4, "MADE causality", causality());
    run!(5, "autoregressive normalization", normalization());
    run!(6, "GND tracks exact MLD on [[9,1,3]]", gnd_matches_mld());
    let t = Instant::now();
    let bb = if wanted(7) {
        match gnd_beats_mnd() {
            Ok((line, models)) => {
                results.push(report(7, "GND beats MND", t, Ok(line)));
                Some(models)
            }
            Err(e) => {
                results.push(report(7, "GND beats MND", t, Err(e)));
                None
            }
        }
    } else {
        None
    };
    run!(8, "BP+OSD sanity", bposd_sanity());
    run!(9, "monotonicity and distance gain", monotonicity());
    run!(10, "DEM path", dem_path());
    run!(11, "decode-cost contract", decode_cost(bb.as_ref()));
    let passed = results.iter().filter(|&&r| r).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
