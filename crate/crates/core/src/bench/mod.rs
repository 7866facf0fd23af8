//! Monte Carlo logical error rates, sweeps and result files.

mod io;
mod plot;
mod sweep;
mod target;

pub use io::{read_csv, read_json, write_csv, write_json};
pub use plot::{render_svg, write_svg};
pub use sweep::{sweep, BenchTarget, SweepConfig, SweepOutcome};
pub use target::{StandardTarget, Workload};

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoders::Decoder;
use crate::error::{Error, Result};
use crate::noise::{LabeledSample, SampleSource};
use crate::rng::{stream_rng, Purpose};

/// Shots drawn from one random stream.
pub const SHOT_CHUNK: usize = 1024;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `failures` out of `shots` at normal quantile `z`.
pub fn wilson_interval(failures: u64, shots: u64, z: f64) -> (f64, f64) {
    if shots == 0 {
        return (0.0, 1.0);
    }
    let n = shots as f64;
    let phat = failures as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // clamp so the interval always contains the point estimate despite rounding
    ((centre - half).max(0.0).min(phat), (centre + half).min(1.0).max(phat))
}

/// One `(decoder, p)` point of a benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub code: String,
    pub decoder: String,
    pub p: f64,
    pub shots: u64,
    pub failures: u64,
    pub ler: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Mean decode-only wall time per shot, seconds.
    pub latency_s: f64,
    /// Sample standard deviation of the per-task LERs (0 for one task).
    pub task_sd: f64,
}

/// Shots split into `tasks` independent repetitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub tasks: usize,
    pub shots_per_task: usize,
    pub seed: u64,
}

impl EstimateOptions {
    pub fn new(tasks: usize, shots_per_task: usize, seed: u64) -> Self {
        Self {
            tasks,
            shots_per_task,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LerEstimate {
    pub failures: u64,
    pub shots: u64,
    pub task_lers: Vec<f64>,
    /// Mean decode-only wall time per shot, seconds.
    pub latency_s: f64,
}

struct ChunkTally {
    task: usize,
    failures: u64,
    decode_time: Duration,
}

/// Samples `(beta, gamma)` pairs, decodes `gamma` and counts any-bit sector
/// mismatches. Chunk `c` of task `t` uses evaluation stream `t << 32 | c`, so
/// counts do not depend on the worker count.
pub fn estimate_ler(
    source: &dyn SampleSource,
    decoder: &dyn Decoder,
    opts: EstimateOptions,
) -> Result<LerEstimate> {
    if decoder.syndrome_len() != source.syndrome_len() {
        return Err(Error::Dimension {
            expected: source.syndrome_len(),
            found: decoder.syndrome_len(),
        });
    }
    if decoder.sector_len() != source.sector_len() {
        return Err(Error::Dimension {
            expected: source.sector_len(),
            found: decoder.sector_len(),
        });
    }
    if opts.tasks == 0 || opts.shots_per_task == 0 {
        return Err(Error::InvalidParameter("tasks and shots must be at least 1".into()));
    }
    let chunks_per_task = opts.shots_per_task.div_ceil(SHOT_CHUNK);
    let jobs: Vec<(usize, usize)> = (0..opts.tasks)
        .flat_map(|t| (0..chunks_per_task).map(move |c| (t, c)))
        .collect();
    let tallies: Vec<ChunkTally> = jobs
        .par_iter()
        .map(|&(t, c)| {
            let mut rng = stream_rng(opts.seed, Purpose::Evaluation, ((t as u64) << 32) | c as u64);
            let len = SHOT_CHUNK.min(opts.shots_per_task - c * SHOT_CHUNK);
            let samples: Vec<LabeledSample> = (0..len).map(|_| source.draw(&mut rng)).collect();
            let gammas: Vec<_> = samples.iter().map(|s| s.gamma.clone()).collect();
            let start = Instant::now();
            let betas = decoder.decode_batch(&gammas)?;
            let decode_time = start.elapsed();
            let failures = samples
                .iter()
                .zip(&betas)
                .filter(|(s, b)| &s.beta != *b)
                .count() as u64;
            Ok(ChunkTally {
                task: t,
                failures,
                decode_time,
            })
        })
        .collect::<Result<_>>()?;

    let mut per_task = vec![0u64; opts.tasks];
    let mut decode_time = Duration::ZERO;
    for t in &tallies {
        per_task[t.task] += t.failures;
        decode_time += t.decode_time;
    }
    let shots = (opts.tasks * opts.shots_per_task) as u64;
    let failures = per_task.iter().sum();
    let task_lers = per_task
        .iter()
        .map(|&f| f as f64 / opts.shots_per_task as f64)
        .collect();
    Ok(LerEstimate {
        failures,
        shots,
        task_lers,
        latency_s: decode_time.as_secs_f64() / shots as f64,
    })
}

/// [`estimate_ler`] packaged as a result row.
pub fn bench_point(
    code: &str,
    p: f64,
    source: &dyn SampleSource,
    decoder: &dyn Decoder,
    opts: EstimateOptions,
) -> Result<BenchRow> {
    let LerEstimate {
        failures,
        shots,
        task_lers,
        latency_s,
    } = estimate_ler(source, decoder, opts)?;
    let (ci_lo, ci_hi) = wilson_interval(failures, shots, Z95);
    Ok(BenchRow {
        code: code.to_string(),
        decoder: decoder.name().to_string(),
        p,
        shots,
        failures,
        ler: failures as f64 / shots as f64,
        ci_lo,
        ci_hi,
        latency_s,
        task_sd: sample_sd(&task_lers),
    })
}

fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{rotated_surface_code, trivial_code, ElsFrame};
    use crate::gf2::BinaryVector;
    use crate::noise::{CodeCapacitySource, NoiseModel};
    use rand::{Rng, SeedableRng};
    use std::sync::Mutex;

    struct Constant(usize, usize);

    impl Decoder for Constant {
        fn name(&self) -> &str {
            "zero"
        }
        fn syndrome_len(&self) -> usize {
            self.0
        }
        fn sector_len(&self) -> usize {
            self.1
        }
        fn decode(&self, _: &BinaryVector) -> Result<BinaryVector> {
            Ok(BinaryVector::zeros(self.1))
        }
    }

    struct Uniform(Mutex<rand_chacha::ChaCha8Rng>);

    impl Decoder for Uniform {
        fn name(&self) -> &str {
            "uniform"
        }
        fn syndrome_len(&self) -> usize {
            8
        }
        fn sector_len(&self) -> usize {
            2
        }
        fn decode(&self, _: &BinaryVector) -> Result<BinaryVector> {
            let mut rng = self.0.lock().unwrap();
            Ok(BinaryVector::from_bits([rng.random::<bool>(), rng.random::<bool>()]))
        }
    }

    #[test]
    fn noiseless_source_never_fails() {
        let frame = ElsFrame::build(&rotated_surface_code(3).unwrap()).unwrap();
        let src = CodeCapacitySource::new(frame, NoiseModel::depolarizing(0.0).unwrap()).unwrap();
        let row = bench_point("rsc3", 0.0, &src, &Constant(8, 2), EstimateOptions::new(2, 3000, 1))
            .unwrap();
        assert_eq!((row.failures, row.shots, row.ler), (0, 6000, 0.0));
        assert!(row.ci_lo == 0.0 && row.ci_hi > 0.0);
    }

    #[test]
    fn uniform_guess_fails_three_quarters() {
        let frame = ElsFrame::build(&rotated_surface_code(3).unwrap()).unwrap();
        let src = CodeCapacitySource::new(frame, NoiseModel::depolarizing(0.1).unwrap()).unwrap();
        let dec = Uniform(Mutex::new(rand_chacha::ChaCha8Rng::seed_from_u64(3)));
        let row = bench_point("rsc3", 0.1, &src, &dec, EstimateOptions::new(4, 5000, 2)).unwrap();
        assert!(row.ci_lo <= 0.75 && 0.75 <= row.ci_hi, "{row:?}");
    }

    #[test]
    fn counts_independent_of_threads() {
        let frame = ElsFrame::build(&rotated_surface_code(3).unwrap()).unwrap();
        let src = CodeCapacitySource::new(frame, NoiseModel::depolarizing(0.1).unwrap()).unwrap();
        let opts = EstimateOptions::new(3, 2500, 9);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_ler(&src, &Constant(8, 2), opts).unwrap())
        };
        let (a, b) = (run(1), run(3));
        assert_eq!((a.failures, &a.task_lers), (b.failures, &b.task_lers));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let src = CodeCapacitySource::new(
            ElsFrame::build(&trivial_code(2)).unwrap(),
            NoiseModel::depolarizing(0.1).unwrap(),
        )
        .unwrap();
        assert!(estimate_ler(&src, &Constant(8, 2), EstimateOptions::new(1, 10, 0)).is_err());
    }

    #[test]
    fn wilson_coverage() {
        // Bernoulli(q) "decoder": coverage over 1000 repetitions near 95%
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for &(q, n) in &[(0.3, 200u64), (0.02, 2000), (0.5, 50)] {
            let mut covered = 0;
            for _ in 0..1000 {
                let f = (0..n).filter(|_| rng.random::<f64>() < q).count() as u64;
                let (lo, hi) = wilson_interval(f, n, Z95);
                if lo <= q && q <= hi {
                    covered += 1;
                }
            }
            assert!((920..=980).contains(&covered), "q={q} n={n}: {covered}");
        }
    }

    #[test]
    fn wilson_contains_estimate() {
        for (f, n) in [(0, 10), (10, 10), (3, 7), (1, 100000)] {
            let (lo, hi) = wilson_interval(f, n, Z95);
            let ph = f as f64 / n as f64;
            assert!(lo <= ph && ph <= hi && lo >= 0.0 && hi <= 1.0);
        }
    }
}
