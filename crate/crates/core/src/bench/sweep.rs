//! Decoder x error-rate sweeps with a resumable run directory:
//! `run.json`, `rows/<id>.json`, `result.csv`, `plot.svg`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{bench_point, write_csv, write_svg, BenchRow, EstimateOptions};
use crate::decoders::Decoder;
use crate::error::{Error, Result};
use crate::noise::SampleSource;
use crate::rng::{stream_rng, Purpose};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Label written into every row.
    pub code: String,
    pub error_rates: Vec<f64>,
    pub decoders: Vec<String>,
    pub tasks: usize,
    pub shots_per_task: usize,
    pub seed: u64,
    /// Opaque description of what is being benchmarked (paths, noise
    /// model); compared when resuming.
    #[serde(default)]
    pub target: serde_json::Value,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tasks == 0 || self.shots_per_task == 0 {
            return Err(Error::InvalidParameter("tasks and shots must be at least 1".into()));
        }
        if let Some(p) = self.error_rates.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::InvalidParameter(format!("error rate {p} outside (0, 1)")));
        }
        Ok(())
    }
}

/// Builds the sample source and decoders for each error rate.
pub trait BenchTarget: Sync {
    fn source(&self, p: f64) -> Result<Box<dyn SampleSource>>;
    fn decoder(&self, name: &str, p: f64) -> Result<Arc<dyn Decoder>>;
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutcome {
    /// Completed rows, decoders in config order, then by error rate.
    pub rows: Vec<BenchRow>,
    /// `(decoder, p, message)` for points that failed.
    pub failed: Vec<(String, f64, String)>,
}

/// All decoders at one error rate see the same sampled errors.
fn point_seed(seed: u64, p: f64) -> u64 {
    stream_rng(seed, Purpose::Evaluation, p.to_bits()).next_u64()
}

fn row_id(decoder: &str, p: f64) -> String {
    let clean: String = decoder
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    format!("{clean}-p{p:e}")
}

pub fn sweep(
    config: &SweepConfig,
    target: &dyn BenchTarget,
    run_dir: Option<&Path>,
) -> Result<SweepOutcome> {
    config.validate()?;
    if let Some(dir) = run_dir {
        prepare_run_dir(config, dir)?;
    }
    let mut out = SweepOutcome::default();
    for name in &config.decoders {
        for &p in &config.error_rates {
            let id = row_id(name, p);
            if let Some(dir) = run_dir {
                let done = dir.join("rows").join(format!("{id}.json"));
                if let Ok(text) = fs::read_to_string(&done) {
                    if let Ok(row) = serde_json::from_str::<BenchRow>(&text) {
                        log::info!("{id}: already complete, skipping");
                        out.rows.push(row);
                        continue;
                    }
                }
            }
            let opts = EstimateOptions::new(config.tasks, config.shots_per_task, point_seed(config.seed, p));
            let result = target.source(p).and_then(|src| {
                let dec = target.decoder(name, p)?;
                let mut row = bench_point(&config.code, p, src.as_ref(), dec.as_ref(), opts)?;
                row.decoder = name.clone();
                Ok(row)
            });
            match result {
                Ok(row) => {
                    log::info!("{id}: {} / {} failures, LER {:.3e}", row.failures, row.shots, row.ler);
                    if let Some(dir) = run_dir {
                        let path = dir.join("rows").join(format!("{id}.json"));
                        fs::write(&path, serde_json::to_string_pretty(&row)?)
                            .map_err(|e| Error::io(&path, e))?;
                    }
                    out.rows.push(row);
                }
                Err(e) => {
                    log::warn!("{id}: failed: {e}");
                    out.failed.push((name.clone(), p, e.to_string()));
                }
            }
        }
    }
    if let Some(dir) = run_dir {
        write_csv(&out.rows, dir.join("result.csv"))?;
        if !out.rows.is_empty() {
            write_svg(&out.rows, &config.code, dir.join("plot.svg"))?;
        }
    }
    Ok(out)
}

fn prepare_run_dir(config: &SweepConfig, dir: &Path) -> Result<()> {
    let rows = dir.join("rows");
    fs::create_dir_all(&rows).map_err(|e| Error::io(&rows, e))?;
    let run = dir.join("run.json");
    match fs::read_to_string(&run) {
        Ok(text) => {
            let previous: SweepConfig = serde_json::from_str(&text)?;
            if &previous != config {
                return Err(Error::InvalidParameter(format!(
                    "{} holds a different configuration; use a fresh run directory",
                    run.display()
                )));
            }
            Ok(())
        }
        Err(_) => fs::write(&run, serde_json::to_string_pretty(config)?).map_err(|e| Error::io(&run, e)),
    }
}
