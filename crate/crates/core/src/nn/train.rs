use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{AdamState, MadeNetwork, MndNetwork, Mlp, Scalar};
use crate::error::{Error, Result};
use crate::noise::{sample_batch_streamed, SampleSource};
use crate::rng::Purpose;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub train_steps: usize,
    pub seed: u64,
    /// Loss-curve resolution in steps.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 512,
            train_steps: 10_000,
            seed: 0,
            log_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.log_every == 0 {
            return Err(Error::InvalidParameter(
                "batch size and log interval must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Loss recorded every `log_every` steps.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    /// 1-based step index at which each entry was logged.
    pub steps: Vec<usize>,
    /// Mean minibatch loss over the preceding window.
    pub window_mean: Vec<f64>,
    /// Exponential moving average of the minibatch loss (decay 0.99, bias
    /// corrected).
    pub smoothed: Vec<f64>,
    /// Loss of the very first minibatch, before any update.
    pub initial: Option<f64>,
}

impl LossCurve {
    pub fn final_smoothed(&self) -> Option<f64> {
        self.smoothed.last().copied()
    }

    /// Smoothed loss at the first logged step `>= step`.
    pub fn smoothed_at(&self, step: usize) -> Option<f64> {
        self.steps
            .iter()
            .position(|&s| s >= step)
            .map(|i| self.smoothed[i])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,loss,smoothed\n");
        for i in 0..self.steps.len() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.steps[i], self.window_mean[i], self.smoothed[i]
            ));
        }
        out
    }
}

/// A network trainable on `(gamma, beta)` minibatches.
pub trait Trainable<T: Scalar> {
    fn mlp(&self) -> &Mlp<T>;
    fn mlp_mut(&mut self) -> &mut Mlp<T>;
    fn n_syndrome(&self) -> usize;
    fn n_sector(&self) -> usize;
    fn train_config(&self) -> &TrainConfig;
    /// Splits a `[gamma | beta]` batch into network inputs and targets.
    fn split<'a>(&self, bits: &'a Array2<T>) -> (ArrayView2<'a, T>, ArrayView2<'a, T>);
}

impl<T: Scalar> Trainable<T> for MadeNetwork<T> {
    fn mlp(&self) -> &Mlp<T> {
        &self.mlp
    }
    fn mlp_mut(&mut self) -> &mut Mlp<T> {
        &mut self.mlp
    }
    fn n_syndrome(&self) -> usize {
        self.config.n_syndrome
    }
    fn n_sector(&self) -> usize {
        self.config.n_sector
    }
    fn train_config(&self) -> &TrainConfig {
        &self.config.train
    }
    fn split<'a>(&self, bits: &'a Array2<T>) -> (ArrayView2<'a, T>, ArrayView2<'a, T>) {
        (bits.view(), bits.view())
    }
}

impl<T: Scalar> Trainable<T> for MndNetwork<T> {
    fn mlp(&self) -> &Mlp<T> {
        &self.mlp
    }
    fn mlp_mut(&mut self) -> &mut Mlp<T> {
        &mut self.mlp
    }
    fn n_syndrome(&self) -> usize {
        self.config.n_syndrome
    }
    fn n_sector(&self) -> usize {
        self.config.n_sector
    }
    fn train_config(&self) -> &TrainConfig {
        &self.config.train
    }
    fn split<'a>(&self, bits: &'a Array2<T>) -> (ArrayView2<'a, T>, ArrayView2<'a, T>) {
        let m = self.config.n_syndrome;
        (bits.slice(s![.., ..m]), bits.slice(s![.., m..]))
    }
}

/// On-line training with fresh samples every step. Minibatch `t` is drawn
/// from training streams keyed by `(seed, t)`, so the result does not depend
/// on the thread count. `progress(step, smoothed_loss)` fires at each log
/// point.
pub fn train<T: Scalar, M: Trainable<T>>(
    model: &mut M,
    source: &dyn SampleSource,
    mut progress: impl FnMut(usize, f64),
) -> Result<LossCurve> {
    let cfg = model.train_config().clone();
    cfg.validate()?;
    if source.syndrome_len() != model.n_syndrome() {
        return Err(Error::Dimension {
            expected: model.n_syndrome(),
            found: source.syndrome_len(),
        });
    }
    if source.sector_len() != model.n_sector() {
        return Err(Error::Dimension {
            expected: model.n_sector(),
            found: source.sector_len(),
        });
    }
    let mut adam = AdamState::new(model.mlp());
    let mut curve = LossCurve::default();
    let decay: f64 = 0.99;
    let mut ema = 0.0;
    let mut window = 0.0;
    let mut window_len = 0usize;
    for step in 0..cfg.train_steps {
        let bits: Array2<T> =
            sample_batch_streamed(source, cfg.seed, Purpose::Training, step as u64, cfg.batch_size);
        let (x, y) = model.split(&bits);
        let (loss, grads) = model.mlp().loss_and_grad(x, y);
        if step == 0 {
            curve.initial = Some(loss);
        }
        adam.step(model.mlp_mut(), &grads, cfg.learning_rate);

        ema = decay * ema + (1.0 - decay) * loss;
        window += loss;
        window_len += 1;
        let done = step + 1;
        if done % cfg.log_every == 0 || done == cfg.train_steps {
            let smoothed = ema / (1.0 - decay.powi(done as i32));
            curve.steps.push(done);
            curve.window_mean.push(window / window_len as f64);
            curve.smoothed.push(smoothed);
            window = 0.0;
            window_len = 0;
            progress(done, smoothed);
        }
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{rotated_surface_code, ElsFrame};
    use crate::nn::{MadeConfig, MndConfig};
    use crate::noise::{CodeCapacitySource, NoiseModel};

    fn d3_source(p: f64) -> CodeCapacitySource {
        let frame = ElsFrame::build(&rotated_surface_code(3).unwrap()).unwrap();
        CodeCapacitySource::new(frame, NoiseModel::depolarizing(p).unwrap()).unwrap()
    }

    fn small_cfg(steps: usize) -> MadeConfig {
        let mut cfg = MadeConfig::new(8, 2, 1, 2);
        cfg.train.train_steps = steps;
        cfg.train.batch_size = 64;
        cfg.train.log_every = 10;
        cfg.train.learning_rate = 1e-2;
        cfg
    }

    #[test]
    fn training_is_deterministic() {
        let src = d3_source(0.1);
        let mut a = MadeNetwork::<f64>::new(small_cfg(20)).unwrap();
        let mut b = a.clone();
        let ca = train(&mut a, &src, |_, _| {}).unwrap();
        let cb = train(&mut b, &src, |_, _| {}).unwrap();
        assert_eq!(a, b);
        assert_eq!(ca, cb);
        assert_eq!(ca.steps, vec![10, 20]);
    }

    #[test]
    fn zero_noise_drives_loss_to_zero() {
        let src = d3_source(0.0);
        let mut cfg = small_cfg(500);
        cfg.train.learning_rate = 0.1;
        let mut net = MadeNetwork::<f64>::new(cfg).unwrap();
        let curve = train(&mut net, &src, |_, _| {}).unwrap();
        assert!(curve.window_mean.last().unwrap() < &0.05, "{curve:?}");
    }

    #[test]
    fn zero_steps_leaves_init() {
        let src = d3_source(0.1);
        let mut net = MadeNetwork::<f64>::new(small_cfg(0)).unwrap();
        let before = net.clone();
        let curve = train(&mut net, &src, |_, _| {}).unwrap();
        assert_eq!(net, before);
        assert!(curve.steps.is_empty());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let src = d3_source(0.1);
        let mut net = MadeNetwork::<f64>::new(MadeConfig::new(7, 2, 1, 1)).unwrap();
        assert!(matches!(
            train(&mut net, &src, |_, _| {}),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn mnd_learns_something() {
        let src = d3_source(0.1);
        let mut net = MndNetwork::<f64>::new(MndConfig::matching(&small_cfg(200))).unwrap();
        let curve = train(&mut net, &src, |_, _| {}).unwrap();
        assert!(curve.final_smoothed().unwrap() < curve.initial.unwrap());
    }
}
