//! Exact maximum-likelihood decoding by coset enumeration.
//!
//! For every sector `beta` the coset `{ g^alpha l^beta e^gamma }` is walked in
//! Gray-code order over `alpha`, one stabilizer multiplication per step. Under
//! both supported i.i.d. models `P(E)` depends on a single integer statistic
//! (Pauli weight for depolarizing noise, `|x| + |z|` for independent X/Z), so
//! each coset is summarized by a histogram of that statistic and its
//! probability is a log-sum-exp over the histogram. Histograms do not depend
//! on `p` and are cached per syndrome.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use super::{check_len, Decoder};
use crate::code::{ElsConfig, ElsFrame};
use crate::error::{Error, Result};
use crate::gf2::BinaryVector;
use crate::noise::NoiseModel;

/// Largest `2^m * 4^k` enumeration accepted by default.
pub const DEFAULT_MLD_BUDGET: u128 = 1 << 30;

/// Sectors whose coset probabilities agree to this relative tolerance are
/// treated as tied; the lexicographically smallest one wins.
pub const MLD_TIE_TOL: f64 = 1e-9;

/// Cached histograms are dropped beyond this many syndromes.
const CACHE_LIMIT: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Statistic {
    Weight,
    XPlusZ,
}

impl Statistic {
    fn of(model: &NoiseModel) -> Self {
        match model {
            NoiseModel::Depolarizing { .. } => Statistic::Weight,
            NoiseModel::IndependentXz { .. } => Statistic::XPlusZ,
        }
    }

    fn max(self, n: usize) -> usize {
        match self {
            Statistic::Weight => n,
            Statistic::XPlusZ => 2 * n,
        }
    }

    /// `log P(E)` as a function of the statistic `s`.
    fn log_term(self, model: &NoiseModel, n: usize, s: usize) -> f64 {
        let p = model.p();
        let (hit, miss, total) = match self {
            Statistic::Weight => (p / 3.0, 1.0 - p, n),
            Statistic::XPlusZ => (p, 1.0 - p, 2 * n),
        };
        xlogy(s, hit) + xlogy(total - s, miss)
    }
}

/// `c * ln(x)` with `0 * ln(0) = 0`.
fn xlogy(c: usize, x: f64) -> f64 {
    if c == 0 {
        0.0
    } else {
        c as f64 * x.ln()
    }
}

type Histograms = Arc<Vec<Vec<u64>>>;

/// Exact MLD for a frame and an i.i.d. noise model.
#[derive(Clone, Debug)]
pub struct ExactMld {
    frame: ElsFrame,
    model: NoiseModel,
    budget: u128,
    cache: Arc<RwLock<HashMap<BinaryVector, Histograms>>>,
    name: String,
}

impl ExactMld {
    pub fn new(frame: ElsFrame, model: NoiseModel) -> Result<Self> {
        Self::with_budget(frame, model, DEFAULT_MLD_BUDGET)
    }

    /// Refuses codes whose enumeration `2^m * 4^k` exceeds `budget`.
    pub fn with_budget(frame: ElsFrame, model: NoiseModel, budget: u128) -> Result<Self> {
        model.validate()?;
        let required = Self::required_budget(&frame);
        if required > budget {
            return Err(Error::BudgetExceeded { required, budget });
        }
        Ok(Self {
            frame,
            model,
            budget,
            cache: Arc::default(),
            name: "mld".into(),
        })
    }

    /// `2^m * 4^k`, saturating.
    pub fn required_budget(frame: &ElsFrame) -> u128 {
        let bits = frame.m() + 2 * frame.k();
        if bits >= 128 {
            u128::MAX
        } else {
            1u128 << bits
        }
    }

    /// Same code and cache, different noise model of the same family.
    pub fn with_model(&self, model: NoiseModel) -> Result<Self> {
        model.validate()?;
        let mut out = self.clone();
        if Statistic::of(&model) != Statistic::of(&self.model) {
            out.cache = Arc::default();
        }
        out.model = model;
        Ok(out)
    }

    pub fn frame(&self) -> &ElsFrame {
        &self.frame
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    pub fn budget(&self) -> u128 {
        self.budget
    }

    /// `log sum_alpha P(alpha, beta, gamma)` for every `beta`, indexed by
    /// `beta.to_u64()`.
    pub fn coset_log_probs(&self, gamma: &BinaryVector) -> Result<Vec<f64>> {
        check_len(gamma, self.frame.m())?;
        let hist = self.histograms(gamma);
        let stat = Statistic::of(&self.model);
        let n = self.frame.n();
        let terms: Vec<f64> = (0..=stat.max(n))
            .map(|s| stat.log_term(&self.model, n, s))
            .collect();
        Ok(hist
            .iter()
            .map(|h| {
                log_sum_exp(
                    h.iter()
                        .zip(&terms)
                        .filter(|(&c, _)| c > 0)
                        .map(|(&c, &t)| (c as f64).ln() + t),
                )
            })
            .collect())
    }

    /// Chosen sector index and the full table of coset log-probabilities.
    pub fn decode_with_table(&self, gamma: &BinaryVector) -> Result<(BinaryVector, Vec<f64>)> {
        let table = self.coset_log_probs(gamma)?;
        let beta = argmax_lexicographic(&table, 2 * self.frame.k());
        Ok((beta, table))
    }

    fn histograms(&self, gamma: &BinaryVector) -> Histograms {
        if let Some(h) = self.cache.read().expect("cache lock").get(gamma) {
            return h.clone();
        }
        let h = Arc::new(self.enumerate(gamma));
        let mut cache = self.cache.write().expect("cache lock");
        if cache.len() < CACHE_LIMIT {
            cache.insert(gamma.clone(), h.clone());
        }
        h
    }

    fn enumerate(&self, gamma: &BinaryVector) -> Vec<Vec<u64>> {
        let (n, m, k2) = (self.frame.n(), self.frame.m(), 2 * self.frame.k());
        let stat = Statistic::of(&self.model);
        let words = n.div_ceil(64).max(1);
        let gens: Vec<(Vec<u64>, Vec<u64>)> = self
            .frame
            .stabilizers()
            .iter()
            .map(|g| (pad(g.x_part().words(), words), pad(g.z_part().words(), words)))
            .collect();
        let mut out = Vec::with_capacity(1 << k2);
        for b in 0..1u64 << k2 {
            let base = self
                .frame
                .compose(&ElsConfig {
                    alpha: BinaryVector::zeros(m),
                    beta: BinaryVector::from_u64(k2, b),
                    gamma: gamma.clone(),
                })
                .expect("dimensions checked");
            let mut x = pad(base.x_part().words(), words);
            let mut z = pad(base.z_part().words(), words);
            let mut hist = vec![0u64; stat.max(n) + 1];
            if words == 1 {
                walk_single_word(x[0], z[0], &gens, m, stat, &mut hist);
                out.push(hist);
                continue;
            }
            let measure = |x: &[u64], z: &[u64]| -> usize {
                match stat {
                    Statistic::Weight => x
                        .iter()
                        .zip(z)
                        .map(|(a, b)| (a | b).count_ones() as usize)
                        .sum(),
                    Statistic::XPlusZ => x
                        .iter()
                        .chain(z)
                        .map(|a| a.count_ones() as usize)
                        .sum(),
                }
            };
            hist[measure(&x, &z)] += 1;
            for step in 1u64..1u64 << m {
                let (gx, gz) = &gens[step.trailing_zeros() as usize];
                for w in 0..words {
                    x[w] ^= gx[w];
                    z[w] ^= gz[w];
                }
                hist[measure(&x, &z)] += 1;
            }
            out.push(hist);
        }
        out
    }
}

/// `n <= 64` fast path: the low generators' products are tabulated once, and
/// the Gray walk runs over the high generators only.
fn walk_single_word(
    x0: u64,
    z0: u64,
    gens: &[(Vec<u64>, Vec<u64>)],
    m: usize,
    stat: Statistic,
    hist: &mut [u64],
) {
    let lo = m.min(8);
    let mut tx = vec![0u64; 1 << lo];
    let mut tz = vec![0u64; 1 << lo];
    for i in 1..1usize << lo {
        let b = i.trailing_zeros() as usize;
        let prev = i & (i - 1);
        tx[i] = tx[prev] ^ gens[b].0[0];
        tz[i] = tz[prev] ^ gens[b].1[0];
    }
    let (mut x, mut z) = (x0, z0);
    for step in 0u64..1u64 << (m - lo) {
        if step > 0 {
            let (gx, gz) = &gens[lo + step.trailing_zeros() as usize];
            x ^= gx[0];
            z ^= gz[0];
        }
        match stat {
            Statistic::Weight => {
                for (a, b) in tx.iter().zip(&tz) {
                    hist[((x ^ a) | (z ^ b)).count_ones() as usize] += 1;
                }
            }
            Statistic::XPlusZ => {
                for (a, b) in tx.iter().zip(&tz) {
                    hist[((x ^ a).count_ones() + (z ^ b).count_ones()) as usize] += 1;
                }
            }
        }
    }
}

fn pad(words: &[u64], len: usize) -> Vec<u64> {
    let mut v = words.to_vec();
    v.resize(len, 0);
    v
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Among entries within [`MLD_TIE_TOL`] (relative) of the maximum, the
/// lexicographically smallest bit string, comparing bit 0 first.
pub(crate) fn argmax_lexicographic(table: &[f64], bits: usize) -> BinaryVector {
    let max = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = (1.0 + MLD_TIE_TOL).ln();
    (0..table.len() as u64)
        .filter(|&b| max == f64::NEG_INFINITY || table[b as usize] >= max - tol)
        .map(|b| BinaryVector::from_u64(bits, b))
        .min_by(|a, b| a.iter().cmp(b.iter()))
        .expect("non-empty table")
}

impl Decoder for ExactMld {
    fn name(&self) -> &str {
        &self.name
    }

    fn syndrome_len(&self) -> usize {
        self.frame.m()
    }

    fn sector_len(&self) -> usize {
        2 * self.frame.k()
    }

    fn decode(&self, gamma: &BinaryVector) -> Result<BinaryVector> {
        Ok(self.decode_with_table(gamma)?.0)
    }
}

/// One-shot exact MLD with the default budget.
pub fn exact_mld_decode(
    frame: &ElsFrame,
    model: &NoiseModel,
    gamma: &BinaryVector,
) -> Result<BinaryVector> {
    ExactMld::new(frame.clone(), *model)?.decode(gamma)
}
