use super::{ElsFrame, StabilizerCode};
use crate::error::Result;
use crate::pauli::{Pauli, PauliOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distance {
    Exact(usize),
    /// No nontrivial logical of weight `<= max_weight` exists.
    Unknown,
}

/// Which Paulis the search ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceKind {
    Full,
    /// X-type operators only; for CSS codes this is the weight of the lightest
    /// logical X.
    XOnly,
    ZOnly,
}

/// Minimum weight of a Pauli with trivial syndrome and nontrivial logical
/// action, searched exhaustively up to `max_weight`.
pub fn brute_distance(code: &StabilizerCode, max_weight: usize) -> Result<Distance> {
    brute_distance_of_kind(code, max_weight, DistanceKind::Full)
}

pub fn brute_distance_of_kind(
    code: &StabilizerCode,
    max_weight: usize,
    kind: DistanceKind,
) -> Result<Distance> {
    let frame = ElsFrame::build(code)?;
    if frame.k() == 0 {
        return Ok(Distance::Unknown);
    }
    let n = code.n();
    let m = frame.m();
    let bits = m + 2 * frame.k();
    let words = bits.div_ceil(64);
    let paulis: &[Pauli] = match kind {
        DistanceKind::Full => &[Pauli::X, Pauli::Y, Pauli::Z],
        DistanceKind::XOnly => &[Pauli::X],
        DistanceKind::ZOnly => &[Pauli::Z],
    };

    // signature = (gamma | beta) packed into words
    let mut sigs: Vec<Vec<u64>> = Vec::with_capacity(n * paulis.len());
    for q in 0..n {
        for &p in paulis {
            let op = PauliOperator::single(n, q, p);
            let cfg = frame.decompose(&op)?;
            let mut w = vec![0u64; words];
            for i in cfg.gamma.iter_ones() {
                w[i / 64] |= 1 << (i % 64);
            }
            for i in cfg.beta.iter_ones() {
                let b = m + i;
                w[b / 64] |= 1 << (b % 64);
            }
            sigs.push(w);
        }
    }
    let mut gamma_mask = vec![0u64; words];
    for i in 0..m {
        gamma_mask[i / 64] |= 1 << (i % 64);
    }

    let search = Search {
        sigs: &sigs,
        per_qubit: paulis.len(),
        n,
        words,
        gamma_mask: &gamma_mask,
    };
    for w in 1..=max_weight.min(n) {
        let mut stack = vec![0u64; (w + 1) * words];
        if search.dfs(0, w, 0, &mut stack) {
            return Ok(Distance::Exact(w));
        }
    }
    Ok(Distance::Unknown)
}

struct Search<'a> {
    sigs: &'a [Vec<u64>],
    per_qubit: usize,
    n: usize,
    words: usize,
    gamma_mask: &'a [u64],
}

impl Search<'_> {
    fn is_logical(&self, acc: &[u64]) -> bool {
        let mut syndrome = 0u64;
        let mut logical = 0u64;
        for (a, m) in acc[..self.words].iter().zip(self.gamma_mask) {
            syndrome |= a & m;
            logical |= a & !m;
        }
        syndrome == 0 && logical != 0
    }

    fn dfs(&self, start: usize, remaining: usize, level: usize, stack: &mut [u64]) -> bool {
        let w = self.words;
        if remaining == 0 {
            return self.is_logical(&stack[level * w..(level + 1) * w]);
        }
        for q in start..=self.n - remaining {
            for t in 0..self.per_qubit {
                let sig = &self.sigs[q * self.per_qubit + t];
                let (head, tail) = stack.split_at_mut((level + 1) * w);
                let cur = &head[level * w..];
                for i in 0..w {
                    tail[i] = cur[i] ^ sig[i];
                }
                if self.dfs(q + 1, remaining - 1, level + 1, stack) {
                    return true;
                }
            }
        }
        false
    }
}
