//! Ordered-statistics post-processing of BP soft output.

use super::bp::BinaryProblem;
use super::check_len;
use crate::error::{Error, Result};
use crate::gf2::BinaryVector;

/// Number of least-reliable non-pivot columns searched in combination-sweep mode.
pub const DEFAULT_OSD_ORDER: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OsdMode {
    /// Non-pivot bits fixed to zero.
    Osd0,
    /// OSD-0 plus all single and pair flips among the first `order`
    /// non-pivot columns, keeping the cheapest.
    CombinationSweep,
}

/// Solution of `H e = s` guided by `posterior` (LLRs, negative means the bit
/// is probably flipped). Always satisfies the syndrome.
pub fn osd_postprocess(
    problem: &BinaryProblem,
    syndrome: &BinaryVector,
    posterior: &[f64],
    order: usize,
    mode: OsdMode,
) -> Result<BinaryVector> {
    check_len(syndrome, problem.num_checks())?;
    let n = problem.num_vars();
    if posterior.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: posterior.len(),
        });
    }
    // least reliable (most likely flipped) columns first
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| posterior[a].total_cmp(&posterior[b]));
    let mut pos = vec![0usize; n];
    for (i, &v) in perm.iter().enumerate() {
        pos[v] = i;
    }

    // augmented [H_perm | s], reduced to RREF
    let mut rows: Vec<BinaryVector> = problem
        .check_vars
        .iter()
        .enumerate()
        .map(|(i, vars)| {
            let mut r = BinaryVector::zeros(n + 1);
            for &v in vars {
                r.flip(pos[v]);
            }
            r.set(n, syndrome.get(i));
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..n {
        if rank == rows.len() {
            break;
        }
        let Some(found) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
            continue;
        };
        rows.swap(rank, found);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row.get(col) {
                row.xor_assign(&pivot);
            }
        }
        pivots.push(col);
        rank += 1;
    }
    if rows[rank..].iter().any(|r| r.get(n)) {
        return Err(Error::Contract("syndrome is not in the column space of H".into()));
    }

    let weights: Vec<f64> = problem.channel_llrs();
    let col_weight = |c: usize| weights[perm[c]];
    let base = BinaryVector::from_bits(rows[..rank].iter().map(|r| r.get(n)));
    let cost_of = |pivot_bits: &BinaryVector, flips: &[usize]| -> f64 {
        pivot_bits.iter_ones().map(|r| col_weight(pivots[r])).sum::<f64>()
            + flips.iter().map(|&c| col_weight(c)).sum::<f64>()
    };

    let mut best_bits = base.clone();
    let mut best_flips: Vec<usize> = Vec::new();
    if mode == OsdMode::CombinationSweep && order > 0 {
        let mut is_pivot = vec![false; n];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).take(order).collect();
        let column = |c: usize| BinaryVector::from_bits(rows[..rank].iter().map(|r| r.get(c)));
        let cols: Vec<BinaryVector> = free.iter().map(|&c| column(c)).collect();
        let mut best_cost = cost_of(&base, &[]);
        let mut consider = |bits: BinaryVector, flips: Vec<usize>| {
            let c = cost_of(&bits, &flips);
            if c < best_cost {
                best_cost = c;
                best_bits = bits;
                best_flips = flips;
            }
        };
        for i in 0..free.len() {
            let mut bi = base.clone();
            bi.xor_assign(&cols[i]);
            for j in i + 1..free.len() {
                let mut bij = bi.clone();
                bij.xor_assign(&cols[j]);
                consider(bij, vec![free[i], free[j]]);
            }
            consider(bi, vec![free[i]]);
        }
    }

    let mut error = BinaryVector::zeros(n);
    for r in best_bits.iter_ones() {
        error.set(perm[pivots[r]], true);
    }
    for c in best_flips {
        error.flip(perm[c]);
    }
    Ok(error)
}
