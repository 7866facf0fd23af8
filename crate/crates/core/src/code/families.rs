use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::StabilizerCode;
use crate::error::{Error, Result};
use crate::gf2::BinaryMatrix;
use crate::pauli::{Pauli, PauliOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlaquetteKind {
    X,
    Z,
}

/// One stabilizer of the rotated surface code, located at corner `(row, col)`
/// of the `d x d` qubit grid (`0 <= row, col <= d`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plaquette {
    pub row: usize,
    pub col: usize,
    pub kind: PlaquetteKind,
    pub qubits: Vec<usize>,
}

/// Plaquettes of the distance-`d` rotated surface code in generator order.
///
/// Qubit `(r, c)` has index `r * d + c`. Corner `(i, j)` touches qubits
/// `(i-1..=i) x (j-1..=j)` inside the grid; it is X-type when `i + j` is even.
/// Weight-2 boundary plaquettes are X-type on the top and bottom edges and
/// Z-type on the left and right edges. Order is row-major over corners.
pub fn rotated_surface_layout(d: usize) -> Result<Vec<Plaquette>> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "rotated surface code distance must be odd and >= 3, got {d}"
        )));
    }
    let mut out = Vec::with_capacity(d * d - 1);
    for i in 0..=d {
        for j in 0..=d {
            let kind = if (i + j) % 2 == 0 {
                PlaquetteKind::X
            } else {
                PlaquetteKind::Z
            };
            let bulk = (1..d).contains(&i) && (1..d).contains(&j);
            let top_bottom = (i == 0 || i == d) && (1..d).contains(&j);
            let left_right = (j == 0 || j == d) && (1..d).contains(&i);
            let keep = bulk
                || (top_bottom && kind == PlaquetteKind::X)
                || (left_right && kind == PlaquetteKind::Z);
            if !keep {
                continue;
            }
            let mut qubits = Vec::with_capacity(4);
            for r in [i.wrapping_sub(1), i] {
                for c in [j.wrapping_sub(1), j] {
                    if r < d && c < d {
                        qubits.push(r * d + c);
                    }
                }
            }
            out.push(Plaquette {
                row: i,
                col: j,
                kind,
                qubits,
            });
        }
    }
    Ok(out)
}

/// `[[d^2, 1, d]]` rotated surface code.
pub fn rotated_surface_code(d: usize) -> Result<StabilizerCode> {
    let n = d * d;
    let stabilizers = rotated_surface_layout(d)?
        .into_iter()
        .map(|p| {
            let pauli = match p.kind {
                PlaquetteKind::X => Pauli::X,
                PlaquetteKind::Z => Pauli::Z,
            };
            PauliOperator::on_support(n, &p.qubits, pauli)
        })
        .collect();
    Ok(
        StabilizerCode::try_new(n, stabilizers, format!("rotated_surface_d{d}"))?
            .with_distance(Some(d)),
    )
}

/// Single unprotected block of `n` qubits with no stabilizers.
pub fn trivial_code(n: usize) -> StabilizerCode {
    StabilizerCode::new_unchecked(n, Vec::new(), format!("trivial_n{n}")).with_distance(Some(1))
}

/// Drops the listed generators; each removal frees one logical qubit.
pub fn remove_stabilizers(code: &StabilizerCode, indices: &[usize]) -> Result<StabilizerCode> {
    let set: BTreeSet<usize> = indices.iter().copied().collect();
    if set.len() != indices.len() {
        return Err(Error::InvalidParameter("duplicate stabilizer index".into()));
    }
    if let Some(&bad) = set.iter().find(|&&i| i >= code.m()) {
        return Err(Error::InvalidParameter(format!(
            "stabilizer index {bad} out of range 0..{}",
            code.m()
        )));
    }
    let kept = code
        .stabilizers()
        .iter()
        .enumerate()
        .filter(|(i, _)| !set.contains(i))
        .map(|(_, s)| s.clone())
        .collect();
    let name = format!(
        "{}_minus_{}",
        code.name(),
        set.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("_")
    );
    StabilizerCode::try_new(code.n(), kept, name)
}

/// Rotated surface code with the Z plaquettes at the given corners removed.
pub fn defected_surface_code(d: usize, defects: &[(usize, usize)]) -> Result<StabilizerCode> {
    let layout = rotated_surface_layout(d)?;
    let indices = defects
        .iter()
        .map(|&(r, c)| {
            layout
                .iter()
                .position(|p| p.row == r && p.col == c && p.kind == PlaquetteKind::Z)
                .ok_or_else(|| {
                    Error::InvalidParameter(format!("no Z plaquette at corner ({r}, {c})"))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let code = remove_stabilizers(&rotated_surface_code(d)?, &indices)?;
    Ok(code.with_name(format!("defected_surface_d{d}_k{}", 1 + defects.len())))
}

/// Monomial `x^s y^t` of the bivariate group algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BbTerm {
    pub x: usize,
    pub y: usize,
}

impl BbTerm {
    pub fn x(s: usize) -> Self {
        Self { x: s, y: 0 }
    }

    pub fn y(t: usize) -> Self {
        Self { x: 0, y: t }
    }

    pub fn xy(s: usize, t: usize) -> Self {
        Self { x: s, y: t }
    }
}

impl fmt::Display for BbTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.x, self.y) {
            (0, 0) => write!(f, "1"),
            (s, 0) => write!(f, "x{s}"),
            (0, t) => write!(f, "y{t}"),
            (s, t) => write!(f, "x{s}y{t}"),
        }
    }
}

impl FromStr for BbTerm {
    type Err = Error;

    /// Accepts `1`, `x3`, `y2`, `x1y2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1" {
            return Ok(Self::xy(0, 0));
        }
        let bad = || Error::InvalidParameter(format!("invalid monomial {s:?}"));
        let mut term = Self::xy(0, 0);
        let mut rest = s;
        let mut seen = false;
        while !rest.is_empty() {
            let var = rest.as_bytes()[0];
            let digits: String = rest[1..].chars().take_while(char::is_ascii_digit).collect();
            if digits.is_empty() {
                return Err(bad());
            }
            let exp: usize = digits.parse().map_err(|_| bad())?;
            match var {
                b'x' if term.x == 0 => term.x = exp,
                b'y' if term.y == 0 => term.y = exp,
                _ => return Err(bad()),
            }
            rest = &rest[1 + digits.len()..];
            seen = true;
        }
        if !seen {
            return Err(bad());
        }
        Ok(term)
    }
}

fn group_algebra_matrix(l: usize, m: usize, terms: &[BbTerm]) -> Result<BinaryMatrix> {
    let size = l * m;
    let mut mat = BinaryMatrix::zeros(size, size);
    for t in terms {
        if t.x >= l || t.y >= m {
            return Err(Error::InvalidParameter(format!(
                "monomial {t} out of range for l={l}, m={m}"
            )));
        }
        // x^s y^t sends basis (i, j) to (i + s, j + t)
        for i in 0..l {
            for j in 0..m {
                let r = ((i + t.x) % l) * m + (j + t.y) % m;
                let c = i * m + j;
                let cur = mat.get(r, c);
                mat.set(r, c, !cur);
            }
        }
    }
    Ok(mat)
}

/// `(Hx, Hz) = ([A | B], [B^T | A^T])` for the bivariate bicycle construction.
pub fn bb_matrices(
    l: usize,
    m: usize,
    a_terms: &[BbTerm],
    b_terms: &[BbTerm],
) -> Result<(BinaryMatrix, BinaryMatrix)> {
    if l == 0 || m == 0 {
        return Err(Error::InvalidParameter("l and m must be positive".into()));
    }
    let a = group_algebra_matrix(l, m, a_terms)?;
    let b = group_algebra_matrix(l, m, b_terms)?;
    let hx = a.hstack(&b)?;
    let hz = b.transpose().hstack(&a.transpose())?;
    Ok((hx, hz))
}

/// Bivariate bicycle CSS code on `2 l m` qubits.
pub fn bb_code(l: usize, m: usize, a_terms: &[BbTerm], b_terms: &[BbTerm]) -> Result<StabilizerCode> {
    let (hx, hz) = bb_matrices(l, m, a_terms, b_terms)?;
    let join = |ts: &[BbTerm]| ts.iter().map(ToString::to_string).collect::<Vec<_>>().join("+");
    StabilizerCode::from_css(
        &hx,
        &hz,
        format!("bb_l{l}_m{m}_A{}_B{}", join(a_terms), join(b_terms)),
    )
}
