//! Phase-free Pauli operators in binary symplectic form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::BinaryVector;

/// Single-qubit Pauli, ignoring phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (false, true) => Pauli::Z,
            (true, true) => Pauli::Y,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Z => (false, true),
            Pauli::Y => (true, true),
        }
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// An `n`-qubit Pauli operator `X^x Z^z` with the global phase dropped.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliOperator {
    x: BinaryVector,
    z: BinaryVector,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        Self {
            x: BinaryVector::zeros(n),
            z: BinaryVector::zeros(n),
        }
    }

    pub fn new(x: BinaryVector, z: BinaryVector) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                found: z.len(),
            });
        }
        Ok(Self { x, z })
    }

    /// Single-qubit Pauli `p` on `qubit`, identity elsewhere.
    pub fn single(n: usize, qubit: usize, p: Pauli) -> Self {
        let mut op = Self::identity(n);
        op.set(qubit, p);
        op
    }

    /// Tensor product of the same Pauli on every listed qubit.
    pub fn on_support(n: usize, qubits: &[usize], p: Pauli) -> Self {
        let mut op = Self::identity(n);
        for &q in qubits {
            op.set(q, p);
        }
        op
    }

    /// Parses a symplectic row `[x_0..x_{n-1} | z_0..z_{n-1}]`.
    pub fn from_symplectic(row: &BinaryVector) -> Result<Self> {
        if !row.len().is_multiple_of(2) {
            return Err(Error::Format(format!(
                "symplectic row has odd length {}",
                row.len()
            )));
        }
        let n = row.len() / 2;
        Ok(Self {
            x: row.slice(0, n),
            z: row.slice(n, 2 * n),
        })
    }

    pub fn to_symplectic(&self) -> BinaryVector {
        self.x.concat(&self.z)
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    #[inline]
    pub fn x_part(&self) -> &BinaryVector {
        &self.x
    }

    #[inline]
    pub fn z_part(&self) -> &BinaryVector {
        &self.z
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x.get(qubit), self.z.get(qubit))
    }

    pub fn set(&mut self, qubit: usize, p: Pauli) {
        let (x, z) = p.bits();
        self.x.set(qubit, x);
        self.z.set(qubit, z);
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    /// Number of qubits acted on non-trivially.
    pub fn weight(&self) -> usize {
        self.x
            .words()
            .iter()
            .zip(self.z.words())
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    /// 1 iff the operators anti-commute.
    pub fn symplectic_product(&self, other: &Self) -> Result<bool> {
        if self.num_qubits() != other.num_qubits() {
            return Err(Error::Dimension {
                expected: self.num_qubits(),
                found: other.num_qubits(),
            });
        }
        Ok(self.anticommutes(other))
    }

    #[inline]
    pub(crate) fn anticommutes(&self, other: &Self) -> bool {
        let mut acc = 0u64;
        let (xa, za, xb, zb) = (
            self.x.words(),
            self.z.words(),
            other.x.words(),
            other.z.words(),
        );
        for i in 0..xa.len() {
            acc ^= (xa[i] & zb[i]) ^ (za[i] & xb[i]);
        }
        acc.count_ones() & 1 == 1
    }

    pub fn commutes_with(&self, other: &Self) -> Result<bool> {
        Ok(!self.symplectic_product(other)?)
    }

    /// Product modulo phase.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.try_mul_assign(other)?;
        Ok(out)
    }

    pub fn try_mul_assign(&mut self, other: &Self) -> Result<()> {
        if self.num_qubits() != other.num_qubits() {
            return Err(Error::Dimension {
                expected: self.num_qubits(),
                found: other.num_qubits(),
            });
        }
        self.mul_assign(other);
        Ok(())
    }

    #[inline]
    pub(crate) fn mul_assign(&mut self, other: &Self) {
        self.x.xor_assign(&other.x);
        self.z.xor_assign(&other.z);
    }

    pub fn is_x_type(&self) -> bool {
        self.z.is_zero()
    }

    pub fn is_z_type(&self) -> bool {
        self.x.is_zero()
    }
}

/// Free-function form of [`PauliOperator::symplectic_product`].
pub fn symplectic_product(p: &PauliOperator, q: &PauliOperator) -> Result<bool> {
    p.symplectic_product(q)
}

pub fn pauli_mul(p: &PauliOperator, q: &PauliOperator) -> Result<PauliOperator> {
    p.mul(q)
}

pub fn pauli_weight(p: &PauliOperator) -> usize {
    p.weight()
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.num_qubits() {
            write!(f, "{}", self.get(q).symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({self})")
    }
}

impl FromStr for PauliOperator {
    type Err = Error;

    /// Dense string such as `"XIZY"`; `_` is accepted for identity.
    fn from_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        let mut op = Self::identity(n);
        for (q, c) in s.chars().enumerate() {
            let p = match c.to_ascii_uppercase() {
                'I' | '_' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => {
                    return Err(Error::Format(format!("invalid Pauli symbol {other:?}")));
                }
            };
            op.set(q, p);
        }
        Ok(op)
    }
}
