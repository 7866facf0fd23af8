//! Stabilizer codes, their {E, L, S} frames, and the code families used
//! in benchmarks.

mod distance;
mod families;
mod frame;
mod qcode;

pub use distance::{brute_distance, brute_distance_of_kind, Distance, DistanceKind};
pub use families::{
    bb_code, bb_matrices, defected_surface_code, remove_stabilizers, rotated_surface_code,
    rotated_surface_layout, trivial_code, BbTerm, Plaquette, PlaquetteKind,
};
pub use frame::{ElsConfig, ElsFrame};
pub use qcode::{load_code_file, parse_qcode, write_qcode};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gf2::{BinaryMatrix, BinaryVector};
use crate::pauli::PauliOperator;

/// A stabilizer code given by `m` independent commuting generators on `n`
/// qubits, encoding `k = n - m` logical qubits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerCode {
    n: usize,
    stabilizers: Vec<PauliOperator>,
    name: String,
    distance: Option<usize>,
}

/// Result of [`StabilizerCode::validate`]. Empty `violations` means valid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidCode(self.violations))
        }
    }
}

impl StabilizerCode {
    /// Builds a code without checking invariants. Use [`Self::validate`] or
    /// [`Self::try_new`] before relying on it.
    pub fn new_unchecked(
        n: usize,
        stabilizers: Vec<PauliOperator>,
        name: impl Into<String>,
    ) -> Self {
        Self {
            n,
            stabilizers,
            name: name.into(),
            distance: None,
        }
    }

    pub fn try_new(
        n: usize,
        stabilizers: Vec<PauliOperator>,
        name: impl Into<String>,
    ) -> Result<Self> {
        let code = Self::new_unchecked(n, stabilizers, name);
        code.validate().into_result()?;
        Ok(code)
    }

    /// CSS code from X-check and Z-check matrices. Linearly dependent rows are
    /// dropped (first occurrence kept) so the generator set is independent.
    pub fn from_css(hx: &BinaryMatrix, hz: &BinaryMatrix, name: impl Into<String>) -> Result<Self> {
        let n = hx.num_cols();
        if hz.num_cols() != n {
            return Err(Error::Dimension {
                expected: n,
                found: hz.num_cols(),
            });
        }
        let zero = BinaryVector::zeros(n);
        let mut stabilizers: Vec<PauliOperator> = independent_rows(hx)
            .into_iter()
            .map(|r| PauliOperator::new(r, zero.clone()))
            .collect::<Result<_>>()?;
        for r in independent_rows(hz) {
            stabilizers.push(PauliOperator::new(zero.clone(), r)?);
        }
        Self::try_new(n, stabilizers, name)
    }

    pub fn with_distance(mut self, distance: Option<usize>) -> Self {
        self.distance = distance;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.stabilizers.len()
    }

    /// `n - m`; meaningful only for a valid code.
    #[inline]
    pub fn k(&self) -> usize {
        self.n.saturating_sub(self.stabilizers.len())
    }

    pub fn stabilizers(&self) -> &[PauliOperator] {
        &self.stabilizers
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Claimed distance metadata, if any.
    pub fn distance(&self) -> Option<usize> {
        self.distance
    }

    pub fn is_css(&self) -> bool {
        self.stabilizers
            .iter()
            .all(|s| s.is_x_type() || s.is_z_type())
    }

    /// Stabilizers as an `m x 2n` symplectic matrix `[X | Z]`.
    pub fn symplectic_matrix(&self) -> BinaryMatrix {
        BinaryMatrix::from_rows(
            2 * self.n,
            self.stabilizers.iter().map(|s| s.to_symplectic()).collect(),
        )
        .expect("stabilizer lengths checked at construction")
    }

    /// Binary parity-check matrix acting on an error `[e_x | e_z]`:
    /// row `j` is `[g_j.z | g_j.x]`, so `H e` is the syndrome.
    pub fn syndrome_matrix(&self) -> BinaryMatrix {
        BinaryMatrix::from_rows(
            2 * self.n,
            self.stabilizers
                .iter()
                .map(|s| s.z_part().concat(s.x_part()))
                .collect(),
        )
        .expect("stabilizer lengths checked at construction")
    }

    pub fn syndrome(&self, error: &PauliOperator) -> Result<BinaryVector> {
        if error.num_qubits() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: error.num_qubits(),
            });
        }
        Ok(BinaryVector::from_bits(
            self.stabilizers.iter().map(|s| s.anticommutes(error)),
        ))
    }

    /// Checks qubit counts, pairwise commutation and independence.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut sized = true;
        for (i, s) in self.stabilizers.iter().enumerate() {
            if s.num_qubits() != self.n {
                violations.push(format!(
                    "generator {i} acts on {} qubits, code has {}",
                    s.num_qubits(),
                    self.n
                ));
                sized = false;
            }
        }
        if self.stabilizers.len() > self.n {
            violations.push(format!(
                "{} generators exceed {} qubits",
                self.stabilizers.len(),
                self.n
            ));
        }
        if !sized {
            return ValidationReport { violations };
        }
        for i in 0..self.stabilizers.len() {
            for j in i + 1..self.stabilizers.len() {
                if self.stabilizers[i].anticommutes(&self.stabilizers[j]) {
                    violations.push(format!("generators {i} and {j} anti-commute"));
                }
            }
        }
        let rank = self.symplectic_matrix().rank();
        if rank < self.stabilizers.len() {
            violations.push(format!(
                "generators are dependent: rank {rank} < m = {}",
                self.stabilizers.len()
            ));
        }
        ValidationReport { violations }
    }

    /// Stable content hash over `n` and the generator rows.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("stabilizer-code n={}\n", self.n));
        for s in &self.stabilizers {
            h.update(s.to_symplectic().to_string());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

/// Greedy selection of rows that increase the rank, in input order.
pub(crate) fn independent_rows(m: &BinaryMatrix) -> Vec<BinaryVector> {
    // incremental echelon basis keyed by leading column
    let mut basis: Vec<(usize, BinaryVector)> = Vec::new();
    let mut kept = Vec::new();
    for row in m.rows() {
        let mut v = row.clone();
        for (lead, b) in &basis {
            if v.get(*lead) {
                v.xor_assign(b);
            }
        }
        let lead = v.iter_ones().next();
        if let Some(lead) = lead {
            for (_, b) in basis.iter_mut() {
                if b.get(lead) {
                    b.xor_assign(&v);
                }
            }
            basis.push((lead, v));
            kept.push(row.clone());
        }
    }
    kept
}
