use serde::{Deserialize, Serialize};

use super::StabilizerCode;
use crate::error::{Error, Result};
use crate::gf2::{BinaryMatrix, BinaryVector};
use crate::pauli::PauliOperator;

/// Stabilizer, logical and pure-error generators that together form a
/// symplectic basis of the `n`-qubit Pauli group.
///
/// Logicals are stored interleaved as `l_1^x, l_1^z, l_2^x, l_2^z, ...`.
/// `e_i` anti-commutes with `g_j` iff `i == j`, and `l_i^x` with `l_j^z`
/// iff `i == j`; every other pair commutes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElsFrame {
    code: StabilizerCode,
    logicals: Vec<PauliOperator>,
    pure_errors: Vec<PauliOperator>,
}

/// Coordinates `(alpha, beta, gamma)` of a Pauli error in an [`ElsFrame`].
///
/// `beta[2i]` is the logical-X slot of qubit `i` (set iff the error
/// anti-commutes with `l_i^z`) and `beta[2i+1]` the logical-Z slot (set iff it
/// anti-commutes with `l_i^x`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ElsConfig {
    pub alpha: BinaryVector,
    pub beta: BinaryVector,
    pub gamma: BinaryVector,
}

impl ElsConfig {
    pub fn zeros(m: usize, k: usize) -> Self {
        Self {
            alpha: BinaryVector::zeros(m),
            beta: BinaryVector::zeros(2 * k),
            gamma: BinaryVector::zeros(m),
        }
    }

    /// Componentwise XOR.
    pub fn xor(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            alpha: self.alpha.xor(&other.alpha)?,
            beta: self.beta.xor(&other.beta)?,
            gamma: self.gamma.xor(&other.gamma)?,
        })
    }
}

impl ElsFrame {
    /// Completes the stabilizers of a valid code to a full frame.
    ///
    /// Pure errors are the minimal solutions (free variables zero) of the
    /// linear system `<e_i, g_j> = delta_ij`, then made mutually commuting by
    /// `e_j <- e_j g_i` for `i < j`. Logicals come from the kernel of all
    /// `g` and `e` rows (pivots lowest index first) followed by symplectic
    /// Gram-Schmidt that pairs each vector with its first anti-commuting
    /// partner. For CSS codes this yields X-type `l^x` and Z-type `l^z`.
    pub fn build(code: &StabilizerCode) -> Result<Self> {
        code.validate().into_result()?;
        let n = code.n();
        let m = code.m();
        let gens = code.stabilizers();

        // rows [g.z | g.x]: row_j . [e.x | e.z] = <g_j, e>
        let dual = code.syndrome_matrix();
        let mut pure_errors = Vec::with_capacity(m);
        for i in 0..m {
            let sol = dual
                .solve(&BinaryVector::unit(m, i))
                .map_err(|_| Error::InvalidCode(vec![format!("no pure error for generator {i}")]))?;
            pure_errors.push(PauliOperator::from_symplectic(&sol)?);
        }
        for j in 0..m {
            for i in 0..j {
                if pure_errors[i].anticommutes(&pure_errors[j]) {
                    pure_errors[j].mul_assign(&gens[i]);
                }
            }
        }

        let constraints = BinaryMatrix::from_rows(
            2 * n,
            gens.iter()
                .chain(&pure_errors)
                .map(|p| p.z_part().concat(p.x_part()))
                .collect(),
        )?;
        let mut pool: Vec<PauliOperator> = constraints
            .nullspace()
            .iter()
            .map(PauliOperator::from_symplectic)
            .collect::<Result<_>>()?;
        if pool.len() != 2 * code.k() {
            return Err(Error::InvalidCode(vec![format!(
                "logical space has dimension {}, expected {}",
                pool.len(),
                2 * code.k()
            )]));
        }
        let mut logicals = Vec::with_capacity(pool.len());
        while !pool.is_empty() {
            let a = pool.remove(0);
            let idx = pool
                .iter()
                .position(|b| a.anticommutes(b))
                .ok_or_else(|| Error::InvalidCode(vec!["degenerate logical space".into()]))?;
            let b = pool.remove(idx);
            for u in pool.iter_mut() {
                let with_b = u.anticommutes(&b);
                let with_a = u.anticommutes(&a);
                if with_b {
                    u.mul_assign(&a);
                }
                if with_a {
                    u.mul_assign(&b);
                }
            }
            logicals.push(a);
            logicals.push(b);
        }

        let frame = Self {
            code: code.clone(),
            logicals,
            pure_errors,
        };
        debug_assert!(frame.check_invariants().is_empty());
        Ok(frame)
    }

    /// Assembles a frame from explicit generators and checks every invariant.
    pub fn from_parts(
        code: StabilizerCode,
        logicals: Vec<PauliOperator>,
        pure_errors: Vec<PauliOperator>,
    ) -> Result<Self> {
        let frame = Self {
            code,
            logicals,
            pure_errors,
        };
        let violations = frame.check_invariants();
        if violations.is_empty() {
            Ok(frame)
        } else {
            Err(Error::InvalidCode(violations))
        }
    }

    pub fn code(&self) -> &StabilizerCode {
        &self.code
    }

    pub fn n(&self) -> usize {
        self.code.n()
    }

    pub fn m(&self) -> usize {
        self.code.m()
    }

    pub fn k(&self) -> usize {
        self.code.k()
    }

    pub fn stabilizers(&self) -> &[PauliOperator] {
        self.code.stabilizers()
    }

    /// `l_1^x, l_1^z, ..., l_k^x, l_k^z`.
    pub fn logicals(&self) -> &[PauliOperator] {
        &self.logicals
    }

    pub fn logical_x(&self, i: usize) -> &PauliOperator {
        &self.logicals[2 * i]
    }

    pub fn logical_z(&self, i: usize) -> &PauliOperator {
        &self.logicals[2 * i + 1]
    }

    pub fn pure_errors(&self) -> &[PauliOperator] {
        &self.pure_errors
    }

    /// Lists every violated frame invariant; empty means the frame is sound.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut v = Vec::new();
        let n = self.n();
        let m = self.m();
        let k = self.k();
        let g = self.stabilizers();
        let e = &self.pure_errors;
        let l = &self.logicals;
        if e.len() != m {
            v.push(format!("{} pure errors for {m} generators", e.len()));
        }
        if l.len() != 2 * k {
            v.push(format!("{} logicals, expected {}", l.len(), 2 * k));
        }
        if g.iter().chain(e).chain(l).any(|p| p.num_qubits() != n) {
            v.push("generator with wrong qubit count".into());
            return v;
        }
        for (i, ei) in e.iter().enumerate() {
            for (j, gj) in g.iter().enumerate() {
                if ei.anticommutes(gj) != (i == j) {
                    v.push(format!("pure error {i} vs generator {j}: wrong commutation"));
                }
            }
            for (j, ej) in e.iter().enumerate().skip(i + 1) {
                if ei.anticommutes(ej) {
                    v.push(format!("pure errors {i} and {j} anti-commute"));
                }
            }
            for (j, lj) in l.iter().enumerate() {
                if ei.anticommutes(lj) {
                    v.push(format!("pure error {i} anti-commutes with logical {j}"));
                }
            }
        }
        for (a, la) in l.iter().enumerate() {
            for (j, gj) in g.iter().enumerate() {
                if la.anticommutes(gj) {
                    v.push(format!("logical {a} anti-commutes with generator {j}"));
                }
            }
            for (b, lb) in l.iter().enumerate().skip(a + 1) {
                let partners = a / 2 == b / 2;
                if la.anticommutes(lb) != partners {
                    v.push(format!("logicals {a} and {b}: wrong commutation"));
                }
            }
        }
        let all = BinaryMatrix::from_rows(
            2 * n,
            g.iter().chain(l).chain(e).map(|p| p.to_symplectic()).collect(),
        );
        match all {
            Ok(mat) if mat.rank() == 2 * n => {}
            Ok(mat) => v.push(format!("frame rank {} < 2n = {}", mat.rank(), 2 * n)),
            Err(err) => v.push(err.to_string()),
        }
        v
    }

    fn check_qubits(&self, error: &PauliOperator) -> Result<()> {
        if error.num_qubits() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                found: error.num_qubits(),
            });
        }
        Ok(())
    }

    /// Maps a Pauli error to its `(alpha, beta, gamma)` coordinates.
    pub fn decompose(&self, error: &PauliOperator) -> Result<ElsConfig> {
        self.check_qubits(error)?;
        Ok(ElsConfig {
            alpha: BinaryVector::from_bits(self.pure_errors.iter().map(|e| e.anticommutes(error))),
            beta: self.sector_unchecked(error),
            gamma: self.syndrome_unchecked(error),
        })
    }

    /// `gamma` alone.
    pub fn syndrome(&self, error: &PauliOperator) -> Result<BinaryVector> {
        self.check_qubits(error)?;
        Ok(self.syndrome_unchecked(error))
    }

    /// `beta` alone.
    pub fn sector(&self, error: &PauliOperator) -> Result<BinaryVector> {
        self.check_qubits(error)?;
        Ok(self.sector_unchecked(error))
    }

    pub(crate) fn syndrome_unchecked(&self, error: &PauliOperator) -> BinaryVector {
        BinaryVector::from_bits(self.stabilizers().iter().map(|g| g.anticommutes(error)))
    }

    pub(crate) fn sector_unchecked(&self, error: &PauliOperator) -> BinaryVector {
        // slot 2i pairs with l_i^z, slot 2i+1 with l_i^x
        BinaryVector::from_bits(
            (0..self.logicals.len()).map(|s| self.logicals[s ^ 1].anticommutes(error)),
        )
    }

    /// Inverse of [`Self::decompose`]:
    /// `prod g_i^alpha_i * prod (l_i^x)^beta_2i (l_i^z)^beta_2i+1 * prod e_i^gamma_i`.
    pub fn compose(&self, cfg: &ElsConfig) -> Result<PauliOperator> {
        let (m, k2) = (self.m(), self.logicals.len());
        for (len, want) in [
            (cfg.alpha.len(), m),
            (cfg.beta.len(), k2),
            (cfg.gamma.len(), m),
        ] {
            if len != want {
                return Err(Error::Dimension {
                    expected: want,
                    found: len,
                });
            }
        }
        let mut out = PauliOperator::identity(self.n());
        for i in cfg.alpha.iter_ones() {
            out.mul_assign(&self.stabilizers()[i]);
        }
        for s in cfg.beta.iter_ones() {
            out.mul_assign(&self.logicals[s]);
        }
        for i in cfg.gamma.iter_ones() {
            out.mul_assign(&self.pure_errors[i]);
        }
        Ok(out)
    }

    /// Lowest-weight-free representative `prod e_i^gamma_i` of a syndrome.
    pub fn pure_error_for(&self, gamma: &BinaryVector) -> Result<PauliOperator> {
        if gamma.len() != self.m() {
            return Err(Error::Dimension {
                expected: self.m(),
                found: gamma.len(),
            });
        }
        let mut out = PauliOperator::identity(self.n());
        for i in gamma.iter_ones() {
            out.mul_assign(&self.pure_errors[i]);
        }
        Ok(out)
    }
}
