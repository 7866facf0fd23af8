//! Normalized min-sum belief propagation on a binary parity-check system,
//! plus the BP+OSD sector decoder.

use super::osd::{osd_postprocess, OsdMode, DEFAULT_OSD_ORDER};
use super::{check_len, Decoder};
use crate::code::ElsFrame;
use crate::dem::DetectorErrorModel;
use crate::error::{Error, Result};
use crate::gf2::{BinaryMatrix, BinaryVector};
use crate::noise::NoiseModel;

pub const DEFAULT_BP_ITERS: usize = 1000;
pub const DEFAULT_BP_NORM: f64 = 0.625;

/// `H e = s` over independent error bits with priors, plus the logical
/// functionals that turn an error estimate into a sector.
#[derive(Clone, Debug)]
pub struct BinaryProblem {
    pub h: BinaryMatrix,
    pub logicals: BinaryMatrix,
    pub priors: Vec<f64>,
    pub(super) check_vars: Vec<Vec<usize>>,
}

impl BinaryProblem {
    pub fn new(h: BinaryMatrix, logicals: BinaryMatrix, priors: Vec<f64>) -> Result<Self> {
        let n = h.num_cols();
        if logicals.num_cols() != n || priors.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: if priors.len() != n {
                    priors.len()
                } else {
                    logicals.num_cols()
                },
            });
        }
        if let Some(p) = priors.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "bit prior {p} must lie in (0, 1)"
            )));
        }
        let check_vars = h.rows().iter().map(|r| r.iter_ones().collect()).collect();
        Ok(Self {
            h,
            logicals,
            priors,
            check_vars,
        })
    }

    /// Symplectic system on `[e_x | e_z]` with per-bit priors from the noise
    /// model (independence approximation for depolarizing noise). Logical
    /// row `s` evaluates sector slot `s`.
    pub fn from_code(frame: &ElsFrame, model: &NoiseModel) -> Result<Self> {
        let n = frame.n();
        let h = BinaryMatrix::from_rows(
            2 * n,
            frame
                .stabilizers()
                .iter()
                .map(|g| g.z_part().concat(g.x_part()))
                .collect(),
        )?;
        let rows = (0..2 * frame.k())
            .map(|s| {
                let l = &frame.logicals()[s ^ 1];
                l.z_part().concat(l.x_part())
            })
            .collect();
        let logicals = BinaryMatrix::from_rows(2 * n, rows)?;
        // keep priors strictly inside (0, 1) so LLRs stay finite
        let q = model.bit_prior().clamp(1e-12, 1.0 - 1e-12);
        Self::new(h, logicals, vec![q; 2 * n])
    }

    /// One variable per mechanism.
    pub fn from_dem(dem: &DetectorErrorModel) -> Result<Self> {
        let nm = dem.mechanisms.len();
        let mut h = BinaryMatrix::zeros(dem.num_detectors, nm);
        let mut l = BinaryMatrix::zeros(dem.num_observables, nm);
        for (j, mech) in dem.mechanisms.iter().enumerate() {
            for &d in &mech.detectors {
                h.set(d, j, true);
            }
            for &o in &mech.observables {
                l.set(o, j, true);
            }
        }
        Self::new(h, l, dem.mechanisms.iter().map(|m| m.probability).collect())
    }

    pub fn num_checks(&self) -> usize {
        self.h.num_rows()
    }

    pub fn num_vars(&self) -> usize {
        self.h.num_cols()
    }

    /// `ln((1 - p) / p)` per bit.
    pub fn channel_llrs(&self) -> Vec<f64> {
        self.priors.iter().map(|p| ((1.0 - p) / p).ln()).collect()
    }

    pub fn syndrome_of(&self, e: &BinaryVector) -> Result<BinaryVector> {
        self.h.mul_vec(e)
    }

    pub fn sector_of(&self, e: &BinaryVector) -> Result<BinaryVector> {
        self.logicals.mul_vec(e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpResult {
    pub error: BinaryVector,
    pub converged: bool,
    pub iterations: usize,
    /// Posterior LLRs; positive favours "no flip".
    pub posterior: Vec<f64>,
}

/// Flooding-schedule normalized min-sum. Stops as soon as the hard decision
/// satisfies the syndrome.
pub fn bp_min_sum(
    problem: &BinaryProblem,
    syndrome: &BinaryVector,
    max_iter: usize,
    norm_factor: f64,
) -> Result<BpResult> {
    check_len(syndrome, problem.num_checks())?;
    let n = problem.num_vars();
    let channel = problem.channel_llrs();
    let checks = &problem.check_vars;
    // messages indexed by edge, grouped by check
    let mut offsets = Vec::with_capacity(checks.len() + 1);
    offsets.push(0);
    for c in checks {
        offsets.push(offsets.last().expect("seeded") + c.len());
    }
    let edges = *offsets.last().expect("seeded");
    let mut v2c: Vec<f64> = checks.iter().flatten().map(|&v| channel[v]).collect();
    let mut c2v = vec![0.0f64; edges];
    let mut posterior = channel.clone();
    let mut error = BinaryVector::zeros(n);

    let satisfied = |e: &BinaryVector| -> bool {
        checks.iter().enumerate().all(|(i, vars)| {
            vars.iter().filter(|&&v| e.get(v)).count() % 2 == usize::from(syndrome.get(i))
        })
    };
    if satisfied(&error) && posterior.iter().all(|&l| l >= 0.0) {
        return Ok(BpResult {
            error,
            converged: true,
            iterations: 0,
            posterior,
        });
    }

    for iter in 1..=max_iter {
        for (i, vars) in checks.iter().enumerate() {
            let base = offsets[i];
            let mut sign = if syndrome.get(i) { -1.0 } else { 1.0 };
            let (mut min1, mut min2, mut argmin) = (f64::INFINITY, f64::INFINITY, usize::MAX);
            for e in 0..vars.len() {
                let m = v2c[base + e];
                if m < 0.0 {
                    sign = -sign;
                }
                let a = m.abs();
                if a < min1 {
                    min2 = min1;
                    min1 = a;
                    argmin = e;
                } else if a < min2 {
                    min2 = a;
                }
            }
            for e in 0..vars.len() {
                let m = v2c[base + e];
                let own = if m < 0.0 { -1.0 } else { 1.0 };
                let mag = if e == argmin { min2 } else { min1 };
                c2v[base + e] = norm_factor * sign * own * mag;
            }
        }
        posterior.copy_from_slice(&channel);
        for (i, vars) in checks.iter().enumerate() {
            for (e, &v) in vars.iter().enumerate() {
                posterior[v] += c2v[offsets[i] + e];
            }
        }
        for (v, &l) in posterior.iter().enumerate() {
            error.set(v, l < 0.0);
        }
        if satisfied(&error) {
            return Ok(BpResult {
                error,
                converged: true,
                iterations: iter,
                posterior,
            });
        }
        for (i, vars) in checks.iter().enumerate() {
            for (e, &v) in vars.iter().enumerate() {
                v2c[offsets[i] + e] = posterior[v] - c2v[offsets[i] + e];
            }
        }
    }
    Ok(BpResult {
        error,
        converged: false,
        iterations: max_iter,
        posterior,
    })
}

/// BP, falling back to OSD when BP does not reach the syndrome; the error
/// estimate is projected onto the logical functionals.
#[derive(Clone, Debug)]
pub struct BpOsdDecoder {
    pub problem: BinaryProblem,
    pub max_iter: usize,
    pub norm_factor: f64,
    pub osd_mode: OsdMode,
    pub osd_order: usize,
    name: String,
}

impl BpOsdDecoder {
    pub fn new(problem: BinaryProblem) -> Self {
        Self {
            problem,
            max_iter: DEFAULT_BP_ITERS,
            norm_factor: DEFAULT_BP_NORM,
            osd_mode: OsdMode::CombinationSweep,
            osd_order: DEFAULT_OSD_ORDER,
            name: "bposd".into(),
        }
    }

    /// Error estimate satisfying the syndrome.
    pub fn estimate(&self, gamma: &BinaryVector) -> Result<BinaryVector> {
        let bp = bp_min_sum(&self.problem, gamma, self.max_iter, self.norm_factor)?;
        if bp.converged {
            return Ok(bp.error);
        }
        osd_postprocess(
            &self.problem,
            gamma,
            &bp.posterior,
            self.osd_order,
            self.osd_mode,
        )
    }
}

impl Decoder for BpOsdDecoder {
    fn name(&self) -> &str {
        &self.name
    }

    fn syndrome_len(&self) -> usize {
        self.problem.num_checks()
    }

    fn sector_len(&self) -> usize {
        self.problem.logicals.num_rows()
    }

    fn decode(&self, gamma: &BinaryVector) -> Result<BinaryVector> {
        let e = self.estimate(gamma)?;
        self.problem.sector_of(&e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::rotated_surface_code;
    use crate::pauli::{Pauli, PauliOperator};

    fn d3_problem(p: f64) -> (ElsFrame, BinaryProblem) {
        let frame = ElsFrame::build(&rotated_surface_code(3).unwrap()).unwrap();
        let prob = BinaryProblem::from_code(&frame, &NoiseModel::depolarizing(p).unwrap()).unwrap();
        (frame, prob)
    }

    #[test]
    fn zero_syndrome_converges_to_zero() {
        let (_, prob) = d3_problem(0.05);
        let r = bp_min_sum(&prob, &BinaryVector::zeros(8), 1000, 0.625).unwrap();
        assert!(r.converged && r.error.is_zero());
    }

    #[test]
    fn single_flips_recovered() {
        let (frame, prob) = d3_problem(0.01);
        // the centre qubit has no degenerate weight-1 partner, so BP alone converges
        for p in [Pauli::X, Pauli::Z, Pauli::Y] {
            let s = frame.syndrome(&PauliOperator::single(9, 4, p)).unwrap();
            assert!(bp_min_sum(&prob, &s, 1000, 0.625).unwrap().converged);
        }
        let dec = BpOsdDecoder::new(prob.clone());
        for q in 0..9 {
            for p in [Pauli::X, Pauli::Z, Pauli::Y] {
                let e = PauliOperator::single(9, q, p);
                let s = frame.syndrome(&e).unwrap();
                let est = dec.estimate(&s).unwrap();
                assert_eq!(prob.syndrome_of(&est).unwrap(), s);
                assert!(est.weight() <= 2, "{q} {p:?}");
                assert_eq!(dec.decode(&s).unwrap(), frame.sector(&e).unwrap(), "{q} {p:?}");
            }
        }
    }

    #[test]
    fn sector_functionals_match_frame() {
        let (frame, prob) = d3_problem(0.1);
        let e: PauliOperator = "XYZIIXZII".parse().unwrap();
        assert_eq!(
            prob.sector_of(&e.to_symplectic()).unwrap(),
            frame.sector(&e).unwrap()
        );
        assert_eq!(
            prob.syndrome_of(&e.to_symplectic()).unwrap(),
            frame.syndrome(&e).unwrap()
        );
    }

    #[test]
    fn dem_problem_shape() {
        let dem = crate::dem::parse_dem("error(0.1) D0 L0\nerror(0.2) D0 D1\nerror(0.1) D1").unwrap();
        let prob = BinaryProblem::from_dem(&dem).unwrap();
        assert_eq!((prob.num_checks(), prob.num_vars()), (2, 3));
        let dec = BpOsdDecoder::new(prob);
        let beta = dec.decode(&BinaryVector::from_u8s(&[1, 0])).unwrap();
        assert_eq!(beta.to_u8s(), vec![1]);
    }
}
