//! Detector error models: a flat subset of the Stim `.dem` text format.
//!
//! Supported statements, one per line, `#` comments:
//!
//! ```text
//! error(<p>) D<i> ... L<j> ...
//! detector D<i>
//! logical_observable L<j>
//! shift_detectors <s>
//! ```
//!
//! `shift_detectors s` adds `s` to every later `D` index. Repeat blocks,
//! coordinates, tags and separators are rejected as unsupported.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Largest accepted detector or observable index.
pub const MAX_INDEX: usize = u32::MAX as usize;

/// One independent error: with `probability` it flips every listed detector
/// and observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMechanism {
    pub probability: f64,
    pub detectors: Vec<usize>,
    pub observables: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectorErrorModel {
    pub num_detectors: usize,
    pub num_observables: usize,
    pub mechanisms: Vec<ErrorMechanism>,
}

/// A parsed statement, with detector indices already made absolute.
#[derive(Clone, Debug, PartialEq)]
pub enum DemStatement {
    Error(ErrorMechanism),
    Detector(usize),
    LogicalObservable(usize),
    ShiftDetectors(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemDocument {
    pub statements: Vec<DemStatement>,
    pub model: DetectorErrorModel,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_index(line: usize, digits: &str, what: &str) -> Result<usize> {
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err(line, format!("malformed {what} index {digits:?}")));
    }
    match digits.parse::<usize>() {
        Ok(v) if v <= MAX_INDEX => Ok(v),
        _ => Err(err(line, format!("{what} index {digits} overflows"))),
    }
}

fn shifted(line: usize, index: usize, shift: usize) -> Result<usize> {
    index
        .checked_add(shift)
        .filter(|&v| v <= MAX_INDEX)
        .ok_or_else(|| err(line, "detector index overflows after shift"))
}

/// Removes pairs of equal targets; returns the sorted survivors and whether
/// anything cancelled.
fn xor_reduce(targets: Vec<usize>) -> (Vec<usize>, bool) {
    let total = targets.len();
    let mut set = BTreeSet::new();
    for t in targets {
        if !set.remove(&t) {
            set.insert(t);
        }
    }
    let cancelled = set.len() != total;
    (set.into_iter().collect(), cancelled)
}

fn parse_error_statement(line: usize, rest: &str, shift: usize) -> Result<ErrorMechanism> {
    let rest = rest
        .strip_prefix('(')
        .ok_or_else(|| err(line, "expected `(` after `error`"))?;
    let close = rest
        .find(')')
        .ok_or_else(|| err(line, "missing `)` in error probability"))?;
    let prob_text = rest[..close].trim();
    let probability: f64 = prob_text
        .parse()
        .map_err(|_| err(line, format!("malformed probability {prob_text:?}")))?;
    if !(probability > 0.0 && probability < 1.0) {
        return Err(err(
            line,
            format!("probability out of range (0, 1): {prob_text}"),
        ));
    }
    let targets = &rest[close + 1..];
    if !targets.is_empty() && !targets.starts_with(char::is_whitespace) {
        return Err(err(line, "expected whitespace after `)`"));
    }
    let mut detectors = Vec::new();
    let mut observables = Vec::new();
    for tok in targets.split_whitespace() {
        if let Some(d) = tok.strip_prefix('D') {
            detectors.push(shifted(line, parse_index(line, d, "detector")?, shift)?);
        } else if let Some(l) = tok.strip_prefix('L') {
            observables.push(parse_index(line, l, "observable")?);
        } else if tok == "^" {
            return Err(err(line, "unsupported statement: `^` separators"));
        } else {
            return Err(err(line, format!("invalid target {tok:?}")));
        }
    }
    if detectors.is_empty() && observables.is_empty() {
        return Err(err(line, "error statement without targets"));
    }
    let (detectors, c1) = xor_reduce(detectors);
    let (observables, c2) = xor_reduce(observables);
    if c1 || c2 {
        log::warn!("line {line}: duplicate targets cancelled pairwise");
    }
    Ok(ErrorMechanism {
        probability,
        detectors,
        observables,
    })
}

/// Parses a document, keeping the statement list.
pub fn parse_dem_document(text: &str) -> Result<DemDocument> {
    let mut statements = Vec::new();
    let mut model = DetectorErrorModel::default();
    let mut shift = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let keyword_end = content
            .find(|c: char| c.is_whitespace() || c == '(')
            .unwrap_or(content.len());
        let (keyword, rest) = content.split_at(keyword_end);
        let stmt = match keyword {
            "error" => DemStatement::Error(parse_error_statement(line, rest, shift)?),
            "detector" | "logical_observable" => {
                if rest.starts_with('(') {
                    return Err(err(line, "unsupported statement: coordinates"));
                }
                let toks: Vec<&str> = rest.split_whitespace().collect();
                let [tok] = toks.as_slice() else {
                    return Err(err(line, format!("`{keyword}` takes exactly one target")));
                };
                if keyword == "detector" {
                    let d = tok
                        .strip_prefix('D')
                        .ok_or_else(|| err(line, format!("expected D target, got {tok:?}")))?;
                    DemStatement::Detector(shifted(line, parse_index(line, d, "detector")?, shift)?)
                } else {
                    let l = tok
                        .strip_prefix('L')
                        .ok_or_else(|| err(line, format!("expected L target, got {tok:?}")))?;
                    DemStatement::LogicalObservable(parse_index(line, l, "observable")?)
                }
            }
            "shift_detectors" => {
                if rest.starts_with('(') {
                    return Err(err(line, "unsupported statement: coordinates"));
                }
                let toks: Vec<&str> = rest.split_whitespace().collect();
                let [tok] = toks.as_slice() else {
                    return Err(err(line, "`shift_detectors` takes one integer"));
                };
                let s = parse_index(line, tok, "shift")?;
                shift = shifted(line, shift, s)?;
                DemStatement::ShiftDetectors(s)
            }
            "repeat" | "detector_separator" => {
                return Err(err(line, format!("unsupported statement `{keyword}`")));
            }
            other => return Err(err(line, format!("unknown keyword {other:?}"))),
        };
        match &stmt {
            DemStatement::Error(mech) => {
                if let Some(&d) = mech.detectors.last() {
                    model.num_detectors = model.num_detectors.max(d + 1);
                }
                if let Some(&l) = mech.observables.last() {
                    model.num_observables = model.num_observables.max(l + 1);
                }
                model.mechanisms.push(mech.clone());
            }
            DemStatement::Detector(d) => model.num_detectors = model.num_detectors.max(d + 1),
            DemStatement::LogicalObservable(l) => {
                model.num_observables = model.num_observables.max(l + 1)
            }
            DemStatement::ShiftDetectors(_) => {}
        }
        statements.push(stmt);
    }
    Ok(DemDocument { statements, model })
}

pub fn parse_dem(text: &str) -> Result<DetectorErrorModel> {
    Ok(parse_dem_document(text)?.model)
}

pub fn load_dem_file(path: impl AsRef<Path>) -> Result<DetectorErrorModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dem(&text)
}

/// Canonical text: absolute indices, no shifts, input mechanism order,
/// probabilities with 17 significant digits, and declarations pinning the
/// detector and observable counts.
pub fn serialize_dem(dem: &DetectorErrorModel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} mechanisms, {} detectors, {} observables",
        dem.mechanisms.len(),
        dem.num_detectors,
        dem.num_observables
    );
    for mech in &dem.mechanisms {
        let _ = write!(out, "error({:.16e})", mech.probability);
        for d in &mech.detectors {
            let _ = write!(out, " D{d}");
        }
        for l in &mech.observables {
            let _ = write!(out, " L{l}");
        }
        out.push('\n');
    }
    if dem.num_detectors > 0 {
        let _ = writeln!(out, "detector D{}", dem.num_detectors - 1);
    }
    if dem.num_observables > 0 {
        let _ = writeln!(out, "logical_observable L{}", dem.num_observables - 1);
    }
    out
}

impl DetectorErrorModel {
    pub fn validate(&self) -> Result<()> {
        for (i, m) in self.mechanisms.iter().enumerate() {
            if !(m.probability > 0.0 && m.probability < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "mechanism {i}: probability {} outside (0, 1)",
                    m.probability
                )));
            }
            let sorted_unique = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]);
            if !sorted_unique(&m.detectors) || !sorted_unique(&m.observables) {
                return Err(Error::InvalidParameter(format!(
                    "mechanism {i}: targets must be sorted and duplicate-free"
                )));
            }
            if m.detectors.iter().any(|&d| d >= self.num_detectors)
                || m.observables.iter().any(|&l| l >= self.num_observables)
            {
                return Err(Error::InvalidParameter(format!(
                    "mechanism {i}: index beyond declared counts"
                )));
            }
        }
        Ok(())
    }

    /// `P(D_i = 1) = (1 - prod_{mech touching i} (1 - 2 p)) / 2`.
    pub fn detector_marginals(&self) -> Vec<f64> {
        let mut prod = vec![1.0; self.num_detectors];
        for m in &self.mechanisms {
            for &d in &m.detectors {
                prod[d] *= 1.0 - 2.0 * m.probability;
            }
        }
        prod.into_iter().map(|q| 0.5 * (1.0 - q)).collect()
    }

    pub fn observable_marginals(&self) -> Vec<f64> {
        let mut prod = vec![1.0; self.num_observables];
        for m in &self.mechanisms {
            for &l in &m.observables {
                prod[l] *= 1.0 - 2.0 * m.probability;
            }
        }
        prod.into_iter().map(|q| 0.5 * (1.0 - q)).collect()
    }

    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"dem\n");
        h.update(serialize_dem(self));
        hex::encode(h.finalize())
    }
}
