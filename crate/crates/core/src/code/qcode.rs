//! `qcode v1` text format.
//!
//! ```text
//! qcode v1
//! n <n> k <k>
//! Hx
//! <rows of n space-separated bits>
//! Hz
//! <rows of n space-separated bits>
//! S
//! <rows of 2n bits: x part then z part>
//! ```
//!
//! `#` starts a comment. Sections may be empty or absent. Dependent rows are
//! dropped in file order before `k` is checked against `n - rank`.

use std::fmt::Write as _;
use std::path::Path;

use super::{independent_rows, StabilizerCode};
use crate::error::{Error, Result};
use crate::gf2::{BinaryMatrix, BinaryVector};
use crate::pauli::PauliOperator;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Hx,
    Hz,
    S,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_bits(line_no: usize, text: &str, expected: usize) -> Result<BinaryVector> {
    let bits = text
        .split_whitespace()
        .map(|t| match t {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(parse_err(line_no, format!("invalid bit {other:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    if bits.len() != expected {
        return Err(parse_err(
            line_no,
            format!("row has {} entries, expected {expected}", bits.len()),
        ));
    }
    Ok(BinaryVector::from_bits(bits))
}

/// Parses and validates a code. `name` is used as the code's label.
pub fn parse_qcode(text: &str, name: &str) -> Result<StabilizerCode> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, magic) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    if magic != "qcode v1" {
        return Err(parse_err(ln, format!("expected `qcode v1`, found {magic:?}")));
    }
    let (ln, dims) = lines
        .next()
        .ok_or_else(|| parse_err(ln + 1, "missing `n <n> k <k>` line"))?;
    let toks: Vec<&str> = dims.split_whitespace().collect();
    let (n, k) = match toks.as_slice() {
        ["n", n, "k", k] => (
            n.parse::<usize>()
                .map_err(|_| parse_err(ln, format!("invalid n {n:?}")))?,
            k.parse::<usize>()
                .map_err(|_| parse_err(ln, format!("invalid k {k:?}")))?,
        ),
        _ => return Err(parse_err(ln, "expected `n <n> k <k>`")),
    };

    let mut hx = BinaryMatrix::zeros(0, n);
    let mut hz = BinaryMatrix::zeros(0, n);
    let mut symp = BinaryMatrix::zeros(0, 2 * n);
    let mut section = None;
    for (ln, line) in lines {
        match line {
            "Hx" => section = Some(Section::Hx),
            "Hz" => section = Some(Section::Hz),
            "S" => section = Some(Section::S),
            row => match section {
                None => return Err(parse_err(ln, "matrix row before any `Hx`/`Hz`/`S` header")),
                Some(Section::Hx) => hx.push_row(parse_bits(ln, row, n)?)?,
                Some(Section::Hz) => hz.push_row(parse_bits(ln, row, n)?)?,
                Some(Section::S) => symp.push_row(parse_bits(ln, row, 2 * n)?)?,
            },
        }
    }

    let zero = BinaryVector::zeros(n);
    let mut all = BinaryMatrix::zeros(0, 2 * n);
    for r in hx.rows() {
        all.push_row(r.concat(&zero))?;
    }
    for r in hz.rows() {
        all.push_row(zero.concat(r))?;
    }
    for r in symp.rows() {
        all.push_row(r.clone())?;
    }
    let stabilizers = independent_rows(&all)
        .iter()
        .map(PauliOperator::from_symplectic)
        .collect::<Result<Vec<_>>>()?;
    let code = StabilizerCode::new_unchecked(n, stabilizers, name);
    code.validate().into_result()?;
    if code.k() != k {
        return Err(Error::InvalidCode(vec![format!(
            "header declares k = {k}, generators give k = {}",
            code.k()
        )]));
    }
    Ok(code)
}

pub fn load_code_file(path: impl AsRef<Path>) -> Result<StabilizerCode> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "code".into());
    parse_qcode(&text, &name)
}

fn push_row(out: &mut String, bits: impl Iterator<Item = bool>) {
    let row: Vec<&str> = bits.map(|b| if b { "1" } else { "0" }).collect();
    out.push_str(&row.join(" "));
    out.push('\n');
}

/// Serializes a code. Pure X-type and Z-type generators go to `Hx`/`Hz` and
/// the rest to `S` when that keeps the generator order (which fixes the
/// meaning of syndrome bits); otherwise every generator goes to `S`.
pub fn write_qcode(code: &StabilizerCode) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "qcode v1");
    let _ = writeln!(out, "# {}", code.name());
    if let Some(d) = code.distance() {
        let _ = writeln!(out, "# distance {d}");
    }
    let _ = writeln!(out, "n {} k {}", code.n(), code.k());
    let section = |s: &PauliOperator| {
        if s.is_x_type() && !s.is_identity() {
            0
        } else if s.is_z_type() && !s.is_identity() {
            1
        } else {
            2
        }
    };
    let stabs = code.stabilizers();
    if stabs.windows(2).all(|w| section(&w[0]) <= section(&w[1])) {
        let mut current = None;
        for s in stabs {
            let sec = section(s);
            if current != Some(sec) {
                for skipped in current.map_or(0, |c| c + 1)..=sec.min(1) {
                    out.push_str(["Hx\n", "Hz\n"][skipped]);
                }
                if sec == 2 {
                    out.push_str("S\n");
                }
                current = Some(sec);
            }
            match sec {
                0 => push_row(&mut out, s.x_part().iter()),
                1 => push_row(&mut out, s.z_part().iter()),
                _ => push_row(&mut out, s.to_symplectic().iter()),
            }
        }
    } else {
        out.push_str("S\n");
        for s in stabs {
            push_row(&mut out, s.to_symplectic().iter());
        }
    }
    out
}
