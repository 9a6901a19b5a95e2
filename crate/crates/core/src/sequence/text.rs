//! Line-oriented text format for pulse sequences.
//!
//! ```text
//! # name: example
//! # source: user
//! SQR q=1 theta=pi/2 phi=0.0
//! ZZ angle=pi/4
//! ZROT q=2 theta=pi
//! SYS kind=xyz j=1.0 t=0.3927
//! ```
//!
//! Lines starting with `#` are comments; `# name:` and `# source:` carry
//! sequence metadata. Values are angle expressions and may contain spaces.

use std::fmt::Write as _;

use super::{AngleExpr, PulseElement, PulseSequence, Source, SystemKind};
use crate::error::ParseError;
use crate::quantum::Qubit;

pub fn write_sequence(seq: &PulseSequence) -> String {
    let mut out = String::new();
    writeln!(out, "# name: {}", seq.name).unwrap();
    writeln!(out, "# source: {}", seq.source.tag()).unwrap();
    for el in &seq.elements {
        match el {
            PulseElement::Sqr { qubit, theta, phi } => {
                writeln!(out, "SQR q={} theta={theta} phi={phi}", qubit.index())
            }
            PulseElement::Zz { angle } => writeln!(out, "ZZ angle={angle}"),
            PulseElement::ZRot { qubit, theta } => {
                writeln!(out, "ZROT q={} theta={theta}", qubit.index())
            }
            PulseElement::SysEvolve { system, j, t } => {
                writeln!(out, "SYS kind={} j={j:?} t={t}", system.tag())
            }
        }
        .unwrap();
    }
    out
}

pub fn parse_sequence(src: &str) -> Result<PulseSequence, ParseError> {
    let mut seq = PulseSequence::new("", Source::User, Vec::new());
    for (idx, raw) in src.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        let body = line.trim_start();
        let indent = line.len() - body.len();
        if body.is_empty() {
            continue;
        }
        if let Some(comment) = body.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(name) = comment.strip_prefix("name:") {
                seq.name = name.trim().to_owned();
            } else if let Some(src) = comment.strip_prefix("source:") {
                let tag = src.trim();
                seq.source = Source::from_tag(tag)
                    .ok_or_else(|| ParseError::new(line_no, indent + 1, format!("unknown source '{tag}'")))?;
            }
            continue;
        }
        let el = parse_element(body, line_no, indent)?;
        seq.elements.push(el);
    }
    Ok(seq)
}

struct Fields<'a> {
    line: usize,
    tag_col: usize,
    items: Vec<(&'a str, &'a str, usize)>,
}

impl<'a> Fields<'a> {
    fn take(&mut self, key: &str) -> Result<(&'a str, usize), ParseError> {
        let pos = self
            .items
            .iter()
            .position(|(k, _, _)| *k == key)
            .ok_or_else(|| ParseError::new(self.line, self.tag_col, format!("missing field '{key}'")))?;
        let (_, v, col) = self.items.remove(pos);
        Ok((v, col))
    }

    fn expr(&mut self, key: &str) -> Result<AngleExpr, ParseError> {
        let (v, col) = self.take(key)?;
        AngleExpr::parse(v).map_err(|e| ParseError::new(self.line, col + e.column - 1, e.message))
    }

    fn qubit(&mut self) -> Result<Qubit, ParseError> {
        let (v, col) = self.take("q")?;
        v.parse::<u8>()
            .ok()
            .and_then(|n| Qubit::new(n).ok())
            .ok_or_else(|| ParseError::new(self.line, col, format!("qubit must be 1 or 2, got '{v}'")))
    }

    fn finish(self) -> Result<(), ParseError> {
        match self.items.first() {
            None => Ok(()),
            Some((k, _, col)) => Err(ParseError::new(
                self.line,
                col - k.len() - 1,
                format!("unexpected field '{k}'"),
            )),
        }
    }
}

/// Split `key=value` pairs; a key is an identifier at a word start followed by `=`.
fn split_fields(rest: &str, base_col: usize, line: usize) -> Result<Vec<(&str, &str, usize)>, ParseError> {
    let b = rest.as_bytes();
    let mut keys: Vec<(usize, usize)> = Vec::new(); // (key start, '=' index)
    let mut i = 0;
    while i < b.len() {
        let word_start = i == 0 || b[i - 1].is_ascii_whitespace();
        if word_start && (b[i].is_ascii_alphabetic() || b[i] == b'_') {
            let mut j = i;
            while j < b.len() && (b[j].is_ascii_alphanumeric() || b[j] == b'_') {
                j += 1;
            }
            if j < b.len() && b[j] == b'=' {
                keys.push((i, j));
                i = j + 1;
                continue;
            }
        }
        i += 1;
    }
    let first_key = keys.first().map_or(b.len(), |k| k.0);
    if !rest[..first_key].trim().is_empty() {
        let off = rest.len() - rest.trim_start().len();
        return Err(ParseError::new(line, base_col + off, "expected key=value"));
    }
    let mut out: Vec<(&str, &str, usize)> = Vec::new();
    for (n, &(ks, eq)) in keys.iter().enumerate() {
        let end = keys.get(n + 1).map_or(b.len(), |k| k.0);
        let key = &rest[ks..eq];
        if out.iter().any(|(k, _, _)| *k == key) {
            return Err(ParseError::new(
                line,
                base_col + ks,
                format!("duplicate field '{key}'"),
            ));
        }
        let value = rest[eq + 1..end].trim_end();
        if value.trim().is_empty() {
            return Err(ParseError::new(
                line,
                base_col + eq + 1,
                format!("empty value for '{key}'"),
            ));
        }
        out.push((key, value, base_col + eq + 1));
    }
    Ok(out)
}

fn parse_element(body: &str, line: usize, indent: usize) -> Result<PulseElement, ParseError> {
    let tag_end = body.find(char::is_whitespace).unwrap_or(body.len());
    let tag = &body[..tag_end];
    let tag_col = indent + 1;
    let items = split_fields(&body[tag_end..], indent + tag_end + 1, line)?;
    let mut f = Fields { line, tag_col, items };
    let el = match tag {
        "SQR" => {
            let qubit = f.qubit()?;
            PulseElement::Sqr {
                qubit,
                theta: f.expr("theta")?,
                phi: f.expr("phi")?,
            }
        }
        "ZZ" => PulseElement::Zz {
            angle: f.expr("angle")?,
        },
        "ZROT" => {
            let qubit = f.qubit()?;
            PulseElement::ZRot {
                qubit,
                theta: f.expr("theta")?,
            }
        }
        "SYS" => {
            let (kind, col) = f.take("kind")?;
            let system = match kind.trim() {
                "zz" => SystemKind::Zz,
                "xyz" => SystemKind::Xyz,
                other => return Err(ParseError::new(line, col, format!("unknown system '{other}'"))),
            };
            let (jv, jcol) = f.take("j")?;
            let j = jv
                .trim()
                .parse::<f64>()
                .map_err(|_| ParseError::new(line, jcol, format!("bad coupling '{jv}'")))?;
            PulseElement::SysEvolve {
                system,
                j,
                t: f.expr("t")?,
            }
        }
        other => {
            return Err(ParseError::new(
                line,
                tag_col,
                format!("unknown element '{other}'"),
            ));
        }
    };
    f.finish()?;
    Ok(el)
}
