//! Line-oriented text format for strategies.
//!
//! ```text
//! # strategy n=4 y_size=2 segments=2
//! # segment counts=0,4 rate=0.0 slack=0.0 covering_size=1 guesses=1
//! 1 1 1 1
//! # segment covering_size=2 guesses=2
//! 0 0 0 0
//! 0 0 1 1
//! ```
//!
//! One guess per line as space-separated symbol indices. Reals are written in
//! shortest round-trip form, so reading a written strategy gives back an
//! identical value. Side-information strategies add a header and one
//! `# z counts=...` line before each per-type strategy.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::guessing::{Segment, Strategy};
use crate::prob::Seq;
use crate::side_info::{SiBlock, SiLayout, SiStrategy};

fn join<T: ToString>(v: &[T], sep: &str) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

fn real(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_strategy(s: &Strategy) -> String {
    let mut out = String::new();
    write_strategy_into(&mut out, s);
    out
}

fn write_strategy_into(out: &mut String, s: &Strategy) {
    let _ = writeln!(
        out,
        "# strategy n={} y_size={} segments={}",
        s.n,
        s.y_size,
        s.segments.len()
    );
    for seg in &s.segments {
        out.push_str("# segment");
        if let Some(c) = &seg.counts {
            let _ = write!(out, " counts={}", join(c, ","));
        }
        if let Some(r) = seg.rate {
            let _ = write!(out, " rate={}", real(r));
        }
        if let Some(r) = seg.slack {
            let _ = write!(out, " slack={}", real(r));
        }
        let _ = writeln!(
            out,
            " covering_size={} guesses={}",
            seg.covering_size,
            seg.guesses.len()
        );
        for g in &seg.guesses {
            out.push_str(&join(g, " "));
            out.push('\n');
        }
    }
}

pub fn write_si_strategy(s: &SiStrategy) -> String {
    let mut out = String::new();
    match &s.layout {
        SiLayout::Shared(inner) => {
            let _ = writeln!(out, "# si-strategy n={} z_size={} layout=shared", s.n, s.z_size);
            write_strategy_into(&mut out, inner);
        }
        SiLayout::PerZType(blocks) => {
            let _ = writeln!(
                out,
                "# si-strategy n={} z_size={} layout=per_z_type blocks={}",
                s.n,
                s.z_size,
                blocks.len()
            );
            for b in blocks {
                let _ = writeln!(out, "# z counts={}", join(&b.z_counts, ","));
                write_strategy_into(&mut out, &b.strategy);
            }
        }
    }
    out
}

/// Non-empty lines with their 1-based line numbers.
struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty()),
        );
        Lines { inner: it.peekable() }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.inner
            .next()
            .ok_or_else(|| Error::invalid(format!("unexpected end of input, expected {what}")))
    }

    /// Parses a `# <tag> key=value ...` header.
    fn header(&mut self, tag: &str) -> Result<(usize, HashMap<&'a str, &'a str>)> {
        let (no, line) = self.next(tag)?;
        let mut words = line.split_whitespace();
        if words.next() != Some("#") || words.next() != Some(tag) {
            return Err(Error::invalid(format!("line {no}: expected '# {tag}' header")));
        }
        let mut fields = HashMap::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("line {no}: malformed field '{w}'")))?;
            fields.insert(k, v);
        }
        Ok((no, fields))
    }

    fn done(&mut self) -> Result<()> {
        match self.inner.next() {
            None => Ok(()),
            Some((no, _)) => Err(Error::invalid(format!("line {no}: trailing content"))),
        }
    }
}

fn field<T: std::str::FromStr>(no: usize, fields: &HashMap<&str, &str>, key: &str) -> Result<T> {
    let raw = fields
        .get(key)
        .ok_or_else(|| Error::invalid(format!("line {no}: missing field '{key}'")))?;
    raw.parse()
        .map_err(|_| Error::invalid(format!("line {no}: bad value '{raw}' for '{key}'")))
}

fn opt_field<T: std::str::FromStr>(no: usize, fields: &HashMap<&str, &str>, key: &str) -> Result<Option<T>> {
    if fields.contains_key(key) {
        field(no, fields, key).map(Some)
    } else {
        Ok(None)
    }
}

fn list(no: usize, raw: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .map(|c| {
            c.parse()
                .map_err(|_| Error::invalid(format!("line {no}: bad count '{c}'")))
        })
        .collect()
}

pub fn read_strategy(text: &str) -> Result<Strategy> {
    let mut lines = Lines::new(text);
    let s = read_strategy_from(&mut lines)?;
    lines.done()?;
    Ok(s)
}

fn read_strategy_from(lines: &mut Lines<'_>) -> Result<Strategy> {
    let (no, head) = lines.header("strategy")?;
    let n: usize = field(no, &head, "n")?;
    let y_size: usize = field(no, &head, "y_size")?;
    let count: usize = field(no, &head, "segments")?;
    let mut segments = Vec::with_capacity(count);
    for _ in 0..count {
        let (no, f) = lines.header("segment")?;
        let counts = f.get("counts").map(|raw| list(no, raw)).transpose()?;
        let rate = opt_field(no, &f, "rate")?;
        let slack = opt_field(no, &f, "slack")?;
        let covering_size = field(no, &f, "covering_size")?;
        let len: usize = field(no, &f, "guesses")?;
        let mut guesses = Vec::with_capacity(len);
        for _ in 0..len {
            let (no, line) = lines.next("a guess")?;
            let g = line
                .split_whitespace()
                .map(|t| t.parse::<u8>())
                .collect::<std::result::Result<Seq, _>>()
                .map_err(|_| Error::invalid(format!("line {no}: bad guess '{line}'")))?;
            Strategy::validate_guesses(n, y_size, std::slice::from_ref(&g))
                .map_err(|e| Error::invalid(format!("line {no}: {e}")))?;
            guesses.push(g);
        }
        segments.push(Segment {
            counts,
            rate,
            slack,
            covering_size,
            guesses,
        });
    }
    Ok(Strategy { n, y_size, segments })
}

pub fn read_si_strategy(text: &str) -> Result<SiStrategy> {
    let mut lines = Lines::new(text);
    let (no, head) = lines.header("si-strategy")?;
    let n = field(no, &head, "n")?;
    let z_size = field(no, &head, "z_size")?;
    let layout = match head.get("layout").copied() {
        Some("shared") => SiLayout::Shared(read_strategy_from(&mut lines)?),
        Some("per_z_type") => {
            let count: usize = field(no, &head, "blocks")?;
            let mut blocks = Vec::with_capacity(count);
            for _ in 0..count {
                let (zno, f) = lines.header("z")?;
                let raw: String = field(zno, &f, "counts")?;
                blocks.push(SiBlock {
                    z_counts: list(zno, &raw)?,
                    strategy: read_strategy_from(&mut lines)?,
                });
            }
            SiLayout::PerZType(blocks)
        }
        other => {
            return Err(Error::invalid(format!("line {no}: unknown layout {other:?}")));
        }
    };
    lines.done()?;
    Ok(SiStrategy { n, z_size, layout })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guessing::build_strategy;
    use crate::prob::{DistortionSpec, JointPmf, Pmf};
    use crate::side_info::build_si_strategy;

    #[test]
    fn strategy_round_trip_is_exact() {
        let d = DistortionSpec::hamming(2).unwrap();
        let p = Pmf::new(vec![0.3, 0.7]).unwrap();
        for limit in [0.0, 0.2, 0.4] {
            let s = build_strategy(5, &p, &d, limit).unwrap();
            let text = write_strategy(&s);
            assert_eq!(read_strategy(&text).unwrap(), s);
            assert_eq!(write_strategy(&read_strategy(&text).unwrap()), text);
        }
        let untyped = Strategy::from_guesses(2, 3, vec![vec![2, 0], vec![1, 1]]).unwrap();
        assert_eq!(read_strategy(&write_strategy(&untyped)).unwrap(), untyped);
    }

    #[test]
    fn si_round_trip_is_exact() {
        let d = DistortionSpec::hamming(2).unwrap();
        for p in [
            JointPmf::binary_symmetric(0.1).unwrap(),
            JointPmf::product(&Pmf::uniform(2).unwrap(), &Pmf::new(vec![0.4, 0.6]).unwrap()),
        ] {
            let s = build_si_strategy(4, &p, &d, 0.25).unwrap();
            assert_eq!(read_si_strategy(&write_si_strategy(&s)).unwrap(), s);
        }
    }

    #[test]
    fn malformed_input_names_the_line() {
        let bad = "# strategy n=2 y_size=2 segments=1\n# segment covering_size=1 guesses=1\n0 5\n";
        let err = read_strategy(bad).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(read_strategy("# strategy n=2 y_size=2\n").is_err());
        let extra = "# strategy n=1 y_size=2 segments=0\n0\n";
        assert!(read_strategy(extra).unwrap_err().to_string().contains("line 2"));
    }
}
