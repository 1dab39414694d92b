//! Number formatting, metadata and atomic output.

use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::CliError;
use crate::spec::{Problem, Units};

pub const TOOL: &str = "deception";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rounds to `digits` significant digits.
pub fn round_sig(v: f64, digits: usize) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", digits - 1, v)
        .parse()
        .expect("formatted float parses")
}

#[derive(Debug, Clone, Copy)]
pub struct Render {
    pub units: Units,
    pub full_precision: bool,
}

impl Render {
    /// An information quantity given in nats, in the selected unit.
    pub fn info(&self, nats: f64) -> f64 {
        match self.units {
            Units::Nats => nats,
            Units::Bits => nats / std::f64::consts::LN_2,
        }
    }

    pub fn number(&self, v: f64) -> f64 {
        if self.full_precision {
            v
        } else {
            round_sig(v, 6)
        }
    }

    /// A CSV cell.
    pub fn cell(&self, v: f64) -> String {
        let x = self.number(v);
        if x != 0.0 && x.abs() < 1e-4 {
            format!("{x:e}")
        } else {
            format!("{x}")
        }
    }

    fn round_value(&self, v: &mut Value) {
        match v {
            Value::Number(n) if n.is_f64() => {
                let x = self.number(n.as_f64().expect("checked"));
                *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
            }
            Value::Array(items) => items.iter_mut().for_each(|i| self.round_value(i)),
            Value::Object(map) => map.values_mut().for_each(|i| self.round_value(i)),
            _ => {}
        }
    }

    /// Pretty JSON with every real rounded unless full precision was asked for.
    pub fn json(&self, mut v: Value) -> String {
        self.round_value(&mut v);
        let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
        s.push('\n');
        s
    }
}

/// Reproducibility fields carried by every output.
pub fn meta(problem: &Problem, command: &str, seed: u64, units: Units) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tool".into(), TOOL.into());
    m.insert("version".into(), VERSION.into());
    m.insert("command".into(), command.into());
    m.insert("spec_sha256".into(), problem.hash.clone().into());
    m.insert("seed".into(), seed.into());
    m.insert(
        "units".into(),
        match units {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
        .into(),
    );
    m
}

/// The metadata as leading `#` lines of a CSV file.
pub fn csv_preamble(meta: &Map<String, Value>) -> String {
    let fields: Vec<String> = meta
        .iter()
        .map(|(k, v)| match v {
            Value::String(s) => format!("{k}={s}"),
            other => format!("{k}={other}"),
        })
        .collect();
    format!("# {}\n", fields.join(" "))
}

pub fn csv_rows(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Writes `content` to `path` through a temporary file in the same
/// directory, so readers never see a partial file; stdout if no path.
pub fn emit(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        return out
            .write_all(content.as_bytes())
            .and_then(|()| out.flush())
            .map_err(|e| CliError::Io(format!("stdout: {e}")));
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(content.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
