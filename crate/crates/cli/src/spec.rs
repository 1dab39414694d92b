//! Problem files (JSON) and command-line overrides.

use deception_core::{DistortionSpec, JointPmf, Pmf, RdOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Nats,
    Bits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    #[serde(alias = "monte_carlo")]
    #[value(alias = "monte-carlo")]
    Mc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistortionField {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

/// The file format. Every field is optional so flags can fill gaps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distortion: Option<DistortionField>,
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<RdOptions>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_resolution: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub units: Option<Units>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub type_counts: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converse_eps: Option<f64>,
}

/// Source text kept for line numbers in diagnostics.
pub struct Loaded {
    pub spec: SpecFile,
    text: Option<String>,
}

/// 1-based line of the first `"key":` in `text`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().enumerate().find_map(|(i, line)| {
        let at = line.find(&quoted)?;
        line[at + quoted.len()..].trim_start().starts_with(':').then_some(i + 1)
    })
}

impl Loaded {
    pub fn from_text(text: String) -> Result<Self, CliError> {
        let spec: SpecFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("spec line {} column {}: {e}", e.line(), e.column())))?;
        Ok(Loaded { spec, text: Some(text) })
    }

    pub fn from_flags() -> Self {
        Loaded {
            spec: SpecFile::default(),
            text: None,
        }
    }

    /// An input error attributed to the line of `key` when it came from the file.
    pub fn field_error(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        match self.text.as_deref().and_then(|t| line_of(t, key)) {
            Some(line) => CliError::Invalid(format!("spec line {line}: field '{key}': {msg}")),
            None => CliError::Invalid(format!("{key}: {msg}")),
        }
    }
}

/// The source after validation.
pub enum Source {
    Marginal(Pmf),
    Joint(JointPmf),
}

impl Source {
    pub fn x_size(&self) -> usize {
        match self {
            Source::Marginal(p) => p.alphabet_size(),
            Source::Joint(j) => j.x_size(),
        }
    }
}

/// A validated problem.
pub struct Problem {
    pub spec: SpecFile,
    pub source: Source,
    pub distortion: DistortionSpec,
    pub hash: String,
}

impl Problem {
    pub fn resolve(loaded: &Loaded) -> Result<Self, CliError> {
        let spec = loaded.spec.clone();
        let source = match (&spec.source, &spec.joint) {
            (Some(_), Some(_)) => {
                return Err(loaded.field_error("joint", "give either 'source' or 'joint', not both"));
            }
            (Some(p), None) => Source::Marginal(Pmf::new(p.clone()).map_err(|e| loaded.field_error("source", e))?),
            (None, Some(rows)) => Source::Joint(JointPmf::from_rows(rows).map_err(|e| loaded.field_error("joint", e))?),
            (None, None) => {
                return Err(CliError::Invalid(
                    "a 'source' or 'joint' distribution is required".into(),
                ));
            }
        };
        let k = source.x_size();
        let distortion = match spec
            .distortion
            .clone()
            .unwrap_or(DistortionField::Named("hamming".into()))
        {
            DistortionField::Named(name) if name.eq_ignore_ascii_case("hamming") => {
                DistortionSpec::hamming(k).map_err(|e| loaded.field_error("distortion", e))?
            }
            DistortionField::Named(name) => {
                return Err(loaded.field_error("distortion", format!("unknown distortion '{name}'")));
            }
            DistortionField::Matrix(rows) => {
                let d = DistortionSpec::new(&rows).map_err(|e| loaded.field_error("distortion", e))?;
                if d.x_size() != k {
                    return Err(loaded.field_error(
                        "distortion",
                        format!("matrix has {} rows but the source has {k} symbols", d.x_size()),
                    ));
                }
                d
            }
        };
        for (key, v) in [
            ("D", spec.d),
            ("grid_resolution", spec.grid_resolution),
            ("converse_eps", spec.converse_eps),
        ] {
            if let Some(v) = v {
                if !v.is_finite() || v < 0.0 {
                    return Err(loaded.field_error(key, format!("{v} must be finite and non-negative")));
                }
            }
        }
        if let Some(grid) = &spec.grid {
            deception_core::rd::check_grid(grid).map_err(|e| loaded.field_error("grid", e))?;
        }
        if spec.n == Some(0) {
            return Err(loaded.field_error("n", "must be positive"));
        }
        if spec.trials == Some(0) {
            return Err(loaded.field_error("trials", "must be positive"));
        }
        let canonical = serde_json::to_vec(&spec).expect("spec serializes");
        let hash = hex::encode(Sha256::digest(&canonical));
        Ok(Problem {
            spec,
            source,
            distortion,
            hash,
        })
    }

    pub fn d_limit(&self) -> Result<f64, CliError> {
        self.spec
            .d
            .ok_or_else(|| CliError::Invalid("a distortion limit 'D' is required".into()))
    }

    /// The sweep grid, or the single limit `D`.
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        match (&self.spec.grid, self.spec.d) {
            (Some(g), _) => Ok(g.clone()),
            (None, Some(d)) => Ok(vec![d]),
            (None, None) => Err(CliError::Invalid("a 'grid' or a limit 'D' is required".into())),
        }
    }

    pub fn n(&self) -> Result<usize, CliError> {
        self.spec
            .n
            .ok_or_else(|| CliError::Invalid("a sequence length 'n' is required".into()))
    }

    pub fn rd_options(&self) -> RdOptions {
        self.spec.tolerances.unwrap_or_default()
    }
}
