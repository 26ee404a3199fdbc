//! Strict run-configuration parser.
//!
//! The format is line based: `key = values...`, `#` starts a comment, and
//! an indented line continues the previous key's value list (handy for the
//! inhibition matrix). Unknown and duplicate keys are rejected so a typo
//! can never silently change a scientific run.

use std::collections::HashMap;

use netdyn_core::{NetworkParams, Tolerances};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },

    #[error("line {line}: continuation before any key")]
    DanglingContinuation { line: usize },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },

    #[error("key `{key}`: non-numeric value `{value}`")]
    NonNumeric { key: String, value: String },

    #[error("key `{key}`: expected {expected} value(s), got {got}")]
    DimensionMismatch {
        key: String,
        expected: usize,
        got: usize,
    },

    #[error("missing required key `{0}`")]
    MissingKey(&'static str),

    #[error("key `format`: expected `tsv` or `records`, got `{0}`")]
    BadFormat(String),

    #[error("key `{key}`: budget must be positive")]
    ZeroBudget { key: String },

    #[error("invalid parameters: {0}")]
    Params(#[from] netdyn_core::NetError),
}

/// How tabular outputs are rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    /// Tab-separated tables with a header row.
    Tsv,
    /// Self-describing `key: value` records, one group per row.
    Records,
}

/// A parsed and validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: NetworkParams,
    pub seed: Option<u64>,
    /// Orbit/classification step budget.
    pub steps: usize,
    /// Monte-Carlo sample / cloud-size budget.
    pub samples: usize,
    /// Atom generation cap.
    pub generations: usize,
    pub format: OutputFormat,
    /// Optional start state for `simulate`.
    pub start: Option<Vec<f64>>,
    /// Optional probe scale override for classification and atom checks.
    pub delta: Option<f64>,
}

const KEYS: &[&str] = &[
    "n",
    "theta",
    "gamma",
    "beta",
    "h",
    "seed",
    "steps",
    "samples",
    "generations",
    "format",
    "start",
    "delta",
    "root_tol",
    "simultaneity_tol",
    "recurrence_tol",
    "band_tol",
];

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut values: HashMap<String, Vec<String>> = HashMap::new();
    let mut last_key: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let continuation = raw.starts_with(' ') || raw.starts_with('\t');
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if continuation {
            let Some(key) = &last_key else {
                return Err(ConfigError::DanglingContinuation { line: line_no });
            };
            values
                .get_mut(key)
                .expect("continuation key present")
                .extend(trimmed.split_whitespace().map(str::to_string));
            continue;
        }
        let Some((key, rest)) = trimmed.split_once('=') else {
            return Err(ConfigError::Malformed {
                line: line_no,
                text: trimmed.to_string(),
            });
        };
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { line: line_no, key });
        }
        if values.contains_key(&key) {
            return Err(ConfigError::DuplicateKey { line: line_no, key });
        }
        let toks: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
        values.insert(key.clone(), toks);
        last_key = Some(key);
    }

    let n = require_usize(&values, "n")?;
    let theta = require_f64(&values, "theta")?;
    let gamma = require_vector(&values, "gamma", n)?;
    let beta = require_vector(&values, "beta", n)?;
    let h = require_vector(&values, "h", n * n)?;

    let mut tol = Tolerances::default();
    if let Some(x) = optional_f64(&values, "root_tol")? {
        tol.root = x;
    }
    if let Some(x) = optional_f64(&values, "simultaneity_tol")? {
        tol.simultaneity = x;
    }
    if let Some(x) = optional_f64(&values, "recurrence_tol")? {
        tol.recurrence = x;
    }
    if let Some(x) = optional_f64(&values, "band_tol")? {
        tol.partition_band = x;
    }

    let params = NetworkParams::new(n, theta, gamma, beta, h, tol)?;

    let seed = optional_u64(&values, "seed")?;
    let steps = optional_usize(&values, "steps")?.unwrap_or(10_000);
    let samples = optional_usize(&values, "samples")?.unwrap_or(10_000);
    let generations = optional_usize(&values, "generations")?.unwrap_or(40);
    for (key, v) in [
        ("steps", steps),
        ("samples", samples),
        ("generations", generations),
    ] {
        if v == 0 {
            return Err(ConfigError::ZeroBudget {
                key: key.to_string(),
            });
        }
    }

    let format = match values.get("format").map(|v| v.join(" ")) {
        None => OutputFormat::Tsv,
        Some(s) if s == "tsv" => OutputFormat::Tsv,
        Some(s) if s == "records" => OutputFormat::Records,
        Some(s) => return Err(ConfigError::BadFormat(s)),
    };

    let start = match values.get("start") {
        None => None,
        Some(_) => Some(require_vector(&values, "start", n)?),
    };
    let delta = optional_f64(&values, "delta")?;

    Ok(RunConfig {
        params,
        seed,
        steps,
        samples,
        generations,
        format,
        start,
        delta,
    })
}

fn parse_num<T: std::str::FromStr>(key: &str, tok: &str) -> Result<T, ConfigError> {
    tok.parse().map_err(|_| ConfigError::NonNumeric {
        key: key.to_string(),
        value: tok.to_string(),
    })
}

fn scalar<'a>(
    values: &'a HashMap<String, Vec<String>>,
    key: &str,
) -> Option<Result<&'a str, ConfigError>> {
    let toks = values.get(key)?;
    if toks.len() != 1 {
        return Some(Err(ConfigError::DimensionMismatch {
            key: key.to_string(),
            expected: 1,
            got: toks.len(),
        }));
    }
    Some(Ok(&toks[0]))
}

fn require_usize(values: &HashMap<String, Vec<String>>, key: &'static str) -> Result<usize, ConfigError> {
    match scalar(values, key) {
        None => Err(ConfigError::MissingKey(key)),
        Some(tok) => parse_num(key, tok?),
    }
}

fn require_f64(values: &HashMap<String, Vec<String>>, key: &'static str) -> Result<f64, ConfigError> {
    match scalar(values, key) {
        None => Err(ConfigError::MissingKey(key)),
        Some(tok) => parse_num(key, tok?),
    }
}

fn optional_usize(values: &HashMap<String, Vec<String>>, key: &str) -> Result<Option<usize>, ConfigError> {
    scalar(values, key).map(|tok| parse_num(key, tok?)).transpose()
}

fn optional_u64(values: &HashMap<String, Vec<String>>, key: &str) -> Result<Option<u64>, ConfigError> {
    scalar(values, key).map(|tok| parse_num(key, tok?)).transpose()
}

fn optional_f64(values: &HashMap<String, Vec<String>>, key: &str) -> Result<Option<f64>, ConfigError> {
    scalar(values, key).map(|tok| parse_num(key, tok?)).transpose()
}

fn require_vector(
    values: &HashMap<String, Vec<String>>,
    key: &'static str,
    expected: usize,
) -> Result<Vec<f64>, ConfigError> {
    let toks = values.get(key).ok_or(ConfigError::MissingKey(key))?;
    if toks.len() != expected {
        return Err(ConfigError::DimensionMismatch {
            key: key.to_string(),
            expected,
            got: toks.len(),
        });
    }
    toks.iter().map(|t| parse_num(key, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
n = 2
theta = 1.0
gamma = 1.0 1.0
beta = 2.0 2.0
h = 0.0 0.2
    0.2 0.0
";

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.params.n(), 2);
        assert_eq!(cfg.steps, 10_000);
        assert_eq!(cfg.samples, 10_000);
        assert_eq!(cfg.generations, 40);
        assert_eq!(cfg.format, OutputFormat::Tsv);
        assert!(cfg.seed.is_none());
        assert_eq!(cfg.params.h(0, 1), 0.2);
    }

    #[test]
    fn dimension_mismatch_names_the_key() {
        let bad = MINIMAL.replace("gamma = 1.0 1.0", "gamma = 1.0 1.0 1.0");
        let err = parse_config(&bad).unwrap_err();
        assert!(matches!(
            err,
            ConfigError::DimensionMismatch { ref key, expected: 2, got: 3 } if key == "gamma"
        ));
    }

    #[test]
    fn duplicate_key_is_an_error_not_an_override() {
        let bad = format!("{MINIMAL}theta = 2.0\n");
        let err = parse_config(&bad).unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { ref key, .. } if key == "theta"));
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let bad = format!("{MINIMAL}thata = 2.0\n");
        match parse_config(&bad).unwrap_err() {
            ConfigError::UnknownKey { line, key } => {
                assert_eq!(line, 7);
                assert_eq!(key, "thata");
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn non_numeric_value_is_diagnosed() {
        let bad = MINIMAL.replace("theta = 1.0", "theta = one");
        let err = parse_config(&bad).unwrap_err();
        assert!(matches!(err, ConfigError::NonNumeric { ref key, .. } if key == "theta"));
    }

    #[test]
    fn missing_required_key() {
        let bad = MINIMAL.replace("beta = 2.0 2.0\n", "");
        assert!(matches!(
            parse_config(&bad).unwrap_err(),
            ConfigError::MissingKey("beta")
        ));
    }

    #[test]
    fn comments_and_options_parse() {
        let text = format!(
            "{MINIMAL}seed = 42 # fixed\nsteps = 100\nformat = records\nstart = 0.0 0.5\ndelta = 0.01\n"
        );
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.seed, Some(42));
        assert_eq!(cfg.steps, 100);
        assert_eq!(cfg.format, OutputFormat::Records);
        assert_eq!(cfg.start.as_deref(), Some(&[0.0, 0.5][..]));
        assert_eq!(cfg.delta, Some(0.01));
    }

    #[test]
    fn invalid_params_surface_from_core() {
        let bad = MINIMAL.replace("beta = 2.0 2.0", "beta = 1.0 2.0");
        let err = parse_config(&bad).unwrap_err();
        assert!(err.to_string().contains("beta must exceed theta"));
    }
}
