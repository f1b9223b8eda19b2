//! Optional JSON experiment manifest. Keys mirror the long flag names with
//! `-` replaced by `_`; any flag given on the command line wins.

use std::path::{Path, PathBuf};

use convexmix::Mode;
use serde::Deserialize;

use crate::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub case: Option<u8>,
    pub input: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub n: Option<usize>,
    pub mu: Option<f64>,
    pub eps: Option<f64>,
    pub lambda_plus: Option<f64>,
    pub ybound: Option<f64>,
    pub mode: Option<Mode>,
    pub lambda_init: Option<f64>,
    pub window: Option<String>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub budget: Option<usize>,
    pub resolution: Option<f64>,
    pub logx: Option<bool>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub override_a: Option<f64>,
    pub mu_list: Option<Vec<f64>>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// The optional config at `path`, or an empty one.
    pub fn load_opt(path: Option<&Path>) -> Result<Self> {
        path.map(Self::load).transpose().map(Option::unwrap_or_default)
    }
}

/// `flag` if given, else the config value.
pub fn pick<T>(flag: Option<T>, config: &Option<T>) -> Option<T>
where
    T: Clone,
{
    flag.or_else(|| config.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_subset() {
        let c = Config::from_json(r#"{"case": 2, "mu": 0.04, "mode": "project", "mu_list": [0.02, 0.04]}"#).unwrap();
        assert_eq!(c.case, Some(2));
        assert_eq!(c.mode, Some(Mode::Project));
        assert_eq!(c.mu_list.as_deref(), Some(&[0.02, 0.04][..]));
        assert_eq!(c.n, None);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::from_json(r#"{"cases": 1}"#).is_err());
    }

    #[test]
    fn flag_wins() {
        assert_eq!(pick(Some(3), &Some(5)), Some(3));
        assert_eq!(pick(None, &Some(5)), Some(5));
        assert_eq!(pick::<u8>(None, &None), None);
    }
}
