//! Experiment configuration: a TOML file, command-line overrides, and the
//! checks run before any trial starts.

use std::path::{Path, PathBuf};

use corrsim::protocols::{BlockParams, LocalParams, PreparedScheme, Sampling, SchemeConfig, MIN_TRIALS};
use serde::Deserialize;

use crate::output::Format;

pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;

/// Why a configuration was rejected. Reported as JSON with exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{context}: {source}")]
    Scheme {
        context: String,
        #[source]
        source: corrsim::Error,
    },
}

/// Contents of a `--config` file. Every field may also be set by a flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub schemes: Vec<SchemeConfig>,
    pub rho: Option<Vec<f64>>,
    pub k: Option<Vec<u64>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub sampling: Option<Sampling>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// A fully resolved sweep.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub schemes: Vec<SchemeConfig>,
    pub rho: Vec<f64>,
    pub k: Vec<u64>,
    pub trials: u64,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub sampling: Sampling,
}

/// One grid cell with its scheme constants computed.
pub struct GridCell {
    pub scheme_index: usize,
    pub name: &'static str,
    pub k: u64,
    pub rho: f64,
    pub prepared: PreparedScheme,
}

impl ExperimentConfig {
    /// Checks grids and trial count, then prepares every `(scheme, k, ρ)`
    /// cell so that precondition failures surface before any trial runs.
    pub fn prepare(&self) -> Result<Vec<GridCell>, ConfigError> {
        if self.schemes.is_empty() {
            return Err(ConfigError::Invalid("no scheme given".into()));
        }
        if self.rho.is_empty() || self.k.is_empty() {
            return Err(ConfigError::Invalid("empty grid".into()));
        }
        if self.trials < MIN_TRIALS {
            return Err(ConfigError::Invalid(format!(
                "trials must be at least {MIN_TRIALS}, got {}",
                self.trials
            )));
        }
        let mut cells = Vec::new();
        for (i, scheme) in self.schemes.iter().enumerate() {
            for &k in &self.k {
                for &rho in &self.rho {
                    let context = format!("{} at k={k}, rho={rho}", scheme.name());
                    let wrap = |source| ConfigError::Scheme {
                        context: context.clone(),
                        source,
                    };
                    let prepared = PreparedScheme::new(scheme, k, rho).map_err(wrap)?;
                    if self.sampling == Sampling::Full {
                        prepared.batch_len().map_err(wrap)?;
                    }
                    cells.push(GridCell {
                        scheme_index: i,
                        name: scheme.name(),
                        k,
                        rho,
                        prepared,
                    });
                }
            }
        }
        cells.sort_by(|a, b| {
            a.name
                .cmp(b.name)
                .then(a.k.cmp(&b.k))
                .then(a.rho.total_cmp(&b.rho))
                .then(a.scheme_index.cmp(&b.scheme_index))
        });
        Ok(cells)
    }
}

/// Scheme tuning given on the command line.
#[derive(Debug, Clone, Default)]
pub struct SchemeFlags {
    pub rho_nominal: Option<f64>,
    pub c_threshold: Option<f64>,
    pub c_bits: Option<f64>,
    pub rho_tilde: Option<f64>,
    pub n_block: Option<usize>,
    pub c_search: Option<f64>,
    pub c_col: Option<f64>,
    pub window_scale: Option<f64>,
    pub k1: Option<u64>,
}

impl SchemeFlags {
    fn local(&self) -> LocalParams {
        let d = LocalParams::default();
        LocalParams {
            c_threshold: self.c_threshold.unwrap_or(d.c_threshold),
            c_bits: self.c_bits.unwrap_or(d.c_bits),
        }
    }

    fn block(&self) -> BlockParams {
        let d = BlockParams::default();
        BlockParams {
            c_search: self.c_search.unwrap_or(d.c_search),
            c_col: self.c_col.unwrap_or(d.c_col),
            window_scale: self.window_scale.unwrap_or(d.window_scale),
        }
    }

    pub fn build(&self, name: &str) -> Result<SchemeConfig, ConfigError> {
        Ok(match name {
            "naive" => SchemeConfig::Naive,
            "max" => SchemeConfig::Max,
            "local" => SchemeConfig::Local {
                rho_nominal: self.rho_nominal,
                params: self.local(),
            },
            "block" => SchemeConfig::Block {
                rho_tilde: self
                    .rho_tilde
                    .ok_or_else(|| ConfigError::Invalid("block scheme needs --rho-tilde".into()))?,
                n_block: self.n_block,
                rho_nominal: self.rho_nominal,
                params: self.block(),
            },
            "two_way" => SchemeConfig::TwoWay {
                k1: self.k1,
                params: self.local(),
            },
            other => return Err(ConfigError::Invalid(format!("unknown scheme '{other}'"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig {
            schemes: vec![SchemeConfig::Naive],
            rho: vec![0.5, -0.5],
            k: vec![8, 4],
            trials: 100,
            seed: 1,
            format: Format::Csv,
            out: None,
            sampling: Sampling::Auto,
        }
    }

    #[test]
    fn cells_are_sorted() {
        let cells = base().prepare().unwrap();
        let keys: Vec<(u64, f64)> = cells.iter().map(|c| (c.k, c.rho)).collect();
        assert_eq!(keys, vec![(4, -0.5), (4, 0.5), (8, -0.5), (8, 0.5)]);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = base();
        c.rho.clear();
        assert_eq!(c.prepare().err().unwrap().to_string(), "empty grid");
        let mut c = base();
        c.trials = 10;
        assert!(c.prepare().is_err());
        let mut c = base();
        c.schemes = vec![SchemeConfig::Max];
        c.k = vec![40];
        c.sampling = Sampling::Full;
        assert!(matches!(c.prepare(), Err(ConfigError::Scheme { .. })));
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            rho = [0.0, 0.5]
            k = [64]
            trials = 200
            [[schemes]]
            scheme = "naive"
            [[schemes]]
            scheme = "local"
            rho_nominal = 0.6
            [schemes.params]
            c_bits = 0.2
        "#;
        let f: FileConfig = toml::from_str(text).unwrap();
        assert_eq!(f.schemes.len(), 2);
        match &f.schemes[1] {
            SchemeConfig::Local { rho_nominal, params } => {
                assert_eq!(*rho_nominal, Some(0.6));
                assert_eq!(params.c_bits, 0.2);
                assert_eq!(params.c_threshold, LocalParams::default().c_threshold);
            }
            other => panic!("{other:?}"),
        }
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }
}
