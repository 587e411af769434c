use std::net::SocketAddr;
use std::path::PathBuf;

use thiserror::Error;

pub const ENV_BIND: &str = "UPCASE_BIND";
pub const ENV_DATA_DIR: &str = "UPCASE_DATA_DIR";
pub const ENV_MODEL: &str = "UPCASE_MODEL";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub bind: SocketAddr,
    pub data_dir: PathBuf,
    /// Reference model file; the bundled 1.0 model when absent.
    pub model_path: Option<PathBuf>,
}

#[derive(Debug, Error)]
#[error("invalid {var}: {reason}")]
pub struct ConfigError {
    pub var: &'static str,
    pub reason: String,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: PathBuf::from("upcase-data"),
            model_path: None,
        }
    }
}

impl Config {
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        if let Some(bind) = get(ENV_BIND) {
            cfg.bind = bind
                .parse()
                .map_err(|e: std::net::AddrParseError| ConfigError {
                    var: ENV_BIND,
                    reason: e.to_string(),
                })?;
        }
        if let Some(dir) = get(ENV_DATA_DIR).filter(|d| !d.is_empty()) {
            cfg.data_dir = PathBuf::from(dir);
        }
        cfg.model_path = get(ENV_MODEL).filter(|m| !m.is_empty()).map(PathBuf::from);
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_overrides() {
        let cfg = Config::from_lookup(|k| match k {
            ENV_BIND => Some("0.0.0.0:9000".into()),
            ENV_DATA_DIR => Some("/tmp/x".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(cfg.bind.port(), 9000);
        assert_eq!(cfg.data_dir, PathBuf::from("/tmp/x"));
        assert_eq!(cfg.model_path, None);
        assert!(Config::from_lookup(|k| (k == ENV_BIND).then(|| "nope".into())).is_err());
    }
}
