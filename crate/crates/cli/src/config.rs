//! Experiment configuration files.
//!
//! A config file is a flat TOML table whose keys are the long flag names
//! (`lambda-grid = "0.1:0.9:0.1"`). Each command reads the keys it knows;
//! flags given on the command line override the file.

use std::path::{Path, PathBuf};

use blbf::document::{sha256_hex, Document};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn load_table(path: &Path) -> CliResult<toml::Table> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    text.parse::<toml::Table>().map_err(|e| CliError::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Overlays the flags that were given on top of the file's values.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&PathBuf>) -> CliResult<T> {
    let Some(path) = config else {
        return round_trip(flags, "command line");
    };
    let mut merged = load_table(path)?;
    let given = toml::Table::try_from(flags).map_err(|e| CliError::Config {
        path: "command line".into(),
        message: e.to_string(),
    })?;
    merged.extend(given);
    merged.try_into().map_err(|e: toml::de::Error| CliError::Config {
        path: path.display().to_string(),
        message: e.message().to_string(),
    })
}

fn round_trip<T: Serialize + DeserializeOwned>(value: &T, origin: &str) -> CliResult<T> {
    let table = toml::Table::try_from(value).map_err(|e| CliError::Config {
        path: origin.into(),
        message: e.to_string(),
    })?;
    table.try_into().map_err(|e: toml::de::Error| CliError::Config {
        path: origin.into(),
        message: e.message().to_string(),
    })
}

/// SHA-256 of the canonical TOML rendering of a resolved configuration.
pub fn digest<T: Serialize>(resolved: &T) -> String {
    sha256_hex(toml::to_string(resolved).unwrap_or_default().as_bytes())
}

/// A document whose `[meta]` section names the toolkit version, the
/// command and the configuration digest.
pub fn output_document<T: Serialize>(title: &str, command: &str, resolved: &T) -> Document {
    let mut doc = Document::new(title);
    doc.section("meta")
        .set("version", blbf::VERSION)
        .set("command", command)
        .set("config_digest", digest(resolved));
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, Serialize, Deserialize, PartialEq)]
    #[serde(rename_all = "kebab-case")]
    struct Demo {
        seed: Option<u64>,
        lambda_grid: Option<String>,
        method: Option<String>,
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seed = 3\nlambda-grid = \"0.1:0.5:0.1\"\nunrelated = 1\n").unwrap();
        let flags = Demo {
            seed: Some(9),
            ..Demo::default()
        };
        let r = resolve(&flags, Some(&path)).unwrap();
        assert_eq!(r.seed, Some(9));
        assert_eq!(r.lambda_grid.as_deref(), Some("0.1:0.5:0.1"));
        assert_eq!(r.method, None);
    }

    #[test]
    fn bad_types_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "seed = \"x\"\n").unwrap();
        let err = resolve(&Demo::default(), Some(&path)).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_USAGE);
    }

    #[test]
    fn digest_tracks_values() {
        let a = Demo {
            seed: Some(1),
            ..Demo::default()
        };
        let b = Demo {
            seed: Some(2),
            ..Demo::default()
        };
        assert_ne!(digest(&a), digest(&b));
        assert_eq!(digest(&a), digest(&a));
    }
}
