//! Optional line-oriented `key=value` configuration files. Keys carry the
//! same names as the long command-line flags; explicit flags win on
//! conflict, and keys that do not apply to the current subcommand are
//! ignored so one file can serve several commands.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                bail!(
                    "{}:{}: expected key=value, found {trimmed:?}",
                    path.display(),
                    lineno + 1
                );
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => match raw.parse::<T>() {
                Ok(value) => Ok(Some(value)),
                Err(e) => bail!("config key {key}={raw}: {e}"),
            },
        }
    }

    /// Flag value if given, else the config-file value, else the default.
    pub fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        Ok(self.get(key)?.unwrap_or(default))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_and_resolves_with_flag_priority() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "# comment\norder = 4\nseed=9").unwrap();
        let config = FileConfig::load(Some(file.path())).unwrap();
        assert_eq!(config.resolve(None, "order", 6usize).unwrap(), 4);
        assert_eq!(config.resolve(Some(8usize), "order", 6).unwrap(), 8);
        assert_eq!(config.resolve(None, "missing", 1.5f64).unwrap(), 1.5);
    }

    #[test]
    fn malformed_lines_error() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "no equals sign").unwrap();
        assert!(FileConfig::load(Some(file.path())).is_err());
    }
}
