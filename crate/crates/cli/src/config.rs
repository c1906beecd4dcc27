//! `--config` files: a flat TOML table whose keys are long flag names
//! (`n = 600`, `beta_tte = [-2, -3.5, 1, 3, 4]`, `scenario = "proposed"`).
//!
//! The file is expanded into ordinary arguments placed before the ones typed
//! on the command line. Since every flag overrides earlier occurrences of
//! itself, the command line wins.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config {path}: {message}")]
    Parse { path: String, message: String },
}

fn scalar(v: &toml::Value) -> Option<String> {
    match v {
        toml::Value::String(s) => Some(s.clone()),
        toml::Value::Integer(i) => Some(i.to_string()),
        toml::Value::Float(f) => Some(f.to_string()),
        _ => None,
    }
}

pub fn config_args(path: &Path) -> Result<Vec<OsString>, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    let parse_err = |message: String| ConfigError::Parse {
        path: path.display().to_string(),
        message,
    };
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| parse_err(e.to_string()))?;
    let mut out = Vec::new();
    for (key, value) in &table {
        let flag = format!("--{}", key.replace('_', "-"));
        let rendered = match value {
            toml::Value::Boolean(true) => {
                out.push(flag.into());
                continue;
            }
            toml::Value::Boolean(false) => continue,
            toml::Value::Array(items) => items
                .iter()
                .map(scalar)
                .collect::<Option<Vec<_>>>()
                .map(|v| v.join(","))
                .ok_or_else(|| parse_err(format!("`{key}` must be a list of scalars")))?,
            other => scalar(other).ok_or_else(|| parse_err(format!("`{key}` has an unsupported type")))?,
        };
        out.push(format!("{flag}={rendered}").into());
    }
    Ok(out)
}

/// Splices the contents of the first `--config` file into `argv`, right
/// after the subcommand name.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        let s = a.to_string_lossy();
        if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.to_string());
            break;
        }
        if s == "--config" {
            path = argv.get(i + 1).map(|p| p.to_string_lossy().into_owned());
            break;
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    // Subcommand is the first argument that is not a flag.
    let Some(sub) = argv.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')) else {
        return Ok(argv);
    };
    let at = sub + 2;
    let mut out = argv[..at].to_vec();
    out.extend(config_args(Path::new(&path))?);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_precede_command_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        fs::write(&p, "n = 600\nbeta_tte = [-2, -3.5, 1, 3, 4]\nscenario = \"proposed\"\n").unwrap();
        let argv: Vec<OsString> = ["pstrata", "simulate", "--config", p.to_str().unwrap(), "--n", "300"]
            .iter()
            .map(OsString::from)
            .collect();
        let out: Vec<String> = expand(argv)
            .unwrap()
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect();
        assert_eq!(out[0..2], ["pstrata", "simulate"]);
        assert!(out.contains(&"--beta-tte=-2,-3.5,1,3,4".to_string()));
        let file_n = out.iter().position(|s| s == "--n=600").unwrap();
        let flag_n = out.iter().position(|s| s == "--n").unwrap();
        assert!(file_n < flag_n);
    }
}
