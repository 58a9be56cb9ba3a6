use std::ffi::OsString;
use std::path::Path;

use super::CliError;

const SUBCOMMANDS: [&str; 10] = [
    "ingest",
    "describe",
    "indicators",
    "dist",
    "cluster",
    "profile",
    "assoc",
    "plot",
    "simulate",
    "pipeline",
];

/// Keys holding file or directory paths.
const PATH_KEYS: [&str; 10] = [
    "sequences",
    "alphabet",
    "outcomes",
    "covariates",
    "clusters",
    "dist",
    "out_dir",
    "transition",
    "initial_from",
    "config",
];

/// Splices the flags of a `--config` file in right after the subcommand,
/// so that flags typed by the user, which come later, override them.
pub(super) fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut config = None;
    for (i, a) in args.iter().enumerate() {
        let Some(s) = a.to_str() else { continue };
        if s == "--config" {
            config = args.get(i + 1).cloned();
        } else if let Some(v) = s.strip_prefix("--config=") {
            config = Some(v.into());
        }
    }
    let Some(path) = config else { return Ok(args) };
    let path = Path::new(&path).to_path_buf();
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let extra = flags_from_toml(&text, base).map_err(|m| CliError::validation(format!("{}: {m}", path.display())))?;
    let at = args
        .iter()
        .position(|a| a.to_str().is_some_and(|s| SUBCOMMANDS.contains(&s)))
        .map_or(args.len(), |i| i + 1);
    let mut out = args[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

pub(super) fn flags_from_toml(text: &str, base: &Path) -> Result<Vec<OsString>, String> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
    let mut out = Vec::new();
    for (key, value) in &table {
        if key == "config" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &toml::Value| -> Result<String, String> {
            match v {
                toml::Value::String(s) => Ok(s.clone()),
                toml::Value::Integer(i) => Ok(i.to_string()),
                toml::Value::Float(f) => Ok(f.to_string()),
                other => Err(format!("unsupported value for {key}: {other}")),
            }
        };
        match value {
            toml::Value::Boolean(true) => out.push(flag.into()),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
                out.push(flag.into());
                out.push(parts.join(",").into());
            }
            v => {
                let mut s = scalar(v)?;
                if PATH_KEYS.contains(&key.as_str()) && Path::new(&s).is_relative() {
                    s = base.join(&s).display().to_string();
                }
                out.push(flag.into());
                out.push(s.into());
            }
        }
    }
    Ok(out)
}
