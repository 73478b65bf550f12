//! Plain-text `key = value` config files, merged underneath command-line flags.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Command;
use discode_core::Error;

pub const CONFIG_ENV: &str = "DISCODE_CONFIG";
pub const DEFAULT_CONFIG: &str = "discode.conf";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Parse `key = value` lines. Blank lines and `#` comments are skipped;
/// underscores in keys are read as hyphens.
pub fn parse(body: &str, path: &Path) -> Result<Vec<Entry>, Error> {
    let mut out = Vec::new();
    for (i, raw) in body.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected key = value".into(),
            });
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "empty key".into(),
            });
        }
        out.push(Entry {
            line: i + 1,
            key,
            value: value.trim().trim_matches('"').to_string(),
        });
    }
    Ok(out)
}

/// Explicit path first, then the environment variable, then the default
/// file in the working directory if it exists.
pub fn locate(explicit: Option<&Path>) -> Option<(PathBuf, bool)> {
    if let Some(p) = explicit {
        return Some((p.to_path_buf(), true));
    }
    if let Some(p) = std::env::var_os(CONFIG_ENV).filter(|p| !p.is_empty()) {
        return Some((PathBuf::from(p), true));
    }
    let p = PathBuf::from(DEFAULT_CONFIG);
    p.is_file().then_some((p, false))
}

pub fn load(path: &Path) -> Result<Vec<Entry>, Error> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&body, path).map_err(|e| Error::invalid(e.to_string()))
}

/// Turn config entries into flags for `subcommand`. Keys belonging to other
/// subcommands are skipped; keys no subcommand knows are rejected.
pub fn to_args(
    cmd: &Command,
    subcommand: &str,
    entries: &[Entry],
    path: &Path,
) -> Result<Vec<OsString>, Error> {
    let sub = cmd
        .find_subcommand(subcommand)
        .ok_or_else(|| Error::invalid(format!("unknown subcommand {subcommand:?}")))?;
    let mut args = Vec::new();
    for e in entries {
        let Some(arg) = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(e.key.as_str()))
        else {
            let known = cmd
                .get_subcommands()
                .flat_map(|s| s.get_arguments())
                .chain(cmd.get_arguments())
                .any(|a| a.get_long() == Some(e.key.as_str()));
            if known {
                continue;
            }
            return Err(Error::invalid(format!(
                "{}:{}: unknown setting {:?}",
                path.display(),
                e.line,
                e.key
            )));
        };
        let flag = OsString::from(format!("--{}", e.key));
        if arg.get_action().takes_values() {
            args.push(flag);
            args.push(OsString::from(&e.value));
        } else {
            match e.value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => args.push(flag),
                "false" | "no" | "off" | "0" => {}
                other => {
                    return Err(Error::invalid(format!(
                        "{}:{}: {:?} expects true or false, got {other:?}",
                        path.display(),
                        e.line,
                        e.key
                    )))
                }
            }
        }
    }
    Ok(args)
}

/// Insert `extra` right after the subcommand token so that flags given on the
/// command line, which come later, take precedence.
pub fn splice(argv: &[OsString], subcommand: &str, extra: Vec<OsString>) -> Vec<OsString> {
    let pos = argv
        .iter()
        .enumerate()
        .skip(1)
        .find(|(i, a)| a.as_os_str() == subcommand && argv[i - 1] != "--config")
        .map(|(i, _)| i)
        .unwrap_or(argv.len() - 1);
    let mut out = argv[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[pos + 1..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries() {
        let body = "# comment\n\nk = 7\neta_strength=50\n--seed = \"3\"\n";
        let e = parse(body, Path::new("x.conf")).unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(
            (e[1].key.as_str(), e[1].value.as_str()),
            ("eta-strength", "50")
        );
        assert_eq!((e[2].line, e[2].value.as_str()), (5, "3"));
        assert!(parse("novalue\n", Path::new("x")).is_err());
    }

    #[test]
    fn splice_after_subcommand() {
        let argv: Vec<OsString> = ["discode", "--config", "run", "run", "--k", "3"]
            .iter()
            .map(OsString::from)
            .collect();
        let out = splice(&argv, "run", vec!["--k".into(), "9".into()]);
        let s: Vec<_> = out.iter().map(|a| a.to_str().unwrap()).collect();
        assert_eq!(
            s,
            ["discode", "--config", "run", "run", "--k", "9", "--k", "3"]
        );
    }
}
