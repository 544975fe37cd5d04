//! `--config FILE` support.
//!
//! Each key of the JSON object becomes a flag inserted right after the
//! subcommand, so flags given on the command line override file values and
//! both go through the same parser and validation.

use std::ffi::OsString;
use std::fs;

use serde_json::Value;

/// Expands `--config FILE` in `argv` into ordinary flags.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--config") => {
                path = Some(it.next().ok_or("--config needs a file")?);
            }
            Some(s) if s.starts_with("--config=") => path = Some(OsString::from(&s["--config=".len()..])),
            _ => rest.push(a),
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.to_string_lossy()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.to_string_lossy()))?;
    let flags = flags_from_json(&value)?;
    // The subcommand is the first argument after the program name that is
    // not a flag.
    let pos = rest.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-'));
    let Some(pos) = pos else {
        return Ok(rest);
    };
    let at = pos + 2;
    rest.splice(at..at, flags.into_iter().map(OsString::from));
    Ok(rest)
}

fn flags_from_json(value: &Value) -> Result<Vec<String>, String> {
    let Value::Object(map) = value else {
        return Err("config file must hold a JSON object".into());
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let flag = if key.len() == 1 {
            format!("--{key}")
        } else {
            format!("--{}", key.replace('_', "-"))
        };
        match v {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Number(n) => out.extend([flag, n.to_string()]),
            Value::String(s) => out.extend([flag, s.clone()]),
            Value::Array(items) => {
                let joined = items
                    .iter()
                    .map(|i| match i {
                        Value::Number(n) => Ok(n.to_string()),
                        Value::String(s) => Ok(s.clone()),
                        _ => Err(format!("config key {key:?}: list items must be numbers or strings")),
                    })
                    .collect::<Result<Vec<_>, _>>()?
                    .join(",");
                out.extend([flag, joined]);
            }
            Value::Object(_) => return Err(format!("config key {key:?}: nested objects are not supported")),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn keys_become_flags_after_the_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"m": 2, "Z": 1, "q_from": 0.5, "non_interacting": true, "eta_list": [0.1, 0.2]}"#).unwrap();
        let got = expand(os(&["prog", "--config", p.to_str().unwrap(), "sweep", "--m", "1.5"])).unwrap();
        let got: Vec<_> = got.iter().map(|s| s.to_str().unwrap()).collect();
        assert_eq!(
            got,
            [
                "prog", "sweep", "--Z", "1", "--eta-list", "0.1,0.2", "--m", "2", "--non-interacting", "--q-from",
                "0.5", "--m", "1.5"
            ]
        );
    }

    #[test]
    fn without_config_argv_is_unchanged() {
        let argv = os(&["prog", "linear", "--m", "2"]);
        assert_eq!(expand(argv.clone()).unwrap(), argv);
    }
}
