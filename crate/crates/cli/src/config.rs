//! Flat `key=value` config files. Each entry becomes a long flag placed right
//! after the subcommand, so flags typed on the command line come later and
//! win.

use std::path::Path;

/// Reads a config file into `--key=value` flags. `key = true` becomes a bare
/// `--key`; `key = false` is dropped.
pub fn config_flags(text: &str) -> Result<Vec<String>, String> {
    let mut flags = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected key=value, found `{line}`", lineno + 1));
        };
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(format!("line {}: invalid key `{key}`", lineno + 1));
        }
        match value {
            "true" => flags.push(format!("--{key}")),
            "false" => {}
            _ => flags.push(format!("--{key}={value}")),
        }
    }
    Ok(flags)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// `args` with the config file's flags spliced in after the subcommand.
pub fn expand_args(args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| format!("--config {path}: {e}"))?;
    let flags = config_flags(&text).map_err(|e| format!("--config {path}: {e}"))?;
    // args[0] is the program, args[1] the subcommand
    let at = 2.min(args.len());
    let mut out = args[..at].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}
