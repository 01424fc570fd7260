//! `key=value` configuration files merged into the command line.

use std::path::Path;

use crate::error::{CliError, Result};

/// Parses `key=value` lines; blank lines and `#` comments are ignored.
pub fn parse_config(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                row: n + 1,
                column: String::new(),
                message: format!("expected key=value, found {line:?}"),
            });
        };
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Subcommand names, used to tell whether one was given.
pub const COMMANDS: [&str; 8] = [
    "fit-local", "fit-global", "cv", "simulate", "generate", "gof", "rmpe", "permtest",
];

fn flag_given(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    let eq = format!("--{key}=");
    args.iter().any(|a| *a == long || a.starts_with(&eq))
}

/// Removes `--config <path>` from `args` and appends every configured key
/// that was not given on the command line, so explicit flags win. A
/// `command` key supplies the subcommand when none is given.
pub fn merge_config_args(mut args: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = if let Some(p) = args[pos].strip_prefix("--config=") {
        let p = p.to_string();
        args.remove(pos);
        p
    } else {
        if pos + 1 >= args.len() {
            return Err(CliError::Usage("--config needs a path".into()));
        }
        let p = args.remove(pos + 1);
        args.remove(pos);
        p
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let entries = parse_config(&text, path)?;
    let has_command = args.iter().skip(1).any(|a| COMMANDS.contains(&a.as_str()));
    for (key, value) in entries {
        if key == "command" {
            if !has_command {
                args.insert(1.min(args.len()), value);
            }
            continue;
        }
        if !flag_given(&args, &key) {
            args.push(format!("--{key}"));
            args.push(value);
        }
    }
    Ok(args)
}
