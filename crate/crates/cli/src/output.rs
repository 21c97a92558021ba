use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::ArgMatches;
use growth_core::GrowthError;

#[derive(Debug)]
pub enum Failure {
    /// Malformed invocation.
    Usage(String),
    /// Well-formed but unusable configuration.
    Infeasible(String),
    Io(String),
    /// Already printed; just exit with this code.
    Reported(u8),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Io(_) => 1,
            Failure::Reported(c) => *c,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Infeasible(m) => write!(f, "infeasible configuration: {m}"),
            Failure::Io(m) => write!(f, "{m}"),
            Failure::Reported(_) => Ok(()),
        }
    }
}

impl From<GrowthError> for Failure {
    fn from(e: GrowthError) -> Self {
        match e {
            GrowthError::Io(e) => Failure::Io(e.to_string()),
            GrowthError::Csv(e) => Failure::Io(e.to_string()),
            other => Failure::Infeasible(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// What a command produced, for the manifest and the exit status.
#[derive(Debug, Default)]
pub struct Report {
    pub out: Option<PathBuf>,
    /// Values resolved by the command itself (defaults that depend on
    /// other flags).
    pub resolved: Vec<(String, String)>,
    pub pass: bool,
    /// Stop reason counts over all runs.
    pub stops: BTreeMap<String, usize>,
}

pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(name))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Round-trip float text.
pub fn num(v: f64) -> String {
    growth_core::history::fmt_real(v)
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn flag(b: bool) -> String {
    (b as u8).to_string()
}

/// Flat `key = value` lines; `#` starts a comment.
pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Failure::Usage(format!("{}:{}: expected key = value", path.display(), i + 1)));
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Writes `manifest.txt`: every resolved option of the subcommand, enough
/// to reproduce the outputs, plus timing as a comment.
pub fn write_manifest(
    dir: &Path,
    name: &str,
    def: &clap::Command,
    sub: &ArgMatches,
    report: &Report,
    elapsed: Duration,
) -> Result<(), Failure> {
    let mut lines = vec![
        "# growth run manifest".to_string(),
        format!("command = {name}"),
        format!("version = {}", env!("CARGO_PKG_VERSION")),
    ];
    let resolved: BTreeMap<&str, &str> = report.resolved.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    let mut seen = Vec::new();
    for arg in def.get_arguments() {
        let id = arg.get_id().as_str();
        let Some(long) = arg.get_long() else { continue };
        if long == "config" || long == "help" || long == "version" {
            continue;
        }
        seen.push(long.to_string());
        let value = match resolved.get(long) {
            Some(v) => Some(v.to_string()),
            None => sub
                .get_raw(id)
                .and_then(|mut v| v.next())
                .map(|v| v.to_string_lossy().into_owned()),
        };
        if let Some(v) = value {
            lines.push(format!("{long} = {v}"));
        }
    }
    for (k, v) in &report.resolved {
        if !seen.contains(k) {
            lines.push(format!("{k} = {v}"));
        }
    }
    let stops: Vec<String> = report.stops.iter().map(|(k, v)| format!("{k}:{v}")).collect();
    lines.push(format!("# stop reasons = {}", stops.join(" ")));
    lines.push(format!("# duration_seconds = {:.3}", elapsed.as_secs_f64()));
    fs::create_dir_all(dir)?;
    fs::write(dir.join("manifest.txt"), lines.join("\n") + "\n")?;
    Ok(())
}
