mod args;
mod commands;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};
use output::{read_pairs, Failure};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    match execute(argv) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("growth: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn execute(argv: Vec<String>) -> Result<bool, Failure> {
    let argv = if argv.get(1).map(String::as_str) == Some("rerun") {
        rerun_argv(&argv)?
    } else {
        argv
    };
    let argv = with_config(argv)?;
    let matches = match Cli::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { Ok(true) } else { Err(Failure::Reported(2)) };
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| Failure::Usage(e.to_string()))?;
    let start = Instant::now();
    let report = match &cli.command {
        Command::EnvCheck(a) => commands::env_check(a)?,
        Command::Passage(a) => commands::passage(a)?,
        Command::Mu(a) => commands::mu(a)?,
        Command::Subadd(a) => commands::subadd(a)?,
        Command::Diff(a) => commands::diff(a)?,
        Command::Coexist(a) => commands::coexist(a)?,
        Command::OracleCompare(a) => commands::oracle_compare(a)?,
        Command::Rerun(_) => unreachable!("rerun is expanded before parsing"),
    };
    if let Some(dir) = &report.out {
        let (name, sub) = matches.subcommand().expect("subcommand required");
        let def = Cli::command();
        let def = def.find_subcommand(name).expect("known subcommand");
        output::write_manifest(dir, name, def, sub, &report, start.elapsed())?;
    }
    Ok(report.pass)
}

/// Rebuilds the command line recorded in a manifest.
fn rerun_argv(argv: &[String]) -> Result<Vec<String>, Failure> {
    let m = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return Err(Failure::Reported(if code == 0 { 0 } else { 2 }));
        }
    };
    let Ok(Cli {
        command: Command::Rerun(r),
    }) = Cli::from_arg_matches(&m)
    else {
        return Err(Failure::Usage("malformed rerun".into()));
    };
    let pairs = read_pairs(&r.manifest)?;
    let command = pairs
        .iter()
        .find(|(k, _)| k == "command")
        .map(|(_, v)| v.clone())
        .ok_or_else(|| Failure::Usage(format!("{} has no command entry", r.manifest.display())))?;
    let mut out = vec![argv[0].clone(), command];
    for (k, v) in pairs {
        if k == "command" || k == "version" {
            continue;
        }
        let v = match (k.as_str(), &r.out, r.jobs) {
            ("out", Some(o), _) => o.display().to_string(),
            ("jobs", _, Some(j)) => j.to_string(),
            _ => v,
        };
        out.push(format!("--{k}"));
        out.push(v);
    }
    Ok(out)
}

/// Splices `--config` file entries in front of the explicit flags so the
/// latter take precedence.
fn with_config(argv: Vec<String>) -> Result<Vec<String>, Failure> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    if argv.len() < 2 {
        return Ok(argv);
    }
    let pairs = read_pairs(std::path::Path::new(&path))?;
    let mut out = argv[..2].to_vec();
    for (k, v) in pairs {
        if k == "command" || k == "version" || k == "config" {
            continue;
        }
        out.push(format!("--{k}"));
        out.push(v);
    }
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}
