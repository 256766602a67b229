//! Command-line front end: experiment configs, execution, artifacts and
//! exit codes.

mod args;
mod config;
mod io;
mod run;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::json;

pub use args::Cli;
pub use config::{read_map, BoundsKind, ExperimentConfig, ExperimentKind};
pub use io::{read_solution, write_columns, write_json, write_solution};
pub use run::{ellipsoid_flip, max_exact_deviation, run_experiment, Check, Outcome};

use crate::error::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_NUMERICAL
    }
}

/// Config files of a batch directory, in name order.
fn batch_files(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Io(format!("no *.cfg files in {}", dir.display())));
    }
    Ok(files)
}

fn apply_globals(map: &mut BTreeMap<String, String>, g: &args::Global) {
    if let Some(dir) = &g.out_dir {
        let joined = match map.get("out_dir") {
            Some(d) if !Path::new(d).is_absolute() => dir.join(d),
            Some(d) => PathBuf::from(d),
            None => dir.clone(),
        };
        map.insert("out_dir".into(), joined.to_string_lossy().into_owned());
    }
    if let Some(s) = g.tol_scale {
        map.entry("tol_scale".into()).or_insert_with(|| s.to_string());
    }
    if let Some(r) = g.rmax {
        if !map.contains_key("r_max") {
            map.entry("rmax".into()).or_insert_with(|| r.to_string());
        }
    }
}

/// Parses `argv`, runs every requested experiment and returns the exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_PASS };
        }
    };
    let maps: Vec<(String, Result<BTreeMap<String, String>, Error>)> = match (&cli.command, cli.command.to_map()) {
        (_, Some(m)) => vec![("command line".into(), Ok(m))],
        (args::Command::Run(r), None) => {
            let files = if r.config.is_dir() { batch_files(&r.config) } else { Ok(vec![r.config.clone()]) };
            match files {
                Ok(f) => f.iter().map(|p| (p.display().to_string(), read_map(p))).collect(),
                Err(e) => vec![(r.config.display().to_string(), Err(e))],
            }
        }
        _ => unreachable!("only run has no direct map"),
    };
    let mut code = EXIT_PASS;
    let mut summary = Vec::new();
    for (source, map) in maps {
        let result = map.and_then(|mut m| {
            apply_globals(&mut m, &cli.global);
            ExperimentConfig::from_map(m)
        });
        let result = result.and_then(|cfg| run_experiment(&cfg));
        match result {
            Ok(outcome) => {
                for c in &outcome.checks {
                    let margin = c.margin.map_or("-".to_string(), |m| format!("{m:.3e}"));
                    println!("{} {}: {} (margin {margin})", if c.pass { "PASS" } else { "FAIL" }, c.experiment, c.theorem_ref);
                }
                if !outcome.pass() && code == EXIT_PASS {
                    code = EXIT_CHECK_FAILED;
                }
                summary.push(json!({ "source": source, "experiment": outcome.experiment, "pass": outcome.pass(), "checks": outcome.checks, "artifacts": outcome.artifacts }));
            }
            Err(e) => {
                let c = exit_code(&e);
                eprintln!("{}", json!({ "source": source, "error": format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or(""), "message": e.to_string(), "exit_code": c }));
                if code == EXIT_PASS || code == EXIT_CHECK_FAILED || c < code {
                    code = c;
                }
                summary.push(json!({ "source": source, "pass": false, "error": e.to_string(), "exit_code": c }));
            }
        }
    }
    if let Some(path) = &cli.global.json_summary {
        if let Err(e) = write_json(path, &json!({ "pass": code == EXIT_PASS, "exit_code": code, "runs": summary })) {
            eprintln!("cannot write summary: {e}");
            return EXIT_VALIDATION;
        }
    }
    code
}
