//! Command-line front end for `cvkey-core`.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error, 3 Monte-Carlo
//! validation failure. `CVKEY_THREADS` caps the worker pool.

pub mod commands;
pub mod job;
pub mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;

use clap::{Arg, ArgAction};
use thiserror::Error;

use job::{Command, JobSpec, KEYS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MC_FAILED: i32 = 3;

pub const THREADS_ENV: &str = "CVKEY_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Domain(_) | CliError::Io(_) => EXIT_DOMAIN,
        }
    }
}

impl From<cvkey_core::Error> for CliError {
    fn from(e: cvkey_core::Error) -> Self {
        match e {
            cvkey_core::Error::Parse(msg) => CliError::Usage(msg),
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub fn cli() -> clap::Command {
    let mut root = clap::Command::new("cvkey")
        .about("CV-QKD key rates under canonical Gaussian attacks")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for c in Command::ALL {
        let mut sub = clap::Command::new(c.name()).about(c.about()).arg(
            Arg::new("config").long("config").value_name("FILE").help("key = value file; flags given here override it"),
        );
        for k in KEYS.iter().filter(|k| k.applies_to(c)) {
            let arg = Arg::new(k.name).long(k.name).help(k.help);
            sub = sub.arg(if k.flag {
                arg.action(ArgAction::SetTrue)
            } else {
                arg.value_name("VALUE").allow_hyphen_values(true)
            });
        }
        root = root.subcommand(sub);
    }
    root
}

/// Resolves the job from arguments and the optional config file.
pub fn parse_job<I, T>(args: I) -> Result<JobSpec, Result<String, CliError>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            return Err(match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Ok(e.to_string()),
                _ => Err(CliError::Usage(e.to_string())),
            })
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let command: Command = name.parse().map_err(Err)?;
    let mut pairs: BTreeMap<String, String> = match sub.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Err(CliError::Usage(format!("--config {path}: {e}"))))?;
            job::parse_config(&text).map_err(Err)?
        }
        None => BTreeMap::new(),
    };
    for k in KEYS.iter().filter(|k| k.applies_to(command)) {
        if k.flag {
            if sub.get_flag(k.name) {
                pairs.insert(k.name.into(), "true".into());
            }
        } else if let Some(v) = sub.get_one::<String>(k.name) {
            pairs.insert(k.name.into(), v.clone());
        }
    }
    JobSpec::from_pairs(command, &pairs).map_err(Err)
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Io(e.to_string()))
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let job = match parse_job(args) {
        Ok(job) => job,
        Err(Ok(help)) => {
            print!("{help}");
            return EXIT_OK;
        }
        Err(Err(e)) => return report(e),
    };
    let outcome = thread_pool().and_then(|pool| pool.install(|| commands::execute(&job)));
    match outcome.and_then(|o| output::emit(&job, &o.text).map(|()| o.mc_failed)) {
        Ok(false) => EXIT_OK,
        Ok(true) => {
            eprintln!("error: Monte-Carlo variance check failed (see report)");
            EXIT_MC_FAILED
        }
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> i32 {
    match &e {
        CliError::Usage(msg) if msg.starts_with("error:") => eprint!("{msg}"),
        CliError::Usage(msg) => eprintln!("error: {msg}\n\nRun 'cvkey --help' for usage."),
        other => eprintln!("error: {other}"),
    }
    e.exit_code()
}
