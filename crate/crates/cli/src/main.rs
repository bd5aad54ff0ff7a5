//! `bifcurrents`: Green functions, Lyapunov exponents and bifurcation
//! measures from the command line.
//!
//! Exit codes: 0 success, 1 failed verification or unwritable output,
//! 2 invalid arguments or inputs, 3 numeric failure. Errors are reported on
//! standard error as `ERROR kind=… key=value …` lines.

mod commands;
mod error;
mod output;
mod settings;

use std::collections::BTreeMap;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches};

use crate::error::CliError;
use crate::output::{emit, Cache};
use crate::settings::{command, parse_config, Kind, Settings, COMMANDS};

fn cli() -> clap::Command {
    let mut app = clap::Command::new("bifcurrents")
        .about("Green functions, Lyapunov exponents and bifurcation currents of rational maps")
        .subcommand_required(true)
        .arg(Arg::new("config").long("config").global(true).value_name("FILE").help("flat key = value settings file"))
        .arg(
            Arg::new("threads")
                .long("threads")
                .global(true)
                .value_name("N")
                .value_parser(clap::value_parser!(usize))
                .help("worker threads (results do not depend on it)"),
        );
    for c in COMMANDS {
        let mut sub = clap::Command::new(c.name).about(c.about);
        for k in c.keys {
            let mut arg = Arg::new(k.name).long(k.name).help(k.help).hide(k.hidden);
            arg = match k.kind {
                Kind::Value => arg.value_name("VALUE").allow_hyphen_values(true),
                Kind::Switch => arg.action(ArgAction::SetTrue),
                Kind::OptionalValue => arg.value_name("PATH").num_args(0..=1).default_missing_value("true"),
            };
            sub = sub.arg(arg);
        }
        app = app.subcommand(sub);
    }
    app
}

fn flags_of(name: &str, m: &ArgMatches) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for k in command(name).keys {
        match k.kind {
            Kind::Switch => {
                if m.get_flag(k.name) {
                    out.insert(k.name.to_string(), "true".to_string());
                }
            }
            _ => {
                if let Some(v) = m.get_one::<String>(k.name) {
                    out.insert(k.name.to_string(), v.clone());
                }
            }
        }
    }
    out
}

fn execute(m: &ArgMatches) -> Result<bool, CliError> {
    let (name, sub) = m.subcommand().expect("subcommand is required");
    if let Some(&n) = sub.get_one::<usize>("threads") {
        if n == 0 {
            return Err(CliError::validation("threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation("threads", e.to_string()))?;
    }
    let file = match sub.get_one::<String>("config") {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::validation("config", format!("{p}: {e}")))?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    let settings = Settings::resolve(command(name), file, flags_of(name, sub))?;
    let cache = if name == "verify" { None } else { Cache::from_env() };
    let Some(cache) = cache else {
        let (outcome, ok) = commands::run(&settings)?;
        emit(&outcome)?;
        return Ok(ok);
    };
    let paths = commands::artifact_paths(&settings)?;
    let canonical = settings.canonical()?;
    let key = settings.cache_key()?;
    if let Some(hit) = cache.load(&key, &paths) {
        eprintln!("INFO cache=hit key={key}");
        emit(&hit)?;
        return Ok(true);
    }
    let (outcome, ok) = commands::run(&settings)?;
    cache.store(&key, &canonical, &outcome)?;
    eprintln!("INFO cache=store key={key}");
    emit(&outcome)?;
    Ok(ok)
}

fn main() -> ExitCode {
    let m = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            if code == 2 {
                eprintln!("ERROR kind=validation key=arguments message={:?}", e.kind().to_string());
            }
            return ExitCode::from(code);
        }
    };
    match execute(&m) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_line_is_consistent() {
        cli().debug_assert();
    }

    #[test]
    fn flags_collect_only_given_values() {
        let m = cli().try_get_matches_from(["bifcurrents", "lyapunov", "--map", "builtin:power(d=3)", "--json"]).unwrap();
        let (name, sub) = m.subcommand().unwrap();
        let flags = flags_of(name, sub);
        assert_eq!(flags.len(), 2);
        assert_eq!(flags["json"], "true");
    }

    #[test]
    fn verify_json_takes_optional_path() {
        let m = cli().try_get_matches_from(["bifcurrents", "verify", "--json"]).unwrap();
        assert_eq!(flags_of("verify", m.subcommand().unwrap().1)["json"], "true");
        let m = cli().try_get_matches_from(["bifcurrents", "verify", "--json", "r.json"]).unwrap();
        assert_eq!(flags_of("verify", m.subcommand().unwrap().1)["json"], "r.json");
    }
}
