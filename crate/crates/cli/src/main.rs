//! `mdpgt`: run, sweep and inspect decentralized policy-gradient experiments.
//!
//! Every configuration key is also a `--key value` flag; flags override the
//! keys of a `--config` file.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use mdpgt::harness::{self, RunSummary, KEYS};
use mdpgt::{Error, RunConfig};

fn config_args(cmd: Command) -> Command {
    let cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .value_parser(clap::value_parser!(PathBuf))
            .help("flat `key = value` config file"),
    );
    KEYS.iter().fold(cmd, |cmd, k| {
        let help = match k.default {
            Some(d) => format!("{} [default: {d}]", k.help),
            None => k.help.to_string(),
        };
        cmd.arg(Arg::new(k.name).long(k.name).value_name("VALUE").help(help))
    })
}

fn cli() -> Command {
    Command::new("mdpgt")
        .about("Decentralized momentum policy gradient with gradient tracking")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(config_args(Command::new("run").about("Train once per configured seed")))
        .subcommand(
            config_args(Command::new("sweep").about("One run per value of a config key"))
                .arg(
                    Arg::new("axis")
                        .long("axis")
                        .value_name("KEY")
                        .required(true)
                        .help("config key to vary"),
                )
                .arg(
                    Arg::new("values")
                        .long("values")
                        .value_name("V1,V2,..")
                        .required(true)
                        .action(ArgAction::Append)
                        .value_delimiter(',')
                        .help("values of the swept key"),
                ),
        )
        .subcommand(config_args(
            Command::new("theory").about("Print analysis constants, step-size bounds and schedules as JSON"),
        ))
}

fn resolve(m: &ArgMatches, fill: &[(&str, &str)]) -> Result<RunConfig, Error> {
    let text = match m.get_one::<PathBuf>("config") {
        Some(path) => Some(fs::read_to_string(path)?),
        None => None,
    };
    let mut overrides: Vec<(String, String)> = KEYS
        .iter()
        .filter_map(|k| m.get_one::<String>(k.name).map(|v| (k.name.to_string(), v.clone())))
        .collect();
    let file_keys: Vec<String> = match &text {
        Some(t) => harness::parse_kv(t)?.into_iter().map(|(k, _)| k).collect(),
        None => Vec::new(),
    };
    for (k, v) in fill {
        if !file_keys.iter().any(|f| f == k) && !overrides.iter().any(|(o, _)| o == k) {
            overrides.push((k.to_string(), v.to_string()));
        }
    }
    harness::parse_config(text.as_deref(), &overrides)
}

fn report(runs: &[RunSummary]) -> bool {
    let mut ok = true;
    for r in runs {
        match &r.failure {
            None => println!(
                "seed {}: final mean reward {} over {} iterations -> {}",
                r.seed,
                r.final_mean_reward,
                r.iterations,
                r.dir.display()
            ),
            Some(f) => {
                ok = false;
                println!(
                    "seed {}: aborted after {} iterations: {f} -> {}",
                    r.seed,
                    r.iterations,
                    r.dir.display()
                );
            }
        }
    }
    ok
}

fn dispatch(m: &ArgMatches) -> Result<bool, Error> {
    match m.subcommand() {
        Some(("run", sub)) => {
            let cfg = resolve(sub, &[])?;
            Ok(report(&harness::execute(&cfg)?))
        }
        Some(("sweep", sub)) => {
            let cfg = resolve(sub, &[])?;
            let axis = sub.get_one::<String>("axis").expect("required");
            let values: Vec<String> = sub
                .get_many::<String>("values")
                .expect("required")
                .map(|v| v.trim().to_string())
                .collect();
            let mut ok = true;
            for point in harness::sweep(&cfg, axis, &values)? {
                println!("{axis} = {}", point.value);
                ok &= report(&point.runs);
            }
            println!("summary -> {}", cfg.out.join(harness::SUMMARY_FILE).display());
            Ok(ok)
        }
        Some(("theory", sub)) => {
            // The report does not depend on the algorithm.
            let cfg = resolve(sub, &[("algo", "mdpgt")])?;
            println!("{}", serde_json::to_string_pretty(&cfg.theory_report()?)?);
            Ok(true)
        }
        _ => unreachable!("subcommand is required"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = cli().get_matches();
    match dispatch(&matches) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
