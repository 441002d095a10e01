use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Arg, ArgMatches, Command};
use snnbound_cli::config::{ExperimentConfig, KEYS};
use snnbound_cli::experiment::{self, StageSummary};
use snnbound_cli::{figure, rad, tables, CliError};

const SUBCOMMANDS: &[(&str, &str)] = &[
    ("train", "train one network per (seed, width) and write checkpoints and train.csv"),
    ("measure", "compute norm measures of the checkpoints into measures.csv"),
    ("bounds", "evaluate every bound from measures.csv into bounds.csv"),
    ("rad", "estimate Rademacher complexities of small synthetic classes into rad.csv"),
    ("figure", "write figure CSV and SVG files from measures.csv and bounds.csv"),
    ("all", "train, measure, bound, plot and run the Rademacher probe"),
];

fn cli() -> Command {
    let mut cmd = Command::new("snnbound")
        .version(experiment::VERSION)
        .about("Path-norm bounds for shallow networks")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .args_override_self(true)
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .global(true)
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("key = value configuration file; flags override it"),
        );
    for (key, help) in KEYS {
        let long: &'static str = Box::leak(key.replace('_', "-").into_boxed_str());
        cmd = cmd.arg(
            Arg::new(*key)
                .long(long)
                .alias(*key)
                .global(true)
                .value_name("VALUE")
                .allow_hyphen_values(false)
                .help(*help),
        );
    }
    for (name, about) in SUBCOMMANDS {
        cmd = cmd.subcommand(Command::new(*name).about(*about).args_override_self(true));
    }
    cmd
}

fn load_config(matches: &ArgMatches) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = matches.get_one::<PathBuf>("config") {
        cfg.apply_file(path)?;
    }
    for (key, _) in KEYS {
        if let Some(value) = matches.get_one::<String>(key) {
            cfg.set(key, value)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(stage: &str, summary: &StageSummary) -> Result<(), CliError> {
    for f in &summary.failures {
        eprintln!("warning: {} seed {} m {} failed in {}: {}", f.dataset, f.seed, f.m, f.stage, f.error);
    }
    eprintln!("{stage}: {} cells, {} failed", summary.cells, summary.failures.len());
    if summary.cells > 0 && summary.failures.len() >= summary.cells {
        return Err(CliError::Data(format!("every cell failed in {stage}")));
    }
    Ok(())
}

fn run_rad(cfg: &ExperimentConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out).map_err(|source| CliError::Io { path: cfg.out.clone(), source })?;
    let rows = rad::run_probe(cfg)?;
    let path = cfg.out.join(tables::RAD_CSV);
    rad::write_rad(&path, &rows)?;
    eprintln!("rad: {} instances -> {}", rows.len(), path.display());
    Ok(())
}

fn run(name: &str, sub: &ArgMatches) -> Result<(), CliError> {
    let cfg = load_config(sub)?;
    match name {
        "train" => report("train", &experiment::run_train(&cfg)?),
        "measure" => report("measure", &experiment::run_measure(&cfg)?),
        "bounds" => {
            let n = experiment::run_bounds(&cfg)?;
            eprintln!("bounds: {n} rows");
            Ok(())
        }
        "rad" => run_rad(&cfg),
        "figure" => {
            for path in figure::emit_figures(&cfg)? {
                eprintln!("figure: {}", path.display());
            }
            Ok(())
        }
        "all" => {
            report("all", &experiment::run_all(&cfg)?)?;
            run_rad(&cfg)
        }
        other => unreachable!("unknown subcommand {other}"),
    }
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let result: Result<()> = run(name, sub).map_err(Into::into);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code)
        }
    }
}
