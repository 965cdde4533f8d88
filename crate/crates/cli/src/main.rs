//! Command-line entry point.
//!
//! Exit codes: 0 all checks passed, 1 assertion failures, 2 configuration
//! or usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use conorbit::config::RawConfig;
use conorbit::output::Verdicts;
use conorbit::reproduce;
use conorbit::runner::{run_scenario, write_reproduce};
use conorbit::scenario::{scenario_from_config, PRESETS};
use conorbit_core::models::CATALOG_IDS;

#[derive(Parser)]
#[command(name = "conorbit", version, about = "Connecting-orbit and critical-value experiments on 2-D model surfaces")]
struct Cli {
    /// Random seed override (also settable per config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for artifact files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config file.
    Run { config: PathBuf },
    /// Run the reproduction suite (optionally a single named target).
    Reproduce { name: Option<String> },
    /// List the model catalog and scenario presets.
    ListModels,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<usize> {
    match cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", config.display()))?;
            let raw = RawConfig::parse(&text)?;
            let scenario = scenario_from_config(&raw, cli.seed)?;
            let out_dir = cli.out_dir.join(&scenario.name);
            println!(
                "scenario `{}`: model {}, task {}, seed {}",
                scenario.name,
                scenario.model.name(),
                scenario.task.name(),
                scenario.seed
            );
            let outcome = run_scenario(&scenario, &out_dir)?;
            outcome.verdicts.print();
            println!("artifacts in {}", out_dir.display());
            Ok(outcome.failures())
        }
        Command::Reproduce { name } => {
            let seed = cli.seed.unwrap_or(0);
            let rows = reproduce::run(name.as_deref(), seed)?;
            let mut verdicts = Verdicts::default();
            let scenario_name = name.clone().unwrap_or_else(|| "all".to_string());
            let out_dir = cli.out_dir.join(format!("reproduce_{scenario_name}"));
            write_reproduce(&out_dir, &rows, &mut verdicts)?;
            for r in &rows {
                println!(
                    "[{}] {} / {}: value {:.9e}, expected {} ({})",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.target,
                    r.check,
                    r.value,
                    r.expected,
                    r.provenance.as_str()
                );
            }
            let failures = verdicts.failures();
            conorbit::output::write_file(&out_dir, "verdict.csv", &verdicts.to_csv())?;
            println!(
                "{} checks, {} failures; artifacts in {}",
                rows.len(),
                failures,
                out_dir.display()
            );
            Ok(failures)
        }
        Command::ListModels => {
            println!("model catalog:");
            for id in CATALOG_IDS {
                println!("  {id}");
            }
            println!("scenario presets:");
            for p in PRESETS {
                println!("  {p}");
            }
            Ok(0)
        }
    }
}

