use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use viewprune_cli::{cmd_prune, cmd_report, cmd_simulate, cmd_sweep, PruneArgs, ReportArgs, SimulateArgs, SweepArgs};

/// View pruning for lifelong visual SLAM maps.
#[derive(Parser)]
#[command(name = "viewprune", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-run experiment and write per-run metrics, a summary and
    /// the final map.
    Simulate {
        #[arg(long)]
        env: PathBuf,
        #[arg(long)]
        sim: PathBuf,
        #[arg(long)]
        prune: PathBuf,
        #[arg(long, default_value_t = 100)]
        runs: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Prune a saved map.
    Prune {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Largest observation count in the current run; defaults to the
        /// largest n_obs_cur in the map.
        #[arg(long)]
        max_obs: Option<u32>,
        /// Only prune this component.
        #[arg(long)]
        component: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the report without writing anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Sweep score weights or neighbor-check settings.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        env: PathBuf,
        #[arg(long)]
        sim: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn metrics CSVs into long-format series (source, run, metric, value).
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            env,
            sim,
            prune,
            runs,
            seed,
            out,
        } => {
            let s = cmd_simulate(&SimulateArgs {
                env,
                sim,
                prune,
                runs,
                seed,
                out_dir: out.clone(),
            })?;
            println!(
                "{} runs, {} views at the end, growth rate {:.3} views/run, written to {}",
                s.runs,
                s.final_views,
                s.growth_rate,
                out.display()
            );
        }
        Command::Prune {
            map,
            config,
            max_obs,
            component,
            out,
            dry_run,
        } => {
            let outcome = cmd_prune(&PruneArgs {
                map,
                config,
                max_obs,
                component,
                out,
                dry_run,
            })?;
            print!("{}", outcome.text);
        }
        Command::Sweep {
            spec,
            env,
            sim,
            seed,
            out,
        } => {
            let rows = cmd_sweep(&SweepArgs {
                spec,
                env,
                sim,
                seed,
                out: out.clone(),
            })?;
            let selected = rows.iter().filter(|r| r.selected).count();
            println!(
                "{} cells, {selected} selected, written to {}",
                rows.len(),
                out.display()
            );
        }
        Command::Report { inputs, out } => {
            let to_stdout = out.is_none();
            let bytes = cmd_report(&ReportArgs { inputs, out })?;
            if to_stdout {
                std::io::stdout().write_all(&bytes)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
