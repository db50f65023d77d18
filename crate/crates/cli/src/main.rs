use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kickanneal::experiment::{self, ExperimentConfig};
use kickanneal::Error;

#[derive(Parser)]
#[command(name = "kickanneal", version, about = "Kicked quantum annealing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration and write its CSV and JSON summary.
    Run { config: PathBuf },
    /// Run every angle (and time constant) of the sweep section.
    Sweep { config: PathBuf },
    /// Single-kick energy scan at t = 0 for each axis pair.
    Landscape { config: PathBuf },
    /// Print the averaged-theory predictions as JSON.
    Theory { config: PathBuf },
    /// Print the problem Hamiltonian's ground energy.
    Oracle { config: PathBuf },
    /// Check a config against the schema without running it.
    Validate { config: PathBuf },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Error> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load(path: &Path) -> Result<ExperimentConfig, Error> {
    ExperimentConfig::load(path)
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run { config } => {
            let out = experiment::run(&load(&config)?)?;
            println!("wrote {}", out.csv_path.display());
            println!("wrote {}", out.json_path.display());
            print_json(&serde_json::json!({
                "final_energy": out.summary.final_energy,
                "final_relative_error": out.summary.final_relative_error,
                "t_star": out.summary.t_star,
                "e_target": out.summary.e_target,
            }))
        }
        Command::Sweep { config } => {
            let out = experiment::sweep(&load(&config)?)?;
            println!("tau\ttheta\tt_star\tfinal_error");
            for r in &out.rows {
                let t = r.t_star.map(|t| format!("{t:.6}")).unwrap_or_else(|| "-".into());
                println!("{}\t{}\t{t}\t{:.3e}", r.tau, r.theta, r.final_error);
            }
            for o in &out.optima {
                match o.theta_opt {
                    Some(th) => println!("tau {}: empirical optimum theta = {th}", o.tau),
                    None => println!("tau {}: {}", o.tau, o.status),
                }
                if let Some(th) = o.theory_theta_opt {
                    println!("tau {}: predicted optimum theta = {th:.6}", o.tau);
                }
            }
            Ok(())
        }
        Command::Landscape { config } => {
            let rows = experiment::landscape(&load(&config)?)?;
            println!("ancilla\tsystem\ttheta\tenergy");
            for r in rows {
                println!("{}\t{}\t{}\t{:.10}", r.ancilla_axis, r.system_axis, r.theta, r.energy);
            }
            Ok(())
        }
        Command::Theory { config } => print_json(&experiment::theory_for_config(&load(&config)?)?),
        Command::Oracle { config } => print_json(&experiment::oracle(&load(&config)?)?),
        Command::Validate { config } => {
            load(&config)?;
            println!("{}: ok", config.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
