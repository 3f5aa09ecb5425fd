use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qfdiv::io::{
    self, parse_family_arg, parse_force_path, parse_problem, RunOutput,
};
use qfdiv::solver::SolveOptions;

/// Measured f-divergence between finite-dimensional quantum states.
#[derive(Parser)]
#[command(name = "qfdiv", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute D_f^min for a problem file.
    Compute {
        /// Problem JSON: {"family": {...}, "rho1": [[[re,im],...],...], "rho2": ...}
        #[arg(short = 'f', long = "file")]
        file: PathBuf,
        /// Projected-gradient stopping tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Iteration cap for the gradient routes.
        #[arg(long = "max-iter", default_value_t = 10_000)]
        max_iter: usize,
        /// Route override (pure_state, closed_form_f2, closed_form_fidelity,
        /// closed_form_tv, generic_gradient, swapped_generic, commuting_classical).
        #[arg(long = "force-path")]
        force_path: Option<String>,
    },
    /// Cross-check the solver against the projective-measurement oracle.
    Verify {
        #[arg(short = 'f', long = "file")]
        file: PathBuf,
        /// Random restarts of the measurement search.
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        /// PRNG seed; a fixed seed makes the report byte-identical.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Second-order expansion check along a one-parameter state family.
    Fisher {
        /// Sampled-family JSON with rho_minus / rho_zero / rho_plus.
        #[arg(short = 'f', long = "file", conflicts_with = "builtin")]
        file: Option<PathBuf>,
        /// Built-in family: rotating-qubit, binary-mixture, pure-qubit, rank2-in-3d.
        #[arg(long)]
        builtin: Option<String>,
        /// Generator for --builtin runs: a name ("kl") or inline JSON
        /// ({"family":"renyi","alpha":0.3}). Defaults to fidelity.
        #[arg(long)]
        family: Option<String>,
        /// Base point of the family (--builtin mode).
        #[arg(long, default_value_t = 0.3)]
        eta: f64,
        /// Step h of the divergence quotient (--builtin mode).
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Compare the single-copy optimum with the asymptotic sandwiched value.
    Compare {
        #[arg(short = 'f', long = "file")]
        file: PathBuf,
        /// Rényi order.
        #[arg(long)]
        alpha: f64,
    },
}

fn read(path: &PathBuf) -> qfdiv::Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| qfdiv::Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn dispatch(cli: Cli) -> qfdiv::Result<RunOutput> {
    match cli.command {
        Command::Compute { file, tol, max_iter, force_path } => {
            let spec = parse_problem(&read(&file)?)?;
            let force_path = force_path.as_deref().map(parse_force_path).transpose()?;
            let opts = SolveOptions { tol, max_iter, force_path };
            io::run_compute(&spec, &opts)
        }
        Command::Verify { file, restarts, seed } => {
            let spec = parse_problem(&read(&file)?)?;
            io::run_verify(&spec, restarts, seed)
        }
        Command::Fisher { file, builtin, family, eta, step } => match (file, builtin) {
            (Some(path), None) => io::run_fisher_samples(&read(&path)?),
            (None, Some(name)) => {
                let generator = match family {
                    Some(text) => parse_family_arg(&text)?,
                    None => qfdiv::DivergenceGenerator::fidelity_family(),
                };
                io::run_fisher_builtin(&generator, &name, eta, step)
            }
            _ => Err(qfdiv::Error::InvalidInput(
                "fisher needs exactly one of --file or --builtin".into(),
            )),
        },
        Command::Compare { file, alpha } => {
            let spec = parse_problem(&read(&file)?)?;
            io::run_compare(&spec, alpha)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(out) => {
            println!("{}", out.report);
            ExitCode::from(out.exit_code as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
