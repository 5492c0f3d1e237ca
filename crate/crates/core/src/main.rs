use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sharp_ibfe::app::{run_convergence_sweep, run_scenario, MethodKind, SimulationConfig};
use sharp_ibfe::Error;

#[derive(Parser)]
#[command(name = "sharp-ibfe", version, about = "Immersed boundary FE fluid-structure interaction with pressure splitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        method: Option<MethodKind>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a convergence sweep over several resolutions.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
        resolutions: Vec<usize>,
        #[arg(long)]
        method: Option<MethodKind>,
        #[arg(long, default_value = "out/sweep")]
        out: PathBuf,
    },
    /// Run the oracle and property test suite.
    Verify,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidGrid(_) => 3,
        _ => 2,
    }
}

fn load(config: &PathBuf, method: Option<MethodKind>) -> Result<SimulationConfig, Error> {
    let mut c = SimulationConfig::load(config)?;
    if let Some(m) = method {
        c.method = m;
    }
    Ok(c)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, method, n, out } => load(&config, method).and_then(|mut c| {
            if n.is_some() {
                c.n = n;
            }
            if out.is_some() {
                c.output_dir = out;
            }
            let o = run_scenario(&c)?;
            let m = &o.manifest;
            println!("{} steps to t = {:.6e} s, output in {}", m.steps_taken, m.final_time_s, m.config.output_dir.display());
            for r in &m.errors {
                println!("{:>16} L1 {:.4e}  L2 {:.4e}  Linf {:.4e}", r.field, r.norms.l1, r.norms.l2, r.norms.linf);
            }
            if let Some(mean) = m.mean_phi_iterations() {
                println!("mean phi iterations {mean:.2}");
            }
            if let Some(j) = &m.jacobian {
                println!("J in [{:.6}, {:.6}], max|J-1| = {:.4e}", j.min, j.max, j.max_deviation);
            }
            Ok(())
        }),
        Command::Sweep { config, resolutions, method, out } => load(&config, method).and_then(|c| {
            let s = run_convergence_sweep(&c, &resolutions, &out)?;
            for r in &s.rates {
                println!("{:>16} {:>4} rate {:.3}", r.field, r.norm.label(), r.fit.rate);
            }
            for (n, e) in &s.failures {
                eprintln!("N = {n} failed: {e}");
            }
            Ok(())
        }),
        Command::Verify => {
            let status = std::process::Command::new(env!("CARGO"))
                .args(["test", "--release", "-p", env!("CARGO_PKG_NAME")])
                .current_dir(env!("CARGO_MANIFEST_DIR"))
                .status();
            return match status {
                Ok(s) if s.success() => ExitCode::SUCCESS,
                Ok(_) => ExitCode::from(1),
                Err(e) => {
                    eprintln!("cannot launch the test suite: {e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
