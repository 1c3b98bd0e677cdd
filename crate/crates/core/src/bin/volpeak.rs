use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use volpeak::runner::{self, GridAxis, RunOptions, Verification};

#[derive(Parser)]
#[command(
    name = "volpeak",
    version,
    about = "Limiting-volatility and price-peak analysis for supply/demand price models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic curves, Monte Carlo summary, extrema report and verifications.
    Run {
        config: PathBuf,
        #[arg(long, env = "VOLPEAK_OUT", default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated: ordering, signlemmas, flatvol, jensen, scaling, densitymatch, mcmatch.
        #[arg(long, value_delimiter = ',')]
        verify: Vec<Verification>,
    },
    /// Analytic extrema over the Cartesian product of parameter axes.
    Sweep {
        config: PathBuf,
        /// `key=a,b,c`; repeatable.
        #[arg(long, num_args = 1..)]
        grid: Vec<GridAxis>,
        #[arg(long, env = "VOLPEAK_OUT", default_value = "out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            out,
            paths,
            dt,
            seed,
            verify,
        } => {
            let opts = RunOptions {
                out_dir: out,
                paths,
                dt,
                seed,
                verify,
            };
            match runner::run(&config, &opts) {
                Ok(m) => {
                    for v in &m.verifications {
                        let status = if v.passed { "PASS" } else { "FAIL" };
                        println!("{} {status} {}", v.name, v.detail);
                    }
                    for (stage, d) in &m.timings {
                        eprintln!("{stage}: {:.3}s", d.as_secs_f64());
                    }
                    m.exit_code()
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::Sweep { config, grid, out } => match runner::sweep_to_dir(&config, &grid, &out) {
            Ok(r) => {
                println!("{}", r.pass_rate_line());
                r.exit_code()
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
    };
    ExitCode::from(code)
}
