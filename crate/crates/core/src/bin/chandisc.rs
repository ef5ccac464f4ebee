use std::path::PathBuf;
use std::process::ExitCode;

use chandisc::cli::{self, BoundReport, RunConfig, RunOptions};
use chandisc::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chandisc", version, about = "Bounds on channel discrimination under memory constraints")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a scenario config and write a bound report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Report path; overrides `output` in the config, stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Write the conic problems in SDPA format into this directory.
        #[arg(long = "dump-problems", value_name = "DIR")]
        dump_problems: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-check the certificates stored in a report without solving.
    Verify { report: PathBuf },
    /// List the named ensembles.
    Presets,
}

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_SIZE: u8 = 4;

fn error_code(e: &Error) -> u8 {
    match e {
        Error::SizeOverflow(_) => EXIT_SIZE,
        Error::Solver(_) | Error::InfeasibleParty(_) => EXIT_SOLVER,
        _ => EXIT_PARSE,
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(error_code(e))
}

fn main() -> ExitCode {
    let args = Args::parse();
    match args.cmd {
        Cmd::Run { config, out, workers, dump_problems, seed } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => return fail(&Error::Parse(format!("{}: {e}", config.display()))),
            };
            let cfg = match RunConfig::parse(&text) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            if let Some(dir) = &dump_problems {
                if let Err(e) = std::fs::create_dir_all(dir) {
                    return fail(&Error::BadParameter(format!("{}: {e}", dir.display())));
                }
            }
            let opts = RunOptions { workers, dump_dir: dump_problems, seed };
            let report = match cli::run(&cfg, &opts) {
                Ok(r) => r,
                Err(e) => return fail(&e),
            };
            let json = report.to_json();
            match out.or_else(|| cfg.output.clone()) {
                Some(p) => {
                    if let Err(e) = std::fs::write(&p, json + "\n") {
                        return fail(&Error::BadParameter(format!("{}: {e}", p.display())));
                    }
                }
                None => println!("{json}"),
            }
            for f in report.failures() {
                eprintln!("subtask failed: {}", f.message);
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Cmd::Verify { report } => {
            let text = match std::fs::read_to_string(&report) {
                Ok(t) => t,
                Err(e) => return fail(&Error::BadReport(format!("{}: {e}", report.display()))),
            };
            let v = match BoundReport::from_json(&text).and_then(|r| cli::verify(&r)) {
                Ok(v) => v,
                Err(e) => return fail(&e),
            };
            for c in &v.checks {
                println!("{} {:<32} {:.3e}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.residual);
            }
            if v.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERIFY_FAILED)
            }
        }
        Cmd::Presets => {
            for p in ["pauli", "clock_shift:d", "sqrt_clock_shift:d", "sqrt_pauli", "adc_bf_id", "werner_holevo:d"] {
                println!("{p}");
            }
            ExitCode::SUCCESS
        }
    }
}
