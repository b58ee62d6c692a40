//! Batch front-end: parse a scenario config, run the synthesis pipeline
//! (extension and extended system first, then internal model, Riccati
//! stabilization, and balanced truncation), run the verification checks,
//! simulate the closed loop, and write CSV/report artifacts.

use clap::{Args, Parser, Subcommand};
use regsynth_core::error::Error;
use regsynth_core::scenario::{
    controller_from_string, controller_to_string, decay_report, hsv_csv, parse_config, run_check,
    run_hsv, run_simulate, run_synth, trajectory_csv, ScenarioConfig,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "regsynth",
    about = "Robust output-regulation controller synthesis for boundary-controlled PDE models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports and CSV artifacts.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solvability checks (extension residuals, detectability,
    /// stabilizability, nonresonance, coercivity diagnostic).
    Check {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Synthesize a reduced-order controller and write it with its
    /// Hankel-value CSV and report.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        /// Skip the pre-synthesis checks.
        #[arg(long)]
        force: bool,
    },
    /// Compute the Hankel singular values only (for choosing the order).
    Hsv {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Simulate a synthesized controller against the (optionally perturbed)
    /// scenario plant and write the trajectory CSV and decay report.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Controller file produced by `synth`.
        #[arg(long)]
        controller: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ParseError { .. }
        | Error::InvalidArgument(_)
        | Error::DimensionMismatch(_)
        | Error::InvalidMesh(_)
        | Error::SpecMismatch(_)
        | Error::InsufficientData(_) => EXIT_USAGE,
        Error::SingularMatrix(_)
        | Error::NoConvergence(_)
        | Error::NotHurwitz { .. }
        | Error::NotStabilizable(_)
        | Error::NotDetectable(_)
        | Error::NonFinite(_)
        | Error::QuadratureFailure(_) => EXIT_NUMERICAL,
    }
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), Error> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_check(common: &CommonArgs) -> Result<u8, Error> {
    let cfg = load_config(&common.config)?;
    let run = run_check(&cfg)?;
    let text = run.to_text();
    print!("{text}");
    write_file(&common.out, "check_report.txt", &text)?;
    Ok(if run.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_synth(common: &CommonArgs, force: bool) -> Result<u8, Error> {
    let cfg = load_config(&common.config)?;
    if !force {
        let check = run_check(&cfg)?;
        write_file(&common.out, "check_report.txt", &check.to_text())?;
        if !check.pass {
            eprintln!("checks failed; see check_report.txt (use --force to synthesize anyway)");
            return Ok(EXIT_CHECK_FAILED);
        }
    }
    let synth = run_synth(&cfg)?;
    let report = synth.to_text();
    print!("{report}");
    write_file(&common.out, "controller.txt", &controller_to_string(&synth.artifact))?;
    write_file(&common.out, "hsv.csv", &hsv_csv(&synth.report.hsv))?;
    write_file(&common.out, "synth_report.txt", &report)?;
    Ok(EXIT_OK)
}

fn cmd_hsv(common: &CommonArgs) -> Result<u8, Error> {
    let cfg = load_config(&common.config)?;
    let (hsv, suggested) = run_hsv(&cfg)?;
    println!("{} Hankel singular values, suggested order {}", hsv.len(), suggested);
    write_file(&common.out, "hsv.csv", &hsv_csv(&hsv))?;
    Ok(EXIT_OK)
}

fn cmd_simulate(common: &CommonArgs, controller: &Path) -> Result<u8, Error> {
    let cfg = load_config(&common.config)?;
    let text = std::fs::read_to_string(controller).map_err(|e| {
        Error::InvalidArgument(format!("cannot read controller {}: {e}", controller.display()))
    })?;
    let artifact = controller_from_string(&text)?;
    let run = run_simulate(&cfg, &artifact)?;
    let tail_from = 0.5 * cfg.simulation.t_final;
    let report = decay_report(
        &run.fit,
        run.result.max_error_after(tail_from),
        tail_from,
        run.closed_loop_abscissa,
    );
    print!("{report}");
    write_file(&common.out, "trajectory.csv", &trajectory_csv(&run.result))?;
    write_file(&common.out, "decay_report.txt", &report)?;
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Let clap print help/version output itself; anything else is a
            // usage error.
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::from(EXIT_OK)
                }
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let outcome = match &cli.command {
        Command::Check { common } => cmd_check(common),
        Command::Synth { common, force } => cmd_synth(common, *force),
        Command::Hsv { common } => cmd_hsv(common),
        Command::Simulate { common, controller } => cmd_simulate(common, controller),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
