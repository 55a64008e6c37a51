use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kvflow::error::{CliError, CliResult, EXIT_OK};
use kvflow::mesh_io::write_mesh;
use kvflow::output::write_file;
use kvflow::selftest::run_selftest;
use kvflow::studies::{boundedness_study, convergence_study, decay_study};
use kvflow::{Overrides, RunConfig, Study};
use kvflow_core::TriangleMesh;

#[derive(Parser)]
#[command(name = "kvflow", version, about = "P2-P0 finite elements for Kelvin-Voigt viscoelastic flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error and rate table over mesh levels.
    Convergence(Overrides),
    /// Energy trace of an unforced run.
    Decay(Overrides),
    /// Long run of example 1 with the absorbing-ball diagnostic.
    Boundedness(Overrides),
    /// Oracle checks on small meshes.
    Selftest,
    /// Print a structured mesh in the plain-text dump format.
    Mesh {
        /// Cells per side.
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Uniform refinements applied after construction.
        #[arg(long, default_value_t = 0)]
        refine: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn rate(r: Option<f64>) -> String {
    r.map_or_else(|| "-".into(), |v| format!("{v:.5}"))
}

fn convergence(o: &Overrides) -> CliResult<()> {
    let cfg = RunConfig::resolve(Study::Convergence, o)?;
    let report = convergence_study(&cfg, |r| {
        eprintln!(
            "n = {:>3}  steps = {:>5}  l2 = {:.6e} ({})  h1 = {:.6e} ({})  p = {:.6e} ({})  [{:.1} s]",
            r.n,
            r.steps,
            r.l2_err,
            rate(r.l2_rate),
            r.h1_err,
            rate(r.h1_rate),
            r.p_err,
            rate(r.p_rate),
            r.seconds
        )
    })?;
    report.write(&cfg.output_dir)?;
    print!("{}", report.csv().as_str());
    match report.error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn decay(o: &Overrides) -> CliResult<()> {
    let cfg = RunConfig::resolve(Study::Decay, o)?;
    let r = decay_study(&cfg)?;
    r.write(&cfg.output_dir)?;
    println!(
        "n = {}  steps = {}  nonincreasing = {}  strictly decreasing = {}",
        r.n, r.steps, r.nonincreasing, r.strictly_decreasing
    );
    match r.fit {
        Some(f) => println!(
            "log-linear fit on [{}, {}]: slope = {:.6}  R² = {:.6}",
            f.window.0, f.window.1, f.slope, f.r_squared
        ),
        None => println!("log-linear fit: not enough samples in the window"),
    }
    Ok(())
}

fn boundedness(o: &Overrides) -> CliResult<()> {
    let cfg = RunConfig::resolve(Study::Boundedness, o)?;
    let r = boundedness_study(&cfg)?;
    r.write(&cfg.output_dir)?;
    println!(
        "n = {}  steps = {}  lambda1 = {:.6}  alpha = {:.6}  rho0 = {:.6}",
        r.n, r.steps, r.lambda1, r.alpha, r.rho0
    );
    println!("sup ‖U‖ = {:.6e}  (first time unit: {:.6e})", r.sup_norm_u, r.sup_norm_u_first_unit);
    match (r.entry_step, r.entry_time) {
        (Some(s), Some(t)) => println!("entered the ball at step {s} (t = {t})  remains inside = {}", r.remains_inside),
        _ => println!("never entered the ball"),
    }
    Ok(())
}

fn selftest() -> CliResult<()> {
    let report = run_selftest();
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    match report.failures() {
        0 => Ok(()),
        n => Err(CliError::Threshold(n)),
    }
}

fn mesh(n: usize, refine: usize, output: Option<PathBuf>) -> CliResult<()> {
    let mut m = TriangleMesh::build_structured(n).map_err(|e| CliError::Config(e.to_string()))?;
    for _ in 0..refine {
        m = m.refine_uniform();
    }
    let text = write_mesh(&m);
    match output {
        Some(path) => write_file(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Convergence(o) => convergence(&o),
        Command::Decay(o) => decay(&o),
        Command::Boundedness(o) => boundedness(&o),
        Command::Selftest => selftest(),
        Command::Mesh { n, refine, output } => mesh(n, refine, output),
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("kvflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
