use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use transonic_ep::plot::{plot, PlotSpec};
use transonic_ep::{run, CliError, Kind, RunRequest};

#[derive(Parser)]
#[command(name = "transonic-ep", version, about = "Transonic shock experiments for the 1-D Euler-Poisson system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized initial data; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PlotArgs {
    /// Comma-separated series file with one header line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    x: String,
    /// Left-axis column; repeat for several series.
    #[arg(long, required = true)]
    y: Vec<String>,
    /// Right-axis column; repeat for several series.
    #[arg(long)]
    y2: Vec<String>,
    #[arg(long)]
    log_y: bool,
    /// Annotate the fitted slope of the first series (needs --log-y).
    #[arg(long)]
    fit_slope: bool,
    #[arg(long)]
    title: Option<String>,
    /// Output SVG file; defaults to the input with an .svg extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the kind named in the config.
    Run(RunArgs),
    /// Integrate one steady profile.
    Steady(RunArgs),
    /// Fit the shock position to the exit density.
    Fit(RunArgs),
    /// Refit under perturbations of the background charge.
    Perturb(RunArgs),
    /// Nonlinear evolution of a subsonic perturbation.
    Evolve(RunArgs),
    /// Linearized evolution, decay fit and observability.
    Linear(RunArgs),
    /// Dominant eigenvalues of the solution operator.
    Spectrum(RunArgs),
    /// Search for a linearly unstable transonic shock.
    Instability(RunArgs),
    /// Fan out one kind over a list of parameter values.
    Sweep(RunArgs),
    /// Render a series file as an SVG plot.
    Plot(PlotArgs),
}

fn experiment(kind: Option<Kind>, a: RunArgs) -> Result<(), CliError> {
    let req = RunRequest::from_path(&a.config, kind, a.out, a.seed)?;
    let m = run(&req)?;
    println!("{} run finished in {:.3} s, {} files", m.kind, m.wall_time_s, m.files.len());
    for (k, v) in &m.residuals {
        println!("  {k} = {v:e}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => experiment(None, a),
        Command::Steady(a) => experiment(Some(Kind::Steady), a),
        Command::Fit(a) => experiment(Some(Kind::Fit), a),
        Command::Perturb(a) => experiment(Some(Kind::Perturb), a),
        Command::Evolve(a) => experiment(Some(Kind::Evolve), a),
        Command::Linear(a) => experiment(Some(Kind::Linear), a),
        Command::Spectrum(a) => experiment(Some(Kind::Spectrum), a),
        Command::Instability(a) => experiment(Some(Kind::Instability), a),
        Command::Sweep(a) => experiment(Some(Kind::Sweep), a),
        Command::Plot(a) => {
            let output = a.out.unwrap_or_else(|| a.input.with_extension("svg"));
            let spec = PlotSpec {
                input: a.input,
                x: a.x,
                y: a.y,
                y2: a.y2,
                log_y: a.log_y,
                fit_slope: a.fit_slope,
                title: a.title,
                output,
            };
            plot(&spec)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
