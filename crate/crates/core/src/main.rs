use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use otmorph::engine::{ProgressRow, SolverConfig, TvKind, DEFAULT_ITERATIONS, DEFAULT_SIGMA, DEFAULT_TIME_STEPS};
use otmorph::grid::BoundaryKind;
use otmorph::io::{InputMode, Normalization, OutputFormat};
use otmorph::job::{self, RunManifest, RunSpec, MANIFEST_FILE};
use otmorph::solvers::PenalizedMethod;

#[derive(Parser)]
#[command(name = "otmorph", version, about = "Dynamic optimal transport between signals and images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interpolate between two inputs.
    Run(RunArgs),
    /// Re-run the job recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ModelArg {
    Constrained,
    Penalized,
}

#[derive(Args)]
struct RunArgs {
    /// Start signal (CSV) or image (PNG).
    f0: PathBuf,
    /// End signal (CSV) or image (PNG).
    f1: PathBuf,
    /// signal_csv or image_png; guessed from the extension when omitted.
    #[arg(long)]
    mode: Option<InputMode>,
    #[arg(long, value_enum, default_value_t = ModelArg::Constrained)]
    model: ModelArg,
    /// Penalty weight of the penalised model.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = DEFAULT_TIME_STEPS)]
    time_steps: usize,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    iters: usize,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    /// Defaults to 0.99/σ.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Stop once the dual residual falls below this value.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, default_value = "mirror")]
    boundary: BoundaryKind,
    #[arg(long, default_value = "periodic")]
    color_boundary: BoundaryKind,
    /// TV weight γ.
    #[arg(long, default_value_t = 0.0)]
    tv: f64,
    #[arg(long, default_value = "anisotropic")]
    tv_kind: TvKind,
    /// auto, schur or cg.
    #[arg(long, default_value = "auto")]
    penalized_method: PenalizedMethod,
    #[arg(long)]
    equalize_mass: bool,
    /// Clip emitted intermediate frames to [0, 1].
    #[arg(long)]
    gamut_clamp: bool,
    /// Also write (R+G+B)/3 frames for RGB inputs.
    #[arg(long)]
    intensity: bool,
    #[arg(long)]
    out: PathBuf,
    /// png_seq or raw_f64.
    #[arg(long, default_value = "png_seq")]
    format: OutputFormat,
    #[command(flatten)]
    log: LogArgs,
}

#[derive(Args)]
struct ReplayArgs {
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Fail unless the new frames equal the recorded ones byte for byte.
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    log: LogArgs,
}

#[derive(Args)]
struct LogArgs {
    /// Print a progress row every this many iterations; 0 disables.
    #[arg(long, default_value_t = 100)]
    log_every: usize,
}

fn guess_mode(path: &Path) -> InputMode {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("png") => InputMode::ImagePng,
        _ => InputMode::SignalCsv,
    }
}

fn build_spec(a: &RunArgs) -> Result<RunSpec, String> {
    let mut config = match (a.model, a.lambda) {
        (ModelArg::Constrained, None) => SolverConfig::constrained(),
        (ModelArg::Constrained, Some(_)) => return Err("--lambda only applies to --model penalized".into()),
        (ModelArg::Penalized, Some(l)) => SolverConfig::penalized(l),
        (ModelArg::Penalized, None) => return Err("--model penalized needs --lambda".into()),
    };
    config = config
        .with_p(a.p)
        .with_theta(a.theta)
        .with_steps(a.sigma, a.tau.unwrap_or(0.99 / a.sigma))
        .with_iterations(a.iters)
        .with_tolerance(a.tolerance)
        .with_tv(a.tv, a.tv_kind)
        .with_gamut_clamp(a.gamut_clamp)
        .with_penalized_method(a.penalized_method);
    config.validate().map_err(|e| e.to_string())?;
    Ok(RunSpec {
        inputs: [a.f0.clone(), a.f1.clone()],
        input_mode: a.mode.unwrap_or_else(|| guess_mode(&a.f0)),
        normalization: if a.equalize_mass {
            Normalization::EqualizeMass
        } else {
            Normalization::None
        },
        time_steps: a.time_steps,
        spatial_boundary: a.boundary,
        color_boundary: a.color_boundary,
        config,
        format: a.format,
        intensity: a.intensity,
    })
}

fn logger(every: usize) -> impl FnMut(&ProgressRow) {
    move |r: &ProgressRow| {
        if every > 0 && r.iteration.is_multiple_of(every) {
            eprintln!(
                "iter {:>6}  energy {:.6e}  residual {:.3e}  dual {:.3e}",
                r.iteration, r.energy, r.residual, r.dual_residual
            );
        }
    }
}

fn summary(m: &RunManifest) {
    let r = &m.report;
    println!(
        "{} iterations in {:.2}s, energy {:.6e}, dual residual {:.3e}; wrote {} files to {}",
        r.iterations,
        r.wall_time_s,
        r.final_energy().unwrap_or(f64::NAN),
        r.final_dual_residual().unwrap_or(f64::NAN),
        m.frames.len() + m.intensity_frames.len() + 1,
        m.out_dir.display()
    );
}

fn same_outputs(a: &RunManifest, b: &RunManifest) -> std::io::Result<bool> {
    if a.frames != b.frames {
        return Ok(false);
    }
    for name in &a.frames {
        if std::fs::read(a.out_dir.join(name))? != std::fs::read(b.out_dir.join(name))? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run(a) => {
            let spec = build_spec(&a)?;
            let mut log = logger(a.log.log_every);
            let m = job::execute(&spec, &a.out, Some(&mut log)).map_err(|e| e.to_string())?;
            summary(&m);
        }
        Command::Replay(a) => {
            let old = RunManifest::read(&a.manifest).map_err(|e| e.to_string())?;
            let mut log = logger(a.log.log_every);
            let new = job::execute(&old.run, &a.out, Some(&mut log)).map_err(|e| e.to_string())?;
            summary(&new);
            if a.check {
                let same = same_outputs(&old, &new).map_err(|e| e.to_string())?;
                if !same || old.report.energy_trace != new.report.energy_trace {
                    return Err(format!(
                        "replay differs from {}",
                        old.out_dir.join(MANIFEST_FILE).display()
                    ));
                }
                println!("replay matches the recorded run");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
