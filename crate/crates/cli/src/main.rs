use std::f64::consts::PI;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dehom::align::PhaseInit;
use dehom::assemble::{dehomogenise, PipelineConfig, PipelineOutput, StageTimings};
use dehom::branches::NullDetector;
use dehom::case::{parse_case, CoarseSolution};
use dehom::contour::{extract_mask_contours, write_svg};
use dehom::evaluate::{evaluate, evaluate_design, EvalOptions, Flags, Metrics};
use dehom::output::{read_pgm, write_field_pgm, write_pgm};
use dehom::plan::ResolutionPlan;
use dehom::sweep::{grid_points, run_sweep, time_fit, write_csv};
use dehom::synth::{synth, SynthKind};
use dehom::{Error, Result};

/// Turn a coarse laminate solution into a binary design.
///
/// Without a subcommand the full pipeline runs on `--input` and writes
/// design.pgm, metrics.json and contours.svg into `--output`.
#[derive(Parser, Debug)]
#[command(name = "dehom", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic case file.
    Synth(SynthArgs),
    /// Measure an existing design against its case.
    Eval(EvalArgs),
    /// Time the pipeline over a grid of synthetic cases.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Stripes,
    Square,
    Circle,
}

impl From<Kind> for SynthKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Stripes => SynthKind::Stripes,
            Kind::Square => SynthKind::Square,
            Kind::Circle => SynthKind::Circle,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Detector {
    Threshold,
    Winding,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Init {
    Zero,
    Propagate,
}

/// Pipeline parameters shared by every subcommand that runs it.
#[derive(Args, Debug, Clone)]
struct PipelineArgs {
    /// Alignment sweeps.
    #[arg(long = "iters", visible_alias = "iterations", default_value_t = 20)]
    iters: usize,
    /// Alignment neighbourhood radius R in coarse elements.
    #[arg(long, default_value_t = 2.0)]
    radius: f64,
    /// Alignment anisotropy r; the pair is (r, 1/r).
    #[arg(long, default_value_t = 1.0 / PI)]
    align_r: f64,
    /// Branch closure and pinch anisotropy along the laminations.
    #[arg(long, default_value_t = 1.0 / PI)]
    branch_r1: f64,
    #[arg(long, default_value_t = 1.0)]
    branch_r2: f64,
    /// Pinch steps per branch.
    #[arg(long, default_value_t = 3)]
    k_max: usize,
    /// Minimum feature size in fine pixels.
    #[arg(long, default_value_t = 3.0)]
    h_min: f64,
    /// Drop solid pieces smaller than this many fine pixels.
    #[arg(long, default_value_t = 36)]
    min_island: usize,
    #[arg(long, value_enum, default_value_t = Detector::Winding)]
    detector: Detector,
    #[arg(long, value_enum, default_value_t = Init::Propagate)]
    phase_init: Init,
    /// Constant added to every kernel phase after alignment.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phase_shift: f64,
    #[arg(long)]
    no_boundary: bool,
    #[arg(long)]
    no_branch_repair: bool,
    /// Plain alignment rule, without matching opposing kernels.
    #[arg(long)]
    no_extended_alignment: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl PipelineArgs {
    fn config(&self, omega: f64) -> PipelineConfig {
        let mut cfg = PipelineConfig::new(omega);
        cfg.h_min = self.h_min;
        cfg.align.iterations = self.iters;
        cfg.align.radius_elems = self.radius;
        cfg.align.base_r = self.align_r;
        cfg.align.extended = !self.no_extended_alignment;
        cfg.align.init = match self.phase_init {
            Init::Zero => PhaseInit::Zero,
            Init::Propagate => PhaseInit::Propagate,
        };
        cfg.branch.aniso.r1 = self.branch_r1;
        cfg.branch.aniso.r2 = self.branch_r2;
        cfg.branch.k_max = self.k_max;
        cfg.branch.detector = match self.detector {
            Detector::Threshold => NullDetector::Threshold,
            Detector::Winding => NullDetector::Winding,
        };
        cfg.boundary = !self.no_boundary;
        cfg.branch_repair = !self.no_branch_repair;
        cfg.phase_shift = self.phase_shift;
        cfg.min_island_px = self.min_island;
        cfg
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Case file (JSON).
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Target frequency: periods per unit length.
    #[arg(long)]
    omega: Option<f64>,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    output: PathBuf,
    /// Skip finite-element compliance.
    #[arg(long)]
    no_fem: bool,
    /// Skip the homogenised reference solve.
    #[arg(long)]
    no_reference: bool,
    /// Do not write contours.svg.
    #[arg(long)]
    no_contours: bool,
    /// Also write intermediate fields as PGM images.
    #[arg(long)]
    debug: bool,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Coarse elements per side.
    #[arg(long = "n-c", default_value_t = 40)]
    n_c: usize,
    /// Relative thickness.
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    /// Minimum relative thickness (defaults to `mu`).
    #[arg(long)]
    mu_min: Option<f64>,
    #[arg(short, long, default_value = "case.json")]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Case file (JSON).
    #[arg(short, long)]
    input: PathBuf,
    /// Design raster (binary PGM) on a refinement of the case grid.
    #[arg(short, long)]
    design: PathBuf,
    /// Frequency the design was made for.
    #[arg(long)]
    omega: f64,
    #[arg(long, default_value_t = 3.0)]
    h_min: f64,
    /// Metrics file; printed to stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    no_reference: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum, default_value_t = Kind::Square)]
    kind: Kind,
    #[arg(long = "n-c", value_delimiter = ',', default_values_t = [20usize, 40])]
    n_c: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [30.0, 60.0])]
    omega: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2])]
    mu_min: Vec<f64>,
    #[arg(long = "sweep-h-min", value_delimiter = ',', default_values_t = [3.0])]
    sweep_h_min: Vec<f64>,
    #[arg(short, long, default_value = "sweep.csv")]
    output: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

fn read_case(path: &Path) -> Result<CoarseSolution> {
    let bytes = fs::read(path).map_err(|e| Error::case(path.display().to_string(), e.to_string()))?;
    parse_case(&bytes)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn write_debug(dir: &Path, out: &PipelineOutput) -> Result<()> {
    let Some(f) = &out.fields else { return Ok(()) };
    for (l, p) in f.phase_i2.iter().enumerate() {
        write_field_pgm(p, -PI, PI, create(&dir.join(format!("phase_{l}.pgm")))?)?;
    }
    for (l, r) in f.rho.iter().enumerate() {
        write_field_pgm(r, 0.0, 1.0, create(&dir.join(format!("rho_{l}.pgm")))?)?;
    }
    for (name, m) in [("union", &f.union), ("s", &f.s), ("ds", &f.ds), ("solid", &f.solid)] {
        write_pgm(m, create(&dir.join(format!("{name}.pgm")))?)?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let input = args.input.as_ref().ok_or_else(|| Error::InvalidArgument("--input is required".into()))?;
    let omega = args.omega.ok_or_else(|| Error::InvalidArgument("--omega is required".into()))?;
    let sol = read_case(input)?;
    let mut cfg = args.pipeline.config(omega);
    cfg.keep_fields = args.debug;
    cfg.validate()?;
    println!("plan: {}", ResolutionPlan::new(sol.h(), omega, sol.mu_min(), cfg.h_min)?);

    let out = dehomogenise(&sol, &cfg)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    fs::create_dir_all(&args.output)?;
    write_pgm(&out.raster.solid, create(&args.output.join("design.pgm"))?)?;
    if !args.no_contours {
        let set = extract_mask_contours(&out.raster.solid);
        write_svg(&set, &out.raster.grid, create(&args.output.join("contours.svg"))?)?;
    }
    if args.debug {
        write_debug(&args.output, &out)?;
    }
    let opts = EvalOptions { fem: !args.no_fem && sol.bc().is_some(), reference: !args.no_reference };
    let metrics = evaluate(&sol, &cfg, &out, opts)?;
    fs::write(args.output.join("metrics.json"), metrics.to_json())?;
    let t = out.timings;
    println!(
        "design {}x{}: V={:.4} C={} R={} components={} load_connected={} ({:.0} ms)",
        out.raster.grid.nx(),
        out.raster.grid.ny(),
        metrics.v,
        metrics.c.map_or("-".into(), |c| format!("{c:.6}")),
        metrics.r.map_or("-".into(), |r| format!("{r:.4}")),
        metrics.components,
        metrics.load_connected,
        t.total_ms
    );
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let sol = synth(args.kind.into(), args.n_c, args.mu, args.mu_min.unwrap_or(args.mu))?;
    fs::write(&args.output, sol.to_json())?;
    println!("wrote {} ({}x{} elements)", args.output.display(), args.n_c, args.n_c);
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let sol = read_case(&args.input)?;
    let plan = ResolutionPlan::new(sol.h(), args.omega, sol.mu_min(), args.h_min)?;
    println!("plan: {plan}");
    let bytes = fs::read(&args.design).map_err(|e| Error::case(args.design.display().to_string(), e.to_string()))?;
    let width = bytes.split(|b| b.is_ascii_whitespace()).filter(|t| !t.is_empty()).nth(1);
    let width: usize = width
        .and_then(|t| std::str::from_utf8(t).ok()?.parse().ok())
        .ok_or_else(|| Error::case(args.design.display().to_string(), "unreadable PGM header"))?;
    let coarse = *sol.grid();
    if width % coarse.nx() != 0 {
        return Err(Error::case(args.design.display().to_string(), format!("width {width} is not a multiple of {}", coarse.nx())));
    }
    let design = read_pgm(&bytes, coarse.refine(width / coarse.nx()))?;
    let opts = EvalOptions { fem: sol.bc().is_some(), reference: !args.no_reference };
    let d = evaluate_design(&sol, &design, args.omega, &[], opts)?;
    let cfg = PipelineConfig::new(args.omega);
    let advisory = cfg.periodicity_advisory(&coarse);
    let metrics = Metrics::new(d, plan, StageTimings::default(), Flags::of(&cfg), 0, advisory, Vec::new());
    match &args.output {
        Some(p) => fs::write(p, metrics.to_json())?,
        None => println!("{}", metrics.to_json()),
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    if args.n_c.is_empty() || args.omega.is_empty() || args.mu_min.is_empty() || args.sweep_h_min.is_empty() {
        return Err(Error::InvalidArgument("every sweep range needs at least one value".into()));
    }
    let points = grid_points(&args.n_c, &args.omega, &args.mu_min, &args.sweep_h_min);
    let base = args.pipeline.config(args.omega[0]);
    let records = run_sweep(args.kind.into(), &points, &base, |r| match (&r.plan, &r.error) {
        (_, Some(e)) => eprintln!("n_c={} omega={} mu_min={}: failed: {e}", r.point.n_c, r.point.omega, r.point.mu_min),
        (Some(p), None) => println!("plan: {p} (n_c={}): {:.0} ms", r.point.n_c, r.timings.total_ms),
        (None, None) => {}
    });
    write_csv(&records, create(&args.output)?)?;
    let ok = records.iter().filter(|r| r.ok()).count();
    let fit = time_fit(&records);
    match fit.r2 {
        Some(r2) => println!(
            "fit over {ok} runs: t_total_ms = {:.4e} * n_c*omega/mu_min + {:.1}, R^2 = {r2:.4}",
            fit.slope, fit.intercept
        ),
        None => println!("R^2 undefined: {ok} successful run(s), at least two distinct predictors are needed"),
    }
    if ok == 0 {
        return Err(Error::pipeline(dehom::Stage::Plan, "every sweep run failed"));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let threads = match &cli.command {
        None => cli.run.pipeline.threads,
        Some(Command::Sweep(s)) => s.pipeline.threads,
        Some(_) => None,
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        None => cmd_run(&cli.run),
        Some(Command::Synth(a)) => cmd_synth(a),
        Some(Command::Eval(a)) => cmd_eval(a),
        Some(Command::Sweep(a)) => cmd_sweep(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
