//! Command-line front end. `run` returns the process exit code:
//! 0 on success, 1 for invalid configs and runtime failures, 2 for usage
//! errors.

use crate::checks::{self, Check, SensitivityReport};
use crate::config::{self, ConfigError};
use crate::export::{self, ExportError};
use crate::plot;
use crate::report::{self, OptimReport, OptimSettingsReport};
use aerobat_core::optim::problems;
use aerobat_core::optim::OptimizationResult;
use aerobat_core::params::FDC_NAMES;
use aerobat_core::sim::{initial_state, Mode, Simulator, Trajectory};
use aerobat_core::RobotParams;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Environment variable that takes precedence over `--out`.
pub const OUT_ENV: &str = "AEROBAT_OUT";
const DEFAULT_OUT: &str = "out";

#[derive(Parser, Debug)]
#[command(name = "aerobat", version, about = "Flapping-wing robot simulator with morphing-wing gait and pitch optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML config file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (the AEROBAT_OUT environment variable wins over this).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Replaces optim.seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Overrides one config value, e.g. --set aero.wind=[-2,0,0]. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum ModeArg {
    OpenLoop,
    PitchStabilized,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the full model and export the trajectory.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// End time in seconds (default sim.t_end).
        #[arg(long, value_name = "SECONDS")]
        t_end: Option<f64>,
        #[arg(long, value_enum, default_value = "open-loop")]
        mode: ModeArg,
    },
    /// Search FDC references and initial pitch for a periodic forward gait.
    /// The best gait is then re-run for 4 s to expose its limit cycle.
    OptimizeGait {
        #[command(flatten)]
        common: Common,
        /// Replaces optim.max_evals.
        #[arg(long, value_name = "N")]
        max_evals: Option<usize>,
    },
    /// Search the pitch feedback gains K_c.
    OptimizePitch {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "N")]
        max_evals: Option<usize>,
        /// Length of the exported closed- and open-loop runs (default 2 x optim.pitch_horizon).
        #[arg(long, value_name = "SECONDS")]
        t_end: Option<f64>,
    },
    /// Sweep each FDC over [0.8, 1.2] of nominal through a full crank turn.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        /// Crank samples per revolution.
        #[arg(long, default_value_t = 360)]
        samples: usize,
    },
    /// Run the invariant suite; exit 0 only if every check passes.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Render SVG charts from a trajectory CSV.
    Plot {
        #[command(flatten)]
        common: Common,
        /// Trajectory CSV (default <out>/trajectory.csv).
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Config(ConfigError),
    Model(aerobat_core::Error),
    Export(ExportError),
    Checks(usize),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) | Failure::Config(ConfigError::Override(_)) => 2,
            _ => 1,
        }
    }

    fn module(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "cli",
            Failure::Config(_) => "config",
            Failure::Model(aerobat_core::Error::Step { module, .. }) => module,
            Failure::Model(_) => "model",
            Failure::Export(_) => "export",
            Failure::Checks(_) => "validate",
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Model(e) => write!(f, "{e}"),
            Failure::Export(e) => write!(f, "{e}"),
            Failure::Checks(n) => write!(f, "{n} invariant check(s) failed"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<aerobat_core::Error> for Failure {
    fn from(e: aerobat_core::Error) -> Self {
        Failure::Model(e)
    }
}

impl From<ExportError> for Failure {
    fn from(e: ExportError) -> Self {
        Failure::Export(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Export(ExportError::Io(e))
    }
}

/// Seconds since the Unix epoch, for error lines only.
fn wall_clock() -> String {
    let d = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .unwrap_or_default();
    format!("{}.{:03}", d.as_secs(), d.subsec_millis())
}

/// Parses `argv` (program name first), runs the subcommand and reports.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    2
                }
            };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "error [{}] at {} (unix s): {f}", f.module(), wall_clock());
            f.code()
        }
    }
}

struct Context {
    params: RobotParams,
    out: PathBuf,
    overrides: Vec<String>,
    hash: String,
}

fn out_dir(flag: Option<&Path>) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => flag.map_or_else(|| PathBuf::from(DEFAULT_OUT), Path::to_path_buf),
    }
}

fn prepare(c: &Common, max_evals: Option<usize>) -> Result<Context, Failure> {
    let overrides = c.set.iter().map(|s| config::parse_override(s)).collect::<Result<Vec<_>, _>>()?;
    let mut params = config::load_file(&c.config, &overrides)?;
    if let Some(seed) = c.seed {
        params.optim.seed = seed;
    }
    if let Some(n) = max_evals {
        if n == 0 {
            return Err(Failure::Usage("--max-evals must be at least 1".into()));
        }
        params.optim.max_evals = n;
    }
    let out = out_dir(c.out.as_deref());
    std::fs::create_dir_all(&out)?;
    let hash = config::config_hash(&params);
    Ok(Context {
        params,
        out,
        overrides: c.set.clone(),
        hash,
    })
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    config_hash: &'a str,
    seed: u64,
    overrides: &'a [String],
    files: Vec<FileEntry>,
}

/// Writes `manifest.json` listing `files` (relative to the output dir)
/// with their digests.
fn write_manifest(ctx: &Context, subcommand: &str, files: &[&str]) -> Result<(), Failure> {
    let mut entries = Vec::new();
    for f in files {
        let bytes = std::fs::read(ctx.out.join(f))?;
        entries.push(FileEntry {
            name: f.to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    let m = Manifest {
        tool: "aerobat",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        config_hash: &ctx.hash,
        seed: ctx.params.optim.seed,
        overrides: &ctx.overrides,
        files: entries,
    };
    export::write_json(&ctx.out.join("manifest.json"), &m)?;
    Ok(())
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::Simulate { common, t_end, mode } => simulate(&prepare(&common, None)?, t_end, mode, stdout),
        Command::OptimizeGait { common, max_evals } => optimize_gait(&prepare(&common, max_evals)?, stdout),
        Command::OptimizePitch { common, max_evals, t_end } => {
            optimize_pitch(&prepare(&common, max_evals)?, t_end, stdout)
        }
        Command::Sensitivity { common, samples } => {
            if samples < 2 {
                return Err(Failure::Usage("--samples must be at least 2".into()));
            }
            sensitivity(&prepare(&common, None)?, samples, stdout)
        }
        Command::Validate { common } => validate(&prepare(&common, None)?, stdout),
        Command::Plot { common, input } => plot_cmd(&prepare(&common, None)?, input, stdout),
    }
}

fn check_t_end(t: f64) -> Result<f64, Failure> {
    if t.is_finite() && t > 0.0 {
        Ok(t)
    } else {
        Err(Failure::Usage(format!("--t-end must be a positive number of seconds, got {t}")))
    }
}

fn simulate(ctx: &Context, t_end: Option<f64>, mode: ModeArg, stdout: &mut dyn Write) -> Result<(), Failure> {
    let p = &ctx.params;
    let t_end = check_t_end(t_end.unwrap_or(p.sim.t_end))?;
    let (mode, name) = match mode {
        ModeArg::OpenLoop => (Mode::OpenLoop, "open-loop"),
        ModeArg::PitchStabilized => (Mode::PitchStabilized, "pitch-stabilized"),
    };
    let s0 = initial_state(p, mode, p.optim.initial_pitch)?;
    let (traj, err) = Simulator::new(p, mode).run(s0, t_end);
    // Whatever was integrated is written out, even after a failure.
    export::write_trajectory(&ctx.out.join("trajectory.csv"), &traj)?;
    export::write_strips(&ctx.out.join("strips.csv"), p, &traj.final_state)?;
    let summary = report::summarize(p, name, &traj, err.as_ref().map(ToString::to_string));
    export::write_json(&ctx.out.join("summary.json"), &summary)?;
    write_manifest(ctx, "simulate", &["trajectory.csv", "strips.csv", "summary.json"])?;
    let _ = writeln!(
        stdout,
        "simulated {:.4} s ({} samples), mean velocity [{:.4}, {:.4}, {:.4}] m/s -> {}",
        summary.duration,
        summary.samples,
        summary.mean_velocity[0],
        summary.mean_velocity[1],
        summary.mean_velocity[2],
        ctx.out.display()
    );
    match err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn optim_report(
    ctx: &Context,
    problem: &str,
    names: Vec<String>,
    r: &OptimizationResult,
    (baseline_x, baseline_cost): (Vec<f64>, f64),
    horizon: f64,
    bounds: &aerobat_core::optim::Bounds,
) -> OptimReport {
    let o = &ctx.params.optim;
    OptimReport {
        problem: problem.to_string(),
        names,
        x_best: r.x_best.clone(),
        cost: r.f_best,
        baseline_cost,
        baseline_x,
        evaluations: r.evaluations,
        termination: report::termination_name(r.termination).to_string(),
        seed: r.seed,
        config_hash: ctx.hash.clone(),
        settings: OptimSettingsReport {
            max_evals: o.max_evals,
            initial_step: o.initial_step,
            tolerance: o.tolerance,
            restarts: o.restarts,
            horizon,
            lower: bounds.lower.clone(),
            upper: bounds.upper.clone(),
        },
        trace: report::trace_entries(r),
    }
}

fn optimize_gait(ctx: &Context, stdout: &mut dyn Write) -> Result<(), Failure> {
    let p = &ctx.params;
    let bounds = problems::gait_bounds(p)?;
    let start = problems::gait_start(p);
    let baseline = problems::evaluate_gait(p, &start)?;
    let r = problems::optimize_gait(p)?;
    let mut names: Vec<String> = FDC_NAMES.iter().map(|n| format!("l_ref.{n}")).collect();
    names.push("theta_y0".into());
    let rep = optim_report(ctx, "gait", names, &r, (start, baseline), p.optim.gait_horizon, &bounds);
    export::write_json(&ctx.out.join("optimize_gait.json"), &rep)?;

    let t_eval = report::GAIT_EVALUATION_SECONDS.max(p.optim.gait_horizon);
    let traj = problems::gait_trajectory(p, &r.x_best, t_eval)?;
    export::write_trajectory(&ctx.out.join("best_trajectory.csv"), &traj)?;
    let best = problems::gait_params(p, &r.x_best);
    export::write_json(&ctx.out.join("summary.json"), &report::summarize(&best, "open-loop", &traj, None))?;
    write_manifest(ctx, "optimize-gait", &["optimize_gait.json", "best_trajectory.csv", "summary.json"])?;
    let _ = writeln!(
        stdout,
        "gait: J = {:.6e} (nominal {:.6e}) after {} evaluations, x = {:?}",
        r.f_best, baseline, r.evaluations, r.x_best
    );
    Ok(())
}

#[derive(Serialize)]
struct PitchComparison {
    t_end: f64,
    window_start: f64,
    pitch_ref: f64,
    closed_loop_max_error: f64,
    open_loop_max_error: f64,
    fdc_min: [f64; 4],
    fdc_max: [f64; 4],
    fdc_within_bounds: bool,
}

fn fdc_within(traj: &Trajectory, lo: &[f64; 4], hi: &[f64; 4]) -> bool {
    traj.samples
        .iter()
        .all(|s| (0..4).all(|i| s.fdc[i] >= lo[i] - 1e-12 && s.fdc[i] <= hi[i] + 1e-12))
}

fn optimize_pitch(ctx: &Context, t_end: Option<f64>, stdout: &mut dyn Write) -> Result<(), Failure> {
    let p = &ctx.params;
    let pitch0 = p.optim.initial_pitch;
    let bounds = problems::pitch_bounds(p)?;
    let baseline = problems::evaluate_pitch(p, &[0.0; 4], pitch0)?;
    let r = problems::optimize_pitch_gains(p, pitch0)?;
    let names = FDC_NAMES.iter().map(|n| format!("kc.{n}")).collect();
    let rep = optim_report(ctx, "pitch", names, &r, (vec![0.0; 4], baseline), p.optim.pitch_horizon, &bounds);
    export::write_json(&ctx.out.join("optimize_pitch.json"), &rep)?;

    let t_end = check_t_end(t_end.unwrap_or(2.0 * p.optim.pitch_horizon))?;
    let closed = problems::pitch_trajectory(p, &r.x_best, pitch0, t_end)?;
    let open = problems::pitch_trajectory(p, &[0.0; 4], pitch0, t_end)?;
    export::write_trajectory(&ctx.out.join("closed_loop.csv"), &closed)?;
    export::write_trajectory(&ctx.out.join("open_loop.csv"), &open)?;
    let from = t_end - p.optim.pitch_horizon.min(t_end);
    let (lo, hi) = p.fdc_bounds();
    let cmp = PitchComparison {
        t_end,
        window_start: from,
        pitch_ref: p.control.pitch_ref,
        closed_loop_max_error: report::max_pitch_error(&closed, p.control.pitch_ref, from),
        open_loop_max_error: report::max_pitch_error(&open, p.control.pitch_ref, from),
        fdc_min: lo,
        fdc_max: hi,
        fdc_within_bounds: fdc_within(&closed, &lo, &hi),
    };
    export::write_json(&ctx.out.join("pitch_comparison.json"), &cmp)?;
    write_manifest(
        ctx,
        "optimize-pitch",
        &["optimize_pitch.json", "closed_loop.csv", "open_loop.csv", "pitch_comparison.json"],
    )?;
    let _ = writeln!(
        stdout,
        "pitch: J = {:.6e} (K_c = 0: {:.6e}), max |theta_y - ref| over the last {:.1} s: closed {:.4} rad, open {:.4} rad",
        r.f_best,
        baseline,
        t_end - from,
        cmp.closed_loop_max_error,
        cmp.open_loop_max_error
    );
    Ok(())
}

fn sensitivity(ctx: &Context, samples: usize, stdout: &mut dyn Write) -> Result<(), Failure> {
    let (paths, rep): (_, SensitivityReport) = checks::sensitivity(&ctx.params.linkage, &checks::SWEEP_FACTORS, samples);
    export::write_sensitivity(&ctx.out.join("sensitivity.csv"), &paths)?;
    export::write_json(&ctx.out.join("sensitivity.json"), &rep)?;
    write_manifest(ctx, "sensitivity", &["sensitivity.csv", "sensitivity.json"])?;
    for f in &rep.fdc {
        let _ = writeln!(
            stdout,
            "{:<5} max path shift p5 {:.3e} m, p16 {:.3e} m, assembled {}",
            f.name, f.p5_deviation, f.p16_deviation, f.all_assembled
        );
    }
    let failed = paths.iter().filter(|p| p.samples.is_err()).count();
    if failed > 0 {
        let _ = writeln!(stdout, "{failed} sweep path(s) failed to assemble");
    }
    Ok(())
}

#[derive(Serialize)]
struct ValidationReport<'a> {
    passed: bool,
    checks: &'a [Check],
}

fn validate(ctx: &Context, stdout: &mut dyn Write) -> Result<(), Failure> {
    let results = checks::run_all(&ctx.params, ctx.params.optim.seed);
    for c in &results {
        let _ = writeln!(stdout, "{}", c.line());
    }
    let failed = results.iter().filter(|c| !c.passed).count();
    export::write_json(
        &ctx.out.join("validate.json"),
        &ValidationReport {
            passed: failed == 0,
            checks: &results,
        },
    )?;
    write_manifest(ctx, "validate", &["validate.json"])?;
    if failed > 0 {
        Err(Failure::Checks(failed))
    } else {
        Ok(())
    }
}

fn plot_cmd(ctx: &Context, input: Option<PathBuf>, stdout: &mut dyn Write) -> Result<(), Failure> {
    let input = input.unwrap_or_else(|| ctx.out.join("trajectory.csv"));
    let table = export::read_table(&input)?;
    let charts = plot::trajectory_charts(&table, Some(ctx.params.control.pitch_ref))?;
    let mut names = Vec::new();
    for (name, svg) in &charts {
        std::fs::write(ctx.out.join(name), svg)?;
        names.push(name.as_str());
    }
    write_manifest(ctx, "plot", &names)?;
    let _ = writeln!(stdout, "wrote {} charts from {} rows of {}", charts.len(), table.rows(), input.display());
    Ok(())
}
