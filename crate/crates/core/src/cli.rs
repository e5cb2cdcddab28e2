//! Command-line driver: scene loading, solves, convergence sweeps and CSV output.

use crate::basis::{build_coupled_space, HnaOptions, HpOptions};
use crate::diagnostics::{check_star_coercivity, CoercivityOptions};
use crate::error::HnaError;
use crate::geometry::Scene;
use crate::kernels::StarDescriptor;
use crate::postprocess::{
    far_field_samples, field_grid, fmt_f64, l2_relative_error, sample_trace, write_farfield_csv, write_field_csv,
    write_trace_csv, FieldEvaluator, TraceEvaluator,
};
use crate::quadrature::QuadSettings;
use crate::scenes::{builtin_scene, load_scene};
use crate::solver::{assemble, solve, Solution, SolutionDump};
use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "HNABEM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hnabem", version, about = "HNA boundary element solver for a convex polygon with small obstacles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assemble and solve one system; writes solution.json and trace.csv.
    Solve(SolveArgs),
    /// Relative L² errors against a reference solution; writes convergence.csv.
    Converge(ConvergeArgs),
    /// Far-field pattern; writes farfield.csv.
    Farfield(FarfieldArgs),
    /// Total field on a grid; writes field.csv.
    Field(FieldArgs),
    /// Numerical-range evidence for the star-combined operator; writes coercivity.csv.
    Coercivity(CoercivityArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Built-in scene (exp1, exp2, exp3, single, circle) or path to a TOML scene file.
    #[arg(long, default_value = "exp1")]
    pub scene: String,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Quadrature points per wavelength.
    #[arg(long)]
    pub ppw: Option<f64>,
    /// Finer quadrature (16 points per wavelength).
    #[arg(long)]
    pub high_accuracy: bool,
    /// Coupling parameter η (defaults to k).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Grading ratio σ.
    #[arg(long, default_value_t = 0.15)]
    pub sigma: f64,
    /// Number of grading layers (defaults to 2p).
    #[arg(long)]
    pub layers: Option<usize>,
    /// Removal parameter α (defaults to max{(1+p)/4, 2}).
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub p: usize,
    /// Trace samples per boundary piece.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Wavenumbers (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "20")]
    pub k: Vec<f64>,
    /// Degrees (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7")]
    pub p: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    pub p_ref: usize,
    /// Write zero in the wall-time column so reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FarfieldArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub p: usize,
    #[arg(long, default_value_t = crate::postprocess::DEFAULT_ANGLES)]
    pub angles: usize,
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long, default_value_t = 8)]
    pub p: usize,
    /// Grid as x0,x1,y0,y1,nx,ny.
    #[arg(long, value_delimiter = ',', default_value = "-4,7,-5,5,100,100")]
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CoercivityArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', default_value = "5")]
    pub k: Vec<f64>,
    /// Polynomial degree of the discretization.
    #[arg(long, default_value_t = 3)]
    pub p: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    fn geometry(e: impl std::fmt::Display) -> Self {
        CliError { code: 2, message: format!("geometry error: {e}") }
    }
    fn solve(e: impl std::fmt::Display) -> Self {
        CliError { code: 3, message: format!("solve failed: {e}") }
    }
    fn io(e: impl std::fmt::Display) -> Self {
        CliError { code: 1, message: format!("{e}") }
    }
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scene: String,
    pub k: Vec<f64>,
    pub p: Vec<usize>,
    pub p_ref: usize,
    pub sigma: f64,
    pub layers: Option<usize>,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub settings: QuadSettings,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    fn from_common(c: &Common, k: Vec<f64>, p: Vec<usize>, p_ref: usize) -> Result<Self, CliError> {
        if k.is_empty() || k.iter().any(|v| !(*v > 0.0)) {
            return Err(CliError::io("all wavenumbers must be positive"));
        }
        let mut settings = if c.high_accuracy { QuadSettings::high_accuracy() } else { QuadSettings::default() };
        if let Some(ppw) = c.ppw {
            settings.ppw = ppw;
        }
        Ok(ExperimentConfig {
            scene: c.scene.clone(),
            k,
            p,
            p_ref,
            sigma: c.sigma,
            layers: c.layers,
            alpha: c.alpha,
            eta: c.eta,
            settings,
            out_dir: c.out_dir.clone(),
        })
    }

    /// Scene at wavenumber `k`.
    pub fn scene_at(&self, k: f64) -> Result<Scene, CliError> {
        let path = Path::new(&self.scene);
        let base = if path.exists() {
            load_scene(path)
        } else if self.scene.ends_with(".toml") || self.scene.contains('/') {
            Err(HnaError::Invalid(format!("scene file {} not found", self.scene)))
        } else {
            builtin_scene(&self.scene, k)
        }
        .map_err(CliError::geometry)?;
        base.with_k(k, self.eta).map_err(CliError::geometry)
    }

    pub fn hna_options(&self, p: usize) -> HnaOptions {
        let mut o = HnaOptions::defaults(p);
        o.sigma = self.sigma;
        if let Some(l) = self.layers {
            o.layers = l;
        }
        if let Some(a) = self.alpha {
            o.alpha = a;
        }
        o
    }

    pub fn hp_options(&self, p: usize) -> HpOptions {
        let mut o = HpOptions::defaults(p);
        o.sigma = self.sigma;
        if let Some(l) = self.layers {
            o.layers = l;
        }
        o
    }

    /// Build, assemble and solve at `(k, p)`.
    pub fn solve(&self, scene: &Scene, p: usize) -> Result<Solution, CliError> {
        let space = build_coupled_space(scene, &self.hna_options(p), &self.hp_options(p)).map_err(CliError::geometry)?;
        let sys = assemble(scene, &space, p, self.settings).map_err(CliError::solve)?;
        solve(&sys).map_err(CliError::solve)
    }

    fn ensure_out_dir(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out_dir).map_err(CliError::io)
    }
}

fn single_k(k: Option<f64>) -> Vec<f64> {
    vec![k.unwrap_or(20.0)]
}

/// Solve and write `solution.json` and `trace.csv`.
pub fn cmd_solve(args: &SolveArgs) -> Result<Solution, CliError> {
    let cfg = ExperimentConfig::from_common(&args.common, single_k(args.k), vec![args.p], args.p + 1)?;
    let scene = cfg.scene_at(cfg.k[0])?;
    let sol = cfg.solve(&scene, args.p)?;
    cfg.ensure_out_dir()?;
    let dump = SolutionDump::from_solution(&sol);
    let json = serde_json::to_string_pretty(&dump).map_err(CliError::io)?;
    std::fs::write(cfg.out_dir.join("solution.json"), json).map_err(CliError::io)?;
    let ev = TraceEvaluator::new(&sol);
    write_trace_csv(&cfg.out_dir.join("trace.csv"), &sample_trace(&ev, args.samples)).map_err(CliError::io)?;
    Ok(sol)
}

/// One row of `convergence.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub k: f64,
    pub p: usize,
    pub n_total: usize,
    pub n_gamma: usize,
    pub n_small: usize,
    pub rel_l2_error: f64,
    pub cond_estimate: f64,
    pub wall_time_s: f64,
}

/// Header of `convergence.csv`.
pub const CONVERGENCE_HEADER: &str = "k,p,N_total,N_Gamma,N_gamma,rel_L2_error,cond_estimate,wall_time_s";

/// Relative errors against the `p_ref` solution for every `(k, p)`.
pub fn convergence_rows(cfg: &ExperimentConfig, timing: bool) -> Result<Vec<ConvergenceRow>, CliError> {
    if cfg.p.is_empty() {
        return Err(CliError::io("p list is empty"));
    }
    if cfg.p.iter().any(|&p| p >= cfg.p_ref) {
        return Err(CliError::io("p_ref must exceed every p"));
    }
    let mut rows = Vec::new();
    for &k in &cfg.k {
        let scene = cfg.scene_at(k)?;
        let reference = cfg.solve(&scene, cfg.p_ref)?;
        let ref_ev = TraceEvaluator::new(&reference);
        for &p in &cfg.p {
            let t = Instant::now();
            let sol = cfg.solve(&scene, p)?;
            let wall = if timing { t.elapsed().as_secs_f64() } else { 0.0 };
            let ev = TraceEvaluator::new(&sol);
            let err = l2_relative_error(&ev, &ref_ev, &cfg.settings).map_err(CliError::solve)?;
            rows.push(ConvergenceRow {
                k,
                p,
                n_total: sol.coefficients.len(),
                n_gamma: sol.n_big(),
                n_small: sol.n_small(),
                rel_l2_error: err,
                cond_estimate: 1.0 / sol.rcond,
                wall_time_s: wall,
            });
        }
    }
    Ok(rows)
}

/// Write (or append to) `convergence.csv`.
pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<(), CliError> {
    let exists = path.exists();
    let f = std::fs::OpenOptions::new().create(true).append(true).open(path).map_err(CliError::io)?;
    let mut w = std::io::BufWriter::new(f);
    if !exists {
        writeln!(w, "{CONVERGENCE_HEADER}").map_err(CliError::io)?;
    }
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(r.k),
            r.p,
            r.n_total,
            r.n_gamma,
            r.n_small,
            fmt_f64(r.rel_l2_error),
            fmt_f64(r.cond_estimate),
            fmt_f64(r.wall_time_s)
        )
        .map_err(CliError::io)?;
    }
    w.flush().map_err(CliError::io)
}

pub fn cmd_converge(args: &ConvergeArgs) -> Result<Vec<ConvergenceRow>, CliError> {
    let cfg = ExperimentConfig::from_common(&args.common, args.k.clone(), args.p.clone(), args.p_ref)?;
    let rows = convergence_rows(&cfg, !args.no_timing)?;
    cfg.ensure_out_dir()?;
    write_convergence_csv(&cfg.out_dir.join("convergence.csv"), &rows)?;
    Ok(rows)
}

pub fn cmd_farfield(args: &FarfieldArgs) -> Result<(), CliError> {
    let cfg = ExperimentConfig::from_common(&args.common, single_k(args.k), vec![args.p], args.p + 1)?;
    let scene = cfg.scene_at(cfg.k[0])?;
    let sol = cfg.solve(&scene, args.p)?;
    let ev = TraceEvaluator::new(&sol);
    let field = FieldEvaluator::new(&ev, &cfg.settings);
    cfg.ensure_out_dir()?;
    write_farfield_csv(&cfg.out_dir.join("farfield.csv"), &far_field_samples(&field, args.angles)).map_err(CliError::io)
}

pub fn cmd_field(args: &FieldArgs) -> Result<(), CliError> {
    if args.grid.len() != 6 {
        return Err(CliError::io("grid must be x0,x1,y0,y1,nx,ny"));
    }
    let g = &args.grid;
    let cfg = ExperimentConfig::from_common(&args.common, single_k(args.k), vec![args.p], args.p + 1)?;
    let scene = cfg.scene_at(cfg.k[0])?;
    let sol = cfg.solve(&scene, args.p)?;
    let ev = TraceEvaluator::new(&sol);
    let field = FieldEvaluator::new(&ev, &cfg.settings);
    let grid = field_grid(&field, g[0], g[1], g[2], g[3], g[4] as usize, g[5] as usize);
    cfg.ensure_out_dir()?;
    write_field_csv(&cfg.out_dir.join("field.csv"), &grid).map_err(CliError::io)
}

/// Header of `coercivity.csv`.
pub const COERCIVITY_HEADER: &str = "k,alpha_theory,admissible,range_lower_bound,hermitian_min,pass";

pub fn cmd_coercivity(args: &CoercivityArgs) -> Result<(), CliError> {
    let cfg = ExperimentConfig::from_common(&args.common, args.k.clone(), vec![args.p], args.p + 1)?;
    let opts = CoercivityOptions {
        p: args.p,
        trials: args.trials,
        seed: args.seed,
        ..Default::default()
    };
    cfg.ensure_out_dir()?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(cfg.out_dir.join("coercivity.csv")).map_err(CliError::io)?);
    writeln!(w, "{COERCIVITY_HEADER}").map_err(CliError::io)?;
    for &k in &cfg.k {
        let scene = cfg.scene_at(k)?;
        let star = StarDescriptor::centroids(&scene);
        let r = check_star_coercivity(&scene, &star, &opts, cfg.settings).map_err(CliError::geometry)?;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(r.k),
            fmt_f64(r.alpha_theory),
            r.admissible,
            fmt_f64(r.range_lower_bound),
            fmt_f64(r.hermitian_min),
            r.pass
        )
        .map_err(CliError::io)?;
    }
    w.flush().map_err(CliError::io)
}

/// Run a parsed command line.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a).map(|_| ()),
        Command::Converge(a) => cmd_converge(a).map(|_| ()),
        Command::Farfield(a) => cmd_farfield(a),
        Command::Field(a) => cmd_field(a),
        Command::Coercivity(a) => cmd_coercivity(a),
    }
}

/// Configure the global thread pool from [`THREADS_ENV`].
pub fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}
