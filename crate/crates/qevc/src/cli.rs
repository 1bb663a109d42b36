//! Subcommand implementations behind the `qevc` binary.
//!
//! The binary is a thin shell: every command here is a library function
//! taking a [`RunConfig`], so tests and downstream code can drive the same
//! pipelines without spawning a process.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::{parse_weights_arg, ModelFamily, RunConfig};
use crate::correspondence::{full_report, ReportParams};
use crate::error::{Error, Result};
use crate::krylov::{lanczos, q_matrix, time_averaged_ck, ComplexityTrace, DEFAULT_BREAKDOWN_TOL};
use crate::lattice::CvpMethod;
use crate::models::diagonalize;
use crate::nielsen::{
    auto_ridge, default_mc_samples, nielsen_bound_trace, plateau_estimate, reduced_basis_for,
    SolverOptions,
};

#[derive(Parser, Debug)]
#[command(
    name = "qevc",
    version,
    about = "Spread complexity and lattice Nielsen bounds for finite-dimensional Hamiltonians"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write the sorted energy spectrum as CSV (`n,E_n`)
    Spectrum(RunArgs),
    /// Lanczos coefficients and C_K(t): JSON scalars plus a trace CSV
    Krylov(RunArgs),
    /// Nielsen bound C_b(t) under the Krylov-schedule metric: trace CSV plus plateau JSON
    Nielsen(RunArgs),
    /// Monte-Carlo plateau estimate alone (JSON)
    Plateau(RunArgs),
    /// Full correspondence verification report (JSON)
    Verify(RunArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ModelArg {
    Gue,
    Goe,
    Ising,
    File,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SolverArg {
    Exact,
    Babai,
}

#[derive(Args, Debug, Default)]
pub struct RunArgs {
    /// JSON config file; all flags below override config keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Hilbert-space dimension for gue/goe models
    #[arg(long)]
    pub dim: Option<usize>,
    /// RNG seed for random models
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of Ising sites (D = 2^sites)
    #[arg(long)]
    pub sites: Option<usize>,
    /// Transverse field
    #[arg(long)]
    pub gx: Option<f64>,
    /// Longitudinal field
    #[arg(long)]
    pub gz: Option<f64>,
    /// Hamiltonian JSON file for the `file` model
    #[arg(long)]
    pub path: Option<PathBuf>,
    /// `linear` or explicit comma-separated weights w0,w1,...
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub tpoints: Option<usize>,
    #[arg(long, value_enum)]
    pub solver: Option<SolverArg>,
    /// Monte-Carlo sample count
    #[arg(long)]
    pub samples: Option<usize>,
    /// Ridge added to the metric (default: automatic)
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Primary output path (stdout when omitted); trace CSVs go to the
    /// same path with a .csv extension
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker thread cap (results are identical at any setting)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Dump the reduced lattice basis as CSV
    #[arg(long)]
    pub dump_basis: Option<PathBuf>,
}

/// Load the config file (if any) and fold the flag overrides into it.
pub fn resolve_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(model) = args.model {
        cfg.model.family = match model {
            ModelArg::Gue => ModelFamily::Gue,
            ModelArg::Goe => ModelFamily::Goe,
            ModelArg::Ising => ModelFamily::Ising,
            ModelArg::File => ModelFamily::File,
        };
    }
    if let Some(dim) = args.dim {
        cfg.model.dim = Some(dim);
    }
    if let Some(seed) = args.seed {
        cfg.model.seed = seed;
    }
    if let Some(sites) = args.sites {
        cfg.model.sites = Some(sites);
    }
    if let Some(gx) = args.gx {
        cfg.model.gx = gx;
    }
    if let Some(gz) = args.gz {
        cfg.model.gz = gz;
    }
    if let Some(path) = &args.path {
        cfg.model.path = Some(path.clone());
    }
    if let Some(weights) = &args.weights {
        cfg.weights = parse_weights_arg(weights)?;
    }
    if let Some(tmax) = args.tmax {
        if !(tmax > 0.0) {
            return Err(Error::Config(format!("--tmax must be positive, got {tmax}")));
        }
        cfg.time_grid.tmax = Some(tmax);
    }
    if let Some(points) = args.tpoints {
        if points < 1 {
            return Err(Error::Config("--tpoints must be at least 1".into()));
        }
        cfg.time_grid.points = points;
    }
    if let Some(solver) = args.solver {
        cfg.solver.method = Some(match solver {
            SolverArg::Exact => CvpMethod::Exact,
            SolverArg::Babai => CvpMethod::Babai,
        });
    }
    if let Some(samples) = args.samples {
        cfg.mc.samples = Some(samples);
    }
    if let Some(ridge) = args.ridge {
        if !(ridge >= 0.0) {
            return Err(Error::Config(format!("--ridge must be nonnegative, got {ridge}")));
        }
        cfg.solver.ridge = Some(ridge);
    }
    if let Some(out) = &args.out {
        cfg.output.report = Some(out.clone());
    }
    if let Some(threads) = args.threads {
        if threads == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        cfg.threads = Some(threads);
    }
    if let Some(dump) = &args.dump_basis {
        cfg.dump_basis = Some(dump.clone());
    }
    Ok(cfg)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, text)?;
            Ok(())
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn trace_to_string(trace: &ComplexityTrace) -> Result<String> {
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Config(format!("non-utf8 csv: {e}")))
}

fn json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Sorted spectrum as `n,E_n` rows.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<()> {
    let h = cfg.build_model()?;
    let spec = diagonalize(&h)?;
    let mut out = String::from("n,E_n\n");
    for (n, e) in spec.energies().iter().enumerate() {
        out.push_str(&format!("{n},{e:.16e}\n"));
    }
    write_text(cfg.output.report.as_deref(), &out)
}

#[derive(Serialize)]
struct KrylovReport {
    kdim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    ck_bar: f64,
    trace_q: f64,
}

/// Lanczos coefficients, analytic average, and the C_K(t) trace.
pub fn cmd_krylov(cfg: &RunConfig) -> Result<()> {
    let h = cfg.build_model()?;
    let spec = diagonalize(&h)?;
    let v0 = cfg.build_seed_state(h.dim())?;
    let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL)?;
    if kb.kdim() == 1 {
        eprintln!(
            "warning: Krylov dimension K=1 (seed is an eigenstate); C_K(t) is constant"
        );
    }
    let ws = cfg.weight_schedule(h.dim())?;
    let seed_overlaps = kb.seed_overlaps();
    let ck_bar = time_averaged_ck(&spec, &kb, &seed_overlaps, &ws)?;
    let trace_q = q_matrix(&spec, &kb, &seed_overlaps, &ws)?.trace();

    let grid =
        crate::correspondence::default_time_grid(&spec, cfg.time_grid.points, cfg.time_grid.tmax);
    let trace =
        crate::krylov::krylov_complexity_trace(&spec, &kb, &seed_overlaps, &ws, &grid)?;

    let report = KrylovReport {
        kdim: kb.kdim(),
        a: kb.a().to_vec(),
        b: kb.b().to_vec(),
        ck_bar,
        trace_q,
    };
    write_text(cfg.output.report.as_deref(), &json_line(&report)?)?;
    match cfg.trace_path() {
        Some(path) => write_text(Some(&path), &trace_to_string(&trace)?)?,
        None => write_text(None, &trace_to_string(&trace)?)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct PlateauReport {
    dim: usize,
    mean: f64,
    stderr: f64,
    n_samples: usize,
    solver: CvpMethod,
    ridge_epsilon: f64,
    rng_seed: u64,
}

/// Shared setup for the nielsen/plateau commands: the Krylov-schedule
/// metric and a solver with the ridge pinned.
fn krylov_metric(
    cfg: &RunConfig,
) -> Result<(
    crate::models::SpectralDecomposition,
    crate::nielsen::MetricMatrix,
    SolverOptions,
)> {
    let h = cfg.build_model()?;
    let spec = diagonalize(&h)?;
    let v0 = cfg.build_seed_state(h.dim())?;
    let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL)?;
    let ws = cfg.weight_schedule(h.dim())?;
    let seed_overlaps = kb.seed_overlaps();
    let q = q_matrix(&spec, &kb, &seed_overlaps, &ws)?;
    let mut opts = cfg.solver_options(h.dim());
    opts.ridge = Some(opts.ridge.unwrap_or_else(|| auto_ridge(&q)));
    Ok((spec, q, opts))
}

fn dump_basis_if_requested(
    cfg: &RunConfig,
    q: &crate::nielsen::MetricMatrix,
    opts: &SolverOptions,
) -> Result<()> {
    if let Some(path) = &cfg.dump_basis {
        let lb = reduced_basis_for(q, opts)?;
        let mut buf = Vec::new();
        lb.write_csv(&mut buf)?;
        std::fs::write(path, buf)?;
    }
    Ok(())
}

/// C_b(t) trace plus the plateau estimate for the same metric and ridge.
pub fn cmd_nielsen(cfg: &RunConfig) -> Result<()> {
    let (spec, q, opts) = krylov_metric(cfg)?;
    dump_basis_if_requested(cfg, &q, &opts)?;

    let grid =
        crate::correspondence::default_time_grid(&spec, cfg.time_grid.points, cfg.time_grid.tmax);
    let trace = nielsen_bound_trace(&spec, &q, &grid, &opts)?;
    let samples = cfg.mc.samples.unwrap_or_else(|| default_mc_samples(opts.method));
    let plateau = plateau_estimate(&q, samples, cfg.mc.seed, &opts)?;

    let report = PlateauReport {
        dim: q.dim(),
        mean: plateau.mean,
        stderr: plateau.stderr,
        n_samples: plateau.n_samples,
        solver: plateau.solver,
        ridge_epsilon: plateau.ridge_epsilon,
        rng_seed: cfg.mc.seed,
    };

    // Trace rows carry the solver tag so runs with different solvers can
    // be compared row by row.
    let mut csv = String::from("t,value,method\n");
    for (t, v) in trace.times().iter().zip(trace.values()) {
        csv.push_str(&format!("{t:.16e},{v:.16e},{}\n", opts.method));
    }

    write_text(cfg.output.report.as_deref(), &json_line(&report)?)?;
    match cfg.trace_path() {
        Some(path) => write_text(Some(&path), &csv)?,
        None => write_text(None, &csv)?,
    }
    Ok(())
}

/// Plateau estimate alone.
pub fn cmd_plateau(cfg: &RunConfig) -> Result<()> {
    let (_, q, opts) = krylov_metric(cfg)?;
    dump_basis_if_requested(cfg, &q, &opts)?;
    let samples = cfg.mc.samples.unwrap_or_else(|| default_mc_samples(opts.method));
    let plateau = plateau_estimate(&q, samples, cfg.mc.seed, &opts)?;
    let report = PlateauReport {
        dim: q.dim(),
        mean: plateau.mean,
        stderr: plateau.stderr,
        n_samples: plateau.n_samples,
        solver: plateau.solver,
        ridge_epsilon: plateau.ridge_epsilon,
        rng_seed: cfg.mc.seed,
    };
    write_text(cfg.output.report.as_deref(), &json_line(&report)?)
}

/// Full correspondence report; hard-check failures surface as errors
/// (process exit code 2), soft misses as entries in `warnings`.
pub fn cmd_verify(cfg: &RunConfig) -> Result<()> {
    let h = cfg.build_model()?;
    let v0 = cfg.build_seed_state(h.dim())?;
    let ws = cfg.weight_schedule(h.dim())?;
    let solver = cfg.solver_options(h.dim());
    let samples = cfg
        .mc
        .samples
        .unwrap_or_else(|| default_mc_samples(solver.method));
    let params = ReportParams {
        solver,
        mc_samples: samples,
        mc_seed: cfg.mc.seed,
        grid_points: cfg.time_grid.points,
        t_max: cfg.time_grid.tmax,
        breakdown_tol: DEFAULT_BREAKDOWN_TOL,
    };
    let report = full_report(&h, &v0, &ws, &params)?;
    write_text(cfg.output.report.as_deref(), &json_line(&report)?)
}

fn dispatch(command: &Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Spectrum(_) => cmd_spectrum(cfg),
        Command::Krylov(_) => cmd_krylov(cfg),
        Command::Nielsen(_) => cmd_nielsen(cfg),
        Command::Plateau(_) => cmd_plateau(cfg),
        Command::Verify(_) => cmd_verify(cfg),
    }
}

/// Entry point used by the binary: resolve the config, then run the
/// command inside a scoped thread pool when a worker cap was given.
pub fn run(cli: &Cli) -> Result<()> {
    let args = match &cli.command {
        Command::Spectrum(a)
        | Command::Krylov(a)
        | Command::Nielsen(a)
        | Command::Plateau(a)
        | Command::Verify(a) => a,
    };
    let cfg = resolve_config(args)?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?
            .install(|| dispatch(&cli.command, &cfg)),
        None => dispatch(&cli.command, &cfg),
    }
}
