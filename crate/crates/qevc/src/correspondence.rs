//! End-to-end verification that the spread-complexity average and the
//! Nielsen-bound metric are two faces of the same q-matrix.
//!
//! Two exact identities are checked on every run:
//!
//! 1. trace(q) equals the analytic all-time average of C_K (to 1e-12
//!    relative), and
//! 2. the penalty metric assembled from the Krylov generator table equals
//!    q entrywise (to 1e-10 of its trace scale).
//!
//! A third, heuristic comparison - the late-time median of C_b(t) against
//! the Monte-Carlo plateau estimate - is reported as a warning when it
//! misses its 15% band, never as a failure.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{
    lanczos, numerical_time_average, q_matrix, time_averaged_ck, KrylovBasis, WeightSchedule,
    DEFAULT_BREAKDOWN_TOL,
};
use crate::models::{diagonalize, HermitianOperator, SpectralDecomposition};
use crate::nielsen::{
    auto_ridge, krylov_generator_basis, krylov_penalty_schedule, metric_from_penalties,
    nielsen_bound_trace, plateau_estimate, PlateauEstimate, SolverOptions,
};
use crate::numeric::median;

/// Relative tolerance for trace(q) vs the analytic average.
pub const TRACE_IDENTITY_RTOL: f64 = 1e-12;

/// Scale factor for the metric-vs-q entrywise comparison:
/// max|Q - q| <= Q_VS_METRIC_SCALE * (1 + trace q).
pub const Q_VS_METRIC_SCALE: f64 = 1e-10;

/// Soft relative band for the plateau-vs-trace comparison.
pub const PLATEAU_SOFT_RTOL: f64 = 0.15;

/// Tolerances frozen into a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToleranceSet {
    pub trace_identity_rel: f64,
    pub q_vs_metric_scale: f64,
    pub plateau_soft_rel: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self {
            trace_identity_rel: TRACE_IDENTITY_RTOL,
            q_vs_metric_scale: Q_VS_METRIC_SCALE,
            plateau_soft_rel: PLATEAU_SOFT_RTOL,
        }
    }
}

/// Result of the two-route trace comparison.
#[derive(Debug, Clone, Copy)]
pub struct TraceIdentity {
    pub trace_q: f64,
    pub ck_bar: f64,
    pub relative_difference: f64,
}

/// Machine-readable summary of one full verification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrespondenceReport {
    pub dim: usize,
    pub kdim: usize,
    pub ck_bar_analytic: f64,
    pub ck_bar_numeric: f64,
    pub trace_q: f64,
    #[serde(rename = "max_q_vs_Q_diff")]
    pub max_q_vs_metric_diff: f64,
    pub cp_estimate: PlateauEstimate,
    pub cb_plateau_median: f64,
    pub ridge_epsilon: f64,
    pub tolerances: ToleranceSet,
    pub warnings: Vec<String>,
}

/// Build the metric two ways - the generic penalty sum over the Krylov
/// generator table, and the direct q-matrix formula - and compare them
/// entrywise. Errors if the difference exceeds its tolerance; the spectrum
/// must be nondegenerate.
pub fn verify_q_equals_metric(
    spec: &SpectralDecomposition,
    kb: &KrylovBasis,
    ws: &WeightSchedule,
) -> Result<f64> {
    let gens = krylov_generator_basis(kb);
    let ps = krylov_penalty_schedule(ws, kb.kdim())?;
    let via_metric = metric_from_penalties(spec, &gens, &ps)?;
    let seed = kb.seed_overlaps();
    let direct = q_matrix(spec, kb, &seed, ws)?;

    let max_diff = (via_metric.entries() - direct.entries())
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    let bound = Q_VS_METRIC_SCALE * (1.0 + direct.trace());
    if max_diff > bound {
        return Err(Error::NumericalFailure(format!(
            "schedule identity failed: max|Q - q| = {max_diff:.3e} exceeds {bound:.3e}"
        )));
    }
    Ok(max_diff)
}

/// Compare trace(q) against the analytic all-time average of C_K.
/// Errors beyond 1e-12 relative; the spectrum must be nondegenerate.
pub fn verify_trace_identity(
    spec: &SpectralDecomposition,
    kb: &KrylovBasis,
    ws: &WeightSchedule,
) -> Result<TraceIdentity> {
    let seed = kb.seed_overlaps();
    let ck_bar = time_averaged_ck(spec, kb, &seed, ws)?;
    let trace_q = q_matrix(spec, kb, &seed, ws)?.trace();
    let denom = ck_bar.abs().max(trace_q.abs());
    let relative_difference = if denom == 0.0 {
        0.0
    } else {
        (trace_q - ck_bar).abs() / denom
    };
    if relative_difference > TRACE_IDENTITY_RTOL {
        return Err(Error::NumericalFailure(format!(
            "trace identity failed: trace q = {trace_q:.17e}, average = {ck_bar:.17e}, \
             relative difference {relative_difference:.3e}"
        )));
    }
    Ok(TraceIdentity {
        trace_q,
        ck_bar,
        relative_difference,
    })
}

/// Geometric-then-linear grid over [0, t_max]: roughly half the points
/// resolve the initial growth on a log scale, the rest cover the plateau.
/// Always returns exactly `points` strictly increasing times starting at 0;
/// the default span is 50 D / spectral-range.
pub fn default_time_grid(spec: &SpectralDecomposition, points: usize, t_max: Option<f64>) -> Vec<f64> {
    let points = points.max(1);
    let range = spec.spectral_range();
    let scale = if range > 0.0 {
        range
    } else {
        spec.max_abs_energy().max(1.0)
    };
    let t_max = t_max.unwrap_or(50.0 * spec.dim() as f64 / scale);

    if points == 1 {
        return vec![0.0];
    }
    if points == 2 {
        return vec![0.0, t_max];
    }

    let t_lo = t_max * 1e-3;
    let t_mid = t_max / 4.0;
    let n_geo = (points - 1) / 2;
    let n_lin = points - 1 - n_geo;

    let mut grid = Vec::with_capacity(points);
    grid.push(0.0);
    for i in 0..n_geo {
        // Log-spaced over [t_lo, t_mid], inclusive of both ends.
        let frac = if n_geo == 1 {
            1.0
        } else {
            i as f64 / (n_geo - 1) as f64
        };
        grid.push(t_lo * (t_mid / t_lo).powf(frac));
    }
    let last_geo = *grid.last().expect("nonempty");
    let step = (t_max - last_geo) / n_lin as f64;
    for j in 1..=n_lin {
        grid.push(last_geo + step * j as f64);
    }
    grid
}

/// Inputs for a full verification run.
#[derive(Debug, Clone)]
pub struct ReportParams {
    pub solver: SolverOptions,
    pub mc_samples: usize,
    pub mc_seed: u64,
    pub grid_points: usize,
    pub t_max: Option<f64>,
    pub breakdown_tol: f64,
}

impl Default for ReportParams {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            mc_samples: 10_000,
            mc_seed: 0,
            grid_points: 256,
            t_max: None,
            breakdown_tol: DEFAULT_BREAKDOWN_TOL,
        }
    }
}

fn stage<T>(name: &str, result: Result<T>) -> Result<T> {
    result.map_err(|e| match e {
        Error::NumericalFailure(msg) => Error::NumericalFailure(format!("{name}: {msg}")),
        Error::DegenerateSpectrum(msg) => Error::DegenerateSpectrum(format!("{name}: {msg}")),
        Error::InvalidInput(msg) => Error::InvalidInput(format!("{name}: {msg}")),
        other => other,
    })
}

/// Run every verification leg for one Hamiltonian and seed state and
/// assemble the report.
///
/// The C_K cross-check, the C_b trace, and the plateau Monte Carlo are
/// independent and run in parallel; each leg is deterministic for fixed
/// seeds, so the report is reproducible at any thread count. The ridge is
/// resolved once from q and shared by the C_b and C_p legs.
pub fn full_report(
    h: &HermitianOperator,
    v0: &DVector<Complex64>,
    ws: &WeightSchedule,
    params: &ReportParams,
) -> Result<CorrespondenceReport> {
    let spec = stage("diagonalize", diagonalize(h))?;
    let kb = stage("lanczos", lanczos(h, v0, params.breakdown_tol))?;
    let seed = kb.seed_overlaps();

    let identity = stage("trace-identity", verify_trace_identity(&spec, &kb, ws))?;
    let max_diff = stage("schedule-identity", verify_q_equals_metric(&spec, &kb, ws))?;
    let q = stage("q-matrix", q_matrix(&spec, &kb, &seed, ws))?;

    let ridge = params.solver.ridge.unwrap_or_else(|| auto_ridge(&q));
    let solver = SolverOptions {
        ridge: Some(ridge),
        ..params.solver.clone()
    };
    let grid = default_time_grid(&spec, params.grid_points, params.t_max);

    // Long-T cross-check parameters; a one-level system has no phase to
    // resolve, so any finite window works there.
    let t_avg = if spec.min_gap().is_finite() {
        200.0 / spec.min_gap()
    } else {
        1.0
    };
    let step = std::f64::consts::PI / (4.0 * spec.max_abs_energy().max(1e-3));

    let (numeric_leg, (trace_leg, plateau_leg)) = rayon::join(
        || {
            stage(
                "ergodic-average",
                numerical_time_average(&spec, &kb, &seed, ws, t_avg, step),
            )
        },
        || {
            rayon::join(
                || stage("bound-trace", nielsen_bound_trace(&spec, &q, &grid, &solver)),
                || {
                    stage(
                        "plateau",
                        plateau_estimate(&q, params.mc_samples, params.mc_seed, &solver),
                    )
                },
            )
        },
    );
    let ck_bar_numeric = numeric_leg?;
    let trace = trace_leg?;
    let cp = plateau_leg?;

    let tail_start = trace.len() - trace.len() / 3;
    let cb_plateau_median = median(&trace.values()[tail_start..]);

    let mut warnings = Vec::new();
    if cp.mean > 0.0 {
        let rel = (cb_plateau_median - cp.mean).abs() / cp.mean;
        if rel > PLATEAU_SOFT_RTOL {
            warnings.push(format!(
                "late-time C_b median {cb_plateau_median:.6e} deviates {:.1}% from the \
                 Monte-Carlo plateau estimate {:.6e} (soft band {:.0}%)",
                100.0 * rel,
                cp.mean,
                100.0 * PLATEAU_SOFT_RTOL
            ));
        }
    } else if cb_plateau_median > 0.0 {
        warnings.push("plateau estimate is zero but the C_b tail is not".into());
    }

    Ok(CorrespondenceReport {
        dim: spec.dim(),
        kdim: kb.kdim(),
        ck_bar_analytic: identity.ck_bar,
        ck_bar_numeric,
        trace_q: identity.trace_q,
        max_q_vs_metric_diff: max_diff,
        cp_estimate: cp,
        cb_plateau_median,
        ridge_epsilon: ridge,
        tolerances: ToleranceSet::default(),
        warnings,
    })
}
