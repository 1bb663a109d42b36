//! The Nielsen complexity bound C_b(t) under the Krylov-schedule metric:
//! early growth, late-time plateau, and the Monte-Carlo plateau estimate.
//!
//! Run with: cargo run --release --example nielsen_bound

use nalgebra::DVector;
use num_complex::Complex64;
use qevc::correspondence::default_time_grid;
use qevc::krylov::{lanczos, q_matrix, WeightSchedule, DEFAULT_BREAKDOWN_TOL};
use qevc::models::{build_random_hermitian, diagonalize, Ensemble};
use qevc::nielsen::{auto_ridge, nielsen_bound_trace, plateau_estimate, SolverOptions};

fn main() -> qevc::Result<()> {
    let dim = 8;
    let h = build_random_hermitian(dim, Ensemble::ComplexHermitian, 12)?;
    let spec = diagonalize(&h)?;
    let mut v0 = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    v0[0] = Complex64::new(1.0, 0.0);
    let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL)?;
    let ws = WeightSchedule::linear(kb.kdim());
    let overlaps = spec.overlaps_of(&v0)?;
    let q = q_matrix(&spec, &kb, &overlaps, &ws)?;

    // The Krylov schedule leaves the all-ones direction free, so the metric
    // is singular; the solver works on q + ridge*I and reports the ridge.
    let opts = SolverOptions {
        ridge: Some(auto_ridge(&q)),
        ..SolverOptions::default()
    };
    println!("metric trace {:.6}, ridge {:.3e}", q.trace(), opts.ridge.unwrap());

    let grid = default_time_grid(&spec, 96, None);
    let trace = nielsen_bound_trace(&spec, &q, &grid, &opts)?;
    println!("\nC_b(t):");
    for (t, v) in trace.times().iter().zip(trace.values()).step_by(6) {
        let bar = "#".repeat((v * 8.0).round() as usize);
        println!("t = {t:7.2}  C_b = {v:.4}  {bar}");
    }

    let tail = &trace.values()[trace.len() - trace.len() / 3..];
    let mut sorted = tail.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];

    let plateau = plateau_estimate(&q, 10_000, 1, &opts)?;
    println!("\nlate-time median of C_b: {median:.6}");
    println!(
        "Monte-Carlo plateau estimate: {:.6} +- {:.6} ({} samples, {} solver)",
        plateau.mean, plateau.stderr, plateau.n_samples, plateau.solver
    );
    Ok(())
}
