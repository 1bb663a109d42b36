//! Spread complexity C_K(t) of a spin-chain quench, with its exact
//! all-time average and the long-time numerical cross-check.
//!
//! Run with: cargo run --release --example spread_complexity

use nalgebra::DVector;
use num_complex::Complex64;
use qevc::krylov::{
    krylov_complexity_trace, lanczos, numerical_time_average, time_averaged_ck, WeightSchedule,
    DEFAULT_BREAKDOWN_TOL,
};
use qevc::models::{build_spin_chain, diagonalize, Boundary};

fn main() -> qevc::Result<()> {
    let h = build_spin_chain(3, 0.9, 0.4, Boundary::Open)?;
    let spec = diagonalize(&h)?;

    // Seed: single spin flipped on site 0.
    let mut v0 = DVector::from_element(8, Complex64::new(0.0, 0.0));
    v0[1] = Complex64::new(1.0, 0.0);

    let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL)?;
    let ws = WeightSchedule::linear(kb.kdim());
    let overlaps = spec.overlaps_of(&v0)?;

    let grid: Vec<f64> = (0..=60).map(|i| 0.25 * i as f64).collect();
    let trace = krylov_complexity_trace(&spec, &kb, &overlaps, &ws, &grid)?;

    println!("C_K(t) for the n=3 chain, single-flip seed (K = {}):\n", kb.kdim());
    for (t, v) in trace.times().iter().zip(trace.values()) {
        let bar = "#".repeat((v * 12.0).round() as usize);
        println!("t = {t:5.2}  C_K = {v:.4}  {bar}");
    }

    let exact = time_averaged_ck(&spec, &kb, &overlaps, &ws)?;
    let t_long = 200.0 / spec.min_gap();
    let step = std::f64::consts::PI / (4.0 * spec.max_abs_energy());
    let numeric = numerical_time_average(&spec, &kb, &overlaps, &ws, t_long, step)?;
    println!("\nanalytic all-time average: {exact:.12}");
    println!("trapezoid average to T = {t_long:.1}: {numeric:.12}");
    println!("relative difference: {:.3e}", (numeric - exact).abs() / exact);
    Ok(())
}
