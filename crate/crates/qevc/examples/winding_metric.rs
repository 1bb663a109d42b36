//! Constant-velocity curves to exp(-iHt): every integer winding vector
//! gives one, and its metric length reduces to a lattice quadratic form.
//!
//! Run with: cargo run --release --example winding_metric

use qevc::models::{build_random_hermitian, diagonalize, Ensemble};
use qevc::nielsen::{
    metric_from_penalties, metric_speed, velocity_from_winding, GeneratorBasis, PenaltySchedule,
};

fn main() -> qevc::Result<()> {
    let dim = 4;
    let h = build_random_hermitian(dim, Ensemble::ComplexHermitian, 23)?;
    let spec = diagonalize(&h)?;

    let gens = GeneratorBasis::matrix_units_in_eigenbasis(&spec);
    let mus: Vec<f64> = (0..gens.len()).map(|i| 0.2 + 0.1 * (i % 7) as f64).collect();
    let ps = PenaltySchedule::new(mus)?;
    let q = metric_from_penalties(&spec, &gens, &ps)?;

    let t = 2.5;
    println!("curve length t * speed vs lattice form 2 pi sqrt(y^T Q y), t = {t}:\n");
    println!("  winding k          t*speed       2pi*sqrt(yQy)");
    for k in [[0i64, 0, 0, 0], [1, 0, 0, 0], [0, -1, 2, 0], [3, 1, -2, 2]] {
        let v = velocity_from_winding(&spec, &k, t)?;
        let speed = metric_speed(&v, &gens, &ps)?;
        let y: Vec<f64> = (0..dim)
            .map(|n| spec.energies()[n] * t / std::f64::consts::TAU - k[n] as f64)
            .collect();
        let form = std::f64::consts::TAU * q.quadratic_form(&y).sqrt();
        println!("  {k:?}    {:>12.8}  {:>12.8}", t * speed, form);
    }
    println!("\nidentical columns: minimizing curve length over windings is a");
    println!("closest-vector problem for the metric Q.");
    Ok(())
}
