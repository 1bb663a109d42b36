//! One-shot verification report: both exact identities plus the soft
//! plateau comparison, as the `qevc verify` subcommand emits it.
//!
//! Run with: cargo run --release --example correspondence

use nalgebra::DVector;
use num_complex::Complex64;
use qevc::correspondence::{full_report, ReportParams};
use qevc::krylov::WeightSchedule;
use qevc::models::{build_random_hermitian, Ensemble};

fn main() -> qevc::Result<()> {
    let dim = 8;
    let h = build_random_hermitian(dim, Ensemble::ComplexHermitian, 3)?;
    let mut v0 = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    v0[0] = Complex64::new(1.0, 0.0);
    let ws = WeightSchedule::linear(dim);

    let params = ReportParams {
        mc_samples: 10_000,
        mc_seed: 5,
        grid_points: 128,
        ..ReportParams::default()
    };
    let report = full_report(&h, &v0, &ws, &params)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable report"));

    if report.warnings.is_empty() {
        println!("\nall checks passed; soft plateau comparison within its band.");
    } else {
        println!("\nsoft-check warnings:");
        for w in &report.warnings {
            println!("  {w}");
        }
    }
    Ok(())
}
