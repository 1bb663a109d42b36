//! Build Hamiltonians from the model menu and inspect their spectra.
//!
//! Run with: cargo run --release --example spectrum

use qevc::models::{
    build_random_hermitian, build_spin_chain, check_nondegenerate, diagonalize, Boundary, Ensemble,
};

fn main() -> qevc::Result<()> {
    // A small unitary-ensemble draw. The seed pins the matrix exactly.
    let gue = build_random_hermitian(8, Ensemble::ComplexHermitian, 42)?;
    let spec = diagonalize(&gue)?;
    println!("GUE D=8, seed 42");
    for (n, e) in spec.energies().iter().enumerate() {
        println!("  E_{n} = {e:+.6}");
    }
    println!("  spectral range {:.6}, min gap {:.6}", spec.spectral_range(), spec.min_gap());

    // A kicked Ising chain: chaotic for generic fields, and its spectrum
    // shows it (no small gaps at this size).
    let ising = build_spin_chain(3, 0.9, 0.4, Boundary::Open)?;
    let ispec = diagonalize(&ising)?;
    println!("\nIsing n=3 (gx=0.9, gz=0.4), D=8");
    for (n, e) in ispec.energies().iter().enumerate() {
        println!("  E_{n} = {e:+.6}");
    }
    let near = check_nondegenerate(&ispec, ispec.default_gap_tol());
    println!("  near-degenerate pairs at default tolerance: {near:?}");

    // The integrable point is heavily degenerate; downstream averages
    // refuse to run on it.
    let integrable = build_spin_chain(2, 0.0, 0.0, Boundary::Open)?;
    let dspec = diagonalize(&integrable)?;
    let pairs = check_nondegenerate(&dspec, dspec.default_gap_tol());
    println!("\nIsing n=2 at gx=gz=0: degenerate pairs {pairs:?}");
    Ok(())
}
