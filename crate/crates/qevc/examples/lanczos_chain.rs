//! Lanczos tridiagonalization: the Krylov chain behind spread complexity.
//!
//! Run with: cargo run --release --example lanczos_chain

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qevc::krylov::{lanczos, DEFAULT_BREAKDOWN_TOL};
use qevc::models::{build_random_hermitian, diagonalize, Ensemble};

fn main() -> qevc::Result<()> {
    let dim = 16;
    let h = build_random_hermitian(dim, Ensemble::ComplexHermitian, 7)?;

    let mut v0 = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    v0[0] = Complex64::new(1.0, 0.0);

    let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL)?;
    println!("Krylov dimension K = {} (D = {dim})", kb.kdim());
    println!("\n  j      a_j          b_j");
    for j in 0..kb.kdim() {
        println!("{:>3}   {:+.6}    {:.6}", j, kb.a()[j], kb.b()[j]);
    }

    // The basis is orthonormal and H is tridiagonal in it; both facts are
    // worth seeing in numbers.
    let gram = kb.basis().adjoint() * kb.basis();
    let ortho = (gram - DMatrix::identity(kb.kdim(), kb.kdim()))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let t = kb.basis().adjoint() * h.entries() * kb.basis();
    let mut off_tri = 0.0f64;
    for r in 0..kb.kdim() {
        for c in 0..kb.kdim() {
            if r.abs_diff(c) > 1 {
                off_tri = off_tri.max(t[(r, c)].norm());
            }
        }
    }
    println!("\northonormality residual: {ortho:.3e}");
    println!("off-tridiagonal residual: {off_tri:.3e}");

    // Seeding with an eigenstate stops the recursion immediately.
    let spec = diagonalize(&h)?;
    let ground = spec.eigenvectors().column(0).clone_owned();
    let kb1 = lanczos(&h, &ground, DEFAULT_BREAKDOWN_TOL)?;
    println!("\neigenstate seed terminates at K = {}", kb1.kdim());
    Ok(())
}
