//! The lattice stack on its own: PSD factorization, LLL reduction, Babai
//! rounding, exact enumeration, and the brute-force cross-check.
//!
//! Run with: cargo run --release --example cvp_solvers

use nalgebra::{DMatrix, DVector};
use qevc::lattice::{
    babai_nearest_plane, cvp_bruteforce, cvp_enumerate, lll_reduce, psd_factor, DEFAULT_LLL_DELTA,
};
use qevc::nielsen::MetricMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> qevc::Result<()> {
    let dim = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    let mut gram = a.transpose() * &a;
    let shift = gram.trace() / dim as f64;
    for i in 0..dim {
        gram[(i, i)] += 0.3 * shift;
    }
    let q = MetricMatrix::new(gram)?;

    let factor = psd_factor(&q, 0.0)?;
    let reduced = lll_reduce(&factor, DEFAULT_LLL_DELTA)?;
    println!("input condition estimate: {:.3e}", reduced.condition());
    println!("unimodular transform:\n{}", reduced.transform());

    let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let target = {
        let xv = DVector::from_column_slice(&x);
        (&factor * xv).as_slice().to_vec()
    };

    let approx = babai_nearest_plane(&reduced, &target)?;
    let exact = cvp_enumerate(&reduced, &target, -1.0)?;
    let brute = cvp_bruteforce(&q, &x, 4)?;

    println!("\ntarget (form coordinates): {x:?}");
    println!("babai:      k = {:?}, distance {:.9}", approx.k, approx.distance);
    println!("enumerate:  k = {:?}, distance {:.9}", exact.k, exact.distance);
    println!("bruteforce: k = {:?}, distance {:.9}", brute.k, brute.distance);
    println!("\nbabai >= exact always; enumerate and bruteforce agree to rounding.");
    Ok(())
}
