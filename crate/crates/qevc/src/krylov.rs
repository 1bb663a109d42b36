//! Lanczos construction of the Krylov basis and spread complexity.
//!
//! The evolution of a seed state |v0> under a Hamiltonian H is recast as a
//! nearest-neighbor hopping problem on the Krylov chain: H is tridiagonal
//! in the orthonormal basis generated by Gram-Schmidt on {H^j |v0>}. Spread
//! complexity C_K(t) is the weighted mean chain position of the evolved
//! wavefunction; for nondegenerate spectra its all-time average has a
//! closed form, which is also the trace of the q-matrix built here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::Write;

use crate::error::{Error, Result};
use crate::models::{check_nondegenerate, diagonalize, HermitianOperator, SpectralDecomposition};
use crate::nielsen::MetricMatrix;
use crate::numeric::kahan_sum;

/// Default breakdown tolerance (relative to max|E|) for declaring b_j = 0.
pub const DEFAULT_BREAKDOWN_TOL: f64 = 1e-10;

/// Orthogonality loss beyond this bound after reorthogonalization is an error.
const ORTHOGONALITY_FAIL: f64 = 1e-8;

/// Nondecreasing, nonnegative site weights w_0 <= w_1 <= ...
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSchedule {
    weights: Vec<f64>,
}

impl WeightSchedule {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("weight schedule is empty".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput(
                "weights must be finite and nonnegative".into(),
            ));
        }
        if weights.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("weights must be nondecreasing".into()));
        }
        Ok(Self { weights })
    }

    /// The common choice w_j = j, so C_K is literally the mean chain position.
    pub fn linear(len: usize) -> Self {
        Self {
            weights: (0..len).map(|j| j as f64).collect(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// First `k` weights, erroring when the schedule is too short.
    pub fn first(&self, k: usize) -> Result<&[f64]> {
        if self.weights.len() < k {
            return Err(Error::InvalidInput(format!(
                "weight schedule has {} entries, need {k}",
                self.weights.len()
            )));
        }
        Ok(&self.weights[..k])
    }
}

/// Orthonormal Krylov basis with Lanczos coefficients and eigenbasis overlaps.
#[derive(Debug, Clone)]
pub struct KrylovBasis {
    kdim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    basis: DMatrix<Complex64>,
    overlaps: DMatrix<Complex64>,
}

impl KrylovBasis {
    /// Krylov subspace dimension K <= D.
    pub fn kdim(&self) -> usize {
        self.kdim
    }

    /// Diagonal Lanczos coefficients a_0..a_{K-1}.
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Off-diagonal Lanczos coefficients; b[0] = 0 by convention, b[j] links
    /// sites j-1 and j.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// D x K matrix whose column j is |v_j>.
    pub fn basis(&self) -> &DMatrix<Complex64> {
        &self.basis
    }

    /// K x D overlap matrix S with S[j, n] = <v_j|n>.
    pub fn overlaps(&self) -> &DMatrix<Complex64> {
        &self.overlaps
    }

    /// Overlaps <n|v0> of the seed with the eigenbasis, i.e. the conjugate
    /// of the first row of S.
    pub fn seed_overlaps(&self) -> DVector<Complex64> {
        DVector::from_iterator(
            self.overlaps.ncols(),
            self.overlaps.row(0).iter().map(|z| z.conj()),
        )
    }
}

/// Time series carrier for C_K(t) or C_b(t).
#[derive(Debug, Clone)]
pub struct ComplexityTrace {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl ComplexityTrace {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "trace lengths differ: {} times vs {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("times must be strictly increasing".into()));
        }
        if times.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("trace contains non-finite entries".into()));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with header `t,value` and 17-significant-digit floats.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,value")?;
        for (t, v) in self.times.iter().zip(self.values.iter()) {
            writeln!(out, "{t:.16e},{v:.16e}")?;
        }
        Ok(())
    }
}

/// Check that the grid is usable as trace support.
fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("time grid is empty".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("time grid has non-finite entries".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Lanczos tridiagonalization seeded at |v0>, with two full
/// reorthogonalization passes per step.
///
/// Terminates when the next off-diagonal coefficient drops below
/// `breakdown_tol * max|E|`, which signals an invariant subspace; the
/// returned basis then has K < D columns. The eigensystem of `h` is
/// computed internally to populate the overlap matrix S = B†U, with the
/// same deterministic phase convention as [`diagonalize`].
pub fn lanczos(
    h: &HermitianOperator,
    v0: &DVector<Complex64>,
    breakdown_tol: f64,
) -> Result<KrylovBasis> {
    let dim = h.dim();
    if v0.len() != dim {
        return Err(Error::InvalidInput(format!(
            "seed length {} does not match dimension {dim}",
            v0.len()
        )));
    }
    let norm = v0.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "seed vector must be normalized: ||v0|| = {norm:.17}"
        )));
    }
    if !breakdown_tol.is_finite() || breakdown_tol <= 0.0 {
        return Err(Error::InvalidInput("breakdown_tol must be positive".into()));
    }

    let spec = diagonalize(h)?;
    let scale = spec.max_abs_energy().max(f64::MIN_POSITIVE);
    let threshold = breakdown_tol * scale;

    let mut columns: Vec<DVector<Complex64>> = Vec::with_capacity(dim);
    let mut a = Vec::with_capacity(dim);
    let mut b = vec![0.0];
    let mut v = v0.clone();

    loop {
        columns.push(v.clone());
        let j = columns.len() - 1;

        let mut w = h.entries() * &v;
        let aj = v.dotc(&w).re;
        a.push(aj);
        w -= v.scale(aj);
        if j > 0 {
            w -= columns[j - 1].scale(b[j]);
        }
        // Two Gram-Schmidt passes against every previous vector; classical
        // Lanczos loses orthogonality in floating point without this.
        for _ in 0..2 {
            for u in &columns {
                let c = u.dotc(&w);
                w -= u * c;
            }
        }

        let beta = w.norm();
        if beta < threshold || columns.len() == dim {
            break;
        }
        b.push(beta);
        v = w.unscale(beta);
    }

    let kdim = columns.len();
    let mut basis = DMatrix::from_element(dim, kdim, Complex64::new(0.0, 0.0));
    for (j, col) in columns.iter().enumerate() {
        basis.set_column(j, col);
    }

    let gram_resid = (basis.adjoint() * &basis - DMatrix::identity(kdim, kdim))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if gram_resid > ORTHOGONALITY_FAIL {
        return Err(Error::NumericalFailure(format!(
            "Krylov basis lost orthogonality: residual {gram_resid:.3e}"
        )));
    }

    let overlaps = basis.adjoint() * spec.eigenvectors();

    Ok(KrylovBasis {
        kdim,
        a,
        b,
        basis,
        overlaps,
    })
}

/// Krylov-basis wavefunction phi_j(t) = sum_n e^{-i E_n t} <v_j|n><n|v0>.
pub fn krylov_wavefunction(
    spec: &SpectralDecomposition,
    kb: &KrylovBasis,
    v0_overlaps: &DVector<Complex64>,
    t: f64,
) -> Result<DVector<Complex64>> {
    let dim = spec.dim();
    if kb.overlaps.ncols() != dim || v0_overlaps.len() != dim {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: spec {dim}, overlaps {}x{}, v0 {}",
            kb.overlaps.nrows(),
            kb.overlaps.ncols(),
            v0_overlaps.len()
        )));
    }
    if !t.is_finite() {
        return Err(Error::InvalidInput("time must be finite".into()));
    }
    let phases = DVector::from_iterator(
        dim,
        spec.energies()
            .iter()
            .zip(v0_overlaps.iter())
            .map(|(&e, &c)| Complex64::from_polar(1.0, -e * t) * c),
    );
    Ok(&kb.overlaps * phases)
}

/// C_K = sum_j w_j |phi_j|^2. Requires the schedule length to equal the
/// wavefunction length.
pub fn krylov_complexity(phi: &DVector<Complex64>, ws: &WeightSchedule) -> Result<f64> {
    if phi.len() != ws.len() {
        return Err(Error::InvalidInput(format!(
            "wavefunction length {} vs weight schedule length {}",
            phi.len(),
            ws.len()
        )));
    }
    Ok(kahan_sum(
        phi.iter()
            .zip(ws.weights().iter())
            .map(|(z, &w)| w * z.norm_sqr()),
    ))
}

/// C_K(t) evaluated pointwise on a strictly increasing grid.
///
/// Points are independent, so the grid is evaluated in parallel; each point
/// is computed exactly as the scalar composition, so results do not depend
/// on the worker count.
pub fn krylov_complexity_trace(
    spec: &SpectralDecomposition,
    kb: &KrylovBasis,
    v0_overlaps: &DVector<Complex64>,
    ws: &WeightSchedule,
    time_grid: &[f64],
) -> Result<ComplexityTrace> {
    validate_grid(time_grid)?;
    let weights = WeightSchedule::new(ws.first(kb.kdim())?.to_vec())?;
    let values: Vec<f64> = time_grid
        .par_iter()
        .map(|&t| {
            let phi = krylov_wavefunction(spec, kb, v0_overlaps, t)?;
            krylov_complexity(&phi, &weights)
        })
        .collect::<Result<Vec<f64>>>()?;
    ComplexityTrace::new(time_grid.to_vec(), values)
}

fn reject_degenerate(spec: &SpectralDecomposition, context: &str) -> Result<()> {
    let pairs = check_nondegenerate(spec, spec.default_gap_tol());
    if !pairs.is_empty() {
        return Err(Error::DegenerateSpectrum(format!(
            "{context} requires a nondegenerate spectrum; near-degenerate pairs {pairs:?} at tolerance {:.3e}",
            spec.default_gap_tol()
        )));
    }
    Ok(())
}

/// Exact all-time average of C_K for a nondegenerate spectrum:
/// sum_{n,j} w_j |<v_j|n>|^2 |<n|v0>|^2.
pub fn time_averaged_ck(
    spec: &SpectralDecomposition,
    kb: &KrylovBasis,
    v0_overlaps: &DVector<Complex64>,
    ws: &WeightSchedule,
) -> Result<f64> {
    reject_degenerate(spec, "time-averaged C_K")?;
    let dim = spec.dim();
    if kb.overlaps.ncols() != dim || v0_overlaps.len() != dim {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let weights = ws.first(kb.kdim())?;
    let probs: Vec<f64> = v0_overlaps.iter().map(|c| c.norm_sqr()).collect();
    Ok(kahan_sum((0..kb.kdim()).flat_map(|j| {
        let s = &kb.overlaps;
        let w = weights[j];
        probs
            .iter()
            .enumerate()
            .map(move |(n, &p)| w * s[(j, n)].norm_sqr() * p)
            .collect::<Vec<f64>>()
    })))
}

/// The q-matrix: q_{nm} = sum_j (w_j/2)(<n|v0><v_j|n><m|v_j><v0|m> + c.c.).
///
/// Equivalently q = sum_j w_j Re(z_j z_j†) with (z_j)_n = <n|v0><v_j|n>,
/// which makes it manifestly real symmetric PSD, and its trace equal to the
/// all-time average of C_K.
pub fn q_matrix(
    spec: &SpectralDecomposition,
    kb: &KrylovBasis,
    v0_overlaps: &DVector<Complex64>,
    ws: &WeightSchedule,
) -> Result<MetricMatrix> {
    reject_degenerate(spec, "q-matrix")?;
    let dim = spec.dim();
    if kb.overlaps.ncols() != dim || v0_overlaps.len() != dim {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let weights = ws.first(kb.kdim())?;
    let mut q = DMatrix::<f64>::zeros(dim, dim);
    let mut z = vec![Complex64::new(0.0, 0.0); dim];
    for (j, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for n in 0..dim {
            // <v_j|n> = S[j, n], <n|v0> = v0_overlaps[n]
            z[n] = v0_overlaps[n] * kb.overlaps[(j, n)];
        }
        for n in 0..dim {
            for m in n..dim {
                let term = w * (z[n] * z[m].conj()).re;
                q[(n, m)] += term;
                if m != n {
                    q[(m, n)] += term;
                }
            }
        }
    }
    MetricMatrix::new(q)
}

/// Trapezoid average of C_K(t) over [0, t_max] with the given step bound.
///
/// Used as the numerical cross-check of [`time_averaged_ck`]: the finite-T
/// average converges to the analytic value with O(1/T) error.
pub fn numerical_time_average(
    spec: &SpectralDecomposition,
    kb: &KrylovBasis,
    v0_overlaps: &DVector<Complex64>,
    ws: &WeightSchedule,
    t_max: f64,
    max_step: f64,
) -> Result<f64> {
    if !(t_max > 0.0) || !(max_step > 0.0) {
        return Err(Error::InvalidInput("t_max and max_step must be positive".into()));
    }
    let n_steps = (t_max / max_step).ceil() as usize;
    let n_points = n_steps + 1;
    let dt = t_max / n_steps as f64;
    let grid: Vec<f64> = (0..n_points).map(|k| k as f64 * dt).collect();
    let trace = krylov_complexity_trace(spec, kb, v0_overlaps, ws, &grid)?;
    let vals = trace.values();
    let inner = kahan_sum(vals[1..n_points - 1].iter().copied());
    let integral = dt * (inner + 0.5 * (vals[0] + vals[n_points - 1]));
    Ok(integral / t_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_random_hermitian, build_spin_chain, Boundary, Ensemble};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli_x() -> HermitianOperator {
        HermitianOperator::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ))
        .unwrap()
    }

    fn basis_vector(dim: usize, idx: usize) -> DVector<Complex64> {
        let mut v = DVector::from_element(dim, c(0.0, 0.0));
        v[idx] = c(1.0, 0.0);
        v
    }

    #[test]
    fn weight_schedule_rejects_decreasing() {
        assert!(WeightSchedule::new(vec![0.0, 2.0, 1.0]).is_err());
        assert!(WeightSchedule::new(vec![-1.0, 0.0]).is_err());
        assert!(WeightSchedule::new(vec![0.0, 0.0, 3.0]).is_ok());
    }

    #[test]
    fn lanczos_pauli_x_by_hand() {
        let h = pauli_x();
        let kb = lanczos(&h, &basis_vector(2, 0), DEFAULT_BREAKDOWN_TOL).unwrap();
        assert_eq!(kb.kdim(), 2);
        assert!(kb.a().iter().all(|a| a.abs() < 1e-14));
        assert!((kb.b()[0]).abs() < 1e-14);
        assert!((kb.b()[1] - 1.0).abs() < 1e-14);
        assert!((kb.basis()[(1, 1)] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn lanczos_eigenvector_seed_terminates_immediately() {
        let h = pauli_x();
        let spec = diagonalize(&h).unwrap();
        let v0 = spec.eigenvectors().column(0).clone_owned();
        let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL).unwrap();
        assert_eq!(kb.kdim(), 1);
        assert!((kb.a()[0] - spec.energies()[0]).abs() < 1e-12);
        assert_eq!(kb.b(), &[0.0]);
    }

    // Oracle: dense similarity transform of H into the computed basis.
    #[test]
    fn lanczos_gue_full_rank_tridiagonal() {
        let h = build_random_hermitian(32, Ensemble::ComplexHermitian, 5).unwrap();
        let spec = diagonalize(&h).unwrap();
        let kb = lanczos(&h, &basis_vector(32, 0), DEFAULT_BREAKDOWN_TOL).unwrap();
        assert_eq!(kb.kdim(), 32);

        let t = kb.basis().adjoint() * h.entries() * kb.basis();
        let scale = spec.max_abs_energy();
        let mut max_resid = 0.0f64;
        for r in 0..32 {
            for col in 0..32 {
                let expected = if r == col {
                    c(kb.a()[r], 0.0)
                } else if r + 1 == col {
                    c(kb.b()[col], 0.0)
                } else if col + 1 == r {
                    c(kb.b()[r], 0.0)
                } else {
                    c(0.0, 0.0)
                };
                max_resid = max_resid.max((t[(r, col)] - expected).norm());
            }
        }
        assert!(max_resid <= 1e-9 * scale, "tridiagonal residual {max_resid:.3e}");
    }

    #[test]
    fn lanczos_rejects_unnormalized_seed() {
        let h = pauli_x();
        let v = DVector::from_vec(vec![c(2.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            lanczos(&h, &v, DEFAULT_BREAKDOWN_TOL),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn wavefunction_at_zero_is_localized() {
        let h = build_random_hermitian(8, Ensemble::RealSymmetric, 2).unwrap();
        let spec = diagonalize(&h).unwrap();
        let v0 = basis_vector(8, 0);
        let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL).unwrap();
        let c0 = spec.overlaps_of(&v0).unwrap();
        let phi = krylov_wavefunction(&spec, &kb, &c0, 0.0).unwrap();
        assert!((phi[0] - c(1.0, 0.0)).norm() < 1e-12);
        for j in 1..kb.kdim() {
            assert!(phi[j].norm() < 1e-12);
        }
    }

    #[test]
    fn wavefunction_pauli_x_rabi() {
        let h = pauli_x();
        let spec = diagonalize(&h).unwrap();
        let v0 = basis_vector(2, 0);
        let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL).unwrap();
        let c0 = spec.overlaps_of(&v0).unwrap();
        for &t in &[0.0, 0.3, 1.1, 2.9] {
            let phi = krylov_wavefunction(&spec, &kb, &c0, t).unwrap();
            assert!((phi[0] - c(t.cos(), 0.0)).norm() < 1e-12);
            assert!((phi[1] - c(0.0, -t.sin())).norm() < 1e-12);
        }
    }

    // Oracle: dense spectral exponential applied in the original basis.
    #[test]
    fn wavefunction_matches_matrix_exponential() {
        let h = build_random_hermitian(16, Ensemble::ComplexHermitian, 3).unwrap();
        let spec = diagonalize(&h).unwrap();
        let v0 = basis_vector(16, 0);
        let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL).unwrap();
        let c0 = spec.overlaps_of(&v0).unwrap();
        let t = 3.7;
        let phi = krylov_wavefunction(&spec, &kb, &c0, t).unwrap();

        let u = spec.eigenvectors();
        let expmth = u * DMatrix::from_diagonal(&spec.energies().map(|e| Complex64::from_polar(1.0, -e * t)))
            * u.adjoint();
        let psi = expmth * &v0;
        let phi_oracle = kb.basis().adjoint() * psi;
        let max_diff = (&phi - &phi_oracle).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(max_diff <= 1e-9, "max component diff {max_diff:.3e}");
    }

    #[test]
    fn complexity_localized_and_rabi() {
        let mut phi = DVector::from_element(4, c(0.0, 0.0));
        phi[0] = c(1.0, 0.0);
        let ws = WeightSchedule::linear(4);
        assert_eq!(krylov_complexity(&phi, &ws).unwrap(), 0.0);

        let h = pauli_x();
        let spec = diagonalize(&h).unwrap();
        let v0 = basis_vector(2, 0);
        let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL).unwrap();
        let c0 = spec.overlaps_of(&v0).unwrap();
        let ws2 = WeightSchedule::new(vec![0.0, 1.0]).unwrap();
        for &t in &[0.2, 0.7, 1.9] {
            let phi = krylov_wavefunction(&spec, &kb, &c0, t).unwrap();
            let ck = krylov_complexity(&phi, &ws2).unwrap();
            assert!((ck - t.sin().powi(2)).abs() < 1e-12);
        }
    }

    // Oracle: exact rational-arithmetic summation of the same terms.
    #[test]
    fn complexity_matches_exact_rational_sum() {
        use num_bigint::BigInt;
        use num_rational::Ratio;
        use num_traits::ToPrimitive;

        let mut rng_state = 88172645463325252u64;
        let mut next = || {
            // xorshift; plenty for test data
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut phi = DVector::from_fn(8, |_, _| c(next(), next()));
        phi /= c(phi.norm(), 0.0);
        let ws = WeightSchedule::linear(8);
        let got = krylov_complexity(&phi, &ws).unwrap();

        let mut exact: Ratio<BigInt> = Ratio::from_integer(0.into());
        for (j, z) in phi.iter().enumerate() {
            let re = Ratio::from_float(z.re).unwrap();
            let im = Ratio::from_float(z.im).unwrap();
            let w = Ratio::from_integer(BigInt::from(j));
            exact += w * (re.clone() * re + im.clone() * im);
        }
        let exact_f = exact.to_f64().unwrap();
        assert!((got - exact_f).abs() <= 1e-14 * exact_f.abs().max(1.0));
    }

    #[test]
    fn trace_matches_pointwise_calls() {
        let h = build_random_hermitian(16, Ensemble::ComplexHermitian, 9).unwrap();
        let spec = diagonalize(&h).unwrap();
        let v0 = basis_vector(16, 0);
        let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL).unwrap();
        let c0 = spec.overlaps_of(&v0).unwrap();
        let ws = WeightSchedule::linear(kb.kdim());
        let grid: Vec<f64> = (0..200).map(|k| 0.05 * k as f64).collect();
        let trace = krylov_complexity_trace(&spec, &kb, &c0, &ws, &grid).unwrap();
        for (idx, &t) in grid.iter().enumerate() {
            let phi = krylov_wavefunction(&spec, &kb, &c0, t).unwrap();
            let ck = krylov_complexity(&phi, &ws).unwrap();
            assert_eq!(trace.values()[idx], ck, "grid point {idx} differs");
        }
    }

    #[test]
    fn trace_trivial_cases() {
        let h = pauli_x();
        let spec = diagonalize(&h).unwrap();
        let v0 = basis_vector(2, 0);
        let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL).unwrap();
        let c0 = spec.overlaps_of(&v0).unwrap();
        let ws = WeightSchedule::new(vec![0.0, 1.0]).unwrap();

        let single = krylov_complexity_trace(&spec, &kb, &c0, &ws, &[0.0]).unwrap();
        assert_eq!(single.values(), &[0.0]);

        let pi = std::f64::consts::PI;
        let grid = [0.0, pi / 4.0, pi / 2.0];
        let trace = krylov_complexity_trace(&spec, &kb, &c0, &ws, &grid).unwrap();
        assert!((trace.values()[0] - 0.0).abs() < 1e-14);
        assert!((trace.values()[1] - 0.5).abs() < 1e-14);
        assert!((trace.values()[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn time_average_eigenstate_and_rabi() {
        let h = pauli_x();
        let spec = diagonalize(&h).unwrap();

        let v_eig = spec.eigenvectors().column(0).clone_owned();
        let kb1 = lanczos(&h, &v_eig, DEFAULT_BREAKDOWN_TOL).unwrap();
        let c1 = spec.overlaps_of(&v_eig).unwrap();
        let ws1 = WeightSchedule::new(vec![0.0]).unwrap();
        assert_eq!(time_averaged_ck(&spec, &kb1, &c1, &ws1).unwrap(), 0.0);

        let v0 = basis_vector(2, 0);
        let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL).unwrap();
        let c0 = spec.overlaps_of(&v0).unwrap();
        let ws = WeightSchedule::new(vec![0.0, 1.0]).unwrap();
        let avg = time_averaged_ck(&spec, &kb, &c0, &ws).unwrap();
        assert!((avg - 0.5).abs() < 1e-14);
    }

    #[test]
    fn time_average_rejects_degenerate_spectrum() {
        let h = build_spin_chain(2, 0.0, 0.0, Boundary::Open).unwrap();
        let spec = diagonalize(&h).unwrap();
        let v0 = DVector::from_element(4, c(0.5, 0.0));
        let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL).unwrap();
        let c0 = spec.overlaps_of(&v0).unwrap();
        let ws = WeightSchedule::linear(4);
        assert!(matches!(
            time_averaged_ck(&spec, &kb, &c0, &ws),
            Err(Error::DegenerateSpectrum(_))
        ));
        assert!(matches!(
            q_matrix(&spec, &kb, &c0, &ws),
            Err(Error::DegenerateSpectrum(_))
        ));
    }

    // Oracle: long-time trapezoid average of the actual trace.
    #[test]
    fn time_average_matches_long_time_numerics() {
        let h = build_random_hermitian(32, Ensemble::ComplexHermitian, 5).unwrap();
        let spec = diagonalize(&h).unwrap();
        let v0 = basis_vector(32, 0);
        let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL).unwrap();
        let c0 = spec.overlaps_of(&v0).unwrap();
        let ws = WeightSchedule::linear(kb.kdim());

        let analytic = time_averaged_ck(&spec, &kb, &c0, &ws).unwrap();
        let t_max = 200.0 / spec.min_gap();
        let step = std::f64::consts::PI / (4.0 * spec.max_abs_energy());
        let numeric = numerical_time_average(&spec, &kb, &c0, &ws, t_max, step).unwrap();
        let rel = (numeric - analytic).abs() / analytic;
        assert!(rel < 0.01, "relative error {rel:.4e}");
    }

    #[test]
    fn q_matrix_eigenstate_seed_is_zero() {
        let h = pauli_x();
        let spec = diagonalize(&h).unwrap();
        let v_eig = spec.eigenvectors().column(1).clone_owned();
        let kb = lanczos(&h, &v_eig, DEFAULT_BREAKDOWN_TOL).unwrap();
        let c1 = spec.overlaps_of(&v_eig).unwrap();
        let ws = WeightSchedule::new(vec![0.0]).unwrap();
        let q = q_matrix(&spec, &kb, &c1, &ws).unwrap();
        assert!(q.entries().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn q_matrix_pauli_x_by_hand() {
        let h = pauli_x();
        let spec = diagonalize(&h).unwrap();
        let v0 = basis_vector(2, 0);
        let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL).unwrap();
        let c0 = spec.overlaps_of(&v0).unwrap();
        let ws = WeightSchedule::new(vec![0.0, 1.0]).unwrap();
        let q = q_matrix(&spec, &kb, &c0, &ws).unwrap();
        let expected = [[0.25, -0.25], [-0.25, 0.25]];
        for n in 0..2 {
            for m in 0..2 {
                assert!((q.entries()[(n, m)] - expected[n][m]).abs() < 1e-14);
            }
        }
        assert!((q.trace() - 0.5).abs() < 1e-14);
    }

    // Oracle: eigensolver on q.
    #[test]
    fn q_matrix_gue_is_psd_with_matching_trace() {
        let h = build_random_hermitian(32, Ensemble::ComplexHermitian, 5).unwrap();
        let spec = diagonalize(&h).unwrap();
        let v0 = basis_vector(32, 0);
        let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL).unwrap();
        let c0 = spec.overlaps_of(&v0).unwrap();
        let ws = WeightSchedule::linear(kb.kdim());
        let q = q_matrix(&spec, &kb, &c0, &ws).unwrap();

        let min_eig = crate::eigen::symmetric_min_eigenvalue(q.entries()).unwrap();
        assert!(min_eig >= -1e-12 * q.trace());

        let ck_bar = time_averaged_ck(&spec, &kb, &c0, &ws).unwrap();
        let rel = (q.trace() - ck_bar).abs() / ck_bar;
        assert!(rel <= 1e-12, "trace identity violated: rel {rel:.3e}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        // Lanczos invariants over random Hamiltonians and seeds.
        #[test]
        fn lanczos_invariants_random(seed in 0u64..500, dim in 2usize..24) {
            let h = build_random_hermitian(dim, Ensemble::ComplexHermitian, seed).unwrap();
            let spec = diagonalize(&h).unwrap();
            let kb = lanczos(&h, &basis_vector(dim, 0), DEFAULT_BREAKDOWN_TOL).unwrap();

            let gram = kb.basis().adjoint() * kb.basis();
            let gram_resid = (gram - DMatrix::identity(kb.kdim(), kb.kdim()))
                .iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(gram_resid <= 1e-10);

            for j in 1..kb.kdim() {
                prop_assert!(kb.b()[j] > 0.0);
            }

            let t = kb.basis().adjoint() * h.entries() * kb.basis();
            let mut tri_resid = 0.0f64;
            for r in 0..kb.kdim() {
                for col in 0..kb.kdim() {
                    if r.abs_diff(col) > 1 {
                        tri_resid = tri_resid.max(t[(r, col)].norm());
                    }
                }
            }
            prop_assert!(tri_resid <= 1e-8 * spec.max_abs_energy());

            // Overlap consistency S = B†U.
            let s_resid = (kb.overlaps() - kb.basis().adjoint() * spec.eigenvectors())
                .iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(s_resid == 0.0);
        }

        // Unitarity of the evolved wavefunction when K spans the reachable subspace.
        #[test]
        fn wavefunction_stays_normalized(seed in 0u64..500, t in -20.0f64..20.0) {
            let h = build_random_hermitian(12, Ensemble::RealSymmetric, seed).unwrap();
            let spec = diagonalize(&h).unwrap();
            let v0 = basis_vector(12, 0);
            let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL).unwrap();
            let c0 = spec.overlaps_of(&v0).unwrap();
            let phi = krylov_wavefunction(&spec, &kb, &c0, t).unwrap();
            let norm_sq: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((norm_sq - 1.0).abs() <= 1e-10);
        }

        // C_K stays within the weight range for normalized wavefunctions.
        #[test]
        fn complexity_bounded_by_weights(seed in 0u64..500, t in 0.0f64..10.0) {
            let h = build_random_hermitian(8, Ensemble::ComplexHermitian, seed).unwrap();
            let spec = diagonalize(&h).unwrap();
            let v0 = basis_vector(8, 0);
            let kb = lanczos(&h, &v0, DEFAULT_BREAKDOWN_TOL).unwrap();
            let c0 = spec.overlaps_of(&v0).unwrap();
            let ws = WeightSchedule::linear(kb.kdim());
            let phi = krylov_wavefunction(&spec, &kb, &c0, t).unwrap();
            let ck = krylov_complexity(&phi, &ws).unwrap();
            let max_w = (kb.kdim() - 1) as f64;
            prop_assert!(ck >= -1e-12 && ck <= max_w + 1e-9);
        }
    }
}
