//! Penalty metrics on the unitary group and the lattice bound they induce.
//!
//! A generator basis T_a (orthonormal under the trace inner product) and
//! penalty factors mu_a define a right-invariant metric on curves of
//! unitaries. Restricted to constant-velocity curves that reach exp(-iHt),
//! the curve length becomes a quadratic form in the integer winding vector,
//! so the shortest such curve is a closest-vector problem on Z^D under the
//! Q-matrix built from the penalized generator diagonals. The late-time
//! plateau of that bound is estimated by Monte-Carlo sampling of the mean
//! lattice distance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{ComplexityTrace, KrylovBasis, WeightSchedule};
use crate::lattice::{
    babai_nearest_plane, cvp_enumerate_capped, lll_reduce, psd_factor, CvpMethod, LatticeBasis,
    DEFAULT_ENUM_CAP, DEFAULT_LLL_DELTA,
};
use crate::models::{HermitianOperator, SpectralDecomposition};
use crate::numeric::mean_and_stderr;

const TAU: f64 = std::f64::consts::TAU;

/// Pairwise trace-orthonormality tolerance for generator bases.
pub const GENERATOR_ORTHONORMALITY_TOL: f64 = 1e-10;

/// A real symmetric positive-semidefinite metric on winding vectors.
///
/// Only the real symmetric part of the underlying Hermitian sum
/// contributes to the quadratic form on real vectors, so that part is what
/// gets stored; the constructor symmetrizes exactly after checking the
/// asymmetry is within tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    dim: usize,
    entries: DMatrix<f64>,
}

impl MetricMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || entries.ncols() != dim {
            return Err(Error::InvalidDimension(format!(
                "expected square matrix with D >= 1, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("metric has non-finite entries".into()));
        }
        let scale = entries.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let asym = (&entries - entries.transpose())
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max);
        if asym > 1e-12 * (1.0 + scale) {
            return Err(Error::InvalidInput(format!(
                "metric asymmetry {asym:.3e} exceeds tolerance"
            )));
        }
        let sym = (&entries + entries.transpose()) * 0.5;
        let trace = sym.trace();
        let min_eig = crate::eigen::symmetric_min_eigenvalue(&sym)
            .ok_or_else(|| Error::NumericalFailure("eigensolver failed on metric".into()))?;
        if min_eig < -1e-10 * (1.0 + trace) {
            return Err(Error::NotPsd(format!(
                "min eigenvalue {min_eig:.3e} for trace {trace:.3e}"
            )));
        }
        Ok(Self { dim, entries: sym })
    }

    /// Skip validation; for internal use and tests that need to probe
    /// downstream guards with invalid data.
    pub fn new_unchecked(entries: DMatrix<f64>) -> Self {
        Self {
            dim: entries.nrows(),
            entries,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    /// y^T Q y.
    pub fn quadratic_form(&self, y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim {
            let mut row = 0.0;
            for c in 0..self.dim {
                row += self.entries[(r, c)] * y[c];
            }
            acc += y[r] * row;
        }
        acc
    }
}

/// Generators T_a with per-generator string tags. Not necessarily
/// Hermitian; orthonormal under Tr(T_a† T_b) = delta_ab.
#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    dim: usize,
    generators: Vec<DMatrix<Complex64>>,
    labels: Vec<String>,
}

impl GeneratorBasis {
    /// Validating constructor: checks pairwise trace-orthonormality.
    /// Quadratic in the number of generators; fine for explicit bases,
    /// use [`krylov_generator_basis`] for the (orthonormal by construction)
    /// Krylov family.
    pub fn new(generators: Vec<DMatrix<Complex64>>, labels: Vec<String>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidInput("generator list is empty".into()));
        }
        if generators.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} generators but {} labels",
                generators.len(),
                labels.len()
            )));
        }
        let dim = generators[0].nrows();
        for g in &generators {
            if g.nrows() != dim || g.ncols() != dim {
                return Err(Error::InvalidInput("generators must share one square shape".into()));
            }
        }
        let basis = Self::new_unchecked(dim, generators, labels);
        let gram_resid = basis.max_orthonormality_residual();
        if gram_resid > GENERATOR_ORTHONORMALITY_TOL {
            return Err(Error::InvalidInput(format!(
                "generators not trace-orthonormal: residual {gram_resid:.3e}"
            )));
        }
        Ok(basis)
    }

    pub fn new_unchecked(
        dim: usize,
        generators: Vec<DMatrix<Complex64>>,
        labels: Vec<String>,
    ) -> Self {
        Self {
            dim,
            generators,
            labels,
        }
    }

    /// Complete matrix-unit basis |a><b| in the energy eigenbasis.
    pub fn matrix_units_in_eigenbasis(spec: &SpectralDecomposition) -> Self {
        let dim = spec.dim();
        let u = spec.eigenvectors();
        let mut generators = Vec::with_capacity(dim * dim);
        let mut labels = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                let col_a = u.column(a).clone_owned();
                let col_b = u.column(b).clone_owned();
                generators.push(&col_a * col_b.adjoint());
                labels.push(format!("unit-{a}-{b}"));
            }
        }
        Self::new_unchecked(dim, generators, labels)
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[DMatrix<Complex64>] {
        &self.generators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Largest deviation of the vectorized Gram matrix from the identity.
    pub fn max_orthonormality_residual(&self) -> f64 {
        let g = self.generators.len();
        let mut resid = 0.0f64;
        for i in 0..g {
            for j in i..g {
                let inner: Complex64 = self.generators[i]
                    .iter()
                    .zip(self.generators[j].iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                resid = resid.max((inner - Complex64::new(expected, 0.0)).norm());
            }
        }
        resid
    }
}

/// Nonnegative penalty factors mu_a aligned with a generator basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySchedule {
    penalties: Vec<f64>,
}

impl PenaltySchedule {
    pub fn new(penalties: Vec<f64>) -> Result<Self> {
        if penalties.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidInput(
                "penalties must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { penalties })
    }

    pub fn penalties(&self) -> &[f64] {
        &self.penalties
    }

    pub fn len(&self) -> usize {
        self.penalties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.penalties.is_empty()
    }
}

/// Monte-Carlo estimate of the late-time plateau height.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlateauEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub solver: CvpMethod,
    pub ridge_epsilon: f64,
}

/// Solver configuration shared by the bound and plateau computations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    pub method: CvpMethod,
    pub lll_delta: f64,
    pub enum_cap: usize,
    /// Ridge added to the metric before factorization; `None` selects
    /// 1e-10 * (trace(Q)/D + 1) automatically.
    pub ridge: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: CvpMethod::Exact,
            lll_delta: DEFAULT_LLL_DELTA,
            enum_cap: DEFAULT_ENUM_CAP,
            ridge: None,
        }
    }
}

/// Automatic ridge for (possibly rank-deficient) PSD metrics.
pub fn auto_ridge(q: &MetricMatrix) -> f64 {
    1e-10 * (q.trace() / q.dim() as f64 + 1.0)
}

/// Default Monte-Carlo sample counts: exact enumeration at small dimension
/// affords fewer samples than the cheap Babai solver.
pub fn default_mc_samples(method: CvpMethod) -> usize {
    match method {
        CvpMethod::Exact => 10_000,
        _ => 100_000,
    }
}

/// Q_{nm} = Re sum_a mu_a <n|T_a|n> <m|T_a†|m> over the energy eigenbasis.
///
/// Zero-penalty generators are skipped: their terms are exactly zero, so
/// the result is bitwise identical with or without them.
pub fn metric_from_penalties(
    spec: &SpectralDecomposition,
    gens: &GeneratorBasis,
    ps: &PenaltySchedule,
) -> Result<MetricMatrix> {
    let dim = spec.dim();
    if gens.dim() != dim {
        return Err(Error::InvalidInput(format!(
            "generator dimension {} does not match spectrum dimension {dim}",
            gens.dim()
        )));
    }
    if gens.len() != ps.len() {
        return Err(Error::InvalidInput(format!(
            "{} generators but {} penalties",
            gens.len(),
            ps.len()
        )));
    }
    let u = spec.eigenvectors();
    let mut q = DMatrix::<f64>::zeros(dim, dim);
    let mut diag = vec![Complex64::new(0.0, 0.0); dim];
    for (t, &mu) in gens.generators().iter().zip(ps.penalties()) {
        if mu == 0.0 {
            continue;
        }
        let tu = t * u;
        for n in 0..dim {
            diag[n] = u.column(n).dotc(&tu.column(n));
        }
        for n in 0..dim {
            for m in n..dim {
                // <m|T†|m> = conj(<m|T|m>)
                let term = mu * (diag[n] * diag[m].conj()).re;
                q[(n, m)] += term;
                if m != n {
                    q[(m, n)] += term;
                }
            }
        }
    }
    MetricMatrix::new(q)
}

/// Outer-product generator family adapted to a Krylov basis, in the fixed
/// order: |v0><v0|, then (|v0><v_j|, |v_j><v0|) for j = 1..K-1, then all
/// interior |v_i><v_j| with i, j >= 1.
///
/// Orthonormality is inherited from the Krylov basis, so no Gram check is
/// run here; materializing all K^2 dense generators costs O(K^2 D^2)
/// memory, which confines this constructor to desk-scale dimensions.
pub fn krylov_generator_basis(kb: &KrylovBasis) -> GeneratorBasis {
    let k = kb.kdim();
    let dim = kb.basis().nrows();
    let col = |j: usize| kb.basis().column(j).clone_owned();
    let mut generators = Vec::with_capacity(k * k);
    let mut labels = Vec::with_capacity(k * k);

    generators.push(&col(0) * col(0).adjoint());
    labels.push("seed-diag".to_string());
    for j in 1..k {
        generators.push(&col(0) * col(j).adjoint());
        labels.push(format!("seed-row-{j}"));
        generators.push(&col(j) * col(0).adjoint());
        labels.push(format!("seed-col-{j}"));
    }
    for i in 1..k {
        for j in 1..k {
            generators.push(&col(i) * col(j).adjoint());
            labels.push(format!("interior-{i}-{j}"));
        }
    }
    GeneratorBasis::new_unchecked(dim, generators, labels)
}

/// Penalties matching [`krylov_generator_basis`] order: w_0 for the seed
/// projector, w_j/2 for each seed row/column pair, zero for the interior.
pub fn krylov_penalty_schedule(ws: &WeightSchedule, k: usize) -> Result<PenaltySchedule> {
    if k == 0 {
        return Err(Error::InvalidInput("need at least one Krylov site".into()));
    }
    let weights = ws.first(k)?;
    let mut penalties = Vec::with_capacity(k * k);
    penalties.push(weights[0]);
    for &w in &weights[1..] {
        penalties.push(w / 2.0);
        penalties.push(w / 2.0);
    }
    penalties.extend(std::iter::repeat(0.0).take((k - 1) * (k - 1)));
    PenaltySchedule::new(penalties)
}

/// Constant velocity reaching exp(-iHt) at time t with winding k:
/// V = sum_n (E_n - 2 pi k_n / t) |n><n|.
///
/// Verifies exp(-iVt) = exp(-iHt) to 1e-8 before returning.
pub fn velocity_from_winding(
    spec: &SpectralDecomposition,
    winding: &[i64],
    t: f64,
) -> Result<HermitianOperator> {
    let dim = spec.dim();
    if winding.len() != dim {
        return Err(Error::InvalidInput(format!(
            "winding length {} does not match dimension {dim}",
            winding.len()
        )));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
    }
    let u = spec.eigenvectors();
    let shifted = DVector::from_iterator(
        dim,
        spec.energies()
            .iter()
            .zip(winding)
            .map(|(&e, &k)| e - TAU * k as f64 / t),
    );
    let v = u * DMatrix::from_diagonal(&shifted.map(|x| Complex64::new(x, 0.0))) * u.adjoint();
    // Exact hermitization of the rounding noise before validation.
    let v = (&v + v.adjoint()) * Complex64::new(0.5, 0.0);

    let exp_of = |phases: &DVector<f64>| -> DMatrix<Complex64> {
        u * DMatrix::from_diagonal(&phases.map(|p| Complex64::from_polar(1.0, -p * t))) * u.adjoint()
    };
    let resid = (exp_of(&shifted) - exp_of(&spec.energies().clone_owned()))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if resid > 1e-8 {
        return Err(Error::NumericalFailure(format!(
            "winding unitary mismatch: residual {resid:.3e}"
        )));
    }
    HermitianOperator::new(v)
}

/// Metric speed sqrt(sum_a mu_a |Tr(T_a† V)|^2) of a velocity matrix.
pub fn metric_speed(
    v: &HermitianOperator,
    gens: &GeneratorBasis,
    ps: &PenaltySchedule,
) -> Result<f64> {
    if gens.dim() != v.dim() {
        return Err(Error::InvalidInput(format!(
            "generator dimension {} does not match operator dimension {}",
            gens.dim(),
            v.dim()
        )));
    }
    if gens.len() != ps.len() {
        return Err(Error::InvalidInput(format!(
            "{} generators but {} penalties",
            gens.len(),
            ps.len()
        )));
    }
    let mut acc = 0.0;
    for (t, &mu) in gens.generators().iter().zip(ps.penalties()) {
        if mu == 0.0 {
            continue;
        }
        let overlap: Complex64 = t
            .iter()
            .zip(v.entries().iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        acc += mu * overlap.norm_sqr();
    }
    Ok(acc.sqrt())
}

/// One evaluation of the Nielsen bound.
#[derive(Debug, Clone)]
pub struct NielsenBound {
    /// C_b = 2 pi sqrt(y^T Q y) at the optimal winding, evaluated on the
    /// original (pre-ridge) metric.
    pub value: f64,
    /// Minimizing winding vector.
    pub k: Vec<i64>,
    pub method: CvpMethod,
    pub ridge_epsilon: f64,
    /// epsilon * ||y||^2, the part the ridge added to the solved form.
    pub ridge_contribution: f64,
}

/// Reusable CVP context for one metric: factor, reduce, then solve many
/// targets against the same reduced lattice.
struct BoundSolver {
    q: MetricMatrix,
    factor: DMatrix<f64>,
    reduced: LatticeBasis,
    ridge: f64,
    method: CvpMethod,
    enum_cap: usize,
}

impl BoundSolver {
    fn build(q: &MetricMatrix, opts: &SolverOptions) -> Result<Self> {
        let ridge = opts.ridge.unwrap_or_else(|| auto_ridge(q));
        if !(ridge >= 0.0) || !ridge.is_finite() {
            return Err(Error::InvalidInput(format!("invalid ridge {ridge}")));
        }
        let factor = psd_factor(q, ridge)?;
        let reduced = lll_reduce(&factor, opts.lll_delta)?;
        Ok(Self {
            q: q.clone(),
            factor,
            reduced,
            ridge,
            method: opts.method,
            enum_cap: opts.enum_cap,
        })
    }

    fn reduced_basis(&self) -> &LatticeBasis {
        &self.reduced
    }

    /// Closest winding to the real target x, distances re-evaluated on the
    /// original metric.
    fn solve(&self, x: &[f64]) -> Result<NielsenBound> {
        let dim = self.q.dim();
        let embedded = {
            let xv = DVector::from_column_slice(x);
            (&self.factor * xv).as_slice().to_vec()
        };
        let solution = match self.method {
            CvpMethod::Exact => {
                cvp_enumerate_capped(&self.reduced, &embedded, -1.0, self.enum_cap)?
            }
            CvpMethod::Babai => babai_nearest_plane(&self.reduced, &embedded)?,
            CvpMethod::Bruteforce => {
                return Err(Error::InvalidInput(
                    "brute force is a test oracle, not a bound solver".into(),
                ))
            }
        };
        let y: Vec<f64> = (0..dim).map(|i| x[i] - solution.k[i] as f64).collect();
        let form = self.q.quadratic_form(&y).max(0.0);
        let norm2: f64 = y.iter().map(|v| v * v).sum();
        Ok(NielsenBound {
            value: TAU * form.sqrt(),
            k: solution.k,
            method: solution.method,
            ridge_epsilon: self.ridge,
            ridge_contribution: self.ridge * norm2,
        })
    }
}

/// Upper bound on Nielsen complexity at time t >= 0:
/// C_b(t) = 2 pi min_k sqrt((y, Q y)), y = E t / 2 pi - k.
pub fn nielsen_bound(
    spec: &SpectralDecomposition,
    q: &MetricMatrix,
    t: f64,
    opts: &SolverOptions,
) -> Result<NielsenBound> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("t must be nonnegative, got {t}")));
    }
    if q.dim() != spec.dim() {
        return Err(Error::InvalidInput(format!(
            "metric dimension {} does not match spectrum dimension {}",
            q.dim(),
            spec.dim()
        )));
    }
    let solver = BoundSolver::build(q, opts)?;
    let x: Vec<f64> = spec.energies().iter().map(|&e| e * t / TAU).collect();
    solver.solve(&x)
}

/// C_b(t) on a strictly increasing grid, sharing one reduced lattice across
/// all points. Points are solved in parallel and joined in grid order.
pub fn nielsen_bound_trace(
    spec: &SpectralDecomposition,
    q: &MetricMatrix,
    time_grid: &[f64],
    opts: &SolverOptions,
) -> Result<ComplexityTrace> {
    if q.dim() != spec.dim() {
        return Err(Error::InvalidInput(format!(
            "metric dimension {} does not match spectrum dimension {}",
            q.dim(),
            spec.dim()
        )));
    }
    if time_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidInput("grid times must be nonnegative".into()));
    }
    let solver = BoundSolver::build(q, opts)?;
    let energies: Vec<f64> = spec.energies().iter().copied().collect();
    let values: Vec<f64> = time_grid
        .par_iter()
        .map(|&t| {
            let x: Vec<f64> = energies.iter().map(|&e| e * t / TAU).collect();
            solver.solve(&x).map(|b| b.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    ComplexityTrace::new(time_grid.to_vec(), values)
}

/// Reduced lattice basis used by the bound for a given metric, for
/// diagnostic dumps.
pub fn reduced_basis_for(q: &MetricMatrix, opts: &SolverOptions) -> Result<LatticeBasis> {
    Ok(BoundSolver::build(q, opts)?.reduced_basis().clone())
}

/// Monte-Carlo estimate of the mean lattice distance
/// C_p = 2 pi E_x[min_k sqrt((x - k, Q (x - k)))], x uniform in [0,1)^D.
///
/// Each sample draws from its own counter-derived RNG stream
/// (seed, sample index), so the result is independent of the number of
/// worker threads.
pub fn plateau_estimate(
    q: &MetricMatrix,
    n_samples: usize,
    rng_seed: u64,
    opts: &SolverOptions,
) -> Result<PlateauEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let solver = BoundSolver::build(q, opts)?;
    let dim = q.dim();
    let distances: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|sample| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            rng.set_stream(sample as u64);
            let x: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
            solver.solve(&x).map(|b| b.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, stderr) = mean_and_stderr(&distances);
    Ok(PlateauEstimate {
        mean,
        stderr,
        n_samples,
        solver: solver.method,
        ridge_epsilon: solver.ridge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{lanczos, DEFAULT_BREAKDOWN_TOL};
    use crate::lattice::cvp_bruteforce;
    use crate::models::{build_random_hermitian, diagonalize, Ensemble};
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn basis_vector(dim: usize, idx: usize) -> DVector<Complex64> {
        let mut v = DVector::from_element(dim, c(0.0, 0.0));
        v[idx] = c(1.0, 0.0);
        v
    }

    fn gue_spec(dim: usize, seed: u64) -> SpectralDecomposition {
        diagonalize(&build_random_hermitian(dim, Ensemble::ComplexHermitian, seed).unwrap())
            .unwrap()
    }

    fn one_level_spec(energy: f64) -> SpectralDecomposition {
        diagonalize(
            &HermitianOperator::new(DMatrix::from_element(1, 1, c(energy, 0.0))).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn complete_units_reduce_to_identity() {
        let spec = gue_spec(6, 3);
        let gens = GeneratorBasis::matrix_units_in_eigenbasis(&spec);
        let ps = PenaltySchedule::new(vec![1.0; gens.len()]).unwrap();
        let q = metric_from_penalties(&spec, &gens, &ps).unwrap();
        let resid = (q.entries() - DMatrix::identity(6, 6))
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max);
        assert!(resid <= 1e-10, "residual {resid:.3e}");
    }

    #[test]
    fn zero_penalties_give_zero_metric() {
        let spec = gue_spec(4, 1);
        let gens = GeneratorBasis::matrix_units_in_eigenbasis(&spec);
        let ps = PenaltySchedule::new(vec![0.0; gens.len()]).unwrap();
        let q = metric_from_penalties(&spec, &gens, &ps).unwrap();
        assert!(q.entries().iter().all(|&x| x == 0.0));
    }

    // Oracle: direct triple-loop over (n, m, a) in independent code.
    #[test]
    fn metric_matches_triple_loop_oracle() {
        let spec = gue_spec(4, 9);
        let u = spec.eigenvectors();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let picks: Vec<(usize, usize)> =
            vec![(0, 1), (1, 0), (2, 3), (1, 1), (3, 2), (0, 3)];
        let mut gens = Vec::new();
        let mut labels = Vec::new();
        for &(a, b) in &picks {
            let ca = u.column(a).clone_owned();
            let cb = u.column(b).clone_owned();
            gens.push(&ca * cb.adjoint());
            labels.push(format!("unit-{a}-{b}"));
        }
        let mus: Vec<f64> = (0..picks.len()).map(|_| rng.gen_range(0.0..2.0)).collect();
        let basis = GeneratorBasis::new(gens.clone(), labels).unwrap();
        let ps = PenaltySchedule::new(mus.clone()).unwrap();
        let q = metric_from_penalties(&spec, &basis, &ps).unwrap();

        let mut oracle = DMatrix::<f64>::zeros(4, 4);
        for n in 0..4 {
            for m in 0..4 {
                let mut acc = Complex64::new(0.0, 0.0);
                for (g, &mu) in gens.iter().zip(&mus) {
                    let dn = u.column(n).adjoint() * g * u.column(n);
                    let dm = u.column(m).adjoint() * g.adjoint() * u.column(m);
                    acc += mu * dn[(0, 0)] * dm[(0, 0)];
                }
                oracle[(n, m)] = acc.re;
            }
        }
        let diff = (q.entries() - oracle).iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-12, "oracle mismatch {diff:.3e}");
    }

    #[test]
    fn krylov_generators_small_cases() {
        let h = build_random_hermitian(3, Ensemble::ComplexHermitian, 5).unwrap();
        let spec = diagonalize(&h).unwrap();
        let v_eig = spec.eigenvectors().column(0).clone_owned();
        let kb1 = lanczos(&h, &v_eig, DEFAULT_BREAKDOWN_TOL).unwrap();
        let g1 = krylov_generator_basis(&kb1);
        assert_eq!(g1.len(), 1);
        assert_eq!(g1.labels(), &["seed-diag".to_string()]);

        let h2 = HermitianOperator::new(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ))
        .unwrap();
        let kb2 = lanczos(&h2, &basis_vector(2, 0), DEFAULT_BREAKDOWN_TOL).unwrap();
        let g2 = krylov_generator_basis(&kb2);
        assert_eq!(
            g2.labels(),
            &[
                "seed-diag".to_string(),
                "seed-row-1".to_string(),
                "seed-col-1".to_string(),
                "interior-1-1".to_string()
            ]
        );
    }

    // Oracle: Gram matrix of the vectorized generators.
    #[test]
    fn krylov_generators_orthonormal_at_k5() {
        let h = build_random_hermitian(5, Ensemble::ComplexHermitian, 13).unwrap();
        let kb = lanczos(&h, &basis_vector(5, 0), DEFAULT_BREAKDOWN_TOL).unwrap();
        assert_eq!(kb.kdim(), 5);
        let gens = krylov_generator_basis(&kb);
        assert_eq!(gens.len(), 25);
        assert!(gens.max_orthonormality_residual() <= 1e-10);
    }

    #[test]
    fn penalty_schedule_matches_table() {
        let ws = WeightSchedule::new(vec![0.0, 1.0]).unwrap();
        let ps = krylov_penalty_schedule(&ws, 2).unwrap();
        assert_eq!(ps.penalties(), &[0.0, 0.5, 0.5, 0.0]);

        let ws3 = WeightSchedule::linear(3);
        let ps3 = krylov_penalty_schedule(&ws3, 3).unwrap();
        assert_eq!(ps3.penalties(), &[0.0, 0.5, 0.5, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);

        let ws1 = WeightSchedule::new(vec![3.0]).unwrap();
        let ps1 = krylov_penalty_schedule(&ws1, 1).unwrap();
        assert_eq!(ps1.penalties(), &[3.0]);
    }

    #[test]
    fn velocity_zero_winding_reproduces_spectrum() {
        let spec = gue_spec(5, 2);
        let v = velocity_from_winding(&spec, &[0; 5], 1.7).unwrap();
        let vspec = diagonalize(&v).unwrap();
        for n in 0..5 {
            assert!((vspec.energies()[n] - spec.energies()[n]).abs() < 1e-10);
        }
    }

    #[test]
    fn velocity_one_dimensional_winding() {
        let spec = one_level_spec(0.0);
        let v = velocity_from_winding(&spec, &[1], TAU).unwrap();
        assert!((v.entries()[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-14);
    }

    // Oracle: spectral exponentials of both operators.
    #[test]
    fn velocity_windings_share_the_endpoint() {
        let spec = gue_spec(8, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let k: Vec<i64> = (0..8).map(|_| rng.gen_range(-3i64..=3)).collect();
            let t = 1.3;
            let v = velocity_from_winding(&spec, &k, t).unwrap();
            let vspec = diagonalize(&v).unwrap();
            let exp_from = |s: &SpectralDecomposition| {
                s.eigenvectors()
                    * DMatrix::from_diagonal(
                        &s.energies().map(|e| Complex64::from_polar(1.0, -e * t)),
                    )
                    * s.eigenvectors().adjoint()
            };
            let resid = (exp_from(&vspec) - exp_from(&spec))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(resid <= 1e-8, "residual {resid:.3e}");
        }
    }

    #[test]
    fn velocity_rejects_nonpositive_time() {
        let spec = gue_spec(3, 2);
        assert!(velocity_from_winding(&spec, &[0; 3], 0.0).is_err());
        assert!(velocity_from_winding(&spec, &[0; 3], -1.0).is_err());
    }

    #[test]
    fn speed_of_zero_velocity_vanishes() {
        let spec = gue_spec(4, 8);
        let gens = GeneratorBasis::matrix_units_in_eigenbasis(&spec);
        let ps = PenaltySchedule::new(vec![1.0; gens.len()]).unwrap();
        let v = HermitianOperator::new(DMatrix::from_element(4, 4, c(0.0, 0.0))).unwrap();
        assert_eq!(metric_speed(&v, &gens, &ps).unwrap(), 0.0);
    }

    #[test]
    fn complete_basis_speed_is_frobenius_norm() {
        let spec = gue_spec(5, 10);
        let gens = GeneratorBasis::matrix_units_in_eigenbasis(&spec);
        let ps = PenaltySchedule::new(vec![1.0; gens.len()]).unwrap();
        let h = build_random_hermitian(5, Ensemble::ComplexHermitian, 11).unwrap();
        let speed = metric_speed(&h, &gens, &ps).unwrap();
        assert!((speed - h.frobenius_norm()).abs() <= 1e-10);
    }

    // Oracle: Q-form evaluation; ties the metric speed of a winding velocity
    // to the lattice quadratic form.
    #[test]
    fn curve_length_identity() {
        let spec = gue_spec(8, 4);
        let gens = GeneratorBasis::matrix_units_in_eigenbasis(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mus: Vec<f64> = (0..gens.len()).map(|_| rng.gen_range(0.0..1.5)).collect();
        let ps = PenaltySchedule::new(mus).unwrap();
        let q = metric_from_penalties(&spec, &gens, &ps).unwrap();
        for _ in 0..25 {
            let k: Vec<i64> = (0..8).map(|_| rng.gen_range(-3i64..=3)).collect();
            let t: f64 = rng.gen_range(0.1..5.0);
            let v = velocity_from_winding(&spec, &k, t).unwrap();
            let speed = metric_speed(&v, &gens, &ps).unwrap();
            let y: Vec<f64> = (0..8)
                .map(|n| spec.energies()[n] * t / TAU - k[n] as f64)
                .collect();
            let rhs = TAU * q.quadratic_form(&y).max(0.0).sqrt();
            let lhs = t * speed;
            assert!(
                (lhs - rhs).abs() <= 1e-9 * (1.0 + rhs),
                "identity broke: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn bound_at_zero_time_is_zero() {
        let spec = gue_spec(4, 21);
        let q = MetricMatrix::identity(4);
        let b = nielsen_bound(&spec, &q, 0.0, &SolverOptions::default()).unwrap();
        assert_eq!(b.value, 0.0);
        assert_eq!(b.k, vec![0; 4]);
    }

    #[test]
    fn bound_one_dimensional_midpoint() {
        let spec = one_level_spec(1.0);
        let q = MetricMatrix::identity(1);
        let b = nielsen_bound(&spec, &q, std::f64::consts::PI, &SolverOptions::default()).unwrap();
        // Target is half-integer; distance 1/2, C_b = pi.
        assert!((b.value - std::f64::consts::PI).abs() < 1e-9);
    }

    // Oracle: brute-force search over the winding box.
    #[test]
    fn bound_matches_bruteforce_windings() {
        let spec = gue_spec(5, 33);
        let gens = GeneratorBasis::matrix_units_in_eigenbasis(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let mus: Vec<f64> = (0..gens.len()).map(|_| rng.gen_range(0.1..1.0)).collect();
        let ps = PenaltySchedule::new(mus).unwrap();
        let q = metric_from_penalties(&spec, &gens, &ps).unwrap();
        let t = 7.3;
        let bound = nielsen_bound(&spec, &q, t, &SolverOptions::default()).unwrap();
        let x: Vec<f64> = spec.energies().iter().map(|&e| e * t / TAU).collect();
        let brute = cvp_bruteforce(&q, &x, 6).unwrap();
        assert!(
            (bound.value - TAU * brute.distance).abs() <= 1e-8 * (1.0 + bound.value),
            "exact {} vs brute {}",
            bound.value,
            TAU * brute.distance
        );
    }

    #[test]
    fn trace_single_point_and_sawtooth() {
        let spec = one_level_spec(1.0);
        let q = MetricMatrix::identity(1);
        let opts = SolverOptions::default();

        let single = nielsen_bound_trace(&spec, &q, &[0.0], &opts).unwrap();
        assert_eq!(single.values(), &[0.0]);

        let grid: Vec<f64> = (0..200).map(|i| 0.1 * i as f64).collect();
        let trace = nielsen_bound_trace(&spec, &q, &grid, &opts).unwrap();
        for (idx, &t) in grid.iter().enumerate() {
            let frac = t / TAU;
            let dist = (frac - frac.round()).abs();
            let expected = TAU * dist;
            assert!(
                (trace.values()[idx] - expected).abs() < 1e-9,
                "sawtooth mismatch at t={t}"
            );
        }
    }

    // Oracle: the k = 0 winding evaluates the form directly and caps the minimum.
    #[test]
    fn trace_bounded_by_zero_winding() {
        let spec = gue_spec(8, 44);
        let h = build_random_hermitian(8, Ensemble::ComplexHermitian, 44).unwrap();
        let kb = lanczos(&h, &basis_vector(8, 0), DEFAULT_BREAKDOWN_TOL).unwrap();
        let ws = WeightSchedule::linear(kb.kdim());
        let c0 = spec.overlaps_of(&basis_vector(8, 0)).unwrap();
        let q = crate::krylov::q_matrix(&spec, &kb, &c0, &ws).unwrap();
        let grid: Vec<f64> = (1..40).map(|i| 0.25 * i as f64).collect();
        let trace = nielsen_bound_trace(&spec, &q, &grid, &SolverOptions::default()).unwrap();
        for (idx, &t) in grid.iter().enumerate() {
            let y0: Vec<f64> = spec.energies().iter().map(|&e| e * t / TAU).collect();
            let cap = TAU * q.quadratic_form(&y0).max(0.0).sqrt();
            assert!(trace.values()[idx] <= cap + 1e-9);
        }
    }

    #[test]
    fn plateau_one_dimensional_analytic() {
        // C_p = 2 pi * integral of min(x, 1-x) = pi/2.
        let q = MetricMatrix::identity(1);
        let est = plateau_estimate(&q, 100_000, 7, &SolverOptions::default()).unwrap();
        let exact = std::f64::consts::FRAC_PI_2;
        assert!(
            (est.mean - exact).abs() <= 3.0 * est.stderr,
            "mean {} vs pi/2 {} (stderr {})",
            est.mean,
            exact,
            est.stderr
        );
    }

    #[test]
    fn plateau_scales_exactly_with_sqrt_of_metric() {
        let q1 = MetricMatrix::identity(3);
        let q4 = MetricMatrix::new(DMatrix::identity(3, 3) * 4.0).unwrap();
        let opts = SolverOptions::default();
        let e1 = plateau_estimate(&q1, 2000, 99, &opts).unwrap();
        let e4 = plateau_estimate(&q4, 2000, 99, &opts).unwrap();
        assert_eq!(e4.mean, 2.0 * e1.mean);
    }

    // Oracles: independent per-coordinate rounding sampler, and the
    // concentration estimate 2 pi sqrt(D/12).
    #[test]
    fn plateau_identity_sixteen_dimensional() {
        let dim = 16;
        let q = MetricMatrix::identity(dim);
        let n = 20_000;
        let est = plateau_estimate(&q, n, 5, &SolverOptions::default()).unwrap();

        let mut oracle = Vec::with_capacity(n);
        let mut rng = ChaCha8Rng::seed_from_u64(12345);
        for _ in 0..n {
            let mut d2 = 0.0;
            for _ in 0..dim {
                let x: f64 = rng.gen();
                let d = x.min(1.0 - x);
                d2 += d * d;
            }
            oracle.push(TAU * d2.sqrt());
        }
        let (oracle_mean, _) = mean_and_stderr(&oracle);
        let rel = (est.mean - oracle_mean).abs() / oracle_mean;
        assert!(rel <= 0.01, "MC vs rounding oracle: rel {rel:.4}");

        let concentration = TAU * (dim as f64 / 12.0).sqrt();
        let rel2 = (est.mean - concentration).abs() / concentration;
        assert!(rel2 <= 0.05, "MC vs concentration: rel {rel2:.4}");
    }

    #[test]
    fn plateau_monotone_under_loewner_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
        let q = MetricMatrix::new(a.transpose() * &a).unwrap();
        let shifted = MetricMatrix::new(q.entries() + DMatrix::identity(4, 4) * 0.5).unwrap();
        let opts = SolverOptions::default();
        let base = plateau_estimate(&q, 1500, 77, &opts).unwrap();
        let more = plateau_estimate(&shifted, 1500, 77, &opts).unwrap();
        assert!(more.mean >= base.mean);
    }

    #[test]
    fn babai_plateau_never_below_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = DMatrix::from_fn(5, 5, |_, _| rng.gen_range(-1.0..1.0));
        let q = MetricMatrix::new(a.transpose() * &a + DMatrix::identity(5, 5)).unwrap();
        let exact = plateau_estimate(&q, 1000, 21, &SolverOptions::default()).unwrap();
        let babai = plateau_estimate(
            &q,
            1000,
            21,
            &SolverOptions {
                method: CvpMethod::Babai,
                ..SolverOptions::default()
            },
        )
        .unwrap();
        assert!(babai.mean >= exact.mean - 1e-12);
    }
}
