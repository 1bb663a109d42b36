//! Closest-vector-problem machinery under a quadratic-form metric.
//!
//! The Nielsen-bound minimization asks for the integer vector k nearest to
//! a target x under a PSD form Q. We embed it in Euclidean space with a
//! factor L (L^T L = Q + ridge I), LLL-reduce the column lattice of L, and
//! then solve CVP with Babai nearest-plane (approximate) or Schnorr-Euchner
//! enumeration (exact, dimension-capped). A brute-force box search over the
//! raw form serves as the independent test oracle.
//!
//! Ridge handling lives in the caller; this module always sees a definite
//! factor.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::nielsen::MetricMatrix;

/// Default LLL reduction parameter.
pub const DEFAULT_LLL_DELTA: f64 = 0.75;

/// Default cap on exact enumeration dimension.
pub const DEFAULT_ENUM_CAP: usize = 16;

/// Maximum number of points a brute-force box may contain.
pub const BRUTEFORCE_BOX_CAP: f64 = 1e8;

const CONDITION_CAP: f64 = 1e12;

/// Which solver produced a CVP answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CvpMethod {
    Exact,
    Babai,
    Bruteforce,
}

impl std::fmt::Display for CvpMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CvpMethod::Exact => write!(f, "exact"),
            CvpMethod::Babai => write!(f, "babai"),
            CvpMethod::Bruteforce => write!(f, "bruteforce"),
        }
    }
}

/// A lattice minimizer: integer coordinates in the original basis and the
/// achieved distance.
#[derive(Debug, Clone, PartialEq)]
pub struct CvpSolution {
    pub k: Vec<i64>,
    pub distance: f64,
    pub method: CvpMethod,
}

/// An LLL-reduced lattice basis together with the unimodular change of
/// coordinates back to the original basis.
///
/// `columns` holds the reduced basis R; `transform` is the integer matrix M
/// with R = B_original * M, so a reduced-coordinate vector m corresponds to
/// original coordinates k = M m. The inverse of M is tracked alongside it
/// during reduction, and Gram-Schmidt data is cached for the solvers.
#[derive(Debug, Clone)]
pub struct LatticeBasis {
    dim: usize,
    columns: DMatrix<f64>,
    transform: DMatrix<i64>,
    inv_transform: DMatrix<i64>,
    condition: f64,
    // cached Gram-Schmidt of `columns`
    mu: DMatrix<f64>,
    bstar: DMatrix<f64>,
    bstar_norm2: Vec<f64>,
}

impl LatticeBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Reduced basis vectors as columns.
    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    /// Unimodular matrix mapping reduced coordinates to original ones.
    pub fn transform(&self) -> &DMatrix<i64> {
        &self.transform
    }

    /// Condition number estimate of the input basis.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Map reduced coordinates to original integer coordinates.
    fn to_original(&self, m: &[i64]) -> Vec<i64> {
        int_matvec(&self.transform, m)
    }

    /// Map original integer coordinates to reduced ones.
    fn to_reduced(&self, k: &[i64]) -> Vec<i64> {
        int_matvec(&self.inv_transform, k)
    }

    /// Debug dump of the reduced basis, one row per basis vector component.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| format!("{:.16e}", self.columns[(r, c)]))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Factor Q + ridge I = L^T L via the eigenvalue square root.
///
/// Tiny negative eigenvalues within the PSD tolerance are clamped to zero
/// before the ridge is added.
pub fn psd_factor(q: &MetricMatrix, ridge: f64) -> Result<DMatrix<f64>> {
    if !(ridge >= 0.0) {
        return Err(Error::InvalidInput("ridge must be nonnegative".into()));
    }
    let dim = q.dim();
    let trace = q.trace();
    let (eigenvalues, eigenvectors) = crate::eigen::symmetric_eigen(q.entries())
        .ok_or_else(|| Error::NumericalFailure("eigensolver failed on metric".into()))?;
    let min_eig = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-8 * trace.max(1.0) {
        return Err(Error::NotPsd(format!(
            "min eigenvalue {min_eig:.3e} below tolerance for trace {trace:.3e}"
        )));
    }
    let sqrt_diag = DMatrix::from_diagonal(&eigenvalues.map(|l| (l.max(0.0) + ridge).sqrt()));
    let factor = sqrt_diag * eigenvectors.transpose();

    let recon = factor.transpose() * &factor;
    let mut resid = 0.0f64;
    for r in 0..dim {
        for c in 0..dim {
            let target = q.entries()[(r, c)] + if r == c { ridge } else { 0.0 };
            resid = resid.max((recon[(r, c)] - target).abs());
        }
    }
    let bound = 1e-10 * (trace + ridge * dim as f64).max(f64::MIN_POSITIVE);
    if resid > bound {
        return Err(Error::NumericalFailure(format!(
            "factor residual {resid:.3e} exceeds {bound:.3e}"
        )));
    }
    Ok(factor)
}

/// Gram-Schmidt of the columns of `b`: returns (mu, bstar, bstar_norm2)
/// with b_i = bstar_i + sum_{j<i} mu[(i,j)] bstar_j.
fn gram_schmidt(b: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    let n = b.ncols();
    let mut mu = DMatrix::<f64>::zeros(n, n);
    let mut bstar = b.clone();
    let mut norm2 = vec![0.0; n];
    for i in 0..n {
        for j in 0..i {
            let m = if norm2[j] == 0.0 {
                0.0
            } else {
                b.column(i).dot(&bstar.column(j)) / norm2[j]
            };
            mu[(i, j)] = m;
            let proj = bstar.column(j).clone_owned() * m;
            let mut col = bstar.column_mut(i);
            col -= proj;
        }
        norm2[i] = bstar.column(i).norm_squared();
    }
    (mu, bstar, norm2)
}

/// Exact integer determinant (Bareiss), used to certify unimodularity.
fn int_determinant(t: &DMatrix<i64>) -> i128 {
    let n = t.nrows();
    let mut m: Vec<Vec<i128>> = (0..n)
        .map(|r| (0..n).map(|c| t[(r, c)] as i128).collect())
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n.saturating_sub(1) {
        if m[k][k] == 0 {
            let pivot = match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => r,
                None => return 0,
            };
            m.swap(k, pivot);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

fn int_matvec(t: &DMatrix<i64>, v: &[i64]) -> Vec<i64> {
    let n = t.nrows();
    let mut out = vec![0i64; n];
    for (row, slot) in out.iter_mut().enumerate() {
        let mut acc = 0i64;
        for (col, &vc) in v.iter().enumerate() {
            acc += t[(row, col)] * vc;
        }
        *slot = acc;
    }
    out
}

fn add_scaled_int_column(t: &mut DMatrix<i64>, dst: usize, src: usize, factor: i64) -> Result<()> {
    for r in 0..t.nrows() {
        let scaled = t[(r, src)]
            .checked_mul(factor)
            .ok_or_else(|| Error::IllConditioned("transform overflow during reduction".into()))?;
        t[(r, dst)] = t[(r, dst)]
            .checked_add(scaled)
            .ok_or_else(|| Error::IllConditioned("transform overflow during reduction".into()))?;
    }
    Ok(())
}

fn add_scaled_int_row(t: &mut DMatrix<i64>, dst: usize, src: usize, factor: i64) -> Result<()> {
    for c in 0..t.ncols() {
        let scaled = t[(src, c)]
            .checked_mul(factor)
            .ok_or_else(|| Error::IllConditioned("transform overflow during reduction".into()))?;
        t[(dst, c)] = t[(dst, c)]
            .checked_add(scaled)
            .ok_or_else(|| Error::IllConditioned("transform overflow during reduction".into()))?;
    }
    Ok(())
}

/// Floating-point LLL reduction with delta in (1/4, 1), tracking the
/// unimodular transform. Both LLL conditions and determinant preservation
/// are re-verified on the output; failures surface as errors instead of a
/// silently unreduced basis.
pub fn lll_reduce(b: &DMatrix<f64>, delta: f64) -> Result<LatticeBasis> {
    let n = b.nrows();
    if n == 0 || b.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "expected square basis, got {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    if !(delta > 0.25 && delta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "delta must lie in (1/4, 1), got {delta}"
        )));
    }
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("basis has non-finite entries".into()));
    }

    let svd = b.clone().svd(false, false);
    let smax = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    let smin = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if smin <= 0.0 || smax / smin > CONDITION_CAP {
        return Err(Error::IllConditioned(format!(
            "basis condition {:.3e} exceeds {CONDITION_CAP:.1e}",
            if smin > 0.0 { smax / smin } else { f64::INFINITY }
        )));
    }
    let condition = smax / smin;
    let det_before = b.determinant().abs();

    let mut basis = b.clone();
    let mut transform = DMatrix::<i64>::identity(n, n);
    let mut inv_transform = DMatrix::<i64>::identity(n, n);
    let (mut mu, mut bstar, mut norm2) = gram_schmidt(&basis);

    let mut k = 1usize;
    while k < n {
        // Size-reduce column k against all earlier columns.
        for j in (0..k).rev() {
            let r = mu[(k, j)].round();
            if r != 0.0 {
                let ri = r as i64;
                let scaled = basis.column(j).clone_owned() * r;
                let mut col = basis.column_mut(k);
                col -= scaled;
                // Column op on the transform, matching row op on its inverse.
                add_scaled_int_column(&mut transform, k, j, -ri)?;
                add_scaled_int_row(&mut inv_transform, j, k, ri)?;
                let (m2, bs2, n2) = gram_schmidt(&basis);
                mu = m2;
                bstar = bs2;
                norm2 = n2;
            }
        }
        // Lovasz condition between columns k-1 and k.
        if norm2[k] >= (delta - mu[(k, k - 1)] * mu[(k, k - 1)]) * norm2[k - 1] {
            k += 1;
        } else {
            basis.swap_columns(k, k - 1);
            transform.swap_columns(k, k - 1);
            inv_transform.swap_rows(k, k - 1);
            let (m2, bs2, n2) = gram_schmidt(&basis);
            mu = m2;
            bstar = bs2;
            norm2 = n2;
            k = k.max(2) - 1;
        }
    }
    let _ = &bstar;

    // Post-hoc verification of the reduction contract.
    let (mu_f, bstar_f, norm2_f) = gram_schmidt(&basis);
    for i in 0..n {
        for j in 0..i {
            if mu_f[(i, j)].abs() > 0.5 + 1e-9 {
                return Err(Error::NumericalFailure(format!(
                    "size reduction violated: |mu[{i},{j}]| = {:.6}",
                    mu_f[(i, j)].abs()
                )));
            }
        }
    }
    for kk in 1..n {
        let lhs = norm2_f[kk] + mu_f[(kk, kk - 1)] * mu_f[(kk, kk - 1)] * norm2_f[kk - 1];
        if lhs < (delta - 1e-9) * norm2_f[kk - 1] {
            return Err(Error::NumericalFailure(format!(
                "Lovasz condition violated at column {kk}"
            )));
        }
    }
    let det_after = basis.determinant().abs();
    if (det_after - det_before).abs() > 1e-9 * det_before.max(f64::MIN_POSITIVE) {
        return Err(Error::NumericalFailure(format!(
            "determinant changed under reduction: {det_before:.12e} -> {det_after:.12e}"
        )));
    }
    let det_t = int_determinant(&transform);
    if det_t != 1 && det_t != -1 {
        return Err(Error::NumericalFailure(format!(
            "transform determinant {det_t} is not +-1"
        )));
    }
    // The tracked inverse must actually invert the transform.
    let product = &transform * &inv_transform;
    if product != DMatrix::<i64>::identity(n, n) {
        return Err(Error::NumericalFailure(
            "transform inverse tracking diverged".into(),
        ));
    }

    Ok(LatticeBasis {
        dim: n,
        columns: basis,
        transform,
        inv_transform,
        condition,
        mu: mu_f,
        bstar: bstar_f,
        bstar_norm2: norm2_f,
    })
}

/// Babai nearest-plane: walk the reduced basis from the last vector down,
/// rounding the residual's coefficient along each Gram-Schmidt direction.
pub fn babai_nearest_plane(lb: &LatticeBasis, target: &[f64]) -> Result<CvpSolution> {
    let n = lb.dim;
    if target.len() != n {
        return Err(Error::InvalidInput(format!(
            "target length {} does not match dimension {n}",
            target.len()
        )));
    }
    let mut rem = nalgebra::DVector::from_column_slice(target);
    let mut m = vec![0i64; n];
    for i in (0..n).rev() {
        let coeff = if lb.bstar_norm2[i] == 0.0 {
            0.0
        } else {
            rem.dot(&lb.bstar.column(i)) / lb.bstar_norm2[i]
        };
        let rounded = coeff.round();
        m[i] = rounded as i64;
        rem -= lb.columns.column(i).clone_owned() * rounded;
    }
    let distance = rem.norm();
    Ok(CvpSolution {
        k: lb.to_original(&m),
        distance,
        method: CvpMethod::Babai,
    })
}

/// Express `target` in reduced-basis coordinates using the cached
/// Gram-Schmidt data (back substitution; no extra factorization).
fn basis_coordinates(lb: &LatticeBasis, target: &[f64]) -> Vec<f64> {
    let n = lb.dim;
    let t = nalgebra::DVector::from_column_slice(target);
    let mut d = vec![0.0; n];
    for j in 0..n {
        d[j] = if lb.bstar_norm2[j] == 0.0 {
            0.0
        } else {
            t.dot(&lb.bstar.column(j)) / lb.bstar_norm2[j]
        };
    }
    let mut c = vec![0.0; n];
    for j in (0..n).rev() {
        let mut acc = d[j];
        for i in j + 1..n {
            acc -= lb.mu[(i, j)] * c[i];
        }
        c[j] = acc;
    }
    c
}

struct EnumState<'a> {
    lb: &'a LatticeBasis,
    coords: Vec<f64>,
    m: Vec<i64>,
    best2: f64,
    best_m: Vec<i64>,
    best_k: Vec<i64>,
}

impl EnumState<'_> {
    /// Depth-first Schnorr-Euchner walk over level `i` (levels descend to 0).
    fn descend(&mut self, i: usize, partial2: f64) {
        let n = self.lb.dim;
        // Projection center at this level given the choices above it.
        let mut center = self.coords[i];
        for j in i + 1..n {
            center -= self.lb.mu[(j, i)] * (self.m[j] as f64 - self.coords[j]);
        }
        let first = center.round();
        // Zig-zag outward from the nearest integer; contributions are
        // nondecreasing, so the first over-budget step in both directions
        // ends the level.
        let mut step = 0i64;
        loop {
            let candidates: &[i64] = if step == 0 {
                &[0]
            } else {
                &[step, -step]
            };
            let mut all_pruned = true;
            for &offset in candidates {
                let mi = first + offset as f64;
                let diff = mi - center;
                let contrib = self.lb.bstar_norm2[i] * diff * diff;
                if partial2 + contrib > self.best2 {
                    continue;
                }
                all_pruned = false;
                self.m[i] = mi as i64;
                if i == 0 {
                    let total = partial2 + contrib;
                    let k = self.lb.to_original(&self.m);
                    if total < self.best2 || (total == self.best2 && k < self.best_k) {
                        self.best2 = total;
                        self.best_m = self.m.clone();
                        self.best_k = k;
                    }
                } else {
                    self.descend(i - 1, partial2 + contrib);
                }
            }
            if all_pruned && step > 0 {
                break;
            }
            step += 1;
            // Even at budget zero the nearest candidate was tried; bail out
            // once offsets alone exceed any representable budget.
            if step > 1_000_000 {
                break;
            }
        }
    }
}

/// Exact CVP by Schnorr-Euchner enumeration seeded with the Babai solution.
///
/// `radius_hint <= 0` means "derive the initial radius from Babai". The
/// returned minimizer is in original coordinates; equal-distance ties pick
/// the lexicographically smallest k.
pub fn cvp_enumerate(lb: &LatticeBasis, target: &[f64], radius_hint: f64) -> Result<CvpSolution> {
    cvp_enumerate_capped(lb, target, radius_hint, DEFAULT_ENUM_CAP)
}

/// [`cvp_enumerate`] with an explicit dimension cap.
pub fn cvp_enumerate_capped(
    lb: &LatticeBasis,
    target: &[f64],
    radius_hint: f64,
    cap: usize,
) -> Result<CvpSolution> {
    let n = lb.dim;
    if target.len() != n {
        return Err(Error::InvalidInput(format!(
            "target length {} does not match dimension {n}",
            target.len()
        )));
    }
    if n > cap {
        return Err(Error::SolverCap(format!(
            "exact enumeration capped at dimension {cap} (got {n}); use the Babai solver instead"
        )));
    }
    let babai = babai_nearest_plane(lb, target)?;
    let mut best2 = babai.distance * babai.distance;
    if radius_hint > 0.0 && radius_hint.is_finite() {
        best2 = best2.min(radius_hint * radius_hint);
    }
    // Reduced coordinates of the Babai point, used as the incumbent.
    let babai_m = lb.to_reduced(&babai.k);

    let coords = basis_coordinates(lb, target);
    let mut state = EnumState {
        lb,
        coords,
        m: vec![0i64; n],
        best2,
        best_m: babai_m,
        best_k: babai.k.clone(),
    };
    state.descend(n - 1, 0.0);

    // Recompute the distance from the returned point directly.
    let point = {
        let mut p = nalgebra::DVector::zeros(n);
        for (j, &mj) in state.best_m.iter().enumerate() {
            p += lb.columns.column(j).clone_owned() * mj as f64;
        }
        p
    };
    let t = nalgebra::DVector::from_column_slice(target);
    let distance = (t - point).norm();

    Ok(CvpSolution {
        k: state.best_k,
        distance,
        method: CvpMethod::Exact,
    })
}

/// Exhaustive CVP oracle: scan the integer box of radius `box_radius`
/// around round(target) and minimize the raw quadratic form.
pub fn cvp_bruteforce(
    q: &MetricMatrix,
    target: &[f64],
    box_radius: i64,
) -> Result<CvpSolution> {
    let n = q.dim();
    if target.len() != n {
        return Err(Error::InvalidInput(format!(
            "target length {} does not match dimension {n}",
            target.len()
        )));
    }
    if box_radius < 0 {
        return Err(Error::InvalidInput("box radius must be nonnegative".into()));
    }
    let side = 2 * box_radius + 1;
    let total = (side as f64).powi(n as i32);
    if total > BRUTEFORCE_BOX_CAP {
        return Err(Error::ResourceLimit(format!(
            "brute-force box has {total:.3e} points (cap {BRUTEFORCE_BOX_CAP:.0e})"
        )));
    }
    let centers: Vec<i64> = target.iter().map(|x| x.round() as i64).collect();

    let mut k = vec![0i64; n];
    let mut best_k: Option<Vec<i64>> = None;
    let mut best = f64::INFINITY;
    let mut counters = vec![0i64; n];
    loop {
        for i in 0..n {
            k[i] = centers[i] - box_radius + counters[i];
        }
        let mut d2 = 0.0;
        for r in 0..n {
            let yr = target[r] - k[r] as f64;
            for c in 0..n {
                d2 += yr * q.entries()[(r, c)] * (target[c] - k[c] as f64);
            }
        }
        // Strict improvement keeps the first (lexicographically smallest) k
        // among exact ties, because the odometer runs in lexicographic order.
        if d2 < best {
            best = d2;
            best_k = Some(k.clone());
        }
        // Odometer increment, last coordinate fastest... keep lexicographic
        // order on k by incrementing from the right.
        let mut pos = n;
        while pos > 0 {
            pos -= 1;
            counters[pos] += 1;
            if counters[pos] < side {
                break;
            }
            counters[pos] = 0;
            if pos == 0 {
                let solution = CvpSolution {
                    k: best_k.expect("box contains at least one point"),
                    distance: best.max(0.0).sqrt(),
                    method: CvpMethod::Bruteforce,
                };
                return Ok(solution);
            }
        }
    }
}
