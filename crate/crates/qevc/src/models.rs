//! Finite-dimensional Hamiltonians and their spectral decompositions.
//!
//! Everything downstream (Krylov bases, complexity averages, winding
//! metrics) consumes the full eigensystem, so this module works with dense
//! matrices and a dense Hermitian eigensolver throughout. Intended scale is
//! desk-sized: dimensions up to a few thousand, routinely tested up to 256.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

/// Relative hermiticity tolerance: max|H - H†| <= HERMITICITY_TOL * max|H|.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Relative unitarity tolerance for eigenvector matrices.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Relative reconstruction tolerance: max|U diag(E) U† - H| <= RECON_TOL * max|E|.
pub const RECON_TOL: f64 = 1e-8;

/// Gaussian ensemble for random Hamiltonians.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// Real symmetric (orthogonal ensemble).
    RealSymmetric,
    /// Complex Hermitian (unitary ensemble).
    ComplexHermitian,
}

/// Boundary condition for the spin chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Open,
    Periodic,
}

/// A validated D x D Hermitian matrix in dimensionless energy units.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    dim: usize,
    entries: DMatrix<Complex64>,
}

/// On-disk Hamiltonian format: real and imaginary parts, row-major.
#[derive(Serialize, Deserialize)]
struct HamiltonianFile {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl HermitianOperator {
    /// Wrap a matrix, checking hermiticity and finiteness.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || entries.ncols() != dim {
            return Err(Error::InvalidDimension(format!(
                "expected square matrix with D >= 1, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let max_abs = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let herm_resid = (&entries - entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm_resid > HERMITICITY_TOL * max_abs {
            return Err(Error::InvalidInput(format!(
                "hermiticity residual {herm_resid:.3e} exceeds {:.3e}",
                HERMITICITY_TOL * max_abs
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm; upper bound on max|E| used as a spectral scale where
    /// the eigenvalues are not yet available.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Load from JSON (`{dim, re, im}`, row-major D^2 reals each).
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: HamiltonianFile = serde_json::from_str(&text)?;
        let d = file.dim;
        if file.re.len() != d * d || file.im.len() != d * d {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for dim {d}, got re={}, im={}",
                d * d,
                file.re.len(),
                file.im.len()
            )));
        }
        let entries = DMatrix::from_row_iterator(
            d,
            d,
            file.re
                .iter()
                .zip(file.im.iter())
                .map(|(&r, &i)| Complex64::new(r, i)),
        );
        Self::new(entries)
    }

    /// Save as JSON (`{dim, re, im}`, row-major).
    pub fn to_json_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let d = self.dim;
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                let z = self.entries[(r, c)];
                re.push(z.re);
                im.push(z.im);
            }
        }
        let file = HamiltonianFile { dim: d, re, im };
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }
}

/// Eigensystem of a Hermitian operator: sorted energies, phase-fixed
/// eigenvector columns, and the smallest level spacing.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    energies: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
    min_gap: f64,
}

impl SpectralDecomposition {
    /// Energies sorted ascending.
    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// Unitary matrix whose column n is the eigenvector |n>.
    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    /// Smallest |E_n - E_m| over n != m (infinite for D = 1).
    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// E_max - E_min.
    pub fn spectral_range(&self) -> f64 {
        self.energies[self.energies.len() - 1] - self.energies[0]
    }

    pub fn max_abs_energy(&self) -> f64 {
        self.energies.iter().map(|e| e.abs()).fold(0.0, f64::max)
    }

    /// Default near-degeneracy threshold: 1e-9 of the spectral range
    /// (floored at 1e-12 absolute so a flat spectrum is still flagged).
    pub fn default_gap_tol(&self) -> f64 {
        (1e-9 * self.spectral_range()).max(1e-12)
    }

    /// Overlaps <n|v> of an arbitrary state with the eigenbasis.
    pub fn overlaps_of(&self, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "state length {} does not match dimension {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(self.eigenvectors.adjoint() * v)
    }
}

/// Draw a random Hamiltonian from the orthogonal or unitary Gaussian
/// ensemble, deterministically for a fixed seed.
///
/// Convention: diagonal entries are real N(0, 1); each independent real
/// component off the diagonal is N(0, 1/2) for the real-symmetric ensemble
/// and N(0, 1/4) per real/imaginary part for the complex-Hermitian one, so
/// the diagonal variance is twice the total off-diagonal variance in both
/// cases and the semicircle support is ~[-sqrt(2D), sqrt(2D)].
pub fn build_random_hermitian(
    dim: usize,
    ensemble: Ensemble,
    rng_seed: u64,
) -> Result<HermitianOperator> {
    if dim == 0 {
        return Err(Error::InvalidDimension("D = 0 requested".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut h = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    // Upper triangle row by row; draw order is part of the determinism contract.
    for i in 0..dim {
        let d: f64 = rng.sample(StandardNormal);
        h[(i, i)] = Complex64::new(d, 0.0);
        for j in (i + 1)..dim {
            let z = match ensemble {
                Ensemble::RealSymmetric => {
                    let x: f64 = rng.sample(StandardNormal);
                    Complex64::new(x * std::f64::consts::FRAC_1_SQRT_2, 0.0)
                }
                Ensemble::ComplexHermitian => {
                    let x: f64 = rng.sample(StandardNormal);
                    let y: f64 = rng.sample(StandardNormal);
                    Complex64::new(0.5 * x, 0.5 * y)
                }
            };
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    HermitianOperator::new(h)
}

/// Maximum spin-chain length (dense 2^n storage).
pub const MAX_SPIN_SITES: usize = 14;

/// Ising chain with transverse and longitudinal fields:
///
/// H = sum_i sz_i sz_{i+1} + g_x sum_i sx_i + g_z sum_i sz_i
///
/// Site ordering is little-endian: site 0 is the least significant bit of
/// the computational-basis index, and sz|0> = +|0>. Periodic boundaries add
/// the wrap bond (n-1, 0) for n >= 3; for n <= 2 the wrap bond is absent or
/// would duplicate an existing one, so open and periodic coincide.
pub fn build_spin_chain(
    n_sites: usize,
    g_x: f64,
    g_z: f64,
    boundary: Boundary,
) -> Result<HermitianOperator> {
    if n_sites == 0 || n_sites > MAX_SPIN_SITES {
        return Err(Error::InvalidDimension(format!(
            "n_sites must be in 1..={MAX_SPIN_SITES}, got {n_sites}"
        )));
    }
    if !g_x.is_finite() || !g_z.is_finite() {
        return Err(Error::InvalidInput("couplings must be finite".into()));
    }
    let dim = 1usize << n_sites;
    let mut h = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));

    let mut bonds: Vec<(usize, usize)> = (0..n_sites.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic && n_sites >= 3 {
        bonds.push((n_sites - 1, 0));
    }

    let sz = |state: usize, site: usize| -> f64 {
        if (state >> site) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    };

    for state in 0..dim {
        let mut diag = 0.0;
        for &(a, b) in &bonds {
            diag += sz(state, a) * sz(state, b);
        }
        for site in 0..n_sites {
            diag += g_z * sz(state, site);
        }
        h[(state, state)] = Complex64::new(diag, 0.0);
        // sx_i flips bit i.
        for site in 0..n_sites {
            let flipped = state ^ (1 << site);
            h[(flipped, state)] += Complex64::new(g_x, 0.0);
        }
    }
    HermitianOperator::new(h)
}

/// Full eigendecomposition with ascending energies and deterministic
/// eigenvector phases (largest-magnitude component made real positive).
pub fn diagonalize(h: &HermitianOperator) -> Result<SpectralDecomposition> {
    let dim = h.dim();
    let (raw_energies, raw_vectors) = crate::eigen::hermitian_eigen(h.entries()).ok_or_else(|| {
        Error::NumericalFailure(format!(
            "eigensolver did not converge: dim={dim}, max|H|={:.6e}, ||H||_F={:.6e}",
            h.max_abs(),
            h.frobenius_norm()
        ))
    })?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| raw_energies[a].total_cmp(&raw_energies[b]));

    let energies = DVector::from_iterator(dim, order.iter().map(|&k| raw_energies[k]));
    let mut vectors = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for (n, &k) in order.iter().enumerate() {
        let mut col = raw_vectors.column(k).clone_owned();
        // Phase fix: rotate so the first largest-magnitude component is real positive.
        let mut best = 0usize;
        let mut best_mag = 0.0;
        for (idx, z) in col.iter().enumerate() {
            let m = z.norm();
            if m > best_mag {
                best_mag = m;
                best = idx;
            }
        }
        if best_mag > 0.0 {
            let phase = col[best] / Complex64::new(best_mag, 0.0);
            col *= phase.conj();
        }
        vectors.set_column(n, &col);
    }

    let unit_resid = (vectors.adjoint() * &vectors - DMatrix::identity(dim, dim))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if unit_resid > UNITARITY_TOL {
        return Err(Error::NumericalFailure(format!(
            "eigenvector unitarity residual {unit_resid:.3e} exceeds {UNITARITY_TOL:.1e}"
        )));
    }
    let recon = &vectors
        * DMatrix::from_diagonal(&energies.map(|e| Complex64::new(e, 0.0)))
        * vectors.adjoint();
    let recon_resid = (&recon - h.entries()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let max_e = energies.iter().map(|e| e.abs()).fold(0.0, f64::max);
    if recon_resid > RECON_TOL * max_e && recon_resid > 0.0 {
        return Err(Error::NumericalFailure(format!(
            "reconstruction residual {recon_resid:.3e} exceeds {:.3e}",
            RECON_TOL * max_e
        )));
    }

    let min_gap = if dim < 2 {
        f64::INFINITY
    } else {
        (1..dim)
            .map(|n| energies[n] - energies[n - 1])
            .fold(f64::INFINITY, f64::min)
    };

    Ok(SpectralDecomposition {
        energies,
        eigenvectors: vectors,
        min_gap,
    })
}

/// All index pairs (n, m), n < m, with |E_n - E_m| < gap_tol. An empty
/// result certifies the spectrum as nondegenerate at that tolerance.
pub fn check_nondegenerate(spec: &SpectralDecomposition, gap_tol: f64) -> Vec<(usize, usize)> {
    let e = spec.energies();
    let d = e.len();
    let mut pairs = Vec::new();
    for n in 0..d {
        for m in (n + 1)..d {
            // Energies are sorted, so once the gap opens up we can stop.
            if e[m] - e[n] >= gap_tol {
                break;
            }
            pairs.push((n, m));
        }
    }
    pairs
}
