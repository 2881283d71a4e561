//! Discretization of the covariance operator on a time grid, its spectrum,
//! and the log-det / trace / Cholesky primitives built on top of it.
//!
//! The operator is represented by the weighted kernel matrix
//! `A = W^{1/2} K W^{1/2}` with `K[(i,j)] = r(t_i, t_j)` and `W` the diagonal
//! of quadrature weights, so the Euclidean geometry of `A`'s coordinates is
//! the weighted L^2 geometry of grid functions. Eigenvalues of `A` converge
//! to the eigenvalues of the integral operator as the grid refines.

use crate::error::{Error, Result};
use crate::kernels::{check_orthonormal, KernelFamily, KernelSpec, TimeGrid};
use crate::linalg::{jacobi_eigh, Matrix};

pub use crate::linalg::{cholesky, CholeskyFactor};

/// Negative eigenvalues no larger than this fraction of the top eigenvalue
/// are treated as discretization noise and clamped to zero.
pub const EIGENVALUE_CLAMP_REL: f64 = 1e-10;
/// Beyond this relative magnitude a negative eigenvalue means the input was
/// not a covariance; the decomposition is rejected instead of clamped.
pub const EIGENVALUE_NEGATIVE_REL: f64 = 1e-8;

/// A covariance operator discretized on a time grid.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    grid: TimeGrid,
    channel_dim: usize,
    matrix: Matrix,
}

impl DiscretizedOperator {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Number of channels d of the underlying kernel.
    pub fn channel_dim(&self) -> usize {
        self.channel_dim
    }

    /// Total coordinate count N = n * d.
    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    /// The weighted kernel matrix A.
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Quadrature weight attached to coordinate `index` (time-major layout:
    /// coordinate = time index * d + channel).
    pub fn coordinate_weight(&self, index: usize) -> f64 {
        self.grid.weights()[index / self.channel_dim]
    }
}

/// Assemble `A = W^{1/2} K W^{1/2}` for the kernel on the given grid.
///
/// Coordinates are laid out time-major (all channels of t_1, then t_2, ...),
/// which is the order sequential conditioning walks through.
pub fn discretize(spec: &KernelSpec, grid: &TimeGrid) -> Result<DiscretizedOperator> {
    if (spec.horizon() - grid.horizon()).abs() > 1e-12 * spec.horizon() {
        return Err(Error::Domain(format!(
            "kernel horizon {} does not match grid horizon {}",
            spec.horizon(),
            grid.horizon()
        )));
    }
    if let KernelFamily::FiniteRank { basis, .. } = spec.family() {
        check_orthonormal(basis, grid)?;
    }
    let d = spec.dim();
    let n = grid.len();
    let size = n * d;
    let nodes = grid.nodes();
    let weights = grid.weights();
    let mut a = Matrix::zeros(size, size);
    for ti in 0..n {
        for tj in ti..n {
            let block = spec.eval(nodes[ti], nodes[tj])?;
            let scale = (weights[ti] * weights[tj]).sqrt();
            for ci in 0..d {
                for cj in 0..d {
                    let value = scale * block[(ci, cj)];
                    a[(ti * d + ci, tj * d + cj)] = value;
                    a[(tj * d + cj, ti * d + ci)] = value;
                }
            }
        }
    }
    Ok(DiscretizedOperator { grid: grid.clone(), channel_dim: d, matrix: a })
}

/// Spectrum of a discretized covariance operator: eigenvalues nonincreasing
/// and clamped at zero, eigenvectors orthonormal as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    vectors: Matrix,
}

impl Spectrum {
    /// Build a spectrum directly from nonnegative eigenvalues (the vectors
    /// are the coordinate basis). Handy for closed-form test spectra.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.iter().any(|l| *l < 0.0 || !l.is_finite()) {
            return Err(Error::Domain("eigenvalues must be nonnegative and finite".into()));
        }
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).expect("NaN eigenvalue"));
        let n = eigenvalues.len();
        Ok(Self { eigenvalues, vectors: Matrix::identity(n) })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Number of strictly positive eigenvalues.
    pub fn rank(&self) -> usize {
        self.eigenvalues.iter().take_while(|l| **l > 0.0).count()
    }

    /// Trace s_1 = sum of eigenvalues.
    pub fn total_power(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

/// Eigendecompose the operator with the cyclic Jacobi solver. Small negative
/// eigenvalues (discretization noise) are clamped to zero.
pub fn eigendecompose(op: &DiscretizedOperator) -> Result<Spectrum> {
    let eig = jacobi_eigh(op.matrix(), true)?;
    let clamped = clamp_spectrum(eig.values)?;
    Ok(Spectrum { eigenvalues: clamped, vectors: eig.vectors.expect("vectors requested") })
}

/// Eigenvalues only: same solver, no eigenvector accumulation. Used where
/// only the spectrum enters (Toeplitz averages at large N).
pub fn eigenvalues_only(matrix: &Matrix) -> Result<Vec<f64>> {
    let eig = jacobi_eigh(matrix, false)?;
    clamp_spectrum(eig.values)
}

fn clamp_spectrum(values: Vec<f64>) -> Result<Vec<f64>> {
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    if let Some(worst) = values.last() {
        if *worst < -EIGENVALUE_NEGATIVE_REL * top.max(f64::MIN_POSITIVE) {
            return Err(Error::Numeric(format!(
                "matrix is not positive semidefinite: eigenvalue {worst:.6e} \
                 against maximum {top:.6e}"
            )));
        }
    }
    // Noise-level values of either sign are zeroed so ranks and CSV exports
    // come out clean.
    let floor = EIGENVALUE_CLAMP_REL * top;
    Ok(values.into_iter().map(|l| if l < floor { 0.0 } else { l }).collect())
}

/// Power sum s_k = sum_i lambda_i^k of the spectrum.
pub fn schatten_sum(spectrum: &Spectrum, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("Schatten power k must be at least 1".into()));
    }
    Ok(schatten_sum_eigs(spectrum.eigenvalues(), k))
}

pub fn schatten_sum_eigs(eigenvalues: &[f64], k: u32) -> f64 {
    eigenvalues.iter().map(|l| l.powi(k as i32)).sum()
}

/// `log det(I + gamma A) = sum_i log(1 + gamma lambda_i)`, evaluated with
/// `ln_1p` so small-gamma values keep full relative accuracy.
pub fn logdet_perturbation(spectrum: &Spectrum, gamma: f64) -> Result<f64> {
    if gamma < 0.0 {
        return Err(Error::Domain(format!("gamma must be nonnegative, got {gamma}")));
    }
    Ok(logdet_eigs(spectrum.eigenvalues(), gamma))
}

pub fn logdet_eigs(eigenvalues: &[f64], gamma: f64) -> f64 {
    eigenvalues.iter().map(|l| (gamma * l).ln_1p()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::cosine_basis;
    use crate::rng::SplitMix64;

    #[test]
    fn finite_rank_spectrum_is_preserved() {
        let grid = TimeGrid::midpoint(1.0, 16).unwrap();
        let basis = cosine_basis(&grid, 2);
        let spec = KernelSpec::finite_rank(vec![1.0, 0.5], basis, 1.0).unwrap();
        let op = discretize(&spec, &grid).unwrap();
        let s = eigendecompose(&op).unwrap();
        assert!((s.eigenvalues()[0] - 1.0).abs() < 1e-10);
        assert!((s.eigenvalues()[1] - 0.5).abs() < 1e-10);
        for l in &s.eigenvalues()[2..] {
            assert!(l.abs() < 1e-10);
        }
        assert_eq!(s.rank(), 2);
    }

    #[test]
    fn brownian_eigenvalues_match_analytic() {
        let spec = KernelSpec::brownian_motion(1.0).unwrap();
        let grid = TimeGrid::midpoint(1.0, 200).unwrap();
        let op = discretize(&spec, &grid).unwrap();
        let s = eigendecompose(&op).unwrap();
        let analytic = spec.analytic_spectrum(5).unwrap();
        // 0.5% agreement at n = 200 for the leading eigenvalue.
        assert!((s.eigenvalues()[0] - analytic[0]).abs() / analytic[0] < 5e-3);
    }

    #[test]
    fn brownian_first_five_converge_at_n400() {
        let spec = KernelSpec::brownian_motion(1.0).unwrap();
        let grid = TimeGrid::midpoint(1.0, 400).unwrap();
        let op = discretize(&spec, &grid).unwrap();
        let s = eigendecompose(&op).unwrap();
        let analytic = spec.analytic_spectrum(5).unwrap();
        for i in 0..5 {
            let rel = (s.eigenvalues()[i] - analytic[i]).abs() / analytic[i];
            assert!(rel < 5e-3, "eigenvalue {i}: relative error {rel:.2e}");
        }
    }

    #[test]
    fn exponential_trace_is_horizon() {
        let spec = KernelSpec::exponential(1.0, 1.0, 1.0).unwrap();
        for n in [10, 100, 333] {
            let grid = TimeGrid::midpoint(1.0, n).unwrap();
            let op = discretize(&spec, &grid).unwrap();
            assert!((op.matrix().trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_matches_weighted_diagonal() {
        let spec = KernelSpec::matrix_stationary(
            vec![
                crate::kernels::ExponentialChannel { variance: 1.0, rate: 1.0 },
                crate::kernels::ExponentialChannel { variance: 2.0, rate: 0.3 },
            ],
            2.0,
        )
        .unwrap();
        let grid = TimeGrid::midpoint(2.0, 25).unwrap();
        let op = discretize(&spec, &grid).unwrap();
        // r(t, t) has trace 3, total weight 2.
        assert!((op.matrix().trace() - 6.0).abs() < 1e-12);
        assert_eq!(op.size(), 50);
        assert!(op.matrix().max_asymmetry() == 0.0);
    }

    #[test]
    fn eigenvalue_refinement_is_monotone() {
        let spec = KernelSpec::brownian_motion(1.0).unwrap();
        let analytic = spec.analytic_spectrum(5).unwrap();
        let err = |n: usize| -> Vec<f64> {
            let grid = TimeGrid::midpoint(1.0, n).unwrap();
            let s = eigendecompose(&discretize(&spec, &grid).unwrap()).unwrap();
            (0..5).map(|i| (s.eigenvalues()[i] - analytic[i]).abs()).collect()
        };
        let coarse = err(50);
        let fine = err(100);
        for i in 0..5 {
            assert!(fine[i] < coarse[i], "eigenvalue {i} error did not shrink");
        }
    }

    #[test]
    fn schatten_sums() {
        let s = Spectrum::from_eigenvalues(vec![1.0, 0.5]).unwrap();
        assert!((schatten_sum(&s, 1).unwrap() - 1.5).abs() < 1e-15);
        assert!((schatten_sum(&s, 2).unwrap() - 1.25).abs() < 1e-15);
        assert!((schatten_sum(&s, 3).unwrap() - 1.125).abs() < 1e-15);
        assert!(schatten_sum(&s, 0).is_err());
    }

    #[test]
    fn logdet_values() {
        let one = Spectrum::from_eigenvalues(vec![1.0]).unwrap();
        assert!((logdet_perturbation(&one, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let two = Spectrum::from_eigenvalues(vec![1.0, 0.5]).unwrap();
        assert!((logdet_perturbation(&two, 1.0).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert_eq!(logdet_perturbation(&two, 0.0).unwrap(), 0.0);
        assert!(logdet_perturbation(&two, -1.0).is_err());
    }

    #[test]
    fn spectrum_route_matches_cholesky_route() {
        // log det(I + gamma A) via eigenvalues vs via Cholesky.
        let mut rng = SplitMix64::new(3);
        let n = 14;
        let g = Matrix::from_fn(n, n, |_, _| 2.0 * rng.next_f64() - 1.0);
        let a = g.matmul_transpose(&g);
        let eig = jacobi_eigh(&a, false).unwrap();
        let gamma = 0.8;
        let via_spectrum: f64 = eig.values.iter().map(|l| (gamma * l).ln_1p()).sum();
        let mut shifted = a.clone();
        for i in 0..n {
            for j in 0..n {
                shifted[(i, j)] *= gamma;
            }
            shifted[(i, i)] += 1.0;
        }
        let via_cholesky = cholesky(&shifted).unwrap().log_det();
        assert!((via_spectrum - via_cholesky).abs() <= 1e-8 * via_spectrum.abs());
    }

    #[test]
    fn permutation_invariance_of_logdet() {
        // log det(I + gamma P A P^T) is independent of the permutation P.
        let spec = KernelSpec::exponential(1.0, 1.0, 1.0).unwrap();
        let grid = TimeGrid::midpoint(1.0, 12).unwrap();
        let a = discretize(&spec, &grid).unwrap().matrix().clone();
        let s = eigendecompose(&discretize(&spec, &grid).unwrap()).unwrap();
        let gamma = 1.3;
        let reference = logdet_perturbation(&s, gamma).unwrap();
        let mut rng = SplitMix64::new(11);
        for _ in 0..5 {
            let mut perm: Vec<usize> = (0..12).collect();
            for i in (1..12).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                perm.swap(i, j);
            }
            let mut shifted = Matrix::from_fn(12, 12, |i, j| gamma * a[(perm[i], perm[j])]);
            for i in 0..12 {
                shifted[(i, i)] += 1.0;
            }
            let permuted = cholesky(&shifted).unwrap().log_det();
            assert!((permuted - reference).abs() <= 1e-10 * reference.abs().max(1.0));
        }
    }

    #[test]
    fn kernel_matrices_are_psd() {
        let grid = TimeGrid::midpoint(2.0, 24).unwrap();
        let specs = vec![
            KernelSpec::exponential(1.4, 0.6, 2.0).unwrap(),
            KernelSpec::brownian_motion(2.0).unwrap(),
            KernelSpec::brownian_bridge(2.0).unwrap(),
            KernelSpec::squared_exponential(1.0, 0.5, 2.0).unwrap(),
        ];
        for spec in &specs {
            let op = discretize(spec, &grid).unwrap();
            let eig = jacobi_eigh(op.matrix(), false).unwrap();
            let top = eig.values[0];
            let bottom = *eig.values.last().unwrap();
            assert!(bottom >= -1e-8 * top, "kernel matrix has eigenvalue {bottom:.3e}");
        }
    }
}
