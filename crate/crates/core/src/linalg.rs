//! Dense symmetric linear algebra: a minimal matrix type, a cyclic Jacobi
//! eigensolver and a Cholesky factorization with a bounded jitter policy.
//!
//! Storage is plain row-major `Vec<f64>`. The sizes this crate works at
//! (N up to ~1200) do not warrant a BLAS dependency, and the Jacobi solver
//! keeps eigenvector orthogonality at the 1e-12 level that the spectral
//! identities downstream rely on.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    /// `self * other^T` without materializing the transpose.
    pub fn matmul_transpose(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "matmul_transpose shape mismatch");
        Matrix::from_fn(self.rows, other.rows, |i, j| {
            self.row(i).iter().zip(other.row(j)).map(|(a, b)| a * b).sum()
        })
    }

    /// Symmetric rank-one update `self += coef * v v^T`.
    pub fn rank_one_update(&mut self, v: &[f64], coef: f64) {
        assert_eq!(self.rows, v.len());
        assert_eq!(self.cols, v.len());
        for i in 0..self.rows {
            let vi = coef * v[i];
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (r, &vj) in row.iter_mut().zip(v) {
                *r += vi * vj;
            }
        }
    }

    /// Largest absolute asymmetry |a_ij - a_ji|.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues in nonincreasing
/// order. `vectors` holds the eigenvectors as columns when requested.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Option<Matrix>,
}

/// Off-diagonal Frobenius convergence threshold, relative to the Frobenius
/// norm of the input.
pub const JACOBI_REL_THRESHOLD: f64 = 1e-12;
/// Sweep cap for the cyclic Jacobi iteration.
pub const JACOBI_MAX_SWEEPS: usize = 50;
/// Relative asymmetry accepted in an input billed as symmetric.
const SYMMETRY_REL_TOL: f64 = 1e-8;

fn off_diagonal_norm(m: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let x = m[i * n + j];
            acc += 2.0 * x * x;
        }
    }
    acc.sqrt()
}

/// Cyclic Jacobi eigensolver for a symmetric matrix.
///
/// Rotations are applied until the off-diagonal Frobenius norm drops below
/// `1e-12 * ||A||_F`, with a cap of 50 sweeps. The iteration is strictly
/// sequential, so the output is bit-identical for a fixed input.
pub fn jacobi_eigh(a: &Matrix, compute_vectors: bool) -> Result<SymEigen> {
    if !a.is_square() {
        return Err(Error::Domain(format!(
            "eigendecomposition requires a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let fro = a.frobenius_norm();
    if a.max_asymmetry() > SYMMETRY_REL_TOL * fro.max(1.0) {
        return Err(Error::Domain(format!(
            "matrix is not symmetric: max asymmetry {:.3e}",
            a.max_asymmetry()
        )));
    }
    let mut m = a.data.clone();
    let mut v = compute_vectors.then(|| Matrix::identity(n).data);

    if fro > 0.0 {
        let threshold = JACOBI_REL_THRESHOLD * fro;
        // Elements below `skip` cannot lift the off-diagonal norm above the
        // threshold even if every off-diagonal entry sat at that size.
        let skip = threshold / (n as f64).max(1.0);
        let mut converged = false;
        for sweep in 0..=JACOBI_MAX_SWEEPS {
            let off = off_diagonal_norm(&m, n);
            if off <= threshold {
                converged = true;
                break;
            }
            if sweep == JACOBI_MAX_SWEEPS {
                return Err(Error::Numeric(format!(
                    "Jacobi eigensolver did not converge: off-diagonal norm {:.3e} \
                     above target {:.3e} after {} sweeps (n = {})",
                    off, threshold, JACOBI_MAX_SWEEPS, n
                )));
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = m[p * n + q];
                    if apq.abs() <= skip {
                        continue;
                    }
                    let app = m[p * n + p];
                    let aqq = m[q * n + q];
                    let tau = (aqq - app) / (2.0 * apq);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        1.0 / (tau - (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for j in 0..n {
                        let mp = m[p * n + j];
                        let mq = m[q * n + j];
                        m[p * n + j] = c * mp - s * mq;
                        m[q * n + j] = s * mp + c * mq;
                    }
                    for i in 0..n {
                        let mp = m[i * n + p];
                        let mq = m[i * n + q];
                        m[i * n + p] = c * mp - s * mq;
                        m[i * n + q] = s * mp + c * mq;
                    }
                    if let Some(v) = v.as_mut() {
                        for i in 0..n {
                            let vp = v[i * n + p];
                            let vq = v[i * n + q];
                            v[i * n + p] = c * vp - s * vq;
                            v[i * n + q] = s * vp + c * vq;
                        }
                    }
                }
            }
        }
        debug_assert!(converged);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].partial_cmp(&m[i * n + i]).expect("NaN eigenvalue"));
    let values: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = v.map(|v| {
        Matrix::from_fn(n, n, |i, j| v[i * n + order[j]])
    });
    Ok(SymEigen { values, vectors })
}

/// Lower-triangular Cholesky factor together with the diagonal jitter that
/// had to be added (0 for a cleanly positive-definite input).
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub lower: Matrix,
    pub jitter: f64,
}

impl CholeskyFactor {
    /// log det of the factored matrix, `2 * sum(log diag(L))`.
    pub fn log_det(&self) -> f64 {
        (0..self.lower.rows()).map(|i| self.lower[(i, i)].ln()).sum::<f64>() * 2.0
    }
}

/// Jitter escalation ladder, as multiples of the trace. The final rung is
/// the documented cap; beyond it the matrix is reported as not PD.
const CHOLESKY_JITTER_SCALES: &[f64] = &[0.0, 1e-15, 1e-14, 1e-13, 1e-12];

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// A matrix that fails the factorization is retried with a diagonal jitter
/// escalating up to `1e-12 * trace`; the jitter actually used is recorded in
/// the returned factor.
pub fn cholesky(m: &Matrix) -> Result<CholeskyFactor> {
    if !m.is_square() {
        return Err(Error::Domain(format!(
            "Cholesky requires a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    if m.max_asymmetry() > SYMMETRY_REL_TOL * m.frobenius_norm().max(1.0) {
        return Err(Error::Domain(format!(
            "matrix is not symmetric: max asymmetry {:.3e}",
            m.max_asymmetry()
        )));
    }
    let trace = m.trace();
    for &scale in CHOLESKY_JITTER_SCALES {
        let jitter = scale * trace;
        if let Some(lower) = try_cholesky(m, jitter) {
            return Ok(CholeskyFactor { lower, jitter });
        }
    }
    Err(Error::Numeric(format!(
        "Cholesky pivot failure after maximum jitter {:.3e} (matrix not positive definite)",
        1e-12 * trace
    )))
}

fn try_cholesky(m: &Matrix, jitter: f64) -> Option<Matrix> {
    let n = m.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m[(i, j)];
            if i == j {
                sum += jitter;
            }
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[(i, i)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Inverse of the unit lower-triangular matrix `I - F`, where `F` is
/// strictly lower triangular, by columnwise forward substitution.
pub fn unit_lower_inverse_of_difference(f: &Matrix) -> Matrix {
    let n = f.rows();
    let mut g = Matrix::zeros(n, n);
    for col in 0..n {
        g[(col, col)] = 1.0;
        for i in (col + 1)..n {
            let mut acc = 0.0;
            for k in col..i {
                acc += f[(i, k)] * g[(k, col)];
            }
            g[(i, col)] = acc;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_symmetric(n: usize, seed: u64) -> Matrix {
        let mut rng = SplitMix64::new(seed);
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let x = 2.0 * rng.next_f64() - 1.0;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        m
    }

    fn random_spd(n: usize, seed: u64) -> Matrix {
        let mut rng = SplitMix64::new(seed);
        let g = Matrix::from_fn(n, n, |_, _| 2.0 * rng.next_f64() - 1.0);
        g.matmul_transpose(&g)
    }

    #[test]
    fn jacobi_identity() {
        let eig = jacobi_eigh(&Matrix::identity(3), true).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn jacobi_rotated_diagonal() {
        // diag(2, 1) conjugated by a rotation keeps its eigenvalues.
        let (c, s) = (0.6, 0.8);
        let r = Matrix::from_fn(2, 2, |i, j| [[c, -s], [s, c]][i][j]);
        let d = Matrix::from_fn(2, 2, |i, j| [[2.0, 0.0], [0.0, 1.0]][i][j]);
        let a = r.matmul(&d).matmul_transpose(&r);
        let eig = jacobi_eigh(&a, false).unwrap();
        assert!((eig.values[0] - 2.0).abs() < 1e-12);
        assert!((eig.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_reconstruction_and_orthogonality() {
        let a = random_symmetric(12, 7);
        let eig = jacobi_eigh(&a, true).unwrap();
        let v = eig.vectors.as_ref().unwrap();
        // V^T V = I
        let vtv = v.transpose().matmul(v);
        for i in 0..12 {
            for j in 0..12 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((vtv[(i, j)] - want).abs() < 1e-12);
            }
        }
        // A = V diag(values) V^T
        let mut recon = Matrix::zeros(12, 12);
        for k in 0..12 {
            let col = v.column(k);
            recon.rank_one_update(&col, eig.values[k]);
        }
        for i in 0..12 {
            for j in 0..12 {
                assert!((recon[(i, j)] - a[(i, j)]).abs() < 1e-10 * a.frobenius_norm());
            }
        }
        let sum: f64 = eig.values.iter().sum();
        assert!((sum - a.trace()).abs() < 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn jacobi_rejects_asymmetric() {
        let mut a = Matrix::identity(3);
        a[(0, 1)] = 0.5;
        assert!(matches!(jacobi_eigh(&a, false), Err(Error::Domain(_))));
    }

    #[test]
    fn cholesky_identity() {
        let f = cholesky(&Matrix::identity(4)).unwrap();
        assert_eq!(f.jitter, 0.0);
        for i in 0..4 {
            assert!((f.lower[(i, i)] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cholesky_diagonal() {
        let m = Matrix::from_fn(2, 2, |i, j| [[4.0, 0.0], [0.0, 9.0]][i][j]);
        let f = cholesky(&m).unwrap();
        assert!((f.lower[(0, 0)] - 2.0).abs() < 1e-15);
        assert!((f.lower[(1, 1)] - 3.0).abs() < 1e-15);
        assert_eq!(f.lower[(1, 0)], 0.0);
    }

    #[test]
    fn cholesky_reconstructs_random_spd() {
        let m = random_spd(10, 21);
        let f = cholesky(&m).unwrap();
        let recon = f.lower.matmul_transpose(&f.lower);
        let mut err = 0.0_f64;
        for i in 0..10 {
            for j in 0..10 {
                err += (recon[(i, j)] - m[(i, j)]).powi(2);
            }
        }
        assert!(err.sqrt() <= 1e-10 * m.frobenius_norm());
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = Matrix::from_fn(2, 2, |i, j| [[1.0, 0.0], [0.0, -1.0]][i][j]);
        assert!(matches!(cholesky(&m), Err(Error::Numeric(_))));
    }

    #[test]
    fn cholesky_log_det_matches_eigenvalues() {
        let m = random_spd(8, 5);
        let f = cholesky(&m).unwrap();
        let eig = jacobi_eigh(&m, false).unwrap();
        let want: f64 = eig.values.iter().map(|l| l.ln()).sum();
        assert!((f.log_det() - want).abs() < 1e-9 * want.abs().max(1.0));
    }

    #[test]
    fn unit_lower_inverse_solves() {
        let mut f = Matrix::zeros(3, 3);
        f[(1, 0)] = 0.3;
        f[(2, 0)] = -0.2;
        f[(2, 1)] = 0.5;
        let g = unit_lower_inverse_of_difference(&f);
        // (I - F) G should be the identity.
        let mut imf = Matrix::identity(3);
        for i in 0..3 {
            for j in 0..3 {
                imf[(i, j)] -= f[(i, j)];
            }
        }
        let prod = imf.matmul(&g);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - want).abs() < 1e-14);
            }
        }
    }
}
