//! Covariance kernel families r(s, t) on a finite horizon [0, T], together
//! with the time grids they are discretized on.
//!
//! The families cover the standard test processes: exponential
//! (Ornstein-Uhlenbeck) correlation, Brownian motion and bridge, squared
//! exponential, explicit finite-rank kernels given by an orthonormal grid
//! basis, and block-diagonal stationary matrix kernels built from
//! exponential channels. Where a closed-form spectrum is known it is exposed
//! through [`KernelSpec::analytic_spectrum`] as an oracle for the
//! eigensolver.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Discrete orthonormality tolerance for finite-rank bases.
pub const BASIS_ORTHONORMALITY_TOL: f64 = 1e-10;

/// One stationary scalar channel with correlation sigma^2 * exp(-rate*|t-s|).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialChannel {
    pub variance: f64,
    pub rate: f64,
}

/// The supported covariance kernel families.
#[derive(Debug, Clone)]
pub enum KernelFamily {
    /// sigma^2 * exp(-rate * |t - s|) (Ornstein-Uhlenbeck correlation).
    Exponential { variance: f64, rate: f64 },
    /// min(s, t).
    BrownianMotion,
    /// min(s, t) - s*t/T.
    BrownianBridge,
    /// sigma^2 * exp(-(t - s)^2 / (2 * length_scale^2)).
    SquaredExponential { variance: f64, length_scale: f64 },
    /// sum_i lambda_i * phi_i(s) phi_i(t) for an orthonormal basis of grid
    /// functions, extended piecewise-constant over the grid cells.
    FiniteRank { eigenvalues: Vec<f64>, basis: Vec<Vec<f64>> },
    /// Block-diagonal stationary kernel; channel c has exponential
    /// correlation with its own variance and rate.
    MatrixStationary { channels: Vec<ExponentialChannel> },
}

/// A covariance kernel family together with its horizon T.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    family: KernelFamily,
    horizon: f64,
}

fn require_positive(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::Domain(format!("{name} must be strictly positive, got {value}")));
    }
    Ok(())
}

impl KernelSpec {
    pub fn new(family: KernelFamily, horizon: f64) -> Result<Self> {
        require_positive("horizon", horizon)?;
        match &family {
            KernelFamily::Exponential { variance, rate } => {
                require_positive("variance", *variance)?;
                require_positive("rate", *rate)?;
            }
            KernelFamily::BrownianMotion | KernelFamily::BrownianBridge => {}
            KernelFamily::SquaredExponential { variance, length_scale } => {
                require_positive("variance", *variance)?;
                require_positive("length_scale", *length_scale)?;
            }
            KernelFamily::FiniteRank { eigenvalues, basis } => {
                if eigenvalues.len() != basis.len() {
                    return Err(Error::Domain(format!(
                        "finite-rank kernel has {} eigenvalues but {} basis functions",
                        eigenvalues.len(),
                        basis.len()
                    )));
                }
                if eigenvalues.iter().any(|l| *l < 0.0 || !l.is_finite()) {
                    return Err(Error::Domain(
                        "finite-rank eigenvalues must be nonnegative".into(),
                    ));
                }
                let n = basis.first().map(|b| b.len()).unwrap_or(0);
                if n == 0 {
                    return Err(Error::Domain("finite-rank basis must be nonempty".into()));
                }
                if basis.iter().any(|b| b.len() != n) {
                    return Err(Error::Domain(
                        "finite-rank basis functions must share one grid length".into(),
                    ));
                }
            }
            KernelFamily::MatrixStationary { channels } => {
                if channels.is_empty() {
                    return Err(Error::Domain("matrix kernel needs at least one channel".into()));
                }
                for ch in channels {
                    require_positive("variance", ch.variance)?;
                    require_positive("rate", ch.rate)?;
                }
            }
        }
        Ok(Self { family, horizon })
    }

    pub fn exponential(variance: f64, rate: f64, horizon: f64) -> Result<Self> {
        Self::new(KernelFamily::Exponential { variance, rate }, horizon)
    }

    pub fn brownian_motion(horizon: f64) -> Result<Self> {
        Self::new(KernelFamily::BrownianMotion, horizon)
    }

    pub fn brownian_bridge(horizon: f64) -> Result<Self> {
        Self::new(KernelFamily::BrownianBridge, horizon)
    }

    pub fn squared_exponential(variance: f64, length_scale: f64, horizon: f64) -> Result<Self> {
        Self::new(KernelFamily::SquaredExponential { variance, length_scale }, horizon)
    }

    pub fn finite_rank(eigenvalues: Vec<f64>, basis: Vec<Vec<f64>>, horizon: f64) -> Result<Self> {
        Self::new(KernelFamily::FiniteRank { eigenvalues, basis }, horizon)
    }

    pub fn matrix_stationary(channels: Vec<ExponentialChannel>, horizon: f64) -> Result<Self> {
        Self::new(KernelFamily::MatrixStationary { channels }, horizon)
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of channels d; the kernel evaluates to a d x d matrix.
    pub fn dim(&self) -> usize {
        match &self.family {
            KernelFamily::MatrixStationary { channels } => channels.len(),
            _ => 1,
        }
    }

    /// Evaluate r(s, t) as a d x d matrix. Symmetric under swapping s and t
    /// combined with a transpose.
    pub fn eval(&self, s: f64, t: f64) -> Result<Matrix> {
        let horizon = self.horizon;
        if !(0.0..=horizon).contains(&s) || !(0.0..=horizon).contains(&t) {
            return Err(Error::Domain(format!(
                "kernel arguments ({s}, {t}) outside [0, {horizon}]"
            )));
        }
        Ok(match &self.family {
            KernelFamily::Exponential { variance, rate } => {
                Matrix::from_fn(1, 1, |_, _| variance * (-rate * (t - s).abs()).exp())
            }
            KernelFamily::BrownianMotion => Matrix::from_fn(1, 1, |_, _| s.min(t)),
            KernelFamily::BrownianBridge => {
                Matrix::from_fn(1, 1, |_, _| s.min(t) - s * t / horizon)
            }
            KernelFamily::SquaredExponential { variance, length_scale } => {
                let z = (t - s) / length_scale;
                Matrix::from_fn(1, 1, |_, _| variance * (-0.5 * z * z).exp())
            }
            KernelFamily::FiniteRank { eigenvalues, basis } => {
                let n = basis[0].len();
                let cs = cell_index(s, horizon, n);
                let ct = cell_index(t, horizon, n);
                let value = eigenvalues
                    .iter()
                    .zip(basis)
                    .map(|(l, b)| l * b[cs] * b[ct])
                    .sum::<f64>();
                Matrix::from_fn(1, 1, |_, _| value)
            }
            KernelFamily::MatrixStationary { channels } => {
                let tau = (t - s).abs();
                Matrix::from_fn(channels.len(), channels.len(), |i, j| {
                    if i == j {
                        channels[i].variance * (-channels[i].rate * tau).exp()
                    } else {
                        0.0
                    }
                })
            }
        })
    }

    /// Closed-form covariance eigenvalues where known: Brownian motion has
    /// lambda_i = T^2 / ((i - 1/2) pi)^2 and a finite-rank kernel stores its
    /// own. Other families return `None`.
    pub fn analytic_spectrum(&self, count: usize) -> Option<Vec<f64>> {
        match &self.family {
            KernelFamily::BrownianMotion => {
                let t2 = self.horizon * self.horizon;
                Some(
                    (1..=count)
                        .map(|i| {
                            let freq = (i as f64 - 0.5) * std::f64::consts::PI;
                            t2 / (freq * freq)
                        })
                        .collect(),
                )
            }
            KernelFamily::FiniteRank { eigenvalues, .. } => {
                let mut sorted = eigenvalues.clone();
                sorted.sort_by(|a, b| b.partial_cmp(a).expect("NaN eigenvalue"));
                sorted.truncate(count);
                Some(sorted)
            }
            _ => None,
        }
    }
}

fn cell_index(t: f64, horizon: f64, n: usize) -> usize {
    ((t / horizon * n as f64) as usize).min(n - 1)
}

/// Uniform midpoint grid on [0, T]: nodes t_i = (i - 1/2) T / n with weights
/// T / n. Positive weights and an exactly symmetric weighted kernel matrix
/// come for free with this rule.
#[derive(Debug, Clone)]
pub struct TimeGrid {
    horizon: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TimeGrid {
    pub fn midpoint(horizon: f64, n: usize) -> Result<Self> {
        require_positive("horizon", horizon)?;
        if n == 0 {
            return Err(Error::Domain("grid needs at least one node".into()));
        }
        let step = horizon / n as f64;
        let nodes = (0..n).map(|i| (i as f64 + 0.5) * step).collect();
        let weights = vec![step; n];
        Ok(Self { horizon, nodes, weights })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// First `count` elements of the cosine basis, exactly orthonormal on any
/// midpoint grid: phi_0 = 1/sqrt(T), phi_i(t) = sqrt(2/T) cos(i pi t / T).
pub fn cosine_basis(grid: &TimeGrid, count: usize) -> Vec<Vec<f64>> {
    let t = grid.horizon();
    (0..count)
        .map(|i| {
            grid.nodes()
                .iter()
                .map(|&tk| {
                    if i == 0 {
                        1.0 / t.sqrt()
                    } else {
                        (2.0 / t).sqrt() * (i as f64 * std::f64::consts::PI * tk / t).cos()
                    }
                })
                .collect()
        })
        .collect()
}

/// Check that grid functions are orthonormal in the weighted inner product
/// sum_k w_k f(t_k) g(t_k), to [`BASIS_ORTHONORMALITY_TOL`].
pub fn check_orthonormal(basis: &[Vec<f64>], grid: &TimeGrid) -> Result<()> {
    for b in basis {
        if b.len() != grid.len() {
            return Err(Error::Domain(format!(
                "basis function has {} samples but the grid has {} nodes",
                b.len(),
                grid.len()
            )));
        }
    }
    for i in 0..basis.len() {
        for j in i..basis.len() {
            let dot: f64 = basis[i]
                .iter()
                .zip(&basis[j])
                .zip(grid.weights())
                .map(|((a, b), w)| w * a * b)
                .sum();
            let want = if i == j { 1.0 } else { 0.0 };
            if (dot - want).abs() > BASIS_ORTHONORMALITY_TOL {
                return Err(Error::Domain(format!(
                    "basis functions {i} and {j} not orthonormal on the grid: \
                     inner product {dot:.3e} (want {want})"
                )));
            }
        }
    }
    Ok(())
}
