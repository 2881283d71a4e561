//! Quadrature support: Gauss-Hermite rules for expectations over a standard
//! normal, and an adaptive Simpson integrator with explicit error budget.

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigh, Matrix};

/// Gauss-Hermite rule for weight exp(-x^2), built by the Golub-Welsch
/// procedure: nodes are the eigenvalues of the Hermite Jacobi matrix and the
/// weights come from the first components of its eigenvectors.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Domain("quadrature order must be at least 1".into()));
        }
        let mut jacobi = Matrix::zeros(order, order);
        for k in 1..order {
            let b = (k as f64 / 2.0).sqrt();
            jacobi[(k - 1, k)] = b;
            jacobi[(k, k - 1)] = b;
        }
        let eig = jacobi_eigh(&jacobi, true)?;
        let vectors = eig.vectors.expect("vectors requested");
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|i| {
                let first = vectors[(0, i)];
                (eig.values[i], std::f64::consts::PI.sqrt() * first * first)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("NaN node"));
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// E[f(Z)] for Z ~ N(0, 1).
    pub fn expect_standard_normal(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let scale = 1.0 / std::f64::consts::PI.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(std::f64::consts::SQRT_2 * x))
            .sum::<f64>()
            * scale
    }
}

/// Adaptive Simpson integration of `f` over [a, b] to absolute tolerance
/// `tol`. Fails if the recursion cannot reach the tolerance within the
/// depth budget.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    const MAX_DEPTH: u32 = 60;
    if !(b >= a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("bad integration interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        // Richardson correction for the composite estimate.
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "adaptive Simpson hit the depth limit on [{a}, {b}] with error estimate {:.3e} \
             above budget {:.3e}",
            delta.abs() / 15.0,
            tol
        )));
    }
    let half_tol = 0.5 * tol;
    let l = simpson_step(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?;
    Ok(l + r)
}
