//! Stationary-signal machinery: Lorentzian spectral densities, the
//! Yovits-Jackson causal-error integral
//! (2 pi gamma)^{-1} int log det(I + gamma S(xi)) dxi, and the finite-horizon
//! Toeplitz eigenvalue averages that converge to it as the horizon grows.
//!
//! Each channel is an exponential-correlation (Ornstein-Uhlenbeck) process:
//! correlation sigma^2 exp(-alpha |tau|) pairs with the Lorentzian density
//! S(xi) = 2 alpha sigma^2 / (alpha^2 + xi^2). For that family the integral
//! has the closed form (sqrt(alpha^2 + 2 gamma alpha sigma^2) - alpha)/gamma,
//! which serves as the oracle for the quadrature route.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::infocore::causal_mmse_eigs;
use crate::kernels::{ExponentialChannel, KernelFamily, KernelSpec, TimeGrid};
use crate::operator::{discretize, eigenvalues_only};
use crate::quad::adaptive_simpson;

/// Largest matrix dimension the dense eigensolver is budgeted for.
pub const MAX_EIGEN_DIM: usize = 1200;

/// Absolute accuracy target of [`yj_integral`].
pub const YJ_TOLERANCE: f64 = 1e-9;

/// Diagonal matrix spectral density whose channels are Lorentzian terms
/// S_ch(xi) = 2 alpha sigma^2 / (alpha^2 + xi^2).
#[derive(Debug, Clone)]
pub struct SpectralDensity {
    channels: Vec<ExponentialChannel>,
}

impl SpectralDensity {
    pub fn new(channels: Vec<ExponentialChannel>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Domain("spectral density needs at least one channel".into()));
        }
        for ch in &channels {
            if !(ch.variance > 0.0) || !(ch.rate > 0.0) {
                return Err(Error::Domain(
                    "channel variance and rate must be strictly positive".into(),
                ));
            }
        }
        Ok(Self { channels })
    }

    pub fn scalar(variance: f64, rate: f64) -> Result<Self> {
        Self::new(vec![ExponentialChannel { variance, rate }])
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[ExponentialChannel] {
        &self.channels
    }

    /// Diagonal entries of S(xi).
    pub fn diagonal(&self, xi: f64) -> Vec<f64> {
        self.channels
            .iter()
            .map(|ch| 2.0 * ch.rate * ch.variance / (ch.rate * ch.rate + xi * xi))
            .collect()
    }

    /// log det(I + gamma S(xi)); the density is diagonal so the determinant
    /// factorizes over channels.
    pub fn log_det_perturbation(&self, gamma: f64, xi: f64) -> f64 {
        self.channels
            .iter()
            .map(|ch| {
                let s = 2.0 * ch.rate * ch.variance / (ch.rate * ch.rate + xi * xi);
                (gamma * s).ln_1p()
            })
            .sum()
    }

    /// Total power sum sigma^2 over channels; equals the trace of the
    /// correlation at lag zero and (2 pi)^{-1} int tr S.
    pub fn total_power(&self) -> f64 {
        self.channels.iter().map(|ch| ch.variance).sum()
    }

    /// The matching stationary covariance kernel on [0, T].
    pub fn kernel(&self, horizon: f64) -> Result<KernelSpec> {
        if self.channels.len() == 1 {
            KernelSpec::exponential(self.channels[0].variance, self.channels[0].rate, horizon)
        } else {
            KernelSpec::matrix_stationary(self.channels.clone(), horizon)
        }
    }
}

/// Yovits-Jackson integral (2 pi gamma)^{-1} int_R log det(I + gamma S) dxi
/// to absolute accuracy [`YJ_TOLERANCE`].
///
/// The integrand is even, so the computation runs on [0, Xi] and doubles.
/// Xi comes from the analytic tail bound log det(I + gamma S) <= gamma tr S,
/// whose Lorentzian tail integral is explicit; the quadrature budget and the
/// tail each get half of the tolerance.
pub fn yj_integral(density: &SpectralDensity, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("gamma must be strictly positive, got {gamma}")));
    }
    let tol = YJ_TOLERANCE;
    // Tail of (pi gamma)^{-1} int_Xi^inf log det <= (1/pi) sum 2 sigma^2 atan(alpha/Xi).
    let tail_at = |xi: f64| -> f64 {
        density
            .channels
            .iter()
            .map(|ch| 2.0 * ch.variance * (ch.rate / xi).atan())
            .sum::<f64>()
            / std::f64::consts::PI
    };
    let mut cutoff = density.channels.iter().map(|ch| ch.rate).fold(1.0_f64, f64::max);
    let mut budget = 0;
    while tail_at(cutoff) > 0.5 * tol {
        cutoff *= 2.0;
        budget += 1;
        if budget > 120 {
            return Err(Error::Numeric(format!(
                "tail bound unattainable within the cutoff budget: achieved {:.3e} at Xi = {:.3e}",
                tail_at(cutoff),
                cutoff
            )));
        }
    }
    // Integrate over [0, cutoff] in geometric segments so the adaptive rule
    // starts from panels matched to the integrand's scale.
    let scale = 0.5 / (std::f64::consts::PI * gamma);
    let integrand = |xi: f64| density.log_det_perturbation(gamma, xi);
    let base = density.channels.iter().map(|ch| ch.rate).fold(f64::INFINITY, f64::min);
    let mut edges = vec![0.0, base.min(cutoff)];
    while *edges.last().unwrap() < cutoff {
        let next = (edges.last().unwrap() * 8.0).min(cutoff);
        edges.push(next);
    }
    let segment_tol = 0.5 * tol / (2.0 * scale) / edges.len() as f64;
    let mut integral = 0.0;
    for pair in edges.windows(2) {
        integral += adaptive_simpson(&integrand, pair[0], pair[1], segment_tol)?;
    }
    Ok(2.0 * scale * integral)
}

/// Closed-form Yovits-Jackson value for a single Lorentzian channel:
/// (sqrt(alpha^2 + 2 gamma alpha sigma^2) - alpha) / gamma, evaluated in the
/// cancellation-free form 2 alpha sigma^2 / (sqrt(...) + alpha).
pub fn ou_yj_closed_form(rate: f64, variance: f64, gamma: f64) -> Result<f64> {
    if !(rate > 0.0) || !(variance > 0.0) || !(gamma > 0.0) {
        return Err(Error::Domain(
            "rate, variance, and gamma must be strictly positive".into(),
        ));
    }
    let root = (rate * rate + 2.0 * gamma * rate * variance).sqrt();
    Ok(2.0 * rate * variance / (root + rate))
}

/// Eigenvalues of the discretized Toeplitz covariance operator on [0, T].
pub fn toeplitz_spectrum(spec: &KernelSpec, horizon: f64, n: usize) -> Result<Vec<f64>> {
    match spec.family() {
        KernelFamily::Exponential { .. } | KernelFamily::MatrixStationary { .. } => {}
        _ => {
            return Err(Error::Domain(
                "Toeplitz spectra are defined for stationary kernels only".into(),
            ))
        }
    }
    let size = n * spec.dim();
    if size > MAX_EIGEN_DIM {
        return Err(Error::Config(format!(
            "eigensolver budget exceeded: n * d = {size} > {MAX_EIGEN_DIM}; \
             reduce n to at most {}",
            MAX_EIGEN_DIM / spec.dim()
        )));
    }
    let grid = TimeGrid::midpoint(horizon, n)?;
    let resized = KernelSpec::new(spec.family().clone(), horizon)?;
    let op = discretize(&resized, &grid)?;
    eigenvalues_only(op.matrix())
}

/// Horizon-averaged causal error (gamma T)^{-1} sum_i log(1 + gamma l_i).
/// Shares the closed-form code path with the causal error on a spectrum.
pub fn toeplitz_average(eigenvalues: &[f64], gamma: f64, horizon: f64) -> Result<f64> {
    if !(gamma > 0.0) || !(horizon > 0.0) {
        return Err(Error::Domain("gamma and horizon must be strictly positive".into()));
    }
    Ok(causal_mmse_eigs(eigenvalues, gamma) / horizon)
}

/// One horizon of the convergence study.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub horizon: f64,
    pub n: usize,
    pub average: f64,
    pub target: f64,
    pub gap: f64,
}

/// Convergence of Toeplitz averages to the Yovits-Jackson integral over a
/// list of horizons at fixed grid spacing.
#[derive(Debug, Clone)]
pub struct ToeplitzStudy {
    pub gamma: f64,
    pub delta: f64,
    pub target: f64,
    pub rows: Vec<StudyRow>,
    /// Least-squares exponent beta of gap ~ c T^{-beta}; `None` when a gap
    /// vanished or only one horizon was given.
    pub fitted_rate: Option<f64>,
    /// Whether the gaps decrease monotonically with the horizon.
    pub monotone: bool,
}

/// Run the study with grid spacing held fixed (n = round(T / delta)), so the
/// discretization bias is the same at every horizon and the observed decay
/// isolates the horizon effect.
pub fn convergence_study(
    density: &SpectralDensity,
    gamma: f64,
    horizons: &[f64],
    delta: f64,
) -> Result<ToeplitzStudy> {
    if horizons.is_empty() {
        return Err(Error::Domain("at least one horizon is required".into()));
    }
    if horizons.iter().any(|t| !(*t > 0.0)) || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("horizons must be positive and strictly increasing".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain("grid spacing must be strictly positive".into()));
    }
    let target = yj_integral(density, gamma)?;
    let rows: Result<Vec<StudyRow>> = horizons
        .par_iter()
        .map(|&horizon| {
            let n = (horizon / delta).round().max(1.0) as usize;
            let kernel = density.kernel(horizon)?;
            let eigs = toeplitz_spectrum(&kernel, horizon, n)?;
            let average = toeplitz_average(&eigs, gamma, horizon)?;
            Ok(StudyRow { horizon, n, average, target, gap: (average - target).abs() })
        })
        .collect();
    let mut rows = rows?;
    rows.sort_by(|a, b| a.horizon.partial_cmp(&b.horizon).expect("NaN horizon"));
    let monotone = rows.windows(2).all(|w| w[1].gap < w[0].gap);
    let fitted_rate = fit_rate(&rows);
    Ok(ToeplitzStudy { gamma, delta, target, rows, fitted_rate, monotone })
}

fn fit_rate(rows: &[StudyRow]) -> Option<f64> {
    if rows.len() < 2 || rows.iter().any(|r| r.gap <= 0.0) {
        return None;
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.horizon.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.gap.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(-sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_matches_quadrature() {
        let density = SpectralDensity::scalar(1.0, 1.0).unwrap();
        let quad = yj_integral(&density, 1.0).unwrap();
        let exact = 3f64.sqrt() - 1.0;
        assert!((quad - exact).abs() <= 1e-8, "quad {quad} vs exact {exact}");
        assert!((ou_yj_closed_form(1.0, 1.0, 1.0).unwrap() - exact).abs() < 1e-15);
    }

    #[test]
    fn closed_form_lattice() {
        for &rate in &[0.5, 1.0, 2.0] {
            for &variance in &[0.5, 1.0, 2.0] {
                for &gamma in &[0.5, 1.0, 2.0] {
                    let density = SpectralDensity::scalar(variance, rate).unwrap();
                    let quad = yj_integral(&density, gamma).unwrap();
                    let exact = ou_yj_closed_form(rate, variance, gamma).unwrap();
                    assert!(
                        (quad - exact).abs() <= 1e-8,
                        "rate {rate} variance {variance} gamma {gamma}: {quad} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn small_gamma_limit_is_total_power() {
        let density = SpectralDensity::scalar(1.3, 0.8).unwrap();
        let value = yj_integral(&density, 1e-7).unwrap();
        assert!((value - 1.3).abs() < 1e-6);
        let closed = ou_yj_closed_form(0.8, 1.3, 1e-12).unwrap();
        assert!((closed - 1.3).abs() < 1e-11);
        assert!(ou_yj_closed_form(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn diagonal_density_is_additive() {
        let a = SpectralDensity::scalar(1.0, 1.0).unwrap();
        let b = SpectralDensity::scalar(1.0, 2.0).unwrap();
        let both = SpectralDensity::new(vec![
            ExponentialChannel { variance: 1.0, rate: 1.0 },
            ExponentialChannel { variance: 1.0, rate: 2.0 },
        ])
        .unwrap();
        let sum = yj_integral(&a, 1.0).unwrap() + yj_integral(&b, 1.0).unwrap();
        let joint = yj_integral(&both, 1.0).unwrap();
        assert!((joint - sum).abs() <= 1e-8);
    }

    #[test]
    fn total_power_matches_density_integral() {
        // (2 pi)^{-1} int tr S(xi) dxi = sum sigma^2.
        let density = SpectralDensity::new(vec![
            ExponentialChannel { variance: 0.7, rate: 1.4 },
            ExponentialChannel { variance: 2.0, rate: 0.5 },
        ])
        .unwrap();
        let f = |xi: f64| density.diagonal(xi).iter().sum::<f64>();
        let half = adaptive_simpson(&f, 0.0, 5e5, 1e-7).unwrap();
        let total = 2.0 * half / (2.0 * std::f64::consts::PI);
        assert!((total - density.total_power()).abs() < 1e-4);
    }

    #[test]
    fn toeplitz_trace_and_top_eigenvalue() {
        let density = SpectralDensity::scalar(1.0, 1.0).unwrap();
        let kernel = density.kernel(20.0).unwrap();
        let eigs = toeplitz_spectrum(&kernel, 20.0, 400).unwrap();
        let trace: f64 = eigs.iter().sum();
        assert!((trace - 20.0).abs() < 1e-9);
        // sup_xi S(xi) = 2 sigma^2 / alpha bounds the spectrum up to o(1).
        assert!(eigs[0] <= 2.0 * 1.05);
    }

    #[test]
    fn toeplitz_eigenvalues_stable_under_refinement() {
        let density = SpectralDensity::scalar(1.0, 1.0).unwrap();
        let kernel = density.kernel(20.0).unwrap();
        let coarse = toeplitz_spectrum(&kernel, 20.0, 400).unwrap();
        let fine = toeplitz_spectrum(&kernel, 20.0, 800).unwrap();
        assert!((coarse[0] - fine[0]).abs() / fine[0] < 0.01);
    }

    #[test]
    fn toeplitz_budget_is_enforced() {
        let kernel = KernelSpec::exponential(1.0, 1.0, 10.0).unwrap();
        assert!(matches!(
            toeplitz_spectrum(&kernel, 10.0, 2000),
            Err(Error::Config(_))
        ));
        let brownian = KernelSpec::brownian_motion(1.0).unwrap();
        assert!(toeplitz_spectrum(&brownian, 1.0, 16).is_err());
    }

    #[test]
    fn toeplitz_average_values() {
        assert_eq!(toeplitz_average(&[0.0, 0.0], 1.0, 2.0).unwrap(), 0.0);
        // Rank-one lambda = T.
        let t = 3.0;
        let got = toeplitz_average(&[t], 1.0, t).unwrap();
        assert!((got - (1.0 + t).ln() / t).abs() < 1e-15);
    }

    #[test]
    fn average_shares_the_causal_code_path() {
        // toeplitz_average is the causal closed form divided by the horizon,
        // through the same function, bit for bit.
        let eigs = [1.7, 0.9, 0.3, 0.01];
        let (gamma, horizon) = (0.8, 4.0);
        assert_eq!(
            toeplitz_average(&eigs, gamma, horizon).unwrap(),
            causal_mmse_eigs(&eigs, gamma) / horizon
        );
    }

    #[test]
    fn average_bounded_by_power() {
        let density = SpectralDensity::scalar(1.0, 1.0).unwrap();
        for &horizon in &[5.0, 10.0, 20.0] {
            let kernel = density.kernel(horizon).unwrap();
            let n = (horizon / 0.1).round() as usize;
            let eigs = toeplitz_spectrum(&kernel, horizon, n).unwrap();
            let avg = toeplitz_average(&eigs, 1.0, horizon).unwrap();
            assert!(avg <= density.total_power());
            assert!(avg >= yj_integral(&density, 1.0).unwrap() - 0.5 / horizon);
        }
    }

    #[test]
    fn study_gaps_shrink() {
        let density = SpectralDensity::scalar(1.0, 1.0).unwrap();
        let study = convergence_study(&density, 1.0, &[5.0, 10.0, 20.0], 0.1).unwrap();
        assert!(study.monotone, "gaps: {:?}", study.rows.iter().map(|r| r.gap).collect::<Vec<_>>());
        let beta = study.fitted_rate.unwrap();
        assert!((0.5..1.5).contains(&beta), "fitted rate {beta}");
    }

    #[test]
    fn study_rejects_bad_input() {
        let density = SpectralDensity::scalar(1.0, 1.0).unwrap();
        assert!(convergence_study(&density, 1.0, &[], 0.1).is_err());
        assert!(convergence_study(&density, 1.0, &[2.0, 1.0], 0.1).is_err());
        assert!(convergence_study(&density, 1.0, &[1.0, 2.0], 0.0).is_err());
    }
}
