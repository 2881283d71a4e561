//! Closed-form error and information curves for the Gaussian channel
//! y = sqrt(gamma) x + w, and the machinery that verifies the identities
//! tying them together against independently coded routes.
//!
//! For a signal with covariance eigenvalues lambda_i the closed forms are
//!
//! * noncausal (smoothing) error: sum_i lambda_i / (1 + gamma lambda_i),
//! * causal (filtering) error: gamma^{-1} sum_i log(1 + gamma lambda_i),
//! * mutual information: (1/2) sum_i log(1 + gamma lambda_i).
//!
//! Three identities link them: Duncan's identity I = (gamma/2) * causal,
//! the I-MMSE relation dI/dgamma = noncausal / 2, and the causal-noncausal
//! link d(gamma * causal)/dgamma = noncausal. Each residual below compares
//! two separately coded evaluations; the checks also run for a sequential
//! conditioning filter (the innovations route) and for causal feedback
//! observation models, where the identity persists.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, unit_lower_inverse_of_difference, Matrix};
use crate::operator::{logdet_eigs, DiscretizedOperator, Spectrum};

/// Strictly increasing grid of positive signal-to-noise ratios.
#[derive(Debug, Clone)]
pub struct GammaGrid {
    values: Vec<f64>,
}

impl GammaGrid {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("gamma grid must be nonempty".into()));
        }
        if values.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(Error::Domain("gamma grid values must be strictly positive".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("gamma grid must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    /// `points` values log-spaced over [min, max].
    pub fn log_spaced(min: f64, max: f64, points: usize) -> Result<Self> {
        if !(min > 0.0) || !(max > min) || points < 2 {
            return Err(Error::Domain(format!(
                "log grid needs 0 < min < max and at least 2 points, got [{min}, {max}] x {points}"
            )));
        }
        let (a, b) = (min.ln(), max.ln());
        let values = (0..points)
            .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
            .collect();
        Ok(Self { values })
    }

    pub fn linear(min: f64, max: f64, points: usize) -> Result<Self> {
        if !(min > 0.0) || !(max > min) || points < 2 {
            return Err(Error::Domain(format!(
                "linear grid needs 0 < min < max and at least 2 points, got [{min}, {max}] x {points}"
            )));
        }
        let values = (0..points)
            .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
            .collect();
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(Error::Domain(format!("gamma must be nonnegative, got {gamma}")));
    }
    Ok(())
}

/// Noncausal (smoothing) mean square error, sum_i lambda_i / (1 + lambda_i gamma).
pub fn noncausal_mmse(spectrum: &Spectrum, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(noncausal_mmse_eigs(spectrum.eigenvalues(), gamma))
}

pub fn noncausal_mmse_eigs(eigenvalues: &[f64], gamma: f64) -> f64 {
    eigenvalues.iter().map(|l| l / (1.0 + l * gamma)).sum()
}

/// Causal (filtering) mean square error, gamma^{-1} sum_i log(1 + lambda_i gamma).
/// At gamma = 0 the limit is the total power s_1.
pub fn causal_mmse(spectrum: &Spectrum, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(causal_mmse_eigs(spectrum.eigenvalues(), gamma))
}

pub fn causal_mmse_eigs(eigenvalues: &[f64], gamma: f64) -> f64 {
    if gamma == 0.0 {
        return eigenvalues.iter().sum();
    }
    eigenvalues.iter().map(|l| (l * gamma).ln_1p()).sum::<f64>() / gamma
}

/// Mutual information (1/2) log det(I + gamma R) of the Gaussian channel.
pub fn mutual_information_gaussian(spectrum: &Spectrum, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(mutual_information_eigs(spectrum.eigenvalues(), gamma))
}

pub fn mutual_information_eigs(eigenvalues: &[f64], gamma: f64) -> f64 {
    0.5 * logdet_eigs(eigenvalues, gamma)
}

/// Analytic dI/dgamma = (1/2) sum_i lambda_i / (1 + gamma lambda_i).
pub fn mutual_information_derivative_eigs(eigenvalues: &[f64], gamma: f64) -> f64 {
    eigenvalues.iter().map(|l| 0.5 * l / (1.0 + gamma * l)).sum()
}

/// Analytic d(gamma * causal)/dgamma = sum_i lambda_i / (1 + gamma lambda_i),
/// written as its own loop so the link residual compares distinct code.
pub fn scaled_causal_derivative_eigs(eigenvalues: &[f64], gamma: f64) -> f64 {
    let mut acc = 0.0;
    for l in eigenvalues {
        acc += l / (gamma * l + 1.0);
    }
    acc
}

/// How the derivative entering the identity residuals is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    /// Closed-form derivatives; residuals are pure roundoff.
    Analytic,
    /// Central finite differences with step 1e-4 * gamma, as a cross-check
    /// that the analytic derivatives are the right ones.
    CentralDifference,
}

/// One row of the error/information table.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub gamma: f64,
    pub causal: f64,
    pub noncausal: f64,
    pub mutual_info: f64,
    /// I - (gamma/2) * causal.
    pub res_duncan: f64,
    /// dI/dgamma - noncausal / 2.
    pub res_immse: f64,
    /// d(gamma * causal)/dgamma - noncausal.
    pub res_link: f64,
}

/// Per-gamma table of both errors, the mutual information and the identity
/// residuals.
#[derive(Debug, Clone)]
pub struct ErrorCurves {
    pub points: Vec<CurvePoint>,
}

impl ErrorCurves {
    /// Largest residual over the table, relative to 1 + |I|.
    pub fn max_relative_residual(&self) -> f64 {
        self.points
            .iter()
            .map(|p| {
                let scale = 1.0 + p.mutual_info.abs();
                (p.res_duncan.abs().max(p.res_immse.abs()).max(p.res_link.abs())) / scale
            })
            .fold(0.0, f64::max)
    }
}

/// Evaluate the curves and identity residuals over a gamma grid.
///
/// The per-gamma evaluations are independent; they run in parallel and are
/// collected in grid order, so the output does not depend on thread count.
pub fn verify_identities(spectrum: &Spectrum, grid: &GammaGrid) -> ErrorCurves {
    verify_identities_with(spectrum, grid, DerivativeMode::Analytic)
}

pub fn verify_identities_with(
    spectrum: &Spectrum,
    grid: &GammaGrid,
    mode: DerivativeMode,
) -> ErrorCurves {
    let eigs = spectrum.eigenvalues();
    let points = grid
        .values()
        .par_iter()
        .map(|&gamma| {
            let causal = causal_mmse_eigs(eigs, gamma);
            let noncausal = noncausal_mmse_eigs(eigs, gamma);
            let mutual_info = mutual_information_eigs(eigs, gamma);
            let (di, dlink) = match mode {
                DerivativeMode::Analytic => (
                    mutual_information_derivative_eigs(eigs, gamma),
                    scaled_causal_derivative_eigs(eigs, gamma),
                ),
                DerivativeMode::CentralDifference => {
                    let h = 1e-4 * gamma;
                    let di = (mutual_information_eigs(eigs, gamma + h)
                        - mutual_information_eigs(eigs, gamma - h))
                        / (2.0 * h);
                    let dlink = ((gamma + h) * causal_mmse_eigs(eigs, gamma + h)
                        - (gamma - h) * causal_mmse_eigs(eigs, gamma - h))
                        / (2.0 * h);
                    (di, dlink)
                }
            };
            CurvePoint {
                gamma,
                causal,
                noncausal,
                mutual_info,
                res_duncan: mutual_info - 0.5 * gamma * causal,
                res_immse: di - 0.5 * noncausal,
                res_link: dlink - noncausal,
            }
        })
        .collect();
    ErrorCurves { points }
}

/// Concavity check of h(eta) = causal error at gamma = 1/eta.
#[derive(Debug, Clone)]
pub struct ConcavityReport {
    /// Largest second divided difference found (concavity means <= 0).
    pub max_second_difference: f64,
    pub tolerance: f64,
    /// The (eta_0, eta_1, eta_2) triple attaining the maximum.
    pub worst_triple: (f64, f64, f64),
    pub pass: bool,
}

/// Check concavity of the causal error as a function of the noise-to-signal
/// ratio eta = 1/gamma via second divided differences on the given grid.
pub fn concavity_check(spectrum: &Spectrum, eta_grid: &[f64]) -> Result<ConcavityReport> {
    if eta_grid.len() < 3 {
        return Err(Error::Domain("concavity check needs at least 3 grid points".into()));
    }
    if eta_grid.iter().any(|e| !(*e > 0.0)) || eta_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("eta grid must be positive and strictly increasing".into()));
    }
    let eigs = spectrum.eigenvalues();
    let h: Vec<f64> = eta_grid.iter().map(|&eta| causal_mmse_eigs(eigs, 1.0 / eta)).collect();
    let scale = h.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tolerance = 1e-9 * scale;
    let mut max_sdd = f64::NEG_INFINITY;
    let mut worst = (eta_grid[0], eta_grid[1], eta_grid[2]);
    for i in 1..eta_grid.len() - 1 {
        let (e0, e1, e2) = (eta_grid[i - 1], eta_grid[i], eta_grid[i + 1]);
        let left = (h[i] - h[i - 1]) / (e1 - e0);
        let right = (h[i + 1] - h[i]) / (e2 - e1);
        let sdd = (right - left) / (e2 - e0);
        if sdd > max_sdd {
            max_sdd = sdd;
            worst = (e0, e1, e2);
        }
    }
    Ok(ConcavityReport {
        max_second_difference: max_sdd,
        tolerance,
        worst_triple: worst,
        pass: max_sdd <= tolerance,
    })
}

/// Ratio of the noncausal to the causal small-SNR error gap,
/// (s_1 - noncausal) / (s_1 - causal). Tends to 2 as gamma -> 0 for any
/// Gaussian signal spectrum.
pub fn ratio_small_gamma(spectrum: &Spectrum, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("gamma must be strictly positive, got {gamma}")));
    }
    let eigs = spectrum.eigenvalues();
    let s1: f64 = eigs.iter().sum();
    if !(s1 > 0.0) {
        return Err(Error::Domain("spectrum has no power; the gap ratio is undefined".into()));
    }
    let numerator = s1 - noncausal_mmse_eigs(eigs, gamma);
    let denominator = s1 - causal_mmse_eigs(eigs, gamma);
    if denominator <= 8.0 * f64::EPSILON * s1 {
        return Err(Error::Numeric("gamma too small for float precision".into()));
    }
    Ok(numerator / denominator)
}

/// Small-gamma series coefficients of both errors in powers of gamma:
/// causal ~ sum_k (-1)^k s_{k+1}/(k+1) gamma^k and
/// noncausal ~ sum_k (-1)^k s_{k+1} gamma^k, with s_j the Schatten sums.
#[derive(Debug, Clone)]
pub struct SeriesExpansion {
    pub causal: Vec<f64>,
    pub noncausal: Vec<f64>,
}

impl SeriesExpansion {
    pub fn eval_causal(&self, gamma: f64) -> f64 {
        horner(&self.causal, gamma)
    }

    pub fn eval_noncausal(&self, gamma: f64) -> f64 {
        horner(&self.noncausal, gamma)
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Maximum supported expansion order.
pub const MAX_SERIES_ORDER: u32 = 12;

pub fn series_expansion(spectrum: &Spectrum, order: u32) -> Result<SeriesExpansion> {
    if order > MAX_SERIES_ORDER {
        return Err(Error::Domain(format!(
            "series order {order} exceeds the supported maximum {MAX_SERIES_ORDER}"
        )));
    }
    let eigs = spectrum.eigenvalues();
    let mut causal = Vec::with_capacity(order as usize + 1);
    let mut noncausal = Vec::with_capacity(order as usize + 1);
    for k in 0..=order {
        let s = crate::operator::schatten_sum_eigs(eigs, k + 1);
        if !s.is_finite() {
            return Err(Error::Numeric(format!(
                "Schatten sum s_{} overflowed for this spectrum",
                k + 1
            )));
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        noncausal.push(sign * s);
        causal.push(sign * s / (k as f64 + 1.0));
    }
    Ok(SeriesExpansion { causal, noncausal })
}

/// Result of one sequential-conditioning (innovations) pass.
#[derive(Debug, Clone)]
pub struct InnovationsRun {
    /// Sum over steps of the post-update variance of the coordinate
    /// conditioned at that step: the discrete causal filtering error.
    pub causal_error: f64,
    /// Prediction variances p_k = Var(x_k | observations before step k),
    /// in conditioning order.
    pub prediction_variances: Vec<f64>,
    /// sum_k log(1 + gamma p_k); equals log det(I + gamma Sigma) for every
    /// conditioning order.
    pub innovation_log_det: f64,
    /// Per-step gain vectors (sqrt(gamma)/s_k * P[:, k]) when requested;
    /// used to run the same linear filter on sampled paths.
    pub gains: Option<Vec<Vec<f64>>>,
}

/// Exact sequential Gaussian conditioning for the observation model
/// z_k = sqrt(gamma) x_k + e_k with x ~ N(0, Sigma) and unit noise.
///
/// Observations are processed in `order` (default: coordinate order); at
/// each step the filter conditions on the current observation as well
/// (filtering, not prediction).
pub fn innovations_filter(
    sigma: &Matrix,
    gamma: f64,
    order: Option<&[usize]>,
    collect_gains: bool,
) -> Result<InnovationsRun> {
    check_gamma(gamma)?;
    let n = sigma.rows();
    if !sigma.is_square() {
        return Err(Error::Domain("covariance must be square".into()));
    }
    let natural: Vec<usize>;
    let order: &[usize] = match order {
        Some(o) => {
            let mut seen = vec![false; n];
            if o.len() != n || o.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
                return Err(Error::Domain("conditioning order must be a permutation".into()));
            }
            o
        }
        None => {
            natural = (0..n).collect();
            &natural
        }
    };
    let sqrt_gamma = gamma.sqrt();
    let scale = (0..n).map(|i| sigma[(i, i)]).fold(0.0_f64, f64::max);
    let mut p = sigma.clone();
    let mut prediction_variances = Vec::with_capacity(n);
    let mut gains = collect_gains.then(|| Vec::with_capacity(n));
    let mut causal_error = 0.0;
    let mut innovation_log_det = 0.0;
    for &idx in order {
        let pk = p[(idx, idx)];
        if pk < -1e-8 * scale {
            return Err(Error::Numeric(format!(
                "conditioning produced a negative variance {pk:.3e} at coordinate {idx} \
                 (covariance not PSD; jitter would exceed 1e-8 of the diagonal scale)"
            )));
        }
        let pk = pk.max(0.0);
        prediction_variances.push(pk);
        let s = 1.0 + gamma * pk;
        innovation_log_det += (gamma * pk).ln_1p();
        let col = p.column(idx);
        if let Some(g) = gains.as_mut() {
            g.push(col.iter().map(|c| sqrt_gamma * c / s).collect());
        }
        // P <- P - (gamma / s) col col^T, the exact conditioning update.
        p.rank_one_update(&col, -gamma / s);
        causal_error += p[(idx, idx)].max(0.0);
    }
    Ok(InnovationsRun { causal_error, prediction_variances, innovation_log_det, gains })
}

/// Discrete causal filtering error of the operator's coordinates observed
/// sequentially in white noise: sum_k w_k Var(x(t_k) | z_1..z_k). Converges
/// to the causal closed form as the grid refines.
pub fn innovations_causal_error(op: &DiscretizedOperator, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("gamma must be strictly positive, got {gamma}")));
    }
    Ok(innovations_filter(op.matrix(), gamma, None, false)?.causal_error)
}

/// Linear causal observation model with feedback: the channel input is
/// u = sqrt(gamma) x + F y and the observation is y = u + w, so
/// y = (I - F)^{-1} (sqrt(gamma) x + w) with F strictly lower triangular.
#[derive(Debug, Clone)]
pub struct FeedbackModel {
    sigma_x: Matrix,
    feedback: Matrix,
    gamma: f64,
}

impl FeedbackModel {
    pub fn new(sigma_x: Matrix, feedback: Matrix, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !sigma_x.is_square() || !feedback.is_square() || sigma_x.rows() != feedback.rows() {
            return Err(Error::Domain("signal covariance and feedback must be square and of one size".into()));
        }
        for i in 0..feedback.rows() {
            for j in i..feedback.cols() {
                if feedback[(i, j)] != 0.0 {
                    return Err(Error::Domain(format!(
                        "feedback gain must be strictly lower triangular; F[{i}][{j}] != 0"
                    )));
                }
            }
        }
        Ok(Self { sigma_x, feedback, gamma })
    }

    pub fn size(&self) -> usize {
        self.sigma_x.rows()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn signal_covariance(&self) -> &Matrix {
        &self.sigma_x
    }

    /// Cov(y) = G (gamma Sigma_x + I) G^T with G = (I - F)^{-1}.
    fn observation_covariance(&self) -> (Matrix, Matrix) {
        let n = self.size();
        let g = unit_lower_inverse_of_difference(&self.feedback);
        let mut m = self.sigma_x.clone();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] *= self.gamma;
            }
            m[(i, i)] += 1.0;
        }
        let sigma_y = g.matmul(&m).matmul_transpose(&g);
        (sigma_y, g)
    }
}

/// Mutual information I(x; y) of the feedback model by Cholesky log-dets:
/// I = (1/2) [log det Cov(y) - log det Cov(y | x)]. For F = 0 this equals
/// the spectral closed form; for any strictly causal F it is unchanged,
/// because y is then a causal invertible transform of sqrt(gamma) x + w.
pub fn gaussian_mi_logdet(model: &FeedbackModel) -> Result<f64> {
    let (sigma_y, g) = model.observation_covariance();
    let sigma_y_given_x = g.matmul_transpose(&g);
    let logdet_y = cholesky(&sigma_y)?.log_det();
    let logdet_cond = cholesky(&sigma_y_given_x)?.log_det();
    Ok(0.5 * (logdet_y - logdet_cond))
}

/// Duncan residual of the feedback model: I - (1/2) E|u - u_hat|^2.
///
/// The right-hand side is computed by an independent sequential route.
/// Each observation coordinate y_k = u_k + e_k stands for a unit-length
/// observation window carrying u_k at unit noise level; filtering u_k
/// continuously through its window turns a prior variance q_k =
/// Var(u_k | y_1..y_{k-1}) into the integrated error
/// int_0^1 q_k/(1 + q_k tau) dtau = log(1 + q_k). The q_k are obtained by
/// exact sequential Gaussian conditioning of the joint (u, y) covariance,
/// never through the log-det route the left-hand side uses.
pub fn duncan_feedback_check(model: &FeedbackModel) -> Result<f64> {
    let mi = gaussian_mi_logdet(model)?;
    let n = model.size();
    let (sigma_y, g) = model.observation_covariance();
    // Joint covariance of (u, y) with u = y - w: Cov(u) = Sigma_y - G - G^T + I,
    // Cov(u, y) = Sigma_y - G^T.
    let mut joint = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let syij = sigma_y[(i, j)];
            let mut cu = syij - g[(i, j)] - g[(j, i)];
            if i == j {
                cu += 1.0;
            }
            joint[(i, j)] = cu;
            let cuy = syij - g[(j, i)];
            joint[(i, n + j)] = cuy;
            joint[(n + j, i)] = cuy;
            joint[(n + i, n + j)] = syij;
        }
    }
    let scale = (0..2 * n).map(|i| joint[(i, i)]).fold(0.0_f64, f64::max);
    let mut integrated_error = 0.0;
    for k in 0..n {
        let q = joint[(k, k)];
        if q < -1e-8 * scale {
            return Err(Error::Numeric(format!(
                "conditioning produced a negative variance {q:.3e} at step {k}"
            )));
        }
        integrated_error += q.max(0.0).ln_1p();
        // Condition the joint law on observation y_k.
        let pivot = joint[(n + k, n + k)];
        if !(pivot > 0.0) {
            return Err(Error::Numeric(format!(
                "singular observation variance {pivot:.3e} at step {k}"
            )));
        }
        let col = joint.column(n + k);
        joint.rank_one_update(&col, -1.0 / pivot);
    }
    Ok(mi - 0.5 * integrated_error)
}
