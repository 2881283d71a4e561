//! Estimation-error and mutual-information formulas for the additive
//! Gaussian channel y = sqrt(gamma) x + w, verified against independent
//! numerical oracles.
//!
//! For a signal with covariance operator R (eigenvalues lambda_i) the
//! library evaluates the closed forms
//!
//! * noncausal (smoothing) error  sum_i lambda_i / (1 + gamma lambda_i),
//! * causal (filtering) error     gamma^{-1} sum_i log(1 + gamma lambda_i),
//! * mutual information           (1/2) log det(I + gamma R),
//!
//! and cross-checks the identities connecting them: Duncan's identity
//! I = (gamma/2) * causal error (also in its causal-feedback form), the
//! I-MMSE relation dI/dgamma = noncausal/2, the causal-noncausal link
//! d(gamma causal)/dgamma = noncausal, the small-SNR factor-of-two between
//! the error gaps, Schatten-sum series expansions, and the Yovits-Jackson
//! spectral formula for stationary signals with its Toeplitz-average
//! convergence. A seeded Monte Carlo engine and an exactly solvable binary
//! signal model probe the same identities away from closed form.
//!
//! Modules:
//!
//! * [`kernels`] - covariance kernel families and midpoint time grids;
//! * [`operator`] - discretized covariance operators, spectra, log-dets;
//! * [`infocore`] - error/information curves, identity residuals, the
//!   sequential-conditioning (innovations) filter, and feedback models;
//! * [`sim`] - the Monte Carlo channel simulator and binary-signal oracles;
//! * [`stationary`] - spectral densities, the Yovits-Jackson integral, and
//!   Toeplitz convergence studies;
//! * [`linalg`], [`quad`], [`rng`] - the dense solvers, quadrature rules,
//!   and deterministic random streams underneath.

pub mod error;
pub mod infocore;
pub mod kernels;
pub mod linalg;
pub mod operator;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod stationary;

pub use error::{Error, Result};
pub use infocore::{
    concavity_check, duncan_feedback_check, gaussian_mi_logdet, innovations_causal_error,
    innovations_filter, mutual_information_gaussian, noncausal_mmse, ratio_small_gamma,
    series_expansion, verify_identities, CurvePoint, ErrorCurves, FeedbackModel, GammaGrid,
};
pub use infocore::causal_mmse;
pub use kernels::{ExponentialChannel, KernelFamily, KernelSpec, TimeGrid};
pub use linalg::Matrix;
pub use operator::{
    cholesky, discretize, eigendecompose, logdet_perturbation, schatten_sum, CholeskyFactor,
    DiscretizedOperator, Spectrum,
};
pub use sim::{
    binary_causal_filter, binary_errors, binary_mutual_information, mc_estimate,
    run_binary_sim, run_gaussian_sim, sample_gaussian_paths, simulate_channel, SimBatch,
    SimConfig, SignalModel,
};
pub use stationary::{
    convergence_study, ou_yj_closed_form, toeplitz_average, toeplitz_spectrum, yj_integral,
    SpectralDensity, ToeplitzStudy,
};
