//! JSON experiment configuration. Unknown keys are rejected everywhere so a
//! typo fails loudly at parse time instead of silently running defaults.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use immse_core::kernels::{cosine_basis, ExponentialChannel, KernelSpec, TimeGrid};
use immse_core::stationary::SpectralDensity;
use immse_core::GammaGrid;

use crate::AppError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal: Option<SignalConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            AppError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| AppError::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn require_kernel(&self) -> Result<&KernelConfig, AppError> {
        self.kernel.as_ref().ok_or_else(|| AppError::Config("missing \"kernel\" section".into()))
    }

    pub fn require_grid(&self) -> Result<TimeGrid, AppError> {
        let grid = self.grid.as_ref().ok_or_else(|| AppError::Config("missing \"grid\" section".into()))?;
        Ok(TimeGrid::midpoint(grid.t, grid.n)?)
    }

    pub fn require_gamma_grid(&self) -> Result<GammaGrid, AppError> {
        let gamma = self.gamma.as_ref().ok_or_else(|| AppError::Config("missing \"gamma\" section".into()))?;
        gamma.grid()
    }

    /// A single gamma value (simulate and yj take exactly one).
    pub fn require_single_gamma(&self) -> Result<f64, AppError> {
        match &self.gamma {
            Some(GammaConfig::Value(v)) => Ok(*v),
            Some(GammaConfig::List(values)) if values.len() == 1 => Ok(values[0]),
            Some(_) => Err(AppError::Config(
                "this command takes a single \"gamma\" value, not a grid".into(),
            )),
            None => Err(AppError::Config("missing \"gamma\" value".into())),
        }
    }

    pub fn require_density(&self) -> Result<SpectralDensity, AppError> {
        let density = self
            .density
            .as_ref()
            .ok_or_else(|| AppError::Config("missing \"density\" section".into()))?;
        let channels = density
            .channels
            .iter()
            .map(|c| ExponentialChannel { variance: c.variance, rate: c.rate })
            .collect();
        Ok(SpectralDensity::new(channels)?)
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(alias = "T")]
    pub t: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Exponential { variance: f64, rate: f64 },
    BrownianMotion {},
    BrownianBridge {},
    SquaredExponential { variance: f64, length_scale: f64 },
    FiniteRank {
        eigenvalues: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        basis: Option<Vec<Vec<f64>>>,
    },
    MatrixStationary { channels: Vec<ChannelConfig> },
}

impl KernelConfig {
    /// Materialize the kernel on a grid. A finite-rank kernel without an
    /// explicit basis gets the cosine basis, which is exactly orthonormal on
    /// any midpoint grid.
    pub fn build(&self, grid: &TimeGrid) -> Result<KernelSpec, AppError> {
        let horizon = grid.horizon();
        let spec = match self {
            KernelConfig::Exponential { variance, rate } => {
                KernelSpec::exponential(*variance, *rate, horizon)?
            }
            KernelConfig::BrownianMotion {} => KernelSpec::brownian_motion(horizon)?,
            KernelConfig::BrownianBridge {} => KernelSpec::brownian_bridge(horizon)?,
            KernelConfig::SquaredExponential { variance, length_scale } => {
                KernelSpec::squared_exponential(*variance, *length_scale, horizon)?
            }
            KernelConfig::FiniteRank { eigenvalues, basis } => {
                let basis = match basis {
                    Some(b) => b.clone(),
                    None => cosine_basis(grid, eigenvalues.len()),
                };
                KernelSpec::finite_rank(eigenvalues.clone(), basis, horizon)?
            }
            KernelConfig::MatrixStationary { channels } => {
                let channels = channels
                    .iter()
                    .map(|c| ExponentialChannel { variance: c.variance, rate: c.rate })
                    .collect();
                KernelSpec::matrix_stationary(channels, horizon)?
            }
        };
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub variance: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum GammaConfig {
    Range {
        min: f64,
        max: f64,
        points: usize,
        #[serde(default)]
        spacing: Spacing,
    },
    List(Vec<f64>),
    Value(f64),
}

impl GammaConfig {
    pub fn grid(&self) -> Result<GammaGrid, AppError> {
        Ok(match self {
            GammaConfig::Range { min, max, points, spacing } => match spacing {
                Spacing::Log => GammaGrid::log_spaced(*min, *max, *points)?,
                Spacing::Lin => GammaGrid::linear(*min, *max, *points)?,
            },
            GammaConfig::List(values) => GammaGrid::from_values(values.clone())?,
            GammaConfig::Value(v) => GammaGrid::from_values(vec![*v])?,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Lin,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalConfig {
    GaussianKl {},
    Binary {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub channels: Vec<ChannelConfig>,
}

/// Sizes and tolerance overrides for `immse verify`. Defaults reproduce the
/// full identity suite at desk scale.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Grid size of the Brownian and exponential test spectra.
    pub spectra_n: usize,
    /// Points of the log-spaced gamma grid on [1e-3, 1e2].
    pub gamma_points: usize,
    /// Grid sizes of the innovations-filter refinement study.
    pub innovations_sizes: Vec<usize>,
    /// Random conditioning orders tested for invariance.
    pub permutations: usize,
    /// Random feedback gain draws per gamma.
    pub feedback_draws: usize,
    /// Binary information scales.
    pub binary_scales: Vec<f64>,
    /// Monte Carlo paths of the binary channel run.
    pub mc_paths: usize,
    /// Time grid size of the binary channel run.
    pub binary_grid_n: usize,
    /// Gamma at which the gap ratio is compared to 2.
    pub ratio_gamma: f64,
    /// Points of the log-spaced eta grid for the concavity check.
    pub concavity_points: usize,
    /// Horizons of the Toeplitz convergence study.
    pub toeplitz_horizons: Vec<f64>,
    /// Grid spacing of the Toeplitz study.
    pub toeplitz_delta: f64,
    /// Per-check tolerance overrides, keyed by check name.
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            spectra_n: 400,
            gamma_points: 50,
            innovations_sizes: vec![100, 200, 400],
            permutations: 20,
            feedback_draws: 10,
            binary_scales: vec![0.25, 1.0, 4.0],
            mc_paths: 20_000,
            binary_grid_n: 256,
            ratio_gamma: 1e-4,
            concavity_points: 200,
            toeplitz_horizons: vec![10.0, 20.0, 40.0],
            toeplitz_delta: 0.05,
            tolerances: BTreeMap::new(),
        }
    }
}
