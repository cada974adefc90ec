//! Damped least-squares engine and the domain fits built on it: ODMR
//! spectra, thermal resonance models, susceptibility lines, relaxation
//! traces, and relaxation-rate curves.

mod engine;
mod odmr;
mod relaxation;
mod thermal;

pub use engine::least_squares_fit;
pub use odmr::{fit_odmr, AmplitudeMode, BranchCoverage, OdmrFit};
pub(crate) use odmr::ratio_weights;
pub use relaxation::{
    fit_relaxation, fit_t1_trace, EnergyConstraint, RelaxationMode, RelaxationParams,
};
pub use thermal::{fit_susceptibility, fit_thermal, ThermalModelParams};

use nalgebra::DMatrix;

/// One observation. `x` is temperature (K), time (ms), or frequency (MHz)
/// depending on the fit; `sigma_y` weights the residual when present.
#[derive(Clone, Copy, Debug)]
pub struct SeriesPoint {
    pub x: f64,
    pub y: f64,
    pub sigma_y: Option<f64>,
}

impl SeriesPoint {
    pub fn new(x: f64, y: f64) -> Self {
        SeriesPoint { x, y, sigma_y: None }
    }

    pub fn with_sigma(x: f64, y: f64, sigma_y: f64) -> Self {
        SeriesPoint {
            x,
            y,
            sigma_y: Some(sigma_y),
        }
    }
}

/// How a fit ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitStatus {
    /// An accepted step met the residual or step tolerance, or the gradient
    /// vanished.
    Converged,
    /// Iteration cap reached while still improving.
    IterationCap,
    /// No damped step reduced the residual and the gradient is not small.
    Stalled,
    /// The normal matrix was singular (at the start or when computing the
    /// covariance).
    SingularNormalMatrix,
}

/// Optimizer knobs. The defaults are the contract; change them only in
/// tests that probe the engine itself.
#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// lambda_0 = lambda_init_scale * max diag(J^T J).
    pub lambda_init_scale: f64,
    /// Multiply lambda by this on a rejected step.
    pub lambda_up: f64,
    /// Divide lambda by this on an accepted step.
    pub lambda_down: f64,
    /// Central-difference step, relative to max(|p|, 1).
    pub fd_relative_step: f64,
    /// Converged when an accepted step reduces the residual by less than
    /// this fraction.
    pub ssr_relative_tol: f64,
    /// Converged when an accepted step moves every parameter by less than
    /// this fraction of max(|p|, 1).
    pub step_relative_tol: f64,
    /// Converged when max |gradient| <= gradient_tol * max(ssr, 1).
    pub gradient_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            lambda_init_scale: 1e-3,
            lambda_up: 8.0,
            lambda_down: 8.0,
            fd_relative_step: 1e-6,
            ssr_relative_tol: 1e-12,
            step_relative_tol: 1e-10,
            gradient_tol: 1e-12,
        }
    }
}

/// Result of a least-squares fit. Parameters are addressable by the names
/// given at call time.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    /// One-standard-deviation uncertainties, sqrt of the covariance diagonal.
    pub sigmas: Vec<f64>,
    /// sqrt of the weighted sum of squared residuals at the solution.
    pub residual_norm: f64,
    /// s^2 * (J^T J)^{-1} with s^2 = SSR / max(n - p, 1). NaN-filled when
    /// the final normal matrix is singular.
    pub covariance: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub status: FitStatus,
    /// Weighted SSR at the start plus after every accepted step;
    /// non-increasing by construction.
    pub ssr_history: Vec<f64>,
}

impl FitResult {
    pub fn ssr(&self) -> f64 {
        self.residual_norm * self.residual_norm
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|n| n == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.params[i])
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.sigmas[i])
    }
}
