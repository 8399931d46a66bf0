use serde::{Deserialize, Serialize};

use crate::error::{OtError, Result};
use crate::solvers::PenalizedMethod;

/// Which discrete transport model to solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    /// `A (m, f) = f⁻` enforced exactly.
    Constrained,
    /// `λ ‖A (m, f) - f⁻‖²` added to the energy.
    Penalized { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TvKind {
    #[default]
    Anisotropic,
    Isotropic,
}

impl std::str::FromStr for TvKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "anisotropic" | "aniso" => Ok(TvKind::Anisotropic),
            "isotropic" | "iso" => Ok(TvKind::Isotropic),
            other => Err(format!("unknown TV kind '{other}' (expected anisotropic or isotropic)")),
        }
    }
}

pub const DEFAULT_SIGMA: f64 = 50.0;
pub const DEFAULT_ITERATIONS: usize = 2000;
pub const DEFAULT_TIME_STEPS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub model: Model,
    pub p: f64,
    pub theta: f64,
    pub sigma: f64,
    pub tau: f64,
    pub iterations: usize,
    /// Stop early once the dual residual drops below this value.
    pub tolerance: Option<f64>,
    pub tv_gamma: f64,
    pub tv_kind: TvKind,
    /// Clip emitted interior frames to `[0, 1]`; solver state is untouched.
    pub gamut_clamp: bool,
    pub penalized_method: PenalizedMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            model: Model::Constrained,
            p: 2.0,
            theta: 1.0,
            sigma: DEFAULT_SIGMA,
            tau: 0.99 / DEFAULT_SIGMA,
            iterations: DEFAULT_ITERATIONS,
            tolerance: None,
            tv_gamma: 0.0,
            tv_kind: TvKind::Anisotropic,
            gamut_clamp: false,
            penalized_method: PenalizedMethod::Auto,
        }
    }
}

impl SolverConfig {
    pub fn constrained() -> Self {
        Self::default()
    }

    pub fn penalized(lambda: f64) -> Self {
        SolverConfig {
            model: Model::Penalized { lambda },
            ..Self::default()
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    /// Sets σ and keeps `τ = 0.99/σ`.
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self.tau = 0.99 / sigma;
        self
    }

    pub fn with_steps(mut self, sigma: f64, tau: f64) -> Self {
        self.sigma = sigma;
        self.tau = tau;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_tolerance(mut self, tol: Option<f64>) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_tv(mut self, gamma: f64, kind: TvKind) -> Self {
        self.tv_gamma = gamma;
        self.tv_kind = kind;
        self
    }

    pub fn with_gamut_clamp(mut self, clamp: bool) -> Self {
        self.gamut_clamp = clamp;
        self
    }

    pub fn with_penalized_method(mut self, method: PenalizedMethod) -> Self {
        self.penalized_method = method;
        self
    }

    pub fn lambda(&self) -> Option<f64> {
        match self.model {
            Model::Constrained => None,
            Model::Penalized { lambda } => Some(lambda),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(OtError::InvalidConfig(msg));
        if !(self.p > 1.0 && self.p <= 2.0) {
            return bad(format!("p must lie in (1, 2], got {}", self.p));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return bad(format!("θ must lie in (0, 1], got {}", self.theta));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite() && self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("σ and τ must be positive, got σ={}, τ={}", self.sigma, self.tau));
        }
        if self.sigma * self.tau >= 1.0 {
            return bad(format!("step sizes need στ < 1, got στ={}", self.sigma * self.tau));
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if let Some(t) = self.tolerance {
            if t.is_nan() || t <= 0.0 {
                return bad(format!("tolerance must be positive, got {t}"));
            }
        }
        if !(self.tv_gamma >= 0.0 && self.tv_gamma.is_finite()) {
            return bad(format!("tv_gamma must be non-negative, got {}", self.tv_gamma));
        }
        if let Model::Penalized { lambda } = self.model {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return bad(format!("λ must be positive, got {lambda}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = SolverConfig::default();
        assert_eq!(c.sigma, 50.0);
        assert!((c.tau - 0.99 / 50.0).abs() < 1e-15);
        assert_eq!(c.theta, 1.0);
        assert_eq!(c.iterations, 2000);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_large_steps() {
        assert!(SolverConfig::default().with_steps(2.0, 0.5).validate().is_err());
        assert!(SolverConfig::default().with_steps(2.0, 0.49).validate().is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(SolverConfig::default().with_p(1.0).validate().is_err());
        assert!(SolverConfig::default().with_p(2.1).validate().is_err());
        assert!(SolverConfig::default().with_theta(0.0).validate().is_err());
        assert!(SolverConfig::penalized(0.0).validate().is_err());
        assert!(SolverConfig::default().with_tv(-1.0, TvKind::Anisotropic).validate().is_err());
        assert!(SolverConfig::default().with_iterations(0).validate().is_err());
    }

    #[test]
    fn serde_round_trip() {
        let c = SolverConfig::penalized(3.0).with_tv(0.1, TvKind::Anisotropic);
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"kind\":\"penalized\""));
        let back: SolverConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
