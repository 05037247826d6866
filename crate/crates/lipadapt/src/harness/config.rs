//! Experiment configuration, loadable from JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A scheduled scale change: every round from `round` onward is
/// multiplied by `multiplier` (jumps compound).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleJump {
    pub round: u64,
    pub multiplier: f64,
}

/// Which stream generator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvironmentKind {
    /// Random sign patterns (expert losses or linear-loss directions).
    AdversarialSigns,
    /// Uniform base stream meant to be combined with scale jumps.
    ScaleJump,
    /// I.i.d. quadratic losses `||w - x_t||^2` on the ball: strongly
    /// convex, so second-order methods should reach log-like regret.
    IidBernsteinQuadratic,
    /// Bernoulli expert losses with spread means.
    ExpertBernoulli,
    /// Linear losses on the probability simplex (exercises the
    /// ball reduction).
    SimplexLinear,
}

impl EnvironmentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::AdversarialSigns => "adversarial-signs",
            Self::ScaleJump => "scale-jump",
            Self::IidBernsteinQuadratic => "iid-bernstein-quadratic",
            Self::ExpertBernoulli => "expert-bernoulli",
            Self::SimplexLinear => "simplex-linear",
        }
    }
}

/// A fully seeded stream description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub kind: EnvironmentKind,
    /// Expert count (expert-setting kinds).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experts: Option<usize>,
    /// Dimension (optimization-setting kinds).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    pub horizon: u64,
    #[serde(default)]
    pub scale_jumps: Vec<ScaleJump>,
    pub seed: u64,
}

impl EnvironmentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter {
                context: "EnvironmentSpec",
                message: "horizon must be at least 1".to_string(),
            });
        }
        for jump in &self.scale_jumps {
            if !(jump.multiplier.is_finite() && jump.multiplier > 0.0) {
                return Err(Error::InvalidParameter {
                    context: "EnvironmentSpec",
                    message: format!("scale multiplier must be positive, got {}", jump.multiplier),
                });
            }
        }
        Ok(())
    }
}

fn default_guess_factor() -> f64 {
    1.0
}

/// Algorithm selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name")]
pub enum AlgorithmSpec {
    /// Scale-free expert aggregation (restart-wrapped).
    #[serde(rename = "squint+l")]
    SquintL,
    /// Scale-free ball-domain optimization (restart-wrapped).
    #[serde(rename = "metagrad+l")]
    MetaGradL,
    /// Scale-free optimization on an arbitrary domain through the ball
    /// reduction.
    #[serde(rename = "metagrad+l-reduced")]
    MetaGradLReduced,
    /// Fixed-rate exponential weights. `lipschitz_guess_factor` scales the
    /// clairvoyant range estimate used for tuning: 1 is the oracle tuning,
    /// 0.01 underestimates the range a hundredfold.
    #[serde(rename = "hedge")]
    Hedge {
        #[serde(default = "default_guess_factor")]
        lipschitz_guess_factor: f64,
    },
    /// Projected gradient descent with the gradient-norm-adaptive step.
    #[serde(rename = "ogd-adanorm")]
    OgdAdanorm,
}

impl AlgorithmSpec {
    /// Output label; clairvoyantly tuned baselines are marked `-oracle`.
    pub fn label(&self) -> String {
        match self {
            Self::SquintL => "squint+l".to_string(),
            Self::MetaGradL => "metagrad+l".to_string(),
            Self::MetaGradLReduced => "metagrad+l-reduced".to_string(),
            Self::Hedge {
                lipschitz_guess_factor,
            } => {
                if *lipschitz_guess_factor == 1.0 {
                    "hedge-oracle".to_string()
                } else {
                    "hedge-mistuned".to_string()
                }
            }
            Self::OgdAdanorm => "ogd-adanorm".to_string(),
        }
    }
}

/// Verification tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Allowed negative slack on regret bounds when `--verify` is set.
    pub bound_slack: f64,
    /// Allowed slack on potential and clipping-identity checks.
    pub invariant_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            bound_slack: 1e-9,
            invariant_slack: 1e-9,
        }
    }
}

/// A complete experiment: environment, algorithm, options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub environment: EnvironmentSpec,
    pub algorithm: AlgorithmSpec,
    /// Record the diagnostic potential per round (quadrature-priced for
    /// the expert learner; keep off for long horizons).
    #[serde(default)]
    pub record_potential: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text)?;
        config.environment.validate()?;
        Ok(config)
    }
}
