//! Seeded stream generation.
//!
//! All randomness flows through [`Sampler`], a ChaCha12 generator with
//! explicit 64-bit seeding and hand-rolled float conversions, so streams
//! reproduce bit-exactly across platforms and program invocations.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use super::config::{EnvironmentKind, EnvironmentSpec};
use crate::projection::{CenteredBall, DomainOracle, ProbabilitySimplex};
use crate::{Error, Result};

/// Portable seeded sampler.
pub struct Sampler {
    rng: ChaCha12Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform01(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform in `(0, 1]`.
    pub fn uniform01_open_low(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform01()
    }

    pub fn range(&mut self, bound: usize) -> usize {
        (self.rng.next_u64() % bound as u64) as usize
    }

    pub fn sign(&mut self) -> f64 {
        if self.rng.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> f64 {
        if self.uniform01() < p {
            1.0
        } else {
            0.0
        }
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform01_open_low();
        let u2 = self.uniform01();
        (-2.0 * u1.ln()).sqrt() * (2.0 * core::f64::consts::PI * u2).cos()
    }

    /// Uniform direction on the unit sphere.
    pub fn sphere(&mut self, dimension: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dimension).map(|_| self.normal()).collect();
            let norm = v.iter().map(|&x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }

    /// Uniform point in the centered ball of the given radius.
    pub fn ball(&mut self, dimension: usize, radius: f64) -> Vec<f64> {
        let direction = self.sphere(dimension);
        let r = radius * self.uniform01().powf(1.0 / dimension as f64);
        direction.into_iter().map(|x| x * r).collect()
    }
}

/// Which setting a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setting {
    Expert,
    Oco,
}

impl Setting {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Expert => "expert",
            Self::Oco => "optimization",
        }
    }
}

/// One round's loss function in the optimization setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OcoLoss {
    /// `l(w) = <direction, w>`.
    Linear { direction: Vec<f64> },
    /// `l(w) = weight * ||w - center||^2`.
    Quadratic { center: Vec<f64>, weight: f64 },
}

impl OcoLoss {
    pub fn dimension(&self) -> usize {
        match self {
            Self::Linear { direction } => direction.len(),
            Self::Quadratic { center, .. } => center.len(),
        }
    }

    pub fn value(&self, point: &[f64]) -> f64 {
        match self {
            Self::Linear { direction } => crate::numeric::dot(direction, point),
            Self::Quadratic { center, weight } => {
                weight
                    * point
                        .iter()
                        .zip(center)
                        .map(|(&w, &c)| (w - c) * (w - c))
                        .sum::<f64>()
            }
        }
    }

    pub fn gradient(&self, point: &[f64]) -> Vec<f64> {
        match self {
            Self::Linear { direction } => direction.clone(),
            Self::Quadratic { center, weight } => point
                .iter()
                .zip(center)
                .map(|(&w, &c)| 2.0 * weight * (w - c))
                .collect(),
        }
    }

    fn rescale(&mut self, factor: f64) {
        match self {
            Self::Linear { direction } => {
                for x in direction.iter_mut() {
                    *x *= factor;
                }
            }
            Self::Quadratic { weight, .. } => *weight *= factor,
        }
    }
}

/// Prediction domain of an optimization stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DomainKind {
    Ball { radius: f64 },
    Simplex,
}

impl DomainKind {
    pub fn oracle(&self, dimension: usize) -> Box<dyn DomainOracle> {
        match self {
            Self::Ball { radius } => Box::new(CenteredBall {
                dimension,
                radius: *radius,
            }),
            Self::Simplex => Box::new(ProbabilitySimplex { dimension }),
        }
    }

    /// Radius of the smallest centered ball containing the domain.
    pub fn enclosing_radius(&self) -> f64 {
        match self {
            Self::Ball { radius } => *radius,
            // Simplex vertices have unit norm.
            Self::Simplex => 1.0,
        }
    }

    pub fn is_ball(&self) -> bool {
        matches!(self, Self::Ball { .. })
    }
}

/// A fully generated loss stream.
#[derive(Debug, Clone)]
pub enum Stream {
    Expert {
        losses: Vec<Vec<f64>>,
        /// Realized loss range `max_t (max_k - min_k)`, the clairvoyant
        /// tuning input for range-aware baselines.
        range: f64,
    },
    Oco {
        losses: Vec<OcoLoss>,
        domain: DomainKind,
        dimension: usize,
    },
}

impl Stream {
    pub fn setting(&self) -> Setting {
        match self {
            Self::Expert { .. } => Setting::Expert,
            Self::Oco { .. } => Setting::Oco,
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            Self::Expert { losses, .. } => losses.len(),
            Self::Oco { losses, .. } => losses.len(),
        }
    }
}

/// Cumulative multiplier at each round (jumps compound, applying from
/// their round onward; rounds are 1-based).
fn multiplier_schedule(spec: &EnvironmentSpec) -> Vec<f64> {
    let mut jumps = spec.scale_jumps.clone();
    jumps.sort_by_key(|j| j.round);
    let mut schedule = Vec::with_capacity(spec.horizon as usize);
    let mut current = 1.0;
    let mut next = 0usize;
    for t in 1..=spec.horizon {
        while next < jumps.len() && jumps[next].round <= t {
            current *= jumps[next].multiplier;
            next += 1;
        }
        schedule.push(current);
    }
    schedule
}

fn experts_of(spec: &EnvironmentSpec) -> Result<usize> {
    match spec.experts {
        Some(k) if k >= 2 => Ok(k),
        _ => Err(Error::InvalidParameter {
            context: "EnvironmentSpec",
            message: format!("{} needs an expert count >= 2", spec.kind.as_str()),
        }),
    }
}

fn dimension_of(spec: &EnvironmentSpec) -> Result<usize> {
    match spec.dimension {
        Some(d) if d >= 1 => Ok(d),
        _ => Err(Error::InvalidParameter {
            context: "EnvironmentSpec",
            message: format!("{} needs a dimension >= 1", spec.kind.as_str()),
        }),
    }
}

fn expert_stream(losses: Vec<Vec<f64>>) -> Stream {
    let range = losses
        .iter()
        .map(|row| {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = row.iter().copied().fold(f64::INFINITY, f64::min);
            max - min
        })
        .fold(0.0f64, f64::max);
    Stream::Expert { losses, range }
}

/// Generates the stream a spec describes. The seed fully determines the
/// output.
pub fn generate(spec: &EnvironmentSpec) -> Result<Stream> {
    spec.validate()?;
    let mut sampler = Sampler::new(spec.seed);
    let schedule = multiplier_schedule(spec);
    let horizon = spec.horizon as usize;

    match spec.kind {
        EnvironmentKind::ExpertBernoulli => {
            let experts = experts_of(spec)?;
            let means: Vec<f64> = (0..experts)
                .map(|k| 0.25 + 0.5 * k as f64 / (experts - 1) as f64)
                .collect();
            let losses = (0..horizon)
                .map(|t| {
                    means
                        .iter()
                        .map(|&p| schedule[t] * sampler.bernoulli(p))
                        .collect()
                })
                .collect();
            Ok(expert_stream(losses))
        }
        EnvironmentKind::AdversarialSigns => match (spec.experts, spec.dimension) {
            (Some(_), None) => {
                // Deterministic alternation: the round winner always loses
                // the next round, the worst case for overly aggressive
                // learning rates (a mistuned range guess degenerates into
                // follow-the-leader and pays linear regret here).
                let experts = experts_of(spec)?;
                let losses = (0..horizon)
                    .map(|t| {
                        (0..experts)
                            .map(|k| {
                                let sign = if (t + k) % 2 == 0 { 1.0 } else { -1.0 };
                                schedule[t] * sign
                            })
                            .collect()
                    })
                    .collect();
                Ok(expert_stream(losses))
            }
            (None, Some(_)) => {
                let dimension = dimension_of(spec)?;
                let scale = 1.0 / (dimension as f64).sqrt();
                let losses = (0..horizon)
                    .map(|t| OcoLoss::Linear {
                        direction: (0..dimension)
                            .map(|_| schedule[t] * scale * sampler.sign())
                            .collect(),
                    })
                    .collect();
                Ok(Stream::Oco {
                    losses,
                    domain: DomainKind::Ball { radius: 1.0 },
                    dimension,
                })
            }
            _ => Err(Error::InvalidParameter {
                context: "EnvironmentSpec",
                message: "adversarial-signs needs exactly one of experts or dimension".to_string(),
            }),
        },
        EnvironmentKind::ScaleJump => match (spec.experts, spec.dimension) {
            (Some(_), None) => {
                let experts = experts_of(spec)?;
                let losses = (0..horizon)
                    .map(|t| {
                        (0..experts)
                            .map(|_| schedule[t] * sampler.uniform01())
                            .collect()
                    })
                    .collect();
                Ok(expert_stream(losses))
            }
            (None, Some(_)) => {
                let dimension = dimension_of(spec)?;
                let losses = (0..horizon)
                    .map(|t| {
                        let magnitude = schedule[t] * sampler.uniform01_open_low();
                        OcoLoss::Linear {
                            direction: sampler
                                .sphere(dimension)
                                .into_iter()
                                .map(|x| magnitude * x)
                                .collect(),
                        }
                    })
                    .collect();
                Ok(Stream::Oco {
                    losses,
                    domain: DomainKind::Ball { radius: 1.0 },
                    dimension,
                })
            }
            _ => Err(Error::InvalidParameter {
                context: "EnvironmentSpec",
                message: "scale-jump needs exactly one of experts or dimension".to_string(),
            }),
        },
        EnvironmentKind::IidBernsteinQuadratic => {
            let dimension = dimension_of(spec)?;
            let losses = (0..horizon)
                .map(|t| {
                    let mut loss = OcoLoss::Quadratic {
                        center: sampler.ball(dimension, 0.5),
                        weight: 1.0,
                    };
                    loss.rescale(schedule[t]);
                    loss
                })
                .collect();
            Ok(Stream::Oco {
                losses,
                domain: DomainKind::Ball { radius: 1.0 },
                dimension,
            })
        }
        EnvironmentKind::SimplexLinear => {
            let dimension = dimension_of(spec)?;
            if dimension < 2 {
                return Err(Error::InvalidParameter {
                    context: "EnvironmentSpec",
                    message: "simplex-linear needs dimension >= 2".to_string(),
                });
            }
            let losses = (0..horizon)
                .map(|t| OcoLoss::Linear {
                    direction: (0..dimension)
                        .map(|_| schedule[t] * sampler.uniform01())
                        .collect(),
                })
                .collect();
            Ok(Stream::Oco {
                losses,
                domain: DomainKind::Simplex,
                dimension,
            })
        }
    }
}
