use serde::{Deserialize, Serialize};

use crate::error::{ensure, invalid, Result};
use crate::geometry::SphereCenter;
use crate::resample::ChainConfig;

pub const SPEED_OF_SOUND: f64 = 343.0;

/// Control knobs for one simulation call.
///
/// `alpha`/`beta` bound the support of the quadratic distance-ratio density,
/// `perturb_a`/`perturb_b` bound the uniform reflection-count perturbation
/// and `tau` shrinks that perturbation with distance. The defaults for
/// these five are implementation choices: they keep the perturbation a
/// small fraction of the maximum reflection count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Seconds.
    pub t60: f64,
    /// Target sample rate in Hz.
    pub sample_rate: u32,
    /// Number of virtual sources per source. Quality and cost both grow with it.
    pub num_images: usize,
    pub alpha: f64,
    pub beta: f64,
    pub perturb_a: f64,
    pub perturb_b: f64,
    pub tau: f64,
    /// Metres per second.
    pub sound_speed: f64,
    pub seed: u64,
    pub sphere_center: SphereCenter,
    pub chain: ChainConfig,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            t60: 0.5,
            sample_rate: 16_000,
            num_images: 2048,
            alpha: 0.1,
            beta: 1.0,
            perturb_a: -2.0,
            perturb_b: 2.0,
            tau: 0.25,
            sound_speed: SPEED_OF_SOUND,
            seed: 0,
            sphere_center: SphereCenter::Centroid,
            chain: ChainConfig::default(),
        }
    }
}

impl SimParams {
    pub fn with_t60(mut self, t60: f64) -> Self {
        self.t60 = t60;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_images(mut self, n: usize) -> Self {
        self.num_images = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.t60.is_finite() && self.t60 > 0.0, || {
            format!("t60 must be positive, got {}", self.t60)
        })?;
        ensure(self.sample_rate > 0, || {
            "sample rate must be positive".into()
        })?;
        if !(self.alpha >= 0.0 && self.alpha < self.beta && self.beta <= 1.0) {
            return Err(invalid(format!(
                "distance-ratio bounds need 0 <= alpha < beta <= 1, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        ensure(self.tau.is_finite() && self.tau > 0.0, || {
            format!("tau must be positive, got {}", self.tau)
        })?;
        ensure(
            self.perturb_a.is_finite()
                && self.perturb_b.is_finite()
                && self.perturb_a <= self.perturb_b,
            || {
                format!(
                    "perturbation bounds need a <= b, got a={} b={}",
                    self.perturb_a, self.perturb_b
                )
            },
        )?;
        ensure(
            self.sound_speed.is_finite() && self.sound_speed > 0.0,
            || "sound speed must be positive".into(),
        )?;
        self.chain.validate()
    }

    /// Longest propagation distance a virtual source may have.
    pub fn max_distance(&self) -> f64 {
        self.sound_speed * self.t60
    }
}
