//! Wrist force/torque sensor with bias, white noise and a zero offset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::Wrench;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    /// Additive bias (N, N*mm), tool frame.
    pub bias: Wrench,
    /// Per-axis force noise sigma, N.
    pub noise_force: f64,
    /// Per-axis torque noise sigma, N*mm.
    pub noise_torque: f64,
    /// Subtracted from every reading; captured by zero adjustment.
    pub zero_offset: Wrench,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self { bias: Wrench::zero(), noise_force: 0.2, noise_torque: 5.0, zero_offset: Wrench::zero() }
    }
}

/// `true + bias - zero_offset + N(0, sigma)` per axis.
pub fn read_wrench<R: Rng + ?Sized>(truth: &Wrench, sensor: &SensorModel, rng: &mut R) -> Wrench {
    let mut noise = [0.0; 6];
    for (i, n) in noise.iter_mut().enumerate() {
        let z: f64 = StandardNormal.sample(rng);
        let sigma = if i < 3 { sensor.noise_force } else { sensor.noise_torque };
        *n = sigma * z;
    }
    let noise = Wrench::from_array(noise);
    *truth + sensor.bias - sensor.zero_offset + noise
}

/// A sensor instance with its own deterministic noise stream.
#[derive(Debug, Clone)]
pub struct Sensor {
    pub model: SensorModel,
    rng: ChaCha8Rng,
}

impl Sensor {
    pub fn new(model: SensorModel, seed: u64) -> Self {
        Self { model, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn read(&mut self, truth: &Wrench) -> Wrench {
        read_wrench(truth, &self.model, &mut self.rng)
    }

    /// Folds the mean of the given free-space readings into the zero offset,
    /// so the same free-space load subsequently reads zero.
    pub fn absorb_zero(&mut self, free_space_mean: &Wrench) {
        self.model.zero_offset = self.model.zero_offset + *free_space_mean;
    }
}
