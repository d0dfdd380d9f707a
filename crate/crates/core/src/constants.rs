//! Physical constants (CODATA 2018, SI units).

use serde::{Deserialize, Serialize};

/// Constants used by the thermal and geometric formulas. Override any of them
/// to work in natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Newton's constant, m³/(kg·s²).
    pub newton_g: f64,
}

pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const NEWTON_G: f64 = 6.674_30e-11;

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: HBAR,
            k_b: BOLTZMANN,
            c: SPEED_OF_LIGHT,
            newton_g: NEWTON_G,
        }
    }
}

impl PhysicalConstants {
    /// ħ = k_B = c = G = 1.
    pub fn natural() -> Self {
        Self {
            hbar: 1.0,
            k_b: 1.0,
            c: 1.0,
            newton_g: 1.0,
        }
    }

    /// Unruh temperature `ħ a / (2π k_B c)` for a proper acceleration (or
    /// Killing orbit accelerator) `a`.
    pub fn unruh_temperature(&self, a: f64) -> f64 {
        self.hbar * a / (std::f64::consts::TAU * self.k_b * self.c)
    }
}
