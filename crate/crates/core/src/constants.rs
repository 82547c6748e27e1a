//! Physical constants and unit conversions used at the I/O boundary.

use std::f64::consts::TAU;

/// Boltzmann constant, J/K (exact SI value).
pub const K_B: f64 = 1.380_649e-23;

/// Mass of a ⁸⁷Rb atom, kg.
pub const RB87_MASS: f64 = 1.443_16e-25;

pub const US: f64 = 1e-6;
pub const UM: f64 = 1e-6;
pub const UK: f64 = 1e-6;
pub const MK: f64 = 1e-3;
pub const MHZ: f64 = 1e6;

/// Angular frequency (rad/s) of an ordinary frequency given in kHz.
pub fn omega_from_khz(khz: f64) -> f64 {
    TAU * khz * 1e3
}

/// Ordinary frequency in kHz of an angular frequency in rad/s.
pub fn khz_from_omega(omega: f64) -> f64 {
    omega / TAU / 1e3
}

/// Energy (J) corresponding to a temperature-equivalent trap depth in mK.
pub fn depth_from_mk(mk: f64) -> f64 {
    K_B * mk * MK
}
