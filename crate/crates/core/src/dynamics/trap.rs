use serde::{Deserialize, Serialize};

use crate::analytic::depth_from_omega;
use crate::error::{ensure_non_negative, ensure_positive, invalid, Result};

/// Spatial profile of the tweezer potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrapShape {
    /// `U = min(m ω² r²/2 − U₀, 0)` with `U₀ = m ω² d²/2`; radially symmetric.
    HarmonicCutoff { omega: f64, d: f64 },
    /// `U = −U₀ · p · exp(−2x²/w_x² − 2y²/w_y²)`.
    GaussianBeam { u0: f64, waist_x: f64, waist_y: f64 },
}

/// Power ramp shape applied over the rise and fall times.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    #[default]
    Linear,
    Cosine,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapModel {
    pub shape: TrapShape,
    /// s
    pub rise_time: f64,
    /// s
    pub fall_time: f64,
    #[serde(default)]
    pub ramp: RampShape,
}

impl TrapModel {
    pub fn harmonic_cutoff(omega: f64, d: f64) -> Result<Self> {
        let t = Self {
            shape: TrapShape::HarmonicCutoff { omega, d },
            rise_time: 0.0,
            fall_time: 0.0,
            ramp: RampShape::Linear,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn gaussian_beam(u0: f64, waist_x: f64, waist_y: f64) -> Result<Self> {
        let t = Self {
            shape: TrapShape::GaussianBeam { u0, waist_x, waist_y },
            rise_time: 0.0,
            fall_time: 0.0,
            ramp: RampShape::Linear,
        };
        t.validate()?;
        Ok(t)
    }

    /// Gaussian beam whose small-oscillation frequency along `y` is `omega`
    /// and whose depth equals the harmonic-cutoff depth for width `d`, so
    /// `w_y = √2·d`. The `x` waist is longer by `ellipticity`.
    pub fn gaussian_matched(omega: f64, d: f64, mass: f64, ellipticity: f64) -> Result<Self> {
        ensure_positive("omega", omega)?;
        ensure_positive("d", d)?;
        ensure_positive("ellipticity", ellipticity)?;
        let u0 = depth_from_omega(omega, d, mass);
        let w = std::f64::consts::SQRT_2 * d;
        Self::gaussian_beam(u0, w * ellipticity, w)
    }

    pub fn with_ramps(mut self, rise_time: f64, fall_time: f64) -> Result<Self> {
        self.rise_time = rise_time;
        self.fall_time = fall_time;
        self.validate()?;
        Ok(self)
    }

    pub fn with_ramp_shape(mut self, ramp: RampShape) -> Self {
        self.ramp = ramp;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.shape {
            TrapShape::HarmonicCutoff { omega, d } => {
                ensure_positive("omega", omega)?;
                ensure_positive("d", d)?;
            }
            TrapShape::GaussianBeam { u0, waist_x, waist_y } => {
                ensure_positive("u0", u0)?;
                ensure_positive("waist_x", waist_x)?;
                ensure_positive("waist_y", waist_y)?;
            }
        }
        ensure_non_negative("rise_time", self.rise_time)?;
        ensure_non_negative("fall_time", self.fall_time)
    }

    /// Small-oscillation angular frequencies `[ω_x, ω_y]` at full power.
    pub fn harmonic_omega(&self, mass: f64) -> [f64; 2] {
        match self.shape {
            TrapShape::HarmonicCutoff { omega, .. } => [omega, omega],
            TrapShape::GaussianBeam { u0, waist_x, waist_y } => [
                (4.0 * u0 / (mass * waist_x * waist_x)).sqrt(),
                (4.0 * u0 / (mass * waist_y * waist_y)).sqrt(),
            ],
        }
    }

    /// Trap depth `U₀`, J.
    pub fn depth(&self, mass: f64) -> f64 {
        match self.shape {
            TrapShape::HarmonicCutoff { omega, d } => depth_from_omega(omega, d, mass),
            TrapShape::GaussianBeam { u0, .. } => u0,
        }
    }

    pub(crate) fn kernel(&self, mass: f64) -> Kernel {
        match self.shape {
            TrapShape::HarmonicCutoff { omega, d } => Kernel::Harmonic {
                omega2: omega * omega,
                d2: d * d,
                depth: 0.5 * omega * omega * d * d,
            },
            TrapShape::GaussianBeam { u0, waist_x, waist_y } => Kernel::Gaussian {
                depth: u0 / mass,
                kx: 2.0 / (waist_x * waist_x),
                ky: 2.0 / (waist_y * waist_y),
            },
        }
    }
}

/// Potential and force per unit mass, with precomputed constants.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Kernel {
    Harmonic { omega2: f64, d2: f64, depth: f64 },
    Gaussian { depth: f64, kx: f64, ky: f64 },
}

impl Kernel {
    /// Acceleration at displacement `r` from the trap center, power `p`.
    #[inline]
    pub(crate) fn accel(&self, r: [f64; 2], p: f64) -> [f64; 2] {
        match *self {
            Kernel::Harmonic { omega2, d2, .. } => {
                if r[0] * r[0] + r[1] * r[1] < d2 {
                    let k = -omega2 * p;
                    [k * r[0], k * r[1]]
                } else {
                    [0.0, 0.0]
                }
            }
            Kernel::Gaussian { depth, kx, ky } => {
                let e = (-kx * r[0] * r[0] - ky * r[1] * r[1]).exp();
                let k = -2.0 * depth * p * e;
                [k * kx * r[0], k * ky * r[1]]
            }
        }
    }

    /// Potential per unit mass at full power.
    #[inline]
    pub(crate) fn potential(&self, r: [f64; 2]) -> f64 {
        let r2 = r[0] * r[0] + r[1] * r[1];
        match *self {
            Kernel::Harmonic { omega2, depth, .. } => (0.5 * omega2 * r2 - depth).min(0.0),
            Kernel::Gaussian { depth, kx, ky } => -depth * (-kx * r[0] * r[0] - ky * r[1] * r[1]).exp(),
        }
    }
}

/// Potential (J) and force (N) at `position` relative to the trap center,
/// with optical power scaled by `power_fraction`.
pub fn potential_and_force(
    trap: &TrapModel,
    mass: f64,
    position: [f64; 2],
    power_fraction: f64,
) -> Result<(f64, [f64; 2])> {
    if !(0.0..=1.0).contains(&power_fraction) {
        return Err(invalid(format!(
            "power_fraction must lie in [0, 1], got {power_fraction}"
        )));
    }
    ensure_positive("mass", mass)?;
    let k = trap.kernel(mass);
    let a = k.accel(position, power_fraction);
    let u = k.potential(position) * power_fraction * mass;
    Ok((u, [a[0] * mass, a[1] * mass]))
}

/// Optical power fraction across one on-phase of length `duration`:
/// rises over `rise`, falls over `fall`, clipped to the peak
/// `duration/(rise + fall)` when the phase is too short for both ramps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerProfile {
    duration: f64,
    inv_rise: f64,
    inv_fall: f64,
    shape: RampShape,
}

impl PowerProfile {
    pub fn new(trap: &TrapModel, duration: f64) -> Self {
        let inv = |t: f64| if t > 0.0 { 1.0 / t } else { f64::INFINITY };
        Self {
            duration,
            inv_rise: inv(trap.rise_time),
            inv_fall: inv(trap.fall_time),
            shape: trap.ramp,
        }
    }

    pub fn is_flat(&self) -> bool {
        self.inv_rise.is_infinite() && self.inv_fall.is_infinite()
    }

    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        if self.is_flat() {
            return 1.0;
        }
        let up = if self.inv_rise.is_infinite() { 1.0 } else { t * self.inv_rise };
        let down = if self.inv_fall.is_infinite() {
            1.0
        } else {
            (self.duration - t) * self.inv_fall
        };
        let u = up.min(down).clamp(0.0, 1.0);
        match self.shape {
            RampShape::Linear => u,
            RampShape::Cosine => 0.5 * (1.0 - (std::f64::consts::PI * u).cos()),
        }
    }

    /// Highest power reached during the phase.
    pub fn peak(&self) -> f64 {
        let total = 1.0 / self.inv_rise + 1.0 / self.inv_fall;
        let u = if total > 0.0 { (self.duration / total).min(1.0) } else { 1.0 };
        match self.shape {
            RampShape::Linear => u,
            RampShape::Cosine => 0.5 * (1.0 - (std::f64::consts::PI * u).cos()),
        }
    }
}
