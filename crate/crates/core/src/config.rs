//! JSON run configuration in laboratory units (μs, μK, μm, kHz, mK).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{linspace, omega_from_trap, AtomSpec};
use crate::constants::{depth_from_mk, omega_from_khz, RB87_MASS, UK, UM, US};
use crate::dynamics::{Axes, BlinkTiming, RampShape, SimConfig, TrapModel, DEFAULT_STEPS_PER_ON};
use crate::error::{Error, Result};

/// A single value or `points` evenly spaced values from `start` to `stop`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridRange {
    Value(f64),
    Span { start: f64, stop: f64, points: usize },
}

impl GridRange {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Self::Value(v) => vec![v],
            Self::Span { start, stop, points } => linspace(start, stop, points),
        }
    }

    fn check(&self, name: &str) -> Result<()> {
        let (lo, hi, n) = match *self {
            Self::Value(v) => (v, v, 1),
            Self::Span { start, stop, points } => (start, stop, points),
        };
        if n == 0 {
            return Err(Error::Config(format!("{name}.points must be at least 1")));
        }
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi < lo {
            return Err(Error::Config(format!(
                "{name} must satisfy 0 <= start <= stop, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

/// Trap description. Harmonic and matched-Gaussian traps take either
/// `omega_khz` or `depth_mk` together with the width `d_um`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrapConfig {
    HarmonicCutoff {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega_khz: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth_mk: Option<f64>,
        d_um: f64,
    },
    Gaussian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega_khz: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth_mk: Option<f64>,
        d_um: f64,
        /// Ratio of the long to the short waist.
        #[serde(default = "one")]
        ellipticity: f64,
    },
    GaussianBeam {
        depth_mk: f64,
        waist_x_um: f64,
        waist_y_um: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn resolve_omega(omega_khz: Option<f64>, depth_mk: Option<f64>, d: f64, mass: f64) -> Result<f64> {
    match (omega_khz, depth_mk) {
        (Some(f), None) => Ok(omega_from_khz(f)),
        (None, Some(mk)) => omega_from_trap(depth_from_mk(mk), d, mass),
        _ => Err(Error::Config(
            "trap needs exactly one of omega_khz and depth_mk".into(),
        )),
    }
}

impl TrapConfig {
    pub fn to_model(&self, mass: f64) -> Result<TrapModel> {
        match *self {
            Self::HarmonicCutoff {
                omega_khz,
                depth_mk,
                d_um,
            } => {
                let d = d_um * UM;
                TrapModel::harmonic_cutoff(resolve_omega(omega_khz, depth_mk, d, mass)?, d)
            }
            Self::Gaussian {
                omega_khz,
                depth_mk,
                d_um,
                ellipticity,
            } => {
                let d = d_um * UM;
                TrapModel::gaussian_matched(resolve_omega(omega_khz, depth_mk, d, mass)?, d, mass, ellipticity)
            }
            Self::GaussianBeam {
                depth_mk,
                waist_x_um,
                waist_y_um,
            } => TrapModel::gaussian_beam(depth_from_mk(depth_mk), waist_x_um * UM, waist_y_um * UM),
        }
    }
}

/// Configuration for a survival heatmap over `(t_on, t_off)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub trap: TrapConfig,
    #[serde(default)]
    pub rise_time_us: f64,
    #[serde(default)]
    pub fall_time_us: f64,
    #[serde(default)]
    pub ramp: RampShape,
    pub temperature_uk: f64,
    #[serde(default = "rb87_mass")]
    pub mass_kg: f64,
    #[serde(default = "default_n_blink")]
    pub n_blink: u32,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub lifetime_loss: f64,
    #[serde(default)]
    pub axes: Axes,
    #[serde(default = "default_steps")]
    pub steps_per_on: u32,
    #[serde(default)]
    pub dt_us: Option<f64>,
    pub t_on_us: GridRange,
    pub t_off_us: GridRange,
}

fn rb87_mass() -> f64 {
    RB87_MASS
}

fn default_n_blink() -> u32 {
    100
}

fn default_samples() -> usize {
    1000
}

fn default_steps() -> u32 {
    DEFAULT_STEPS_PER_ON
}

impl McConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.t_on_us.check("t_on_us")?;
        self.t_off_us.check("t_off_us")?;
        self.base_sim().map(|_| ()).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::Config(m),
            other => other,
        })
    }

    pub fn t_on_values(&self) -> Vec<f64> {
        self.t_on_us.values().into_iter().map(|v| v * US).collect()
    }

    pub fn t_off_values(&self) -> Vec<f64> {
        self.t_off_us.values().into_iter().map(|v| v * US).collect()
    }

    /// Simulation settings shared by every grid cell; the cell timing is
    /// filled in by the sweep.
    pub fn base_sim(&self) -> Result<SimConfig> {
        let atom = AtomSpec::new(self.mass_kg, self.temperature_uk * UK)?;
        let trap = self
            .trap
            .to_model(self.mass_kg)?
            .with_ramps(self.rise_time_us * US, self.fall_time_us * US)?
            .with_ramp_shape(self.ramp);
        let mut sim = SimConfig::new(trap, atom, BlinkTiming::new(0.0, 0.0, self.n_blink, 1)?);
        sim.n_samples = self.samples;
        sim.seed = self.seed;
        sim.lifetime_loss = self.lifetime_loss;
        sim.axes = self.axes;
        sim.steps_per_on = self.steps_per_on;
        sim.dt = self.dt_us.map(|v| v * US);
        if sim.n_samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        crate::error::ensure_probability("lifetime_loss", sim.lifetime_loss)?;
        if sim.steps_per_on < crate::dynamics::MIN_STEPS_PER_ON {
            return Err(Error::Config(format!(
                "steps_per_on must be at least {}",
                crate::dynamics::MIN_STEPS_PER_ON
            )));
        }
        Ok(sim)
    }
}
