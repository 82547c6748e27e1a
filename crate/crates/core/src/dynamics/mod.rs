//! Monte Carlo simulation of single atoms in a blinking tweezer.
//!
//! Each sample is an independent classical trajectory in the transverse
//! plane. While the trap is on it is integrated with velocity Verlet under
//! the trap potential (with optional power ramps); while off it flies
//! freely. After every on-phase the capture condition `K + U < 0` is
//! checked at full power and failing samples are lost for good.

mod ensemble;
mod sim;
mod sweep;
mod trap;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, invalid, Result};

pub use ensemble::{
    apply_capture_filter, sample_initial, step_off_phase, step_on_phase, AtomState, PhaseSpaceEnsemble,
};
pub use sim::{simulate_survival, SimConfig, SurvivalEstimate, DEFAULT_STEPS_PER_ON, MIN_STEPS_PER_ON};
pub use sweep::{cell_config, sweep_heatmap, Heatmap, HeatmapCell};
pub use trap::{potential_and_force, PowerProfile, RampShape, TrapModel, TrapShape};

/// Stroboscopic protocol seen by each atom.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlinkTiming {
    /// s
    pub t_on: f64,
    /// s
    pub t_off: f64,
    pub n_blink: u32,
    /// Sites served by one tweezer, `M`.
    pub n_slots: u32,
}

impl BlinkTiming {
    pub fn new(t_on: f64, t_off: f64, n_blink: u32, n_slots: u32) -> Result<Self> {
        let t = Self {
            t_on,
            t_off,
            n_blink,
            n_slots,
        };
        t.validate()?;
        Ok(t)
    }

    /// A zero `t_on` is accepted (the trap never turns on); the scaling
    /// functions that divide by `t_on` reject it themselves.
    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("t_on", self.t_on)?;
        ensure_non_negative("t_off", self.t_off)?;
        if self.n_slots > 1 {
            let need = (self.n_slots - 1) as f64 * self.t_on;
            if self.t_off < need * (1.0 - 1e-9) {
                return Err(invalid(format!(
                    "t_off = {} s is shorter than (M-1)*t_on = {need} s for M = {}",
                    self.t_off, self.n_slots
                )));
            }
        }
        Ok(())
    }

    /// Blinking period `τ = t_on + t_off`.
    pub fn period(&self) -> f64 {
        self.t_on + self.t_off
    }
}

/// Number of transverse axes simulated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Axes {
    /// Motion along `x` only; `y` stays pinned at zero.
    One,
    #[default]
    Two,
}

impl TryFrom<u8> for Axes {
    type Error = String;

    fn try_from(n: u8) -> std::result::Result<Self, String> {
        match n {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            _ => Err(format!("axes must be 1 or 2, got {n}")),
        }
    }
}

impl From<Axes> for u8 {
    fn from(a: Axes) -> u8 {
        match a {
            Axes::One => 1,
            Axes::Two => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_slot_constraint() {
        assert!(BlinkTiming::new(1.1e-6, 10e-6, 100, 10).is_ok());
        assert!(BlinkTiming::new(1.1e-6, 10e-6, 100, 11).is_err());
        assert!(BlinkTiming::new(1.5e-6, 5e-6, 100, 4).is_ok());
        assert!(BlinkTiming::new(-1.0, 5e-6, 100, 1).is_err());
        assert!(BlinkTiming::new(1e-6, 3e-6, 1, 4).is_ok());
        assert_eq!(BlinkTiming::new(1e-6, 3e-6, 1, 1).unwrap().period(), 4e-6);
    }

    #[test]
    fn axes_serde() {
        let a: Axes = serde_json::from_str("1").unwrap();
        assert_eq!(a, Axes::One);
        assert!(serde_json::from_str::<Axes>("3").is_err());
        assert_eq!(serde_json::to_string(&Axes::Two).unwrap(), "2");
    }
}
