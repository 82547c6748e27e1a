//! Simulation and scheduling toolkit for blinking optical tweezers: a
//! single trap beam time-multiplexed over many sites, so that each atom is
//! alternately held and released.
//!
//! - [`phasespace`]: rotation and shear maps acting on `(ωx, v)`.
//! - [`resonance`]: admissible timing bands and periodic solutions.
//! - [`analytic`]: closed-form survival and array-size estimates.
//! - [`dynamics`]: Monte Carlo trajectories in realistic traps.
//! - [`rearrange`]: slot schedules, RF programs and transport simulation.

pub mod analytic;
pub mod cli;
pub mod config;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod manifest;
pub mod phasespace;
pub mod rearrange;
pub mod resonance;
pub mod seed;

pub use error::{Error, Result};
