//! Multi-atom rearrangement with a single time-multiplexed tweezer.
//!
//! A [`Scenario`] lists lattice sites, which of them hold atoms and how
//! each atom should move. [`compile_scenario`] turns it into a cycle by
//! cycle [`Schedule`] of trap slots, [`schedule_to_rf`] into AOD drive
//! events, and [`simulate_rearrangement`] feeds each atom's trap path to
//! the Monte Carlo simulator.

mod rf;
mod scenario;
mod schedule;

use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate_survival, BlinkTiming, SimConfig};
use crate::error::{Error, Result};

pub use rf::{schedule_to_rf, AodCalibration, RfEvent, RfProgram, DEFAULT_X_AXIS_SHIFT};
pub use scenario::{
    array_rotation, builtin_scenario, builtin_scenarios, fall_to_right, polyline_length, vacancy_filling,
    worm_running, Move, MoveFile, Scenario, ScenarioFile, CYCLES_PER_HOP, ROTATION_CYCLES, WORM_PATH,
};
pub use schedule::{
    assign_slots, compile_scenario, max_step, slot_count, validate_schedule, Cycle, Schedule, ScheduleLimits,
    Slot, Violation,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomOutcome {
    pub atom: usize,
    pub p: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RearrangementReport {
    pub scenario: String,
    pub n_cycles: u32,
    pub atoms: Vec<AtomOutcome>,
    /// Mean success probability over atoms.
    pub mean: f64,
}

/// Compiles and validates `scenario`, then simulates every atom along its
/// own trap path. The trap, atom, sample count and seed come from `sim`;
/// its timing and center path are replaced. All atoms share the seed, so
/// an atom that never moves reproduces a single-site run exactly.
pub fn simulate_rearrangement(
    scenario: &Scenario,
    timing: &BlinkTiming,
    limits: &ScheduleLimits,
    sim: &SimConfig,
) -> Result<RearrangementReport> {
    let schedule = compile_scenario(scenario, timing, limits.v_max)?;
    let violations = validate_schedule(&schedule, timing, limits)?;
    if let Some(v) = violations.first() {
        return Err(Error::Constraint(format!(
            "{} violation(s), first: {}",
            violations.len(),
            serde_json::to_string(v)?
        )));
    }
    let n_cycles = schedule.cycles.len() as u32;
    let atoms = schedule
        .atoms()
        .into_iter()
        .map(|atom| {
            let start = schedule.sites[atom];
            let path = schedule
                .center_path(atom)
                .expect("atom listed by the schedule")
                .into_iter()
                .map(|c| [c[0] - start[0], c[1] - start[1]])
                .collect();
            let mut cfg = sim.clone();
            cfg.timing = BlinkTiming {
                t_on: timing.t_on,
                t_off: timing.t_off,
                n_blink: n_cycles,
                n_slots: schedule.n_slots,
            };
            cfg.trap_center_path = Some(path);
            let r = simulate_survival(&cfg)?;
            Ok(AtomOutcome {
                atom,
                p: r.p,
                stderr: r.stderr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = if atoms.is_empty() {
        0.0
    } else {
        atoms.iter().map(|a| a.p).sum::<f64>() / atoms.len() as f64
    };
    Ok(RearrangementReport {
        scenario: scenario.name.clone(),
        n_cycles,
        atoms,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::AtomSpec;
    use crate::constants::omega_from_khz;
    use crate::dynamics::TrapModel;

    const A: f64 = 20e-6;

    fn sim(n: usize) -> SimConfig {
        let mut c = SimConfig::new(
            TrapModel::harmonic_cutoff(omega_from_khz(64.0), 0.9e-6).unwrap(),
            AtomSpec::rb87(13e-6).unwrap(),
            BlinkTiming::new(1e-6, 1e-6, 1, 1).unwrap(),
        );
        c.n_samples = n;
        c.seed = 5;
        c
    }

    #[test]
    fn static_scenario_reduces_to_single_site() {
        let mut s = vacancy_filling(A).unwrap();
        s.moves.clear();
        let t = BlinkTiming::new(1.148e-6, 10e-6, 40, 1).unwrap();
        let r = simulate_rearrangement(&s, &t, &ScheduleLimits::default(), &sim(500)).unwrap();
        let mut single = sim(500);
        single.timing = t;
        let p = simulate_survival(&single).unwrap().p;
        assert_eq!(r.atoms.len(), 4);
        assert!(r.atoms.iter().all(|a| a.p == p));
        assert_eq!(r.mean, p);
    }

    #[test]
    fn worm_survives_at_demo_timing() {
        let t = BlinkTiming::new(1.1e-6, 10e-6, 0, 1).unwrap();
        let r = simulate_rearrangement(&worm_running(A).unwrap(), &t, &ScheduleLimits::default(), &sim(2000)).unwrap();
        assert_eq!(r.atoms.len(), 3);
        assert!(r.mean >= 0.70, "{}", r.mean);
    }

    #[test]
    fn off_resonant_timing_loses_atoms() {
        let t = BlinkTiming::new(6e-6, 48e-6, 0, 1).unwrap();
        let limits = ScheduleLimits {
            v_max: 1.0,
            ..Default::default()
        };
        let r = simulate_rearrangement(&vacancy_filling(A).unwrap(), &t, &limits, &sim(400)).unwrap();
        assert!(r.mean < 0.05, "{}", r.mean);
    }

    #[test]
    fn violations_abort() {
        let t = BlinkTiming::new(1.1e-6, 10e-6, 0, 1).unwrap();
        let limits = ScheduleLimits {
            min_site_separation: 30e-6,
            ..Default::default()
        };
        assert!(matches!(
            simulate_rearrangement(&vacancy_filling(A).unwrap(), &t, &limits, &sim(10)),
            Err(Error::Constraint(_))
        ));
    }
}
