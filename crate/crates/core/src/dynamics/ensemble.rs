use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trap::{Kernel, PowerProfile, TrapModel};
use super::Axes;
use crate::analytic::{sigma_from_temperature, AtomSpec};
use crate::error::{ensure_non_negative, ensure_positive, invalid, Result};
use crate::seed::stream_rng;

/// Position (m) and velocity (m/s) of one sample in the transverse plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AtomState {
    pub x: [f64; 2],
    pub v: [f64; 2],
}

/// Samples of `W(q, v; t)` with per-sample survival flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceEnsemble {
    states: Vec<AtomState>,
    alive: Vec<bool>,
}

impl PhaseSpaceEnsemble {
    pub fn from_states(states: Vec<AtomState>) -> Self {
        let alive = vec![true; states.len()];
        Self { states, alive }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[AtomState] {
        &self.states
    }

    pub fn alive(&self) -> &[bool] {
        &self.alive
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|a| **a).count()
    }

    pub fn alive_fraction(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.alive_count() as f64 / self.len() as f64
        }
    }

    /// Positions along one axis (0 = x, 1 = y), m.
    pub fn positions(&self, axis: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.x[axis]).collect()
    }

    /// Velocities along one axis, m/s.
    pub fn velocities(&self, axis: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.v[axis]).collect()
    }

    /// Sample mean and covariance of `(ω·x, v)` along `axis` over live samples.
    pub fn moments(&self, axis: usize, omega: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let pts: Vec<[f64; 2]> = self
            .states
            .iter()
            .zip(&self.alive)
            .filter(|(_, a)| **a)
            .map(|(s, _)| [omega * s.x[axis], s.v[axis]])
            .collect();
        let n = pts.len().max(1) as f64;
        let mean = pts
            .iter()
            .fold([0.0; 2], |m, p| [m[0] + p[0] / n, m[1] + p[1] / n]);
        let mut cov = [[0.0; 2]; 2];
        for p in &pts {
            let d = [p[0] - mean[0], p[1] - mean[1]];
            for i in 0..2 {
                for j in 0..2 {
                    cov[i][j] += d[i] * d[j] / n;
                }
            }
        }
        (mean, cov)
    }
}

/// Thermal state for one sample: velocity std `σ`, position std `σ/ω`
/// along each axis. Four normals are always drawn so the `x` axis is the
/// same whether or not `y` is simulated.
pub(crate) fn draw_initial(rng: &mut ChaCha8Rng, sigma: f64, omega: [f64; 2], axes: Axes) -> AtomState {
    let mut n = || -> f64 { rng.sample(StandardNormal) };
    let (x0, v0, x1, v1) = (n(), n(), n(), n());
    let mut s = AtomState {
        x: [x0 * sigma / omega[0], 0.0],
        v: [v0 * sigma, 0.0],
    };
    if axes == Axes::Two {
        s.x[1] = x1 * sigma / omega[1];
        s.v[1] = v1 * sigma;
    }
    s
}

/// Thermal ensemble at the trap center; sample `i` draws from stream `i`.
pub fn sample_initial(
    atom: &AtomSpec,
    trap: &TrapModel,
    n: usize,
    seed: u64,
    axes: Axes,
) -> Result<PhaseSpaceEnsemble> {
    atom.validate()?;
    trap.validate()?;
    if n == 0 {
        return Err(invalid("ensemble needs at least one sample"));
    }
    let sigma = sigma_from_temperature(atom);
    let omega = trap.harmonic_omega(atom.mass);
    let states = (0..n)
        .into_par_iter()
        .map(|i| draw_initial(&mut stream_rng(seed, i as u64), sigma, omega, axes))
        .collect();
    Ok(PhaseSpaceEnsemble::from_states(states))
}

/// Step count and step size covering `duration` with steps no longer than `dt`.
pub(crate) fn step_plan(duration: f64, dt: f64) -> (usize, f64) {
    let n = ((duration / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (n, duration / n as f64)
}

/// Velocity-Verlet through one on-phase with the trap centered at `center`.
#[inline]
pub(crate) fn integrate_on(
    s: &mut AtomState,
    kernel: &Kernel,
    center: [f64; 2],
    profile: &PowerProfile,
    steps: usize,
    h: f64,
) {
    let flat = profile.is_flat();
    let power = |t: f64| if flat { 1.0 } else { profile.at(t) };
    let rel = |x: [f64; 2]| [x[0] - center[0], x[1] - center[1]];
    let mut a = kernel.accel(rel(s.x), power(0.0));
    let half = 0.5 * h;
    for k in 1..=steps {
        s.v[0] += half * a[0];
        s.v[1] += half * a[1];
        s.x[0] += h * s.v[0];
        s.x[1] += h * s.v[1];
        a = kernel.accel(rel(s.x), power(k as f64 * h));
        s.v[0] += half * a[0];
        s.v[1] += half * a[1];
    }
}

/// Capture condition `K + U < 0` at full power (per unit mass).
#[inline]
pub(crate) fn is_captured(s: &AtomState, kernel: &Kernel, center: [f64; 2]) -> bool {
    let k = 0.5 * (s.v[0] * s.v[0] + s.v[1] * s.v[1]);
    k + kernel.potential([s.x[0] - center[0], s.x[1] - center[1]]) < 0.0
}

#[inline]
pub(crate) fn fly(s: &mut AtomState, duration: f64) {
    s.x[0] += s.v[0] * duration;
    s.x[1] += s.v[1] * duration;
}

/// Integrates every live sample through an on-phase of length `duration`.
/// Power ramps up over the trap's rise time and down over its fall time.
pub fn step_on_phase(
    ensemble: &mut PhaseSpaceEnsemble,
    trap: &TrapModel,
    mass: f64,
    center: [f64; 2],
    duration: f64,
    dt: f64,
) -> Result<()> {
    ensure_positive("duration", duration)?;
    ensure_positive("dt", dt)?;
    ensure_positive("mass", mass)?;
    if dt > duration {
        return Err(invalid(format!("dt = {dt} s exceeds on-phase duration {duration} s")));
    }
    let kernel = trap.kernel(mass);
    let profile = PowerProfile::new(trap, duration);
    let (steps, h) = step_plan(duration, dt);
    ensemble
        .states
        .par_iter_mut()
        .zip(ensemble.alive.par_iter())
        .filter(|(_, alive)| **alive)
        .for_each(|(s, _)| integrate_on(s, &kernel, center, &profile, steps, h));
    Ok(())
}

/// Exact free flight `x += v·duration` for every live sample.
pub fn step_off_phase(ensemble: &mut PhaseSpaceEnsemble, duration: f64) -> Result<()> {
    ensure_non_negative("duration", duration)?;
    ensemble
        .states
        .par_iter_mut()
        .zip(ensemble.alive.par_iter())
        .filter(|(_, alive)| **alive)
        .for_each(|(s, _)| fly(s, duration));
    Ok(())
}

/// Marks lost every live sample with `m v²/2 + U(x − center) ≥ 0`.
pub fn apply_capture_filter(ensemble: &mut PhaseSpaceEnsemble, trap: &TrapModel, mass: f64, center: [f64; 2]) {
    let kernel = trap.kernel(mass);
    ensemble
        .states
        .par_iter()
        .zip(ensemble.alive.par_iter_mut())
        .for_each(|(s, alive)| {
            if *alive && !is_captured(s, &kernel, center) {
                *alive = false;
            }
        });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::RB87_MASS;
    use crate::phasespace::{evolve_gaussian, rotation_map, shear_map, GaussianState};
    use std::f64::consts::{FRAC_PI_2, TAU};

    const M: f64 = RB87_MASS;
    const OMEGA: f64 = TAU * 79e3;

    fn big_harmonic() -> TrapModel {
        // Cutoff far beyond any thermal excursion.
        TrapModel::harmonic_cutoff(OMEGA, 1.0).unwrap()
    }

    #[test]
    fn zero_temperature_sits_at_origin() {
        let e = sample_initial(&AtomSpec::rb87(0.0).unwrap(), &big_harmonic(), 50, 1, Axes::Two).unwrap();
        assert!(e.states().iter().all(|s| *s == AtomState::default()));
    }

    #[test]
    fn thermal_velocity_spread() {
        let atom = AtomSpec::rb87(13e-6).unwrap();
        let e = sample_initial(&atom, &big_harmonic(), 1_000_000, 3, Axes::Two).unwrap();
        let sigma = sigma_from_temperature(&atom);
        for axis in 0..2 {
            let v = e.velocities(axis);
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!((std / sigma - 1.0).abs() < 0.005, "{std} vs {sigma}");
            assert!((std - 0.0353).abs() < 0.0353 * 0.005 + 5e-5);
        }
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let atom = AtomSpec::rb87(15e-6).unwrap();
        let a = sample_initial(&atom, &big_harmonic(), 1000, 42, Axes::Two).unwrap();
        let b = sample_initial(&atom, &big_harmonic(), 1000, 42, Axes::Two).unwrap();
        assert_eq!(a, b);
        let c = sample_initial(&atom, &big_harmonic(), 1000, 43, Axes::Two).unwrap();
        assert_ne!(a, c);
        let one = sample_initial(&atom, &big_harmonic(), 1000, 42, Axes::One).unwrap();
        assert_eq!(one.positions(0), a.positions(0));
        assert!(one.positions(1).iter().all(|y| *y == 0.0));
        assert!(sample_initial(&atom, &big_harmonic(), 0, 1, Axes::One).is_err());
    }

    #[test]
    fn full_period_returns_home() {
        let atom = AtomSpec::rb87(15e-6).unwrap();
        let mut e = sample_initial(&atom, &big_harmonic(), 200, 5, Axes::Two).unwrap();
        let start = e.clone();
        let period = TAU / OMEGA;
        // Verlet's phase error is ~(ωh)²/24 per radian; 1e-6 needs a fine step.
        step_on_phase(&mut e, &big_harmonic(), M, [0.0; 2], period, period / 5000.0).unwrap();
        for (a, b) in e.states().iter().zip(start.states()) {
            for ax in 0..2 {
                let q_scale = (OMEGA * b.x[ax]).hypot(b.v[ax]);
                assert!((OMEGA * (a.x[ax] - b.x[ax])).abs() <= 1e-6 * q_scale);
                assert!((a.v[ax] - b.v[ax]).abs() <= 1e-6 * q_scale);
            }
        }
    }

    #[test]
    fn quarter_period_is_a_rotation() {
        let atom = AtomSpec::rb87(15e-6).unwrap();
        let mut e = sample_initial(&atom, &big_harmonic(), 100, 6, Axes::One).unwrap();
        let start = e.clone();
        let quarter = FRAC_PI_2 / OMEGA;
        step_on_phase(&mut e, &big_harmonic(), M, [0.0; 2], quarter, quarter / 100.0).unwrap();
        let r = rotation_map(-FRAC_PI_2).unwrap();
        for (a, b) in e.states().iter().zip(start.states()) {
            let want = r.apply([OMEGA * b.x[0], b.v[0]]);
            let scale = want[0].hypot(want[1]);
            assert!((OMEGA * a.x[0] - want[0]).abs() < 1e-3 * scale);
            assert!((a.v[0] - want[1]).abs() < 1e-3 * scale);
        }
    }

    #[test]
    fn energy_drift_over_one_period() {
        let atom = AtomSpec::rb87(15e-6).unwrap();
        let trap = big_harmonic();
        let mut e = sample_initial(&atom, &trap, 500, 8, Axes::Two).unwrap();
        let energy = |s: &AtomState| {
            0.5 * (s.v[0].powi(2) + s.v[1].powi(2)) + 0.5 * OMEGA * OMEGA * (s.x[0].powi(2) + s.x[1].powi(2))
        };
        let before: Vec<f64> = e.states().iter().map(energy).collect();
        let period = TAU / OMEGA;
        step_on_phase(&mut e, &trap, M, [0.0; 2], period, period / 100.0).unwrap();
        for (s, e0) in e.states().iter().zip(before) {
            assert!((energy(s) / e0 - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn dt_longer_than_phase_is_rejected() {
        let mut e = PhaseSpaceEnsemble::from_states(vec![AtomState::default()]);
        assert!(step_on_phase(&mut e, &big_harmonic(), M, [0.0; 2], 1e-6, 2e-6).is_err());
        assert!(step_on_phase(&mut e, &big_harmonic(), M, [0.0; 2], 0.0, 1e-9).is_err());
    }

    #[test]
    fn free_flight() {
        let sigma = 0.0379;
        let mut e = PhaseSpaceEnsemble::from_states(vec![AtomState { x: [0.0, 0.0], v: [sigma, 0.0] }]);
        step_off_phase(&mut e, 0.0).unwrap();
        assert_eq!(e.states()[0].x, [0.0, 0.0]);
        step_off_phase(&mut e, 5e-6).unwrap();
        assert_eq!(e.states()[0].x[0], sigma * 5e-6);
        assert!(step_off_phase(&mut e, -1.0).is_err());
    }

    #[test]
    fn off_phase_covariance_is_a_shear() {
        let atom = AtomSpec::rb87(15e-6).unwrap();
        let mut e = sample_initial(&atom, &big_harmonic(), 100_000, 9, Axes::One).unwrap();
        let t_off = 5e-6;
        step_off_phase(&mut e, t_off).unwrap();
        let (_, cov) = e.moments(0, OMEGA);
        let sigma = sigma_from_temperature(&atom);
        let want = evolve_gaussian(
            &GaussianState::isotropic(sigma).unwrap(),
            &shear_map(OMEGA * t_off).unwrap(),
        )
        .cov();
        for i in 0..2 {
            for j in 0..2 {
                let scale = (want[i][i] * want[j][j]).sqrt();
                assert!((cov[i][j] - want[i][j]).abs() < 0.01 * scale, "{cov:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn capture_filter_examples() {
        let d = 0.9e-6;
        let trap = TrapModel::harmonic_cutoff(OMEGA, d).unwrap();
        let u0 = trap.depth(M);
        let v_edge = (2.0 * u0 / M).sqrt();
        let mut e = PhaseSpaceEnsemble::from_states(vec![
            AtomState::default(),
            AtomState { x: [1.1 * d, 0.0], v: [0.0; 2] },
            AtomState { x: [0.0; 2], v: [v_edge, 0.0] },
            AtomState { x: [0.0; 2], v: [0.999 * v_edge, 0.0] },
        ]);
        // Pin the boundary sample exactly on K + U = 0.
        let k = trap.kernel(M);
        let s = &e.states()[2];
        let on_edge = 0.5 * s.v[0] * s.v[0] + k.potential([0.0; 2]);
        assert!(on_edge.abs() < 1e-12 * v_edge * v_edge);
        apply_capture_filter(&mut e, &trap, M, [0.0; 2]);
        assert_eq!(e.alive(), &[true, false, on_edge < 0.0, true]);

        // Dead samples never revive, even when moved back inside.
        e.states[1].x = [0.0; 2];
        apply_capture_filter(&mut e, &trap, M, [0.0; 2]);
        assert!(!e.alive()[1]);

        let mut e = PhaseSpaceEnsemble::from_states(vec![AtomState::default()]);
        apply_capture_filter(&mut e, &trap, M, [2.0 * d, 0.0]);
        assert!(!e.alive()[0]);
    }

    #[test]
    fn exact_boundary_is_lost() {
        // K + U = 0 exactly in binary arithmetic: U₀/m = 0.5, v = 1.
        let trap = TrapModel::harmonic_cutoff(1.0, 1.0).unwrap();
        let mut e = PhaseSpaceEnsemble::from_states(vec![AtomState { x: [0.0; 2], v: [1.0, 0.0] }]);
        apply_capture_filter(&mut e, &trap, 1.0, [0.0; 2]);
        assert!(!e.alive()[0]);
    }

    #[test]
    fn step_plan_covers_duration() {
        let (n, h) = step_plan(1e-6, 1e-8);
        assert_eq!(n, 100);
        assert!((n as f64 * h - 1e-6).abs() < 1e-20);
        let (n, _) = step_plan(1e-6, 3e-7);
        assert_eq!(n, 4);
    }
}
