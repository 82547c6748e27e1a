use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::{draw_initial, fly, integrate_on, is_captured, step_plan};
use super::trap::{PowerProfile, TrapModel};
use super::{Axes, BlinkTiming};
use crate::analytic::{sigma_from_temperature, AtomSpec};
use crate::error::{ensure_positive, ensure_probability, invalid, Result};
use crate::seed::stream_rng;

/// Integrator steps per on-phase when no explicit `dt` is given.
pub const DEFAULT_STEPS_PER_ON: u32 = 100;
/// Coarsest integration allowed, `dt ≤ t_on / 20`.
pub const MIN_STEPS_PER_ON: u32 = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trap: TrapModel,
    pub atom: AtomSpec,
    pub timing: BlinkTiming,
    pub n_samples: usize,
    /// Fixed integrator step, s. When `None` each on-phase is split into
    /// `steps_per_on` steps.
    pub dt: Option<f64>,
    pub steps_per_on: u32,
    pub seed: u64,
    /// Probability lost to finite trap lifetime over the whole run.
    pub lifetime_loss: f64,
    /// Trap center for each cycle (m), relative to where the atom starts.
    /// The last entry holds once the path runs out.
    pub trap_center_path: Option<Vec<[f64; 2]>>,
    pub axes: Axes,
}

impl SimConfig {
    pub fn new(trap: TrapModel, atom: AtomSpec, timing: BlinkTiming) -> Self {
        Self {
            trap,
            atom,
            timing,
            n_samples: 10_000,
            dt: None,
            steps_per_on: DEFAULT_STEPS_PER_ON,
            seed: 0,
            lifetime_loss: 0.0,
            trap_center_path: None,
            axes: Axes::Two,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.trap.validate()?;
        self.atom.validate()?;
        self.timing.validate()?;
        if self.n_samples == 0 {
            return Err(invalid("n_samples must be at least 1"));
        }
        ensure_probability("lifetime_loss", self.lifetime_loss)?;
        if self.steps_per_on < MIN_STEPS_PER_ON {
            return Err(invalid(format!(
                "steps_per_on must be at least {MIN_STEPS_PER_ON}, got {}",
                self.steps_per_on
            )));
        }
        if let Some(dt) = self.dt {
            ensure_positive("dt", dt)?;
            if self.timing.t_on > 0.0 && dt > self.timing.t_on / MIN_STEPS_PER_ON as f64 * (1.0 + 1e-12) {
                return Err(invalid(format!(
                    "dt = {dt} s exceeds t_on/{MIN_STEPS_PER_ON} = {} s",
                    self.timing.t_on / MIN_STEPS_PER_ON as f64
                )));
            }
        }
        if let Some(path) = &self.trap_center_path {
            if path.iter().flatten().any(|c| !c.is_finite()) {
                return Err(invalid("trap_center_path contains non-finite coordinates"));
            }
        }
        Ok(())
    }

    /// Integrator step actually used for the on-phase.
    pub fn effective_dt(&self) -> f64 {
        self.dt
            .unwrap_or(self.timing.t_on / self.steps_per_on as f64)
    }

    fn center(&self, cycle: usize) -> [f64; 2] {
        match &self.trap_center_path {
            Some(p) if !p.is_empty() => p[cycle.min(p.len() - 1)],
            _ => [0.0, 0.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    /// Survival probability including the lifetime factor.
    pub p: f64,
    /// Binomial standard error of `p`.
    pub stderr: f64,
    pub n_samples: usize,
    /// Live samples after each capture check: one per cycle, then the
    /// final recapture. The lifetime factor is not applied here.
    pub alive_history: Vec<u64>,
}

impl SurvivalEstimate {
    /// Fraction alive after capture check `k`, before lifetime loss.
    pub fn fraction_after(&self, k: usize) -> f64 {
        self.alive_history[k] as f64 / self.n_samples as f64
    }
}

/// Runs `n_blink` cycles of on-phase, capture check and free flight, then a
/// final recapture check, for every sample. Sample `i` uses RNG stream `i`,
/// so the estimate is independent of the thread count.
pub fn simulate_survival(config: &SimConfig) -> Result<SurvivalEstimate> {
    config.validate()?;
    let SimConfig {
        trap,
        atom,
        timing,
        n_samples,
        seed,
        axes,
        ..
    } = config;
    let kernel = trap.kernel(atom.mass);
    let sigma = sigma_from_temperature(atom);
    let omega = trap.harmonic_omega(atom.mass);
    let profile = PowerProfile::new(trap, timing.t_on);
    let (steps, h) = if timing.t_on > 0.0 {
        step_plan(timing.t_on, config.effective_dt())
    } else {
        (0, 0.0)
    };
    let n_blink = timing.n_blink as usize;
    let centers: Vec<[f64; 2]> = (0..=n_blink).map(|c| config.center(c)).collect();

    // Index of the first failed check for each sample, n_blink + 1 if none.
    let deaths: Vec<usize> = (0..*n_samples)
        .into_par_iter()
        .map(|i| {
            let mut s = draw_initial(&mut stream_rng(*seed, i as u64), sigma, omega, *axes);
            for (cycle, &center) in centers.iter().take(n_blink).enumerate() {
                if steps > 0 {
                    integrate_on(&mut s, &kernel, center, &profile, steps, h);
                }
                if !is_captured(&s, &kernel, center) {
                    return cycle;
                }
                fly(&mut s, timing.t_off);
            }
            let last = if n_blink > 0 { centers[n_blink - 1] } else { centers[0] };
            if is_captured(&s, &kernel, last) {
                n_blink + 1
            } else {
                n_blink
            }
        })
        .collect();

    let mut died_at = vec![0u64; n_blink + 2];
    for d in deaths {
        died_at[d] += 1;
    }
    let mut alive = *n_samples as u64;
    let alive_history: Vec<u64> = died_at[..=n_blink]
        .iter()
        .map(|d| {
            alive -= d;
            alive
        })
        .collect();
    let n = *n_samples as f64;
    let frac = alive as f64 / n;
    let factor = 1.0 - config.lifetime_loss;
    Ok(SurvivalEstimate {
        p: frac * factor,
        stderr: (frac * (1.0 - frac) / n).sqrt() * factor,
        n_samples: *n_samples,
        alive_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{release_recapture, AnalyticTrap};
    use crate::dynamics::{apply_capture_filter, sample_initial, step_off_phase, step_on_phase};
    use crate::resonance::resonant_ton_np1;
    use std::f64::consts::TAU;

    const OMEGA: f64 = TAU * 79e3;
    const D: f64 = 0.9e-6;

    fn harmonic_config(t_on: f64, t_off: f64, n_blink: u32) -> SimConfig {
        let mut c = SimConfig::new(
            TrapModel::harmonic_cutoff(OMEGA, D).unwrap(),
            AtomSpec::rb87(15e-6).unwrap(),
            BlinkTiming::new(t_on, t_off, n_blink, 1).unwrap(),
        );
        c.n_samples = 4000;
        c.seed = 11;
        c
    }

    #[test]
    fn static_trap_keeps_everything() {
        let mut c = harmonic_config(2e-6, 0.0, 20);
        c.lifetime_loss = 0.03;
        let r = simulate_survival(&c).unwrap();
        assert!((r.p - 0.97).abs() < 1e-12, "{}", r.p);
        assert_eq!(r.alive_history.len(), 21);
    }

    #[test]
    fn deterministic() {
        let c = harmonic_config(1.4e-6, 5e-6, 30);
        assert_eq!(simulate_survival(&c).unwrap(), simulate_survival(&c).unwrap());
    }

    #[test]
    fn thread_count_does_not_matter() {
        let c = harmonic_config(1.4e-6, 8e-6, 30);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_survival(&c).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn alive_count_never_increases() {
        let c = harmonic_config(3.0e-6, 6e-6, 60);
        let r = simulate_survival(&c).unwrap();
        assert!(r.alive_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.fraction_after(60) < 0.5);
    }

    #[test]
    fn matches_ensemble_pipeline() {
        // The per-sample fast path and the ensemble operations agree exactly.
        let c = harmonic_config(1.2e-6, 9e-6, 12);
        let fast = simulate_survival(&c).unwrap();
        let mut e = sample_initial(&c.atom, &c.trap, c.n_samples, c.seed, c.axes).unwrap();
        let m = c.atom.mass;
        for _ in 0..12 {
            step_on_phase(&mut e, &c.trap, m, [0.0; 2], c.timing.t_on, c.effective_dt()).unwrap();
            apply_capture_filter(&mut e, &c.trap, m, [0.0; 2]);
            step_off_phase(&mut e, c.timing.t_off).unwrap();
        }
        apply_capture_filter(&mut e, &c.trap, m, [0.0; 2]);
        assert_eq!(e.alive_count() as u64, *fast.alive_history.last().unwrap());
    }

    #[test]
    fn single_cycle_matches_release_recapture() {
        let t_off = 12e-6;
        let t_on = resonant_ton_np1(OMEGA, t_off, 0).unwrap();
        let mut c = harmonic_config(t_on, t_off, 1);
        c.n_samples = 100_000;
        for axes in [Axes::One, Axes::Two] {
            c.axes = axes;
            let r = simulate_survival(&c).unwrap();
            let want = release_recapture(&AnalyticTrap::new(OMEGA, D).unwrap(), &c.atom, t_off, axes).unwrap();
            assert!((r.p - want).abs() < 3.0 * r.stderr.max(1e-4), "{axes:?}: {} vs {want}", r.p);
        }
    }

    #[test]
    fn zero_on_time_is_pure_flight() {
        let c = harmonic_config(0.0, 5e-6, 50);
        let r = simulate_survival(&c).unwrap();
        assert!(r.p < 0.05, "{}", r.p);
    }

    #[test]
    fn validation() {
        let mut c = harmonic_config(1e-6, 5e-6, 10);
        c.dt = Some(1e-7);
        assert!(simulate_survival(&c).is_err());
        c.dt = Some(1e-8);
        assert!(simulate_survival(&c).is_ok());
        c.n_samples = 0;
        assert!(simulate_survival(&c).is_err());
        let mut c = harmonic_config(1e-6, 5e-6, 10);
        c.steps_per_on = 10;
        assert!(simulate_survival(&c).is_err());
        c.steps_per_on = 20;
        c.lifetime_loss = 1.5;
        assert!(simulate_survival(&c).is_err());
    }

    #[test]
    fn center_path_falls_back_to_last() {
        let mut c = harmonic_config(1e-6, 5e-6, 10);
        c.trap_center_path = Some(vec![[0.0, 0.0], [1e-7, 0.0]]);
        assert_eq!(c.center(0), [0.0, 0.0]);
        assert_eq!(c.center(5), [1e-7, 0.0]);
        c.trap_center_path = Some(vec![]);
        assert_eq!(c.center(3), [0.0, 0.0]);
    }
}
