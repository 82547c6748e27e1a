//! Closed-form predictions: thermal spread, trap frequency, array scaling,
//! worst-case long-run survival and the effective array size.

use serde::{Deserialize, Serialize};

use crate::constants::{K_B, RB87_MASS};
use crate::dynamics::Axes;
use crate::error::{ensure_non_negative, ensure_positive, ensure_probability, invalid, Result};
use crate::phasespace::{evolve_gaussian, shear_map, shear_norm, GaussianState};
use crate::resonance::resonant_ton_np1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    /// kg
    pub mass: f64,
    /// K
    pub temperature: f64,
}

impl AtomSpec {
    pub fn new(mass: f64, temperature: f64) -> Result<Self> {
        let a = Self { mass, temperature };
        a.validate()?;
        Ok(a)
    }

    pub fn rb87(temperature: f64) -> Result<Self> {
        Self::new(RB87_MASS, temperature)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("mass", self.mass)?;
        ensure_non_negative("temperature", self.temperature)
    }
}

/// How a Gaussian tail cut at `x` standard deviations turns into a
/// probability.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassConvention {
    /// Mass within `±x` standard deviations, `erf(x/√2)`.
    #[default]
    TwoSided,
    /// `erf(x)` taken literally.
    PlainErf,
}

impl MassConvention {
    pub fn mass(self, x: f64) -> f64 {
        if x.is_infinite() {
            return 1.0;
        }
        match self {
            Self::TwoSided => libm::erf(x / std::f64::consts::SQRT_2),
            Self::PlainErf => libm::erf(x),
        }
    }
}

/// Harmonic trap with a hard energy cutoff, as seen by the closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticTrap {
    /// rad/s
    pub omega: f64,
    /// m
    pub cutoff_d: f64,
    /// J; when present it must agree with `omega` and `cutoff_d`.
    pub depth_u0: Option<f64>,
    /// Empirical shrink factor on the cutoff, `0 < alpha ≤ 1`.
    pub alpha: f64,
    pub convention: MassConvention,
    /// Probability lost to finite trap lifetime over a run, applied as a
    /// constant factor `1 − lifetime_loss`.
    pub lifetime_loss: f64,
}

impl AnalyticTrap {
    pub fn new(omega: f64, cutoff_d: f64) -> Result<Self> {
        let t = Self {
            omega,
            cutoff_d,
            depth_u0: None,
            alpha: 1.0,
            convention: MassConvention::TwoSided,
            lifetime_loss: 0.0,
        };
        t.validate()?;
        Ok(t)
    }

    /// Trap with frequency derived from depth and width.
    pub fn from_depth(depth_u0: f64, cutoff_d: f64, mass: f64) -> Result<Self> {
        let omega = omega_from_trap(depth_u0, cutoff_d, mass)?;
        let mut t = Self::new(omega, cutoff_d)?;
        t.depth_u0 = Some(depth_u0);
        Ok(t)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn with_lifetime_loss(mut self, loss: f64) -> Result<Self> {
        self.lifetime_loss = loss;
        self.validate()?;
        Ok(self)
    }

    pub fn with_convention(mut self, convention: MassConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("omega", self.omega)?;
        ensure_positive("cutoff_d", self.cutoff_d)?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        ensure_probability("lifetime_loss", self.lifetime_loss)?;
        if let Some(u0) = self.depth_u0 {
            ensure_positive("depth_u0", u0)?;
        }
        Ok(())
    }

    /// Checks a stored depth against `omega` for an atom of `mass`.
    pub fn check_depth(&self, mass: f64, rel_tol: f64) -> Result<()> {
        if let Some(u0) = self.depth_u0 {
            let omega = omega_from_trap(u0, self.cutoff_d, mass)?;
            if ((omega - self.omega) / self.omega).abs() > rel_tol {
                return Err(invalid(format!(
                    "depth implies omega = {omega} rad/s but trap has {} rad/s",
                    self.omega
                )));
            }
        }
        Ok(())
    }

    /// Capture radius `ω d` in `(q, v)` space, m/s.
    pub fn capture_radius(&self) -> f64 {
        self.omega * self.cutoff_d
    }

    pub fn lifetime_factor(&self) -> f64 {
        1.0 - self.lifetime_loss
    }
}

/// Thermal velocity spread `sqrt(k_B T / m)`, m/s.
pub fn sigma_from_temperature(atom: &AtomSpec) -> f64 {
    (K_B * atom.temperature / atom.mass).sqrt()
}

/// Trap frequency for a harmonic well of depth `U₀` reaching zero at `d`:
/// `ω = sqrt(2 U₀ / (m d²))`.
pub fn omega_from_trap(depth_u0: f64, cutoff_d: f64, mass: f64) -> Result<f64> {
    ensure_positive("depth_u0", depth_u0)?;
    ensure_positive("cutoff_d", cutoff_d)?;
    ensure_positive("mass", mass)?;
    Ok((2.0 * depth_u0 / (mass * cutoff_d * cutoff_d)).sqrt())
}

/// Depth `U₀ = m ω² d² / 2` of the harmonic-cutoff well.
pub fn depth_from_omega(omega: f64, cutoff_d: f64, mass: f64) -> f64 {
    0.5 * mass * omega * omega * cutoff_d * cutoff_d
}

/// Atoms one tweezer can serve: `⌊(t_on + t_off)/t_on⌋`.
pub fn max_atoms(t_on: f64, t_off: f64) -> Result<u32> {
    ensure_positive("t_on", t_on)?;
    ensure_non_negative("t_off", t_off)?;
    // Guard exact multiples against round-off just below the integer.
    let ratio = (t_on + t_off) / t_on;
    Ok((ratio * (1.0 + 1e-12)).floor() as u32)
}

/// Worst-case long-run survival for an `n_p`-cycle resonance, including
/// `alpha`, the mass convention and the lifetime factor of `trap`.
pub fn worst_survival(trap: &AnalyticTrap, atom: &AtomSpec, t_off: f64, n_p: u32) -> Result<f64> {
    trap.validate()?;
    atom.validate()?;
    ensure_non_negative("t_off", t_off)?;
    if n_p == 0 {
        return Err(invalid("n_p must be at least 1"));
    }
    let sigma = sigma_from_temperature(atom);
    let n_b = (n_p as f64 + 1.0) / 2.0;
    let stretch = shear_norm(n_b * trap.omega * t_off);
    let x = trap.alpha * trap.capture_radius() / (sigma * stretch);
    let p = if x.is_nan() { 0.0 } else { trap.convention.mass(x) };
    Ok(p * trap.lifetime_factor())
}

/// Exact harmonic-cutoff release-and-recapture probability after one
/// free flight of `t_off`: the thermal Gaussian, sheared by `ω t_off`, is
/// integrated over the capture ball of radius `ω d`. `alpha`, the mass
/// convention and lifetime are ignored.
pub fn release_recapture(trap: &AnalyticTrap, atom: &AtomSpec, t_off: f64, axes: Axes) -> Result<f64> {
    trap.validate()?;
    atom.validate()?;
    ensure_non_negative("t_off", t_off)?;
    let sigma = sigma_from_temperature(atom);
    if sigma == 0.0 {
        return Ok(1.0);
    }
    let state = evolve_gaussian(
        &GaussianState::isotropic(sigma)?,
        &shear_map(trap.omega * t_off)?,
    );
    let (major, minor) = state.principal_std();
    let r = trap.capture_radius();
    Ok(match axes {
        Axes::One => ellipse_disc_mass(major, minor, r),
        Axes::Two => two_axis_ball_mass(major, minor, r),
    })
}

/// Mass of `N(0, diag(a², b²))` inside the disc of radius `r`.
fn ellipse_disc_mass(a: f64, b: f64, r: f64) -> f64 {
    // u = r sin φ along the major axis; the minor axis contributes erf.
    const N: usize = 4000;
    let h = std::f64::consts::PI / N as f64;
    let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let f = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let u = r * s / a;
        let half_chord = r * c;
        let minor = if b > 0.0 {
            libm::erf(half_chord / (b * std::f64::consts::SQRT_2))
        } else {
            1.0
        };
        inv_sqrt_2pi * (-0.5 * u * u).exp() * (r * c / a) * minor
    };
    // Composite Simpson on [−π/2, π/2].
    let lo = -std::f64::consts::FRAC_PI_2;
    let mut acc = f(lo) + f(-lo);
    for i in 1..N {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    (acc * h / 3.0).clamp(0.0, 1.0)
}

/// Mass inside the 4-ball of radius `r` for two independent axes, each with
/// principal variances `a², b²`: `r² ~ 2a²·E₁ + 2b²·E₂` with exponential `E`.
fn two_axis_ball_mass(a: f64, b: f64, r: f64) -> f64 {
    let (big, small) = (2.0 * a * a, 2.0 * b * b);
    let r2 = r * r;
    if (big - small).abs() <= 1e-9 * big {
        let x = r2 / big;
        return 1.0 - (-x).exp() * (1.0 + x);
    }
    let tail = (big * (-r2 / big).exp() - small * (-r2 / small).exp()) / (big - small);
    (1.0 - tail).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    #[serde(rename = "M")]
    pub m: u32,
    pub p_worst: f64,
    pub m_eff: f64,
    pub m_eff_star: f64,
    pub lifetime_factor: f64,
}

/// Array size, survival and effective size for a timing.
pub fn effective_scaling(
    trap: &AnalyticTrap,
    atom: &AtomSpec,
    t_on: f64,
    t_off: f64,
    n_p: u32,
) -> Result<ScalingReport> {
    let m = max_atoms(t_on, t_off)?;
    effective_scaling_for(m, trap, atom, t_off, n_p)
}

/// As [`effective_scaling`], with the array size `m` supplied by the caller
/// (for instance the size actually demonstrated rather than the bound).
pub fn effective_scaling_for(
    m: u32,
    trap: &AnalyticTrap,
    atom: &AtomSpec,
    t_off: f64,
    n_p: u32,
) -> Result<ScalingReport> {
    if m == 0 {
        return Err(invalid("array size must be at least 1"));
    }
    let p = worst_survival(trap, atom, t_off, n_p)?;
    let m_eff = m as f64 * p;
    Ok(ScalingReport {
        m,
        p_worst: p,
        m_eff,
        m_eff_star: m_eff.floor(),
        lifetime_factor: trap.lifetime_factor(),
    })
}

/// One row of a scaling curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub t_off: f64,
    pub t_on_resonant: f64,
    pub report: ScalingReport,
    /// False when the resonant `t_on` is shorter than the rise time.
    pub accessible: bool,
}

/// Scaling along the single-cycle, `k = 0` resonance for each `t_off`.
pub fn scaling_curve(
    trap: &AnalyticTrap,
    atom: &AtomSpec,
    t_off_values: &[f64],
    t_rise: f64,
) -> Result<Vec<ScalingPoint>> {
    if t_off_values.is_empty() {
        return Err(invalid("t_off range must not be empty"));
    }
    ensure_non_negative("t_rise", t_rise)?;
    t_off_values
        .iter()
        .map(|&t_off| {
            let t_on = resonant_ton_np1(trap.omega, t_off, 0)?;
            let report = effective_scaling(trap, atom, t_on, t_off, 1)?;
            Ok(ScalingPoint {
                t_off,
                t_on_resonant: t_on,
                report,
                accessible: t_on >= t_rise,
            })
        })
        .collect()
}

/// `n` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { stop } else { start + i as f64 * step })
                .collect()
        }
    }
}
