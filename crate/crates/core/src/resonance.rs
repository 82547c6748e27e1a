//! Lossless-blinking conditions: admissible `t_on` bands, closed-form
//! resonances for one and two cycles, and a numerical periodicity test.
//!
//! Conventions: `R = R(−ω t_on)`, `T = T(ω t_off)`, `s = ω t_off`, and a
//! timing is periodic over `n_p` cycles when `T(RT)^{n_p}` is a rotation.
//! Band `k ≥ 0` is the interval `ω t_on ∈ (kπ, kπ + π − 2·atan(s/2))`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, invalid, Error, Result};
use crate::phasespace::{rotation_unchecked, shear_unchecked, SymplecticMap};

/// Bisection stops once the bracket is narrower than this (seconds).
pub const ROOT_TOLERANCE_S: f64 = 1e-12;

/// Largest residual accepted for a refined root before it is reported as a
/// numeric failure.
pub const REFINED_RESIDUAL: f64 = 1e-6;

/// Grid points per band used to bracket roots for general `n_p`.
const SCAN_POINTS_PER_CYCLE: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceQuery {
    pub omega: f64,
    pub t_off: f64,
    pub k: u32,
    pub n_p: u32,
}

impl ResonanceQuery {
    pub fn new(omega: f64, t_off: f64, k: u32, n_p: u32) -> Result<Self> {
        let q = Self { omega, t_off, k, n_p };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("omega", self.omega)?;
        ensure_non_negative("t_off", self.t_off)?;
        if self.n_p == 0 {
            return Err(invalid("n_p must be at least 1"));
        }
        Ok(())
    }

    pub fn shear(&self) -> f64 {
        self.omega * self.t_off
    }
}

/// Open interval of trap-on durations, in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandInterval {
    pub t_on_min: f64,
    pub t_on_max: f64,
}

impl BandInterval {
    pub fn contains(&self, t_on: f64) -> bool {
        t_on > self.t_on_min && t_on < self.t_on_max
    }

    pub fn width(&self) -> f64 {
        self.t_on_max - self.t_on_min
    }
}

/// Width of every admissible band in units of `ω t_on`:
/// `π − 2·acos(2/√(4+s²)) = π − 2·atan(s/2)`.
pub fn band_width_phase(s: f64) -> f64 {
    PI - 2.0 * (0.5 * s).atan()
}

/// The `k`-th band of `t_on` values for which periodic solutions can exist.
/// `None` when the band has collapsed to nothing in floating point.
pub fn admissible_band(query: &ResonanceQuery) -> Result<Option<BandInterval>> {
    query.validate()?;
    let width = band_width_phase(query.shear());
    let lo = query.k as f64 * PI / query.omega;
    let hi = (query.k as f64 * PI + width) / query.omega;
    if width.is_nan() || width <= 0.0 || hi.is_nan() || hi <= lo {
        return Ok(None);
    }
    Ok(Some(BandInterval {
        t_on_min: lo,
        t_on_max: hi,
    }))
}

/// Whether `(t_on, t_off)` falls inside any admissible band.
pub fn in_admissible_band(omega: f64, t_on: f64, t_off: f64) -> bool {
    let phase = (omega * t_on).rem_euclid(PI);
    phase > 0.0 && phase < band_width_phase(omega * t_off)
}

/// Distance from `t_on` to the nearest band edge, in seconds.
pub fn distance_to_band_edge(omega: f64, t_on: f64, t_off: f64) -> f64 {
    let phase = (omega * t_on).rem_euclid(PI);
    let w = band_width_phase(omega * t_off);
    let d = phase.min((phase - w).abs()).min(PI - phase);
    d / omega
}

/// Single-cycle resonance `ω t_on = atan(2/(ω t_off)) + kπ`.
pub fn resonant_ton_np1(omega: f64, t_off: f64, k: u32) -> Result<f64> {
    ensure_positive("omega", omega)?;
    ensure_non_negative("t_off", t_off)?;
    // atan2 yields π/2 in the t_off = 0 limit.
    Ok(((2.0f64).atan2(omega * t_off) + k as f64 * PI) / omega)
}

/// Two-cycle resonances `ω t_on = atan((2s ± √(s²+3))/(s²−1))`, folded into
/// the `k = 0` band. Fails at `s = 1`, where the closed form diverges; use
/// [`find_resonances`] there.
pub fn resonant_ton_np2(omega: f64, t_off: f64) -> Result<(f64, f64)> {
    ensure_positive("omega", omega)?;
    ensure_non_negative("t_off", t_off)?;
    let s = omega * t_off;
    let denom = s * s - 1.0;
    if denom.abs() < 1e-12 {
        return Err(Error::Singular(format!(
            "two-cycle closed form diverges at omega*t_off = {s}; use numerical root-finding"
        )));
    }
    let root = (s * s + 3.0).sqrt();
    let fold = |phase: f64| if phase <= 0.0 { phase + PI } else { phase };
    let a = fold(((2.0 * s + root) / denom).atan());
    let b = fold(((2.0 * s - root) / denom).atan());
    Ok((a / omega, b / omega))
}

/// Result of [`is_periodic`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Periodicity {
    pub periodic: bool,
    /// Frobenius distance from `T(RT)^{n_p}` to the nearest-angle rotation.
    pub residual: f64,
    /// Inferred rotation angle θ′.
    pub theta: f64,
}

/// `T(RT)^{n_p}` for the given timing.
pub fn periodicity_map(omega: f64, t_on: f64, t_off: f64, n_p: u32) -> SymplecticMap {
    let r = rotation_unchecked(-omega * t_on);
    let t = shear_unchecked(omega * t_off);
    t * (r * t).pow(n_p)
}

/// Tests whether `T(RT)^{n_p}` is a rotation within `tol` (Frobenius).
pub fn is_periodic(omega: f64, t_on: f64, t_off: f64, n_p: u32, tol: f64) -> Result<Periodicity> {
    ensure_positive("omega", omega)?;
    ensure_non_negative("t_on", t_on)?;
    ensure_non_negative("t_off", t_off)?;
    ensure_positive("tol", tol)?;
    if n_p == 0 {
        return Err(invalid("n_p must be at least 1"));
    }
    let m = periodicity_map(omega, t_on, t_off, n_p);
    let [a, _, c, _] = m.elements();
    let theta = c.atan2(a);
    let residual = m.frobenius_distance(&rotation_unchecked(theta));
    Ok(Periodicity {
        periodic: residual <= tol,
        residual,
        theta,
    })
}

/// Signed periodicity defect `M₁₂ + M₂₁` of `M = T(RT)^{n_p}`.
///
/// `M` is palindromic in `T` and `R`, so conjugating by `diag(1, −1)` inverts
/// it; that forces `M₁₁ = M₂₂` and leaves a single scalar condition for `M`
/// to be a rotation. The defect changes sign across every simple root.
pub fn periodicity_defect(omega: f64, t_on: f64, t_off: f64, n_p: u32) -> f64 {
    let [_, b, c, _] = periodicity_map(omega, t_on, t_off, n_p).elements();
    b + c
}

/// All `n_p`-cycle resonances inside band `k`, located by scanning the
/// periodicity defect for sign changes and bisecting each bracket to
/// [`ROOT_TOLERANCE_S`]. Covers the `s = 1` case the two-cycle closed form
/// cannot.
pub fn find_resonances(query: &ResonanceQuery) -> Result<Vec<f64>> {
    let Some(band) = admissible_band(query)? else {
        return Ok(Vec::new());
    };
    let ResonanceQuery { omega, t_off, n_p, .. } = *query;
    let f = |t: f64| periodicity_defect(omega, t, t_off, n_p);
    let n = SCAN_POINTS_PER_CYCLE * n_p as usize;
    let step = band.width() / n as f64;
    let mut roots = Vec::new();
    // Open interval: skip the two endpoints themselves.
    let mut t_prev = band.t_on_min + 1e-6 * step;
    let mut f_prev = f(t_prev);
    for i in 1..=n {
        let t = if i == n {
            band.t_on_max - 1e-6 * step
        } else {
            band.t_on_min + i as f64 * step
        };
        let ft = f(t);
        if ft == 0.0 {
            roots.push(t);
        } else if f_prev != 0.0 && f_prev.signum() != ft.signum() {
            roots.push(bisect(&f, t_prev, t, f_prev));
        }
        t_prev = t;
        f_prev = ft;
    }
    for &r in &roots {
        let p = is_periodic(omega, r, t_off, n_p, REFINED_RESIDUAL)?;
        if !p.periodic {
            return Err(Error::Numeric(format!(
                "root near t_on = {r:e} s has residual {:.1e}; the map is too ill-conditioned at s = {:.3}, n_p = {n_p}",
                p.residual,
                query.shear()
            )));
        }
    }
    Ok(roots)
}

// Runs to floating-point resolution; the stated tolerance is an upper bound.
fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Quarter trap period, the `t_off = 0` resonance.
pub fn quarter_period(omega: f64) -> f64 {
    FRAC_PI_2 / omega
}
