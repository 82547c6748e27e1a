//! Exact 2×2 phase-space algebra for one blinking cycle.
//!
//! Every map acts on the column `(q, v)` where `q = ω·x` is the generalized
//! position, so both coordinates carry units of velocity and a harmonic trap
//! acts as a pure rotation. Free flight with the trap off is a shear.

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, invalid, Result};

/// Tolerance on `|det − 1|` accepted by [`SymplecticMap::new`].
pub const DET_TOLERANCE: f64 = 1e-9;

/// A real 2×2 matrix with unit determinant, stored row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymplecticMap {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl SymplecticMap {
    pub const IDENTITY: Self = Self {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Builds `[[a, b], [c, d]]`, rejecting non-finite entries and
    /// determinants further than [`DET_TOLERANCE`] from one.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
            ensure_finite(name, v)?;
        }
        let m = Self { a, b, c, d };
        if (m.det() - 1.0).abs() > DET_TOLERANCE {
            return Err(invalid(format!(
                "matrix determinant {} is not 1",
                m.det()
            )));
        }
        Ok(m)
    }

    /// Row-major elements `[a, b, c, d]`.
    pub fn elements(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn transpose(&self) -> Self {
        Self {
            a: self.a,
            b: self.c,
            c: self.b,
            d: self.d,
        }
    }

    /// Inverse of a unit-determinant matrix.
    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [self.a * p[0] + self.b * p[1], self.c * p[0] + self.d * p[1]]
    }

    /// `self^n` by repeated squaring.
    pub fn pow(&self, mut n: u32) -> Self {
        let mut base = *self;
        let mut acc = Self::IDENTITY;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }

    /// Squared Frobenius norm, `a² + b² + c² + d²`.
    pub fn frobenius_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        let da = self.a - other.a;
        let db = self.b - other.b;
        let dc = self.c - other.c;
        let dd = self.d - other.d;
        (da * da + db * db + dc * dc + dd * dd).sqrt()
    }
}

impl Mul for SymplecticMap {
    type Output = Self;

    fn mul(self, o: Self) -> Self {
        Self {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

/// Rotation `R(θ) = [[cos θ, −sin θ], [sin θ, cos θ]]`.
pub fn rotation_map(theta: f64) -> Result<SymplecticMap> {
    ensure_finite("theta", theta)?;
    Ok(rotation_unchecked(theta))
}

pub(crate) fn rotation_unchecked(theta: f64) -> SymplecticMap {
    let (s, c) = theta.sin_cos();
    SymplecticMap {
        a: c,
        b: -s,
        c: s,
        d: c,
    }
}

/// Shear `T(s) = [[1, s], [0, 1]]`.
pub fn shear_map(s: f64) -> Result<SymplecticMap> {
    ensure_finite("s", s)?;
    Ok(shear_unchecked(s))
}

pub(crate) fn shear_unchecked(s: f64) -> SymplecticMap {
    SymplecticMap {
        a: 1.0,
        b: s,
        c: 0.0,
        d: 1.0,
    }
}

/// One blinking cycle seen from the atom: rotation by `−ω·t_on` while the
/// trap is on, then shear by `ω·t_off` in free flight, `T(ω t_off)·R(−ω t_on)`.
pub fn cycle_map(omega: f64, t_on: f64, t_off: f64) -> Result<SymplecticMap> {
    ensure_positive("omega", omega)?;
    ensure_non_negative("t_on", t_on)?;
    ensure_non_negative("t_off", t_off)?;
    Ok(shear_unchecked(omega * t_off) * rotation_unchecked(-omega * t_on))
}

/// Largest singular value, from the closed form for 2×2 matrices:
/// `σ = (sqrt((a+d)² + (b−c)²) + sqrt((a−d)² + (b+c)²)) / 2`.
///
/// Equivalent to `σ² = (‖M‖²_F + sqrt(‖M‖⁴_F − 4 det²)) / 2` but exact for
/// rotations, where the discriminant form loses half the digits.
pub fn spectral_norm(map: &SymplecticMap) -> f64 {
    let SymplecticMap { a, b, c, d } = *map;
    0.5 * ((a + d).hypot(b - c) + (a - d).hypot(b + c))
}

/// Spectral norm of a pure shear of total magnitude `total_shear`:
/// `sqrt(((2 + S²) + sqrt((2 + S²)² − 4)) / 2)`.
pub fn shear_norm(total_shear: f64) -> f64 {
    let s2 = total_shear * total_shear;
    let f = 2.0 + s2;
    // (2 + S²)² − 4 = S²(4 + S²)
    let disc = s2 * (4.0 + s2);
    ((f + disc.sqrt()) / 2.0).sqrt()
}

/// Bivariate Gaussian over `(q, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    mean: [f64; 2],
    cov: [[f64; 2]; 2],
}

impl GaussianState {
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        for v in mean.iter().chain(cov.iter().flatten()) {
            ensure_finite("gaussian parameter", *v)?;
        }
        let scale = cov[0][1].abs().max(cov[1][0].abs()).max(1.0);
        if (cov[0][1] - cov[1][0]).abs() > 1e-12 * scale {
            return Err(invalid("covariance must be symmetric"));
        }
        let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
        if cov[0][0] <= 0.0 || det <= 0.0 {
            return Err(invalid("covariance must be positive definite"));
        }
        Ok(Self { mean, cov })
    }

    /// Zero-mean isotropic state with variance `sigma²` on both axes.
    pub fn isotropic(sigma: f64) -> Result<Self> {
        ensure_positive("sigma", sigma)?;
        Self::new([0.0, 0.0], [[sigma * sigma, 0.0], [0.0, sigma * sigma]])
    }

    pub fn mean(&self) -> [f64; 2] {
        self.mean
    }

    pub fn cov(&self) -> [[f64; 2]; 2] {
        self.cov
    }

    pub fn cov_det(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    /// Principal standard deviations `(major, minor)`.
    pub fn principal_std(&self) -> (f64, f64) {
        let [[p, r], [_, q]] = self.cov;
        let half_tr = 0.5 * (p + q);
        let rad = (0.25 * (p - q) * (p - q) + r * r).sqrt();
        ((half_tr + rad).sqrt(), (half_tr - rad).max(0.0).sqrt())
    }
}

/// Pushes a Gaussian through a linear map: `μ' = Mμ`, `Σ' = MΣMᵀ`.
pub fn evolve_gaussian(state: &GaussianState, map: &SymplecticMap) -> GaussianState {
    let mean = map.apply(state.mean);
    let [[p, r], [_, q]] = state.cov;
    let SymplecticMap { a, b, c, d } = *map;
    // M Σ
    let (m00, m01) = (a * p + b * r, a * r + b * q);
    let (m10, m11) = (c * p + d * r, c * r + d * q);
    // (M Σ) Mᵀ
    let s00 = m00 * a + m01 * b;
    let s01 = m00 * c + m01 * d;
    let s11 = m10 * c + m11 * d;
    GaussianState {
        mean,
        cov: [[s00, s01], [s01, s11]],
    }
}
