//! Height along `a_t`-orbits in closed form.
//!
//! A point in the small Bruhat cell has height `r / t` at time `t`; a point in
//! the big cell with U-coordinates `(Z, X)` has height
//! `r (1/t) / ((1/t + |X|^2/4)^2 + |Z|^2)`. Everything here (sojourn sets,
//! peaks, plateau lengths, level choices) is derived from these two formulas.

use serde::{Deserialize, Serialize};

use crate::algebra::{norm, norm_sq, RootData};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub r0: f64,
    pub rd: RootData,
}

impl FlowParams {
    pub fn new(r0: f64, rd: RootData) -> Result<Self> {
        if !(r0 > 1.0) || !r0.is_finite() {
            return invalid(format!("r0 must be > 1, got {r0}"));
        }
        Ok(Self { r0, rd })
    }
}

/// `s1 < s2 < s3`, before the working levels are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseLevels {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub r0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeightLevels {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s: f64,
    pub s_prime: f64,
}

pub const DEFAULT_MARGIN: f64 = 1.1;

/// `s2 = margin * 2 r0^2 s1`, `s3 = margin * r0^2 s2`.
pub fn make_levels(s1: f64, r0: f64, margin: f64) -> Result<BaseLevels> {
    if !(s1 > 0.0) || !s1.is_finite() {
        return invalid(format!("s1 must be positive, got {s1}"));
    }
    if !(r0 > 1.0) || !r0.is_finite() {
        return invalid(format!("r0 must be > 1, got {r0}"));
    }
    if !(margin > 1.0) || !margin.is_finite() {
        return invalid(format!("margin must be > 1, got {margin}"));
    }
    let s2 = margin * 2.0 * r0 * r0 * s1;
    let s3 = margin * r0 * r0 * s2;
    Ok(BaseLevels { s1, s2, s3, r0 })
}

impl BaseLevels {
    pub fn complete(&self, s: f64, s_prime: f64) -> Result<HeightLevels> {
        HeightLevels::new(self.s1, self.s2, self.s3, s, s_prime, self.r0)
    }
}

impl HeightLevels {
    pub fn new(s1: f64, s2: f64, s3: f64, s: f64, s_prime: f64, r0: f64) -> Result<Self> {
        if !(s1 > 0.0 && s1 < s2 && s2 < s3 && s3 < s && s <= s_prime && s_prime.is_finite()) {
            return invalid(format!(
                "levels must satisfy 0 < s1 < s2 < s3 < s <= s_prime, got {s1}, {s2}, {s3}, {s}, {s_prime}"
            ));
        }
        if !(s2 > 2.0 * r0 * r0 * s1) {
            return invalid(format!("s2 = {s2} must exceed 2 r0^2 s1 = {}", 2.0 * r0 * r0 * s1));
        }
        if !(s3 > r0 * r0 * s2) {
            return invalid(format!("s3 = {s3} must exceed r0^2 s2 = {}", r0 * r0 * s2));
        }
        Ok(Self { s1, s2, s3, s, s_prime })
    }

    /// Levels with `s = ratio * s3` and `s_prime = s`.
    pub fn with_ratio(s1: f64, r0: f64, margin: f64, ratio: f64) -> Result<Self> {
        let b = make_levels(s1, r0, margin)?;
        b.complete(ratio * b.s3, ratio * b.s3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HeightProfile {
    Small { r: f64 },
    Big { r: f64, z: Vec<f64>, x: Vec<f64> },
}

impl HeightProfile {
    pub fn small(r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return invalid(format!("profile r must be positive, got {r}"));
        }
        Ok(Self::Small { r })
    }

    pub fn big(r: f64, z: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if !(r > 0.0) {
            return invalid(format!("profile r must be positive, got {r}"));
        }
        Ok(Self::Big { r, z, x })
    }

    pub fn big_checked(rd: &RootData, r: f64, z: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        rd.check_g2(&z)?;
        rd.check_g1(&x)?;
        Self::big(r, z, x)
    }

    pub fn r(&self) -> f64 {
        match self {
            Self::Small { r } | Self::Big { r, .. } => *r,
        }
    }
}

/// `|X|^4/16 + |Z|^2`; its reciprocal is the far end of the sojourn set.
pub fn shape_constant(z: &[f64], x: &[f64]) -> f64 {
    let xs = norm_sq(x);
    xs * xs / 16.0 + norm_sq(z)
}

pub fn height_at(profile: &HeightProfile, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return invalid(format!("height_at needs t > 0, got {t}"));
    }
    Ok(match profile {
        HeightProfile::Small { r } => r / t,
        HeightProfile::Big { r, z, x } if norm_sq(z) == 0.0 && norm_sq(x) == 0.0 => r * t,
        HeightProfile::Big { r, z, x } => {
            let u = 1.0 / t;
            let w = u + 0.25 * norm_sq(x);
            r * u / (w * w + norm_sq(z))
        }
    })
}

/// A time that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Horizon {
    Finite(f64),
    Unbounded,
}

impl Horizon {
    pub fn capped(self, cap: f64) -> f64 {
        match self {
            Self::Finite(v) => v.min(cap),
            Self::Unbounded => cap,
        }
    }
}

/// Open set of times where the big-cell height exceeds its value at `t = 1`:
/// the interval between 1 and `tau`. `None` when `tau = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sojourn {
    pub lo: f64,
    pub hi: Horizon,
}

pub fn sojourn_interval(z: &[f64], x: &[f64]) -> Option<Sojourn> {
    let c = shape_constant(z, x);
    if c == 0.0 {
        return Some(Sojourn { lo: 1.0, hi: Horizon::Unbounded });
    }
    let tau = 1.0 / c;
    if tau == 1.0 {
        None
    } else if tau > 1.0 {
        Some(Sojourn { lo: 1.0, hi: Horizon::Finite(tau) })
    } else {
        Some(Sojourn { lo: tau, hi: Horizon::Finite(1.0) })
    }
}

/// Time of maximal big-cell height, `(|X|^4/16 + |Z|^2)^(-1/2)`.
pub fn peak_time(z: &[f64], x: &[f64]) -> Horizon {
    let c = shape_constant(z, x);
    if c == 0.0 {
        Horizon::Unbounded
    } else {
        Horizon::Finite(1.0 / c.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlateauBound {
    Steps(u64),
    Unbounded,
}

impl PlateauBound {
    pub fn capped(self, cap: u64) -> u64 {
        match self {
            Self::Steps(n) => n.min(cap),
            Self::Unbounded => cap,
        }
    }
}

/// Largest `n >= 0` such that the height at `t = r0^n` can still exceed `s3`.
///
/// Requires the height at `t = 1` to exceed `s3`.
pub fn plateau_bound(levels: &HeightLevels, r0: f64, profile: &HeightProfile) -> Result<PlateauBound> {
    if !(r0 > 1.0) {
        return invalid(format!("r0 must be > 1, got {r0}"));
    }
    let s3 = levels.s3;
    if height_at(profile, 1.0)? <= s3 {
        return invalid("profile is not above s3 at t = 1");
    }
    let log_r0 = r0.ln();
    let steps = |limit: f64| -> PlateauBound {
        // largest integer n with n < limit
        let n = limit.ceil() - 1.0;
        PlateauBound::Steps(n.max(0.0) as u64)
    };
    match profile {
        HeightProfile::Small { r } => Ok(steps((r / s3).ln() / log_r0)),
        HeightProfile::Big { r, z, x } => {
            // heights above s3 are exactly 1/t in (lam_minus, lam_plus)
            let c = shape_constant(z, x);
            let half_b = 0.5 * (0.5 * norm_sq(x) - r / s3);
            let disc = half_b * half_b - c;
            if disc < 0.0 || half_b >= 0.0 {
                return invalid("profile never rises above s3");
            }
            let lam_plus = -half_b + disc.sqrt();
            let lam_minus = c / lam_plus;
            if lam_minus == 0.0 {
                return Ok(PlateauBound::Unbounded);
            }
            Ok(steps(-lam_minus.ln() / log_r0))
        }
    }
}

/// Empirical big-cell sample `(Z, X, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SojournSample {
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SojournConstants {
    /// `max |X| t^(1/4)` over retained samples.
    pub c1: f64,
    /// `max |Z| t^(1/2)` over retained samples.
    pub c2: f64,
    pub n_used: usize,
}

/// Keeps samples with `t > 1` whose height at `t` exceeds `lambda` times the
/// height at 1, and fits the decay constants of `|X|` and `|Z|` in `t`.
pub fn fit_sojourn_constants(lambda: f64, samples: &[SojournSample]) -> Result<SojournConstants> {
    if !(lambda > 0.0) {
        return invalid(format!("lambda must be positive, got {lambda}"));
    }
    let mut out = SojournConstants { c1: 0.0, c2: 0.0, n_used: 0 };
    for s in samples {
        if !(s.t > 1.0) {
            continue;
        }
        let p = HeightProfile::Big { r: 1.0, z: s.z.clone(), x: s.x.clone() };
        if height_at(&p, s.t)? > lambda * height_at(&p, 1.0)? {
            out.c1 = out.c1.max(norm(&s.x) * s.t.powf(0.25));
            out.c2 = out.c2.max(norm(&s.z) * s.t.sqrt());
            out.n_used += 1;
        }
    }
    if out.n_used == 0 {
        return invalid("no samples satisfy the sojourn hypothesis");
    }
    Ok(out)
}

/// Geometric grid on `[lo, hi]` with `per_decade` points per factor of 10.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(1);
    (0..=n).map(|k| lo * (hi / lo).powf(k as f64 / n as f64)).collect()
}
