//! Entropy: the maximal value, empirical estimators, the cusp inequality
//! and the exponent bookkeeping for orbits avoiding an open set.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covering::{growth_exponent, height_class, BoxSpec};
use crate::error::{invalid, Error, Result};
use crate::height::{FlowParams, HeightLevels};
use crate::modular::{trajectory_points, EmpiricalMeasure, GroupPoint};

pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// `(p1/2 + p2) log r0`.
pub fn max_entropy(flow: &FlowParams) -> f64 {
    flow.rd.q() * flow.r0.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntropyMethod {
    BowenCount,
    PartitionSMB,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub method: EntropyMethod,
    #[serde(rename = "L")]
    pub len: usize,
    pub n_samples: usize,
    pub ci_halfwidth: f64,
    /// Mass of atoms whose trajectory could not be followed.
    pub excluded_mass: f64,
}

/// Number of L-boxes covering the `kappa`-neighbourhood of an atom along its
/// unstable leaf: one for a singular atom, `ceil(r0^(L-1))` for a diffuse one.
pub fn local_box_count(diffuse: bool, spec: &BoxSpec) -> f64 {
    if diffuse {
        (spec.kappa / spec.unstable_radius() - 1e-9).ceil().max(1.0)
    } else {
        1.0
    }
}

fn weighted_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bowen-box count estimate: the mass-weighted mean of `log N_x / L` over
/// usable atoms, with a bootstrap confidence half-width (95%).
pub fn brin_katok_estimate(
    measure: &EmpiricalMeasure,
    spec: &BoxSpec,
    delta: f64,
    seed: u64,
) -> Result<EntropyEstimate> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("mass fraction must lie in (0, 1), got {delta}"));
    }
    let len = spec.depth;
    let usable: Vec<bool> = measure
        .atoms()
        .par_iter()
        .map(|a| trajectory_points(&a.point, spec.r0, len).is_ok())
        .collect();
    let excluded: f64 = measure.atoms().iter().zip(&usable).filter(|(_, u)| !**u).map(|(a, _)| a.weight).sum();
    if excluded > delta {
        return Err(Error::NumericalFailure(format!(
            "excluded mass {excluded} exceeds the allowed fraction {delta}"
        )));
    }
    let locals: Vec<(f64, f64)> = measure
        .atoms()
        .iter()
        .zip(&usable)
        .filter(|(_, u)| **u)
        .map(|(a, _)| (a.weight, local_box_count(a.diffuse, spec).ln() / len as f64))
        .collect();
    let mean = |items: &mut dyn Iterator<Item = (f64, f64)>| {
        let (w, s) = items.fold((0.0, 0.0), |(w, s), (wi, vi)| (w + wi, s + wi * vi));
        s / w
    };
    let value = mean(&mut locals.iter().copied());
    let cum: Vec<f64> = locals
        .iter()
        .scan(0.0, |acc, (w, _)| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let total = *cum.last().expect("at least one usable atom");
    let mut boots: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(b as u64));
            let n = locals.len();
            let s: f64 = (0..n)
                .map(|_| {
                    let u = rng.gen::<f64>() * total;
                    let i = cum.partition_point(|&c| c < u).min(n - 1);
                    locals[i].1
                })
                .sum();
            s / n as f64
        })
        .collect();
    boots.sort_by(f64::total_cmp);
    let ci = 0.5 * (weighted_quantile(&boots, 0.975) - weighted_quantile(&boots, 0.025));
    Ok(EntropyEstimate {
        value: value.max(0.0),
        method: EntropyMethod::BowenCount,
        len,
        n_samples: measure.atoms().len(),
        ci_halfwidth: ci.max(0.0),
        excluded_mass: excluded,
    })
}

/// `H(Xi_m) / m` for weighted itineraries truncated to their first `m` symbols.
pub fn partition_entropy(weights: &[f64], itineraries: &[Vec<u64>], m: usize) -> Result<f64> {
    if m == 0 {
        return invalid("partition refinement depth must be positive");
    }
    if weights.len() != itineraries.len() {
        return invalid("one itinerary per weight required");
    }
    if itineraries.iter().any(|it| it.len() < m) {
        return invalid(format!("itineraries shorter than m = {m}"));
    }
    let total: f64 = weights.iter().sum();
    let mut cells: HashMap<&[u64], f64> = HashMap::new();
    for (w, it) in weights.iter().zip(itineraries) {
        *cells.entry(&it[..m]).or_insert(0.0) += w / total;
    }
    let mut masses: Vec<f64> = cells.into_values().collect();
    masses.sort_by(f64::total_cmp);
    let h: f64 = masses.iter().filter(|&&p| p > 0.0).map(|p| -p * p.ln()).sum();
    Ok(h / m as f64)
}

/// Labels for the partition `{X>s, s3 < height <= s, grid cells of X<=s3}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarsePartition {
    pub levels: HeightLevels,
    pub grid: f64,
}

impl CoarsePartition {
    pub fn label(&self, g: &GroupPoint, height: f64) -> u64 {
        match height_class(height, &self.levels) {
            2 => 0,
            1 => 1,
            _ => {
                let z = g.base_point();
                let cell = |v: f64| (v / self.grid).floor() as i64 as u64 & 0xffff;
                2 + (cell(z.re + 0.5) | cell(z.im.ln()) << 16 | cell(g.angle()) << 32)
            }
        }
    }

    pub fn itinerary(&self, g: &GroupPoint, r0: f64, m: usize) -> Result<Vec<u64>> {
        let (pts, hs) = trajectory_points(g, r0, m)?;
        Ok(pts.iter().zip(&hs).map(|(p, &h)| self.label(p, h)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub holds: bool,
    pub slack: f64,
}

/// `nu_mass h_nu + h_m (1 - nu_mass) / 2 >= h_limit - tol`.
pub fn main_inequality_check(
    nu_mass: f64,
    h_limit: f64,
    h_nu_normalized: f64,
    h_m: f64,
    tol: f64,
) -> Result<InequalityCheck> {
    for (name, v) in [("nu_mass", nu_mass), ("h_limit", h_limit), ("h_nu", h_nu_normalized), ("h_m", h_m)] {
        if !v.is_finite() {
            return invalid(format!("{name} must be finite"));
        }
    }
    if !(0.0..=1.0).contains(&nu_mass) {
        return invalid(format!("nu_mass must lie in [0, 1], got {nu_mass}"));
    }
    if h_limit > h_m + tol || h_nu_normalized > h_m + tol || h_limit < 0.0 || h_nu_normalized < 0.0 {
        return invalid("entropies must lie in [0, h_m]");
    }
    let slack = nu_mass * h_nu_normalized + 0.5 * h_m * (1.0 - nu_mass) - h_limit;
    Ok(InequalityCheck { holds: slack >= -tol, slack })
}

/// Smallest surviving mass allowed by the escape bound, `2c/h_m - 1`.
pub fn escape_mass_bound(c: f64, h_m: f64) -> f64 {
    2.0 * c / h_m - 1.0
}

/// `nu_mass >= 2c/h_m - 1 - tol`, with the slack.
pub fn escape_check(nu_mass: f64, c: f64, h_m: f64, tol: f64) -> InequalityCheck {
    let slack = nu_mass - escape_mass_bound(c, h_m);
    InequalityCheck { holds: slack >= -tol, slack }
}

/// Exact rational from `"a/b"`, an integer or a decimal literal (with
/// optional exponent).
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    let digits = format!("{int}{frac}");
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let shift = exp - frac.len() as i32;
    let ten = BigInt::from(10u32);
    let scale = num_traits::pow(ten, shift.unsigned_abs() as usize);
    Ok(if shift >= 0 {
        BigRational::from_integer(num * scale)
    } else {
        BigRational::new(num, scale)
    })
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parameters of the dimension argument. Rational fields are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams {
    pub delta0: BigRational,
    pub eps0: BigRational,
    pub eps: BigRational,
    pub delta: BigRational,
    pub d: f64,
    pub l0: u64,
    pub k: u64,
    pub s: f64,
    /// Fitted `c(s)` of the restricted cover count; zero if unknown.
    pub c_of_s: f64,
}

impl BoundParams {
    pub fn new(delta0: BigRational, eps0: BigRational, eps: BigRational, delta: BigRational) -> Result<Self> {
        if !delta0.is_positive() {
            return invalid("delta0 must be positive");
        }
        if eps0.is_negative() || eps.is_negative() || delta.is_negative() {
            return invalid("eps0, eps and delta must be non-negative");
        }
        Ok(Self { delta0, eps0, eps, delta, d: 3.0, l0: 10, k: 100, s: std::f64::consts::E.powi(2), c_of_s: 0.0 })
    }

    /// `eps' = 4 delta0 eps`.
    pub fn eps_prime(&self) -> BigRational {
        BigRational::from_integer(4.into()) * &self.delta0 * &self.eps
    }

    /// `b = (delta0 + 4 eps0) / (2 h_m) + 4 eps`.
    pub fn b(&self, h_m: &BigRational) -> BigRational {
        let four = BigRational::from_integer(4.into());
        let two = BigRational::from_integer(2.into());
        (&self.delta0 + &four * &self.eps0) / (two * h_m) + four * &self.eps
    }

    /// `3 eps0 + delta + eps' - delta0 / 4`.
    pub fn exponent(&self) -> BigRational {
        BigRational::from_integer(3.into()) * &self.eps0 + &self.delta + self.eps_prime()
            - &self.delta0 / BigRational::from_integer(4.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExponentSign {
    Negative,
    Boundary,
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    /// Exact exponent as `"num/den"`.
    pub exponent: String,
    pub exponent_f64: f64,
    pub sign: ExponentSign,
    /// `eps0 < delta0/24` and `delta + eps' < delta0/8`.
    pub hypotheses_hold: bool,
    /// The hypotheses hold with equality in both places.
    pub on_boundary: bool,
    /// Negativity asserted (only when the hypotheses hold).
    pub asserted: Option<bool>,
    pub eps_prime: f64,
    pub b: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub nu_lower_bound: f64,
    pub f_of_s: f64,
    pub c_tilde: f64,
    pub rho_lower_bound: f64,
    /// `b1 log K - b2 K + exponent L0 K`, the log of the mass bound up to
    /// the `kappa` factor.
    pub log_mass_bound: f64,
    pub stirling: StirlingReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StirlingReport {
    pub checked: usize,
    pub violations: usize,
    pub worst_margin: f64,
}

/// Binary entropy `-b log b - (1-b) log(1-b)`.
pub fn binary_entropy(b: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    term(b) + term(1.0 - b)
}

/// Constants of `C(K, bK) <= e^(b1 log K - b2 K)`: `b1 = 0`, `b2 = -H(b)`.
pub fn stirling_constants(b: f64) -> (f64, f64) {
    (0.0, -binary_entropy(b))
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `bK` rounded towards 1/2 so that `H(k/K) <= H(b)`.
pub fn rounded_count(k_total: u64, b: f64) -> u64 {
    let x = b * k_total as f64;
    if b <= 0.5 {
        (x + 1e-9).floor() as u64
    } else {
        (x - 1e-9).ceil() as u64
    }
}

/// Compares exact binomials with the exponential bound for all `K` in
/// `k_range` and the given fractions.
pub fn stirling_check(k_range: std::ops::RangeInclusive<u64>, fractions: &[f64]) -> StirlingReport {
    let rows: Vec<f64> = k_range
        .into_par_iter()
        .flat_map_iter(|k| {
            fractions.iter().map(move |&b| {
                let (b1, b2) = stirling_constants(b);
                let exact = binomial(k, rounded_count(k, b));
                let ln_exact = exact.to_f64().map(f64::ln).unwrap_or(f64::INFINITY);
                b1 * (k as f64).ln() - b2 * k as f64 - ln_exact
            })
        })
        .collect();
    StirlingReport {
        checked: rows.len(),
        violations: rows.iter().filter(|&&m| m < 0.0).count(),
        worst_margin: rows.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// The sweep `K = 10..=1000`, `b = 0.1, ..., 0.9`, computed once.
fn default_stirling() -> &'static StirlingReport {
    static SWEEP: std::sync::OnceLock<StirlingReport> = std::sync::OnceLock::new();
    SWEEP.get_or_init(|| stirling_check(10..=1000, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]))
}

/// Evaluates the exponent, its sign and the auxiliary bounds. `h_m` must be
/// rational for the exact part (e.g. 1 for the modular surface).
pub fn hausdorff_exponent_check(bp: &BoundParams, h_m: &BigRational, dim_g: u32) -> ExponentReport {
    let exp = bp.exponent();
    let zero = BigRational::zero();
    let sign = if exp < zero {
        ExponentSign::Negative
    } else if exp == zero {
        ExponentSign::Boundary
    } else {
        ExponentSign::Positive
    };
    let r = |n: i64| BigRational::from_integer(n.into());
    let eps0_cap = &bp.delta0 / r(24);
    let de_cap = &bp.delta0 / r(8);
    let de = &bp.delta + bp.eps_prime();
    let hypotheses_hold = bp.eps0 < eps0_cap && de < de_cap;
    let on_boundary = bp.eps0 == eps0_cap && de == de_cap;
    let hm = to_f64(h_m);
    let b = to_f64(&bp.b(h_m));
    let (b1, b2) = stirling_constants(b.clamp(0.0, 1.0));
    let f_of_s = growth_exponent(bp.s);
    let c_tilde = f_of_s + bp.c_of_s;
    let (d0, e0) = (to_f64(&bp.delta0), to_f64(&bp.eps0));
    let kf = bp.k as f64;
    ExponentReport {
        exponent: format!("{}/{}", exp.numer(), exp.denom()),
        exponent_f64: to_f64(&exp),
        sign,
        hypotheses_hold,
        on_boundary,
        asserted: hypotheses_hold.then_some(sign == ExponentSign::Negative),
        eps_prime: to_f64(&bp.eps_prime()),
        b,
        b1,
        b2,
        b3: 2f64.powi(dim_g as i32),
        nu_lower_bound: 1.0 - (d0 + 4.0 * e0) / (2.0 * hm),
        f_of_s,
        c_tilde,
        rho_lower_bound: (d0 + 4.0 * e0 + 4.0 * c_tilde) / (2.0 * hm),
        log_mass_bound: b1 * kf.ln() - b2 * kf + to_f64(&exp) * (bp.l0 as f64) * kf,
        stirling: default_stirling().clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::RootData;
    use crate::modular::{closed_geodesic, injectivity_radius};
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    fn spec(len: usize) -> BoxSpec {
        let lv = HeightLevels::with_ratio(1.0, E, 1.1, E * E).unwrap();
        BoxSpec::new(0.5 * injectivity_radius(lv.s3), len, E).unwrap()
    }

    #[test]
    fn max_entropy_examples() {
        let real = RootData::real(1).unwrap();
        assert!((max_entropy(&FlowParams::new(E, real).unwrap()) - 1.0).abs() < 1e-15);
        let cx = RootData::complex(1).unwrap();
        assert!((max_entropy(&FlowParams::new(E, cx).unwrap()) - 2.0).abs() < 1e-15);
        assert!(FlowParams::new(1.0, real).is_err());
        let rd = RootData::complex(2).unwrap();
        let h1 = max_entropy(&FlowParams::new(1.7, rd.clone()).unwrap());
        let h3 = max_entropy(&FlowParams::new(1.7f64.powi(3), rd).unwrap());
        assert!((h3 - 3.0 * h1).abs() < 1e-12);
    }

    #[test]
    fn partition_entropy_examples() {
        let its: Vec<Vec<u64>> = (0..8u64).map(|i| vec![7, 7, 7, i]).collect();
        assert_eq!(partition_entropy(&[1.0; 8], &its, 3).unwrap(), 0.0);
        let m = 4;
        let its: Vec<Vec<u64>> = (0..1u64 << m).map(|i| (0..m).map(|b| i >> b & 1).collect()).collect();
        let w = vec![1.0; its.len()];
        assert!((partition_entropy(&w, &its, m).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!(partition_entropy(&w, &its, 0).is_err());
    }

    #[test]
    fn periodic_estimate_vanishes() {
        let geo = closed_geodesic(&[1, 2]).unwrap();
        let mu = EmpiricalMeasure::periodic(&geo, 200).unwrap();
        for len in (10..=60).step_by(10) {
            let est = brin_katok_estimate(&mu, &spec(len), 0.05, 1).unwrap();
            assert_eq!(est.value, 0.0);
        }
    }

    #[test]
    fn haar_estimate_and_mixture() {
        let haar = EmpiricalMeasure::haar(2000, 3).unwrap();
        let est = brin_katok_estimate(&haar, &spec(30), 0.05, 1).unwrap();
        assert!((est.value - 29.0 / 30.0).abs() < 1e-9);
        assert!(est.value <= 1.1);
        let per = EmpiricalMeasure::periodic(&closed_geodesic(&[5, 1]).unwrap(), 2000).unwrap();
        let mix = EmpiricalMeasure::mixture(0.5, &haar, &per).unwrap();
        let est = brin_katok_estimate(&mix, &spec(30), 0.05, 1).unwrap();
        assert!((est.value - 0.5).abs() < 0.15);
        assert!(est.ci_halfwidth > 0.0 && est.ci_halfwidth < 0.1);
        let again = brin_katok_estimate(&mix, &spec(30), 0.05, 1).unwrap();
        assert_eq!(est, again);
    }

    #[test]
    fn inequality_examples() {
        let c = main_inequality_check(0.0, 0.5, 0.0, 1.0, 0.0).unwrap();
        assert!(c.holds && c.slack.abs() < 1e-15);
        let c = main_inequality_check(1.0, 0.7, 0.8, 1.0, 0.0).unwrap();
        assert!(c.holds && (c.slack - 0.1).abs() < 1e-12);
        assert!(!main_inequality_check(1.0, 0.9, 0.8, 1.0, 0.05).unwrap().holds);
        assert!(main_inequality_check(1.2, 0.5, 0.5, 1.0, 0.0).is_err());
        assert!(main_inequality_check(0.5, f64::NAN, 0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn escape_bound_follows_on_grid() {
        for i in 0..=20 {
            for j in 0..=20 {
                let nu = i as f64 / 20.0;
                let c = j as f64 / 20.0;
                let main = main_inequality_check(nu, c, 1.0, 1.0, 0.0).unwrap();
                if main.holds {
                    assert!(escape_check(nu, c, 1.0, 1e-12).holds, "nu {nu} c {c}");
                }
            }
        }
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(q("1/24"), BigRational::new(1.into(), 24.into()));
        assert_eq!(q("0.125"), BigRational::new(1.into(), 8.into()));
        assert_eq!(q("2.5e-3"), BigRational::new(1.into(), 400.into()));
        assert_eq!(q("3"), BigRational::from_integer(3.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn exponent_boundary_and_interior() {
        let delta0 = q("0.24");
        let eps0 = &delta0 / BigRational::from_integer(24.into());
        // delta + 4 delta0 eps = delta0 / 8 with eps = 1/40
        let eps = q("1/40");
        let delta = &delta0 / BigRational::from_integer(8.into()) - BigRational::from_integer(4.into()) * &delta0 * &eps;
        let bp = BoundParams::new(delta0.clone(), eps0, eps, delta).unwrap();
        let rep = hausdorff_exponent_check(&bp, &BigRational::one(), 3);
        assert_eq!(rep.sign, ExponentSign::Boundary);
        assert!(rep.on_boundary && !rep.hypotheses_hold && rep.asserted.is_none());
        assert_eq!(rep.exponent, "0/1");

        let bp = BoundParams::new(delta0, q("0.009"), q("0.01"), q("0.01")).unwrap();
        let rep = hausdorff_exponent_check(&bp, &BigRational::one(), 3);
        assert!(rep.hypotheses_hold);
        assert_eq!(rep.asserted, Some(true));
        assert!((rep.nu_lower_bound - (1.0 - (0.24 + 0.036) / 2.0)).abs() < 1e-12);
        assert_eq!(rep.stirling.violations, 0);
    }

    #[test]
    fn binomial_matches_recurrence() {
        let mut row = vec![BigUint::one()];
        for n in 1..=60u64 {
            let mut next = vec![BigUint::one(); n as usize + 1];
            for k in 1..n as usize {
                next[k] = &row[k - 1] + &row[k];
            }
            row = next;
            for k in 0..=n {
                assert_eq!(binomial(n, k), row[k as usize]);
            }
        }
    }

    #[test]
    fn stirling_example() {
        let (b1, b2) = stirling_constants(0.3);
        let exact = binomial(100, 30).to_f64().unwrap().ln();
        assert!(exact <= b1 * 100f64.ln() - b2 * 100.0);
        // the ratio to the leading Stirling term tends to 1
        let k = 1000u64;
        let lead = (2.0 * std::f64::consts::PI * 0.3 * 0.7 * k as f64).sqrt().ln();
        let exact = binomial(k, 300).to_f64().unwrap().ln();
        assert!((exact + lead - k as f64 * binary_entropy(0.3)).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn exponent_negative_under_hypotheses(a in 1u32..1000, e0 in 0u32..1000, e in 0u32..1000, d in 0u32..1000) {
            let delta0 = BigRational::new(a.into(), 100.into());
            let eps0 = &delta0 / BigRational::from_integer(24.into()) * BigRational::new(e0.into(), 1001.into());
            let cap = &delta0 / BigRational::from_integer(8.into()) * BigRational::new(d.into(), 1001.into());
            // split the cap between delta and eps'
            let share = BigRational::new(e.into(), 1000.into());
            let eps = &cap * &share / (BigRational::from_integer(4.into()) * &delta0);
            let delta = &cap * (BigRational::one() - &share);
            let bp = BoundParams::new(delta0, eps0, eps, delta).unwrap();
            let rep = hausdorff_exponent_check_fast(&bp);
            prop_assert_eq!(rep, ExponentSign::Negative);
        }

        #[test]
        fn estimate_bounded_by_max_entropy(seed in 0u64..50, len in 2usize..60) {
            let mu = EmpiricalMeasure::haar(50, seed).unwrap();
            let est = brin_katok_estimate(&mu, &spec(len), 0.05, seed).unwrap();
            prop_assert!(est.value >= 0.0 && est.value <= 1.0 + 0.1);
        }
    }

    fn hausdorff_exponent_check_fast(bp: &BoundParams) -> ExponentSign {
        let e = bp.exponent();
        if e < BigRational::zero() { ExponentSign::Negative } else if e.is_zero() { ExponentSign::Boundary } else { ExponentSign::Positive }
    }
}
