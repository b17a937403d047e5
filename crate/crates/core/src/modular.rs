//! The modular surface `SL(2,Z)\SL(2,R)` as a desk-scale laboratory.
//!
//! Points are 2x2 matrices `g`; the associated point of the upper half plane
//! is `z = g.i`, and the flow acts by right multiplication with
//! `diag(r0^(1/2), r0^(-1/2))`. Heights are computed by Gauss reduction of
//! `z` into the standard fundamental domain.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::covering::ExcursionPattern;
use crate::error::{invalid, Error, Result};
use crate::height::HeightLevels;

/// Longest trajectory accepted by [`trajectory`].
pub const MAX_STEPS: usize = 200;

const MAX_REDUCTION_STEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// Inverse of a determinant-one matrix.
    pub fn inv_unimodular(&self) -> Mat2 {
        Mat2 { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn neg(&self) -> Mat2 {
        Mat2 { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
    }

    pub fn diag(t: f64) -> Mat2 {
        Mat2 { a: t, b: 0.0, c: 0.0, d: 1.0 / t }
    }

    pub fn upper(u: f64) -> Mat2 {
        Mat2 { a: 1.0, b: u, c: 0.0, d: 1.0 }
    }

    pub fn lower(l: f64) -> Mat2 {
        Mat2 { a: 1.0, b: 0.0, c: l, d: 1.0 }
    }

    pub fn rotation(theta: f64) -> Mat2 {
        let (s, c) = theta.sin_cos();
        Mat2 { a: c, b: -s, c: s, d: c }
    }

    /// Moebius action on a point of the upper half plane.
    pub fn act(&self, z: Complex) -> Complex {
        let num = Complex { re: self.a * z.re + self.b, im: self.a * z.im };
        let den = Complex { re: self.c * z.re + self.d, im: self.c * z.im };
        num.div(den)
    }

    fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn norm_sq(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn div(&self, o: Complex) -> Complex {
        let n = o.norm_sq();
        Complex {
            re: (self.re * o.re + self.im * o.im) / n,
            im: (self.im * o.re - self.re * o.im) / n,
        }
    }
}

/// Representative `g` of a point `Gamma g` of the modular surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint(Mat2);

impl GroupPoint {
    pub fn new(m: Mat2) -> Result<Self> {
        if ![m.a, m.b, m.c, m.d].iter().all(|v| v.is_finite()) {
            return invalid("group point has non-finite entries");
        }
        if (m.det() - 1.0).abs() > 1e-12 {
            return invalid(format!("group point has determinant {}", m.det()));
        }
        Ok(Self(m))
    }

    /// Rescales a matrix with positive determinant to determinant one.
    pub fn normalized(m: Mat2) -> Result<Self> {
        let det = m.det();
        if !(det > 0.0) || !det.is_finite() {
            return invalid(format!("cannot normalize determinant {det}"));
        }
        let s = det.sqrt().recip();
        Self::new(Mat2 { a: m.a * s, b: m.b * s, c: m.c * s, d: m.d * s })
    }

    /// `n_x a_y k_theta`, the frame over `z = x + iy` at angle `theta`.
    pub fn from_frame(x: f64, y: f64, theta: f64) -> Result<Self> {
        if !(y > 0.0) {
            return invalid(format!("frame needs y > 0, got {y}"));
        }
        let sy = y.sqrt();
        let m = Mat2::new(sy, x / sy, 0.0, 1.0 / sy).mul(&Mat2::rotation(theta));
        Self::normalized(m)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    /// `z = g.i`.
    pub fn base_point(&self) -> Complex {
        let Mat2 { a, b, c, d } = self.0;
        let n = c * c + d * d;
        Complex { re: (a * c + b * d) / n, im: 1.0 / n }
    }

    /// Frame angle, in `[0, pi)` (the sign of `g` is irrelevant in the quotient).
    pub fn angle(&self) -> f64 {
        let t = self.0.c.atan2(self.0.d);
        t.rem_euclid(PI)
    }

    pub fn right_mul(&self, m: &Mat2) -> Result<Self> {
        Self::normalized(self.0.mul(m))
    }
}

/// A reduced representative together with the integer matrix that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduction {
    pub point: GroupPoint,
    pub gamma: Mat2,
    pub steps: usize,
}

/// Gauss reduction: translate so `|Re z| <= 1/2`, invert while `|z| < 1`.
pub fn reduce(g: &GroupPoint) -> Result<Reduction> {
    let mut m = g.0;
    let mut gamma = Mat2::IDENTITY;
    // a second translation in a row can only come from rounding noise in Re z
    let mut translated = false;
    for steps in 0..MAX_REDUCTION_STEPS {
        let z = GroupPoint(m).base_point();
        if !translated && z.re.abs() > 0.5 + 1e-12 {
            translated = true;
            let n = z.re.round();
            let t = Mat2::upper(-n);
            m = t.mul(&m);
            gamma = t.mul(&gamma);
            continue;
        }
        if z.norm_sq() < 1.0 - 1e-12 {
            let s = Mat2::new(0.0, -1.0, 1.0, 0.0);
            m = s.mul(&m);
            gamma = s.mul(&gamma);
            translated = false;
            continue;
        }
        return Ok(Reduction { point: GroupPoint(m), gamma, steps });
    }
    Err(Error::NumericalFailure(format!(
        "reduction did not converge in {MAX_REDUCTION_STEPS} steps"
    )))
}

pub fn classical_height(g: &GroupPoint) -> Result<f64> {
    Ok(reduce(g)?.point.base_point().im)
}

/// The flow element `diag(r0^(1/2), r0^(-1/2))`.
pub fn flow_matrix(r0: f64) -> Mat2 {
    Mat2::diag(r0.sqrt())
}

/// One step of the flow: `g -> g diag(r0^(1/2), r0^(-1/2))`.
pub fn step(g: &GroupPoint, r0: f64) -> GroupPoint {
    let m = g.0.mul(&flow_matrix(r0));
    GroupPoint::normalized(m).unwrap_or(GroupPoint(m))
}

/// One flow step followed by reduction; the result represents the same
/// point of the quotient as [`step`] but stays well conditioned.
pub fn step_reduced(g: &GroupPoint, r0: f64) -> Result<GroupPoint> {
    Ok(reduce(&step(g, r0))?.point)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: GroupPoint,
    pub r0: f64,
    pub heights: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }
}

/// Heights of `T^j x` for `j < len`.
pub fn trajectory(start: &GroupPoint, r0: f64, len: usize) -> Result<Trajectory> {
    Ok(Trajectory { start: *start, r0, heights: trajectory_points(start, r0, len)?.1 })
}

/// Reduced representatives and heights of `T^j x` for `j < len`.
pub fn trajectory_points(start: &GroupPoint, r0: f64, len: usize) -> Result<(Vec<GroupPoint>, Vec<f64>)> {
    if !(r0 > 1.0) {
        return invalid(format!("r0 must be > 1, got {r0}"));
    }
    if len > MAX_STEPS {
        return invalid(format!("trajectory length {len} exceeds the cap {MAX_STEPS}"));
    }
    let mut pts = Vec::with_capacity(len);
    let mut hs = Vec::with_capacity(len);
    let mut g = reduce(start)?.point;
    for j in 0..len {
        if j > 0 {
            g = step_reduced(&g, r0)?;
        }
        hs.push(g.base_point().im);
        pts.push(g);
    }
    Ok((pts, hs))
}

/// Haar-distributed points: `z` in the standard fundamental domain with
/// density proportional to `1/y^2`, and a uniform frame angle.
pub fn sample_haar(count: usize, seed: u64) -> Vec<GroupPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_haar_with(&mut rng, count)
}

pub fn sample_haar_with<R: Rng>(rng: &mut R, count: usize) -> Vec<GroupPoint> {
    let y_min = 3f64.sqrt() / 2.0;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: f64 = rng.gen_range(-0.5..0.5);
        let u: f64 = 1.0 - rng.gen::<f64>();
        let y = y_min / u;
        if x * x + y * y < 1.0 {
            continue;
        }
        let theta = rng.gen_range(0.0..2.0 * PI);
        out.push(GroupPoint::from_frame(x, y, theta).expect("valid frame"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedGeodesic {
    /// Point on the axis; `Gamma point a_period = Gamma point` for the
    /// continuous flow `a_t = diag(e^(t/2), e^(-t/2))`.
    pub point: GroupPoint,
    pub period: f64,
    pub matrix: Mat2,
}

/// Closed geodesic of the hyperbolic matrix `R^a1 L^a2 R^a3 ...`.
pub fn closed_geodesic(word: &[u32]) -> Result<ClosedGeodesic> {
    if word.is_empty() {
        return invalid("closed_geodesic needs a nonempty word");
    }
    if word.iter().any(|&n| n == 0) {
        return invalid("closed_geodesic digits must be positive");
    }
    let mut m = Mat2::IDENTITY;
    for (k, &n) in word.iter().enumerate() {
        let n = n as f64;
        let f = if k % 2 == 0 { Mat2::upper(n) } else { Mat2::lower(n) };
        m = m.mul(&f);
    }
    let tr = m.trace();
    if tr <= 2.0 {
        return invalid(format!("word gives a non-hyperbolic matrix (trace {tr})"));
    }
    let disc = (tr * tr - 4.0).sqrt();
    let lam = (tr + disc) / 2.0;
    // eigenvectors of [[a,b],[c,d]]: (b, lam - a); c > 0 for these words
    let v1 = (m.b, lam - m.a);
    let v2 = (m.b, 1.0 / lam - m.a);
    let g = Mat2::new(v1.0, v2.0, v1.1, v2.1);
    let g = if g.det() < 0.0 { Mat2::new(v1.0, -v2.0, v1.1, -v2.1) } else { g };
    Ok(ClosedGeodesic { point: GroupPoint::normalized(g)?, period: 2.0 * lam.ln(), matrix: m })
}

impl ClosedGeodesic {
    /// `count` points equally spaced in time along the closed orbit.
    pub fn orbit_samples(&self, count: usize) -> Vec<GroupPoint> {
        (0..count)
            .map(|k| {
                let t = self.period * k as f64 / count as f64;
                let p = self.point.right_mul(&Mat2::diag((t / 2.0).exp())).expect("flow preserves det");
                reduce(&p).map(|r| r.point).unwrap_or(p)
            })
            .collect()
    }
}

/// Atom of an empirical measure. Diffuse atoms stand for a small piece of an
/// absolutely continuous measure (they have extent in the unstable
/// direction); singular atoms are point masses on an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: GroupPoint,
    pub weight: f64,
    pub diffuse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    atoms: Vec<Atom>,
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return invalid("empirical measure needs at least one atom");
        }
        if atoms.iter().any(|a| !(a.weight > 0.0)) {
            return invalid("atom weights must be positive");
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        let tol = (4.0 * atoms.len() as f64 * f64::EPSILON).max(1e-12);
        if (total - 1.0).abs() > tol {
            return invalid(format!("atom weights sum to {total}, expected 1"));
        }
        Ok(Self { atoms })
    }

    pub fn uniform(points: &[GroupPoint], diffuse: bool) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        Self::new(points.iter().map(|&point| Atom { point, weight: w, diffuse }).collect())
    }

    pub fn haar(count: usize, seed: u64) -> Result<Self> {
        Self::uniform(&sample_haar(count, seed), true)
    }

    pub fn periodic(geo: &ClosedGeodesic, count: usize) -> Result<Self> {
        Self::uniform(&geo.orbit_samples(count), false)
    }

    /// `lambda * a + (1 - lambda) * b`.
    pub fn mixture(lambda: f64, a: &Self, b: &Self) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return invalid(format!("mixture weight must lie in [0,1], got {lambda}"));
        }
        let mut atoms = Vec::new();
        for (w, m) in [(lambda, a), (1.0 - lambda, b)] {
            if w > 0.0 {
                atoms.extend(m.atoms.iter().map(|x| Atom { weight: x.weight * w, ..*x }));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        for x in &mut atoms {
            x.weight /= total;
        }
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Mass of the atoms satisfying `keep` and the normalized restriction
    /// to them (`None` if that mass is zero).
    pub fn restrict(&self, keep: impl Fn(&Atom) -> bool) -> (f64, Option<Self>) {
        let kept: Vec<Atom> = self.atoms.iter().filter(|a| keep(a)).copied().collect();
        let mass: f64 = kept.iter().map(|a| a.weight).sum();
        if kept.is_empty() {
            return (0.0, None);
        }
        let atoms = kept.into_iter().map(|a| Atom { weight: a.weight / mass, ..a }).collect();
        (mass, Some(Self { atoms }))
    }

    /// Integral of `f` against the measure.
    pub fn integrate(&self, f: impl Fn(&GroupPoint) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.weight * f(&a.point)).sum()
    }
}

/// Excursions of a trajectory above `levels.s`, with the enclosing
/// excursions above `levels.s3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionReport {
    pub pattern: ExcursionPattern,
    pub enclosing: Vec<(usize, usize)>,
}

impl ExcursionReport {
    /// Excursion index for each step, if the step lies in an excursion above `s`.
    pub fn labels(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.pattern.len];
        for (i, &(k, e)) in self.pattern.intervals.iter().enumerate() {
            for slot in &mut out[k..e] {
                *slot = Some(i);
            }
        }
        out
    }
}

pub fn detect_excursions(traj: &Trajectory, levels: &HeightLevels) -> ExcursionReport {
    excursions_of(&traj.heights, levels)
}

pub fn excursions_of(heights: &[f64], levels: &HeightLevels) -> ExcursionReport {
    let runs = |thr: f64| -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = None;
        for (j, &h) in heights.iter().enumerate() {
            match (h > thr, start) {
                (true, None) => start = Some(j),
                (false, Some(k)) => {
                    out.push((k, j));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(k) = start {
            out.push((k, heights.len()));
        }
        out
    };
    let high = runs(levels.s);
    let mid = runs(levels.s3);
    let enclosing = high
        .iter()
        .map(|&(k, _)| *mid.iter().find(|&&(a, b)| a <= k && k < b).expect("above s implies above s3"))
        .collect();
    ExcursionReport {
        pattern: ExcursionPattern { len: heights.len(), intervals: high },
        enclosing,
    }
}

/// `h = l(low) diag(diag) u(up)`, defined when the top-left entry is nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ldu {
    pub low: f64,
    pub diag: f64,
    pub up: f64,
}

/// Decomposes `h` or `-h` (whichever has positive top-left entry).
pub fn ldu(h: &Mat2) -> Option<Ldu> {
    let h = if h.a < 0.0 { h.neg() } else { *h };
    if !(h.a > 0.0) {
        return None;
    }
    Some(Ldu { low: h.c / h.a, diag: h.a, up: h.b / h.a })
}

/// Group-level box `|low| <= r_low`, `|log diag| <= r`, `|up| <= r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupBox {
    pub r_low: f64,
    pub r: f64,
}

impl GroupBox {
    pub fn contains(&self, h: &Mat2) -> bool {
        match ldu(h) {
            Some(p) => p.low.abs() <= self.r_low && p.diag.ln().abs() <= self.r && p.up.abs() <= self.r,
            None => false,
        }
    }
}

/// Sup-norm size of `h` in `Ldu` coordinates (infinite if undefined).
pub fn box_size(h: &Mat2) -> f64 {
    match ldu(h) {
        Some(p) => p.low.abs().max(p.diag.ln().abs()).max(p.up.abs()),
        None => f64::INFINITY,
    }
}

/// Short words in `S`, `T`, `T^-1`: the integer matrices needed to compare
/// reduced representatives of nearby points.
pub fn neighbour_words(max_len: usize) -> Vec<Mat2> {
    let gens = [
        Mat2::new(0.0, -1.0, 1.0, 0.0),
        Mat2::upper(1.0),
        Mat2::upper(-1.0),
    ];
    let mut out = vec![Mat2::IDENTITY];
    let mut frontier = vec![Mat2::IDENTITY];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for g in &gens {
                let m = g.mul(w);
                let key = |m: &Mat2| if m.c < 0.0 || (m.c == 0.0 && m.d < 0.0) { m.neg() } else { *m };
                let mk = key(&m);
                if !out.iter().any(|o| key(o) == mk) {
                    out.push(m);
                    next.push(m);
                }
            }
        }
        frontier = next;
    }
    out
}

/// Smallest box size of `x^-1 gamma y` over the given integer matrices.
pub fn quotient_offset(x: &GroupPoint, y: &GroupPoint, words: &[Mat2]) -> (f64, Mat2) {
    let xi = x.0.inv_unimodular();
    let mut best = (f64::INFINITY, Mat2::IDENTITY);
    for w in words {
        let h = xi.mul(&w.mul(&y.0));
        let s = box_size(&h);
        if s < best.0 {
            best = (s, h);
        }
    }
    best
}

/// Injectivity radius (in box size) of the region of height at most
/// `max_height`, estimated on a grid of reduced frames.
pub fn injectivity_radius(max_height: f64) -> f64 {
    let words = neighbour_words(4);
    let nontrivial: Vec<Mat2> = words.iter().copied().filter(|w| *w != Mat2::IDENTITY).collect();
    let mut best = f64::INFINITY;
    let y_min = 3f64.sqrt() / 2.0;
    let ny = 24;
    for iy in 0..=ny {
        let y = y_min * (max_height / y_min).powf(iy as f64 / ny as f64);
        for ix in 0..=8 {
            let x = -0.5 + ix as f64 / 8.0;
            if x * x + y * y < 1.0 {
                continue;
            }
            for it in 0..16 {
                let theta = PI * it as f64 / 16.0;
                let g = GroupPoint::from_frame(x, y, theta).expect("valid frame");
                let gi = g.0.inv_unimodular();
                for w in &nontrivial {
                    best = best.min(box_size(&gi.mul(&w.mul(&g.0))));
                }
            }
        }
    }
    best
}

/// Condition number proxy used to reject numerically meaningless inputs.
pub fn conditioning(g: &GroupPoint) -> f64 {
    g.0.max_abs().powi(2)
}
