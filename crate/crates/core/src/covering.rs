//! Excursion patterns and their census, L-boxes and covers, box-mass
//! counting, and the return-time partition.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::height::HeightLevels;
use crate::modular::{
    classical_height, neighbour_words, reduce, trajectory_points, GroupBox, GroupPoint, Mat2,
};

/// Sorted disjoint half-open intervals `[k, k + K)` inside `[0, len)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExcursionPattern {
    pub len: usize,
    pub intervals: Vec<(usize, usize)>,
}

impl ExcursionPattern {
    pub fn new(len: usize, intervals: Vec<(usize, usize)>) -> Result<Self> {
        let mut prev_end = None;
        for &(a, b) in &intervals {
            if a >= b || b > len {
                return invalid(format!("bad interval [{a}, {b}) in pattern of length {len}"));
            }
            if let Some(e) = prev_end {
                if a <= e {
                    return invalid("pattern intervals must be sorted, disjoint and non-adjacent");
                }
            }
            prev_end = Some(b);
        }
        Ok(Self { len, intervals })
    }

    /// Maximal runs of `true` in `mask`.
    pub fn from_mask(mask: &[bool]) -> Self {
        let mut intervals = Vec::new();
        let mut start = None;
        for (j, &m) in mask.iter().enumerate() {
            match (m, start) {
                (true, None) => start = Some(j),
                (false, Some(k)) => {
                    intervals.push((k, j));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(k) = start {
            intervals.push((k, mask.len()));
        }
        Self { len: mask.len(), intervals }
    }

    /// `|V|`, the number of steps inside the pattern.
    pub fn mass(&self) -> usize {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    /// Smallest gap `k_{n+1} - (k_n + K_n)` between consecutive intervals.
    pub fn min_gap(&self) -> Option<usize> {
        self.intervals.windows(2).map(|w| w[1].0 - w[0].1).min()
    }
}

/// `ceil(log(s/s3) / log r0)`, at least 1. A tolerance of 1e-9 absorbs
/// rounding when the ratio is an exact power of `r0`.
pub fn min_gap(levels: &HeightLevels, r0: f64) -> u32 {
    let x = (levels.s / levels.s3).ln() / r0.ln();
    ((x - 1e-9).ceil() as u32).max(1)
}

/// Gap between consecutive excursions implied by the transition bound,
/// `floor(2 log(s/s3) / log r0)`; equals `2 * min_gap` when the ratio is an
/// integer power of `r0`.
pub fn guaranteed_gap(levels: &HeightLevels, r0: f64) -> u32 {
    let x = (levels.s / levels.s3).ln() / r0.ln();
    ((2.0 * x + 1e-9).floor() as u32).max(1)
}

/// `4 log(2 log(s/s3) + 2) / log(s/s3)`.
pub fn growth_exponent(s_ratio: f64) -> f64 {
    let l = s_ratio.ln();
    4.0 * (2.0 * l + 2.0).ln() / l
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCensus {
    #[serde(rename = "L")]
    pub len: usize,
    pub j0: u32,
    pub count: u128,
    pub bound_window: f64,
    pub bound_total: f64,
    pub bound_exp: f64,
}

impl PatternCensus {
    pub fn within_bounds(&self) -> bool {
        let c = self.count as f64;
        c <= self.bound_window && c <= self.bound_total && c <= self.bound_exp
    }
}

/// Number of subsets of `[0, len)` whose maximal intervals are separated by
/// gaps of at least `gap`.
pub fn count_gap_patterns(len: usize, gap: usize) -> u128 {
    // free[n]: patterns on a block of n free positions
    let mut free = vec![0u128; len + 1];
    for n in 0..=len {
        let mut total = 1u128;
        for k in 0..n {
            for end in (k + 1)..=n {
                let rest = end + gap;
                total += if rest >= n { 1 } else { free[n - rest] };
            }
        }
        free[n] = total;
    }
    free[len]
}

/// Census of admissible excursion patterns of length `len` with the three
/// nested upper bounds.
pub fn count_patterns(len: usize, levels: &HeightLevels, r0: f64) -> Result<PatternCensus> {
    let ratio = levels.s / levels.s3;
    let lr = ratio.ln() / r0.ln();
    if (len as f64) < 2.0 * lr + 1.0 {
        return invalid(format!("L = {len} is below the hypothesis L >= 2 log(s/s3) + 1 = {}", 2.0 * lr + 1.0));
    }
    let j0 = min_gap(levels, r0);
    let gap = 2 * j0 as usize;
    let count = count_gap_patterns(len, gap);
    let w = 2 * j0 as usize - 1;
    let k_l = len.div_ceil(w) as i32;
    let per_window = 1.0 + (gap * (gap - 1) / 2) as f64;
    Ok(PatternCensus {
        len,
        j0,
        count,
        bound_window: per_window.powi(k_l),
        bound_total: (gap as f64).powi(2 * k_l),
        bound_exp: (growth_exponent(lr.exp()) * len as f64).exp(),
    })
}

/// Group-level L-box `x a^(L-1) D^U a^-(L-1) D^NAM` of radius `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub kappa: f64,
    pub depth: usize,
    pub r0: f64,
}

impl BoxSpec {
    pub fn new(kappa: f64, depth: usize, r0: f64) -> Result<Self> {
        if !(kappa > 0.0) || depth == 0 || !(r0 > 1.0) {
            return invalid(format!("bad box: kappa = {kappa}, L = {depth}, r0 = {r0}"));
        }
        Ok(Self { kappa, depth, r0 })
    }

    /// Half-width of the box in the unstable direction.
    pub fn unstable_radius(&self) -> f64 {
        self.kappa * self.r0.powi(-(self.depth as i32 - 1))
    }

    pub fn group_box(&self) -> GroupBox {
        GroupBox { r_low: self.unstable_radius(), r: self.kappa }
    }

    pub fn with_depth(&self, depth: usize) -> Self {
        Self { depth, ..*self }
    }
}

/// Whether `y` lies in the L-box centred at `x`, allowing `x` and `y` to be
/// different representatives of nearby points.
pub fn in_l_box(x: &GroupPoint, y: &GroupPoint, spec: &BoxSpec, words: &[Mat2]) -> bool {
    let b = spec.group_box();
    let xi = x.matrix().inv_unimodular();
    words.iter().any(|w| b.contains(&xi.mul(&w.mul(y.matrix()))))
}

/// Sequential greedy cover of a finite sample by L-boxes centred at sample
/// points. Returns the number of centres.
pub fn greedy_cover(sample: &[GroupPoint], spec: &BoxSpec) -> usize {
    let words = neighbour_words(3);
    let reduced: Vec<GroupPoint> = sample.iter().map(|g| reduce(g).map(|r| r.point).unwrap_or(*g)).collect();
    let mut centres: Vec<GroupPoint> = Vec::new();
    for p in &reduced {
        if !centres.iter().any(|c| in_l_box(c, p, spec, &words)) {
            centres.push(*p);
        }
    }
    centres.len()
}

/// Greedy cover that refines the depth-`L` cover inside each box of the
/// depth-`(L-1)` cover, so counts are monotone in `L` by construction.
pub fn nested_greedy_counts(sample: &[GroupPoint], spec: &BoxSpec, max_depth: usize) -> Vec<usize> {
    let words = neighbour_words(3);
    let reduced: Vec<GroupPoint> = sample.iter().map(|g| reduce(g).map(|r| r.point).unwrap_or(*g)).collect();
    let mut groups: Vec<Vec<usize>> = vec![(0..reduced.len()).collect()];
    let mut out = Vec::new();
    for depth in 1..=max_depth {
        let s = spec.with_depth(depth);
        let mut next = Vec::new();
        for g in &groups {
            let mut centres: Vec<(usize, Vec<usize>)> = Vec::new();
            for &i in g {
                match centres.iter_mut().find(|(c, _)| in_l_box(&reduced[*c], &reduced[i], &s, &words)) {
                    Some((_, members)) => members.push(i),
                    None => centres.push((i, vec![i])),
                }
            }
            next.extend(centres.into_iter().map(|(_, m)| m));
        }
        out.push(next.len());
        groups = next;
    }
    out
}

/// Height class: 0 below `s3`, 1 in `(s3, s]`, 2 above `s`.
pub fn height_class(h: f64, levels: &HeightLevels) -> u8 {
    if h > levels.s {
        2
    } else if h > levels.s3 {
        1
    } else {
        0
    }
}

/// Parameters of the fiber cover: the partition element of an atom is the set
/// of points on its unstable leaf with the same coarse itinerary
/// (cusp bands) that stay within `lambda_prime` of it, `lookahead` steps
/// ahead, whenever it is in the compact part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberParams {
    pub levels: HeightLevels,
    pub r0: f64,
    pub kappa: f64,
    pub lambda_prime: f64,
    pub lookahead: usize,
}

impl FiberParams {
    pub fn new(levels: HeightLevels, r0: f64, kappa: f64) -> Self {
        let ell = transition_steps(levels.s_prime, levels.s3, r0);
        Self { levels, r0, kappa, lambda_prime: 0.5 * kappa, lookahead: 2 * ell + 5 }
    }
}

/// Upper bound on the number of steps between height `s` and height `s3`
/// (either direction) in rank one with `p1 = 0`.
pub fn transition_steps(s: f64, s3: f64, r0: f64) -> usize {
    ((((1.0 + r0) * s / s3).ln() / r0.ln()).floor() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberCover {
    /// Extent of the partition element along the unstable leaf, below and
    /// above the atom.
    pub lower: f64,
    pub upper: f64,
    pub count: f64,
    pub pattern: ExcursionPattern,
    pub classes: Vec<u8>,
}

/// Covers the partition element of `atom` (restricted to its unstable leaf)
/// by L-boxes, greedily from one end of the leaf to the other.
pub fn fiber_cover(atom: &GroupPoint, spec: &BoxSpec, fp: &FiberParams) -> Result<FiberCover> {
    let len = spec.depth;
    let (pts, hs) = trajectory_points(atom, fp.r0, len)?;
    let classes: Vec<u8> = hs.iter().map(|&h| height_class(h, &fp.levels)).collect();
    let scale: Vec<f64> = (0..len).map(|j| fp.r0.powi(j as i32)).collect();
    let la = fp.r0.powi(fp.lookahead as i32);
    let matches = |v: f64| -> bool {
        for j in 0..len {
            let w = v * scale[j];
            if classes[j] == 0 && (w * la).abs() > fp.lambda_prime {
                return false;
            }
            let p = match GroupPoint::new(pts[j].matrix().mul(&Mat2::lower(w))) {
                Ok(p) => p,
                Err(_) => return false,
            };
            match classical_height(&p) {
                Ok(h) if height_class(h, &fp.levels) == classes[j] => {}
                _ => return false,
            }
        }
        true
    };
    let half = spec.unstable_radius();
    let extent = |sign: f64| -> f64 {
        let mut pass = 0.0;
        let mut v = half / 64.0;
        let mut fail = None;
        while v < 4.0 {
            if matches(sign * v) {
                pass = v;
                v *= 2.0;
            } else {
                fail = Some(v);
                break;
            }
        }
        let Some(mut hi) = fail else { return pass };
        let mut lo = pass;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if matches(sign * mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-6 * hi {
                break;
            }
        }
        lo
    };
    let (lower, upper) = (extent(-1.0), extent(1.0));
    let count = ((lower + upper) / (2.0 * half)).ceil().max(1.0);
    Ok(FiberCover { lower, upper, count, pattern: high_pattern(&classes), classes })
}

fn high_pattern(classes: &[u8]) -> ExcursionPattern {
    ExcursionPattern::from_mask(&classes.iter().map(|&c| c == 2).collect::<Vec<_>>())
}

/// Number of excursions above `s_prime`.
pub fn deep_excursions(heights: &[f64], s_prime: f64) -> usize {
    ExcursionPattern::from_mask(&heights.iter().map(|&h| h > s_prime).collect::<Vec<_>>()).intervals.len()
}

/// `c^m e^(h_m ell m) e^(h_m |V| / 2)`.
pub fn coverimp_bound(c: f64, m: usize, ell: usize, excursion_mass: usize, h_m: f64) -> f64 {
    c.powi(m as i32) * (h_m * (ell * m) as f64).exp() * (0.5 * h_m * excursion_mass as f64).exp()
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxMassCover {
    pub count: BigUint,
    pub bound: f64,
}

/// Number of lattice cubes of side `2 r e^-L` needed to cover the box with
/// half-widths `r e^-L` (p2 directions), `r e^(-L/2)` (p1 directions) and
/// `r` (dim_nam directions), against `2^dim G e^((p1/2 + dim_nam) L)`.
pub fn boxmass_cover_count(p1: usize, p2: usize, dim_nam: usize, len: usize) -> BoxMassCover {
    let l = len as f64;
    // cubes per axis: ceil(side / cube side)
    let per_x = BigUint::from((l / 2.0).exp().ceil() as u128);
    let per_nam = BigUint::from(l.exp().ceil() as u128);
    let mut count = BigUint::from(1u32);
    for _ in 0..p1 {
        count *= &per_x;
    }
    for _ in 0..dim_nam {
        count *= &per_nam;
    }
    let dim_g = (p1 + p2 + dim_nam) as i32;
    let bound = 2f64.powi(dim_g) * ((p1 as f64 / 2.0 + dim_nam as f64) * l).exp();
    BoxMassCover { count, bound }
}

/// Atom label of the return-time partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId {
    pub base: (i64, i64, i64),
    pub ret: usize,
    pub sub: (i64, i64, i64),
}

/// Partition of `Q = {height <= s_q}` into base cells, return-time cells and
/// their refinements; points outside `Q` form one more atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnPartition {
    pub s_q: f64,
    pub r: f64,
    pub r0: f64,
    pub max_j: usize,
    /// Empirical mass of each return-time cell `(base, j)`.
    pub return_mass: BTreeMap<((i64, i64, i64), usize), f64>,
    /// Empirical mass of points that do not return within `max_j` steps.
    pub tail_mass: f64,
    pub outside_mass: f64,
    pub n_samples: usize,
    /// Number of distinct refined cells seen.
    pub n_atoms: usize,
    /// Samples whose base-cell offset exceeded `r / 16`.
    pub containment_violations: usize,
}

impl ReturnPartition {
    /// `sum_{i,j} j sigma(Q_ij)`.
    pub fn weighted_return_sum(&self) -> f64 {
        self.return_mass.iter().map(|((_, j), m)| *j as f64 * m).sum()
    }

    fn grid_step(&self) -> f64 {
        self.r / 128.0
    }

    /// Base cell of a reduced point and the centre frame of that cell.
    fn base_cell(&self, g: &GroupPoint) -> ((i64, i64, i64), GroupPoint) {
        let z = g.base_point();
        let e = self.grid_step();
        let ly = z.im.ln();
        let iy = (ly / e).floor() as i64;
        let y_lo = (iy as f64 * e).exp();
        let dx = e * y_lo;
        let ix = (z.re / dx).floor() as i64;
        let it = (g.angle() / e).floor() as i64;
        let centre = GroupPoint::from_frame(
            (ix as f64 + 0.5) * dx,
            ((iy as f64 + 0.5) * e).exp(),
            (it as f64 + 0.5) * e,
        )
        .expect("valid frame");
        ((ix, iy, it), centre)
    }

    /// Offset of `g` from the centre of its base cell, in `Ldu` coordinates
    /// with the logarithm of the diagonal part.
    fn offset(centre: &GroupPoint, g: &GroupPoint) -> Option<(f64, f64, f64)> {
        let h = centre.matrix().inv_unimodular().mul(g.matrix());
        crate::modular::ldu(&h).map(|p| (p.low, p.diag.ln(), p.up))
    }

    /// First return time to `Q` (at most `max_j`, `max_j + 1` meaning no return).
    fn return_time(&self, g: &GroupPoint) -> Result<usize> {
        let (_, hs) = trajectory_points(g, self.r0, self.max_j + 1)?;
        Ok(hs.iter().skip(1).position(|&h| h <= self.s_q).map(|p| p + 1).unwrap_or(self.max_j + 1))
    }

    /// Atom of a point, or `None` outside `Q`.
    pub fn atom_of(&self, g: &GroupPoint) -> Result<Option<CellId>> {
        let g = reduce(g)?.point;
        if g.base_point().im > self.s_q {
            return Ok(None);
        }
        let (base, centre) = self.base_cell(&g);
        let ret = self.return_time(&g)?;
        let side = self.r0.powi(-(ret as i32)) * self.r / 4.0;
        let (l, d, u) = Self::offset(&centre, &g).unwrap_or((f64::INFINITY, 0.0, 0.0));
        let q = |v: f64| (v / side).floor() as i64;
        Ok(Some(CellId { base, ret, sub: (q(l), q(d), q(u)) }))
    }

    /// Itinerary through the partition for `n` steps.
    pub fn itinerary(&self, g: &GroupPoint, n: usize) -> Result<Vec<Option<CellId>>> {
        let (pts, _) = trajectory_points(g, self.r0, n)?;
        pts.iter().map(|p| self.atom_of(p)).collect()
    }
}

/// Builds the return-time partition from a reference sample.
pub fn build_return_partition(
    sample: &[GroupPoint],
    s_q: f64,
    r: f64,
    max_j: usize,
    r0: f64,
) -> Result<ReturnPartition> {
    if sample.is_empty() {
        return invalid("return partition needs a nonempty sample");
    }
    if !(r > 0.0) {
        return invalid(format!("radius must be positive, got {r}"));
    }
    let inj = crate::modular::injectivity_radius(s_q);
    if r > inj {
        return invalid(format!("radius {r} exceeds the injectivity radius {inj} of the region"));
    }
    let mut part = ReturnPartition {
        s_q,
        r,
        r0,
        max_j,
        return_mass: BTreeMap::new(),
        tail_mass: 0.0,
        outside_mass: 0.0,
        n_samples: sample.len(),
        n_atoms: 0,
        containment_violations: 0,
    };
    let w = 1.0 / sample.len() as f64;
    let mut atoms: HashMap<CellId, usize> = HashMap::new();
    for g in sample {
        let g = reduce(g)?.point;
        if g.base_point().im > s_q {
            part.outside_mass += w;
            continue;
        }
        let (base, centre) = part.base_cell(&g);
        match ReturnPartition::offset(&centre, &g) {
            Some((l, d, u)) if l.abs().max(d.abs()).max(u.abs()) <= r / 16.0 => {}
            _ => part.containment_violations += 1,
        }
        let id = part.atom_of(&g)?.expect("inside Q");
        if id.ret > max_j {
            part.tail_mass += w;
        } else {
            *part.return_mass.entry((base, id.ret)).or_insert(0.0) += w;
        }
        *atoms.entry(id).or_insert(0) += 1;
    }
    part.n_atoms = atoms.len();
    Ok(part)
}

/// Whether `x h` stays in the group-level Bowen `n`-ball of radius `r`
/// around `x`: `a^-l h a^l` has box size at most `r` for `l < n`.
pub fn in_bowen_ball(h: &Mat2, n: usize, r: f64, r0: f64) -> bool {
    match crate::modular::ldu(h) {
        Some(p) => {
            let grow = r0.powi(n.saturating_sub(1) as i32);
            p.low.abs() * grow <= r && p.diag.ln().abs() <= r && p.up.abs() <= r
        }
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modular::sample_haar;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn brute(len: usize, gap: usize) -> u128 {
        (0u32..(1 << len))
            .filter(|bits| {
                let mask: Vec<bool> = (0..len).map(|j| bits >> j & 1 == 1).collect();
                ExcursionPattern::from_mask(&mask).min_gap().map_or(true, |g| g >= gap)
            })
            .count() as u128
    }

    fn levels(ratio: f64) -> HeightLevels {
        HeightLevels::with_ratio(1.0, E, 1.1, ratio).unwrap()
    }

    #[test]
    fn gap_examples() {
        assert_eq!(min_gap(&levels(E * E), E), 2);
        assert_eq!(min_gap(&levels(5.5f64.exp()), E), 6);
        assert_eq!(min_gap(&levels(1.0001), E), 1);
        assert_eq!(guaranteed_gap(&levels(E * E), E), 4);
        assert_eq!(guaranteed_gap(&levels(2.5f64.exp()), E), 5);
    }

    #[test]
    fn dp_matches_brute_force() {
        for gap in 1..=6 {
            for len in 0..=14 {
                assert_eq!(count_gap_patterns(len, gap), brute(len, gap), "len {len} gap {gap}");
            }
        }
        // gap 2 counts are the Fibonacci-like sequence a(n) = a(n-1) + a(n-3) + ...
        assert_eq!(count_gap_patterns(1, 2), 2);
        assert_eq!(count_gap_patterns(2, 2), 4);
    }

    #[test]
    fn window_count_is_exact() {
        for j0 in 1..6usize {
            let len = 2 * j0 - 1;
            let want = 1 + (2 * j0) * (2 * j0 - 1) / 2;
            assert_eq!(count_gap_patterns(len, 2 * j0), want as u128);
        }
    }

    #[test]
    fn census_bounds_and_hypothesis() {
        let lv = levels(E * E);
        assert!(count_patterns(4, &lv, E).is_err());
        for len in 5..=40 {
            let c = count_patterns(len, &lv, E).unwrap();
            assert!(c.within_bounds(), "{c:?}");
        }
    }

    #[test]
    fn pattern_validation() {
        assert!(ExcursionPattern::new(5, vec![(0, 2), (2, 3)]).is_err());
        assert!(ExcursionPattern::new(5, vec![(3, 6)]).is_err());
        let p = ExcursionPattern::new(10, vec![(0, 2), (5, 9)]).unwrap();
        assert_eq!(p.mass(), 6);
        assert_eq!(p.min_gap(), Some(3));
    }

    #[test]
    fn boxmass_examples() {
        let c = boxmass_cover_count(0, 1, 0, 3);
        assert_eq!(c.count, BigUint::from(1u32));
        assert_eq!(c.bound, 2.0);
        let c = boxmass_cover_count(2, 1, 2, 2);
        assert!(c.count.to_string().parse::<f64>().unwrap() <= c.bound);
        assert_eq!(boxmass_cover_count(2, 1, 2, 0).count, BigUint::from(1u32));
        for len in 0..60 {
            let c = boxmass_cover_count(2, 1, 2, len);
            assert!(c.count.to_string().parse::<f64>().unwrap() <= c.bound);
        }
    }

    #[test]
    fn single_box_cover() {
        let g = sample_haar(1, 2)[0];
        let near = g.right_mul(&Mat2::lower(1e-4)).unwrap();
        let spec = BoxSpec::new(0.01, 1, E).unwrap();
        assert_eq!(greedy_cover(&[g, near], &spec), 1);
        assert_eq!(greedy_cover(&[], &spec), 0);
    }

    #[test]
    fn nested_counts_are_monotone() {
        let base = sample_haar(40, 9);
        let mut pts = Vec::new();
        for g in &base {
            for k in 0..5 {
                pts.push(g.right_mul(&Mat2::lower(0.002 * k as f64)).unwrap());
            }
        }
        let spec = BoxSpec::new(0.01, 1, E).unwrap();
        let counts = nested_greedy_counts(&pts, &spec, 8);
        assert!(counts.windows(2).all(|w| w[1] >= w[0]), "{counts:?}");
        assert!(counts[0] >= 40 && *counts.last().unwrap() <= pts.len());
    }

    #[test]
    fn straight_in_fiber_cover_grows_at_half_rate() {
        let lv = levels(E * E);
        let kappa = 0.5 * crate::modular::injectivity_radius(lv.s3);
        let fp = FiberParams::new(lv, E, kappa);
        let atom = GroupPoint::new(Mat2::diag((1.5 * lv.s).sqrt())).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for len in (10..=40).step_by(5) {
            let spec = BoxSpec::new(kappa, len, E).unwrap();
            let fc = fiber_cover(&atom, &spec, &fp).unwrap();
            assert_eq!(fc.pattern.intervals, vec![(0, len)]);
            // oracle: height 1.5 s e^j / (1 + v^2 e^2j) > s up to step len - 1
            let top = E.powi(len as i32 - 1);
            let edge = (1.5 * top - 1.0).sqrt() / top;
            assert!((fc.upper / edge - 1.0).abs() < 1e-5 && (fc.lower / edge - 1.0).abs() < 1e-5, "{len} {} {} {edge}", fc.lower, fc.upper);
            xs.push(len as f64);
            ys.push(fc.count.ln());
        }
        let slope = ls_slope(&xs, &ys);
        assert!((slope - 0.5).abs() < 0.01, "slope {slope}");
    }

    #[test]
    fn compact_atom_cover_is_bounded() {
        let lv = levels(E * E);
        let kappa = 0.5 * crate::modular::injectivity_radius(lv.s3);
        let fp = FiberParams::new(lv, E, kappa);
        let atom = GroupPoint::from_frame(0.1, 1.2, 0.3).unwrap();
        let spec = BoxSpec::new(kappa, 8, E).unwrap();
        let fc = fiber_cover(&atom, &spec, &fp).unwrap();
        assert!(fc.pattern.intervals.is_empty());
        assert_eq!(fc.count, 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn recentering_is_stable(seed in 0u64..1000, a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64) {
            let x = sample_haar(1, seed)[0];
            let spec = BoxSpec::new(0.02, 4, E).unwrap();
            let half = BoxSpec::new(0.01, 4, E).unwrap();
            let h = Mat2::lower(a * half.unstable_radius()).mul(&Mat2::diag((0.5 * b * half.kappa).exp())).mul(&Mat2::upper(c * half.kappa));
            let y = x.right_mul(&h).unwrap();
            let words = neighbour_words(3);
            prop_assert!(in_l_box(&x, &y, &half, &words));
            prop_assert!(in_l_box(&y, &x, &spec, &words));
        }

        #[test]
        fn greedy_monotone_on_nested_boxes(seed in 0u64..200) {
            let base = sample_haar(12, seed);
            let pts: Vec<GroupPoint> = base.iter()
                .flat_map(|g| (0..4).map(move |k| g.right_mul(&Mat2::lower(0.003 * k as f64)).unwrap()))
                .collect();
            let spec = BoxSpec::new(0.02, 1, E).unwrap();
            let counts: Vec<usize> = (1..8).map(|l| greedy_cover(&pts, &spec.with_depth(l))).collect();
            prop_assert!(counts.windows(2).all(|w| w[1] >= w[0]), "{:?}", counts);
        }
    }
}
