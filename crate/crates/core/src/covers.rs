//! Inflated grid covers, the orbit-thinness index and minimal covers of leaf
//! subsets by level-`n` segments.
//!
//! All checks reduce to one primitive. Along a lifted line `y(t) = p + t c`
//! the parameter `t` sits in a family of open windows; the *reach* from `t` is
//! the supremum of `t'` such that `y([t, t'])` fits in one window. A segment
//! `[a, b]` is thinner than the cover at some iterate iff the reach from `a`
//! exceeds `b` on every axis.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leaf::{Interval, LeafPart, LeafSegment, LeafSubset};
use crate::systems::PartiallyHyperbolic;

pub const DEFAULT_INFLATION: f64 = 1.125;
pub const DEFAULT_N_MAX: u32 = 60;

/// `mesh^d` open boxes of side `inflation / mesh` centered on the grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCover {
    mesh: u32,
    inflation: f64,
    dim: usize,
}

impl GridCover {
    pub fn new(mesh: u32, inflation: f64, dim: usize) -> Result<Self> {
        if mesh < 2 {
            return Err(Error::InvalidParameter(format!("mesh must be at least 2, got {mesh}")));
        }
        if !(inflation > 1.0 && inflation < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "inflation must lie in (1, 2), got {inflation}"
            )));
        }
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(Self { mesh, inflation, dim })
    }

    pub fn with_mesh(mesh: u32, dim: usize) -> Result<Self> {
        Self::new(mesh, DEFAULT_INFLATION, dim)
    }

    pub fn mesh(&self) -> u32 {
        self.mesh
    }

    pub fn inflation(&self) -> f64 {
        self.inflation
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Side length of every box.
    pub fn side(&self) -> f64 {
        self.inflation / self.mesh as f64
    }

    /// Open window `(lo, hi)` of box index `i` along one axis, in lifted coordinates.
    pub fn window(&self, i: i64) -> (f64, f64) {
        let m = self.mesh as f64;
        let h = self.inflation / 2.0;
        ((i as f64 + 0.5 - h) / m, (i as f64 + 0.5 + h) / m)
    }

    /// Reach along the line `p + t c` from `t`, and the largest `t` for which
    /// the reach stays the same.
    pub fn axis_reach(&self, p: f64, c: f64, t: f64) -> (f64, f64) {
        let m = self.mesh as f64;
        let h = self.inflation / 2.0;
        if c > 0.0 {
            let y = p + t * c;
            // last window whose left edge is below y
            let i = (y * m - 0.5 + h).ceil() - 1.0;
            let reach = ((i + 0.5 + h) / m - p) / c;
            let until = ((i + 1.5 - h) / m - p) / c;
            (reach, until)
        } else if c < 0.0 {
            let y = p + t * c;
            // first window whose right edge is above y
            let i = (y * m - 0.5 - h).floor() + 1.0;
            let reach = ((i + 0.5 - h) / m - p) / c;
            let until = ((i - 0.5 + h) / m - p) / c;
            (reach, until)
        } else {
            (f64::INFINITY, f64::INFINITY)
        }
    }

    /// Reach of a whole line (minimum over axes).
    fn reach(&self, p: &[f64], c: &[f64], t: f64) -> f64 {
        p.iter()
            .zip(c)
            .map(|(&pj, &cj)| self.axis_reach(pj, cj, t).0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Lifted base point and velocity of the first iterates of a carrier.
#[derive(Debug, Clone)]
pub struct OrbitTable {
    rows: Vec<(Vec<f64>, Vec<f64>)>,
}

impl OrbitTable {
    /// Rows for dynamics iterates `0..len`.
    pub fn new(system: &PartiallyHyperbolic, carrier: &LeafSegment, len: u32) -> Self {
        let power = system.power_exponent() as u64;
        let growth = carrier.growth();
        let mut x = carrier.base().clone();
        let mut rows = Vec::with_capacity(len as usize);
        for k in 0..len as u64 {
            if k > 0 {
                x = system.apply(&x, 1);
            }
            let g = growth.factor(carrier.steps() + k * power);
            let c = carrier.direction().iter().map(|v| v * g).collect();
            rows.push((x.to_f64(), c));
        }
        Self { rows }
    }

    pub fn len(&self) -> u32 {
        self.rows.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn thinner_at(&self, cover: &GridCover, k: usize, lo: f64, hi: f64) -> bool {
        let (p, c) = &self.rows[k];
        cover.reach(p, c, lo) > hi
    }

    /// First iterate in `from..len` at which `[lo, hi]` is not thinner; `len` if none.
    fn first_failure(&self, cover: &GridCover, from: u32, lo: f64, hi: f64) -> u32 {
        (from..self.len())
            .find(|&k| !self.thinner_at(cover, k as usize, lo, hi))
            .unwrap_or(self.len())
    }
}

/// Whether some box of the cover contains the segment.
pub fn thinner_than(s: &LeafSegment, cover: &GridCover) -> bool {
    let (lo, hi) = s.params();
    cover.reach(&s.base().to_f64(), &s.velocity(), lo) > hi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitThinness {
    pub n: u32,
    /// The segment was still thinner at the last checked iterate.
    pub capped: bool,
}

/// Largest `n <= n_max` such that `f^k(S)` is thinner than the cover for all `k < n`.
pub fn n_orbit_thinner(
    system: &PartiallyHyperbolic,
    s: &LeafSegment,
    cover: &GridCover,
    n_max: u32,
) -> OrbitThinness {
    let table = OrbitTable::new(system, s, n_max);
    let (lo, hi) = s.params();
    let n = table.first_failure(cover, 0, lo, hi);
    OrbitThinness {
        n,
        capped: n == n_max,
    }
}

/// Minimal cover of a leaf subset by segments of orbit-thinness at least `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowenCount {
    pub n: u32,
    pub count: u64,
    pub mesh: u32,
}

/// Pieces of a level-`n` cover of the segment parts, keyed by their own
/// orbit-thinness, plus the number of isolated points.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PieceHistogram {
    pub level: u32,
    pub pieces: BTreeMap<u32, u64>,
    pub points: u64,
}

impl PieceHistogram {
    pub fn segment_pieces(&self) -> u64 {
        self.pieces.values().sum()
    }

    pub fn absorb(&mut self, other: &PieceHistogram) {
        for (&n, &k) in &other.pieces {
            *self.pieces.entry(n).or_default() += k;
        }
        self.points += other.points;
    }

    /// `sum exp(-lambda * n_i)`; points have unbounded thinness and weigh
    /// nothing for `lambda > 0`.
    pub fn weight(&self, lambda: f64) -> f64 {
        let segs: f64 = self
            .pieces
            .iter()
            .map(|(&n, &k)| k as f64 * (-lambda * n as f64).exp())
            .sum();
        let pts = if lambda == 0.0 { self.points as f64 } else { 0.0 };
        segs + pts
    }
}

struct Sweep<'a> {
    cover: &'a GridCover,
    table: &'a OrbitTable,
    n: u32,
    /// `(reach, valid_until)` per (iterate, axis).
    cache: Vec<(f64, f64)>,
}

impl<'a> Sweep<'a> {
    fn new(cover: &'a GridCover, table: &'a OrbitTable, n: u32) -> Self {
        let d = cover.dim();
        Self {
            cover,
            table,
            n,
            cache: vec![(f64::NEG_INFINITY, f64::NEG_INFINITY); n as usize * d],
        }
    }

    /// Supremum of `t'` with `n_{f,A}([t, t']) >= n`.
    fn reach(&mut self, t: f64) -> f64 {
        let d = self.cover.dim();
        let mut best = f64::INFINITY;
        for (idx, entry) in self.cache.iter_mut().enumerate() {
            if t > entry.1 {
                let (p, c) = &self.table.rows[idx / d];
                *entry = self.cover.axis_reach(p[idx % d], c[idx % d], t);
            }
            best = best.min(entry.0);
        }
        best
    }

    /// Orbit-thinness of the piece `[t, end]` found at this level.
    fn piece_level(&self, t: f64, end: f64) -> u32 {
        let mut k = self.n;
        while k < self.table.len() {
            let (p, c) = &self.table.rows[k as usize];
            if self.cover.reach(p, c, t) < end {
                break;
            }
            k += 1;
        }
        k
    }

    /// Greedy left-to-right cover of sorted disjoint intervals. Returns
    /// `None` once more than `cap` pieces are needed.
    fn run(&mut self, intervals: &[Interval], cap: u64, mut hist: Option<&mut BTreeMap<u32, u64>>) -> Option<u64> {
        let mut count = 0u64;
        let mut idx = 0;
        let mut t = match intervals.first() {
            Some(iv) => iv.lo,
            None => return Some(0),
        };
        loop {
            let e = self.reach(t);
            count += 1;
            if count > cap {
                return None;
            }
            // skip everything strictly below the reach
            while idx < intervals.len() && intervals[idx].hi < e {
                idx += 1;
            }
            if let Some(h) = hist.as_deref_mut() {
                let end = if idx < intervals.len() && intervals[idx].lo <= e {
                    e
                } else {
                    intervals[idx - 1].hi
                };
                *h.entry(self.piece_level(t, end)).or_default() += 1;
            }
            if idx == intervals.len() {
                return Some(count);
            }
            t = intervals[idx].lo.max(e);
        }
    }
}

/// Cover data of a leaf subset at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCover {
    pub count: BowenCount,
    /// All parts together.
    pub histogram: PieceHistogram,
    /// One histogram per connected component (maximal interval or point)
    /// of the subset.
    pub components: Vec<PieceHistogram>,
}

/// Precomputed orbit tables for every part of a subset.
pub struct SubsetCoverer<'a> {
    cover: GridCover,
    subset: &'a LeafSubset,
    tables: Vec<OrbitTable>,
}

impl<'a> SubsetCoverer<'a> {
    pub fn new(system: &PartiallyHyperbolic, subset: &'a LeafSubset, cover: GridCover, n_max: u32) -> Self {
        let tables = subset
            .parts
            .iter()
            .map(|p| OrbitTable::new(system, &p.carrier, n_max))
            .collect();
        Self { cover, subset, tables }
    }

    pub fn n_max(&self) -> u32 {
        self.tables.first().map_or(0, OrbitTable::len)
    }

    /// Minimal count at level `n` and the histogram of a cover in which
    /// isolated points use degenerate pieces. `None` past `cap` pieces.
    pub fn level(&self, n: u32, cap: u64) -> Option<LevelCover> {
        assert!(n >= 1 && n <= self.n_max(), "level {n} outside 1..={}", self.n_max());
        let mut count = 0u64;
        let mut histogram = PieceHistogram {
            level: n,
            ..Default::default()
        };
        let mut components = Vec::new();
        for (part, table) in self.subset.parts.iter().zip(&self.tables) {
            let fresh = || PieceHistogram {
                level: n,
                ..Default::default()
            };
            if let [only] = part.intervals.as_slice() {
                let mut own = fresh();
                if only.is_point() {
                    count += 1;
                    own.points = 1;
                } else {
                    let mut sweep = Sweep::new(&self.cover, table, n);
                    count += sweep.run(&part.intervals, cap.saturating_sub(count), Some(&mut own.pieces))?;
                }
                histogram.absorb(&own);
                components.push(own);
                continue;
            }
            // the count uses one sweep over the whole part, which may let a
            // piece bridge nearby components
            let mut sweep = Sweep::new(&self.cover, table, n);
            count += sweep.run(&part.intervals, cap.saturating_sub(count), None)?;
            for iv in &part.intervals {
                let mut own = fresh();
                if iv.is_point() {
                    own.points = 1;
                } else {
                    let mut sweep = Sweep::new(&self.cover, table, n);
                    sweep.run(std::slice::from_ref(iv), u64::MAX, Some(&mut own.pieces))?;
                }
                histogram.absorb(&own);
                components.push(own);
            }
        }
        Some(LevelCover {
            count: BowenCount {
                n,
                count,
                mesh: self.cover.mesh(),
            },
            histogram,
            components,
        })
    }

    /// Levels `1, 2, ...` up to `n_max`, stopping before the first level whose
    /// count would exceed `cap`.
    pub fn levels(&self, n_max: u32, cap: u64) -> Vec<LevelCover> {
        let mut out: Vec<LevelCover> = Vec::new();
        for n in 1..=n_max.min(self.n_max()) {
            if let [.., a, b] = out.as_slice() {
                let ratio = b.count.count as f64 / (a.count.count.max(1)) as f64;
                if b.count.count as f64 * ratio > cap as f64 {
                    break;
                }
            }
            match self.level(n, cap) {
                Some(l) => out.push(l),
                None => break,
            }
        }
        out
    }
}

/// Minimal number of level-`n` segments covering `X` (greedy sweep, exact for
/// interval covers of a line).
pub fn minimal_bowen_cover(
    system: &PartiallyHyperbolic,
    x: &LeafSubset,
    cover: &GridCover,
    n: u32,
) -> Result<BowenCount> {
    if x.is_empty() {
        return Err(Error::InvalidParameter("cannot cover an empty subset".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("level must be at least 1".into()));
    }
    let coverer = SubsetCoverer::new(system, x, *cover, n.max(1));
    coverer
        .level(n, u64::MAX)
        .map(|l| l.count)
        .ok_or_else(|| Error::Infeasible("count overflow".into()))
}

/// Pieces of the greedy cover of one part, as parameter intervals `[t, reach)`.
pub fn greedy_pieces(system: &PartiallyHyperbolic, part: &LeafPart, cover: &GridCover, n: u32) -> Vec<Interval> {
    let table = OrbitTable::new(system, &part.carrier, n);
    let mut sweep = Sweep::new(cover, &table, n);
    let mut out = Vec::new();
    let ivs = &part.intervals;
    let mut idx = 0;
    let Some(first) = ivs.first() else { return out };
    let mut t = first.lo;
    loop {
        let e = sweep.reach(t);
        out.push(Interval::new(t, e));
        while idx < ivs.len() && ivs[idx].hi < e {
            idx += 1;
        }
        if idx == ivs.len() {
            return out;
        }
        t = ivs[idx].lo.max(e);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leaf::{iterate_segment, leaf_ball};
    use crate::torus::TorusPoint;

    fn cat() -> PartiallyHyperbolic {
        PartiallyHyperbolic::cat2()
    }

    #[test]
    fn cover_validation() {
        assert!(GridCover::new(1, 1.125, 2).is_err());
        assert!(GridCover::new(8, 1.0, 2).is_err());
        assert!(GridCover::new(8, 2.0, 2).is_err());
        assert!(GridCover::new(8, 1.5, 4).is_err());
    }

    #[test]
    fn long_segments_are_not_thinner() {
        let a = GridCover::with_mesh(8, 2).unwrap();
        let x = TorusPoint::from_fractions(&[(1, 16), (1, 16)]).unwrap();
        let s = LeafSegment::new(x.clone(), vec![1.0, 0.0], 0.0, 2.0 * a.side()).unwrap();
        assert!(!thinner_than(&s, &a));
        let p = LeafSegment::new(x, vec![0.6, 0.8], 0.3, 0.3).unwrap();
        assert!(thinner_than(&p, &a));
    }

    #[test]
    fn short_axis_segment_in_a_cell() {
        let a = GridCover::with_mesh(8, 2).unwrap();
        // center of cell (3, 5)
        let c = TorusPoint::from_fractions(&[(7, 16), (11, 16)]).unwrap();
        let half = 0.2 * a.side();
        let s = LeafSegment::new(c, vec![0.0, 1.0], -half, half).unwrap();
        assert!(thinner_than(&s, &a));
    }

    #[test]
    fn wrapping_windows() {
        let a = GridCover::with_mesh(4, 2).unwrap();
        // the box at index 3 straddles 1 = 0 mod 1
        let x = TorusPoint::from_fractions(&[(99, 100), (1, 8)]).unwrap();
        let s = LeafSegment::new(x, vec![1.0, 0.0], 0.0, 0.02).unwrap();
        assert!(thinner_than(&s, &a));
    }

    #[test]
    fn not_thinner_gives_zero() {
        let a = GridCover::with_mesh(8, 2).unwrap();
        let s = leaf_ball(&cat(), &TorusPoint::origin(2), 0.4).unwrap();
        assert_eq!(n_orbit_thinner(&cat(), &s, &a, 60).n, 0);
    }

    #[test]
    fn points_are_capped() {
        let a = GridCover::with_mesh(8, 2).unwrap();
        let p = LeafSegment::on_leaf(&cat(), TorusPoint::origin(2), 0.0, 0.0).unwrap();
        let th = n_orbit_thinner(&cat(), &p, &a, 60);
        assert_eq!(th, OrbitThinness { n: 60, capped: true });
    }

    #[test]
    fn shift_identity_on_examples() {
        let a = GridCover::with_mesh(16, 2).unwrap();
        let x = TorusPoint::from_fractions(&[(3, 17), (5, 23)]).unwrap();
        let s = leaf_ball(&cat(), &x, 1e-4).unwrap();
        let n = n_orbit_thinner(&cat(), &s, &a, 60).n;
        assert!(n >= 2);
        let n1 = n_orbit_thinner(&cat(), &iterate_segment(&cat(), &s, 1), &a, 60).n;
        assert_eq!(n1, n - 1);
    }

    #[test]
    fn single_point_needs_one_piece() {
        let a = GridCover::with_mesh(8, 2).unwrap();
        let s = leaf_ball(&cat(), &TorusPoint::origin(2), 0.1).unwrap();
        let x = LeafSubset::from_points(s, &[0.0]);
        for n in [1, 5, 20, 60] {
            assert_eq!(minimal_bowen_cover(&cat(), &x, &a, n).unwrap().count, 1);
        }
    }

    #[test]
    fn counts_grow_monotonically() {
        let a = GridCover::with_mesh(8, 2).unwrap();
        let s = leaf_ball(&cat(), &TorusPoint::from_fractions(&[(1, 3), (1, 7)]).unwrap(), 0.1).unwrap();
        let x = LeafSubset::from_segment(s);
        let counts: Vec<u64> = SubsetCoverer::new(&cat(), &x, a, 60)
            .levels(14, 1_000_000)
            .iter()
            .map(|l| l.count.count)
            .collect();
        assert!(counts.len() >= 10);
        assert!(counts.windows(2).all(|w| w[1] >= w[0]), "{counts:?}");
    }

    #[test]
    fn greedy_pieces_are_bowen_segments() {
        let f = PartiallyHyperbolic::paper3(5).unwrap();
        let a = GridCover::with_mesh(8, 3).unwrap();
        let x = TorusPoint::from_fractions(&[(1, 3), (2, 9), (4, 11)]).unwrap();
        let part = LeafPart::whole(leaf_ball(&f, &x, 0.05).unwrap());
        let pieces = greedy_pieces(&f, &part, &a, 4);
        assert!(pieces.len() > 1);
        for w in pieces.windows(2) {
            assert_eq!(w[0].hi, w[1].lo);
        }
        for p in &pieces {
            // slightly shrunk pieces satisfy the level; slightly grown ones do not
            let len = p.hi - p.lo;
            let inner = part.carrier.sub(p.lo, p.hi - len * 1e-9);
            assert!(n_orbit_thinner(&f, &inner, &a, 60).n >= 4);
            let outer = part.carrier.sub(p.lo, p.hi + len * 1e-9);
            assert!(n_orbit_thinner(&f, &outer, &a, 60).n < 4);
        }
    }

    #[test]
    fn histogram_weights() {
        let h = PieceHistogram {
            level: 3,
            pieces: [(3, 2), (5, 1)].into_iter().collect(),
            points: 4,
        };
        assert_eq!(h.weight(0.0), 7.0);
        let w = h.weight(1.0);
        assert!((w - (2.0 * (-3f64).exp() + (-5f64).exp())).abs() < 1e-15);
    }
}
