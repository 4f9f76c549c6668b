//! Segments of one-dimensional unstable leaves and traces of ambient sets on them.
//!
//! A segment stores its construction parameters and how many base-map steps
//! it has been pushed forward. Its lifted point at parameter `t` is
//! `base + t * g(steps) * direction`, where `g` is the growth factor of the
//! unstable eigenvalue. Keeping `steps` as an integer means that two routes to
//! the same iterate produce bit-identical floats.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{Growth, PartiallyHyperbolic};
use crate::torus::TorusPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafSegment {
    base: TorusPoint,
    direction: Vec<f64>,
    t_lo: f64,
    t_hi: f64,
    /// Dynamics steps applied since construction.
    level: i64,
    /// Base-map steps applied since construction.
    steps: u64,
    growth: Growth,
}

impl LeafSegment {
    /// A static segment along an arbitrary direction; `t_lo == t_hi` is a point.
    pub fn new(base: TorusPoint, direction: Vec<f64>, t_lo: f64, t_hi: f64) -> Result<Self> {
        if direction.len() != base.dim() {
            return Err(Error::InvalidParameter(format!(
                "direction has {} components, point has {}",
                direction.len(),
                base.dim()
            )));
        }
        if !(t_lo.is_finite() && t_hi.is_finite()) || t_lo > t_hi {
            return Err(Error::InvalidParameter(format!("bad parameter range [{t_lo}, {t_hi}]")));
        }
        let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter("direction must be a nonzero vector".into()));
        }
        Ok(Self {
            base,
            direction: direction.iter().map(|x| x / norm).collect(),
            t_lo,
            t_hi,
            level: 0,
            steps: 0,
            growth: Growth::STATIC,
        })
    }

    /// Unstable-leaf segment `[t_lo, t_hi]` through `base`.
    pub fn on_leaf(system: &PartiallyHyperbolic, base: TorusPoint, t_lo: f64, t_hi: f64) -> Result<Self> {
        if base.dim() != system.dim() {
            return Err(Error::InvalidParameter("point dimension does not match the system".into()));
        }
        let mut s = Self::new(base, system.unstable_direction().to_vec(), t_lo, t_hi)?;
        // already unit length; keep the exact bits
        s.direction = system.unstable_direction().to_vec();
        s.growth = system.growth();
        Ok(s)
    }

    pub fn base(&self) -> &TorusPoint {
        &self.base
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    /// Construction-time parameter range.
    pub fn params(&self) -> (f64, f64) {
        (self.t_lo, self.t_hi)
    }

    pub fn is_point(&self) -> bool {
        self.t_lo == self.t_hi
    }

    /// Signed scale from construction parameters to the current arclength.
    pub fn scale(&self) -> f64 {
        self.growth.factor(self.steps)
    }

    pub fn log_length(&self) -> f64 {
        (self.t_hi - self.t_lo).ln() + self.steps as f64 * self.growth.log_rate
    }

    pub fn length(&self) -> f64 {
        (self.t_hi - self.t_lo) * self.scale().abs()
    }

    /// Current arclength interval, with 0 at the base point.
    pub fn arclength_range(&self) -> (f64, f64) {
        let s = self.scale();
        let (a, b) = (self.t_lo * s, self.t_hi * s);
        (a.min(b), a.max(b))
    }

    /// Lifted velocity `d point / d t` at the current step.
    pub fn velocity(&self) -> Vec<f64> {
        let s = self.scale();
        self.direction.iter().map(|v| v * s).collect()
    }

    /// Point at construction parameter `t`, reduced mod 1.
    pub fn point_at(&self, t: f64) -> Vec<f64> {
        let b = self.base.to_f64();
        b.iter()
            .zip(self.velocity())
            .map(|(x, v)| (x + t * v).rem_euclid(1.0))
            .collect()
    }

    /// Same leaf and step count, new parameter range.
    pub fn sub(&self, t_lo: f64, t_hi: f64) -> Self {
        debug_assert!(t_lo <= t_hi);
        Self {
            t_lo,
            t_hi,
            ..self.clone()
        }
    }

    /// Whether `other` lies on the same parametrized line.
    pub fn same_carrier(&self, other: &Self) -> bool {
        self.base == other.base
            && self.steps == other.steps
            && self.direction == other.direction
            && self.growth == other.growth
    }
}

/// `F^u(x, delta)` as the closed segment `[-delta, delta]`.
pub fn leaf_ball(system: &PartiallyHyperbolic, x: &TorusPoint, delta: f64) -> Result<LeafSegment> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("leaf radius must be positive, got {delta}")));
    }
    LeafSegment::on_leaf(system, x.clone(), -delta, delta)
}

/// `f^n(S)`. For a segment not built on the unstable leaf of `system` the
/// growth recorded at construction still applies.
pub fn iterate_segment(system: &PartiallyHyperbolic, s: &LeafSegment, n: u32) -> LeafSegment {
    let p = system.power_exponent() as u64;
    LeafSegment {
        base: system.apply(&s.base, n as i64),
        level: s.level + n as i64,
        steps: s.steps + n as u64 * p,
        ..s.clone()
    }
}

/// Closed parameter interval on a carrier; `lo == hi` marks a single point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn point(t: f64) -> Self {
        Self { lo: t, hi: t }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Sorts and merges overlapping intervals.
pub fn normalize(intervals: &mut Vec<Interval>) {
    intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
    let mut out: Vec<Interval> = Vec::with_capacity(intervals.len());
    for iv in intervals.drain(..) {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    *intervals = out;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetKind {
    Segments,
    Points,
    Indicator,
    Mixed,
    Empty,
}

/// Part of a leaf subset living on one carrier segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafPart {
    pub carrier: LeafSegment,
    /// Carrier parameters; sorted and pairwise disjoint.
    pub intervals: Vec<Interval>,
}

impl LeafPart {
    pub fn new(carrier: LeafSegment, mut intervals: Vec<Interval>) -> Self {
        normalize(&mut intervals);
        Self { carrier, intervals }
    }

    pub fn whole(carrier: LeafSegment) -> Self {
        let (lo, hi) = carrier.params();
        Self {
            carrier,
            intervals: vec![Interval::new(lo, hi)],
        }
    }

    pub fn segment(&self, iv: &Interval) -> LeafSegment {
        self.carrier.sub(iv.lo, iv.hi)
    }
}

/// `Y` intersected with a piece of leaf.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LeafSubset {
    pub parts: Vec<LeafPart>,
    /// Sampling step used to trace an indicator, in carrier parameter units.
    pub resolution: Option<f64>,
}

impl LeafSubset {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_segment(s: LeafSegment) -> Self {
        Self {
            parts: vec![LeafPart::whole(s)],
            resolution: None,
        }
    }

    /// Points on the carrier at the given parameters.
    pub fn from_points(carrier: LeafSegment, params: &[f64]) -> Self {
        Self {
            parts: vec![LeafPart::new(
                carrier,
                params.iter().map(|&t| Interval::point(t)).collect(),
            )],
            resolution: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.parts.iter().all(|p| p.intervals.is_empty())
    }

    pub fn kind(&self) -> SubsetKind {
        if self.is_empty() {
            return SubsetKind::Empty;
        }
        if self.resolution.is_some() {
            return SubsetKind::Indicator;
        }
        let ivs = || self.parts.iter().flat_map(|p| &p.intervals);
        if ivs().all(Interval::is_point) {
            SubsetKind::Points
        } else if ivs().all(|iv| !iv.is_point()) {
            SubsetKind::Segments
        } else {
            SubsetKind::Mixed
        }
    }

    /// Total arclength.
    pub fn measure(&self) -> f64 {
        self.parts
            .iter()
            .map(|p| {
                let s = p.carrier.scale().abs();
                p.intervals.iter().map(|iv| iv.len() * s).sum::<f64>()
            })
            .sum()
    }

    pub fn point_count(&self) -> usize {
        self.parts
            .iter()
            .map(|p| p.intervals.iter().filter(|iv| iv.is_point()).count())
            .sum()
    }

    /// Union; parts on a common carrier are merged.
    pub fn union(&self, other: &Self) -> Self {
        let mut parts = self.parts.clone();
        for p in &other.parts {
            match parts.iter_mut().find(|q| q.carrier.same_carrier(&p.carrier)) {
                Some(q) => {
                    q.intervals.extend(p.intervals.iter().copied());
                    normalize(&mut q.intervals);
                }
                None => parts.push(p.clone()),
            }
        }
        let resolution = match (self.resolution, other.resolution) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Self { parts, resolution }
    }

    /// `f^n` of the subset.
    pub fn image(&self, system: &PartiallyHyperbolic, n: u32) -> Self {
        Self {
            parts: self
                .parts
                .iter()
                .map(|p| LeafPart {
                    carrier: iterate_segment(system, &p.carrier, n),
                    intervals: p.intervals.clone(),
                })
                .collect(),
            resolution: self.resolution,
        }
    }
}

/// Ambient subsets of the torus that can be traced on leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AmbientSet {
    Torus,
    /// Open ball in the flat torus metric.
    Ball { center: TorusPoint, radius: f64 },
    Points { points: Vec<TorusPoint> },
    /// The periodic orbit of a rational point.
    Orbit { point: TorusPoint },
    Union { sets: Vec<AmbientSet> },
}

/// Longest orbit expanded by [`AmbientSet::resolve_orbits`].
pub const MAX_PERIOD: u64 = 1 << 20;

/// Flat-torus distance between two points given in `[0,1)^d`.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(1.0);
            d.min(1.0 - d).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Every rational point is periodic under a toral automorphism.
pub fn periodic_orbit(system: &PartiallyHyperbolic, x: &TorusPoint) -> Result<Vec<TorusPoint>> {
    let mut orbit = vec![x.clone()];
    let mut y = system.apply(x, 1);
    while &y != x {
        if orbit.len() as u64 >= MAX_PERIOD {
            return Err(Error::PeriodTooLong(MAX_PERIOD));
        }
        orbit.push(y.clone());
        y = system.apply(&y, 1);
    }
    Ok(orbit)
}

impl AmbientSet {
    /// Replaces orbit descriptions by their point lists.
    pub fn resolve_orbits(&self, system: &PartiallyHyperbolic) -> Result<AmbientSet> {
        Ok(match self {
            AmbientSet::Orbit { point } => AmbientSet::Points {
                points: periodic_orbit(system, point)?,
            },
            AmbientSet::Union { sets } => AmbientSet::Union {
                sets: sets
                    .iter()
                    .map(|s| s.resolve_orbits(system))
                    .collect::<Result<_>>()?,
            },
            other => other.clone(),
        })
    }

    pub fn contains_f64(&self, p: &[f64]) -> bool {
        match self {
            AmbientSet::Torus => true,
            AmbientSet::Ball { center, radius } => torus_distance(&center.to_f64(), p) < *radius,
            AmbientSet::Points { .. } | AmbientSet::Orbit { .. } => false,
            AmbientSet::Union { sets } => sets.iter().any(|s| s.contains_f64(p)),
        }
    }

    pub fn is_countable(&self) -> bool {
        match self {
            AmbientSet::Torus | AmbientSet::Ball { .. } => false,
            AmbientSet::Points { .. } | AmbientSet::Orbit { .. } => true,
            AmbientSet::Union { sets } => sets.iter().all(AmbientSet::is_countable),
        }
    }

    /// Points worth using as leaf-ball centers: ball centers and the points
    /// of finite sets.
    pub fn anchors(&self) -> Vec<TorusPoint> {
        match self {
            AmbientSet::Torus => Vec::new(),
            AmbientSet::Ball { center, .. } => vec![center.clone()],
            AmbientSet::Points { points } => points.clone(),
            AmbientSet::Orbit { point } => vec![point.clone()],
            AmbientSet::Union { sets } => {
                // round-robin so every component contributes early anchors
                let lists: Vec<Vec<TorusPoint>> = sets.iter().map(AmbientSet::anchors).collect();
                let longest = lists.iter().map(Vec::len).max().unwrap_or(0);
                (0..longest)
                    .flat_map(|i| lists.iter().filter_map(move |l| l.get(i).cloned()))
                    .collect()
            }
        }
    }

    /// A random point of the set, drawn by rejection for balls.
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Option<TorusPoint> {
        match self {
            AmbientSet::Torus => Some(TorusPoint::random(dim, rng)),
            AmbientSet::Ball { .. } => (0..10_000)
                .map(|_| TorusPoint::random(dim, rng))
                .find(|p| self.contains_f64(&p.to_f64())),
            AmbientSet::Points { points } if !points.is_empty() => {
                Some(points[rng.gen_range(0..points.len())].clone())
            }
            AmbientSet::Points { .. } => None,
            AmbientSet::Orbit { point } => Some(point.clone()),
            AmbientSet::Union { sets } if !sets.is_empty() => {
                sets[rng.gen_range(0..sets.len())].sample(dim, rng)
            }
            AmbientSet::Union { .. } => None,
        }
    }
}

/// `Y ∩ S` as a leaf subset.
///
/// Balls are traced by sampling the indicator every `resolution` (arclength)
/// and refining each sign change by bisection to `resolution / 100`.
/// For finite sets the test is exact: the unstable eigenvalue of an integer
/// unimodular matrix is irrational, so its eigenline through a rational point
/// meets no other rational point and only `base` itself can lie on `S`.
pub fn trace_subset(
    system: &PartiallyHyperbolic,
    y: &AmbientSet,
    s: &LeafSegment,
    resolution: f64,
) -> Result<LeafSubset> {
    if !(resolution > 0.0) {
        return Err(Error::InvalidParameter(format!("resolution must be positive, got {resolution}")));
    }
    let y = y.resolve_orbits(system)?;
    Ok(trace_resolved(&y, s, resolution))
}

fn trace_resolved(y: &AmbientSet, s: &LeafSegment, resolution: f64) -> LeafSubset {
    let (lo, hi) = s.params();
    match y {
        AmbientSet::Torus => LeafSubset::from_segment(s.clone()),
        AmbientSet::Points { points } => {
            let t0 = 0.0;
            if lo <= t0 && t0 <= hi && points.contains(s.base()) {
                LeafSubset::from_points(s.clone(), &[t0])
            } else {
                LeafSubset::empty()
            }
        }
        AmbientSet::Orbit { .. } => unreachable!("orbits are resolved first"),
        AmbientSet::Ball { .. } => {
            // step in carrier parameters
            let step = resolution / s.scale().abs();
            let intervals = trace_indicator(|t| y.contains_f64(&s.point_at(t)), lo, hi, step);
            if intervals.is_empty() {
                return LeafSubset::empty();
            }
            LeafSubset {
                parts: vec![LeafPart::new(s.clone(), intervals)],
                resolution: Some(step),
            }
        }
        AmbientSet::Union { sets } => sets
            .iter()
            .map(|set| trace_resolved(set, s, resolution))
            .fold(LeafSubset::empty(), |acc, t| acc.union(&t)),
    }
}

/// Parameter intervals of `[lo, hi]` where `inside` holds.
pub fn trace_indicator<F: Fn(f64) -> bool>(inside: F, lo: f64, hi: f64, step: f64) -> Vec<Interval> {
    let samples = (((hi - lo) / step).ceil() as usize).max(1);
    let at = |i: usize| if i == samples { hi } else { lo + i as f64 * step };
    let refine = |mut a: f64, mut b: f64, a_in: bool| {
        // a and b straddle the boundary, `a_in` is the indicator at a
        while b - a > step / 100.0 {
            let mid = 0.5 * (a + b);
            if inside(mid) == a_in {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    };
    let mut out = Vec::new();
    let mut prev = inside(lo);
    let mut start = if prev { Some(lo) } else { None };
    for i in 1..=samples {
        let (a, b) = (at(i - 1), at(i));
        let cur = inside(b);
        if cur != prev {
            let edge = refine(a, b, prev);
            if cur {
                start = Some(edge);
            } else if let Some(s0) = start.take() {
                out.push(Interval::new(s0, edge));
            }
        }
        prev = cur;
    }
    if let Some(s0) = start {
        out.push(Interval::new(s0, hi));
    }
    out
}
