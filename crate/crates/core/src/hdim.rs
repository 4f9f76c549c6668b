//! Hausdorff-type unstable entropy: cover weights, the approximate outer
//! measure over a range of scales and its critical exponent.
//!
//! At scale `N` the outer measure is approximated by the cheapest of the
//! minimal covers at levels `N+1..=N+gap`, each piece weighing
//! `exp(-lambda * n_i)` where `n_i` is its own orbit-thinness. Isolated points
//! are covered by degenerate pieces of unbounded thinness, so they weigh
//! nothing once `lambda > 0`.
//!
//! A value of `lambda` is *above* critical when the measure falls by at least
//! half across the scale window and *below* when it at least doubles. The two
//! band edges are found by bisection and the estimate is the band center.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covers::{n_orbit_thinner, GridCover, LevelCover, PieceHistogram};
use crate::error::{Error, Result};
use crate::leaf::{leaf_ball, trace_subset, AmbientSet, LeafSegment, LeafSubset};
use crate::params::{cover_levels, set_samples, torus_samples, EstimatorParams};
use crate::systems::PartiallyHyperbolic;
use crate::torus::TorusPoint;
use crate::utop::{mesh_warning, DeltaValue, Warning};

/// Bisection stops once the bracket is this narrow.
pub const BISECTION_WIDTH: f64 = 0.01;
/// Factor separating a decreasing or increasing trend from a flat one.
pub const TREND_FACTOR: f64 = 2.0;

/// `exp(-lambda * n_{f,A}(S))`.
pub fn weight(system: &PartiallyHyperbolic, s: &LeafSegment, cover: &GridCover, lambda: f64) -> f64 {
    let n = n_orbit_thinner(system, s, cover, crate::covers::DEFAULT_N_MAX).n;
    weight_of_level(n, lambda)
}

pub fn weight_of_level(n: u32, lambda: f64) -> f64 {
    if lambda == 0.0 {
        1.0
    } else {
        (-lambda * n as f64).exp()
    }
}

/// A cover of a leaf subset with the thinness of each element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedCover {
    /// Scale: every piece has thinness above it.
    pub scale: u32,
    /// Per connected component, the level whose minimal cover realized the value.
    pub levels: Vec<u32>,
    pub histogram: PieceHistogram,
}

impl WeightedCover {
    pub fn total_weight(&self, lambda: f64) -> f64 {
        self.histogram.weight(lambda)
    }
}

/// Cheapest cover with levels in `scale+1..=scale+gap`, the level chosen
/// separately for every connected component.
pub fn outer_measure_from_levels(levels: &[LevelCover], lambda: f64, scale: u32, gap: u32) -> Option<(f64, WeightedCover)> {
    let eligible: Vec<&LevelCover> = levels
        .iter()
        .filter(|l| l.count.n > scale && l.count.n <= scale + gap)
        .collect();
    let parts = eligible.first()?.components.len();
    let mut cover = WeightedCover {
        scale,
        levels: Vec::with_capacity(parts),
        histogram: PieceHistogram::default(),
    };
    let mut total = 0.0;
    for p in 0..parts {
        let (w, best) = eligible
            .iter()
            .map(|l| (l.components[p].weight(lambda), &l.components[p]))
            .min_by(|a, b| a.0.total_cmp(&b.0))?;
        total += w;
        cover.levels.push(best.level);
        cover.histogram.absorb(best);
    }
    cover.histogram.level = cover.levels.iter().copied().min().unwrap_or(scale + 1);
    Some((total, cover))
}

/// `m_{A,lambda}` approximated at scale `N`.
pub fn outer_measure_approx(
    system: &PartiallyHyperbolic,
    x: &LeafSubset,
    cover: &GridCover,
    lambda: f64,
    scale: u32,
    gap: u32,
) -> Result<(f64, WeightedCover)> {
    if lambda < 0.0 {
        return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {lambda}")));
    }
    if scale == 0 || gap == 0 {
        return Err(Error::InvalidParameter("scale and gap must be positive".into()));
    }
    let n_max = scale + gap;
    let coverer = crate::covers::SubsetCoverer::new(system, x, *cover, n_max);
    let levels: Vec<LevelCover> = (scale + 1..=n_max)
        .map(|n| coverer.level(n, u64::MAX).expect("uncapped"))
        .collect();
    Ok(outer_measure_from_levels(&levels, lambda, scale, gap).expect("levels are nonempty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Above,
    Below,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub scale: u32,
    pub lambda: f64,
    pub inf_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponentResult {
    pub lambda_star: f64,
    /// Largest lambda seen increasing and smallest seen decreasing.
    pub bracket: (f64, f64),
    /// Inclusive range of scales `N`.
    pub scales: (u32, u32),
    pub gap: u32,
    pub measure_trend: Vec<TrendRow>,
    pub mesh: u32,
}

impl CriticalExponentResult {
    /// `N,lambda,inf_weight` with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["N", "lambda", "inf_weight"])?;
        for r in &self.measure_trend {
            w.write_record([r.scale.to_string(), format!("{:.6}", r.lambda), format!("{:.12e}", r.inf_weight)])?;
        }
        w.flush()
    }
}

/// Fewest scales a trend is read from.
pub const MIN_TREND_WINDOW: u32 = 3;

/// Scale window ending at the highest computable scale.
struct Window {
    first: u32,
    last: u32,
    gap: u32,
}

/// Up to `width` scales, fewer when the count cap truncated the levels.
fn window(levels: &[LevelCover], width: u32, gap: u32) -> Result<Window> {
    let top = levels.last().map_or(0, |l| l.count.n);
    // scales start at 1 and need at least one level above them
    let width = width.min(top.saturating_sub(1));
    if width < MIN_TREND_WINDOW {
        return Err(Error::InsufficientLevels {
            have: top as usize,
            need: MIN_TREND_WINDOW as usize + 1,
        });
    }
    let gap = gap.min(top - width).max(1);
    let last = top - gap;
    Ok(Window {
        first: last + 1 - width,
        last,
        gap,
    })
}

fn classify(levels: &[LevelCover], w: &Window, lambda: f64) -> Trend {
    let m = |n| outer_measure_from_levels(levels, lambda, n, w.gap).map_or(f64::NAN, |x| x.0);
    let (first, last) = (m(w.first), m(w.last));
    if first == 0.0 || last <= first / TREND_FACTOR {
        Trend::Above
    } else if last >= first * TREND_FACTOR {
        Trend::Below
    } else {
        Trend::Flat
    }
}

/// Critical exponent from per-level cover data. `lambda_max` must lie above
/// the critical value; the scale window is widened once if it does not.
pub fn critical_exponent_from_levels(
    levels: &[LevelCover],
    lambda_max: f64,
    width: u32,
    gap: u32,
    mesh: u32,
) -> Result<CriticalExponentResult> {
    let mut w = window(levels, width, gap)?;
    if classify(levels, &w, lambda_max) != Trend::Above {
        let wider = window(levels, 2 * width, gap)?;
        if wider.first == w.first || classify(levels, &wider, lambda_max) != Trend::Above {
            return Err(Error::IndeterminateTrend { lambda: lambda_max });
        }
        w = wider;
    }
    // smallest lambda above critical
    let (mut lo, mut hi) = (0.0, lambda_max);
    if classify(levels, &w, 0.0) == Trend::Above {
        hi = 0.0;
    }
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if classify(levels, &w, mid) == Trend::Above {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let upper = hi;
    // largest lambda below critical
    let lower = if classify(levels, &w, 0.0) == Trend::Below {
        let (mut lo, mut hi) = (0.0, upper);
        while hi - lo > BISECTION_WIDTH {
            let mid = 0.5 * (lo + hi);
            if classify(levels, &w, mid) == Trend::Below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    } else {
        0.0
    };
    let mut measure_trend = Vec::new();
    for lambda in [lower, upper] {
        for scale in w.first..=w.last {
            let inf_weight = outer_measure_from_levels(levels, lambda, scale, w.gap).map_or(f64::NAN, |x| x.0);
            measure_trend.push(TrendRow {
                scale,
                lambda,
                inf_weight,
            });
        }
    }
    Ok(CriticalExponentResult {
        lambda_star: 0.5 * (lower + upper),
        bracket: (lower, upper),
        scales: (w.first, w.last),
        gap: w.gap,
        measure_trend,
        mesh,
    })
}

/// Critical exponent of `X` for one cover.
pub fn critical_exponent(
    system: &PartiallyHyperbolic,
    x: &LeafSubset,
    mesh: u32,
    params: &EstimatorParams,
) -> Result<CriticalExponentResult> {
    params.validate()?;
    let levels = cover_levels(system, x, mesh, params)?;
    critical_exponent_from_levels(
        &levels,
        system.log_unstable_rate() + 1.0,
        params.trend_window,
        params.level_gap,
        mesh,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HEntropyEstimate {
    /// Value at the smallest radius.
    pub value: f64,
    pub per_delta: Vec<DeltaValue>,
    pub results: Vec<CriticalExponentResult>,
    pub warnings: Vec<Warning>,
    /// Every fit that was attempted failed to show a trend.
    pub indeterminate: bool,
}

impl HEntropyEstimate {
    pub fn is_stable(&self) -> bool {
        !self
            .warnings
            .iter()
            .any(|w| matches!(w, Warning::NonStabilized { .. }))
    }
}

/// Sup of the critical exponent over leaf subsets, one per `(delta, mesh)`
/// and per subset.
fn estimate_subsets(
    system: &PartiallyHyperbolic,
    jobs: Vec<(f64, LeafSubset)>,
    params: &EstimatorParams,
) -> Result<HEntropyEstimate> {
    params.validate()?;
    let meshes = params.sorted_meshes();
    let work: Vec<(f64, &LeafSubset, u32)> = jobs
        .iter()
        .flat_map(|(d, k)| meshes.iter().map(move |&m| (*d, k, m)))
        .collect();
    let outcomes: Vec<(f64, u32, Result<CriticalExponentResult>)> = work
        .par_iter()
        .map(|&(d, k, m)| (d, m, critical_exponent(system, k, m, params)))
        .collect();

    let mut warnings = Vec::new();
    let mut results = Vec::new();
    let mut attempted = 0usize;
    let mut per_delta_mesh: Vec<(f64, u32, f64)> = Vec::new();
    for (d, m, r) in outcomes {
        match r {
            Ok(r) => {
                attempted += 1;
                per_delta_mesh.push((d, m, r.lambda_star));
                results.push(r);
            }
            Err(Error::InsufficientLevels { have, .. }) => {
                warnings.push(Warning::InsufficientLevels { mesh: m, levels: have })
            }
            Err(Error::IndeterminateTrend { lambda }) => {
                attempted += 1;
                warnings.push(Warning::IndeterminateTrend { mesh: m, lambda })
            }
            Err(e) => return Err(e),
        }
    }
    warnings.dedup();
    if jobs.is_empty() {
        warnings.push(Warning::EmptyTrace);
    }
    let mut per_delta = Vec::new();
    for &delta in &params.deltas {
        let per_mesh: Vec<f64> = meshes
            .iter()
            .filter_map(|&m| {
                per_delta_mesh
                    .iter()
                    .filter(|(d, mm, _)| *d == delta && *mm == m)
                    .map(|x| x.2)
                    .reduce(f64::max)
            })
            .collect();
        warnings.extend(mesh_warning(&per_mesh));
        per_delta.push(DeltaValue {
            delta,
            value: per_mesh.iter().copied().fold(0.0, f64::max),
        });
    }
    let smallest = params.smallest_delta();
    let value = per_delta
        .iter()
        .find(|d| d.delta == smallest)
        .map_or(0.0, |d| d.value);
    Ok(HEntropyEstimate {
        value,
        per_delta,
        indeterminate: attempted > 0 && results.is_empty(),
        results,
        warnings,
    })
}

/// Critical exponent of one compact leaf subset, sup over the meshes.
pub fn h_unstable_of_compact(
    system: &PartiallyHyperbolic,
    k: &LeafSubset,
    params: &EstimatorParams,
) -> Result<HEntropyEstimate> {
    let jobs = if k.is_empty() {
        Vec::new()
    } else {
        vec![(params.smallest_delta(), k.clone())]
    };
    estimate_subsets(system, jobs, params)
}

/// `h^u_H(f, Y)` through traces of `Y` on leaf balls.
///
/// Ball centers are the anchors of `Y` and random points of `Y`; for the
/// whole torus, the origin and random points.
pub fn h_unstable_h(system: &PartiallyHyperbolic, y: &AmbientSet, params: &EstimatorParams) -> Result<HEntropyEstimate> {
    params.validate()?;
    let y = y.resolve_orbits(system)?;
    let centers: Vec<TorusPoint> = if y == AmbientSet::Torus {
        torus_samples(system.dim(), params)
    } else {
        set_samples(&y, system.dim(), params)
    };
    let mut jobs = Vec::new();
    for &delta in &params.deltas {
        for x in &centers {
            let ball = leaf_ball(system, x, delta)?;
            let trace = trace_subset(system, &y, &ball, params.resolution)?;
            if !trace.is_empty() {
                jobs.push((delta, trace));
            }
        }
    }
    estimate_subsets(system, jobs, params)
}
