//! Open-cover unstable topological entropy from the growth of minimal cover counts.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covers::LevelCover;
use crate::error::Result;
use crate::leaf::{leaf_ball, trace_subset, AmbientSet, LeafSubset};
use crate::params::{cover_levels, set_samples, torus_samples, EstimatorParams};
use crate::stats::least_squares;
use crate::systems::PartiallyHyperbolic;
use crate::torus::TorusPoint;

/// Relative disagreement between the two finest meshes that triggers a warning.
pub const MESH_STABILITY: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub n: u32,
    pub count: u64,
    pub log_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSeries {
    pub points: Vec<GrowthPoint>,
    pub slope: f64,
    pub slope_stderr: f64,
    /// Inclusive level range of the fit.
    pub window: (u32, u32),
    pub cover_mesh: u32,
    pub delta: f64,
    pub base_point: Option<TorusPoint>,
}

impl GrowthSeries {
    /// Least-squares slope of `log count` against `n` over the top half of
    /// the levels at or above `n_min`.
    pub fn fit(levels: &[LevelCover], n_min: u32, mesh: u32, delta: f64, base: Option<TorusPoint>) -> Self {
        let points: Vec<GrowthPoint> = levels
            .iter()
            .filter(|l| l.count.n >= n_min)
            .map(|l| GrowthPoint {
                n: l.count.n,
                count: l.count.count,
                log_count: (l.count.count as f64).ln(),
            })
            .collect();
        let (window, slope, slope_stderr) = match (points.first(), points.last()) {
            (Some(a), Some(b)) if b.n > a.n => {
                let start = a.n + (b.n - a.n) / 2;
                let start = start.min(b.n - 1);
                let xy: Vec<(f64, f64)> = points
                    .iter()
                    .filter(|p| p.n >= start)
                    .map(|p| (p.n as f64, p.log_count))
                    .collect();
                let fit = least_squares(&xy).expect("window holds two distinct levels");
                ((start, b.n), fit.slope, fit.slope_stderr)
            }
            (Some(a), Some(b)) => ((a.n, b.n), 0.0, 0.0),
            _ => ((n_min, n_min), 0.0, 0.0),
        };
        Self {
            points,
            slope,
            slope_stderr,
            window,
            cover_mesh: mesh,
            delta,
            base_point: base,
        }
    }

    /// `n,count,log_count` with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "count", "log_count"])?;
        for p in &self.points {
            w.write_record([p.n.to_string(), p.count.to_string(), format!("{:.12}", p.log_count)])?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// The two finest meshes disagree by more than the stability threshold.
    NonStabilized { fine: f64, finer: f64 },
    /// No sampled leaf ball met the set.
    EmptyTrace,
    /// A mesh yielded too few levels for the requested statistic.
    InsufficientLevels { mesh: u32, levels: usize },
    IndeterminateTrend { mesh: u32, lambda: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactEntropy {
    pub value: f64,
    pub series: Vec<GrowthSeries>,
    pub warnings: Vec<Warning>,
}

/// Stability check over per-mesh values ordered by mesh.
pub(crate) fn mesh_warning(per_mesh: &[f64]) -> Option<Warning> {
    if let [.., fine, finer] = per_mesh {
        let scale = fine.abs().max(finer.abs());
        if scale > 0.0 && (fine - finer).abs() > MESH_STABILITY * scale {
            return Some(Warning::NonStabilized {
                fine: *fine,
                finer: *finer,
            });
        }
    }
    None
}

/// Entropy of a compact leaf subset: the largest tail slope over the meshes.
pub fn entropy_of_compact(
    system: &PartiallyHyperbolic,
    k: &LeafSubset,
    params: &EstimatorParams,
) -> Result<CompactEntropy> {
    params.validate()?;
    if k.is_empty() {
        return Ok(CompactEntropy {
            value: 0.0,
            series: Vec::new(),
            warnings: vec![Warning::EmptyTrace],
        });
    }
    let meshes = params.sorted_meshes();
    let series = meshes
        .par_iter()
        .map(|&m| {
            let levels = cover_levels(system, k, m, params)?;
            Ok(GrowthSeries::fit(&levels, params.n_min, m, f64::NAN, None))
        })
        .collect::<Result<Vec<_>>>()?;
    let slopes: Vec<f64> = series.iter().map(|s| s.slope).collect();
    let value = slopes.iter().copied().fold(0.0, f64::max);
    Ok(CompactEntropy {
        value,
        warnings: mesh_warning(&slopes).into_iter().collect(),
        series,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaValue {
    pub delta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Value at the smallest radius.
    pub value: f64,
    pub per_delta: Vec<DeltaValue>,
    pub series: Vec<GrowthSeries>,
    pub warnings: Vec<Warning>,
}

impl EntropyEstimate {
    pub fn is_stable(&self) -> bool {
        !self
            .warnings
            .iter()
            .any(|w| matches!(w, Warning::NonStabilized { .. }))
    }

    /// Spread of the values across radii.
    pub fn delta_spread(&self) -> f64 {
        let vals = self.per_delta.iter().map(|d| d.value);
        let hi = vals.clone().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

/// Sup over leaf balls centered at `centers` of the entropy of `Y ∩ ball`.
fn estimate_over_balls(
    system: &PartiallyHyperbolic,
    y: &AmbientSet,
    centers: &[TorusPoint],
    params: &EstimatorParams,
) -> Result<EntropyEstimate> {
    params.validate()?;
    let y = y.resolve_orbits(system)?;
    let meshes = params.sorted_meshes();
    let mut jobs: Vec<(f64, &TorusPoint, u32)> = Vec::new();
    for &d in &params.deltas {
        for x in centers {
            jobs.extend(meshes.iter().map(|&m| (d, x, m)));
        }
    }
    let results = jobs
        .par_iter()
        .map(|&(delta, x, mesh)| -> Result<Option<GrowthSeries>> {
            let ball = leaf_ball(system, x, delta)?;
            let trace = trace_subset(system, &y, &ball, params.resolution)?;
            if trace.is_empty() {
                return Ok(None);
            }
            let levels = cover_levels(system, &trace, mesh, params)?;
            Ok(Some(GrowthSeries::fit(&levels, params.n_min, mesh, delta, Some(x.clone()))))
        })
        .collect::<Result<Vec<_>>>()?;
    let series: Vec<GrowthSeries> = results.into_iter().flatten().collect();

    let mut warnings = Vec::new();
    if series.is_empty() {
        warnings.push(Warning::EmptyTrace);
    }
    let mut per_delta = Vec::new();
    for &delta in &params.deltas {
        let per_mesh: Vec<f64> = meshes
            .iter()
            .map(|&m| {
                series
                    .iter()
                    .filter(|s| s.delta == delta && s.cover_mesh == m)
                    .map(|s| s.slope)
                    .fold(0.0, f64::max)
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
    Ok(EntropyEstimate {
        value,
        per_delta,
        series,
        warnings,
    })
}

/// `h^u_top(f)` from leaf balls around the origin and random centers.
pub fn unstable_topological_entropy(system: &PartiallyHyperbolic, params: &EstimatorParams) -> Result<EntropyEstimate> {
    let centers = torus_samples(system.dim(), params);
    estimate_over_balls(system, &AmbientSet::Torus, &centers, params)
}

/// `h^u(f, Y)` from traces of `Y` on leaf balls centered in `Y`.
pub fn entropy_of_subset_cover_style(
    system: &PartiallyHyperbolic,
    y: &AmbientSet,
    params: &EstimatorParams,
) -> Result<EntropyEstimate> {
    let y = y.resolve_orbits(system)?;
    let centers = set_samples(&y, system.dim(), params);
    estimate_over_balls(system, &y, &centers, params)
}
