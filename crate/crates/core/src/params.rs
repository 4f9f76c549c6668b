use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::covers::{GridCover, LevelCover, SubsetCoverer, DEFAULT_INFLATION};
use crate::error::{Error, Result};
use crate::leaf::{AmbientSet, LeafSubset};
use crate::systems::PartiallyHyperbolic;
use crate::torus::TorusPoint;

/// Knobs shared by the entropy estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorParams {
    /// Leaf-ball radii; the reported value is the one at the smallest radius.
    pub deltas: Vec<f64>,
    pub meshes: Vec<u32>,
    pub inflation: f64,
    /// Leaf-ball centers per radius.
    pub samples: usize,
    pub n_min: u32,
    pub n_max: u32,
    /// A level is skipped once its minimal cover would need more pieces.
    pub count_cap: u64,
    /// Arclength step for tracing balls on leaves.
    pub resolution: f64,
    pub seed: u64,
    /// Number of scales `N` in a critical-exponent trend.
    pub trend_window: u32,
    /// Levels `N+1..=N+gap` searched for the cheapest cover at scale `N`.
    pub level_gap: u32,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self {
            deltas: vec![0.1, 0.05],
            meshes: vec![8, 16, 32, 64],
            inflation: DEFAULT_INFLATION,
            samples: 3,
            n_min: 1,
            n_max: 20,
            count_cap: 500_000,
            resolution: 1e-3,
            seed: 0,
            trend_window: 8,
            level_gap: 5,
        }
    }
}

impl EstimatorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !(*d > 0.0 && *d < 0.5)) {
            return bad(format!("deltas must be nonempty and in (0, 0.5): {:?}", self.deltas));
        }
        if self.meshes.is_empty() || self.meshes.iter().any(|&m| m < 2) {
            return bad(format!("meshes must be nonempty and at least 2: {:?}", self.meshes));
        }
        if !(self.inflation > 1.0 && self.inflation < 2.0) {
            return bad(format!("inflation must lie in (1, 2), got {}", self.inflation));
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        if self.n_min == 0 || self.n_min > self.n_max || self.n_max > crate::covers::DEFAULT_N_MAX {
            return bad(format!(
                "level range [{}, {}] must lie within [1, {}]",
                self.n_min,
                self.n_max,
                crate::covers::DEFAULT_N_MAX
            ));
        }
        if self.count_cap == 0 {
            return bad("count cap must be positive".into());
        }
        if !(self.resolution > 0.0) {
            return bad(format!("resolution must be positive, got {}", self.resolution));
        }
        if self.trend_window < 2 || self.level_gap == 0 {
            return bad("trend window must be at least 2 and level gap at least 1".into());
        }
        Ok(())
    }

    pub fn smallest_delta(&self) -> f64 {
        self.deltas.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Meshes sorted ascending without duplicates.
    pub fn sorted_meshes(&self) -> Vec<u32> {
        let mut m = self.meshes.clone();
        m.sort_unstable();
        m.dedup();
        m
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn cover(&self, mesh: u32, dim: usize) -> Result<GridCover> {
        GridCover::new(mesh, self.inflation, dim)
    }
}

/// Origin followed by uniform random points.
pub fn torus_samples(dim: usize, params: &EstimatorParams) -> Vec<TorusPoint> {
    let mut rng = params.rng();
    let mut out = vec![TorusPoint::origin(dim)];
    while out.len() < params.samples {
        out.push(TorusPoint::random(dim, &mut rng));
    }
    out
}

/// Anchors of `Y` (ball centers, orbit points) first, then random points of `Y`.
pub fn set_samples(y: &AmbientSet, dim: usize, params: &EstimatorParams) -> Vec<TorusPoint> {
    if *y == AmbientSet::Torus {
        return torus_samples(dim, params);
    }
    let mut rng = params.rng();
    let mut out: Vec<TorusPoint> = Vec::new();
    for a in y.anchors() {
        if out.len() >= params.samples {
            break;
        }
        if !out.contains(&a) {
            out.push(a);
        }
    }
    let mut attempts = 0;
    while out.len() < params.samples && attempts < 10 * params.samples {
        attempts += 1;
        match y.sample(dim, &mut rng) {
            Some(p) if !out.contains(&p) => out.push(p),
            Some(_) => {}
            None => break,
        }
    }
    out
}

/// Minimal-cover data of `subset` for levels `1..` under one mesh.
pub fn cover_levels(
    system: &PartiallyHyperbolic,
    subset: &LeafSubset,
    mesh: u32,
    params: &EstimatorParams,
) -> Result<Vec<LevelCover>> {
    let cover = params.cover(mesh, system.dim())?;
    let coverer = SubsetCoverer::new(system, subset, cover, params.n_max);
    Ok(coverer.levels(params.n_max, params.count_cap))
}
