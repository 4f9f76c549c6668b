//! Unstable metric entropy of Lebesgue measure.
//!
//! The partition is the grid of `m^d` half-open boxes and the plaque of `x`
//! is its unstable line clipped to the box of `x`. Along an affine leaf the
//! points sharing the first `n` boxes of the orbit of `x` form a finite union
//! of parameter intervals, so the conditional information is computed exactly
//! up to rounding.

use std::io::Write;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leaf::Interval;
use crate::params::EstimatorParams;
use crate::stats::mean_std;
use crate::systems::PartiallyHyperbolic;
use crate::torus::TorusPoint;

/// Points closer than this to a grid hyperplane are rejected.
pub const PLAQUE_MARGIN: f64 = 1e-9;

/// `∫ log Jac^u dm`, constant for a linear map.
pub fn metric_entropy_jacobian(system: &PartiallyHyperbolic) -> f64 {
    system.log_unstable_rate()
}

/// Exact offsets of each coordinate from the lower face of its grid box,
/// as `(below, above)` with `below + above = 1/m`.
fn cell_offsets(x: &TorusPoint, mesh: u32) -> Vec<(f64, f64)> {
    let m = BigInt::from(mesh);
    let den = x.denominator() * &m;
    x.numerators()
        .iter()
        .map(|num| {
            let r = (num * &m).mod_floor(x.denominator());
            let below = BigRational::new(r.clone(), den.clone()).to_f64().unwrap_or(0.0);
            let above = BigRational::new(x.denominator() - r, den.clone())
                .to_f64()
                .unwrap_or(0.0);
            (below, above)
        })
        .collect()
}

fn intersect(a: &[Interval], b: &[Interval]) -> Vec<Interval> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].lo.max(b[j].lo);
        let hi = a[i].hi.min(b[j].hi);
        if lo < hi {
            out.push(Interval::new(lo, hi));
        }
        if a[i].hi < b[j].hi {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Parameters `s` in `within` with `s * c ∈ [z - below, z + above]` for some integer `z`.
fn axis_constraint(within: &[Interval], c: f64, below: f64, above: f64) -> Vec<Interval> {
    if c == 0.0 {
        return within.to_vec();
    }
    let mut set = Vec::new();
    for iv in within {
        let (y0, y1) = if c > 0.0 { (iv.lo * c, iv.hi * c) } else { (iv.hi * c, iv.lo * c) };
        let z_lo = (y0 - above).ceil() as i64;
        let z_hi = (y1 + below).floor() as i64;
        for z in z_lo..=z_hi {
            let (e0, e1) = ((z as f64 - below) / c, (z as f64 + above) / c);
            set.push(Interval::new(e0.min(e1), e0.max(e1)));
        }
    }
    set.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    intersect(within, &set)
}

/// Plaque of `x` and the `n`-cylinder inside it, in arclength along `E^u`
/// with `x` at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub plaque: Interval,
    pub pieces: Vec<Interval>,
}

impl Cylinder {
    pub fn length(&self) -> f64 {
        self.pieces.iter().map(Interval::len).sum()
    }
}

pub fn cylinder(system: &PartiallyHyperbolic, x: &TorusPoint, mesh: u32, n: u32) -> Result<Cylinder> {
    if mesh < 2 {
        return Err(Error::InvalidParameter(format!("mesh must be at least 2, got {mesh}")));
    }
    if x.dim() != system.dim() {
        return Err(Error::InvalidParameter("point dimension does not match the system".into()));
    }
    if x.distance_to_grid(mesh) < PLAQUE_MARGIN {
        return Err(Error::DegeneratePlaque);
    }
    let u = system.unstable_direction();
    let offsets = cell_offsets(x, mesh);
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (&uj, &(below, above)) in u.iter().zip(&offsets) {
        if uj != 0.0 {
            let (a, b) = (-below / uj, above / uj);
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
    }
    let plaque = Interval::new(lo, hi);
    let mut pieces = vec![plaque];
    let growth = system.growth();
    let power = system.power_exponent() as u64;
    let mut y = x.clone();
    for k in 1..n as u64 {
        y = system.apply(&y, 1);
        let g = growth.factor(k * power);
        for (&uj, &(below, above)) in u.iter().zip(&cell_offsets(&y, mesh)) {
            pieces = axis_constraint(&pieces, uj * g, below, above);
        }
    }
    Ok(Cylinder { plaque, pieces })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformationSample {
    pub x: TorusPoint,
    pub n: u32,
    /// `I_n(x) / n`.
    pub value: f64,
}

/// `-(1/n) log(|cylinder| / |plaque|)`; zero for `n = 0`.
pub fn conditional_information(system: &PartiallyHyperbolic, x: &TorusPoint, mesh: u32, n: u32) -> Result<InformationSample> {
    if n == 0 {
        return Ok(InformationSample {
            x: x.clone(),
            n,
            value: 0.0,
        });
    }
    let c = cylinder(system, x, mesh, n)?;
    let value = -(c.length() / c.plaque.len()).ln() / n as f64;
    Ok(InformationSample {
        x: x.clone(),
        n,
        value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmbRow {
    pub n: u32,
    pub mean: f64,
    pub stddev: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmbReport {
    pub mesh: u32,
    pub rows: Vec<SmbRow>,
    /// The last two means agree within 2%.
    pub converged: bool,
    pub jacobian_entropy: f64,
}

impl SmbReport {
    /// `n,mean_In_over_n,stddev,samples` with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "mean_In_over_n", "stddev", "samples"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                format!("{:.9}", r.mean),
                format!("{:.9}", r.stddev),
                r.samples.to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Random rational points away from the grid hyperplanes.
pub fn generic_points(dim: usize, mesh: u32, count: usize, params: &EstimatorParams) -> Vec<TorusPoint> {
    let mut rng = params.rng();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = TorusPoint::random(dim, &mut rng);
        if p.distance_to_grid(mesh) >= PLAQUE_MARGIN {
            out.push(p);
        }
    }
    out
}

pub fn smb_convergence_report(
    system: &PartiallyHyperbolic,
    samples: usize,
    n_list: &[u32],
    mesh: u32,
    params: &EstimatorParams,
) -> Result<SmbReport> {
    if samples < 10 {
        return Err(Error::InvalidParameter(format!("need at least 10 samples, got {samples}")));
    }
    let points = generic_points(system.dim(), mesh, samples, params);
    let rows = n_list
        .iter()
        .map(|&n| {
            let values = points
                .par_iter()
                .map(|x| conditional_information(system, x, mesh, n).map(|s| s.value))
                .collect::<Result<Vec<f64>>>()?;
            let (mean, stddev) = mean_std(&values);
            Ok(SmbRow {
                n,
                mean,
                stddev,
                samples,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let converged = match rows.as_slice() {
        [.., a, b] => (a.mean - b.mean).abs() <= 0.02 * b.mean.abs(),
        _ => false,
    };
    Ok(SmbReport {
        mesh,
        rows,
        converged,
        jacobian_entropy: metric_entropy_jacobian(system),
    })
}
