//! Independent oracles for minimal covers and cylinders.
//!
//! Minimal covers: the exhaustive search never calls the library's thinness
//! code. For a grid `g_0 < ... < g_K` on the segment it brackets the optimum:
//! chaining grid segments that are thin gives an upper bound, and replacing
//! every element of an optimal cover by the grid range it can possibly touch
//! gives a lower bound. The grid is halved until both bounds agree.
//!
//! Cylinders: membership of sample points in the intersection of the grid
//! cells along the orbit, compared against the interval computation.

use leafdim::covers::minimal_bowen_cover;
use leafdim::umetric::{cylinder, PLAQUE_MARGIN};
use leafdim::{GridCover, LeafSegment, LeafSubset, PartiallyHyperbolic, TorusPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn systems() -> [PartiallyHyperbolic; 3] {
    let f = PartiallyHyperbolic::paper3(5).unwrap();
    [PartiallyHyperbolic::cat2(), f.inverse().unwrap(), f]
}

struct Instance {
    /// Per iterate `k < n`: lifted base point and velocity along the leaf.
    rows: Vec<(Vec<f64>, Vec<f64>)>,
    mesh: f64,
    inflation: f64,
}

impl Instance {
    fn new(system: &PartiallyHyperbolic, base: &TorusPoint, mesh: u32, inflation: f64, n: u32) -> Self {
        let u = system.unstable_direction();
        let lambda = system.splitting().unstable_eigenvalue().powi(system.power_exponent() as i32);
        let rows = (0..n)
            .map(|k| {
                let p = system.apply(base, k as i64).to_f64();
                let g = lambda.powi(k as i32);
                (p, u.iter().map(|c| c * g).collect())
            })
            .collect();
        Self {
            rows,
            mesh: mesh as f64,
            inflation,
        }
    }

    /// Some open window `((i + 1/2 - rho/2)/m, (i + 1/2 + rho/2)/m)` holds `[lo, hi]`.
    fn fits(&self, lo: f64, hi: f64) -> bool {
        let half = self.inflation / 2.0;
        let base = (lo * self.mesh).floor() as i64;
        (base - 2..=base + 2).any(|i| {
            let c = i as f64 + 0.5;
            (c - half) / self.mesh < lo && hi < (c + half) / self.mesh
        })
    }

    fn thin(&self, a: f64, b: f64) -> bool {
        self.rows.iter().all(|(p, v)| {
            p.iter().zip(v).all(|(&x, &c)| {
                let (y0, y1) = (x + a * c, x + b * c);
                self.fits(y0.min(y1), y0.max(y1))
            })
        })
    }

    /// `(lower, upper)` bounds on the minimal cover of `[a, b]` from a grid of `k` steps.
    fn bracket(&self, a: f64, b: f64, k: usize) -> (usize, usize) {
        let g: Vec<f64> = (0..=k).map(|i| a + (b - a) * i as f64 / k as f64).collect();
        // reach[i]: largest j with [g_i, g_j] thin (monotone in i)
        let mut reach = vec![0usize; k + 1];
        let mut j = 0;
        for i in 0..=k {
            j = j.max(i);
            while j < k && self.thin(g[i], g[j + 1]) {
                j += 1;
            }
            reach[i] = j;
        }
        // upper: chain grid segments [g_i, g_reach[i]]
        let mut upper = 0;
        let mut i = 0;
        loop {
            upper += 1;
            let next = reach[i];
            if next >= k {
                break;
            }
            if next == i {
                upper = usize::MAX;
                break;
            }
            i = next;
        }
        // lower: an element starting in [g_i, g_{i+1}) contains [g_{i+1}, g_j]
        // only for j <= reach[i+1], so it ends before g_{reach[i+1]+1}
        let bound = |i: usize| if i < k { reach[i + 1] + 1 } else { k + 1 };
        let mut lower = 1;
        let mut p = bound(0);
        while p <= k {
            lower += 1;
            p = bound(p - 1);
        }
        (lower, upper)
    }

    fn optimum(&self, a: f64, b: f64, bowen: f64) -> Option<usize> {
        let mut k = ((b - a) / bowen * 64.0).ceil().max(16.0) as usize;
        for _ in 0..6 {
            let (lo, hi) = self.bracket(a, b, k);
            if lo == hi {
                return Some(lo);
            }
            assert!(lo <= hi);
            k *= 2;
        }
        None
    }
}

pub struct GreedyCheck {
    pub checked: usize,
    pub unresolved: usize,
    pub largest: usize,
}

/// Compares greedy minimal covers with the exhaustive optimum on random
/// segments with `n <= 6`.
pub fn greedy_vs_exhaustive(trials: usize, seed: u64) -> Result<GreedyCheck, String> {
    let systems = systems();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GreedyCheck { checked: 0, unresolved: 0, largest: 0 };
    for trial in 0..trials {
        let system = &systems[trial % 3];
        let mesh = [4u32, 8, 16][rng.gen_range(0..3)];
        let n = rng.gen_range(1..=6u32);
        let cover = GridCover::with_mesh(mesh, system.dim()).unwrap();
        let base = TorusPoint::random(system.dim(), &mut rng);
        let lambda = system.unstable_rate().powi(system.power_exponent() as i32);
        // length of a typical level-n piece
        let bowen = (cover.inflation() - 1.0) / mesh as f64 / lambda.powi(n as i32 - 1);
        let len = (bowen * rng.gen_range(0.5..40.0)).min(0.2);
        let a = rng.gen_range(-0.1..0.0);
        let oracle = Instance::new(system, &base, mesh, cover.inflation(), n);
        let Some(expected) = oracle.optimum(a, a + len, bowen) else {
            out.unresolved += 1;
            continue;
        };
        let s = LeafSegment::on_leaf(system, base, a, a + len).unwrap();
        let got = minimal_bowen_cover(system, &LeafSubset::from_segment(s), &cover, n).unwrap();
        if got.count as usize != expected {
            return Err(format!(
                "{} mesh {mesh} n {n} len {len}: greedy {} exhaustive {expected}",
                system.name(),
                got.count
            ));
        }
        out.checked += 1;
        out.largest = out.largest.max(expected);
    }
    Ok(out)
}

/// Grid cell of every coordinate.
fn cell(p: &[f64], mesh: f64) -> Vec<i64> {
    p.iter().map(|c| (c.rem_euclid(1.0) * mesh).floor() as i64).collect()
}

/// Runs of sample points `s` whose first `n` iterates share the cells of
/// the orbit of `x`, as `(first, last)` sample parameters.
fn sampled_runs(system: &PartiallyHyperbolic, x: &TorusPoint, mesh: u32, n: u32, lo: f64, hi: f64, step: f64) -> Vec<(f64, f64)> {
    let m = mesh as f64;
    let u = system.unstable_direction();
    let lambda = system.splitting().unstable_eigenvalue().powi(system.power_exponent() as i32);
    let orbit: Vec<(Vec<f64>, Vec<i64>, f64)> = (0..n.max(1))
        .map(|k| {
            let p = system.apply(x, k as i64).to_f64();
            let c = cell(&p, m);
            (p, c, lambda.powi(k as i32))
        })
        .collect();
    let inside = |s: f64| {
        orbit.iter().all(|(p, c, g)| {
            let q: Vec<f64> = p.iter().zip(u.iter()).map(|(a, b)| a + s * g * b).collect();
            &cell(&q, m) == c
        })
    };
    let mut runs = Vec::new();
    let mut current: Option<(f64, f64)> = None;
    let steps = ((hi - lo) / step).ceil() as i64;
    for i in 0..=steps {
        let s = (lo + i as f64 * step).min(hi);
        if inside(s) {
            current = Some(current.map_or((s, s), |(a, _)| (a, s)));
        } else if let Some(r) = current.take() {
            runs.push(r);
        }
    }
    runs.extend(current);
    runs
}

/// Compares interval cylinders with sampled membership for `n <= 8`;
/// returns the number of cylinders compared.
pub fn cylinders_vs_sampling(trials: usize, seed: u64) -> Result<usize, String> {
    let systems = systems();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut compared = 0;
    for trial in 0..trials {
        let system = &systems[trial % 3];
        let mesh = [4u32, 8, 16][trial % 3];
        let x = loop {
            let p = TorusPoint::random(system.dim(), &mut rng);
            if p.distance_to_grid(mesh) > PLAQUE_MARGIN {
                break p;
            }
        };
        let n = rng.gen_range(0..=8u32);
        let c = cylinder(system, &x, mesh, n).map_err(|e| e.to_string())?;
        // resolution 1e-6 relative to the plaque
        let step = c.plaque.len() * 1e-6;
        let runs = sampled_runs(system, &x, mesh, n, c.plaque.lo, c.plaque.hi, step);
        let pieces: Vec<_> = c.pieces.iter().filter(|p| p.len() > 2.0 * step).collect();
        let label = format!("{} n={n} mesh={mesh}", system.name());
        if runs.len() != pieces.len() {
            return Err(format!("{label}: {runs:?} vs {pieces:?}"));
        }
        for (r, p) in runs.iter().zip(&pieces) {
            if (r.0 - p.lo).abs() > 1.5 * step || (r.1 - p.hi).abs() > 1.5 * step {
                return Err(format!("{label}: {r:?} vs {p:?}"));
            }
        }
        let sampled: f64 = runs.iter().map(|r| r.1 - r.0).sum();
        if (sampled - c.length()).abs() > 2.0 * step * (runs.len() + c.pieces.len()) as f64 {
            return Err(format!("{label}: sampled length {sampled} vs {}", c.length()));
        }
        compared += 1;
    }
    Ok(compared)
}
