//! Linear partially hyperbolic automorphisms of `T^2` and `T^3`.
//!
//! A [`ToralAutomorphism`] is an integer matrix with `|det| = 1`. Its
//! eigen-decomposition is a [`Splitting`] into stable, center and unstable
//! directions. [`PartiallyHyperbolic`] bundles a map with the splitting the
//! rest of the crate works against (one-dimensional unstable bundle), and
//! optionally a power `f^m`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::IntPoly;
use crate::torus::TorusPoint;

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToralAutomorphism {
    dim: usize,
    /// Row-major entries.
    matrix: Vec<i64>,
    det: i64,
}

impl ToralAutomorphism {
    pub fn new(rows: &[Vec<i64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::MalformedMatrix(format!(
                "expected a square matrix, got {} rows of lengths {:?}",
                dim,
                rows.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let matrix: Vec<i64> = rows.iter().flatten().copied().collect();
        let det = determinant(&matrix, dim);
        if det.abs() != 1 {
            return Err(Error::NotUnimodular { det });
        }
        Ok(Self {
            dim,
            matrix,
            det: det as i64,
        })
    }

    /// Flat row-major list of `d*d` integers.
    pub fn from_flat(entries: &[i64]) -> Result<Self> {
        let dim = match entries.len() {
            4 => 2,
            9 => 3,
            n => {
                let d = (n as f64).sqrt().round() as usize;
                if d * d == n {
                    return Err(Error::UnsupportedDimension(d));
                }
                return Err(Error::MalformedMatrix(format!("{n} entries is not a square count")));
            }
        };
        let rows: Vec<Vec<i64>> = entries.chunks(dim).map(<[i64]>::to_vec).collect();
        Self::new(&rows)
    }

    /// Arnold's cat map `[[2,1],[1,1]]`.
    pub fn cat2() -> Self {
        Self::new(&[vec![2, 1], vec![1, 1]]).expect("cat map is unimodular")
    }

    /// `[[0,0,1],[0,1,-1],[-1,-1,k0]]`, which for `k0 >= 5` has three real
    /// eigenvalues `0 < l_s < l_c < 1 < l_u`.
    pub fn paper3(k0: i64) -> Self {
        Self::new(&[vec![0, 0, 1], vec![0, 1, -1], vec![-1, -1, k0]])
            .expect("determinant is 1 for every k0")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[i64] {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.matrix[i * self.dim + j]
    }

    pub fn det(&self) -> i64 {
        self.det
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.matrix.chunks(self.dim).map(<[i64]>::to_vec).collect()
    }

    /// Exact inverse, `adj(A) / det(A)`.
    pub fn inverse(&self) -> Self {
        let d = self.dim;
        let a = |i: usize, j: usize| self.matrix[i * d + j];
        let adj: Vec<i64> = match d {
            2 => vec![a(1, 1), -a(0, 1), -a(1, 0), a(0, 0)],
            _ => {
                let mut out = vec![0; 9];
                for i in 0..3 {
                    for j in 0..3 {
                        // cofactor C_ji goes to position (i, j)
                        let (r0, r1) = others(j);
                        let (c0, c1) = others(i);
                        let minor = a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0);
                        let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                        out[i * 3 + j] = sign * minor;
                    }
                }
                out
            }
        };
        Self {
            dim: d,
            matrix: adj.into_iter().map(|x| x * self.det).collect(),
            det: self.det,
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut out = vec![0i64; d * d];
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = (0..d).map(|k| self.matrix[i * d + k] * other.matrix[k * d + j]).sum();
            }
        }
        Self {
            dim: d,
            matrix: out,
            det: self.det * other.det,
        }
    }

    pub fn pow(&self, m: u32) -> Self {
        let mut acc = Self::identity(self.dim);
        for _ in 0..m {
            acc = acc.compose(self);
        }
        acc
    }

    fn identity(dim: usize) -> Self {
        let mut matrix = vec![0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1;
        }
        Self { dim, matrix, det: 1 }
    }

    pub fn characteristic_polynomial(&self) -> IntPoly {
        let a = |i: usize, j: usize| self.matrix[i * self.dim + j] as i128;
        match self.dim {
            2 => {
                let tr = a(0, 0) + a(1, 1);
                IntPoly::new(vec![self.det as i128, -tr, 1])
            }
            _ => {
                let tr = a(0, 0) + a(1, 1) + a(2, 2);
                let c2 = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0))
                    + (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0))
                    + (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1));
                IntPoly::new(vec![-(self.det as i128), c2, -tr, 1])
            }
        }
    }

    /// `f^k(x)`, exact; negative `k` uses the integer inverse.
    pub fn apply(&self, x: &TorusPoint, k: i64) -> TorusPoint {
        assert_eq!(x.dim(), self.dim, "point dimension does not match the map");
        if k == 0 {
            return x.clone();
        }
        let inv;
        let m = if k > 0 {
            &self.matrix
        } else {
            inv = self.inverse();
            &inv.matrix
        };
        let mut p = x.apply_matrix(m);
        for _ in 1..k.unsigned_abs() {
            p = p.apply_matrix(m);
        }
        p
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).map(|j| self.matrix[i * d + j] as f64 * v[j]).sum())
            .collect()
    }

    pub fn splitting(&self, rule: LabelRule) -> Result<Splitting> {
        compute_splitting(self, rule)
    }
}

fn others(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

fn determinant(m: &[i64], dim: usize) -> i128 {
    let a = |i: usize, j: usize| m[i * dim + j] as i128;
    match dim {
        2 => a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0),
        3 => {
            a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
        }
        _ => unreachable!("dimension checked by caller"),
    }
}

impl fmt::Debug for ToralAutomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ToralAutomorphism({:?})", self.rows())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bundle {
    Stable,
    Center,
    Unstable,
}

/// How eigen-directions are assigned to bundles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// Exactly one eigenvalue of modulus `> 1` is unstable; the smallest
    /// modulus is stable; the rest are center.
    Standard,
    /// The largest modulus is unstable even if other moduli exceed one. This
    /// realizes the splitting of `f^{-1}` in which `E^u` is the old `E^s`
    /// and the center is kept.
    DominantUnstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splitting {
    /// Sorted by modulus, ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit vectors; the largest-magnitude component is positive.
    pub eigenvectors: Vec<Vec<f64>>,
    pub labels: Vec<Bundle>,
    pub unstable_index: usize,
    pub rule: LabelRule,
}

impl Splitting {
    pub fn unstable_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.unstable_index]
    }

    /// `|l_u|`.
    pub fn unstable_rate(&self) -> f64 {
        self.unstable_eigenvalue().abs()
    }

    pub fn unstable_direction(&self) -> &[f64] {
        &self.eigenvectors[self.unstable_index]
    }

    pub fn eigenvalue_of(&self, bundle: Bundle) -> Option<f64> {
        self.labels
            .iter()
            .position(|&l| l == bundle)
            .map(|i| self.eigenvalues[i])
    }

    /// `‖A v − l v‖` for every eigenpair.
    pub fn residuals(&self, map: &ToralAutomorphism) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .zip(&self.eigenvectors)
            .map(|(&l, v)| {
                map.mul_vec(v)
                    .iter()
                    .zip(v)
                    .map(|(av, vi)| (av - l * vi).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }
}

pub fn compute_splitting(map: &ToralAutomorphism, rule: LabelRule) -> Result<Splitting> {
    let roots = map.characteristic_polynomial().real_roots()?;
    let mut eigenvalues = roots;
    eigenvalues.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    if eigenvalues.windows(2).any(|w| (w[1].abs() - w[0].abs()) < 1e-9) {
        // real but of equal modulus (l and -l): no dominated splitting
        return Err(Error::ComplexSpectrum);
    }
    let expanding = eigenvalues.iter().filter(|l| l.abs() > 1.0).count();
    if expanding == 0 {
        return Err(Error::NoUnstableDirection);
    }
    if rule == LabelRule::Standard && expanding > 1 {
        return Err(Error::MultipleUnstable(expanding));
    }
    let d = eigenvalues.len();
    let labels: Vec<Bundle> = (0..d)
        .map(|i| {
            if i == d - 1 {
                Bundle::Unstable
            } else if i == 0 {
                Bundle::Stable
            } else {
                Bundle::Center
            }
        })
        .collect();
    let eigenvectors = eigenvalues
        .iter()
        .map(|&l| eigenvector(map, l))
        .collect();
    Ok(Splitting {
        eigenvalues,
        eigenvectors,
        labels,
        unstable_index: d - 1,
        rule,
    })
}

/// Null vector of `A - l I` from the rows with the best-conditioned cross product.
fn eigenvector(map: &ToralAutomorphism, l: f64) -> Vec<f64> {
    let d = map.dim();
    let b = |i: usize, j: usize| map.entry(i, j) as f64 - if i == j { l } else { 0.0 };
    let mut v = match d {
        2 => {
            let r0 = [b(0, 0), b(0, 1)];
            let r1 = [b(1, 0), b(1, 1)];
            let r = if norm(&r0) >= norm(&r1) { r0 } else { r1 };
            vec![-r[1], r[0]]
        }
        _ => {
            let rows: Vec<[f64; 3]> = (0..3).map(|i| [b(i, 0), b(i, 1), b(i, 2)]).collect();
            [(0, 1), (0, 2), (1, 2)]
                .iter()
                .map(|&(i, j)| cross(&rows[i], &rows[j]))
                .max_by(|x, y| norm(x).total_cmp(&norm(y)))
                .unwrap()
                .to_vec()
        }
    };
    let n = norm(&v);
    let big = v
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap();
    let s = if big < 0.0 { -1.0 / n } else { 1.0 / n };
    v.iter_mut().for_each(|x| *x *= s);
    v
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// How leaf parameters scale under one application of the base map:
/// by `exp(log_rate)`, with an orientation flip when the eigenvalue is negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub log_rate: f64,
    pub negative: bool,
}

impl Growth {
    pub const STATIC: Growth = Growth {
        log_rate: 0.0,
        negative: false,
    };

    /// Signed multiplier after `steps` applications, computed from the
    /// integer step count so that equal counts give bit-identical values.
    pub fn factor(&self, steps: u64) -> f64 {
        let mag = (steps as f64 * self.log_rate).exp();
        if self.negative && steps % 2 == 1 {
            -mag
        } else {
            mag
        }
    }
}

/// A toral automorphism with a designated one-dimensional unstable bundle,
/// possibly iterated: the dynamics is `map^power`.
#[derive(Clone, Serialize, Deserialize)]
pub struct PartiallyHyperbolic {
    name: String,
    map: ToralAutomorphism,
    splitting: Splitting,
    power: u32,
}

impl PartiallyHyperbolic {
    pub fn new(name: impl Into<String>, map: ToralAutomorphism, rule: LabelRule) -> Result<Self> {
        let splitting = map.splitting(rule)?;
        Ok(Self {
            name: name.into(),
            map,
            splitting,
            power: 1,
        })
    }

    pub fn cat2() -> Self {
        Self::new("cat2", ToralAutomorphism::cat2(), LabelRule::Standard)
            .expect("cat map is hyperbolic")
    }

    pub fn paper3(k0: i64) -> Result<Self> {
        Self::new(format!("paper3:k0={k0}"), ToralAutomorphism::paper3(k0), LabelRule::Standard)
    }

    /// `f^{-1}` with `E^u_{f^{-1}} = E^s_f` and the center kept.
    pub fn inverse(&self) -> Result<Self> {
        let mut inv = Self::new(
            format!("{}:inverse", self.name),
            self.map.inverse(),
            LabelRule::DominantUnstable,
        )?;
        inv.power = self.power;
        Ok(inv)
    }

    /// The same splitting, dynamics `f^m`.
    pub fn power(&self, m: u32) -> Self {
        assert!(m >= 1, "power must be positive");
        let mut p = self.clone();
        p.power *= m;
        p.name = format!("{}:power={}", self.name, p.power);
        p
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn map(&self) -> &ToralAutomorphism {
        &self.map
    }

    pub fn splitting(&self) -> &Splitting {
        &self.splitting
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    /// Base-map applications per step of the dynamics.
    pub fn power_exponent(&self) -> u32 {
        self.power
    }

    pub fn unstable_direction(&self) -> &[f64] {
        self.splitting.unstable_direction()
    }

    /// `|l_u|^power`.
    pub fn unstable_rate(&self) -> f64 {
        self.splitting.unstable_rate().powi(self.power as i32)
    }

    pub fn log_unstable_rate(&self) -> f64 {
        self.power as f64 * self.splitting.unstable_rate().ln()
    }

    /// Per base-map step.
    pub fn growth(&self) -> Growth {
        Growth {
            log_rate: self.splitting.unstable_rate().ln(),
            negative: self.splitting.unstable_eigenvalue() < 0.0,
        }
    }

    /// `(f^power)^k(x)`.
    pub fn apply(&self, x: &TorusPoint, k: i64) -> TorusPoint {
        self.map.apply(x, k * self.power as i64)
    }

    /// The unstable Jacobian; constant in `x` for a linear map.
    pub fn unstable_jacobian(&self, _x: &TorusPoint) -> f64 {
        self.unstable_rate()
    }
}

impl fmt::Debug for PartiallyHyperbolic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PartiallyHyperbolic")
            .field("name", &self.name)
            .field("matrix", &self.map.rows())
            .field("power", &self.power)
            .finish()
    }
}
