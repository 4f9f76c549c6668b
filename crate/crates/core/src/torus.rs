//! Exact points of the torus `R^d / Z^d`.
//!
//! Coordinates share one denominator and are kept in lowest terms, so two
//! equal points always have identical representations. Integer unimodular
//! matrices preserve the reduced denominator, which keeps orbit arithmetic
//! cheap for any number of iterations.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusPoint {
    num: Vec<BigInt>,
    den: BigInt,
}

impl TorusPoint {
    pub fn origin(dim: usize) -> Self {
        Self {
            num: vec![BigInt::zero(); dim],
            den: BigInt::one(),
        }
    }

    /// Builds a point from arbitrary rationals, reducing each coordinate mod 1.
    pub fn from_rationals(coords: &[BigRational]) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("point needs at least one coordinate".into()));
        }
        let den = coords
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let num = coords
            .iter()
            .map(|c| c.numer() * (&den / c.denom()))
            .collect();
        Ok(Self::from_parts(num, den))
    }

    /// `(numerator, denominator)` pairs; denominators must be nonzero.
    pub fn from_fractions(coords: &[(i64, i64)]) -> Result<Self> {
        let rats = coords
            .iter()
            .map(|&(p, q)| {
                if q == 0 {
                    Err(Error::InvalidParameter("zero denominator".into()))
                } else {
                    Ok(BigRational::new(p.into(), q.into()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rationals(&rats)
    }

    /// Reduces numerators mod `den` and cancels common factors.
    pub(crate) fn from_parts(num: Vec<BigInt>, den: BigInt) -> Self {
        debug_assert!(!den.is_zero());
        let (num, den) = if den.is_negative() {
            (num.into_iter().map(|n| -n).collect::<Vec<_>>(), -den)
        } else {
            (num, den)
        };
        let mut num: Vec<BigInt> = num.into_iter().map(|n| n.mod_floor(&den)).collect();
        let g = num.iter().fold(den.clone(), |g, n| g.gcd(n));
        let den = if g.is_one() {
            den
        } else {
            for n in &mut num {
                *n /= &g;
            }
            den / &g
        };
        Self { num, den }
    }

    /// Uniform random point with denominator drawn from `[2^20, 2^40)`.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let den: u64 = rng.gen_range(1u64 << 20..1u64 << 40);
        let num = (0..dim)
            .map(|_| BigInt::from(rng.gen_range(0..den)))
            .collect();
        Self::from_parts(num, BigInt::from(den))
    }

    pub fn dim(&self) -> usize {
        self.num.len()
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub fn numerators(&self) -> &[BigInt] {
        &self.num
    }

    pub fn coord(&self, i: usize) -> BigRational {
        BigRational::new(self.num[i].clone(), self.den.clone())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.coord(i).to_f64().unwrap_or(0.0))
            .collect()
    }

    /// Index of the half-open grid box `[i/m, (i+1)/m)` containing each coordinate.
    pub fn grid_cell(&self, mesh: u32) -> Vec<u32> {
        self.num
            .iter()
            .map(|n| {
                let idx: BigInt = (n * BigInt::from(mesh)).div_floor(&self.den);
                idx.to_u32().unwrap_or(0)
            })
            .collect()
    }

    /// Exact distance from each coordinate to the nearest hyperplane `i/m`,
    /// as a float.
    pub fn distance_to_grid(&self, mesh: u32) -> f64 {
        let m = BigInt::from(mesh);
        self.num
            .iter()
            .map(|n| {
                let scaled = n * &m;
                let r = scaled.mod_floor(&self.den);
                let d = std::cmp::min(r.clone(), &self.den - r);
                BigRational::new(d, &self.den * &m).to_f64().unwrap_or(0.0)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Applies an integer matrix (row-major) and reduces mod 1.
    pub(crate) fn apply_matrix(&self, matrix: &[i64]) -> Self {
        let d = self.dim();
        debug_assert_eq!(matrix.len(), d * d);
        let num = (0..d)
            .map(|i| {
                let mut acc = BigInt::zero();
                for j in 0..d {
                    let a = matrix[i * d + j];
                    if a != 0 {
                        acc += &self.num[j] * a;
                    }
                }
                acc.mod_floor(&self.den)
            })
            .collect();
        // unimodular matrices keep the representation reduced
        Self {
            num,
            den: self.den.clone(),
        }
    }
}

impl fmt::Debug for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for i in 0..self.dim() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", self.coord(i))?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_is_canonical() {
        let a = TorusPoint::from_fractions(&[(1, 2), (0, 1)]).unwrap();
        let b = TorusPoint::from_fractions(&[(3, 2), (-4, 4)]).unwrap();
        let c = TorusPoint::from_fractions(&[(2, 4), (5, 5)]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.denominator(), &BigInt::from(2));
        assert_eq!(a.to_string(), "(1/2, 0)");
    }

    #[test]
    fn negative_coordinates_wrap() {
        let p = TorusPoint::from_fractions(&[(-1, 3), (-7, 3)]).unwrap();
        assert_eq!(p.to_f64(), vec![2.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn grid_cells_are_half_open() {
        let p = TorusPoint::from_fractions(&[(1, 4), (3, 16)]).unwrap();
        assert_eq!(p.grid_cell(4), vec![1, 0]);
        assert_eq!(p.distance_to_grid(4), 0.0);
        let q = TorusPoint::from_fractions(&[(1, 3), (1, 3)]).unwrap();
        assert!((q.distance_to_grid(4) - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(TorusPoint::from_fractions(&[(1, 0)]).is_err());
    }
}
