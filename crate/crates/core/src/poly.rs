//! Real roots of small integer polynomials by bracketing and bisection.

use crate::error::{Error, Result};

/// Guaranteed absolute accuracy of every root; bisection continues to the
/// last representable midpoint.
pub const ROOT_TOLERANCE: f64 = 1e-12;

/// Polynomial with integer coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntPoly {
    coeffs: Vec<i128>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<i128>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * t + c as f64)
    }

    pub fn derivative(&self) -> IntPoly {
        if self.coeffs.len() <= 1 {
            return IntPoly::new(vec![0]);
        }
        IntPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as i128)
                .collect(),
        )
    }

    /// Discriminant for degrees 2 and 3; `None` for other degrees or on overflow.
    pub fn discriminant(&self) -> Option<i128> {
        match *self.coeffs.as_slice() {
            [c, b, a] => b.checked_mul(b)?.checked_sub(a.checked_mul(c)?.checked_mul(4)?),
            [d, c, b, a] => {
                // 18abcd - 4b^3 d + b^2 c^2 - 4 a c^3 - 27 a^2 d^2
                let t1 = a.checked_mul(b)?.checked_mul(c)?.checked_mul(d)?.checked_mul(18)?;
                let t2 = b.checked_pow(3)?.checked_mul(d)?.checked_mul(4)?;
                let t3 = b.checked_mul(b)?.checked_mul(c)?.checked_mul(c)?;
                let t4 = a.checked_mul(c.checked_pow(3)?)?.checked_mul(4)?;
                let t5 = a.checked_mul(a)?.checked_mul(d)?.checked_mul(d)?.checked_mul(27)?;
                t1.checked_sub(t2)?
                    .checked_add(t3)?
                    .checked_sub(t4)?
                    .checked_sub(t5)
            }
            _ => None,
        }
    }

    /// Cauchy bound on the modulus of every root.
    fn root_bound(&self) -> f64 {
        let lead = *self.coeffs.last().unwrap() as f64;
        1.0 + self.coeffs[..self.degree()]
            .iter()
            .map(|&c| (c as f64 / lead).abs())
            .fold(0.0, f64::max)
    }

    /// All real roots in ascending order, assuming they are real and simple.
    ///
    /// Critical points (roots of the derivative, found recursively) split the
    /// line into monotone pieces; each piece must show a sign change.
    pub fn real_roots(&self) -> Result<Vec<f64>> {
        let deg = self.degree();
        if deg == 0 {
            return Ok(Vec::new());
        }
        if let Some(disc) = self.discriminant() {
            if disc <= 0 {
                return Err(Error::ComplexSpectrum);
            }
        }
        let bound = self.root_bound();
        let critical = if deg > 1 { self.derivative().real_roots()? } else { Vec::new() };
        let mut edges = Vec::with_capacity(deg + 1);
        edges.push(-bound);
        edges.extend(critical);
        edges.push(bound);

        let mut roots = Vec::with_capacity(deg);
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let (flo, fhi) = (self.eval(lo), self.eval(hi));
            if flo == 0.0 {
                roots.push(lo);
                continue;
            }
            if flo.signum() == fhi.signum() {
                return Err(Error::ComplexSpectrum);
            }
            roots.push(self.bisect(lo, hi));
        }
        roots.dedup_by(|a, b| (*a - *b).abs() < ROOT_TOLERANCE);
        if roots.len() != deg {
            return Err(Error::ComplexSpectrum);
        }
        Ok(roots)
    }

    fn bisect(&self, mut lo: f64, mut hi: f64) -> f64 {
        let lo_sign = self.eval(lo).signum();
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = self.eval(mid);
            if fm == 0.0 {
                return mid;
            }
            if fm.signum() == lo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}
