//! Text descriptions of systems and ambient sets.
//!
//! ```text
//! system := base (":inverse" | ":power=" int)*
//! base   := "cat2" | "paper3" [":k0=" int] | "matrix:[" int ("," int)* "]"
//! set    := atom ("+" atom)*
//! atom   := "torus"
//!         | "ball:c=" point ",r=" number
//!         | "orbit:p=" point [",period-detect"]
//!         | "points:[" point ("," point)* "]"
//! point  := "(" number ("," number)* ")"
//! number := integer | decimal | integer "/" integer
//! ```
//!
//! Every error carries the byte offset where parsing failed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::leaf::AmbientSet;
use crate::systems::{PartiallyHyperbolic, ToralAutomorphism};
use crate::torus::TorusPoint;

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            position: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            self.err(format!("expected `{token}`"))
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.rest().is_empty()
    }

    fn peek_is(&mut self, token: &str) -> bool {
        self.skip_ws();
        self.rest().starts_with(token)
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        self.skip_ws();
        let rest = self.rest();
        let end = rest.find(|c: char| !f(c)).unwrap_or(rest.len());
        self.pos += end;
        &rest[..end]
    }

    fn integer(&mut self) -> Result<i64> {
        let start = {
            self.skip_ws();
            self.pos
        };
        let tok = self.take_while(|c| c.is_ascii_digit() || c == '-' || c == '+');
        tok.parse().or_else(|_| {
            self.pos = start;
            self.err("expected an integer")
        })
    }

    fn number(&mut self) -> Result<BigRational> {
        self.skip_ws();
        let start = self.pos;
        let rest = self.rest();
        // signs only lead the number or its exponent, so `r=0.1+orbit:...` splits at `+`
        let mut prev = None;
        let end = rest
            .find(|c: char| {
                let ok = c.is_ascii_digit()
                    || matches!(c, '.' | '/' | 'e' | 'E')
                    || matches!(c, '-' | '+') && matches!(prev, None | Some('e' | 'E' | '/'));
                prev = Some(c);
                !ok
            })
            .unwrap_or(rest.len());
        self.pos += end;
        let tok = &rest[..end];
        parse_rational(tok).ok_or(()).or_else(|_| {
            self.pos = start;
            self.err(format!("invalid number `{tok}`"))
        })
    }

    fn point(&mut self) -> Result<Vec<BigRational>> {
        self.expect("(")?;
        let mut coords = vec![self.number()?];
        while self.eat(",") {
            coords.push(self.number()?);
        }
        self.expect(")")?;
        Ok(coords)
    }
}

/// `3`, `-0.25`, `1e-3`, `2/7` as exact rationals.
fn parse_rational(tok: &str) -> Option<BigRational> {
    if tok.is_empty() {
        return None;
    }
    if let Some((p, q)) = tok.split_once('/') {
        let p: BigInt = p.parse().ok()?;
        let q: BigInt = q.parse().ok()?;
        return (!q.is_zero()).then(|| BigRational::new(p, q));
    }
    let (mantissa, exp) = match tok.find(['e', 'E']) {
        Some(i) => (&tok[..i], tok[i + 1..].parse::<i32>().ok()?),
        None => (tok, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(d) => (true, d),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !(int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())) {
        return None;
    }
    let all: BigInt = format!("{int}{frac}0").parse::<BigInt>().ok()? / 10;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    Some(if neg { -value } else { value })
}

/// A parsed system description.
pub fn parse_system(text: &str) -> Result<PartiallyHyperbolic> {
    let mut c = Cursor::new(text);
    let mut system = if c.eat("cat2") {
        PartiallyHyperbolic::cat2()
    } else if c.eat("paper3") {
        let k0 = if c.eat(":k0=") { c.integer()? } else { 5 };
        PartiallyHyperbolic::paper3(k0)?
    } else if c.eat("matrix:") {
        let start = c.pos;
        c.expect("[")?;
        let mut entries = vec![c.integer()?];
        while c.eat(",") {
            entries.push(c.integer()?);
        }
        c.expect("]")?;
        let map = ToralAutomorphism::from_flat(&entries).or_else(|e| {
            c.pos = start;
            c.err(e.to_string())
        })?;
        PartiallyHyperbolic::new(format!("matrix:{entries:?}").replace(' ', ""), map, crate::LabelRule::Standard)?
    } else {
        return c.err("expected `cat2`, `paper3` or `matrix:[...]`");
    };
    loop {
        if c.eat(":inverse") {
            system = system.inverse()?;
        } else if c.eat(":power=") {
            let at = c.pos;
            let m = c.integer()?;
            if !(1..=16).contains(&m) {
                c.pos = at;
                return c.err("power must be between 1 and 16");
            }
            system = system.power(m as u32);
        } else {
            break;
        }
    }
    if !c.at_end() {
        return c.err("unexpected trailing input");
    }
    Ok(system)
}

fn torus_point(c: &Cursor, at: usize, coords: &[BigRational], dim: Option<usize>) -> Result<TorusPoint> {
    if let Some(d) = dim {
        if coords.len() != d {
            return Err(Error::Parse {
                position: at,
                message: format!("point has {} coordinates, the system has dimension {d}", coords.len()),
            });
        }
    }
    let _ = c;
    TorusPoint::from_rationals(coords)
}

fn parse_atom(c: &mut Cursor, dim: Option<usize>) -> Result<AmbientSet> {
    if c.eat("torus") {
        Ok(AmbientSet::Torus)
    } else if c.eat("ball:") {
        c.expect("c=")?;
        let at = c.pos;
        let center = c.point()?;
        let center = torus_point(c, at, &center, dim)?;
        c.expect(",")?;
        c.expect("r=")?;
        let at = c.pos;
        let r = c.number()?;
        let radius = num_traits::ToPrimitive::to_f64(&r).unwrap_or(f64::NAN);
        if !(radius > 0.0 && radius <= 0.5) {
            c.pos = at;
            return c.err("radius must lie in (0, 0.5]");
        }
        Ok(AmbientSet::Ball { center, radius })
    } else if c.eat("orbit:") {
        c.expect("p=")?;
        let at = c.pos;
        let p = c.point()?;
        let point = torus_point(c, at, &p, dim)?;
        if c.peek_is(",") {
            c.expect(",")?;
            c.expect("period-detect")?;
        }
        Ok(AmbientSet::Orbit { point })
    } else if c.eat("points:") {
        c.expect("[")?;
        let mut points = Vec::new();
        if !c.peek_is("]") {
            loop {
                let at = c.pos;
                let p = c.point()?;
                points.push(torus_point(c, at, &p, dim)?);
                if !c.eat(",") {
                    break;
                }
            }
        }
        c.expect("]")?;
        Ok(AmbientSet::Points { points })
    } else {
        c.err("expected `torus`, `ball:`, `orbit:` or `points:`")
    }
}

/// A parsed set description; `dim` checks point dimensions when given.
pub fn parse_set(text: &str, dim: Option<usize>) -> Result<AmbientSet> {
    let mut c = Cursor::new(text);
    let mut atoms = vec![parse_atom(&mut c, dim)?];
    while c.eat("+") {
        atoms.push(parse_atom(&mut c, dim)?);
    }
    if !c.at_end() {
        return c.err("unexpected trailing input");
    }
    Ok(if atoms.len() == 1 {
        atoms.pop().unwrap()
    } else {
        AmbientSet::Union { sets: atoms }
    })
}

/// Components of a union, or the set itself.
pub fn components(set: &AmbientSet) -> Vec<AmbientSet> {
    match set {
        AmbientSet::Union { sets } => sets.clone(),
        other => vec![other.clone()],
    }
}
