//! Boundary functions built from ball indicators and constants.
//!
//! Textual form: terms `const(c)` and `ball(place, center, r)` joined by
//! `+` or `-`, each optionally prefixed by a rational scalar and `*`.
//! `ball(p, c, r)` is the indicator of `|x - c|_p ≤ p^{-r}`; at `inf` the
//! radius is `2^{-r}`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::arith::{pnorm, Place, Rational};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ball {
    pub place: Place,
    pub center: Rational,
    pub radius_exponent: i64,
}

impl Ball {
    pub fn radius(&self) -> Rational {
        match self.place {
            Place::Prime(p) => Rational::power_of(p, -self.radius_exponent),
            Place::Infinity => Rational::power_of(2, -self.radius_exponent),
        }
    }

    pub fn contains(&self, x: &Rational) -> bool {
        pnorm(&(x - &self.center), self.place) <= self.radius()
    }
}

/// `ψ = constant + Σ coefficient · 1_ball`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoundaryFunction {
    pub constant: Rational,
    pub terms: Vec<(Rational, Ball)>,
}

impl BoundaryFunction {
    pub fn constant(c: Rational) -> Self {
        BoundaryFunction {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn indicator(ball: Ball) -> Self {
        BoundaryFunction {
            constant: Rational::zero(),
            terms: alloc::vec![(Rational::one(), ball)],
        }
    }

    pub fn places(&self) -> BTreeSet<Place> {
        self.terms.iter().map(|(_, b)| b.place).collect()
    }

    /// `ψ(x)` where `x` stands for the same rational in every place.
    pub fn evaluate(&self, x: &Rational) -> Rational {
        self.terms
            .iter()
            .filter(|(_, ball)| ball.contains(x))
            .fold(self.constant.clone(), |acc, (c, _)| &acc + c)
    }
}

impl fmt::Display for BoundaryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "const({})", self.constant)?;
        for (c, b) in &self.terms {
            write!(f, " + {}*ball({},{},{})", c, b.place, b.center, b.radius_exponent)?;
        }
        Ok(())
    }
}

fn split_args(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).collect()
}

fn parse_term(t: &str) -> Result<(Option<Rational>, Option<Ball>)> {
    let t = t.trim();
    let (scalar, body) = match t.find('*') {
        Some(i) => (Some(t[..i].trim().parse::<Rational>()?), t[i + 1..].trim()),
        None => (None, t),
    };
    let bad = || Error::validation(format!("malformed boundary-function term {t:?}"));
    if let Some(inner) = body.strip_prefix("const(").and_then(|r| r.strip_suffix(')')) {
        let c: Rational = inner.trim().parse()?;
        return Ok((Some(scalar.map_or(c.clone(), |s| &s * &c)), None));
    }
    if let Some(inner) = body.strip_prefix("ball(").and_then(|r| r.strip_suffix(')')) {
        let args = split_args(inner);
        if args.len() != 3 {
            return Err(bad());
        }
        let place: Place = args[0].parse()?;
        let center: Rational = args[1].parse()?;
        let radius_exponent: i64 = args[2].parse().map_err(|_| bad())?;
        return Ok((
            scalar,
            Some(Ball {
                place,
                center,
                radius_exponent,
            }),
        ));
    }
    if scalar.is_none() {
        if let Ok(c) = body.parse::<Rational>() {
            return Ok((Some(c), None));
        }
    }
    Err(bad())
}

/// Splits on top-level `+`/`-` (outside parentheses and not part of a
/// scalar's sign).
fn split_terms(s: &str) -> Result<Vec<(bool, String)>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut negative = false;
    for ch in s.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::validation(format!("unbalanced parentheses in {s:?}")));
                }
                cur.push(ch);
            }
            '+' | '-' | '\u{2212}' if depth == 0 && !cur.trim().is_empty() && !cur.trim_end().ends_with('*') => {
                out.push((negative, core::mem::take(&mut cur)));
                negative = ch != '+';
            }
            _ => cur.push(ch),
        }
    }
    if depth != 0 {
        return Err(Error::validation(format!("unbalanced parentheses in {s:?}")));
    }
    if cur.trim().is_empty() {
        return Err(Error::validation(format!("empty term in {s:?}")));
    }
    out.push((negative, cur));
    Ok(out)
}

impl FromStr for BoundaryFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut psi = BoundaryFunction::constant(Rational::zero());
        for (negative, text) in split_terms(s)? {
            let (scalar, ball) = parse_term(&text)?;
            let sign = if negative { -Rational::one() } else { Rational::one() };
            match ball {
                None => {
                    let c = scalar.expect("constant term");
                    psi.constant = &psi.constant + &(&sign * &c);
                }
                Some(b) => {
                    let c = scalar.unwrap_or_else(Rational::one);
                    psi.terms.push((&sign * &c, b));
                }
            }
        }
        Ok(psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_evaluate() {
        let psi: BoundaryFunction = "const(1/2) + 3*ball(2, 0, 1) - ball(inf, 1/2, 1)".parse().unwrap();
        assert_eq!(psi.constant, q("1/2"));
        assert_eq!(psi.terms.len(), 2);
        assert_eq!(psi.terms[1].0, q("-1"));
        // 4 is in 2Z_2 and outside [0,1]
        assert_eq!(psi.evaluate(&q("4")), q("7/2"));
        // 1/2 is a 2-adic non-integer and inside [0,1]
        assert_eq!(psi.evaluate(&q("1/2")), q("-1/2"));
        let again: BoundaryFunction = psi.to_string().parse().unwrap();
        assert_eq!(again, psi);
    }

    #[test]
    fn negative_scalars_and_bare_constants() {
        let psi: BoundaryFunction = "-1/2*ball(3,1,2) + 2".parse().unwrap();
        assert_eq!(psi.constant, q("2"));
        assert_eq!(psi.terms[0].0, q("-1/2"));
        assert_eq!(psi.evaluate(&q("10")), q("3/2"));
        assert_eq!(psi.evaluate(&q("2")), q("2"));
    }

    #[test]
    fn rejects_malformed() {
        for s in ["", "ball(2,0)", "ball(4,0,1)", "const(0.5)", "ball(2,0,1", "foo(1)"] {
            assert!(s.parse::<BoundaryFunction>().is_err(), "{s}");
        }
    }
}
