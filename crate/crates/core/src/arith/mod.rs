//! Exact rationals, p-adic valuations and norms, digit expansions.

mod place;
mod rational;
mod scaled;

pub use place::{is_prime, Place, PrimeContext};
pub use rational::Rational;
pub use scaled::PScaled;

pub(crate) use rational::ln_bigint;

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// `v_p(q)`: finite for nonzero `q`, `Infinite` for zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

/// Removes every factor `p` from a nonzero integer: `n = p^v · rest`.
pub(crate) fn strip_prime(n: &BigInt, p: u64) -> (u64, BigInt) {
    debug_assert!(!n.is_zero());
    if p == 2 {
        let v = n.trailing_zeros().unwrap_or(0);
        return (v, n >> v as usize);
    }
    let bp = BigInt::from(p);
    let mut v = 0u64;
    let mut rest = n.clone();
    loop {
        let (q, r) = rest.div_rem(&bp);
        if !r.is_zero() {
            return (v, rest);
        }
        rest = q;
        v += 1;
    }
}

pub(crate) fn int_valuation(n: &BigInt, p: u64) -> u64 {
    if p == 2 {
        return n.trailing_zeros().unwrap_or(0);
    }
    let bp = BigInt::from(p);
    let mut v = 0u64;
    let mut rest = n.clone();
    loop {
        let (q, r) = rest.div_rem(&bp);
        if !r.is_zero() {
            return v;
        }
        rest = q;
        v += 1;
    }
}

pub fn valuation(q: &Rational, p: u64) -> Valuation {
    if q.is_zero() {
        return Valuation::Infinite;
    }
    let vn = int_valuation(q.numer(), p) as i64;
    let vd = int_valuation(q.denom(), p) as i64;
    Valuation::Finite(vn - vd)
}

/// `|q|_place` as an exact rational: `p^{-v_p(q)}` or the absolute value.
pub fn pnorm(q: &Rational, place: Place) -> Rational {
    match place {
        Place::Infinity => q.abs(),
        Place::Prime(p) => match valuation(q, p) {
            Valuation::Infinite => Rational::zero(),
            Valuation::Finite(v) => Rational::power_of(p, -v),
        },
    }
}

/// `ln |q|_place`, `-inf` for zero.
pub fn ln_norm(q: &Rational, place: Place) -> f64 {
    match place {
        Place::Infinity => q.ln_abs(),
        Place::Prime(p) => match valuation(q, p) {
            Valuation::Infinite => f64::NEG_INFINITY,
            Valuation::Finite(v) => -(v as f64) * libm::log(p as f64),
        },
    }
}

/// `ln⁺ |q|_place = max(0, ln |q|_place)`, with `ln⁺ 0 = 0`.
pub fn ln_plus_norm(q: &Rational, place: Place) -> f64 {
    let l = ln_norm(q, place);
    if l > 0.0 {
        l
    } else {
        0.0
    }
}

/// Strips all primes of `ctx` from `n`, returning the cofactor.
fn p_free_part(n: &BigInt, ctx: &PrimeContext) -> BigInt {
    let mut rest = n.abs();
    for &p in ctx.primes() {
        if rest.is_one() {
            break;
        }
        rest = strip_prime(&rest, p).1;
    }
    rest
}

/// Membership in `Z(P)`: every prime of the denominator lies in `P`.
pub fn in_zp(q: &Rational, ctx: &PrimeContext) -> bool {
    p_free_part(q.denom(), ctx).is_one()
}

/// Membership in the unit group `(P) = ±∏ p^{k_p}`.
pub fn is_p_unit(a: &Rational, ctx: &PrimeContext) -> bool {
    !a.is_zero() && p_free_part(a.numer(), ctx).is_one() && p_free_part(a.denom(), ctx).is_one()
}

/// Both sides of `|a|_∞ = ∏_{p∈P} |a|_p^{-1}` for `a ∈ (P)`.
pub fn product_formula_sides(a: &Rational, ctx: &PrimeContext) -> Result<(Rational, Rational)> {
    if !is_p_unit(a, ctx) {
        return Err(Error::domain(format!("{a} is not a unit of ({ctx})")));
    }
    let real = pnorm(a, Place::Infinity);
    let adelic = ctx
        .primes()
        .iter()
        .map(|&p| pnorm(a, Place::Prime(p)).recip().expect("unit has finite norm"))
        .fold(Rational::one(), |acc, x| acc * x);
    Ok((real, adelic))
}

/// A finite stretch of a p-adic expansion: `digits[i]` is the coefficient of
/// `p^(start_exponent + i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DigitWindow {
    pub prime: u64,
    pub start_exponent: i64,
    pub digits: Vec<u64>,
}

impl DigitWindow {
    /// `Σ digits[i] · p^(start + i)`.
    pub fn value(&self) -> Rational {
        let p = BigInt::from(self.prime);
        let mut acc = BigInt::zero();
        for d in self.digits.iter().rev() {
            acc = acc * &p + BigInt::from(*d);
        }
        Rational::from_integer(acc) * Rational::power_of(self.prime, self.start_exponent)
    }

    /// One past the highest exponent covered.
    pub fn end_exponent(&self) -> i64 {
        self.start_exponent + self.digits.len() as i64
    }
}

impl fmt::Display for DigitWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:", self.prime, self.start_exponent)?;
        for (i, d) in self.digits.iter().enumerate() {
            if i > 0 && self.prime > 10 {
                f.write_str(".")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// `a⁻¹ mod m` for `gcd(a, m) = 1`, in `[0, m)`.
fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let e = a.mod_floor(m).extended_gcd(m);
    debug_assert!(e.gcd.is_one());
    e.x.mod_floor(m)
}

/// For nonzero `q` with `v = v_p(q)`, returns `q·p^{-v} mod p^k` in `[0, p^k)`.
fn unit_residue(q: &Rational, p: u64, k: u64) -> BigInt {
    let (_, n) = strip_prime(q.numer(), p);
    let (_, d) = strip_prime(q.denom(), p);
    let modulus = num_traits::pow(BigInt::from(p), k as usize);
    if d.is_one() {
        return n.mod_floor(&modulus);
    }
    (n.mod_floor(&modulus) * mod_inverse(&d, &modulus)).mod_floor(&modulus)
}

fn base_p_digits(mut c: BigInt, p: u64, count: usize) -> Vec<u64> {
    let bp = BigInt::from(p);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let (q, r) = c.div_rem(&bp);
        out.push(r.to_u64().expect("digit fits"));
        c = q;
    }
    out
}

/// The first `count` p-adic digits of `q`, starting at exponent `v_p(q)`.
/// Zero yields `count` zero digits starting at exponent 0.
pub fn padic_digits(q: &Rational, p: u64, count: usize) -> DigitWindow {
    assert!(count >= 1, "digit count must be positive");
    match valuation(q, p) {
        Valuation::Infinite => DigitWindow {
            prime: p,
            start_exponent: 0,
            digits: alloc::vec![0; count],
        },
        Valuation::Finite(v) => {
            let c = unit_residue(q, p, count as u64);
            DigitWindow {
                prime: p,
                start_exponent: v,
                digits: base_p_digits(c, p, count),
            }
        }
    }
}

/// The part of the p-adic expansion of `q` below exponent `t`:
/// `Σ_{i<t} d_i p^i`. Two rationals share a truncation iff
/// `v_p(x - y) >= t`, i.e. they lie in the same disc of radius `p^{-t}`.
pub fn padic_truncate(q: &Rational, p: u64, t: i64) -> Rational {
    let v = match valuation(q, p) {
        Valuation::Infinite => return Rational::zero(),
        Valuation::Finite(v) => v,
    };
    if v >= t {
        return Rational::zero();
    }
    let c = unit_residue(q, p, (t - v) as u64);
    Rational::from_integer(c) * Rational::power_of(p, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(&q("12"), 2), Valuation::Finite(2));
        assert_eq!(valuation(&q("5/8"), 2), Valuation::Finite(-3));
        assert_eq!(valuation(&q("0"), 7), Valuation::Infinite);
        assert_eq!(valuation(&q("-45/14"), 3), Valuation::Finite(2));
    }

    #[test]
    fn pnorm_examples() {
        assert_eq!(pnorm(&q("12"), Place::Prime(2)), q("1/4"));
        assert_eq!(pnorm(&q("-12/5"), Place::Infinity), q("12/5"));
        assert_eq!(pnorm(&q("0"), Place::Prime(3)), q("0"));
        assert_eq!(pnorm(&q("0"), Place::Infinity), q("0"));
    }

    #[test]
    fn product_formula_examples() {
        let c23 = PrimeContext::new([2, 3]).unwrap();
        let c235 = PrimeContext::new([2, 3, 5]).unwrap();
        assert_eq!(product_formula_sides(&q("6"), &c23).unwrap(), (q("6"), q("6")));
        assert_eq!(product_formula_sides(&q("1"), &c23).unwrap(), (q("1"), q("1")));
        assert_eq!(
            product_formula_sides(&q("-12/5"), &c235).unwrap(),
            (q("12/5"), q("12/5"))
        );
        assert!(matches!(
            product_formula_sides(&q("10"), &c23),
            Err(Error::Domain(_))
        ));
        assert!(product_formula_sides(&q("0"), &c23).is_err());
    }

    #[test]
    fn zp_membership() {
        let c23 = PrimeContext::new([2, 3]).unwrap();
        assert!(in_zp(&q("7/6"), &c23));
        assert!(!in_zp(&q("1/5"), &c23));
        assert!(in_zp(&q("0"), &PrimeContext::new([2]).unwrap()));
        assert!(is_p_unit(&q("-8/3"), &c23));
        assert!(!is_p_unit(&q("7/6"), &c23));
    }

    #[test]
    fn digit_examples() {
        let w = padic_digits(&q("-1"), 2, 5);
        assert_eq!((w.start_exponent, w.digits.clone()), (0, alloc::vec![1, 1, 1, 1, 1]));
        let w = padic_digits(&q("7/4"), 2, 4);
        assert_eq!((w.start_exponent, w.digits.clone()), (-2, alloc::vec![1, 1, 1, 0]));
        let w = padic_digits(&q("1/3"), 2, 4);
        assert_eq!((w.start_exponent, w.digits.clone()), (0, alloc::vec![1, 1, 0, 1]));
        let w = padic_digits(&q("0"), 5, 3);
        assert_eq!((w.start_exponent, w.digits.clone()), (0, alloc::vec![0, 0, 0]));
    }

    #[test]
    fn truncation_examples() {
        // canonical disc centres along the geodesic towards -1 in Q_2
        assert_eq!(padic_truncate(&q("-1"), 2, 3), q("7"));
        assert_eq!(padic_truncate(&q("-1"), 2, 2), q("3"));
        assert_eq!(padic_truncate(&q("-1"), 2, 1), q("1"));
        assert_eq!(padic_truncate(&q("-1"), 2, 0), q("0"));
        assert_eq!(padic_truncate(&q("7/4"), 2, 0), q("3/4"));
        assert_eq!(padic_truncate(&q("1/2"), 3, 0), q("0"));
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-2000i64..2000, 1i64..500).prop_map(|(n, d)| Rational::from_i64s(n, d))
    }

    fn any_place() -> impl Strategy<Value = Place> {
        prop_oneof![
            Just(Place::Prime(2)),
            Just(Place::Prime(3)),
            Just(Place::Prime(5)),
            Just(Place::Prime(7)),
            Just(Place::Infinity)
        ]
    }

    proptest! {
        #[test]
        fn norm_is_multiplicative(x in small_rational(), y in small_rational(), place in any_place()) {
            prop_assert_eq!(pnorm(&(&x * &y), place), pnorm(&x, place) * pnorm(&y, place));
        }

        #[test]
        fn norm_is_ultrametric(x in small_rational(), y in small_rational(), p in prop_oneof![Just(2u64), Just(3), Just(5)]) {
            let place = Place::Prime(p);
            let (nx, ny) = (pnorm(&x, place), pnorm(&y, place));
            let nsum = pnorm(&(&x + &y), place);
            let m = if nx > ny { nx.clone() } else { ny.clone() };
            prop_assert!(nsum <= m);
            if nx != ny {
                prop_assert_eq!(nsum, m);
            }
        }

        #[test]
        fn digits_reconstruct_modulo_window(x in small_rational(), p in prop_oneof![Just(2u64), Just(3), Just(7)], count in 1usize..12) {
            prop_assume!(!x.is_zero());
            let w = padic_digits(&x, p, count);
            prop_assert!(w.digits.iter().all(|d| *d < p));
            prop_assert!(w.digits[0] != 0);
            let diff = &x - &w.value();
            match valuation(&diff, p) {
                Valuation::Infinite => {}
                Valuation::Finite(v) => prop_assert!(v >= w.end_exponent()),
            }
        }

        #[test]
        fn truncation_identifies_discs(x in small_rational(), y in small_rational(), t in -4i64..6) {
            let p = 2;
            let same = padic_truncate(&x, p, t) == padic_truncate(&y, p, t);
            let close = valuation(&(&x - &y), p) >= Valuation::Finite(t);
            prop_assert_eq!(same, close);
        }
    }
}
