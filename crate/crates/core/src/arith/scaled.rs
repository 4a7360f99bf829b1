use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{ln_bigint, strip_prime, PrimeContext, Rational};
use crate::error::{Error, Result};

/// An element of `Z(P)` in the form `mantissa · ∏ p_i^{exps[i]}`, with the
/// mantissa coprime to every prime of the context (zero is `0` with all
/// exponents zero). Sums and products by units never need a gcd, which
/// keeps long walks linear in the operand size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PScaled {
    mantissa: BigInt,
    exps: Vec<i64>,
}

fn prime_pow(p: u64, k: u64) -> BigInt {
    if p == 2 {
        return BigInt::one() << k as usize;
    }
    num_traits::pow(BigInt::from(p), k as usize)
}

impl PScaled {
    pub fn zero(ctx: &PrimeContext) -> Self {
        PScaled {
            mantissa: BigInt::zero(),
            exps: vec![0; ctx.len()],
        }
    }

    pub fn from_rational(q: &Rational, ctx: &PrimeContext) -> Result<Self> {
        if q.is_zero() {
            return Ok(PScaled::zero(ctx));
        }
        let mut num = q.numer().clone();
        let mut den = q.denom().clone();
        let mut exps = Vec::with_capacity(ctx.len());
        for &p in ctx.primes() {
            let (vn, n) = strip_prime(&num, p);
            let (vd, d) = strip_prime(&den, p);
            num = n;
            den = d;
            exps.push(vn as i64 - vd as i64);
        }
        if !den.is_one() {
            return Err(Error::domain(format!("{q} is not in Z({ctx})")));
        }
        Ok(PScaled {
            mantissa: num,
            exps,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponents(&self) -> &[i64] {
        &self.exps
    }

    /// `v_p` for the `i`-th prime; `None` for zero.
    pub fn valuation_at(&self, i: usize) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exps[i])
        }
    }

    pub fn to_rational(&self, ctx: &PrimeContext) -> Rational {
        if self.is_zero() {
            return Rational::zero();
        }
        let mut num = self.mantissa.clone();
        let mut den = BigInt::one();
        for (&p, &e) in ctx.primes().iter().zip(&self.exps) {
            if e > 0 {
                num *= prime_pow(p, e as u64);
            } else if e < 0 {
                den *= prime_pow(p, (-e) as u64);
            }
        }
        Rational::from_coprime(num, den)
    }

    /// Multiplies by the unit `sign · ∏ p_i^{unit_exps[i]}`.
    pub fn mul_unit(&self, negative: bool, unit_exps: &[i64]) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mantissa = if negative {
            -&self.mantissa
        } else {
            self.mantissa.clone()
        };
        let exps = self.exps.iter().zip(unit_exps).map(|(a, b)| a + b).collect();
        PScaled { mantissa, exps }
    }

    pub fn add_assign(&mut self, other: &PScaled, ctx: &PrimeContext) {
        if other.is_zero() {
            return;
        }
        if self.is_zero() {
            *self = other.clone();
            return;
        }
        let mut lhs = core::mem::take(&mut self.mantissa);
        let mut rhs = other.mantissa.clone();
        let mut recheck = Vec::new();
        for (i, &p) in ctx.primes().iter().enumerate() {
            let (es, eo) = (self.exps[i], other.exps[i]);
            match es.cmp(&eo) {
                core::cmp::Ordering::Less => rhs *= prime_pow(p, (eo - es) as u64),
                core::cmp::Ordering::Greater => {
                    lhs *= prime_pow(p, (es - eo) as u64);
                    self.exps[i] = eo;
                }
                // only equal exponents can produce a new factor of p
                core::cmp::Ordering::Equal => recheck.push(i),
            }
        }
        let mut sum = lhs + rhs;
        if sum.is_zero() {
            *self = PScaled::zero(ctx);
            return;
        }
        for i in recheck {
            let (v, rest) = strip_prime(&sum, ctx.primes()[i]);
            if v > 0 {
                sum = rest;
                self.exps[i] += v as i64;
            }
        }
        self.mantissa = sum;
    }

    /// Approximate bit size of the reduced numerator and denominator.
    pub fn bits(&self, ctx: &PrimeContext) -> u64 {
        let mut b = self.mantissa.bits();
        for (&p, &e) in ctx.primes().iter().zip(&self.exps) {
            b += e.unsigned_abs() * (64 - p.leading_zeros() as u64);
        }
        b
    }

    /// `ln |x|` in the real place, `-inf` for zero.
    pub fn ln_abs(&self, ctx: &PrimeContext) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let mut l = ln_bigint(&self.mantissa.abs());
        for (&p, &e) in ctx.primes().iter().zip(&self.exps) {
            l += e as f64 * libm::log(p as f64);
        }
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx() -> PrimeContext {
        PrimeContext::new([2, 3, 5]).unwrap()
    }

    fn zp_value() -> impl Strategy<Value = Rational> {
        (-5000i64..5000, 0u32..6, 0u32..4, 0u32..3).prop_map(|(n, a, b, c)| {
            Rational::from_i64s(n, 2i64.pow(a) * 3i64.pow(b) * 5i64.pow(c))
        })
    }

    #[test]
    fn rejects_foreign_denominators() {
        let q: Rational = "1/7".parse().unwrap();
        assert!(PScaled::from_rational(&q, &ctx()).is_err());
    }

    proptest! {
        #[test]
        fn matches_rational_arithmetic(x in zp_value(), y in zp_value(), k in proptest::collection::vec(-6i64..6, 3), neg in any::<bool>()) {
            let c = ctx();
            let mut sx = PScaled::from_rational(&x, &c).unwrap();
            let sy = PScaled::from_rational(&y, &c).unwrap();
            prop_assert_eq!(sx.to_rational(&c), x.clone());
            let unit = c.primes().iter().zip(&k).fold(Rational::one(), |acc, (&p, &e)| acc * Rational::power_of(p, e));
            let unit = if neg { -unit } else { unit };
            let scaled = sy.mul_unit(neg, &k);
            prop_assert_eq!(scaled.to_rational(&c), &y * &unit);
            sx.add_assign(&scaled, &c);
            prop_assert_eq!(sx.to_rational(&c), &x + &(&y * &unit));
        }
    }
}
