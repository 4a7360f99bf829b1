use alloc::string::{String, ToString};
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};
use core::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Exact rational number, always stored in lowest terms with a positive
/// denominator. Zero is `0/1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rational {
    num: BigInt,
    den: BigInt,
}

impl Rational {
    /// Builds `num/den` and reduces it. Panics on a zero denominator.
    pub fn new(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let mut r = Rational { num, den };
        r.reduce();
        r
    }

    /// Caller guarantees `gcd(num, den) = 1` and `den > 0`.
    pub(crate) fn from_coprime(num: BigInt, den: BigInt) -> Self {
        debug_assert!(den.is_positive());
        debug_assert!(num.gcd(&den).is_one() || num.is_zero() && den.is_one());
        Rational { num, den }
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational {
            num: n.into(),
            den: BigInt::one(),
        }
    }

    pub fn from_i64s(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    pub fn zero() -> Self {
        Rational::from_integer(0)
    }

    pub fn one() -> Self {
        Rational::from_integer(1)
    }

    /// `p^k` for any integer exponent.
    pub fn power_of(p: u64, k: i64) -> Self {
        let base = BigInt::from(p);
        let mag = num_traits::pow(base, k.unsigned_abs() as usize);
        if k >= 0 {
            Rational::from_integer(mag)
        } else {
            Rational::from_coprime(BigInt::one(), mag)
        }
    }

    /// Exact value of a finite `f64`.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Rational::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp - 1075)
        };
        let m = Rational::from_integer(BigInt::from(mant) * sign);
        Some(m * Rational::power_of(2, e))
    }

    fn reduce(&mut self) {
        if self.den.is_negative() {
            self.num = -core::mem::take(&mut self.num);
            self.den = -core::mem::take(&mut self.den);
        }
        if self.num.is_zero() {
            self.den = BigInt::one();
            return;
        }
        if self.den.is_one() {
            return;
        }
        let g = self.num.gcd(&self.den);
        if !g.is_one() {
            self.num /= &g;
            self.den /= &g;
        }
    }

    pub fn numer(&self) -> &BigInt {
        &self.num
    }

    pub fn denom(&self) -> &BigInt {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_positive(&self) -> bool {
        self.num.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn signum(&self) -> i32 {
        match self.num.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Self {
        Rational {
            num: self.num.abs(),
            den: self.den.clone(),
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        if self.num.is_zero() {
            return None;
        }
        let (num, den) = if self.num.is_negative() {
            (-self.den.clone(), -self.num.clone())
        } else {
            (self.den.clone(), self.num.clone())
        };
        Some(Rational { num, den })
    }

    pub fn floor(&self) -> BigInt {
        self.num.div_floor(&self.den)
    }

    pub fn ceil(&self) -> BigInt {
        -((-&self.num).div_floor(&self.den))
    }

    /// Total bit length of numerator and denominator.
    pub fn bits(&self) -> u64 {
        self.num.bits() + self.den.bits()
    }

    /// Nearest `f64` (up to two roundings); saturates to infinity.
    pub fn to_f64(&self) -> f64 {
        if self.num.is_zero() {
            return 0.0;
        }
        let nb = self.num.bits() as i64;
        let db = self.den.bits() as i64;
        let shift = 64 + db - nb;
        let q = if shift >= 0 {
            (self.num.abs() << (shift as usize)) / &self.den
        } else {
            self.num.abs() / (&self.den << ((-shift) as usize))
        };
        let mag = q.to_f64().unwrap_or(f64::INFINITY);
        let clamped = shift.clamp(-4000, 4000) as i32;
        let v = libm::ldexp(mag, -clamped);
        if self.num.is_negative() {
            -v
        } else {
            v
        }
    }

    /// Natural logarithm of `|self|`; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.num.is_zero() {
            return f64::NEG_INFINITY;
        }
        ln_bigint(&self.num) - ln_bigint(&self.den)
    }
}

/// `ln |n|` for a nonzero integer of any size.
pub(crate) fn ln_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return libm::log(n.abs().to_f64().unwrap_or(f64::INFINITY));
    }
    let drop = bits - 64;
    let top = (n.abs() >> drop as usize).to_f64().unwrap_or(f64::INFINITY);
    libm::log(top) + drop as f64 * core::f64::consts::LN_2
}

impl Default for Rational {
    fn default() -> Self {
        Rational::zero()
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational::from_integer(n)
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.den == other.den {
            return self.num.cmp(&other.num);
        }
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Add<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn add(self, rhs: &'a Rational) -> Rational {
        if self.den == rhs.den {
            return Rational::new(&self.num + &rhs.num, self.den.clone());
        }
        Rational::new(
            &self.num * &rhs.den + &rhs.num * &self.den,
            &self.den * &rhs.den,
        )
    }
}

impl<'a> Sub<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn sub(self, rhs: &'a Rational) -> Rational {
        if self.den == rhs.den {
            return Rational::new(&self.num - &rhs.num, self.den.clone());
        }
        Rational::new(
            &self.num * &rhs.den - &rhs.num * &self.den,
            &self.den * &rhs.den,
        )
    }
}

impl<'a> Mul<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn mul(self, rhs: &'a Rational) -> Rational {
        // cross-reduce first so the products stay small
        let g1 = self.num.gcd(&rhs.den);
        let g2 = rhs.num.gcd(&self.den);
        let (n1, d2) = if g1.is_one() || g1.is_zero() {
            (self.num.clone(), rhs.den.clone())
        } else {
            (&self.num / &g1, &rhs.den / &g1)
        };
        let (n2, d1) = if g2.is_one() || g2.is_zero() {
            (rhs.num.clone(), self.den.clone())
        } else {
            (&rhs.num / &g2, &self.den / &g2)
        };
        let num = n1 * n2;
        if num.is_zero() {
            return Rational::zero();
        }
        Rational::from_coprime(num, d1 * d2)
    }
}

impl<'a> Div<&'a Rational> for &'a Rational {
    type Output = Rational;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &'a Rational) -> Rational {
        let inv = rhs.recip().expect("division by zero");
        self * &inv
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: &'a Rational) -> Rational {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<Rational> for &'a Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational {
            num: -self.num,
            den: self.den,
        }
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl core::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `n` or `n/d` with an optional sign on the numerator. Both the
    /// ASCII hyphen and U+2212 are accepted as minus signs.
    fn from_str(s: &str) -> Result<Self, Error> {
        let t = s.trim();
        let normalized: String = t.replace('\u{2212}', "-");
        let bad = || Error::validation(alloc::format!("not a rational: {:?}", s));
        let (n, d) = match normalized.split_once('/') {
            Some((n, d)) => (n.trim().to_string(), Some(d.trim().to_string())),
            None => (normalized.clone(), None),
        };
        let digits_ok = |x: &str, signed: bool| {
            let body = if signed {
                x.strip_prefix('-').or_else(|| x.strip_prefix('+')).unwrap_or(x)
            } else {
                x
            };
            !body.is_empty() && body.bytes().all(|c| c.is_ascii_digit())
        };
        if !digits_ok(&n, true) {
            return Err(bad());
        }
        let num: BigInt = n.trim_start_matches('+').parse().map_err(|_| bad())?;
        let den: BigInt = match d {
            Some(d) => {
                if !digits_ok(&d, false) {
                    return Err(bad());
                }
                d.parse().map_err(|_| bad())?
            }
            None => BigInt::one(),
        };
        if den.is_zero() {
            return Err(Error::validation(alloc::format!("zero denominator in {:?}", s)));
        }
        Ok(Rational::new(num, den))
    }
}
