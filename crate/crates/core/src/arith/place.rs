use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// A completion of the rationals: a prime `p` (the field `Q_p`) or the real
/// place `∞`. Primes sort before infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Place {
    Prime(u64),
    Infinity,
}

impl Place {
    pub fn prime(p: u64) -> Result<Place> {
        if is_prime(p) {
            Ok(Place::Prime(p))
        } else {
            Err(Error::validation(format!("{p} is not prime")))
        }
    }

    pub fn as_prime(self) -> Option<u64> {
        match self {
            Place::Prime(p) => Some(p),
            Place::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Place::Infinity)
    }

    /// `ln p`, or `None` at infinity.
    pub fn ln_prime(self) -> Option<f64> {
        self.as_prime().map(|p| libm::log(p as f64))
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Prime(p) => write!(f, "{p}"),
            Place::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Place {
    type Err = Error;

    fn from_str(s: &str) -> Result<Place> {
        match s.trim() {
            "inf" | "infinity" | "\u{221e}" | "oo" => Ok(Place::Infinity),
            t => {
                let p: u64 = t
                    .parse()
                    .map_err(|_| Error::validation(format!("not a place: {s:?}")))?;
                Place::prime(p)
            }
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// The finite set `P` of primes that generate the group.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrimeContext {
    primes: Vec<u64>,
}

impl PrimeContext {
    /// Sorts and validates; rejects empty sets, duplicates and non-primes.
    pub fn new(primes: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut v: Vec<u64> = primes.into_iter().collect();
        if v.is_empty() {
            return Err(Error::validation("prime set must be nonempty"));
        }
        v.sort_unstable();
        for w in v.windows(2) {
            if w[0] == w[1] {
                return Err(Error::validation(format!("duplicate prime {}", w[0])));
            }
        }
        if let Some(p) = v.iter().find(|p| !is_prime(**p)) {
            return Err(Error::validation(format!("{p} is not prime")));
        }
        Ok(PrimeContext { primes: v })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn contains(&self, p: u64) -> bool {
        self.primes.binary_search(&p).is_ok()
    }

    pub fn index_of(&self, p: u64) -> Option<usize> {
        self.primes.binary_search(&p).ok()
    }

    /// All places of `P̄ = P ∪ {∞}` in order.
    pub fn places(&self) -> impl Iterator<Item = Place> + '_ {
        self.primes
            .iter()
            .map(|&p| Place::Prime(p))
            .chain(core::iter::once(Place::Infinity))
    }

    /// True when `place` is `∞` or a prime of this context.
    pub fn has_place(&self, place: Place) -> bool {
        match place {
            Place::Infinity => true,
            Place::Prime(p) => self.contains(p),
        }
    }
}

impl fmt::Display for PrimeContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.primes.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("}")
    }
}
