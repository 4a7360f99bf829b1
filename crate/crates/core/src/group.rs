//! The group `Aff(P) = (P) ⋉ Z(P)` of maps `x ↦ ax + b` and its actions on
//! the rationals, the hyperbolic half-plane and the trees `T_p`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::arith::{in_zp, is_p_unit, padic_truncate, pnorm, strip_prime, valuation, Place, PrimeContext, Rational, Valuation};
use crate::error::{Error, Result};

/// An affine map `x ↦ a·x + b` with `a ∈ (P)` and `b ∈ Z(P)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    a: Rational,
    b: Rational,
}

impl GroupElement {
    /// Validated constructor.
    pub fn new(a: Rational, b: Rational, ctx: &PrimeContext) -> Result<Self> {
        if !is_p_unit(&a, ctx) {
            return Err(Error::domain(format!(
                "linear coefficient {a} is not in ({ctx})"
            )));
        }
        if !in_zp(&b, ctx) {
            return Err(Error::domain(format!("translation {b} is not in Z({ctx})")));
        }
        Ok(GroupElement { a, b })
    }

    /// Skips membership checks; `a` must still be nonzero.
    pub fn from_parts(a: Rational, b: Rational) -> Self {
        assert!(!a.is_zero(), "affine map with a = 0");
        GroupElement { a, b }
    }

    pub fn identity() -> Self {
        GroupElement {
            a: Rational::one(),
            b: Rational::zero(),
        }
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn is_identity(&self) -> bool {
        self.a == Rational::one() && self.b.is_zero()
    }

    /// Membership check against a context.
    pub fn belongs_to(&self, ctx: &PrimeContext) -> bool {
        is_p_unit(&self.a, ctx) && in_zp(&self.b, ctx)
    }

    /// `(a,b)(a',b') = (aa', ab' + b)`.
    pub fn multiply(&self, h: &GroupElement) -> GroupElement {
        GroupElement {
            a: &self.a * &h.a,
            b: &(&self.a * &h.b) + &self.b,
        }
    }

    /// `(1/a, -b/a)`.
    pub fn inverse(&self) -> GroupElement {
        let inv = self.a.recip().expect("a is nonzero");
        let b = -(&self.b * &inv);
        GroupElement { a: inv, b }
    }

    pub fn act_rational(&self, x: &Rational) -> Rational {
        &(&self.a * x) + &self.b
    }

    /// `(a,b)·(x,y) = (|a|x, ay + b)`.
    pub fn act_halfplane(&self, pt: &HalfPlanePoint) -> HalfPlanePoint {
        HalfPlanePoint {
            x: &self.a.abs() * &pt.x,
            y: self.act_rational(&pt.y),
        }
    }

    /// `(a,b)·D^p(k,z) = D^p(k - v_p(a), az + b)`.
    pub fn act_tree(&self, v: &TreeVertex) -> TreeVertex {
        let va = valuation(&self.a, v.prime).finite().expect("a is nonzero");
        TreeVertex::new(v.prime, v.level - va, &self.act_rational(&v.center))
    }

    /// Image of the origin `o = ((1,0), (D^p(0,0))_p)`.
    pub fn embed_orbit(&self, ctx: &PrimeContext) -> OrbitPoint {
        let tree_vertices = ctx
            .primes()
            .iter()
            .map(|&p| {
                let va = valuation(&self.a, p).finite().expect("a is nonzero");
                (p, TreeVertex::new(p, -va, &self.b))
            })
            .collect();
        OrbitPoint {
            half_plane: HalfPlanePoint {
                x: self.a.abs(),
                y: self.b.clone(),
            },
            tree_vertices,
        }
    }

    /// Parses `"(a,b)"` and validates it against `ctx`.
    pub fn parse(s: &str, ctx: &PrimeContext) -> Result<Self> {
        let (a, b) = parse_pair(s)?;
        GroupElement::new(a, b, ctx)
    }
}

/// Parses the textual form `"(a,b)"` without group validation.
pub fn parse_pair(s: &str) -> Result<(Rational, Rational)> {
    let t = s.trim();
    let inner = t
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::validation(format!("expected (a,b), got {s:?}")))?;
    let (a, b) = inner
        .split_once(',')
        .ok_or_else(|| Error::validation(format!("expected (a,b), got {s:?}")))?;
    let a: Rational = a.parse()?;
    let b: Rational = b.parse()?;
    if a.is_zero() {
        return Err(Error::domain(format!("linear coefficient of {s:?} is zero")));
    }
    Ok((a, b))
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `a = sign · ∏ p^{k_p}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UnitDecomposition {
    pub negative: bool,
    /// `(p, k_p)` for every prime of the context, in order.
    pub exponents: Vec<(u64, i64)>,
}

impl UnitDecomposition {
    pub fn sign(&self) -> i8 {
        if self.negative {
            -1
        } else {
            1
        }
    }

    pub fn exponent(&self, p: u64) -> Option<i64> {
        self.exponents.iter().find(|(q, _)| *q == p).map(|(_, k)| *k)
    }

    pub fn exponent_vec(&self) -> Vec<i64> {
        self.exponents.iter().map(|(_, k)| *k).collect()
    }

    pub fn reconstruct(&self) -> Rational {
        let mag = self
            .exponents
            .iter()
            .fold(Rational::one(), |acc, &(p, k)| acc * Rational::power_of(p, k));
        if self.negative {
            -mag
        } else {
            mag
        }
    }
}

/// Factors `a ∈ (P)` into sign and prime exponents.
pub fn unit_decompose(a: &Rational, ctx: &PrimeContext) -> Result<UnitDecomposition> {
    if a.is_zero() {
        return Err(Error::domain("0 is not a unit"));
    }
    let mut num = a.numer().clone();
    let mut den = a.denom().clone();
    let negative = a.is_negative();
    if negative {
        num = -num;
    }
    let mut exponents = Vec::with_capacity(ctx.len());
    for &p in ctx.primes() {
        let (vn, n) = strip_prime(&num, p);
        let (vd, d) = strip_prime(&den, p);
        num = n;
        den = d;
        exponents.push((p, vn as i64 - vd as i64));
    }
    if num != num_bigint::BigInt::from(1) || den != num_bigint::BigInt::from(1) {
        return Err(Error::domain(format!("{a} is not a unit of ({ctx})")));
    }
    Ok(UnitDecomposition {
        negative,
        exponents,
    })
}

/// A point `(x, y)` of the upper half-plane model with `x > 0` the height.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HalfPlanePoint {
    pub x: Rational,
    pub y: Rational,
}

impl HalfPlanePoint {
    pub fn new(x: Rational, y: Rational) -> Result<Self> {
        if !x.is_positive() {
            return Err(Error::domain(format!("half-plane height {x} is not positive")));
        }
        Ok(HalfPlanePoint { x, y })
    }

    pub fn origin() -> Self {
        HalfPlanePoint {
            x: Rational::one(),
            y: Rational::zero(),
        }
    }
}

/// The disc `D^p(k, z) = {x ∈ Q_p : |x - z|_p ≤ p^k}`, a vertex of `T_p`.
/// The centre is canonical: its digits at exponents `≥ -k` are zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeVertex {
    prime: u64,
    level: i64,
    center: Rational,
}

impl TreeVertex {
    pub fn new(prime: u64, level: i64, z: &Rational) -> Self {
        TreeVertex {
            prime,
            level,
            center: padic_truncate(z, prime, -level),
        }
    }

    pub fn root(prime: u64) -> Self {
        TreeVertex {
            prime,
            level: 0,
            center: Rational::zero(),
        }
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn center(&self) -> &Rational {
        &self.center
    }

    /// The unique disc of radius `p^{k+1}` containing this one.
    pub fn parent(&self) -> TreeVertex {
        TreeVertex::new(self.prime, self.level + 1, &self.center)
    }

    /// Whether the disc contains the point `x`.
    pub fn contains_point(&self, x: &Rational) -> bool {
        let d = x - &self.center;
        pnorm(&d, Place::Prime(self.prime)) <= Rational::power_of(self.prime, self.level)
    }

    /// Disc containment `other ⊆ self`.
    pub fn contains(&self, other: &TreeVertex) -> bool {
        self.prime == other.prime && other.level <= self.level && self.contains_point(&other.center)
    }

    /// Tree adjacency: one disc is the parent of the other.
    pub fn is_adjacent(&self, other: &TreeVertex) -> bool {
        (self.level == other.level + 1 && self.contains(other))
            || (other.level == self.level + 1 && other.contains(self))
    }

    /// Stable label `"p:k:center"`.
    pub fn label(&self) -> String {
        format!("{}:{}:{}", self.prime, self.level, self.center)
    }
}

impl fmt::Display for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D^{}({},{})", self.prime, self.level, self.center)
    }
}

/// `g·o` in `H × ∏_p T_p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OrbitPoint {
    pub half_plane: HalfPlanePoint,
    pub tree_vertices: BTreeMap<u64, TreeVertex>,
}

impl OrbitPoint {
    pub fn origin(ctx: &PrimeContext) -> Self {
        OrbitPoint {
            half_plane: HalfPlanePoint::origin(),
            tree_vertices: ctx.primes().iter().map(|&p| (p, TreeVertex::root(p))).collect(),
        }
    }
}

/// `v_p(a)` for a known nonzero `a`.
pub(crate) fn unit_valuation(a: &Rational, p: u64) -> i64 {
    match valuation(a, p) {
        Valuation::Finite(v) => v,
        Valuation::Infinite => unreachable!("unit is nonzero"),
    }
}
