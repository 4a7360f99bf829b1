//! Finitely supported probability measures on `Aff(P)` and their drifts.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::{is_prime, valuation, Place, PrimeContext, Rational};
use crate::error::{Error, Result};
use crate::group::{unit_decompose, GroupElement};

/// An atom of a measure as read from input, before validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawAtom {
    pub a: Rational,
    pub b: Rational,
    pub weight: Rational,
}

impl RawAtom {
    pub fn new(a: Rational, b: Rational, weight: Rational) -> Self {
        RawAtom { a, b, weight }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: GroupElement,
    pub weight: Rational,
}

/// A validated probability measure: distinct elements, positive weights
/// summing to exactly one, atoms sorted by `(a, b)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MeasureSpec {
    ctx: PrimeContext,
    atoms: Vec<Atom>,
}

impl MeasureSpec {
    pub fn context(&self) -> &PrimeContext {
        &self.ctx
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Convenience constructor from `((a, b), weight)` strings.
    pub fn parse(atoms: &[(&str, &str)], primes: Option<&[u64]>) -> Result<Self> {
        let raw = atoms
            .iter()
            .map(|(g, w)| {
                let (a, b) = crate::group::parse_pair(g)?;
                Ok(RawAtom::new(a, b, w.parse()?))
            })
            .collect::<Result<Vec<_>>>()?;
        let ctx = primes.map(|p| PrimeContext::new(p.iter().copied())).transpose()?;
        validate_measure(raw, ctx)
    }
}

const TRIAL_DIVISION_LIMIT: u64 = 1 << 20;

/// Primes dividing a nonzero integer, by trial division.
fn prime_factors(n: &BigInt, out: &mut BTreeSet<u64>) -> Result<()> {
    let mut rest = n.clone();
    if rest < BigInt::zero() {
        rest = -rest;
    }
    let mut d = 2u64;
    while !rest.is_one() && d <= TRIAL_DIVISION_LIMIT {
        let bd = BigInt::from(d);
        if (&rest % &bd).is_zero() {
            out.insert(d);
            while (&rest % &bd).is_zero() {
                rest /= &bd;
            }
        }
        if BigInt::from(d) * BigInt::from(d) > rest {
            break;
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if !rest.is_one() {
        match rest.to_u64() {
            Some(r) if is_prime(r) => {
                out.insert(r);
            }
            _ => {
                return Err(Error::validation(format!(
                    "cannot factor {n}; supply the prime set explicitly"
                )))
            }
        }
    }
    Ok(())
}

/// Smallest prime set covering all atoms.
fn infer_primes(raw: &[RawAtom]) -> Result<BTreeSet<u64>> {
    let mut set = BTreeSet::new();
    for atom in raw {
        prime_factors(atom.a.numer(), &mut set)?;
        prime_factors(atom.a.denom(), &mut set)?;
        prime_factors(atom.b.denom(), &mut set)?;
    }
    Ok(set)
}

/// Canonicalises a raw atom list: merges duplicates, checks weights and
/// membership. When `ctx` is `None` the minimal covering prime set is used.
pub fn validate_measure(raw: Vec<RawAtom>, ctx: Option<PrimeContext>) -> Result<MeasureSpec> {
    if raw.is_empty() {
        return Err(Error::validation("measure has no atoms"));
    }
    for (i, atom) in raw.iter().enumerate() {
        if !atom.weight.is_positive() {
            return Err(Error::validation(format!(
                "atom {i} ({},{}) has nonpositive weight {}",
                atom.a, atom.b, atom.weight
            )));
        }
        if atom.a.is_zero() {
            return Err(Error::validation(format!("atom {i} (0,{}) is not invertible", atom.b)));
        }
    }
    let ctx = match ctx {
        Some(c) => c,
        None => {
            let inferred = infer_primes(&raw)?;
            if inferred.is_empty() {
                return Err(Error::validation(
                    "atoms involve no primes; supply the prime set explicitly",
                ));
            }
            PrimeContext::new(inferred)?
        }
    };
    let mut merged: BTreeMap<GroupElement, Rational> = BTreeMap::new();
    for (i, atom) in raw.into_iter().enumerate() {
        let g = GroupElement::new(atom.a.clone(), atom.b.clone(), &ctx).map_err(|e| {
            Error::validation(format!("atom {i} ({},{}) is outside Aff({ctx}): {e}", atom.a, atom.b))
        })?;
        let w = merged.entry(g).or_insert_with(Rational::zero);
        *w = &*w + &atom.weight;
    }
    let total: Rational = merged.values().cloned().sum();
    if total != Rational::one() {
        return Err(Error::validation(format!("weights sum to {total}, not 1")));
    }
    let atoms = merged
        .into_iter()
        .map(|(element, weight)| Atom { element, weight })
        .collect();
    Ok(MeasureSpec { ctx, atoms })
}

/// The image of `μ` under inversion.
pub fn reflect(spec: &MeasureSpec) -> MeasureSpec {
    let mut atoms: Vec<Atom> = spec
        .atoms
        .iter()
        .map(|a| Atom {
            element: a.element.inverse(),
            weight: a.weight.clone(),
        })
        .collect();
    atoms.sort_by(|x, y| x.element.cmp(&y.element));
    MeasureSpec {
        ctx: spec.ctx.clone(),
        atoms,
    }
}

/// Drifts `φ_p = E ln|a|_p` for every place, with the sign classification
/// taken from exact coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftReport {
    /// `e_p = E[v_p(a)]`, so `φ_p = -e_p ln p`.
    pub expected_valuations: BTreeMap<u64, Rational>,
    /// `φ_∞ = Σ_p c_p ln p`, with `c_p` read off the factorisation of `|a|`.
    pub infinity_log_coefficients: BTreeMap<u64, Rational>,
    pub drifts: BTreeMap<Place, f64>,
    /// Places with `φ < 0`.
    pub boundary_places: BTreeSet<Place>,
    /// Places with `φ > 0`.
    pub reflected_boundary_places: BTreeSet<Place>,
    /// Places with `φ = 0`.
    pub centered_places: BTreeSet<Place>,
}

impl DriftReport {
    /// Coefficients of `φ_place` on the basis `{ln p}`.
    pub fn log_coefficients(&self, place: Place) -> BTreeMap<u64, Rational> {
        match place {
            Place::Infinity => self.infinity_log_coefficients.clone(),
            Place::Prime(p) => {
                let mut m: BTreeMap<u64, Rational> =
                    self.expected_valuations.keys().map(|&q| (q, Rational::zero())).collect();
                m.insert(p, -&self.expected_valuations[&p]);
                m
            }
        }
    }

    /// `φ_∞ + Σ_p φ_p` as exact coefficients on `{ln p}`; all zero when the
    /// product formula holds.
    pub fn drift_sum_coefficients(&self) -> BTreeMap<u64, Rational> {
        let mut acc = self.log_coefficients(Place::Infinity);
        for &p in self.expected_valuations.keys() {
            for (q, c) in self.log_coefficients(Place::Prime(p)) {
                let e = acc.entry(q).or_insert_with(Rational::zero);
                *e = &*e + &c;
            }
        }
        acc
    }

    pub fn drift(&self, place: Place) -> f64 {
        self.drifts.get(&place).copied().unwrap_or(0.0)
    }

    /// Exact sign of `φ_place`.
    pub fn sign(&self, place: Place) -> Ordering {
        if self.boundary_places.contains(&place) {
            Ordering::Less
        } else if self.reflected_boundary_places.contains(&place) {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    }

    /// `max |φ_p|` over `P`, optionally including `∞`.
    pub fn max_abs_drift(&self, include_infinity: bool) -> f64 {
        self.drifts
            .iter()
            .filter(|(pl, _)| include_infinity || !pl.is_infinite())
            .map(|(_, d)| d.abs())
            .fold(0.0, f64::max)
    }

    pub fn places(&self) -> impl Iterator<Item = Place> + '_ {
        self.drifts.keys().copied()
    }
}

/// Exact sign of `Σ c_p ln p` for rational `c_p`.
fn sign_of_log_combination(coeffs: &BTreeMap<u64, Rational>) -> Ordering {
    if coeffs.values().all(|c| c.is_zero()) {
        return Ordering::Equal;
    }
    let lcm = coeffs
        .values()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let mut pos = BigInt::one();
    let mut neg = BigInt::one();
    for (&p, c) in coeffs {
        let scaled = (c.numer() * &lcm) / c.denom();
        let e = scaled.to_i64().expect("exponent fits");
        let pw = num_traits::pow(BigInt::from(p), e.unsigned_abs() as usize);
        if e > 0 {
            pos *= pw;
        } else if e < 0 {
            neg *= pw;
        }
    }
    pos.cmp(&neg)
}

pub fn drift_vector(spec: &MeasureSpec) -> DriftReport {
    let ctx = &spec.ctx;
    let mut expected = BTreeMap::new();
    for &p in ctx.primes() {
        let e: Rational = spec
            .atoms
            .iter()
            .map(|atom| {
                let v = valuation(atom.element.a(), p).finite().expect("unit");
                &atom.weight * &Rational::from(v)
            })
            .sum();
        expected.insert(p, e);
    }
    let mut inf_coeffs: BTreeMap<u64, Rational> =
        ctx.primes().iter().map(|&p| (p, Rational::zero())).collect();
    for atom in &spec.atoms {
        let d = unit_decompose(&atom.element.a().abs(), ctx).expect("validated unit");
        for (p, k) in d.exponents {
            let e = inf_coeffs.get_mut(&p).expect("prime in context");
            *e = &*e + &(&atom.weight * &Rational::from(k));
        }
    }

    let mut drifts = BTreeMap::new();
    let mut boundary = BTreeSet::new();
    let mut reflected = BTreeSet::new();
    let mut centered = BTreeSet::new();
    let mut classify = |place: Place, sign: Ordering| match sign {
        Ordering::Less => boundary.insert(place),
        Ordering::Greater => reflected.insert(place),
        Ordering::Equal => centered.insert(place),
    };
    for (&p, e) in &expected {
        let lp = libm::log(p as f64);
        drifts.insert(Place::Prime(p), -e.to_f64() * lp);
        // φ_p = -e_p ln p
        classify(Place::Prime(p), e.signum().cmp(&0).reverse());
    }
    let phi_inf: f64 = inf_coeffs
        .iter()
        .map(|(&p, c)| c.to_f64() * libm::log(p as f64))
        .sum();
    drifts.insert(Place::Infinity, phi_inf);
    classify(Place::Infinity, sign_of_log_combination(&inf_coeffs));

    DriftReport {
        expected_valuations: expected,
        infinity_log_coefficients: inf_coeffs,
        drifts,
        boundary_places: boundary,
        reflected_boundary_places: reflected,
        centered_places: centered,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn validation_examples() {
        let m = MeasureSpec::parse(&[("(2,0)", "1/2"), ("(1/2,0)", "1/2")], None).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.context().primes(), &[2]);

        let m = MeasureSpec::parse(&[("(2,0)", "1/2"), ("(2,0)", "1/2")], None).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.atoms()[0].weight, q("1"));

        let err = MeasureSpec::parse(&[("(1/5,0)", "1")], Some(&[2, 3])).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");

        assert!(MeasureSpec::parse(&[("(2,0)", "1/2"), ("(1/2,0)", "1/3")], None).is_err());
        assert!(MeasureSpec::parse(&[("(2,0)", "3/2"), ("(1/2,0)", "-1/2")], None).is_err());
        assert!(MeasureSpec::parse(&[], None).is_err());
        assert!(MeasureSpec::parse(&[("(1,1)", "1")], None).is_err());
        assert!(MeasureSpec::parse(&[("(1,1)", "1")], Some(&[2])).is_ok());
    }

    #[test]
    fn inferred_primes_cover_translations() {
        let m = MeasureSpec::parse(&[("(2,1/9)", "1")], None).unwrap();
        assert_eq!(m.context().primes(), &[2, 3]);
    }

    #[test]
    fn drift_examples() {
        let sym = MeasureSpec::parse(
            &[("(2,0)", "1/4"), ("(1/2,0)", "1/4"), ("(1,1)", "1/4"), ("(1,-1)", "1/4")],
            Some(&[2]),
        )
        .unwrap();
        let r = drift_vector(&sym);
        assert_eq!(r.expected_valuations[&2], q("0"));
        assert!(r.boundary_places.is_empty() && r.reflected_boundary_places.is_empty());
        assert_eq!(r.centered_places.len(), 2);
        assert_eq!(r.drift(Place::Infinity), 0.0);

        let m = MeasureSpec::parse(&[("(2,0)", "2/3"), ("(1/2,0)", "1/3")], None).unwrap();
        let r = drift_vector(&m);
        let ln2 = core::f64::consts::LN_2;
        assert_eq!(r.expected_valuations[&2], q("1/3"));
        assert!((r.drift(Place::Prime(2)) + ln2 / 3.0).abs() < 1e-12);
        assert!((r.drift(Place::Prime(2)) + 0.2310).abs() < 1e-4);
        assert!((r.drift(Place::Infinity) - ln2 / 3.0).abs() < 1e-12);
        assert_eq!(r.boundary_places, [Place::Prime(2)].into_iter().collect());
        assert_eq!(r.reflected_boundary_places, [Place::Infinity].into_iter().collect());

        let m = MeasureSpec::parse(&[("(2/3,0)", "1/2"), ("(3,1)", "1/2")], None).unwrap();
        let r = drift_vector(&m);
        assert_eq!(r.expected_valuations[&2], q("1/2"));
        assert_eq!(r.expected_valuations[&3], q("0"));
        assert!((r.drift(Place::Prime(2)) + ln2 / 2.0).abs() < 1e-12);
        assert_eq!(r.drift(Place::Prime(3)), 0.0);
        assert!((r.drift(Place::Infinity) - ln2 / 2.0).abs() < 1e-12);
        assert_eq!(r.boundary_places, [Place::Prime(2)].into_iter().collect());
        assert!(r.centered_places.contains(&Place::Prime(3)));
    }

    #[test]
    fn infinity_sign_is_exact() {
        // E ln|a| = (1/2)(ln 8 - ln 9)... slightly negative: 8/9 < 1
        let m = MeasureSpec::parse(&[("(8,0)", "1/2"), ("(1/9,0)", "1/2")], None).unwrap();
        let r = drift_vector(&m);
        assert_eq!(r.sign(Place::Infinity), Ordering::Less);
        assert_eq!(r.sign(Place::Prime(2)), Ordering::Less);
        assert_eq!(r.sign(Place::Prime(3)), Ordering::Greater);
    }

    #[test]
    fn reflection_examples() {
        let m = MeasureSpec::parse(&[("(2,1)", "1")], None).unwrap();
        let r = reflect(&m);
        assert_eq!(r.atoms()[0].element, GroupElement::from_parts(q("1/2"), q("-1/2")));
        assert_eq!(reflect(&r), m);
        let sym = MeasureSpec::parse(&[("(2,1)", "1/2"), ("(1/2,-1/2)", "1/2")], None).unwrap();
        assert_eq!(reflect(&sym), sym);
    }

    fn random_measure() -> impl Strategy<Value = MeasureSpec> {
        proptest::collection::vec(((-3i64..4, -2i64..3, any::<bool>()), -9i64..10, 1i64..6), 1..6).prop_map(|atoms| {
            let total: i64 = atoms.iter().map(|a| a.2).sum();
            let raw = atoms
                .into_iter()
                .map(|((k2, k3, neg), b, w)| {
                    let a = Rational::power_of(2, k2) * Rational::power_of(3, k3);
                    RawAtom::new(if neg { -a } else { a }, Rational::from(b), Rational::from_i64s(w, total))
                })
                .collect();
            validate_measure(raw, Some(PrimeContext::new([2, 3]).unwrap())).unwrap()
        })
    }

    proptest! {
        #[test]
        fn drift_identity_and_reflection(m in random_measure(), perm_seed in any::<u64>()) {
            let r = drift_vector(&m);
            prop_assert!(r.drift_sum_coefficients().values().all(|c| c.is_zero()));
            let rr = drift_vector(&reflect(&m));
            for (p, e) in &r.expected_valuations {
                prop_assert_eq!(&rr.expected_valuations[p], &-e);
            }
            prop_assert_eq!(&rr.boundary_places, &r.reflected_boundary_places);
            prop_assert_eq!(&rr.reflected_boundary_places, &r.boundary_places);

            // permuting the raw atoms leaves the report unchanged
            let mut raw: Vec<RawAtom> = m.atoms().iter().map(|a| RawAtom::new(a.element.a().clone(), a.element.b().clone(), a.weight.clone())).collect();
            let n = raw.len();
            let mut s = perm_seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                raw.swap(i, (s >> 33) as usize % (i + 1));
            }
            let m2 = validate_measure(raw, Some(m.context().clone())).unwrap();
            prop_assert_eq!(drift_vector(&m2), r);
        }
    }
}
