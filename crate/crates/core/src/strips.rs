//! Cones, strips and the window sets used to bound strip sizes.
//!
//! A strip `S(ž, z)` is the set of `(a, b)` with `|z_p - b|_p ≤ |a|_p` at
//! every place of nonzero drift, using `z_p` for contracting places and
//! `ž_p` for expanding ones. For a fixed `a` the admissible `b` form an
//! arithmetic progression cut by a real interval, which is how everything
//! here is enumerated and counted.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{padic_truncate, pnorm, valuation, Place, PrimeContext, Rational};
use crate::error::{Error, Result};
use crate::group::{unit_decompose, unit_valuation, GroupElement};
use crate::measure::{drift_vector, DriftReport, MeasureSpec};
use crate::stats::ols;
use crate::walk::{run_bilateral, Lane, WalkSeed, Walker};

/// Default cap on the number of unit values a window may contain.
pub const DEFAULT_BOX_LIMIT: u64 = 1_000_000;

/// A rational stand-in for a point of `Q_place`, written `place=value`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryTarget {
    pub place: Place,
    pub value: Rational,
}

impl fmt::Display for BoundaryTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.place, self.value)
    }
}

impl FromStr for BoundaryTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (p, v) = s
            .split_once('=')
            .ok_or_else(|| Error::validation(format!("expected place=value, got {s:?}")))?;
        Ok(BoundaryTarget {
            place: p.parse()?,
            value: v.trim().parse()?,
        })
    }
}

/// `|z - b|_place ≤ |a|_place`.
pub fn cone_contains(place: Place, z: &Rational, g: &GroupElement) -> bool {
    pnorm(&(z - g.b()), place) <= pnorm(g.a(), place)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StripQuery {
    /// `ž_p` for places with `φ_p > 0`.
    pub reflected_targets: BTreeMap<Place, Rational>,
    /// `z_p` for places with `φ_p < 0`.
    pub forward_targets: BTreeMap<Place, Rational>,
}

impl StripQuery {
    /// Checks that the targets cover exactly the non-centered places.
    pub fn new(
        reflected_targets: BTreeMap<Place, Rational>,
        forward_targets: BTreeMap<Place, Rational>,
        report: &DriftReport,
    ) -> Result<Self> {
        let got_r: Vec<Place> = reflected_targets.keys().copied().collect();
        let want_r: Vec<Place> = report.reflected_boundary_places.iter().copied().collect();
        let got_f: Vec<Place> = forward_targets.keys().copied().collect();
        let want_f: Vec<Place> = report.boundary_places.iter().copied().collect();
        if got_r != want_r || got_f != want_f {
            return Err(Error::validation(format!(
                "strip targets must cover expanding places {want_r:?} and contracting places {want_f:?}, got {got_r:?} and {got_f:?}"
            )));
        }
        Ok(StripQuery {
            reflected_targets,
            forward_targets,
        })
    }

    /// Builds a query from `place=value` targets, sorting each place into the
    /// reflected or forward side by the sign of its drift.
    pub fn from_targets(targets: &[BoundaryTarget], report: &DriftReport) -> Result<Self> {
        let mut r = BTreeMap::new();
        let mut f = BTreeMap::new();
        for t in targets {
            let side = if report.boundary_places.contains(&t.place) {
                &mut f
            } else if report.reflected_boundary_places.contains(&t.place) {
                &mut r
            } else {
                return Err(Error::validation(format!("place {} has zero drift and takes no target", t.place)));
            };
            if side.insert(t.place, t.value.clone()).is_some() {
                return Err(Error::validation(format!("duplicate target for place {}", t.place)));
            }
        }
        StripQuery::new(r, f, report)
    }

    pub fn targets(&self) -> impl Iterator<Item = (Place, &Rational)> + '_ {
        self.reflected_targets
            .iter()
            .chain(&self.forward_targets)
            .map(|(p, z)| (*p, z))
    }

    /// The query with every target moved by `g`.
    pub fn translate(&self, g: &GroupElement) -> StripQuery {
        let mv = |m: &BTreeMap<Place, Rational>| m.iter().map(|(p, z)| (*p, g.act_rational(z))).collect();
        StripQuery {
            reflected_targets: mv(&self.reflected_targets),
            forward_targets: mv(&self.forward_targets),
        }
    }
}

pub fn strip_contains(q: &StripQuery, g: &GroupElement) -> bool {
    q.targets().all(|(place, z)| cone_contains(place, z, g))
}

/// The translations `b = step·(offset + k)` for `k_min ≤ k ≤ k_max`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranslationLattice {
    pub step: Rational,
    pub offset: Rational,
    pub k_min: BigInt,
    pub k_max: BigInt,
}

impl TranslationLattice {
    pub fn count(&self) -> BigInt {
        let c = &self.k_max - &self.k_min + BigInt::one();
        if c.is_negative() {
            BigInt::zero()
        } else {
            c
        }
    }

    pub fn points(&self) -> Vec<Rational> {
        let mut out = Vec::new();
        let mut k = self.k_min.clone();
        while k <= self.k_max {
            out.push(&self.step * &(&self.offset + &Rational::from(k.clone())));
            k += 1;
        }
        out
    }
}

/// `{b ∈ Z(P) : v_p(b - c_p) ≥ t_p ∀p ∈ P, |b - c_∞| ≤ r}`.
///
/// With `L = ∏ p^{t_p}` the finite conditions say `b/L ≡ c_p/L` modulo
/// `Z_p` for every `p`, and the solutions are `L·(y_0 + Z)` where `y_0` is
/// the sum of the p-fractional parts of `c_p/L`.
pub fn translation_lattice(
    ctx: &PrimeContext,
    finite: &[(Rational, i64)],
    real_center: &Rational,
    real_radius: &Rational,
) -> TranslationLattice {
    assert_eq!(finite.len(), ctx.len(), "one constraint per prime");
    let step = ctx
        .primes()
        .iter()
        .zip(finite)
        .fold(Rational::one(), |acc, (&p, (_, t))| acc * Rational::power_of(p, *t));
    let offset: Rational = ctx
        .primes()
        .iter()
        .zip(finite)
        .map(|(&p, (c, _))| padic_truncate(&(c / &step), p, 0))
        .sum();
    let k_min = (&(&(real_center - real_radius) / &step) - &offset).ceil();
    let k_max = (&(&(real_center + real_radius) / &step) - &offset).floor();
    TranslationLattice {
        step,
        offset,
        k_min,
        k_max,
    }
}

/// All `b ∈ Z(P)` with `|z_p - b|_p ≤ 1` at every place of `P̄`.
pub fn enumerate_ball_points(ctx: &PrimeContext, targets: &BTreeMap<Place, Rational>) -> Result<Vec<Rational>> {
    let finite = ctx
        .primes()
        .iter()
        .map(|&p| {
            targets
                .get(&Place::Prime(p))
                .map(|z| (z.clone(), 0))
                .ok_or_else(|| Error::validation(format!("missing target for place {p}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let z_inf = targets
        .get(&Place::Infinity)
        .ok_or_else(|| Error::validation("missing target for place inf"))?;
    if let Some(extra) = targets.keys().find(|p| !ctx.has_place(**p)) {
        return Err(Error::validation(format!("target for place {extra} outside {ctx}")));
    }
    Ok(translation_lattice(ctx, &finite, z_inf, &Rational::one()).points())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowKind {
    /// Bounded unit exponents and sub-exponential translations at the
    /// centered places.
    C,
    /// As `C`, with the translation bound at every place.
    Q,
    /// `a = 1` and `|b|_p ≤ 1` at the centered places.
    H,
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C" | "c" => Ok(WindowKind::C),
            "Q" | "q" => Ok(WindowKind::Q),
            "H" | "h" => Ok(WindowKind::H),
            _ => Err(Error::validation(format!("unknown window {s:?}"))),
        }
    }
}

/// Window at scale `n` with unit bound `K·n` and translation bound
/// `ε_n·n = n^{3/4}` (`ε_n = n^{-1/4}`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowParams {
    pub k: f64,
    pub n: u64,
}

impl WindowParams {
    /// Requires `K > max |φ_p|` over all places.
    pub fn new(k: f64, n: u64, report: &DriftReport) -> Result<Self> {
        let m = report.max_abs_drift(true);
        if !k.is_finite() || k <= m {
            return Err(Error::validation(format!("K = {k} must exceed max |drift| = {m}")));
        }
        Ok(WindowParams { k, n })
    }

    /// `K = 1 + 2·max |φ_p|`.
    pub fn default_k(report: &DriftReport) -> f64 {
        1.0 + 2.0 * report.max_abs_drift(true)
    }

    pub fn epsilon(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            libm::pow(self.n as f64, -0.25)
        }
    }

    /// `ε_n · n`.
    pub fn translation_log_bound(&self) -> f64 {
        libm::pow(self.n as f64, 0.75)
    }

    /// Largest `|v_p(a)|` allowed: `⌊K n / ln p⌋`.
    pub fn unit_exponent_bound(&self, p: u64) -> i64 {
        libm::floor(self.k * self.n as f64 / libm::log(p as f64)) as i64
    }

    /// Smallest `v_p(b)` allowed at a centered finite place.
    pub fn translation_min_valuation(&self, p: u64) -> i64 {
        -(libm::floor(self.translation_log_bound() / libm::log(p as f64)) as i64)
    }

    /// Largest `|b|` allowed at a centered real place, `e^{ε_n n}` rounded
    /// to the nearest double.
    pub fn translation_real_radius(&self) -> Rational {
        Rational::from_f64(libm::exp(self.translation_log_bound())).expect("finite bound")
    }

    fn units_ok(&self, a: &Rational, ctx: &PrimeContext) -> bool {
        ctx.primes()
            .iter()
            .all(|&p| unit_valuation(a, p).abs() <= self.unit_exponent_bound(p))
    }

    fn translation_ok(&self, b: &Rational, place: Place) -> bool {
        match place {
            Place::Prime(p) => valuation(b, p).finite().is_none_or(|v| v >= self.translation_min_valuation(p)),
            Place::Infinity => b.abs() <= self.translation_real_radius(),
        }
    }
}

pub fn window_contains(kind: WindowKind, g: &GroupElement, params: &WindowParams, report: &DriftReport) -> bool {
    let ctx = context_of(report);
    match kind {
        WindowKind::C => {
            params.units_ok(g.a(), &ctx)
                && report.centered_places.iter().all(|&pl| params.translation_ok(g.b(), pl))
        }
        WindowKind::Q => params.units_ok(g.a(), &ctx) && ctx.places().all(|pl| params.translation_ok(g.b(), pl)),
        WindowKind::H => {
            g.a() == &Rational::one()
                && report
                    .centered_places
                    .iter()
                    .all(|&pl| pnorm(g.b(), pl) <= Rational::one())
        }
    }
}

fn context_of(report: &DriftReport) -> PrimeContext {
    PrimeContext::new(report.expected_valuations.keys().copied()).expect("report built from a context")
}

/// All units `±∏ p^{k_p}` with `|k_p| ≤ bounds[i]`.
fn unit_box(ctx: &PrimeContext, bounds: &[i64], limit: u64) -> Result<Vec<(bool, Vec<i64>)>> {
    let size = bounds
        .iter()
        .try_fold(2u64, |acc, b| acc.checked_mul(2 * *b as u64 + 1))
        .filter(|s| *s <= limit)
        .ok_or_else(|| Error::resource(format!("unit box with bounds {bounds:?} exceeds {limit} elements")))?;
    let mut out = Vec::with_capacity(size as usize);
    let mut cur: Vec<i64> = bounds.iter().map(|b| -b).collect();
    loop {
        out.push((false, cur.clone()));
        out.push((true, cur.clone()));
        let mut i = 0;
        loop {
            if i == ctx.len() {
                return Ok(out);
            }
            if cur[i] < bounds[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = -bounds[i];
            i += 1;
        }
    }
}

fn unit_value(ctx: &PrimeContext, negative: bool, exps: &[i64]) -> Rational {
    let mag = ctx
        .primes()
        .iter()
        .zip(exps)
        .fold(Rational::one(), |acc, (&p, &k)| acc * Rational::power_of(p, k));
    if negative {
        -mag
    } else {
        mag
    }
}

/// Translation lattice of `S(ž,z) ∩ C_n` above a fixed `a`.
fn strip_window_fiber(q: &StripQuery, params: &WindowParams, report: &DriftReport, ctx: &PrimeContext, a: &Rational) -> TranslationLattice {
    let zero = Rational::zero();
    let finite: Vec<(Rational, i64)> = ctx
        .primes()
        .iter()
        .map(|&p| {
            let place = Place::Prime(p);
            match q.reflected_targets.get(&place).or_else(|| q.forward_targets.get(&place)) {
                Some(z) => (z.clone(), unit_valuation(a, p)),
                None => (zero.clone(), params.translation_min_valuation(p)),
            }
        })
        .collect();
    let (center, radius) = match q
        .reflected_targets
        .get(&Place::Infinity)
        .or_else(|| q.forward_targets.get(&Place::Infinity))
    {
        Some(z) => (z.clone(), a.abs()),
        None => (zero, params.translation_real_radius()),
    };
    debug_assert!(report.centered_places.len() + q.targets().count() == ctx.len() + 1);
    translation_lattice(ctx, &finite, &center, &radius)
}

fn window_fibers(
    q: &StripQuery,
    params: &WindowParams,
    report: &DriftReport,
    limit: u64,
) -> Result<Vec<(Rational, TranslationLattice)>> {
    let ctx = context_of(report);
    let bounds: Vec<i64> = ctx.primes().iter().map(|&p| params.unit_exponent_bound(p)).collect();
    unit_box(&ctx, &bounds, limit)?
        .into_iter()
        .map(|(neg, exps)| {
            let a = unit_value(&ctx, neg, &exps);
            let lat = strip_window_fiber(q, params, report, &ctx, &a);
            Ok((a, lat))
        })
        .collect()
}

/// Lists `S(ž,z) ∩ C_n`, sorted. Fails if the unit box or the result
/// exceeds `limit` elements.
pub fn enumerate_strip_window(
    q: &StripQuery,
    params: &WindowParams,
    report: &DriftReport,
    limit: u64,
) -> Result<Vec<GroupElement>> {
    let mut out = Vec::new();
    for (a, lat) in window_fibers(q, params, report, limit)? {
        if BigInt::from(out.len()) + lat.count() > BigInt::from(limit) {
            return Err(Error::resource(format!("strip window has more than {limit} elements")));
        }
        out.extend(lat.points().into_iter().map(|b| GroupElement::from_parts(a.clone(), b)));
    }
    out.sort();
    Ok(out)
}

/// `card(S(ž,z) ∩ C_n)` without listing.
pub fn count_strip_window(q: &StripQuery, params: &WindowParams, report: &DriftReport, limit: u64) -> Result<BigInt> {
    Ok(window_fibers(q, params, report, limit)?
        .iter()
        .map(|(_, lat)| lat.count())
        .sum())
}

/// Number of unit values in the window at scale `n` (the box behind `C_n`).
pub fn unit_box_size(report: &DriftReport, params: &WindowParams) -> u64 {
    let ctx = context_of(report);
    ctx.primes()
        .iter()
        .map(|&p| 2 * params.unit_exponent_bound(p) as u64 + 1)
        .product::<u64>()
        * 2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeKind {
    Translations,
    Units,
}

impl FromStr for LatticeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "translations" => Ok(LatticeKind::Translations),
            "units" => Ok(LatticeKind::Units),
            _ => Err(Error::validation(format!("unknown lattice kind {s:?}"))),
        }
    }
}

/// Largest `f ≥ 0` with `p^f ≤ m`.
fn floor_log(p: u64, m: &Rational) -> i64 {
    let mut f = 0;
    let mut pw = Rational::from(p as i64);
    while &pw <= m {
        f += 1;
        pw = &pw * &Rational::from(p as i64);
    }
    f
}

const LATTICE_BIT_LIMIT: u64 = 4096;
const LATTICE_ENUMERATION_LIMIT: u64 = 10_000_000;

/// Size of `{x : |x|_p ≤ m ∀p ∈ P̄}` among translations `Z(P)` or units `(P)`.
pub fn count_lattice_ball(ctx: &PrimeContext, kind: LatticeKind, m: &Rational) -> Result<BigInt> {
    if m < &Rational::one() {
        return Err(Error::validation(format!("radius {m} is below 1")));
    }
    if m.bits() > LATTICE_BIT_LIMIT {
        return Err(Error::resource(format!("radius {m} is too large")));
    }
    let f: Vec<i64> = ctx.primes().iter().map(|&p| floor_log(p, m)).collect();
    match kind {
        LatticeKind::Translations => {
            // b = k / ∏ p^{f_p} with |b| ≤ m
            let d = ctx
                .primes()
                .iter()
                .zip(&f)
                .fold(Rational::one(), |acc, (&p, &e)| acc * Rational::power_of(p, e));
            Ok((m * &d).floor() * 2 + 1)
        }
        LatticeKind::Units => {
            // smallest |.|_∞ the primes after index i can contribute
            let mut tail_min = alloc::vec![Rational::one(); ctx.len() + 1];
            for i in (0..ctx.len()).rev() {
                tail_min[i] = &tail_min[i + 1] * &Rational::power_of(ctx.primes()[i], -f[i]);
            }
            let mut count = 0u64;
            let mut stack = alloc::vec![(0usize, Rational::one())];
            while let Some((i, prod)) = stack.pop() {
                if i == ctx.len() {
                    count += 1;
                    if count > LATTICE_ENUMERATION_LIMIT {
                        return Err(Error::resource("unit ball enumeration too large"));
                    }
                    continue;
                }
                let p = ctx.primes()[i];
                let mut x = &prod * &Rational::power_of(p, -f[i]);
                while &(&x * &tail_min[i + 1]) <= m {
                    stack.push((i + 1, x.clone()));
                    x = &x * &Rational::from(p as i64);
                }
            }
            Ok(BigInt::from(count) * 2)
        }
    }
}

/// One row of a census: window scale `n`, the observed frequency of
/// `R_n ∈ C_n`, and `card(S ∩ C_n)` for every sampled target pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CensusRow {
    pub n: u64,
    pub hits: u64,
    pub trials: u64,
    pub strip_counts: Vec<BigInt>,
}

impl CensusRow {
    pub fn hit_frequency(&self) -> f64 {
        if self.trials == 0 {
            f64::NAN
        } else {
            self.hits as f64 / self.trials as f64
        }
    }

    /// `(1/n) ln card` per target pair; `None` for empty strips or `n = 0`.
    pub fn log_count_over_n(&self) -> Vec<Option<f64>> {
        self.strip_counts
            .iter()
            .map(|c| {
                if c.is_zero() || self.n == 0 {
                    None
                } else {
                    Some(crate::arith::ln_bigint(c) / self.n as f64)
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CensusReport {
    pub k: f64,
    pub rows: Vec<CensusRow>,
    /// Target pairs whose `(1/n) ln card` strictly decreases along the rows.
    pub decreasing_pairs: usize,
    /// Fit of `ln mean card = c0 + c1 ln n` over rows with `n > 0`.
    pub growth_fit: Option<(f64, f64)>,
}

impl CensusReport {
    pub fn from_rows(k: f64, rows: Vec<CensusRow>) -> Self {
        let pairs = rows.first().map_or(0, |r| r.strip_counts.len());
        let logs: Vec<Vec<Option<f64>>> = rows.iter().map(CensusRow::log_count_over_n).collect();
        let decreasing_pairs = (0..pairs)
            .filter(|&j| {
                logs.windows(2).all(|w| match (w[0][j], w[1][j]) {
                    (Some(x), Some(y)) => y < x,
                    _ => false,
                })
            })
            .count();
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.n > 0 && !r.strip_counts.is_empty())
            .filter_map(|r| {
                let total: BigInt = r.strip_counts.iter().sum();
                if total.is_zero() {
                    return None;
                }
                let mean = crate::arith::ln_bigint(&total) - libm::log(r.strip_counts.len() as f64);
                Some((libm::log(r.n as f64), mean))
            })
            .unzip();
        CensusReport {
            k,
            rows,
            decreasing_pairs,
            growth_fit: ols(&xs, &ys).map(|(s, c)| (c, s)),
        }
    }
}

/// Whether `R_n ∈ C_n` for one walk.
pub fn census_hit(spec: &MeasureSpec, seed: WalkSeed, params: &WindowParams, report: &DriftReport) -> Result<bool> {
    let mut w = Walker::new(spec, seed, Lane::Future);
    for _ in 0..params.n {
        w.step()?;
    }
    Ok(window_contains(WindowKind::C, &w.current(), params, report))
}

/// Targets from a bilateral path: `z_p ≈ Z_N` for contracting places and
/// `ž_p ≈` the translation part of `R_{-M}` for expanding ones.
pub fn census_targets(spec: &MeasureSpec, seed: WalkSeed, horizon: u64, report: &DriftReport) -> Result<StripQuery> {
    let needs_past = !report.reflected_boundary_places.is_empty();
    let needs_future = !report.boundary_places.is_empty();
    let t = run_bilateral(
        spec,
        seed,
        if needs_past { horizon } else { 0 },
        if needs_future { horizon } else { 0 },
    )?;
    let fwd = t.last().b().clone();
    let back = t.past_products.last().expect("R_0 present").b().clone();
    let f = report.boundary_places.iter().map(|&p| (p, fwd.clone())).collect();
    let r = report.reflected_boundary_places.iter().map(|&p| (p, back.clone())).collect();
    StripQuery::new(r, f, report)
}

/// Sequential census over stream indices `0..hit_seeds` (hit frequency) and
/// `0..target_pairs` (strip counts).
#[allow(clippy::too_many_arguments)]
pub fn strip_census(
    spec: &MeasureSpec,
    master_seed: u64,
    k: Option<f64>,
    n_list: &[u64],
    hit_seeds: u64,
    target_pairs: u64,
    target_horizon: u64,
    limit: u64,
) -> Result<CensusReport> {
    let report = drift_vector(spec);
    let k = k.unwrap_or_else(|| WindowParams::default_k(&report));
    let queries = (0..target_pairs)
        .map(|s| census_targets(spec, WalkSeed::new(master_seed, s), target_horizon, &report))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &n in n_list {
        let params = WindowParams::new(k, n, &report)?;
        let mut hits = 0;
        for s in 0..hit_seeds {
            if census_hit(spec, WalkSeed::new(master_seed, s), &params, &report)? {
                hits += 1;
            }
        }
        let strip_counts = queries
            .iter()
            .map(|q| count_strip_window(q, &params, &report, limit))
            .collect::<Result<Vec<_>>>()?;
        rows.push(CensusRow {
            n,
            hits,
            trials: hit_seeds,
            strip_counts,
        });
    }
    Ok(CensusReport::from_rows(k, rows))
}

/// Smallest `h ≥ 0` with `g⁻¹ C_n ⊆ C_{n+h}` for every `n` when no place is
/// centered: `K h ≥ max_p |ln |a_g|_p|`.
pub fn window_shift(g: &GroupElement, params: &WindowParams, ctx: &PrimeContext) -> u64 {
    let d = unit_decompose(g.a(), ctx).expect("group element");
    d.exponents
        .iter()
        .map(|&(p, e)| libm::ceil((e.unsigned_abs() as f64) * libm::log(p as f64) / params.k) as u64)
        .max()
        .unwrap_or(0)
}

/// `card(S(ž,z) ∩ C_n)` as a machine integer, or a resource error.
pub fn count_to_u128(c: &BigInt) -> Result<u128> {
    c.to_u128().ok_or_else(|| Error::resource("count exceeds 128 bits"))
}
