//! Limits `Z_∞^p = lim Z_n` in the contracting places, their joint law
//! `ν`, and Monte Carlo evaluation of `f(g) = ∫ ψ(g·x) ν(dx)`.
//!
//! Convergence is certified empirically: the walk is inspected every
//! [`CHECKPOINT_INTERVAL`] steps, and a quantity counts as settled once it
//! agreed on the last [`CONFIRMATION_WINDOW`] checkpoints.

mod psi;

pub use psi::{Ball, BoundaryFunction};

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;

use crate::arith::{padic_digits, padic_truncate, DigitWindow, Place, Rational};
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::measure::{drift_vector, MeasureSpec};
use crate::walk::{Lane, WalkSeed, Walker};

pub const CHECKPOINT_INTERVAL: u64 = 64;
pub const CONFIRMATION_WINDOW: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundaryComponent {
    Digits(DigitWindow),
    Interval { lo: Rational, hi: Rational },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryPoint {
    pub components: BTreeMap<Place, BoundaryComponent>,
    pub confirmation_window: usize,
    pub horizon_used: u64,
}

/// `precision` digits of `q` starting at exponent `min(v_p(q), 0)`, so that
/// sequences tending to an integer compare on a fixed window.
pub fn boundary_digits(q: &Rational, p: u64, precision: usize) -> DigitWindow {
    let w = padic_digits(q, p, precision);
    if q.is_zero() || w.start_exponent <= 0 {
        return w;
    }
    let shift = w.start_exponent as usize;
    let mut digits = alloc::vec![0; shift.min(precision)];
    digits.extend(w.digits.iter().take(precision - digits.len()));
    DigitWindow {
        prime: p,
        start_exponent: 0,
        digits,
    }
}

/// Keeps the last `window` values and reports whether they all agree.
#[derive(Clone, Debug)]
struct Confirm<K> {
    window: usize,
    history: VecDeque<K>,
}

impl<K: PartialEq> Confirm<K> {
    fn new(window: usize) -> Self {
        Confirm {
            window,
            history: VecDeque::with_capacity(window + 1),
        }
    }

    fn push(&mut self, k: K) {
        self.history.push_back(k);
        if self.history.len() > self.window {
            self.history.pop_front();
        }
    }

    fn settled(&self) -> bool {
        self.history.len() == self.window && self.history.iter().all(|k| *k == self.history[0])
    }

    fn last(&self) -> Option<&K> {
        self.history.back()
    }
}

fn oscillation(history: &VecDeque<Rational>) -> Rational {
    let lo = history.iter().min().expect("nonempty");
    let hi = history.iter().max().expect("nonempty");
    hi - lo
}

/// Approximates `(Z_∞^p)_p` over the boundary places of `spec`.
pub fn approximate_boundary_point(
    spec: &MeasureSpec,
    seed: WalkSeed,
    precision: usize,
    max_horizon: u64,
) -> Result<BoundaryPoint> {
    if precision == 0 {
        return Err(Error::validation("precision must be at least 1"));
    }
    let places = drift_vector(spec).boundary_places;
    let mut point = BoundaryPoint {
        components: BTreeMap::new(),
        confirmation_window: CONFIRMATION_WINDOW,
        horizon_used: 0,
    };
    if places.is_empty() {
        return Ok(point);
    }
    let finite: Vec<u64> = places.iter().filter_map(|p| p.as_prime()).collect();
    let with_inf = places.contains(&Place::Infinity);
    let tolerance = Rational::power_of(2, -(precision as i64));

    let mut walker = Walker::new(spec, seed, Lane::Future);
    let mut digits: Vec<Confirm<DigitWindow>> = finite.iter().map(|_| Confirm::new(CONFIRMATION_WINDOW)).collect();
    let mut reals: VecDeque<Rational> = VecDeque::new();
    let mut settled = false;
    let mut n = 0;
    while n < max_horizon && !settled {
        walker.step()?;
        n += 1;
        if n % CHECKPOINT_INTERVAL != 0 {
            continue;
        }
        let z = walker.z();
        for (c, &p) in digits.iter_mut().zip(&finite) {
            c.push(boundary_digits(&z, p, precision));
        }
        if with_inf {
            reals.push_back(z);
            if reals.len() > CONFIRMATION_WINDOW {
                reals.pop_front();
            }
        }
        settled = digits.iter().all(Confirm::settled)
            && (!with_inf || (reals.len() == CONFIRMATION_WINDOW && oscillation(&reals) <= tolerance));
    }

    point.horizon_used = n;
    let z = walker.z();
    for (c, &p) in digits.iter().zip(&finite) {
        let w = c.last().cloned().unwrap_or_else(|| boundary_digits(&z, p, precision));
        point.components.insert(Place::Prime(p), BoundaryComponent::Digits(w));
    }
    if with_inf {
        let r = if reals.is_empty() { Rational::zero() } else { oscillation(&reals) };
        let mid = reals.back().cloned().unwrap_or(z);
        point.components.insert(
            Place::Infinity,
            BoundaryComponent::Interval {
                lo: &mid - &r,
                hi: &mid + &r,
            },
        );
    }
    if settled {
        Ok(point)
    } else {
        Err(Error::Convergence {
            horizon: max_horizon,
            best_effort: Box::new(point),
        })
    }
}

/// A cell of the partition used by [`EmpiricalExitLaw`]: the p-adic ball
/// `center + p^j Z_p` with canonical center, or the dyadic interval
/// `[index/2^j, (index+1)/2^j)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BallId {
    Padic { prime: u64, resolution: i64, center: Rational },
    Dyadic { resolution: i64, index: BigInt },
}

impl BallId {
    pub fn of(x: &Rational, place: Place, resolution: i64) -> BallId {
        match place {
            Place::Prime(p) => BallId::Padic {
                prime: p,
                resolution,
                center: padic_truncate(x, p, resolution),
            },
            Place::Infinity => BallId::Dyadic {
                resolution,
                index: (x * &Rational::power_of(2, resolution)).floor(),
            },
        }
    }
}

impl fmt::Display for BallId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BallId::Padic { prime, resolution, center } => write!(f, "{prime}:{resolution}:{center}"),
            BallId::Dyadic { resolution, index } => write!(f, "inf:{resolution}:{index}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExitSample {
    pub ball: BallId,
    /// `Z_n` at the step where the ball was confirmed.
    pub approximant: Rational,
    pub steps: u64,
}

fn check_boundary_place(spec: &MeasureSpec, place: Place) -> Result<()> {
    if drift_vector(spec).boundary_places.contains(&place) {
        Ok(())
    } else {
        Err(Error::validation(format!("{place} is not a boundary place of the measure")))
    }
}

/// Runs one walk until the ball containing `Z_n` settles. `None` if it does
/// not settle within `horizon` steps.
pub fn sample_exit_point(
    spec: &MeasureSpec,
    seed: WalkSeed,
    place: Place,
    resolution: i64,
    horizon: u64,
) -> Result<Option<ExitSample>> {
    let mut walker = Walker::new(spec, seed, Lane::Future);
    let mut keys = Confirm::new(CONFIRMATION_WINDOW);
    for n in 1..=horizon {
        walker.step()?;
        if n % CHECKPOINT_INTERVAL == 0 {
            let z = walker.z();
            keys.push(BallId::of(&z, place, resolution));
            if keys.settled() {
                return Ok(Some(ExitSample {
                    ball: keys.last().cloned().expect("settled"),
                    approximant: z,
                    steps: n,
                }));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalExitLaw {
    pub place: Place,
    pub resolution: i64,
    pub histogram: BTreeMap<BallId, u64>,
    pub total: u64,
    pub skipped: u64,
}

impl EmpiricalExitLaw {
    pub fn new(place: Place, resolution: i64) -> Self {
        EmpiricalExitLaw {
            place,
            resolution,
            histogram: BTreeMap::new(),
            total: 0,
            skipped: 0,
        }
    }

    pub fn record(&mut self, sample: Option<&ExitSample>) {
        match sample {
            Some(s) => {
                *self.histogram.entry(s.ball.clone()).or_insert(0) += 1;
                self.total += 1;
            }
            None => self.skipped += 1,
        }
    }

    pub fn merge(&mut self, other: &EmpiricalExitLaw) {
        for (k, c) in &other.histogram {
            *self.histogram.entry(k.clone()).or_insert(0) += c;
        }
        self.total += other.total;
        self.skipped += other.skipped;
    }

    pub fn frequency(&self, ball: &BallId) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.histogram.get(ball).copied().unwrap_or(0) as f64 / self.total as f64
    }
}

/// Histogram of settled balls over stream indices `0..seeds`.
pub fn empirical_exit_law(
    spec: &MeasureSpec,
    master_seed: u64,
    seeds: u64,
    place: Place,
    resolution: i64,
    horizon: u64,
) -> Result<EmpiricalExitLaw> {
    check_boundary_place(spec, place)?;
    let mut law = EmpiricalExitLaw::new(place, resolution);
    for s in 0..seeds {
        let sample = sample_exit_point(spec, WalkSeed::new(master_seed, s), place, resolution, horizon)?;
        law.record(sample.as_ref());
    }
    Ok(law)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub skipped: u64,
}

/// Exact running sums; merging is commutative and associative.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HarmonicAccumulator {
    pub sum: Rational,
    pub sum_sq: Rational,
    pub count: u64,
    pub skipped: u64,
}

impl HarmonicAccumulator {
    pub fn add(&mut self, x: &Rational) {
        self.sum = &self.sum + x;
        self.sum_sq = &self.sum_sq + &(x * x);
        self.count += 1;
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    pub fn merge(&mut self, other: &HarmonicAccumulator) {
        self.sum = &self.sum + &other.sum;
        self.sum_sq = &self.sum_sq + &other.sum_sq;
        self.count += other.count;
        self.skipped += other.skipped;
    }

    /// Sample mean and `sd / sqrt(samples)` with the unbiased variance.
    pub fn estimate(&self) -> HarmonicEstimate {
        let n = self.count;
        if n == 0 {
            return HarmonicEstimate {
                value: f64::NAN,
                std_error: f64::NAN,
                samples: 0,
                skipped: self.skipped,
            };
        }
        let nq = Rational::from(n as i64);
        let mean = &self.sum / &nq;
        let std_error = if n < 2 {
            0.0
        } else {
            let ss = &self.sum_sq - &(&mean * &self.sum);
            let var = &ss / &Rational::from(n as i64 - 1);
            libm::sqrt(var.to_f64().max(0.0) / n as f64)
        };
        HarmonicEstimate {
            value: mean.to_f64(),
            std_error,
            samples: n,
            skipped: self.skipped,
        }
    }
}

/// `ψ` evaluated along one walk at several translates `g·Z_n`, sharing the
/// same boundary sample across all `g` (common random numbers).
#[derive(Clone, Debug)]
pub struct HarmonicProblem {
    spec: MeasureSpec,
    psi: BoundaryFunction,
    points: Vec<GroupElement>,
    horizon: u64,
    trivial: bool,
}

impl HarmonicProblem {
    /// Every ball of `ψ` must live in a boundary place. When the measure has
    /// no boundary places `ψ` collapses to its constant term.
    pub fn new(spec: &MeasureSpec, psi: BoundaryFunction, points: Vec<GroupElement>, horizon: u64) -> Result<Self> {
        let places = drift_vector(spec).boundary_places;
        let trivial = places.is_empty();
        if !trivial {
            if let Some(p) = psi.places().into_iter().find(|p| !places.contains(p)) {
                return Err(Error::validation(format!(
                    "boundary function uses place {p}, which is not a boundary place"
                )));
            }
        }
        for g in &points {
            if !g.belongs_to(spec.context()) {
                return Err(Error::validation(format!("{g} is not in Aff({})", spec.context())));
            }
        }
        Ok(HarmonicProblem {
            spec: spec.clone(),
            psi,
            points,
            horizon,
            trivial,
        })
    }

    pub fn points(&self) -> &[GroupElement] {
        &self.points
    }

    fn values_at(&self, z: &Rational) -> Vec<Rational> {
        self.points.iter().map(|g| self.psi.evaluate(&g.act_rational(z))).collect()
    }

    /// `(ψ(g·x))_g` for one boundary sample, or `None` if the values did not
    /// settle within the horizon.
    pub fn sample(&self, seed: WalkSeed) -> Result<Option<Vec<Rational>>> {
        if self.trivial {
            return Ok(Some(alloc::vec![self.psi.constant.clone(); self.points.len()]));
        }
        let mut walker = Walker::new(&self.spec, seed, Lane::Future);
        let mut values = Confirm::new(CONFIRMATION_WINDOW);
        for n in 1..=self.horizon {
            walker.step()?;
            if n % CHECKPOINT_INTERVAL == 0 {
                values.push(self.values_at(&walker.z()));
                if values.settled() {
                    return Ok(values.last().cloned());
                }
            }
        }
        Ok(None)
    }
}

/// Estimates `f(g)` over stream indices `0..samples`.
pub fn evaluate_harmonic(
    spec: &MeasureSpec,
    psi: &BoundaryFunction,
    g: &GroupElement,
    master_seed: u64,
    samples: u64,
    horizon: u64,
) -> Result<HarmonicEstimate> {
    let problem = HarmonicProblem::new(spec, psi.clone(), alloc::vec![g.clone()], horizon)?;
    let mut acc = HarmonicAccumulator::default();
    for s in 0..samples {
        match problem.sample(WalkSeed::new(master_seed, s))? {
            Some(v) => acc.add(&v[0]),
            None => acc.skip(),
        }
    }
    Ok(acc.estimate())
}

/// Points `g, g·h_1, …, g·h_k` for the atoms `h_i` of `spec`.
pub fn mean_value_points(spec: &MeasureSpec, g: &GroupElement) -> Vec<GroupElement> {
    core::iter::once(g.clone())
        .chain(spec.atoms().iter().map(|a| g.multiply(&a.element)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualEstimate {
    /// `f(g)`.
    pub value: HarmonicEstimate,
    /// `Σ μ(h) f(g·h)`.
    pub mean_value: HarmonicEstimate,
    /// `f(g) - Σ μ(h) f(g·h)`, with the standard error of the paired
    /// per-sample differences.
    pub residual: HarmonicEstimate,
}

/// Accumulates samples laid out as in [`mean_value_points`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResidualAccumulator {
    pub value: HarmonicAccumulator,
    pub mean_value: HarmonicAccumulator,
    pub difference: HarmonicAccumulator,
}

impl ResidualAccumulator {
    pub fn add(&mut self, weights: &[Rational], sample: Option<&[Rational]>) {
        match sample {
            Some(v) => {
                let mv: Rational = weights.iter().zip(&v[1..]).map(|(w, x)| w * x).sum();
                self.value.add(&v[0]);
                self.difference.add(&(&v[0] - &mv));
                self.mean_value.add(&mv);
            }
            None => {
                self.value.skip();
                self.mean_value.skip();
                self.difference.skip();
            }
        }
    }

    pub fn merge(&mut self, other: &ResidualAccumulator) {
        self.value.merge(&other.value);
        self.mean_value.merge(&other.mean_value);
        self.difference.merge(&other.difference);
    }

    pub fn estimate(&self) -> ResidualEstimate {
        ResidualEstimate {
            value: self.value.estimate(),
            mean_value: self.mean_value.estimate(),
            residual: self.difference.estimate(),
        }
    }
}

/// Mean-value residual at `g` with common random numbers.
pub fn harmonic_residual(
    spec: &MeasureSpec,
    psi: &BoundaryFunction,
    g: &GroupElement,
    master_seed: u64,
    samples: u64,
    horizon: u64,
) -> Result<ResidualEstimate> {
    let problem = HarmonicProblem::new(spec, psi.clone(), mean_value_points(spec, g), horizon)?;
    let weights: Vec<Rational> = spec.atoms().iter().map(|a| a.weight.clone()).collect();
    let mut acc = ResidualAccumulator::default();
    for s in 0..samples {
        let v = problem.sample(WalkSeed::new(master_seed, s))?;
        acc.add(&weights, v.as_deref());
    }
    Ok(acc.estimate())
}
