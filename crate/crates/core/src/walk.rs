//! Seeded random walks `R_n = g_1 ⋯ g_n` with exact products.
//!
//! # Random number generation
//!
//! A [`WalkSeed`] `(master_seed, stream_index)` selects a ChaCha20 stream:
//! the 256-bit key is four consecutive outputs of splitmix64 started at
//! `master_seed` (little-endian), the ChaCha stream id is `stream_index`,
//! and the future increments `g_1, g_2, …` are read from word position 0
//! while the past increments `g_0, g_{-1}, …` start at word `2^67`.
//!
//! Each increment consumes one `u64` draw `r`. With atoms sorted by `(a,b)`
//! and cumulative weights `c_i`, the chosen atom is the first `i` with
//! `r / 2^64 < c_i`, decided exactly on integers.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::arith::{PScaled, Place, PrimeContext, Rational};
use crate::error::{Error, Result};
use crate::group::{unit_decompose, GroupElement};
use crate::measure::MeasureSpec;

/// Default cap on the size of the exact state, in bits.
pub const DEFAULT_BIT_BUDGET: u64 = 10_000_000;

const PAST_WORD_OFFSET: u128 = 1 << 67;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WalkSeed {
    pub master_seed: u64,
    pub stream_index: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lane {
    /// Increments `g_1, g_2, …`.
    Future,
    /// Increments `g_0, g_{-1}, …`.
    Past,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl WalkSeed {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        WalkSeed {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self, lane: Lane) -> ChaCha20Rng {
        let mut state = self.master_seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(self.stream_index);
        if lane == Lane::Past {
            rng.set_word_pos(PAST_WORD_OFFSET);
        }
        rng
    }
}

/// Maps a uniform `u64` to an atom index by exact cumulative thresholds.
#[derive(Clone, Debug)]
pub struct AtomSampler {
    thresholds: Vec<u128>,
}

impl AtomSampler {
    pub fn new(spec: &MeasureSpec) -> Self {
        let scale = Rational::power_of(2, 64);
        let mut cum = Rational::zero();
        let n = spec.atoms().len();
        let thresholds = spec
            .atoms()
            .iter()
            .enumerate()
            .map(|(i, atom)| {
                cum = &cum + &atom.weight;
                if i + 1 == n {
                    1u128 << 64
                } else {
                    u128::try_from((&cum * &scale).ceil()).expect("threshold below 2^64")
                }
            })
            .collect();
        AtomSampler { thresholds }
    }

    pub fn pick(&self, r: u64) -> usize {
        self.thresholds.partition_point(|&t| t <= r as u128)
    }
}

#[derive(Clone, Debug)]
struct StepAtom {
    element: GroupElement,
    negative: bool,
    exps: Vec<i64>,
    b: PScaled,
}

/// Streaming walk state `R_n = (A_n, Z_n)`; `A_n` as sign and exponents,
/// `Z_n` scaled by prime powers. Memory stays proportional to `|Z_n|`.
#[derive(Clone, Debug)]
pub struct Walker {
    ctx: PrimeContext,
    atoms: Vec<StepAtom>,
    sampler: AtomSampler,
    rng: ChaCha20Rng,
    n: u64,
    a_negative: bool,
    a_exps: Vec<i64>,
    z: PScaled,
    bit_budget: u64,
    last_atom: Option<usize>,
}

impl Walker {
    /// Future lane draws `g_1, g_2, …` from `μ`; the past lane draws
    /// `g_0, g_{-1}, …` and multiplies by their inverses, giving `R_{-m}`.
    pub fn new(spec: &MeasureSpec, seed: WalkSeed, lane: Lane) -> Self {
        let ctx = spec.context().clone();
        let atoms = spec
            .atoms()
            .iter()
            .map(|atom| {
                let g = match lane {
                    Lane::Future => atom.element.clone(),
                    Lane::Past => atom.element.inverse(),
                };
                let d = unit_decompose(g.a(), &ctx).expect("validated unit");
                let b = PScaled::from_rational(g.b(), &ctx).expect("validated translation");
                StepAtom {
                    negative: d.negative,
                    exps: d.exponent_vec(),
                    b,
                    element: g,
                }
            })
            .collect();
        Walker {
            a_exps: alloc::vec![0; ctx.len()],
            z: PScaled::zero(&ctx),
            ctx,
            atoms,
            sampler: AtomSampler::new(spec),
            rng: seed.rng(lane),
            n: 0,
            a_negative: false,
            bit_budget: DEFAULT_BIT_BUDGET,
            last_atom: None,
        }
    }

    pub fn with_bit_budget(mut self, bits: u64) -> Self {
        self.bit_budget = bits;
        self
    }

    pub fn context(&self) -> &PrimeContext {
        &self.ctx
    }

    /// Number of steps taken.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Draws the next increment and updates `R_n`. Returns the increment
    /// (inverted on the past lane).
    pub fn step(&mut self) -> Result<&GroupElement> {
        let i = self.sampler.pick(self.rng.next_u64());
        let atom = &self.atoms[i];
        let shift = atom.b.mul_unit(self.a_negative, &self.a_exps);
        self.z.add_assign(&shift, &self.ctx);
        self.a_negative ^= atom.negative;
        for (e, d) in self.a_exps.iter_mut().zip(&atom.exps) {
            *e += d;
        }
        self.n += 1;
        self.last_atom = Some(i);
        let bits = self.z.bits(&self.ctx);
        if bits > self.bit_budget {
            return Err(Error::resource(format!(
                "walk state reached {bits} bits at step {}, budget {}",
                self.n, self.bit_budget
            )));
        }
        Ok(&self.atoms[i].element)
    }

    pub fn a(&self) -> Rational {
        let mag = self
            .ctx
            .primes()
            .iter()
            .zip(&self.a_exps)
            .fold(Rational::one(), |acc, (&p, &k)| acc * Rational::power_of(p, k));
        if self.a_negative {
            -mag
        } else {
            mag
        }
    }

    pub fn a_exponents(&self) -> &[i64] {
        &self.a_exps
    }

    pub fn z(&self) -> Rational {
        self.z.to_rational(&self.ctx)
    }

    pub fn z_scaled(&self) -> &PScaled {
        &self.z
    }

    pub fn current(&self) -> GroupElement {
        GroupElement::from_parts(self.a(), self.z())
    }

    /// `ln |A_n|_place`.
    pub fn ln_norm_a(&self, place: Place) -> f64 {
        match place {
            Place::Prime(p) => {
                let i = self.ctx.index_of(p).expect("prime in context");
                -(self.a_exps[i] as f64) * libm::log(p as f64)
            }
            Place::Infinity => self
                .ctx
                .primes()
                .iter()
                .zip(&self.a_exps)
                .map(|(&p, &k)| k as f64 * libm::log(p as f64))
                .sum(),
        }
    }

    /// `ln |Z_n|_place`, `-inf` at zero.
    pub fn ln_norm_z(&self, place: Place) -> f64 {
        scaled_ln_norm(&self.z, &self.ctx, place)
    }

    /// `ln⁺ |Z_n|_place`, with `ln⁺ 0 = 0`.
    pub fn ln_plus_norm_z(&self, place: Place) -> f64 {
        self.ln_norm_z(place).max(0.0)
    }

    /// `ln |Z_n - Z_{n-1}|_place = ln |A_{n-1} b_n|_place` for the last step.
    pub fn ln_norm_last_increment(&self, place: Place) -> Option<f64> {
        let atom = &self.atoms[self.last_atom?];
        if atom.b.is_zero() {
            return Some(f64::NEG_INFINITY);
        }
        let prev: Vec<i64> = self.a_exps.iter().zip(&atom.exps).map(|(e, d)| e - d).collect();
        let delta = atom.b.mul_unit(false, &prev);
        Some(scaled_ln_norm(&delta, &self.ctx, place))
    }
}

fn scaled_ln_norm(x: &PScaled, ctx: &PrimeContext, place: Place) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    match place {
        Place::Prime(p) => {
            let i = ctx.index_of(p).expect("prime in context");
            -(x.exponents()[i] as f64) * libm::log(p as f64)
        }
        Place::Infinity => x.ln_abs(ctx),
    }
}

/// A finite piece of a (possibly bilateral) sample path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub ctx: PrimeContext,
    /// `g_1, …, g_N`.
    pub increments: Vec<GroupElement>,
    /// `R_0, R_1, …, R_N`.
    pub products: Vec<GroupElement>,
    /// `g_0, g_{-1}, …, g_{-M+1}`.
    pub past_increments: Vec<GroupElement>,
    /// `R_0, R_{-1}, …, R_{-M}`.
    pub past_products: Vec<GroupElement>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.increments.len()
    }

    pub fn last(&self) -> &GroupElement {
        self.products.last().expect("R_0 is always present")
    }
}

fn collect_lane(
    spec: &MeasureSpec,
    seed: WalkSeed,
    lane: Lane,
    steps: u64,
) -> Result<(Vec<GroupElement>, Vec<GroupElement>)> {
    let mut walker = Walker::new(spec, seed, lane);
    let mut incs = Vec::with_capacity(steps as usize);
    let mut prods = Vec::with_capacity(steps as usize + 1);
    prods.push(GroupElement::identity());
    for _ in 0..steps {
        let g = walker.step()?.clone();
        incs.push(match lane {
            Lane::Future => g,
            Lane::Past => g.inverse(),
        });
        prods.push(walker.current());
    }
    Ok((incs, prods))
}

pub fn run_walk(spec: &MeasureSpec, seed: WalkSeed, horizon: u64) -> Result<Trajectory> {
    run_bilateral(spec, seed, 0, horizon)
}

/// `R_{-m} = g_0^{-1} ⋯ g_{-m+1}^{-1}` for `m ≤ M` and `R_n` for `n ≤ N`.
pub fn run_bilateral(spec: &MeasureSpec, seed: WalkSeed, past: u64, future: u64) -> Result<Trajectory> {
    let (increments, products) = collect_lane(spec, seed, Lane::Future, future)?;
    let (past_increments, past_products) = collect_lane(spec, seed, Lane::Past, past)?;
    Ok(Trajectory {
        ctx: spec.context().clone(),
        increments,
        products,
        past_increments,
        past_products,
    })
}

/// `(1/n) ln⁺ |Z_n|_place` for `n = 1..N`.
pub fn sublinearity_series(traj: &Trajectory, place: Place) -> Vec<f64> {
    traj.products
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, r)| crate::arith::ln_plus_norm(r.b(), place) / n as f64)
        .collect()
}

/// Terminal `(1/N) ln⁺ |Z_N|_place` without storing the path.
pub fn terminal_sublinearity(spec: &MeasureSpec, seed: WalkSeed, horizon: u64, place: Place) -> Result<f64> {
    let mut w = Walker::new(spec, seed, Lane::Future);
    for _ in 0..horizon {
        w.step()?;
    }
    Ok(if horizon == 0 {
        0.0
    } else {
        w.ln_plus_norm_z(place) / horizon as f64
    })
}

/// Pairs `(n, ln |Z_{n+1} - Z_n|_place)` for `n < N`, skipping steps whose
/// translation vanishes.
pub fn increment_log_norms(spec: &MeasureSpec, seed: WalkSeed, horizon: u64, place: Place) -> Result<Vec<(u64, f64)>> {
    let mut w = Walker::new(spec, seed, Lane::Future);
    let mut out = Vec::new();
    for n in 0..horizon {
        w.step()?;
        let l = w.ln_norm_last_increment(place).expect("a step was taken");
        if l.is_finite() {
            out.push((n, l));
        }
    }
    Ok(out)
}

/// Pairs `(n, ln |A_n|_place)` for `n = 1..N`.
pub fn exponent_series(spec: &MeasureSpec, seed: WalkSeed, horizon: u64, place: Place) -> Result<Vec<(u64, f64)>> {
    let mut w = Walker::new(spec, seed, Lane::Future);
    let mut out = Vec::with_capacity(horizon as usize);
    for n in 1..=horizon {
        w.step()?;
        out.push((n, w.ln_norm_a(place)));
    }
    Ok(out)
}
