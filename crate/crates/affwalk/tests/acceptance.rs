//! Acceptance suite: one line per criterion, then a nonzero exit if any fail.
//!
//! Tolerances are pinned in the constants below.

use std::collections::BTreeMap;
use std::fs;
use std::process::Command;
use std::time::Instant;

use affwalk::batch;
use affwalk::records::*;
use affwalk_core::arith::{pnorm, product_formula_sides};
use affwalk_core::boundary::{approximate_boundary_point, BoundaryComponent, BoundaryFunction, BallId};
use affwalk_core::stats::{ols, relative_error};
use affwalk_core::strips::{count_lattice_ball, enumerate_ball_points, LatticeKind, DEFAULT_BOX_LIMIT};
use affwalk_core::walk::increment_log_norms;
use affwalk_core::{drift_vector, reflect, validate_measure, GroupElement, MeasureSpec, Place, PrimeContext, RawAtom, Rational, WalkSeed};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const SLOPE_REL_TOL: f64 = 0.10;
const KS_MAX: f64 = 0.02;
const SIGMAS: f64 = 3.0;
const SUBLINEAR_MAX: f64 = 0.05;
const SUBLINEAR_MIN_RUNS: usize = 95;
const HIT_MIN: f64 = 0.9;
const MASTER_SEED: u64 = 20_240_601;

const PRIME_SETS: [&[u64]; 4] = [&[2], &[2, 3], &[2, 3, 5], &[2, 3, 5, 7]];

type Criterion = (&'static str, f64, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

fn ctx(ps: &[u64]) -> PrimeContext {
    PrimeContext::new(ps.iter().copied()).unwrap()
}

fn unit_from_exponents(ps: &[u64], exps: &[i64], negative: bool) -> Rational {
    let mut num = BigInt::from(1);
    let mut den = BigInt::from(1);
    for (&p, &e) in ps.iter().zip(exps) {
        let pw = num_traits::pow(BigInt::from(p), e.unsigned_abs() as usize);
        if e >= 0 {
            num *= pw;
        } else {
            den *= pw;
        }
    }
    if negative {
        num = -num;
    }
    Rational::new(num, den)
}

fn product_formula() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let mut bad = 0;
    for _ in 0..100_000 {
        let ps = PRIME_SETS[rng.random_range(0..4)];
        let exps: Vec<i64> = ps.iter().map(|_| rng.random_range(-30..=30)).collect();
        let a = unit_from_exponents(ps, &exps, rng.random());
        let (real, adelic) = product_formula_sides(&a, &ctx(ps)).unwrap();
        let expected_real = unit_from_exponents(ps, &exps, false);
        let norms_ok = ps
            .iter()
            .zip(&exps)
            .all(|(&p, &e)| pnorm(&a, Place::Prime(p)) == Rational::power_of(p, -e));
        if real != adelic || real != expected_real || !norms_ok {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{bad} mismatches in 100000 units"))
}

fn valuation_i128(mut x: i128, p: i128) -> u32 {
    if x == 0 {
        return u32::MAX;
    }
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// Scans `j/D` over the real window, with `D = ∏ p^{e_p}` the largest
/// denominator any point of the ball can have.
fn ball_points_brute_force(ps: &[u64], finite: &[(i128, u32)], real: (i128, i128)) -> Vec<Rational> {
    let d: i128 = ps.iter().zip(finite).map(|(&p, &(_, e))| (p as i128).pow(e)).product();
    let (n_inf, d_inf) = real;
    let lo = (n_inf - d_inf) * d / d_inf - 1;
    let hi = (n_inf + d_inf) * d / d_inf + 1;
    let mut out = Vec::new();
    for j in lo..=hi {
        if (j * d_inf - n_inf * d).abs() > d * d_inf {
            continue;
        }
        let ok = ps.iter().zip(finite).all(|(&p, &(n, e))| {
            let p = p as i128;
            let pe = p.pow(e);
            // j/D - n/p^e = (j - n D/p^e) / D
            valuation_i128(j - n * (d / pe), p) >= e
        });
        if ok {
            out.push(Rational::new(BigInt::from(j), BigInt::from(d)));
        }
    }
    out
}

fn ball_point_counting() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let mut bad = 0;
    let mut sizes = [0usize; 4];
    for i in 0..10_000 {
        let ps = PRIME_SETS[i % 3];
        let max_e = if ps.len() == 1 { 6 } else { 3 };
        let finite: Vec<(i128, u32)> = ps.iter().map(|_| (rng.random_range(-1000..=1000), rng.random_range(0..=max_e))).collect();
        let d_inf: i128 = match rng.random_range(0..3) {
            0 => 7,
            1 => 1,
            _ => ps.iter().map(|&p| (p as i128).pow(rng.random_range(0..=max_e))).product(),
        };
        let n_inf = rng.random_range(-20 * d_inf..=20 * d_inf);
        let mut targets = BTreeMap::new();
        for (&p, &(n, e)) in ps.iter().zip(&finite) {
            targets.insert(Place::Prime(p), Rational::new(BigInt::from(n), BigInt::from(p).pow(e)));
        }
        targets.insert(Place::Infinity, Rational::new(BigInt::from(n_inf), BigInt::from(d_inf)));
        let mut got = enumerate_ball_points(&ctx(ps), &targets).unwrap();
        got.sort();
        let mut want = ball_points_brute_force(ps, &finite, (n_inf, d_inf));
        want.sort();
        sizes[got.len().min(3)] += 1;
        if got != want || !(2..=3).contains(&got.len()) {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!("{bad} mismatches in 10000 targets; {} with 2 points, {} with 3", sizes[2], sizes[3]),
    )
}

fn drift_identity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let mut bad = 0;
    for _ in 0..1000 {
        let ps = PRIME_SETS[rng.random_range(0..4)];
        let c = ctx(ps);
        let k = rng.random_range(1..=6);
        let weights: Vec<i64> = (0..k).map(|_| rng.random_range(1..=20)).collect();
        let total: i64 = weights.iter().sum();
        let mut expected: BTreeMap<u64, Rational> = ps.iter().map(|&p| (p, Rational::zero())).collect();
        let mut raw = Vec::new();
        for &w in &weights {
            let exps: Vec<i64> = ps.iter().map(|_| rng.random_range(-4..=4)).collect();
            let a = unit_from_exponents(ps, &exps, rng.random());
            let b = Rational::new(
                BigInt::from(rng.random_range(-50..=50)),
                BigInt::from(ps[rng.random_range(0..ps.len())]).pow(rng.random_range(0..3)),
            );
            let w = Rational::from_i64s(w, total);
            for (&p, &e) in ps.iter().zip(&exps) {
                let slot = expected.get_mut(&p).unwrap();
                *slot = &*slot + &(&w * &Rational::from(e));
            }
            raw.push(RawAtom::new(a, b, w));
        }
        let spec = validate_measure(raw, Some(c)).unwrap();
        let r = drift_vector(&spec);
        let reflected = drift_vector(&reflect(&spec));
        let sum_zero = r.drift_sum_coefficients().values().all(Rational::is_zero);
        let coeffs_ok = ps.iter().all(|p| {
            r.expected_valuations[p] == expected[p]
                && r.infinity_log_coefficients[p] == expected[p]
                && reflected.expected_valuations[p] == -&expected[p]
        });
        let float_sum: f64 = r.drifts.values().sum();
        if !(sum_zero && coeffs_ok && float_sum.abs() < 1e-9) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{bad} failures in 1000 measures"))
}

fn pooled_slope(spec: &MeasureSpec, place: Place) -> f64 {
    let series = batch::map_streams(10, |s| increment_log_norms(spec, WalkSeed::new(MASTER_SEED, s), 10_000, place).unwrap());
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .into_iter()
        .flatten()
        .filter(|&(n, _)| (100..=10_000).contains(&n))
        .map(|(n, y)| (n as f64, y))
        .unzip();
    ols(&xs, &ys).unwrap().0
}

fn convergence_rate() -> Outcome {
    let finite = MeasureSpec::parse(&[("(2,1)", "1/3"), ("(2,-1)", "1/3"), ("(1/2,1)", "1/6"), ("(1/2,-1)", "1/6")], None).unwrap();
    let mirrored = MeasureSpec::parse(&[("(1/2,1)", "1/3"), ("(1/2,-1)", "1/3"), ("(2,1)", "1/6"), ("(2,-1)", "1/6")], None).unwrap();
    let phi2 = drift_vector(&finite).drift(Place::Prime(2));
    let phi_inf = drift_vector(&mirrored).drift(Place::Infinity);
    let s2 = pooled_slope(&finite, Place::Prime(2));
    let s_inf = pooled_slope(&mirrored, Place::Infinity);
    let (e2, e_inf) = (relative_error(s2, phi2), relative_error(s_inf, phi_inf));
    outcome(
        e2 <= SLOPE_REL_TOL && e_inf <= SLOPE_REL_TOL,
        format!("slope {s2:.4} vs drift {phi2:.4} at 2 (rel {e2:.3}); slope {s_inf:.4} vs drift {phi_inf:.4} at inf (rel {e_inf:.3}); tolerance {SLOPE_REL_TOL}"),
    )
}

fn exit_laws() -> Outcome {
    let halving = MeasureSpec::parse(&[("(1/2,0)", "1/2"), ("(1/2,1)", "1/2")], None).unwrap();
    let points = batch::map_streams(10_000, |s| approximate_boundary_point(&halving, WalkSeed::new(MASTER_SEED, s), 20, 100_000));
    let mut xs = Vec::new();
    for p in points {
        match p.map(|bp| bp.components[&Place::Infinity].clone()) {
            Ok(BoundaryComponent::Interval { lo, hi }) => xs.push(((&lo + &hi) * Rational::from_i64s(1, 2)).to_f64()),
            _ => return outcome(false, "uniform case: a boundary point did not converge"),
        }
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = (x / 2.0).clamp(0.0, 1.0);
            f64::max((i + 1) as f64 / n - f, f - i as f64 / n)
        })
        .fold(0.0, f64::max);

    let doubling = MeasureSpec::parse(&[("(2,0)", "1/2"), ("(2,1)", "1/2")], None).unwrap();
    let law = batch::exit_law(&doubling, MASTER_SEED, 10_000, Place::Prime(2), 3, 100_000).unwrap();
    let sigma = (0.125f64 * 0.875 / law.total as f64).sqrt();
    let worst = (0..8)
        .map(|b| {
            let id = BallId::Padic {
                prime: 2,
                resolution: 3,
                center: Rational::from(b),
            };
            (law.frequency(&id) - 0.125).abs() / sigma
        })
        .fold(0.0, f64::max);
    outcome(
        ks < KS_MAX && worst <= SIGMAS && law.skipped == 0 && law.histogram.len() == 8,
        format!("uniform KS {ks:.4} (limit {KS_MAX}); Haar worst ball {worst:.2} sigma (limit {SIGMAS}), {} balls", law.histogram.len()),
    )
}

fn harmonicity() -> Outcome {
    let cases = [
        (vec![("(1/2,0)", "1/2"), ("(1/2,1)", "1/2")], "ball(inf,1/2,1)", ["(1,0)", "(1,-1/2)"]),
        (vec![("(2,0)", "1/2"), ("(2,1)", "1/2")], "ball(2,0,1)", ["(1,0)", "(1,1)"]),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (atoms, psi, gs) in cases {
        let spec = MeasureSpec::parse(&atoms, None).unwrap();
        let f: BoundaryFunction = psi.parse().unwrap();
        for g in gs {
            let g = GroupElement::parse(g, spec.context()).unwrap();
            let e = batch::harmonic_residual(&spec, &f, &g, MASTER_SEED, 10_000, 100_000).unwrap();
            let r = &e.residual;
            let ok = r.value.abs() <= SIGMAS * r.std_error && r.skipped == 0;
            pass &= ok;
            detail.push(format!("{psi} at {g}: residual {:.4} se {:.4}", r.value, r.std_error));
        }
    }
    outcome(pass, detail.join("; "))
}

fn centered_sublinearity() -> Outcome {
    let spec = MeasureSpec::parse(&[("(2,0)", "1/4"), ("(1/2,0)", "1/4"), ("(1,1)", "1/4"), ("(1,-1)", "1/4")], None).unwrap();
    let vals = batch::terminal_sublinearities(&spec, MASTER_SEED, 100, 10_000, Place::Infinity).unwrap();
    let good = vals.iter().filter(|&&v| v < SUBLINEAR_MAX).count();
    let max = vals.iter().copied().fold(0.0, f64::max);
    outcome(
        good >= SUBLINEAR_MIN_RUNS,
        format!("{good}/100 runs below {SUBLINEAR_MAX} (need {SUBLINEAR_MIN_RUNS}); largest {max:.4}"),
    )
}

fn strip_census() -> Outcome {
    let spec = MeasureSpec::parse(&[("(2,0)", "1/2"), ("(2,1)", "1/2")], None).unwrap();
    let report = batch::strip_census(&spec, MASTER_SEED, None, &[8, 16, 32, 64], 1000, 20, 400, DEFAULT_BOX_LIMIT).unwrap();
    let k_ok = (report.k - (1.0 + 2.0 * std::f64::consts::LN_2)).abs() < 1e-12;
    let hits: Vec<f64> = report.rows.iter().filter(|r| r.n <= 32).map(|r| r.hit_frequency()).collect();
    let hits_ok = hits.len() == 3 && hits.iter().all(|&h| h >= HIT_MIN);
    outcome(
        k_ok && hits_ok && report.decreasing_pairs == 20,
        format!(
            "K {:.4}; hit frequencies {hits:?} (need {HIT_MIN}); {}/20 pairs with decreasing (1/n) ln card",
            report.k, report.decreasing_pairs
        ),
    )
}

fn big_f64(c: &BigInt) -> f64 {
    c.to_f64().unwrap()
}

fn units_brute_force(ps: &[u64], m: &Rational, bound: i64) -> usize {
    let mut count = 0;
    let mut exps = vec![-bound; ps.len()];
    loop {
        for negative in [false, true] {
            let a = unit_from_exponents(ps, &exps, negative);
            if pnorm(&a, Place::Infinity) <= *m && ps.iter().all(|&p| pnorm(&a, Place::Prime(p)) <= *m) {
                count += 1;
            }
        }
        let mut i = 0;
        while i < exps.len() && exps[i] == bound {
            exps[i] = -bound;
            i += 1;
        }
        if i == exps.len() {
            return count;
        }
        exps[i] += 1;
    }
}

fn translations_brute_force(ps: &[u64], m: i64) -> usize {
    // b = j/N with N = ∏ p^{a_p}, p^{a_p - 1} ≤ m < p^{a_p}; |b|_p ≤ m needs v_p(j) ≥ 1
    let n: i128 = ps
        .iter()
        .map(|&p| {
            let mut pw = p as i128;
            while pw <= m as i128 {
                pw *= p as i128;
            }
            pw
        })
        .product();
    let rad: i128 = ps.iter().map(|&p| p as i128).product();
    (-(m as i128) * n..=(m as i128) * n).filter(|j| j % rad == 0).count()
}

fn growth_bounds() -> Outcome {
    let spot = count_lattice_ball(&ctx(&[2]), LatticeKind::Translations, &q("2")).unwrap() == BigInt::from(9)
        && count_lattice_ball(&ctx(&[2]), LatticeKind::Units, &q("4")).unwrap() == BigInt::from(10)
        && count_lattice_ball(&ctx(&[2]), LatticeKind::Units, &q("1")).unwrap() == BigInt::from(2);
    let mut brute_ok = true;
    let mut detail = Vec::new();
    let mut pass = spot;
    for ps in &PRIME_SETS[..3] {
        let c = ctx(ps);
        let mut c_trans = f64::NEG_INFINITY;
        let mut c2_max = f64::NEG_INFINITY;
        let (mut lx, mut ly) = (Vec::new(), Vec::new());
        for m in (2..=1024).step_by(2) {
            let mr = Rational::from(m as i64);
            let t = count_lattice_ball(&c, LatticeKind::Translations, &mr).unwrap();
            let u = count_lattice_ball(&c, LatticeKind::Units, &mr).unwrap();
            c_trans = c_trans.max(big_f64(&t).ln() - 2.0 * m as f64);
            let lm = (m as f64).ln();
            c2_max = c2_max.max(big_f64(&u).ln() / lm);
            lx.push(lm);
            ly.push(big_f64(&u).ln());
            let trans_limit = if ps.len() == 1 { 64 } else { 8 };
            if m <= trans_limit && t != BigInt::from(translations_brute_force(ps, m as i64)) {
                brute_ok = false;
            }
            if m <= 32 && u != BigInt::from(units_brute_force(ps, &mr, 16)) {
                brute_ok = false;
            }
        }
        let slope = ols(&lx, &ly).unwrap().0;
        let c2_limit = 2.0 + ps.len() as f64;
        pass &= c_trans <= 0.0 && c2_max <= c2_limit;
        detail.push(format!(
            "P={ps:?}: c {c_trans:.3} (limit 0), c2 {c2_max:.3} (limit {c2_limit}), log-log slope {slope:.3}"
        ));
    }
    pass &= brute_ok;
    outcome(pass, format!("spot values {}; brute force {}; {}", if spot { "ok" } else { "wrong" }, if brute_ok { "agrees" } else { "disagrees" }, detail.join("; ")))
}

fn determinism() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let mixed = write(
        "mixed.toml",
        "atoms = [{ a = \"2\", b = \"1\", w = \"1/4\" }, { a = \"1/3\", b = \"-1\", w = \"1/4\" }, { a = \"3/2\", b = \"1/6\", w = \"1/4\" }, { a = \"1/2\", b = \"0\", w = \"1/4\" }]",
    );
    let doubling = write("doubling.toml", "atoms = [{ a = \"2\", b = \"0\", w = \"1/2\" }, { a = \"2\", b = \"1\", w = \"1/2\" }]");
    let halving = write("halving.toml", "atoms = [{ a = \"1/2\", b = \"0\", w = \"1/2\" }, { a = \"1/2\", b = \"1\", w = \"1/2\" }]");
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("drift", vec!["drift", "-m", &mixed]),
        ("simulate", vec!["simulate", "-m", &mixed, "-n", "200", "--past", "50", "--streams", "8", "-s", "7"]),
        ("boundary", vec!["boundary", "-m", &doubling, "--streams", "8", "-s", "7"]),
        ("boundary exit law", vec!["boundary", "-m", &halving, "--exit-law", "--place", "inf", "--resolution", "3", "--streams", "200"]),
        ("harmonic", vec!["harmonic", "-m", &halving, "--psi", "ball(inf,1/2,1)", "--samples", "300", "--at", "(1,0)", "--at", "(1/2,1)"]),
        ("harmonic residual", vec!["harmonic", "-m", &doubling, "--psi", "ball(2,0,1)", "--samples", "300", "--residual"]),
        ("strips", vec!["strips", "-m", &doubling, "--target", "2=1/3", "--target", "inf=-5/2", "-n", "6"]),
        ("census", vec!["census", "-m", &doubling, "--n-list", "8,16", "--hit-seeds", "50", "--pairs", "4"]),
        ("geometry", vec!["geometry", "-m", &mixed, "-n", "300", "-s", "3"]),
        ("ballpoints", vec!["ballpoints", "--primes", "2,3", "--target", "2=1/4", "--target", "3=2/9", "--target", "inf=7/5"]),
    ];
    let mut bad = Vec::new();
    for (name, args) in &runs {
        let mut outputs = Vec::new();
        for (i, jobs) in ["1", "1", "4"].iter().enumerate() {
            let path = dir.path().join(format!("out{i}"));
            let status = Command::new(env!("CARGO_BIN_EXE_affwalk"))
                .args(args)
                .args(["--jobs", jobs, "-o", path.to_str().unwrap()])
                .status()
                .unwrap();
            if !status.success() {
                bad.push(format!("{name} exited with {status}"));
            }
            outputs.push(fs::read(&path).unwrap());
        }
        if outputs[0].is_empty() || outputs.iter().any(|o| o != &outputs[0]) {
            bad.push(format!("{name} output differs"));
        }
        if !round_trips(name, &outputs[0]) {
            bad.push(format!("{name} output does not parse back"));
        }
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} subcommand runs byte-identical across reruns and --jobs 1/4", runs.len())
        } else {
            bad.join("; ")
        },
    )
}

fn parses<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> bool {
    matches!(read_jsonl::<T>(bytes), Ok((v, None)) if !v.is_empty())
}

fn round_trips(name: &str, bytes: &[u8]) -> bool {
    match name {
        "drift" => parses::<DriftRecord>(bytes),
        "simulate" => parses::<StepRecord>(bytes),
        "boundary" => parses::<BoundaryRecord>(bytes),
        "boundary exit law" => parses::<ExitLawRecord>(bytes),
        "harmonic" => parses::<HarmonicRecord>(bytes),
        "harmonic residual" => parses::<ResidualRecord>(bytes),
        "strips" => parses::<StripElementRecord>(bytes),
        "census" => parses::<CensusRecord>(bytes),
        "geometry" => read_geometry(bytes).is_ok_and(|r| !r.is_empty()),
        "ballpoints" => read_rationals(bytes).is_ok_and(|r| (2..=3).contains(&r.len())),
        _ => false,
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("product formula", 10.0, product_formula),
        ("ball point counting", 60.0, ball_point_counting),
        ("exact drift identity", 10.0, drift_identity),
        ("boundary convergence rate", 60.0, convergence_rate),
        ("exit-law oracles", 120.0, exit_laws),
        ("harmonicity", 120.0, harmonicity),
        ("centered sublinearity", 120.0, centered_sublinearity),
        ("strip census", 300.0, strip_census),
        ("growth bounds", 60.0, growth_bounds),
        ("determinism", 30.0, determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let pass = o.pass && secs < *limit;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {} {}: {} ({}; {secs:.1}s, limit {limit}s)",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
