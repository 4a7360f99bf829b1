//! Parallel drivers over stream indices.
//!
//! Work for stream `s` always uses `WalkSeed::new(master_seed, s)` and the
//! results are gathered in stream order, so the output does not depend on
//! the number of worker threads.

use affwalk_core::boundary::{
    mean_value_points, sample_exit_point, BoundaryFunction, EmpiricalExitLaw, ExitSample, HarmonicAccumulator,
    HarmonicEstimate, HarmonicProblem, ResidualAccumulator, ResidualEstimate,
};
use affwalk_core::measure::drift_vector;
use affwalk_core::strips::{census_hit, census_targets, count_strip_window, CensusReport, CensusRow, WindowParams};
use affwalk_core::walk::terminal_sublinearity;
use affwalk_core::{Error, GroupElement, MeasureSpec, Place, Rational, Result, WalkSeed};
use rayon::prelude::*;

/// Runs `f` on a pool of `jobs` threads (`0` lets rayon choose).
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool")
        .install(f)
}

/// `f(s)` for `s in 0..count`, in order.
pub fn map_streams<T: Send>(count: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..count).into_par_iter().map(f).collect()
}

pub fn exit_samples(
    spec: &MeasureSpec,
    master_seed: u64,
    seeds: u64,
    place: Place,
    resolution: i64,
    horizon: u64,
) -> Result<Vec<Option<ExitSample>>> {
    if !drift_vector(spec).boundary_places.contains(&place) {
        return Err(Error::Validation(format!("{place} is not a boundary place of the measure")));
    }
    map_streams(seeds, |s| sample_exit_point(spec, WalkSeed::new(master_seed, s), place, resolution, horizon))
        .into_iter()
        .collect()
}

pub fn exit_law(
    spec: &MeasureSpec,
    master_seed: u64,
    seeds: u64,
    place: Place,
    resolution: i64,
    horizon: u64,
) -> Result<EmpiricalExitLaw> {
    let mut law = EmpiricalExitLaw::new(place, resolution);
    for s in exit_samples(spec, master_seed, seeds, place, resolution, horizon)? {
        law.record(s.as_ref());
    }
    Ok(law)
}

fn harmonic_samples(problem: &HarmonicProblem, master_seed: u64, samples: u64) -> Result<Vec<Option<Vec<Rational>>>> {
    map_streams(samples, |s| problem.sample(WalkSeed::new(master_seed, s)))
        .into_iter()
        .collect()
}

/// `f(g)` for every `g`, all from the same boundary samples.
pub fn harmonic_values(
    spec: &MeasureSpec,
    psi: &BoundaryFunction,
    points: &[GroupElement],
    master_seed: u64,
    samples: u64,
    horizon: u64,
) -> Result<Vec<HarmonicEstimate>> {
    let problem = HarmonicProblem::new(spec, psi.clone(), points.to_vec(), horizon)?;
    let mut accs = vec![HarmonicAccumulator::default(); points.len()];
    for v in harmonic_samples(&problem, master_seed, samples)? {
        for (i, acc) in accs.iter_mut().enumerate() {
            match &v {
                Some(v) => acc.add(&v[i]),
                None => acc.skip(),
            }
        }
    }
    Ok(accs.iter().map(HarmonicAccumulator::estimate).collect())
}

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
    for v in harmonic_samples(&problem, master_seed, samples)? {
        acc.add(&weights, v.as_deref());
    }
    Ok(acc.estimate())
}

pub fn terminal_sublinearities(
    spec: &MeasureSpec,
    master_seed: u64,
    seeds: u64,
    horizon: u64,
    place: Place,
) -> Result<Vec<f64>> {
    map_streams(seeds, |s| terminal_sublinearity(spec, WalkSeed::new(master_seed, s), horizon, place))
        .into_iter()
        .collect()
}

/// Parallel version of `strips::strip_census`, with identical output.
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
    let queries = map_streams(target_pairs, |s| {
        census_targets(spec, WalkSeed::new(master_seed, s), target_horizon, &report)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &n in n_list {
        let params = WindowParams::new(k, n, &report)?;
        let hits = map_streams(hit_seeds, |s| census_hit(spec, WalkSeed::new(master_seed, s), &params, &report))
            .into_iter()
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .filter(|h| *h)
            .count() as u64;
        let strip_counts = queries
            .par_iter()
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
