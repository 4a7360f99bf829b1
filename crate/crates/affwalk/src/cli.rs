//! Subcommands of the `affwalk` binary.
//!
//! Every command writes to `--output` (standard output by default). JSON
//! commands emit one record per line; see [`crate::records`] for the
//! schemas. A run that stops on a resource or convergence failure still
//! writes what it has, followed by `{"partial":true,"error":…}`, and exits
//! with code 3.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use affwalk_core::boundary::{approximate_boundary_point, BoundaryFunction};
use affwalk_core::geometry::{geodesic_to_target, trajectory_geometry};
use affwalk_core::strips::{enumerate_ball_points, enumerate_strip_window, BoundaryTarget, StripQuery, WindowParams, DEFAULT_BOX_LIMIT};
use affwalk_core::walk::{Lane, Walker};
use affwalk_core::{drift_vector, run_walk, Error as CoreError, GroupElement, MeasureSpec, Place, PrimeContext, Rational, WalkSeed};
use clap::{Args, Parser, Subcommand};

use crate::batch;
use crate::config::load_measure;
use crate::error::CliError;
use crate::records::*;

#[derive(Debug, Parser)]
#[command(name = "affwalk", version, about = "Random walks on rational affine groups")]
pub struct Cli {
    /// Worker threads; 0 uses one per core. Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    /// Write output here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Measure file (TOML).
    #[arg(long, short)]
    pub measure: PathBuf,
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    /// Master seed for all randomness.
    #[arg(long, short, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drift vector and boundary places of a measure (one JSON record).
    Drift {
        #[command(flatten)]
        m: MeasureArgs,
    },
    /// Sample paths, one JSON record per step.
    Simulate {
        #[command(flatten)]
        m: MeasureArgs,
        #[command(flatten)]
        s: SeedArgs,
        /// Future steps per stream.
        #[arg(long, short = 'n', default_value_t = 100)]
        steps: u64,
        /// Past steps per stream (bilateral paths).
        #[arg(long, default_value_t = 0)]
        past: u64,
        /// Number of streams, indexed from 0.
        #[arg(long, default_value_t = 1)]
        streams: u64,
    },
    /// Boundary point approximations, or an empirical exit law.
    Boundary {
        #[command(flatten)]
        m: MeasureArgs,
        #[command(flatten)]
        s: SeedArgs,
        /// Digits per finite place; the real place is certified to 2^-precision.
        #[arg(long, default_value_t = 16)]
        precision: usize,
        #[arg(long, default_value_t = 100_000)]
        max_horizon: u64,
        #[arg(long, default_value_t = 1)]
        streams: u64,
        /// Histogram exit balls at `--place` and `--resolution` instead.
        #[arg(long)]
        exit_law: bool,
        #[arg(long, default_value = "2")]
        place: Place,
        /// Ball radius p^-resolution, or dyadic intervals of width 2^-resolution.
        #[arg(long, default_value_t = 3)]
        resolution: i64,
    },
    /// Monte Carlo values of the harmonic function of a boundary function.
    Harmonic {
        #[command(flatten)]
        m: MeasureArgs,
        #[command(flatten)]
        s: SeedArgs,
        /// Boundary function, e.g. `const(1/2) + 1*ball(2,0,1)`.
        #[arg(long)]
        psi: String,
        /// Group elements `(a,b)` to evaluate at; the identity by default.
        #[arg(long = "at")]
        at: Vec<String>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 100_000)]
        horizon: u64,
        /// Report the mean-value residual at each point instead.
        #[arg(long)]
        residual: bool,
    },
    /// Elements of a strip inside the window C_n, one JSON record each.
    Strips {
        #[command(flatten)]
        m: MeasureArgs,
        /// `place=value`, one per place with nonzero drift.
        #[arg(long = "target", required = true)]
        targets: Vec<BoundaryTarget>,
        #[arg(long, short = 'n')]
        n: u64,
        /// Window growth constant; defaults to 1 + 2 max |drift|.
        #[arg(long)]
        k: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_BOX_LIMIT)]
        limit: u64,
    },
    /// Window hit frequencies and strip counts over window scales.
    Census {
        #[command(flatten)]
        m: MeasureArgs,
        #[command(flatten)]
        s: SeedArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [8u64, 16, 32, 64])]
        n_list: Vec<u64>,
        #[arg(long, default_value_t = 100)]
        hit_seeds: u64,
        /// Bilateral target pairs.
        #[arg(long, default_value_t = 20)]
        pairs: u64,
        #[arg(long, default_value_t = 400)]
        target_horizon: u64,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_BOX_LIMIT)]
        limit: u64,
    },
    /// Half-plane and tree coordinates of a path (CSV), or a tree geodesic.
    Geometry {
        /// Measure file; required unless `--geodesic` is given.
        #[arg(long, short)]
        measure: Option<PathBuf>,
        #[command(flatten)]
        s: SeedArgs,
        #[arg(long, short = 'n', default_value_t = 100)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// `p=z`: list the discs D^p(k, z) instead.
        #[arg(long)]
        geodesic: Option<BoundaryTarget>,
        /// Disc levels `kmin:kmax` for `--geodesic`.
        #[arg(long, default_value = "-8:0", allow_hyphen_values = true)]
        levels: String,
    },
    /// Points of Z(P) in a product of unit balls, one rational per line.
    Ballpoints {
        #[arg(long, value_delimiter = ',', required = true)]
        primes: Vec<u64>,
        /// `place=value` for each place of P and `inf`.
        #[arg(long = "target", required = true)]
        targets: Vec<BoundaryTarget>,
    },
}

fn parse_element(s: &str, ctx: &PrimeContext) -> Result<GroupElement, CliError> {
    Ok(GroupElement::parse(s, ctx)?)
}

/// Writes `records`, then a partial marker if `err` is set.
fn finish<T: serde::Serialize>(out: &mut (dyn Write + Send), records: &[T], err: Option<CliError>) -> Result<(), CliError> {
    for r in records {
        write_jsonl(out, r)?;
    }
    match err {
        Some(e) => {
            if e.exit_code() == 3 {
                write_partial(out, &e)?;
            }
            Err(e)
        }
        None => Ok(()),
    }
}

/// Records of one stream, with those written before a failure.
type StreamResult<T> = Result<Vec<T>, (Vec<T>, CliError)>;

/// Splits per-stream results at the first failure.
fn take_until_error<T>(results: Vec<StreamResult<T>>) -> (Vec<T>, Option<CliError>) {
    let mut out = Vec::new();
    for r in results {
        match r {
            Ok(v) => out.extend(v),
            Err((v, e)) => {
                out.extend(v);
                return (out, Some(e));
            }
        }
    }
    (out, None)
}

fn simulate_stream(spec: &MeasureSpec, seed: WalkSeed, steps: u64, past: u64) -> StreamResult<StepRecord> {
    let mut recs = Vec::new();
    for (lane, count) in [(Lane::Future, steps), (Lane::Past, past)] {
        let mut w = Walker::new(spec, seed, lane);
        for m in 1..=count {
            let g = match w.step() {
                Ok(g) => g.clone(),
                Err(e) => return Err((recs, e.into())),
            };
            let (n, inc) = match lane {
                Lane::Future => (m as i64, g),
                Lane::Past => (-(m as i64), g.inverse()),
            };
            recs.push(StepRecord::new(seed.stream_index, n, &inc, &w));
        }
    }
    Ok(recs)
}

fn parse_levels(s: &str) -> Result<(i64, i64), CliError> {
    let bad = || CliError::Config(format!("--levels expects kmin:kmax, got {s:?}"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let (lo, hi): (i64, i64) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

pub fn run(cli: &Cli, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    batch::with_jobs(cli.jobs, || run_command(&cli.command, out))
}

fn run_command(cmd: &Command, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    match cmd {
        Command::Drift { m } => {
            let spec = load_measure(&m.measure)?;
            write_jsonl(out, &DriftRecord::new(&drift_vector(&spec)))
        }
        Command::Simulate { m, s, steps, past, streams } => {
            let spec = load_measure(&m.measure)?;
            let results = batch::map_streams(*streams, |i| simulate_stream(&spec, WalkSeed::new(s.seed, i), *steps, *past));
            let (recs, err) = take_until_error(results);
            finish(out, &recs, err)
        }
        Command::Boundary {
            m,
            s,
            precision,
            max_horizon,
            streams,
            exit_law,
            place,
            resolution,
        } => {
            let spec = load_measure(&m.measure)?;
            if *exit_law {
                return match batch::exit_law(&spec, s.seed, *streams, *place, *resolution, *max_horizon) {
                    Ok(law) => write_jsonl(out, &ExitLawRecord::new(&law)),
                    Err(e) => finish::<ExitLawRecord>(out, &[], Some(e.into())),
                };
            }
            let results = batch::map_streams(*streams, |i| {
                approximate_boundary_point(&spec, WalkSeed::new(s.seed, i), *precision, *max_horizon)
            });
            let mut recs = Vec::new();
            let mut failure = None;
            for (i, r) in results.into_iter().enumerate() {
                match r {
                    Ok(bp) => recs.push(BoundaryRecord::new(i as u64, &bp, false)),
                    Err(CoreError::Convergence { best_effort, horizon }) => {
                        recs.push(BoundaryRecord::new(i as u64, &best_effort, true));
                        failure.get_or_insert(CliError::Core(CoreError::Convergence { horizon, best_effort }));
                    }
                    Err(e) => {
                        failure = Some(e.into());
                        break;
                    }
                }
            }
            finish(out, &recs, failure)
        }
        Command::Harmonic {
            m,
            s,
            psi,
            at,
            samples,
            horizon,
            residual,
        } => {
            let spec = load_measure(&m.measure)?;
            let f: BoundaryFunction = psi.parse()?;
            let points = if at.is_empty() {
                vec![GroupElement::identity()]
            } else {
                at.iter().map(|g| parse_element(g, spec.context())).collect::<Result<Vec<_>, _>>()?
            };
            if *residual {
                let mut recs = Vec::new();
                for g in &points {
                    match batch::harmonic_residual(&spec, &f, g, s.seed, *samples, *horizon) {
                        Ok(e) => recs.push(ResidualRecord::new(psi, g, &e)),
                        Err(e) => return finish(out, &recs, Some(e.into())),
                    }
                }
                finish(out, &recs, None)
            } else {
                match batch::harmonic_values(&spec, &f, &points, s.seed, *samples, *horizon) {
                    Ok(est) => {
                        let recs: Vec<_> = points.iter().zip(&est).map(|(g, e)| HarmonicRecord::new(psi, g, e)).collect();
                        finish(out, &recs, None)
                    }
                    Err(e) => finish::<HarmonicRecord>(out, &[], Some(e.into())),
                }
            }
        }
        Command::Strips { m, targets, n, k, limit } => {
            let spec = load_measure(&m.measure)?;
            let report = drift_vector(&spec);
            let q = StripQuery::from_targets(targets, &report)?;
            let params = WindowParams::new(k.unwrap_or_else(|| WindowParams::default_k(&report)), *n, &report)?;
            match enumerate_strip_window(&q, &params, &report, *limit) {
                Ok(elems) => {
                    let recs: Vec<_> = elems
                        .iter()
                        .map(|g| StripElementRecord {
                            n: *n,
                            a: g.a().to_string(),
                            b: g.b().to_string(),
                        })
                        .collect();
                    finish(out, &recs, None)
                }
                Err(e) => finish::<StripElementRecord>(out, &[], Some(e.into())),
            }
        }
        Command::Census {
            m,
            s,
            n_list,
            hit_seeds,
            pairs,
            target_horizon,
            k,
            limit,
        } => {
            let spec = load_measure(&m.measure)?;
            let report = match batch::strip_census(&spec, s.seed, *k, n_list, *hit_seeds, *pairs, *target_horizon, *limit) {
                Ok(r) => r,
                Err(e) => return finish::<CensusRecord>(out, &[], Some(e.into())),
            };
            let mut recs = Vec::new();
            for row in &report.rows {
                for (j, (count, log)) in row.strip_counts.iter().zip(row.log_count_over_n()).enumerate() {
                    recs.push(CensusRecord::Row {
                        n: row.n,
                        pair: j as u64,
                        hit_frequency: round12(row.hit_frequency()),
                        strip_count: count.to_string(),
                        log_count_over_n: log.and_then(round12),
                    });
                }
            }
            recs.push(CensusRecord::Summary {
                k: round12(report.k),
                pairs: *pairs,
                decreasing_pairs: report.decreasing_pairs as u64,
                growth_c0: report.growth_fit.and_then(|f| round12(f.0)),
                growth_c1: report.growth_fit.and_then(|f| round12(f.1)),
            });
            finish(out, &recs, None)
        }
        Command::Geometry {
            measure,
            s,
            steps,
            stream,
            geodesic,
            levels,
        } => {
            if let Some(t) = geodesic {
                let p = t
                    .place
                    .as_prime()
                    .ok_or_else(|| CliError::Config("--geodesic needs a finite place p=z".into()))?;
                let (lo, hi) = parse_levels(levels)?;
                return write_geodesic(out, &geodesic_to_target(p, &t.value, lo, hi));
            }
            let path = measure
                .as_ref()
                .ok_or_else(|| CliError::Config("geometry needs --measure or --geodesic".into()))?;
            let spec = load_measure(path)?;
            let traj = run_walk(&spec, WalkSeed::new(s.seed, *stream), *steps)?;
            write_geometry(out, spec.context().primes(), &trajectory_geometry(&traj))
        }
        Command::Ballpoints { primes, targets } => {
            let ctx = PrimeContext::new(primes.iter().copied())?;
            let mut map: BTreeMap<Place, Rational> = BTreeMap::new();
            for t in targets {
                if map.insert(t.place, t.value.clone()).is_some() {
                    return Err(CliError::Config(format!("duplicate target for place {}", t.place)));
                }
            }
            write_rationals(out, &enumerate_ball_points(&ctx, &map)?)
        }
    }
}
