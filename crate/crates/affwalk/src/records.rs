//! Output records and their readers.
//!
//! Line-delimited JSON for everything except geometry, which is CSV.
//! Rationals are written as `num/den` strings and floats are rounded to 12
//! significant digits; non-finite floats become `null`. A run that stops on
//! a resource or convergence failure ends its JSON output with a
//! [`PartialMarker`] line.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use affwalk_core::boundary::{BoundaryComponent, BoundaryPoint, EmpiricalExitLaw, HarmonicEstimate, ResidualEstimate};
use affwalk_core::geometry::GeometryRecord;
use affwalk_core::walk::Walker;
use affwalk_core::{DriftReport, GroupElement, Place};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// `x` rounded to 12 significant digits, `None` when not finite.
pub fn round12(x: f64) -> Option<f64> {
    if !x.is_finite() {
        return None;
    }
    Some(format!("{x:.11e}").parse().expect("formatted float parses"))
}

fn place_map(values: impl IntoIterator<Item = (Place, f64)>) -> BTreeMap<String, Option<f64>> {
    values.into_iter().map(|(p, x)| (p.to_string(), round12(x))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftRecord {
    pub primes: Vec<u64>,
    pub expected_valuations: BTreeMap<String, String>,
    pub infinity_log_coefficients: BTreeMap<String, String>,
    pub drifts: BTreeMap<String, Option<f64>>,
    pub boundary_places: Vec<String>,
    pub reflected_boundary_places: Vec<String>,
    pub centered_places: Vec<String>,
}

impl DriftRecord {
    pub fn new(r: &DriftReport) -> Self {
        let names = |s: &std::collections::BTreeSet<Place>| s.iter().map(Place::to_string).collect();
        DriftRecord {
            primes: r.expected_valuations.keys().copied().collect(),
            expected_valuations: r.expected_valuations.iter().map(|(p, e)| (p.to_string(), e.to_string())).collect(),
            infinity_log_coefficients: r
                .infinity_log_coefficients
                .iter()
                .map(|(p, e)| (p.to_string(), e.to_string()))
                .collect(),
            drifts: place_map(r.drifts.iter().map(|(p, d)| (*p, *d))),
            boundary_places: names(&r.boundary_places),
            reflected_boundary_places: names(&r.reflected_boundary_places),
            centered_places: names(&r.centered_places),
        }
    }
}

/// One step of a walk. Future steps have `n ≥ 1` with increment `g_n`;
/// past steps have `n ≤ -1` with increment `g_{n+1}`, and `A_n, Z_n` are
/// the components of `R_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub stream: u64,
    pub n: i64,
    pub a_n: String,
    pub b_n: String,
    #[serde(rename = "A_n")]
    pub big_a: String,
    #[serde(rename = "Z_n")]
    pub z: String,
    pub ln_norm_a: BTreeMap<String, Option<f64>>,
    pub ln_plus_norm_z: BTreeMap<String, Option<f64>>,
}

impl StepRecord {
    pub fn new(stream: u64, n: i64, increment: &GroupElement, walker: &Walker) -> Self {
        let places: Vec<Place> = walker.context().places().collect();
        StepRecord {
            stream,
            n,
            a_n: increment.a().to_string(),
            b_n: increment.b().to_string(),
            big_a: walker.a().to_string(),
            z: walker.z().to_string(),
            ln_norm_a: place_map(places.iter().map(|&p| (p, walker.ln_norm_a(p)))),
            ln_plus_norm_z: place_map(places.iter().map(|&p| (p, walker.ln_plus_norm_z(p)))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ComponentRecord {
    Digits { start_exponent: i64, digits: Vec<u64> },
    Interval { lo: String, hi: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRecord {
    pub stream: u64,
    pub horizon_used: u64,
    pub confirmation_window: usize,
    pub components: BTreeMap<String, ComponentRecord>,
    /// Set when the digits did not settle and this is a best effort.
    pub partial: bool,
}

impl BoundaryRecord {
    pub fn new(stream: u64, bp: &BoundaryPoint, partial: bool) -> Self {
        BoundaryRecord {
            stream,
            horizon_used: bp.horizon_used,
            confirmation_window: bp.confirmation_window,
            components: bp
                .components
                .iter()
                .map(|(p, c)| {
                    let rec = match c {
                        BoundaryComponent::Digits(w) => ComponentRecord::Digits {
                            start_exponent: w.start_exponent,
                            digits: w.digits.clone(),
                        },
                        BoundaryComponent::Interval { lo, hi } => ComponentRecord::Interval {
                            lo: lo.to_string(),
                            hi: hi.to_string(),
                        },
                    };
                    (p.to_string(), rec)
                })
                .collect(),
            partial,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallCount {
    pub ball: String,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitLawRecord {
    pub place: String,
    pub resolution: i64,
    pub total: u64,
    pub skipped: u64,
    pub histogram: Vec<BallCount>,
}

impl ExitLawRecord {
    pub fn new(law: &EmpiricalExitLaw) -> Self {
        ExitLawRecord {
            place: law.place.to_string(),
            resolution: law.resolution,
            total: law.total,
            skipped: law.skipped,
            histogram: law
                .histogram
                .iter()
                .map(|(b, c)| BallCount {
                    ball: b.to_string(),
                    count: *c,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicRecord {
    pub psi: String,
    pub g: String,
    pub value: Option<f64>,
    pub std_error: Option<f64>,
    pub samples: u64,
    pub skipped: u64,
}

impl HarmonicRecord {
    pub fn new(psi: &str, g: &GroupElement, e: &HarmonicEstimate) -> Self {
        HarmonicRecord {
            psi: psi.to_string(),
            g: g.to_string(),
            value: round12(e.value),
            std_error: round12(e.std_error),
            samples: e.samples,
            skipped: e.skipped,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub psi: String,
    pub g: String,
    pub value: Option<f64>,
    pub mean_value: Option<f64>,
    pub residual: Option<f64>,
    pub std_error: Option<f64>,
    pub samples: u64,
    pub skipped: u64,
}

impl ResidualRecord {
    pub fn new(psi: &str, g: &GroupElement, e: &ResidualEstimate) -> Self {
        ResidualRecord {
            psi: psi.to_string(),
            g: g.to_string(),
            value: round12(e.value.value),
            mean_value: round12(e.mean_value.value),
            residual: round12(e.residual.value),
            std_error: round12(e.residual.std_error),
            samples: e.residual.samples,
            skipped: e.residual.skipped,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripElementRecord {
    pub n: u64,
    pub a: String,
    pub b: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CensusRecord {
    /// One target pair at one window scale.
    Row {
        n: u64,
        pair: u64,
        hit_frequency: Option<f64>,
        strip_count: String,
        log_count_over_n: Option<f64>,
    },
    Summary {
        k: Option<f64>,
        pairs: u64,
        decreasing_pairs: u64,
        growth_c0: Option<f64>,
        growth_c1: Option<f64>,
    },
}

/// Last line of an interrupted run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialMarker {
    pub partial: bool,
    pub error: String,
}

pub fn write_jsonl<T: Serialize>(out: &mut dyn Write, record: &T) -> Result<(), CliError> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_partial(out: &mut dyn Write, err: &CliError) -> Result<(), CliError> {
    write_jsonl(
        out,
        &PartialMarker {
            partial: true,
            error: err.to_string(),
        },
    )
}

/// Parses line-delimited records, splitting off a trailing partial marker.
pub fn read_jsonl<T: DeserializeOwned>(input: impl BufRead) -> Result<(Vec<T>, Option<PartialMarker>), CliError> {
    let mut out = Vec::new();
    let mut marker = None;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if marker.is_some() {
            return Err(CliError::Format("records after the partial marker".into()));
        }
        match serde_json::from_str::<PartialMarker>(&line) {
            Ok(m) if m.partial => marker = Some(m),
            _ => out.push(serde_json::from_str(&line)?),
        }
    }
    Ok((out, marker))
}

/// One parsed geometry row.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryRow {
    pub n: u64,
    pub x: f64,
    pub y: f64,
    /// `(prime, level, vertex label)`.
    pub vertices: Vec<(u64, i64, String)>,
}

fn float_field(x: f64) -> String {
    match round12(x) {
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

/// CSV with header `n,x,y,level_p,vertex_p,…`.
pub fn write_geometry(out: &mut dyn Write, primes: &[u64], records: &[GeometryRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["n".to_string(), "x".into(), "y".into()];
    for p in primes {
        header.push(format!("level_{p}"));
        header.push(format!("vertex_{p}"));
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.n.to_string(), float_field(r.x), float_field(r.y)];
        for v in &r.vertices {
            row.push(v.level().to_string());
            row.push(v.label());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_geometry(input: impl std::io::Read) -> Result<Vec<GeometryRow>, CliError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let primes: Vec<u64> = header
        .iter()
        .skip(3)
        .step_by(2)
        .map(|h| {
            h.strip_prefix("level_")
                .and_then(|p| p.parse().ok())
                .ok_or_else(|| CliError::Format(format!("bad geometry column {h:?}")))
        })
        .collect::<Result<_, _>>()?;
    let bad = |what: &str| CliError::Format(format!("bad geometry field {what}"));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, CliError> {
            let s = rec.get(i).ok_or_else(|| bad("count"))?;
            if s.is_empty() {
                Ok(f64::NAN)
            } else {
                s.parse().map_err(|_| bad(s))
            }
        };
        let vertices = primes
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let level = rec.get(3 + 2 * j).and_then(|s| s.parse().ok()).ok_or_else(|| bad("level"))?;
                let label = rec.get(4 + 2 * j).ok_or_else(|| bad("vertex"))?.to_string();
                Ok((p, level, label))
            })
            .collect::<Result<_, CliError>>()?;
        rows.push(GeometryRow {
            n: rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("n"))?,
            x: num(1)?,
            y: num(2)?,
            vertices,
        });
    }
    Ok(rows)
}

/// CSV `k,level,vertex` for a geodesic.
pub fn write_geodesic(out: &mut dyn Write, vertices: &[affwalk_core::group::TreeVertex]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["level", "center", "vertex"])?;
    for v in vertices {
        w.write_record([v.level().to_string(), v.center().to_string(), v.label()])?;
    }
    w.flush()?;
    Ok(())
}

/// One rational per line.
pub fn write_rationals(out: &mut dyn Write, values: &[affwalk_core::Rational]) -> Result<(), CliError> {
    for v in values {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

pub fn read_rationals(input: impl BufRead) -> Result<Vec<affwalk_core::Rational>, CliError> {
    input
        .lines()
        .filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
        .map(|l| Ok(l?.trim().parse()?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rounding() {
        assert_eq!(round12(1.0 / 3.0), Some(0.333333333333));
        assert_eq!(round12(f64::NAN), None);
        assert_eq!(serde_json::to_string(&round12(-std::f64::consts::LN_2 / 3.0)).unwrap(), "-0.231049060187");
    }

    proptest! {
        #[test]
        fn rounded_floats_print_at_most_twelve_digits(x in -1e12f64..1e12) {
            let s = serde_json::to_string(&round12(x)).unwrap();
            let digits = s.trim_start_matches('-').split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect::<String>();
            prop_assert!(digits.trim_start_matches('0').trim_end_matches('0').len() <= 12, "{}", s);
        }
    }

    #[test]
    fn partial_marker_round_trip() {
        let mut buf = Vec::new();
        let rec = StripElementRecord { n: 1, a: "2".into(), b: "1/2".into() };
        write_jsonl(&mut buf, &rec).unwrap();
        write_partial(&mut buf, &CliError::Config("x".into())).unwrap();
        let (recs, marker): (Vec<StripElementRecord>, _) = read_jsonl(&buf[..]).unwrap();
        assert_eq!(recs, vec![rec]);
        assert!(marker.unwrap().partial);
    }
}
