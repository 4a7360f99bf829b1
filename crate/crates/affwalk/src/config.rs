//! Measure files.
//!
//! ```toml
//! primes = [2, 3]
//! atoms = [
//!     { a = "2", b = "0", w = "1/2" },
//!     { a = "1/2", b = "1", w = "1/2" },
//! ]
//! ```
//!
//! `primes` is optional. Every number in an atom is a string in `num/den`
//! form; `a` and `b` may also be TOML integers. Float literals are rejected.

use std::path::Path;

use affwalk_core::arith::PrimeContext;
use affwalk_core::{validate_measure, MeasureSpec, RawAtom, Rational};
use toml::Value;

use crate::error::CliError;

fn rational_field(atom: &toml::Table, key: &str, index: usize, allow_int: bool) -> Result<Rational, CliError> {
    let v = atom
        .get(key)
        .ok_or_else(|| CliError::Config(format!("atom {index}: missing field `{key}`")))?;
    match v {
        Value::String(s) => s
            .parse()
            .map_err(|e| CliError::Config(format!("atom {index}: field `{key}`: {e}"))),
        Value::Integer(i) if allow_int => Ok(Rational::from(*i)),
        Value::Float(f) => Err(CliError::Config(format!(
            "atom {index}: field `{key}` is the float literal {f}; write it as a quoted rational such as \"1/2\""
        ))),
        other => Err(CliError::Config(format!(
            "atom {index}: field `{key}` must be a quoted rational, got {}",
            other.type_str()
        ))),
    }
}

/// Parses and validates a measure given as TOML text.
pub fn parse_measure(text: &str) -> Result<MeasureSpec, CliError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(format!("measure file: {}", e.message())))?;
    for key in table.keys() {
        if key != "primes" && key != "atoms" {
            return Err(CliError::Config(format!("measure file: unknown key `{key}`")));
        }
    }
    let primes = match table.get("primes") {
        None => None,
        Some(Value::Array(items)) => {
            let ps = items
                .iter()
                .map(|v| match v {
                    Value::Integer(p) if *p > 0 => Ok(*p as u64),
                    _ => Err(CliError::Config(format!("primes: {v} is not a positive integer"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(PrimeContext::new(ps)?)
        }
        Some(_) => return Err(CliError::Config("primes must be an array of integers".into())),
    };
    let atoms = match table.get("atoms") {
        None => Vec::new(),
        Some(Value::Array(items)) => items.clone(),
        Some(_) => return Err(CliError::Config("atoms must be an array of tables".into())),
    };
    let mut raw = Vec::with_capacity(atoms.len());
    for (i, item) in atoms.iter().enumerate() {
        let t = item
            .as_table()
            .ok_or_else(|| CliError::Config(format!("atom {i}: expected a table {{a, b, w}}")))?;
        if let Some(k) = t.keys().find(|k| !matches!(k.as_str(), "a" | "b" | "w")) {
            return Err(CliError::Config(format!("atom {i}: unknown field `{k}`")));
        }
        raw.push(RawAtom::new(
            rational_field(t, "a", i, true)?,
            rational_field(t, "b", i, true)?,
            rational_field(t, "w", i, false)?,
        ));
    }
    Ok(validate_measure(raw, primes)?)
}

pub fn load_measure(path: &Path) -> Result<MeasureSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_measure(&text)
}

/// TOML text for a measure, accepted by [`parse_measure`].
pub fn write_measure(spec: &MeasureSpec) -> String {
    let mut out = format!("primes = {:?}\natoms = [\n", spec.context().primes());
    for atom in spec.atoms() {
        out.push_str(&format!(
            "    {{ a = \"{}\", b = \"{}\", w = \"{}\" }},\n",
            atom.element.a(),
            atom.element.b(),
            atom.weight
        ));
    }
    out.push_str("]\n");
    out
}
