//! Synthetic homodyne pipeline: quadrature distributions and sampling,
//! Weyl-moment estimation from phase-resolved data, maximum-likelihood
//! reconstruction and bootstrap error bars.

mod bootstrap;
mod pdf;
mod tomography;
mod weyl;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bootstrap::{bootstrap_xi, BootstrapResult};
pub use pdf::{hermite_functions, quadrature_pdf, sample_quadratures, QuadraturePdf};
pub use tomography::{
    ml_reconstruct, ml_reconstruct_binned, BinnedData, TomographyConfig, TomographyResult,
};
pub use weyl::{estimate_weyl_moment, weyl_moment_coefficients, MomentEstimate, MAX_MOMENT_ORDER};

/// One homodyne outcome: X(θ) = cos θ·x + sin θ·p measured at phase θ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRecord {
    pub theta: f64,
    pub value: f64,
}

impl QuadratureRecord {
    /// Reduces θ into [0, 2π); rejects non-finite input.
    pub fn new(theta: f64, value: f64) -> Result<Self> {
        if !theta.is_finite() || !value.is_finite() {
            return Err(Error::NonFinite("quadrature record"));
        }
        Ok(QuadratureRecord {
            theta: theta.rem_euclid(std::f64::consts::TAU),
            value,
        })
    }
}

/// Reads CSV with header `theta,value`. Errors name the offending row
/// (1-based, header excluded).
pub fn read_records<R: Read>(input: R) -> Result<Vec<QuadratureRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names != ["theta", "value"] {
        return Err(Error::MalformedInput(format!(
            "expected header \"theta,value\", found \"{}\"",
            names.join(",")
        )));
    }
    let mut out = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::MalformedInput(format!("row {}: {e}", k + 1)))?;
        let field = |i: usize, name: &str| -> Result<f64> {
            row.get(i)
                .ok_or_else(|| {
                    Error::MalformedInput(format!("row {}: missing field \"{name}\"", k + 1))
                })?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::MalformedInput(format!("row {}: field \"{name}\": {e}", k + 1)))
        };
        let rec = QuadratureRecord::new(field(0, "theta")?, field(1, "value")?)
            .map_err(|_| Error::MalformedInput(format!("row {}: non-finite value", k + 1)))?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::MalformedInput("no records".into()));
    }
    Ok(out)
}

/// Writes CSV with header `theta,value`, full round-trip precision.
pub fn write_records<W: Write>(records: &[QuadratureRecord], output: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(["theta", "value"])?;
    for r in records {
        w.write_record(&[r.theta.to_string(), r.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Records grouped by phase, phases in order of first appearance.
pub(crate) fn group_by_phase(records: &[QuadratureRecord]) -> Vec<(f64, Vec<f64>)> {
    let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
    for r in records {
        match groups
            .iter_mut()
            .find(|(t, _)| t.to_bits() == r.theta.to_bits())
        {
            Some((_, v)) => v.push(r.value),
            None => groups.push((r.theta, vec![r.value])),
        }
    }
    groups
}

/// `count` phases kπ/count, k = 0..count.
pub fn uniform_phases(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| k as f64 * std::f64::consts::PI / count as f64)
        .collect()
}
