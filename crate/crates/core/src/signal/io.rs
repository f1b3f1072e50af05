//! Signal spec (JSON) and sample (CSV) file formats.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SampledSignal, SymbolicTransient, Term};
use crate::error::{Error, Result};

/// On-disk form `{"terms": [{"rate": r, "coeff": c}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub terms: Vec<Term<f64>>,
}

impl SignalSpec {
    pub fn into_transient(self) -> Result<SymbolicTransient<f64>> {
        SymbolicTransient::new(self.terms)
    }
}

impl From<&SymbolicTransient<f64>> for SignalSpec {
    fn from(s: &SymbolicTransient<f64>) -> Self {
        SignalSpec {
            terms: s.terms().to_vec(),
        }
    }
}

/// Parses and validates a spec; rates must be positive and pre-sorted.
pub fn signal_spec_from_str(text: &str) -> Result<SymbolicTransient<f64>> {
    let mut de = serde_json::Deserializer::from_str(text);
    let spec: SignalSpec = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        Error::Parse(format!("signal spec: {}: {}", e.path(), e.inner()))
    })?;
    spec.into_transient()
}

pub fn read_signal_spec(path: &Path) -> Result<SymbolicTransient<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    signal_spec_from_str(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        Error::InvalidSignal(m) => Error::InvalidSignal(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    t: f64,
    x: f64,
}

/// Reads `t,x` rows with ascending `t`.
pub fn read_sampled_csv<R: Read>(reader: R) -> Result<SampledSignal<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse(format!("csv header: {e}")))?
        .clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "x" {
        return Err(Error::Parse(format!(
            "csv header must be \"t,x\", found {:?}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::Parse(format!("csv line {}: {e}", i + 2)))?;
        if let Some(&prev) = times.last() {
            if row.t <= prev {
                return Err(Error::Parse(format!(
                    "csv line {}: t = {} is not ascending",
                    i + 2,
                    row.t
                )));
            }
        }
        times.push(row.t);
        values.push(row.x);
    }
    SampledSignal::new(times, values)
}

pub fn write_sampled_csv<W: Write>(writer: W, s: &SampledSignal<f64>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for (&t, &x) in s.times().iter().zip(s.values()) {
        wtr.serialize(Row { t, x })
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}
