//! Raw datasets: CSV with a header row (`x1,...,xd`) and one point of
//! [0,1]^d per line.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub fn write_points<W: Write>(points: &[Vec<f64>], w: W) -> Result<()> {
    let d = points.first().map_or(0, Vec::len);
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record((1..=d).map(|m| format!("x{m}")))?;
    for p in points {
        wr.write_record(p.iter().map(|v| v.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_points<R: Read>(r: R) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let d = rd.headers()?.len();
    if d == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut out = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let p: Vec<f64> = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("row {}: '{s}' is not a number", line + 1)))
            })
            .collect::<Result<_>>()?;
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
        if let Some(v) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("row {}: {v} is outside [0, 1]", line + 1)));
        }
        out.push(p);
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}
