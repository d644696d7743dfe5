use std::io::{Read, Write};

use super::histogram::DecayHistogram;
use super::model::Component;
use crate::dataio::read_table;
use crate::error::{Error, Result};

/// Writes `time_ns,counts` with bin-center times after the metadata lines.
pub fn write_decay_csv<W: Write>(h: &DecayHistogram, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# dap-layer v1")?;
    writeln!(out, "# time=bin_center")?;
    writeln!(out, "# bin_width_ns={}", h.bin_width)?;
    for (k, v) in &h.metadata {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "time_ns,counts")?;
    for (t, c) in h.bin_centers().iter().zip(&h.counts) {
        writeln!(out, "{t:.6},{c}")?;
    }
    Ok(())
}

/// Reads a `time_ns,counts` histogram with bin-center times.
///
/// Bins must be uniform to 1e-9 relative (plus the rounding of the printed
/// times) and counts must be non-negative integers.
pub fn read_decay_csv<R: Read>(input: R) -> Result<DecayHistogram> {
    let table = read_table(input, 2, 2)?;
    table.require_increasing(0)?;
    let t = table.column(0);
    if t.len() < 2 {
        return Err(Error::Parse {
            line: table.lines[0],
            message: "a decay histogram needs at least two bins".into(),
        });
    }
    let width = match table.meta("bin_width_ns").map(str::parse::<f64>) {
        Some(Ok(w)) => w,
        _ => (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64,
    };
    let tol = 1e-9 * width + 1e-6;
    for i in 1..t.len() {
        let expect = t[0] + width * i as f64;
        if (t[i] - expect).abs() > tol {
            return Err(Error::Parse {
                line: table.lines[i],
                message: format!("non-uniform bin at t = {} ns", t[i]),
            });
        }
    }
    let counts = table
        .rows
        .iter()
        .zip(&table.lines)
        .map(|(r, &line)| {
            let c = r[1];
            if c < 0.0 || c.fract() != 0.0 {
                Err(Error::Parse {
                    line,
                    message: format!("count {c} is not a non-negative integer"),
                })
            } else {
                Ok(c as u64)
            }
        })
        .collect::<Result<Vec<u64>>>()?;
    let mut h = DecayHistogram::new(t[0] - 0.5 * width, width, counts)?;
    h.metadata = table
        .metadata
        .into_iter()
        .filter(|(k, _)| k != "time" && k != "bin_width_ns")
        .collect();
    Ok(h)
}

/// Parses `a:tau;a:tau` as written in histogram metadata.
pub fn parse_components(text: &str) -> Result<Vec<Component>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let (a, t) = s
                .split_once(':')
                .ok_or_else(|| Error::Domain(format!("component {s:?} is not a:tau")))?;
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| Error::Domain(format!("bad amplitude in {s:?}")))?;
            let t: f64 = t
                .trim()
                .parse()
                .map_err(|_| Error::Domain(format!("bad lifetime in {s:?}")))?;
            Ok(Component::new(a, t))
        })
        .collect()
}
