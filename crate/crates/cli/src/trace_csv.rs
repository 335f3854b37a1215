//! CSV form of a convergence trace.
//!
//! Columns follow the row layout: `n, f_value, [energy_error,] a, l, eps,
//! delta, elapsed`. Reals are written with 17 significant digits so that a
//! read-back reproduces the rows exactly.

use std::io::{Read, Write};

use ufgm_core::{ConvergenceTrace, TraceRow};

use crate::error::CliError;

const WITH_ERROR: [&str; 8] = ["n", "f_value", "energy_error", "a", "l", "eps", "delta", "elapsed"];
const WITHOUT_ERROR: [&str; 7] = ["n", "f_value", "a", "l", "eps", "delta", "elapsed"];

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `trace`; the energy-error column is present only when every row has one.
pub fn write_trace<W: Write>(out: W, trace: &ConvergenceTrace) -> Result<(), CliError> {
    let with_error = !trace.rows.is_empty() && trace.rows.iter().all(|r| r.energy_error.is_some());
    let mut w = csv::Writer::from_writer(out);
    if with_error {
        w.write_record(WITH_ERROR)?;
    } else {
        w.write_record(WITHOUT_ERROR)?;
    }
    for r in &trace.rows {
        let mut rec = vec![r.n.to_string(), real(r.f_value)];
        if with_error {
            rec.push(real(r.energy_error.expect("checked above")));
        }
        rec.extend([real(r.a), real(r.l), real(r.eps), real(r.delta), real(r.elapsed)]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Header-only output for an empty trace uses the short layout.
pub fn read_trace<R: Read>(input: R) -> Result<ConvergenceTrace, CliError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let with_error = headers.iter().any(|h| h == "energy_error");
    let parse = |s: &str| -> Result<f64, CliError> {
        s.parse::<f64>()
            .map_err(|_| CliError::Usage(format!("trace: `{s}` is not a number")))
    };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut it = rec.iter();
        let mut next = || it.next().ok_or_else(|| CliError::Usage("trace: short row".into()));
        let n = next()?
            .parse::<usize>()
            .map_err(|_| CliError::Usage("trace: bad iteration index".into()))?;
        let f_value = parse(next()?)?;
        let energy_error = if with_error { Some(parse(next()?)?) } else { None };
        rows.push(TraceRow {
            n,
            f_value,
            energy_error,
            a: parse(next()?)?,
            l: parse(next()?)?,
            eps: parse(next()?)?,
            delta: parse(next()?)?,
            elapsed: parse(next()?)?,
        });
    }
    Ok(ConvergenceTrace { rows })
}
