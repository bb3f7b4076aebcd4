//! Per-sample log rows and their CSV form.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "t,s,y,U,S,theta,G,Hhat,T0,min_superheat,valid";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub s: f64,
    pub y: f64,
    /// Filtered control `U`.
    pub u: f64,
    /// Dither `S`.
    pub dither: f64,
    /// Applied flux before the delay line.
    pub theta: f64,
    pub g: f64,
    pub h_hat: f64,
    /// Wall temperature.
    pub t0: f64,
    pub min_superheat: f64,
    pub valid: bool,
}

impl TraceRecord {
    fn fields(&self) -> [f64; 10] {
        [self.t, self.s, self.y, self.u, self.dither, self.theta, self.g, self.h_hat, self.t0, self.min_superheat]
    }

    /// Copy with every float rounded to the precision of the CSV form.
    pub fn rounded(&self) -> Self {
        let r = |v: f64| fmt_sig(v).parse::<f64>().unwrap_or(v);
        Self {
            t: r(self.t),
            s: r(self.s),
            y: r(self.y),
            u: r(self.u),
            dither: r(self.dither),
            theta: r(self.theta),
            g: r(self.g),
            h_hat: r(self.h_hat),
            t0: r(self.t0),
            min_superheat: r(self.min_superheat),
            valid: self.valid,
        }
    }
}

/// Twelve significant digits in scientific notation.
pub fn fmt_sig(v: f64) -> String {
    format!("{v:.11e}")
}

/// Writes the header and one row per record; returns the row count.
pub fn write_trace_to(trace: &[TraceRecord], mut out: impl Write) -> std::io::Result<usize> {
    writeln!(out, "{TRACE_HEADER}")?;
    for rec in trace {
        let mut line = rec.fields().iter().map(|v| fmt_sig(*v)).collect::<Vec<_>>().join(",");
        line.push_str(if rec.valid { ",1" } else { ",0" });
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(trace.len())
}

pub fn write_trace(trace: &[TraceRecord], path: &Path) -> Result<usize> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io)?;
    write_trace_to(trace, BufWriter::new(file)).map_err(io)
}

/// Reads a trace in the format of [`write_trace_to`].
pub fn parse_trace(input: impl Read) -> Result<Vec<TraceRecord>> {
    let mut lines = BufReader::new(input).lines();
    let header = match lines.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(Error::Parse { line: 1, msg: e.to_string() }),
        None => return Err(Error::Parse { line: 1, msg: "empty trace".into() }),
    };
    if header.trim_end() != TRACE_HEADER {
        return Err(Error::Parse { line: 1, msg: format!("unexpected header `{header}`") });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 11 {
            return Err(Error::Parse { line: line_no, msg: format!("expected 11 fields, got {}", cols.len()) });
        }
        let mut v = [0.0; 10];
        for (slot, c) in v.iter_mut().zip(&cols) {
            *slot = c.trim().parse().map_err(|_| Error::Parse { line: line_no, msg: format!("bad number `{c}`") })?;
        }
        let valid = match cols[10].trim() {
            "1" => true,
            "0" => false,
            other => return Err(Error::Parse { line: line_no, msg: format!("bad flag `{other}`") }),
        };
        out.push(TraceRecord {
            t: v[0],
            s: v[1],
            y: v[2],
            u: v[3],
            dither: v[4],
            theta: v[5],
            g: v[6],
            h_hat: v[7],
            t0: v[8],
            min_superheat: v[9],
            valid,
        });
    }
    Ok(out)
}
