//! Diagnostics time series as CSV.
//!
//! Values are written in scientific notation with 17 significant digits,
//! which round-trips every `f64`. Unavailable values are written as `NaN`.

use std::io::Write;
use std::path::Path;

use crate::analysis::{DiagnosticsRecord, NormExponent};
use crate::error::{Error, Result};

pub const HEADER: &str =
    "t,l2_u,l2_w,h1_semi_u,h1_semi_w,linf_omega,linf_w,linf_Z,energy,energy_residual,z_residual_l2,gronwall_envelope";

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    fmt(v.unwrap_or(f64::NAN))
}

/// One CSV line (without newline) for `r`.
pub fn format_record(r: &DiagnosticsRecord) -> String {
    [
        fmt(r.t),
        fmt(r.l2_u),
        fmt(r.l2_w),
        fmt(r.h1_semi_u),
        fmt(r.h1_semi_w),
        fmt(r.linf_omega),
        fmt(r.linf_w),
        opt(r.linf_z),
        fmt(r.energy),
        opt(r.energy_residual),
        opt(r.z_residual_l2),
        opt(r.gronwall_envelope),
    ]
    .join(",")
}

/// Streams records to any writer, header first.
pub struct CsvWriter<W: Write> {
    out: W,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{HEADER}")?;
        Ok(CsvWriter { out })
    }

    pub fn write(&mut self, r: &DiagnosticsRecord) -> std::io::Result<()> {
        writeln!(self.out, "{}", format_record(r))
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

fn parse_line(lineno: usize, line: &str) -> Result<DiagnosticsRecord> {
    let bad = |msg: String| Error::Usage(format!("csv line {lineno}: {msg}"));
    let cols: Vec<f64> = line
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad(format!("cannot parse `{s}`"))))
        .collect::<Result<_>>()?;
    if cols.len() != 12 {
        return Err(bad(format!("expected 12 columns, found {}", cols.len())));
    }
    let some = |v: f64| (!v.is_nan()).then_some(v);
    Ok(DiagnosticsRecord {
        t: cols[0],
        l2_u: cols[1],
        l2_w: cols[2],
        h1_semi_u: cols[3],
        h1_semi_w: cols[4],
        linf_omega: cols[5],
        linf_w: cols[6],
        linf_z: some(cols[7]),
        lp: NormExponent::Infinity,
        lp_z: some(cols[7]),
        lp_w: cols[6],
        energy: cols[8],
        energy_residual: some(cols[9]),
        z_residual_l2: some(cols[10]),
        gronwall_envelope: some(cols[11]),
    })
}

/// Parses a diagnostics CSV written by [`CsvWriter`].
pub fn parse_records(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == HEADER => {}
        Some(h) => return Err(Error::Usage(format!("unexpected csv header `{h}`"))),
        None => return Err(Error::Usage("empty csv".into())),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| parse_line(k + 2, l))
        .collect()
}

pub fn read_records(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text)
}
