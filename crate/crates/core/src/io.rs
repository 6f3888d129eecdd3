//! Text file formats.
//!
//! - trace: header `distance_m,pl_db`, one sample per row
//! - transfer functions: header `distance_m,n_f`, then rows
//!   `distance, n_f, re_1, im_1, ..., re_nf, im_nf`
//! - LSF series: header `distance_m,x_sigma_db`
//! - predictions: header `distance_m,pl_db,source` with source `measured` or `predicted`
//! - density plot data: `# bin_center density`, two whitespace-separated columns

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evaluation::DensityEstimate;
use crate::pipeline::{ChannelTrace, LsfSeries, TransferFunctionRecord};

pub const TRACE_HEADER: &str = "distance_m,pl_db";
pub const TF_HEADER: &str = "distance_m,n_f";
pub const LSF_HEADER: &str = "distance_m,x_sigma_db";
pub const PREDICTION_HEADER: &str = "distance_m,pl_db,source";
pub const LSF_PREDICTION_HEADER: &str = "distance_m,x_sigma_db,source";

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|source| Error::Io {
                path: dir.display().to_string(),
                source,
            })?;
        }
    }
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_err(origin: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: origin.to_string(),
        line,
        message: message.into(),
    }
}

/// Data rows after checking the header; yields `(line_number, fields)`.
fn rows<'a>(
    text: &'a str,
    header: &str,
    origin: &'a str,
) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)> + 'a> {
    let mut lines = text.lines().enumerate();
    let first = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| parse_err(origin, 1, "empty file"))?;
    if first.1.trim() != header {
        return Err(parse_err(
            origin,
            first.0 + 1,
            format!("expected header `{header}`, found `{}`", first.1.trim()),
        ));
    }
    Ok(lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(str::trim).collect())))
}

fn real(origin: &str, line: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(origin, line, format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(origin, line, format!("`{s}` is not finite")));
    }
    Ok(v)
}

pub fn format_trace(trace: &ChannelTrace) -> String {
    let mut s = String::with_capacity(32 * trace.len());
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for (d, pl) in trace.distances_m().iter().zip(trace.pl_db()) {
        let _ = writeln!(s, "{d:?},{pl:?}");
    }
    s
}

pub fn parse_trace(text: &str, carrier_hz: f64, origin: &str) -> Result<ChannelTrace> {
    let mut d = Vec::new();
    let mut pl = Vec::new();
    for (line, f) in rows(text, TRACE_HEADER, origin)? {
        if f.len() != 2 {
            return Err(parse_err(
                origin,
                line,
                format!("expected 2 fields, found {}", f.len()),
            ));
        }
        d.push(real(origin, line, f[0])?);
        pl.push(real(origin, line, f[1])?);
    }
    ChannelTrace::new(d, pl, carrier_hz).map_err(|e| parse_err(origin, 0, e.to_string()))
}

pub fn read_trace(path: &Path, carrier_hz: f64) -> Result<ChannelTrace> {
    parse_trace(&read_text(path)?, carrier_hz, &path.display().to_string())
}

pub fn format_transfer_functions(records: &[TransferFunctionRecord]) -> String {
    let mut s = String::new();
    s.push_str(TF_HEADER);
    s.push('\n');
    for r in records {
        let _ = write!(s, "{:?},{}", r.distance_m, r.n_f());
        for h in &r.response {
            let _ = write!(s, ",{:?},{:?}", h.re, h.im);
        }
        s.push('\n');
    }
    s
}

/// Parses transfer functions; every row must carry the same `n_f`.
pub fn parse_transfer_functions(text: &str, origin: &str) -> Result<Vec<TransferFunctionRecord>> {
    let mut out = Vec::new();
    let mut expected_nf: Option<usize> = None;
    for (line, f) in rows(text, TF_HEADER, origin)? {
        if f.len() < 2 {
            return Err(parse_err(origin, line, "expected distance and n_f"));
        }
        let d = real(origin, line, f[0])?;
        let n_f: usize = f[1]
            .parse()
            .map_err(|_| parse_err(origin, line, format!("n_f `{}` is not a count", f[1])))?;
        if n_f == 0 {
            return Err(parse_err(origin, line, "n_f must be positive"));
        }
        match expected_nf {
            None => expected_nf = Some(n_f),
            Some(e) if e != n_f => {
                return Err(parse_err(
                    origin,
                    line,
                    format!("n_f = {n_f} differs from the first row's n_f = {e}"),
                ))
            }
            _ => {}
        }
        let values = &f[2..];
        if values.len() != 2 * n_f {
            return Err(parse_err(
                origin,
                line,
                format!(
                    "expected {} interleaved real/imaginary values for n_f = {n_f}, found {}",
                    2 * n_f,
                    values.len()
                ),
            ));
        }
        let mut response = Vec::with_capacity(n_f);
        for pair in values.chunks(2) {
            response.push(Complex64::new(
                real(origin, line, pair[0])?,
                real(origin, line, pair[1])?,
            ));
        }
        out.push(
            TransferFunctionRecord::new(d, response)
                .map_err(|e| parse_err(origin, line, e.to_string()))?,
        );
    }
    if out.is_empty() {
        return Err(parse_err(origin, 1, "no transfer-function rows"));
    }
    Ok(out)
}

pub fn read_transfer_functions(path: &Path) -> Result<Vec<TransferFunctionRecord>> {
    parse_transfer_functions(&read_text(path)?, &path.display().to_string())
}

pub fn format_lsf(lsf: &LsfSeries) -> String {
    let mut s = String::new();
    s.push_str(LSF_HEADER);
    s.push('\n');
    for (d, x) in lsf.distances_m.iter().zip(&lsf.x_sigma_db) {
        let _ = writeln!(s, "{d:?},{x:?}");
    }
    s
}

/// Measured PL at every sample, then predicted PL at the withheld samples,
/// ordered by distance.
pub fn format_predictions(
    trace: &ChannelTrace,
    predict_indices: &[usize],
    predicted: &[f64],
) -> String {
    format_series_with_source(
        trace.distances_m(),
        trace.pl_db(),
        predict_indices,
        predicted,
        PREDICTION_HEADER,
    )
}

/// Same layout as [`format_predictions`] for LSF values.
pub fn format_lsf_predictions(
    distances_m: &[f64],
    measured_lsf: &[f64],
    predict_indices: &[usize],
    predicted_lsf: &[f64],
) -> String {
    format_series_with_source(
        distances_m,
        measured_lsf,
        predict_indices,
        predicted_lsf,
        LSF_PREDICTION_HEADER,
    )
}

fn format_series_with_source(
    distances_m: &[f64],
    measured: &[f64],
    predict_indices: &[usize],
    predicted: &[f64],
    header: &str,
) -> String {
    let mut s = String::new();
    s.push_str(header);
    s.push('\n');
    let mut next = predict_indices.iter().zip(predicted).peekable();
    for (i, (d, m)) in distances_m.iter().zip(measured).enumerate() {
        let _ = writeln!(s, "{d:?},{m:?},measured");
        if let Some(&(&j, p)) = next.peek() {
            if j == i {
                let _ = writeln!(s, "{d:?},{p:?},predicted");
                next.next();
            }
        }
    }
    s
}

/// Reads the `measured`/`predicted` layout written by
/// [`format_lsf_predictions`], returning the two value columns.
pub fn parse_series_with_source(
    text: &str,
    header: &str,
    origin: &str,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut measured = Vec::new();
    let mut predicted = Vec::new();
    for (line, f) in rows(text, header, origin)? {
        if f.len() != 3 {
            return Err(parse_err(
                origin,
                line,
                format!("expected 3 fields, found {}", f.len()),
            ));
        }
        let v = real(origin, line, f[1])?;
        match f[2] {
            "measured" => measured.push(v),
            "predicted" => predicted.push(v),
            other => return Err(parse_err(origin, line, format!("unknown source `{other}`"))),
        }
    }
    Ok((measured, predicted))
}

pub fn format_density(d: &DensityEstimate) -> String {
    let mut s = String::from("# bin_center density\n");
    for (c, v) in d.bin_centers().iter().zip(&d.density) {
        let _ = writeln!(s, "{c:?} {v:?}");
    }
    s
}
