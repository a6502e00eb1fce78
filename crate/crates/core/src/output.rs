//! CSV and JSON writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::dynamics::SimulationTrace;
use crate::error::{Error, Result};
use crate::metrics::deformation;
use crate::trajectory::SweepRow;
use crate::tuning::{DsrGridRow, GammaCurveRow};

/// Formats like C's `%.{digits}g`.
pub fn fmt_g(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", strip_zeros(mantissa), sign, exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Trace values use nine significant digits.
pub fn fmt9(x: f64) -> String {
    fmt_g(x, 9)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, result: std::io::Result<()>) -> Result<()> {
    result.map_err(|e| Error::io(path, e))
}

pub fn trace_header(robots: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=robots).map(|k| format!("y_{k}")));
    cols.extend((1..=robots).map(|k| format!("f_{k}")));
    cols.extend(["yd", "D", "vmax_step"].map(String::from));
    cols.join(",")
}

/// Columns: `t, y_1..y_n, f_1..f_n, yd, D, vmax_step`.
pub fn write_trace_csv<W: Write>(mut w: W, trace: &SimulationTrace) -> std::io::Result<()> {
    writeln!(w, "{}", trace_header(trace.robots))?;
    for row in &trace.rows {
        let vmax = row.speeds.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut fields = Vec::with_capacity(2 * trace.robots + 4);
        fields.push(fmt9(row.time));
        fields.extend(row.positions.iter().map(|&y| fmt9(y)));
        fields.extend(row.forces.iter().map(|&f| fmt9(f)));
        fields.push(fmt9(row.reference));
        fields.push(fmt9(deformation(&row.positions)));
        fields.push(fmt9(vmax));
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()
}

pub fn write_trace(path: impl AsRef<Path>, trace: &SimulationTrace) -> Result<()> {
    let path = path.as_ref();
    let w = create(path)?;
    finish(path, write_trace_csv(w, trace))
}

fn write_rows<I>(path: &Path, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = create(path)?;
    let result = (|| {
        writeln!(w, "{header}")?;
        for row in rows {
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    })();
    finish(path, result)
}

pub fn write_gamma_curve(path: impl AsRef<Path>, rows: &[GammaCurveRow]) -> Result<()> {
    write_rows(
        path.as_ref(),
        "gamma,ts_rule_s,ts_band_s",
        rows.iter()
            .map(|r| vec![fmt9(r.gamma), fmt9(r.ts_rule), fmt9(r.ts_band)]),
    )
}

pub fn write_dsr_grid(path: impl AsRef<Path>, rows: &[DsrGridRow]) -> Result<()> {
    write_rows(
        path.as_ref(),
        "alpha,beta,spectral_radius,residual_radius,ts_estimate_s,ts_measured_s,v_max_cmps,bound_stable,feasible",
        rows.iter().map(|r| {
            vec![
                fmt9(r.alpha),
                fmt9(r.beta),
                fmt9(r.spectral_radius),
                fmt9(r.residual_radius),
                fmt9(r.ts_estimate),
                fmt9(r.ts_measured),
                fmt9(r.max_speed),
                r.bound_stable.to_string(),
                r.feasible.to_string(),
            ]
        }),
    )
}

pub fn write_sweep(path: impl AsRef<Path>, rows: &[SweepRow]) -> Result<()> {
    write_rows(
        path.as_ref(),
        "omega_c,D_bar_cm,v_max_cmps",
        rows.iter()
            .map(|r| vec![fmt9(r.omega_c), fmt9(r.max_deformation), fmt9(r.max_speed)]),
    )
}

/// Pretty JSON; non-finite floats become `null`.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    finish(path, w.write_all(b"\n").and_then(|_| w.flush()))
}
