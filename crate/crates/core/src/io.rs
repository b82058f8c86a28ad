//! File formats: CSV tables with a provenance comment line, flat JSON
//! reports, and atomic replacement of output files.

use crate::error::{Error, Result};
use crate::geometry::BallPoint;
use crate::radial_field::{RadialGrid, RadialProfile};
use crate::symmetry::SampledField;
use serde_json::{Map, Value};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Write through a sibling temporary file and rename it into place.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?
        .to_string_lossy()
        .into_owned();
    let tmp: PathBuf = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::from(e)
    })
}

pub fn header_line(invocation: &str) -> String {
    format!("# hyperchoq {} {}\n", crate::VERSION, invocation)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Two-column table `rho,value`.
pub fn table_csv(invocation: &str, rhos: &[f64], values: &[f64]) -> String {
    let mut s = header_line(invocation);
    s.push_str("rho,value\n");
    for (r, v) in rhos.iter().zip(values) {
        let _ = writeln!(s, "{},{}", num(*r), num(*v));
    }
    s
}

pub fn profile_csv(invocation: &str, u: &RadialProfile) -> String {
    table_csv(invocation, u.grid().nodes(), u.values())
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("line {}: bad number {s:?}", line + 1)))
}

/// Parse a `rho,value` table into its two columns.
pub fn parse_table_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lines = data_lines(text);
    match lines.next() {
        Some((_, h)) if h.trim() == "rho,value" => {}
        Some((i, h)) => return Err(Error::Parse(format!("line {}: expected header rho,value, got {h:?}", i + 1))),
        None => return Err(Error::Parse("empty table".into())),
    }
    let mut rhos = Vec::new();
    let mut vals = Vec::new();
    for (i, l) in lines {
        let mut parts = l.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("line {}: expected two columns", i + 1)));
        };
        rhos.push(parse_float(a, i)?);
        vals.push(parse_float(b, i)?);
    }
    Ok((rhos, vals))
}

/// Read a profile written on `grid`; node radii must match to round-off.
pub fn parse_profile_csv(text: &str, grid: Arc<RadialGrid>) -> Result<RadialProfile> {
    let (rhos, vals) = parse_table_csv(text)?;
    if rhos.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: rhos.len() });
    }
    if rhos.iter().zip(grid.nodes()).any(|(a, b)| (a - b).abs() > 1e-12 * b.max(1.0)) {
        return Err(Error::Parse("profile radii do not match the grid".into()));
    }
    RadialProfile::new(grid, vals)
}

/// Table `x1,...,xN,value`.
pub fn field_csv(invocation: &str, f: &SampledField) -> String {
    let mut s = header_line(invocation);
    let cols: Vec<String> = (1..=f.dim()).map(|i| format!("x{i}")).collect();
    let _ = writeln!(s, "{},value", cols.join(","));
    for (p, v) in f.points().iter().zip(f.values()) {
        let row: Vec<String> = p.coords().iter().map(|c| num(*c)).collect();
        let _ = writeln!(s, "{},{}", row.join(","), num(*v));
    }
    s
}

pub fn parse_field_csv(text: &str, mc_weight: f64) -> Result<SampledField> {
    let mut lines = data_lines(text);
    let dim = match lines.next() {
        Some((_, h)) => {
            let cols: Vec<&str> = h.split(',').map(str::trim).collect();
            let ok = cols.len() >= 2
                && cols.last() == Some(&"value")
                && cols[..cols.len() - 1].iter().enumerate().all(|(i, c)| *c == format!("x{}", i + 1));
            if !ok {
                return Err(Error::Parse(format!("bad field header {h:?}")));
            }
            cols.len() - 1
        }
        None => return Err(Error::Parse("empty table".into())),
    };
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (i, l) in lines {
        let nums: Vec<f64> = l.split(',').map(|c| parse_float(c, i)).collect::<Result<_>>()?;
        if nums.len() != dim + 1 {
            return Err(Error::Parse(format!("line {}: expected {} columns", i + 1, dim + 1)));
        }
        points.push(BallPoint::new(nums[..dim].to_vec())?);
        values.push(nums[dim]);
    }
    SampledField::new(points, values, mc_weight)
}

/// Flat JSON object with the provenance keys first.
pub fn flat_json(invocation: &str, fields: Vec<(&str, Value)>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("version".into(), Value::from(crate::VERSION));
    m.insert("invocation".into(), Value::from(invocation));
    for (k, v) in fields {
        m.insert(k.to_string(), v);
    }
    m
}

pub fn json_number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

pub fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// gnuplot script plotting column 2 against column 1 of `csv`.
pub fn plot_script(csv: &Path, title: &str, log_y: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set xlabel 'rho'");
    if log_y {
        let _ = writeln!(s, "set logscale y");
    }
    let _ = writeln!(
        s,
        "plot '{}' skip 2 using 1:2 with lines title '{}'",
        csv.display().to_string().replace('\'', "''"),
        title.replace('\'', "''")
    );
    s
}
