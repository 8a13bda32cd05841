//! Signal files and plot-ready outputs.
//!
//! Three signal layouts are accepted:
//!
//! - CSV with header `value`: one value per unit cell of `[0, n]`,
//! - CSV with header `x,value`: row `i` holds `x_{i-1}` and the value on
//!   `(x_{i-1}, x_i)`, and a final row `x_n,` closes the grid,
//! - JSON `{"interval":[a,b],"breakpoints":[...],"values":[...]}`.
//!
//! Outputs are written in the layout of the input, on the input's own grid.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use tautline::{PiecewiseConstantSignal, PiecewiseLinearFunction};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    UniformCsv,
    GridCsv,
    Json,
}

/// A signal as read from disk, keeping the raw grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalFile {
    pub layout: Layout,
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Deserialize)]
struct JsonSignal {
    interval: [f64; 2],
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

/// `%.17g`: 17 significant digits, trailing zeros trimmed.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn parse_number(path: &Path, line: Option<u64>, field: &str, what: &str) -> CliResult<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| CliError::parse(path, line, format!("{what} {field:?} is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::parse(
            path,
            line,
            format!("{what} {field:?} is not finite"),
        ));
    }
    Ok(v)
}

impl SignalFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        {
            Self::parse_json(path, &text)
        } else {
            Self::parse_csv(path, &text)
        }
    }

    fn parse_json(path: &Path, text: &str) -> CliResult<Self> {
        let raw: JsonSignal = serde_json::from_str(text)
            .map_err(|e| CliError::parse(path, Some(e.line() as u64), e.to_string()))?;
        if raw.breakpoints.len() != raw.values.len() + 1 {
            return Err(CliError::parse(
                path,
                None,
                format!(
                    "{} breakpoints for {} values; expected one more breakpoint than values",
                    raw.breakpoints.len(),
                    raw.values.len()
                ),
            ));
        }
        for (i, w) in raw.breakpoints.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(CliError::parse(
                    path,
                    None,
                    format!(
                        "breakpoints[{}] = {} does not exceed the previous breakpoint",
                        i + 1,
                        w[1]
                    ),
                ));
            }
        }
        let (first, last) = (raw.breakpoints[0], *raw.breakpoints.last().unwrap());
        if raw.interval != [first, last] {
            return Err(CliError::parse(
                path,
                None,
                format!(
                    "interval {:?} does not match breakpoints [{first}, {last}]",
                    raw.interval
                ),
            ));
        }
        let file = SignalFile {
            layout: Layout::Json,
            breakpoints: raw.breakpoints,
            values: raw.values,
        };
        file.signal()
            .map_err(|e| CliError::parse(path, None, e.to_string()))?;
        Ok(file)
    }

    fn parse_csv(path: &Path, text: &str) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| CliError::parse(path, Some(1), e.to_string()))?
            .clone();
        let header: Vec<&str> = headers.iter().collect();
        let layout = match header.as_slice() {
            ["value"] => Layout::UniformCsv,
            ["x", "value"] => Layout::GridCsv,
            _ => {
                return Err(CliError::parse(
                    path,
                    Some(1),
                    format!(
                        "expected header `value` or `x,value`, found {:?}",
                        headers.as_slice()
                    ),
                ))
            }
        };

        let mut xs = Vec::new();
        let mut values = Vec::new();
        let mut closed = false;
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line());
                CliError::parse(path, line, e.to_string())
            })?;
            let line = record.position().map(|p| p.line());
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            if closed {
                return Err(CliError::parse(
                    path,
                    line,
                    "row after the closing breakpoint row",
                ));
            }
            match layout {
                Layout::UniformCsv => {
                    if record.len() != 1 {
                        return Err(CliError::parse(path, line, "expected a single value"));
                    }
                    values.push(parse_number(path, line, &record[0], "value")?);
                }
                _ => {
                    if record.len() != 2 {
                        return Err(CliError::parse(path, line, "expected `x,value`"));
                    }
                    let x = parse_number(path, line, &record[0], "breakpoint")?;
                    if let Some(&prev) = xs.last() {
                        if x <= prev {
                            return Err(CliError::parse(
                                path,
                                line,
                                format!(
                                    "breakpoint {x} does not exceed the previous breakpoint {prev}"
                                ),
                            ));
                        }
                    }
                    xs.push(x);
                    if record[1].is_empty() {
                        closed = true;
                    } else {
                        values.push(parse_number(path, line, &record[1], "value")?);
                    }
                }
            }
        }
        if values.is_empty() {
            return Err(CliError::parse(path, None, "no values"));
        }
        let breakpoints = match layout {
            Layout::UniformCsv => (0..=values.len()).map(|i| i as f64).collect(),
            _ => {
                if !closed {
                    return Err(CliError::parse(
                        path,
                        None,
                        "missing closing row `x,` with the last breakpoint",
                    ));
                }
                xs
            }
        };
        Ok(SignalFile {
            layout,
            breakpoints,
            values,
        })
    }

    pub fn signal(&self) -> tautline::Result<PiecewiseConstantSignal> {
        PiecewiseConstantSignal::new(self.breakpoints.clone(), self.values.clone())
    }

    /// `u` sampled on the cells of this file's grid, in the same layout.
    pub fn with_values_of(&self, u: &PiecewiseConstantSignal) -> SignalFile {
        SignalFile {
            layout: self.layout,
            breakpoints: self.breakpoints.clone(),
            values: u.values_on(&self.breakpoints),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        match self.layout {
            Layout::UniformCsv => {
                out.push_str("value\n");
                for v in &self.values {
                    out.push_str(&format_g17(*v));
                    out.push('\n');
                }
            }
            Layout::GridCsv => {
                out.push_str("x,value\n");
                for (x, v) in self.breakpoints.iter().zip(&self.values) {
                    out.push_str(&format!("{},{}\n", format_g17(*x), format_g17(*v)));
                }
                out.push_str(&format!(
                    "{},\n",
                    format_g17(*self.breakpoints.last().unwrap())
                ));
            }
            Layout::Json => {
                let list = |xs: &[f64]| {
                    xs.iter()
                        .map(|x| format_g17(*x))
                        .collect::<Vec<_>>()
                        .join(",")
                };
                let (a, b) = (self.breakpoints[0], *self.breakpoints.last().unwrap());
                out.push_str(&format!(
                    "{{\"interval\":[{},{}],\"breakpoints\":[{}],\"values\":[{}]}}\n",
                    format_g17(a),
                    format_g17(b),
                    list(&self.breakpoints),
                    list(&self.values)
                ));
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_text(path, &self.render())
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

/// Node list `x,y` of a piecewise-linear function.
pub fn render_nodes(w: &PiecewiseLinearFunction) -> String {
    let mut out = String::from("x,y\n");
    for (x, y) in w.nodes().iter().zip(w.values()) {
        out.push_str(&format!("{},{}\n", format_g17(*x), format_g17(*y)));
    }
    out
}

pub fn read_nodes(path: &Path) -> CliResult<PiecewiseLinearFunction> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            other => CliError::parse(path, None, format!("{other:?}")),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::parse(path, Some(1), e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y"] {
        return Err(CliError::parse(path, Some(1), "expected header `x,y`"));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record
            .map_err(|e| CliError::parse(path, e.position().map(|p| p.line()), e.to_string()))?;
        let line = record.position().map(|p| p.line());
        let x = parse_number(path, line, &record[0], "x")?;
        if xs.last().is_some_and(|&prev| x <= prev) {
            return Err(CliError::parse(
                path,
                line,
                format!("node {x} does not exceed the previous node"),
            ));
        }
        xs.push(x);
        ys.push(parse_number(path, line, &record[1], "y")?);
    }
    PiecewiseLinearFunction::new(xs, ys).map_err(|e| CliError::parse(path, None, e.to_string()))
}

/// `dir/stem.<suffix>.csv` next to `output`.
pub fn sibling(output: &Path, suffix: &str) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    output.with_file_name(format!("{stem}.{suffix}.csv"))
}
