//! Text formats: points CSV, comma-separated command-line lists, and report
//! writers that print every float with 17 significant digits.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::types::SampleSet;

/// Parses a points CSV: one point per row, `d >= 1` numeric columns, an
/// optional header row (detected when the first row is not all numeric), and
/// at least two data rows.
pub fn parse_points(text: &str, source_tag: &str) -> Result<SampleSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut dim = None;
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if first => {
                first = false;
                continue;
            }
            Err(_) => {
                let bad = record
                    .iter()
                    .find(|f| f.parse::<f64>().is_err())
                    .unwrap_or_default();
                return Err(Error::Parse {
                    line,
                    message: format!("non-numeric field {bad:?}"),
                });
            }
        };
        first = false;
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line,
                message: format!("non-finite value {v}"),
            });
        }
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {d} columns, found {}", row.len()),
                })
            }
            _ => {}
        }
        values.extend(row);
    }
    let dim = dim.ok_or_else(|| Error::Parse {
        line: 0,
        message: "no data rows".into(),
    })?;
    if values.len() / dim < 2 {
        return Err(Error::Parse {
            line: 0,
            message: format!("need at least 2 data rows, found {}", values.len() / dim),
        });
    }
    SampleSet::new(values, dim, source_tag)
}

/// Reads and parses a points CSV file.
pub fn read_points(path: &Path) -> Result<SampleSet> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_points(&text, &path.display().to_string())
}

/// Parses a non-empty comma-separated list of finite reals, e.g. `0,1.5`.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .map(|s| {
            let s = s.trim();
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::InvalidArgument(format!("invalid vector component {s:?}"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(values)
}

/// Parses a non-empty comma-separated list of counts, e.g. `250,1000`.
pub fn parse_count_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("invalid count {s:?}")))
        })
        .collect()
}

/// Formats a finite float with 17 significant digits, positionally for
/// decimal exponents in `-5..=16` and in scientific notation otherwise.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    if (-5..=16).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, v)
    } else {
        sci
    }
}

struct PreciseFormatter;

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes `value` as compact JSON with 17-digit floats and `null` for
/// non-finite values, followed by a newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Io(e.to_string()))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
}

/// Writes a sample as CSV, one point per row, no header.
pub fn points_to_csv(sample: &SampleSet) -> String {
    let mut out = String::new();
    for row in sample.rows() {
        let fields: Vec<String> = row.iter().map(|&v| format_f64(v)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Writes `text` to `path`, or to stdout when `path` is `None` or `-`.
pub fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) if p.as_os_str() != "-" => std::fs::write(p, text)
            .map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        _ => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}
