use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Series;

pub const SCHEMA_VERSION: u32 = 1;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Reads a `t,x` CSV. `t` must increase by exactly one per row.
pub fn load_series(path: &Path, column: &str) -> Result<Series> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_series(file, column)
}

pub fn read_series(reader: impl io::Read, column: &str) -> Result<Series> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?
        .clone();
    if headers.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "empty file".into(),
        });
    }
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("missing column '{name}'"),
        })
    };
    let t_col = find("t")?;
    let x_col = find(column)?;

    let mut values = Vec::new();
    let mut t0 = 0i64;
    let mut prev_t: Option<i64> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize, name: &str| {
            rec.get(i).ok_or_else(|| Error::Parse {
                line,
                msg: format!("missing field '{name}'"),
            })
        };
        let t_str = field(t_col, "t")?;
        let t: i64 = t_str.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("t is not an integer: '{t_str}'"),
        })?;
        let x_str = field(x_col, column)?;
        let x: f64 = x_str.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("{column} is not numeric: '{x_str}'"),
        })?;
        if !x.is_finite() {
            return Err(Error::Parse {
                line,
                msg: format!("{column} is not finite: '{x_str}'"),
            });
        }
        match prev_t {
            None => t0 = t,
            Some(p) if t != p + 1 => {
                return Err(Error::Parse {
                    line,
                    msg: format!("gap in t: {p} followed by {t}"),
                })
            }
            _ => {}
        }
        prev_t = Some(t);
        values.push(x);
    }
    if values.is_empty() {
        return Err(Error::Parse {
            line: 2,
            msg: "empty series: no rows after the header".into(),
        });
    }
    Series::with_start(values, t0)
}

/// Writes `t,x` rows with 17 significant digits.
pub fn write_series(path: &Path, series: &Series) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    write_series_to(&mut w, series).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_series_to(w: &mut impl Write, series: &Series) -> io::Result<()> {
    writeln!(w, "t,x")?;
    for (i, x) in series.values().iter().enumerate() {
        writeln!(w, "{},{:.16e}", series.t0() + i as i64, x)?;
    }
    Ok(())
}

/// Writes `value` as pretty JSON with a top-level schema version, to `path`
/// or standard output.
pub fn emit_json(path: Option<&Path>, value: &impl Serialize) -> Result<()> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Io(e.to_string()))?;
    if let serde_json::Value::Object(map) = &mut v {
        let mut out = serde_json::Map::new();
        out.insert("schema_version".into(), SCHEMA_VERSION.into());
        out.extend(std::mem::take(map));
        v = serde_json::Value::Object(out);
    }
    let text = serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.to_string()))?;
    emit_text(path, &(text + "\n"))
}

pub fn emit_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_err(p, e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io(e.to_string())),
    }
}
