//! Path CSV files: header `t,x1,...,xd`, one row per grid node.

use std::io::{Read, Write};
use std::path::Path;

use crate::path::{SampledPath, TimeGrid};
use crate::{Error, Result};

/// Parses a path CSV. Errors carry the 1-based line of the offending record.
pub fn read_path(reader: impl Read) -> Result<SampledPath> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(&e))?.clone();
    if headers.len() < 2 || &headers[0] != "t" {
        return Err(Error::input(Some(1), "header must be `t,x1,...,xd`"));
    }
    for (i, h) in headers.iter().enumerate().skip(1) {
        if h != format!("x{i}") {
            return Err(Error::input(Some(1), format!("column {} should be `x{i}`, found `{h}`", i + 1)));
        }
    }
    let dim = headers.len() - 1;
    let mut times = Vec::new();
    let mut data = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(&e))?;
        let line = record.position().map(|p| p.line());
        if record.len() != dim + 1 {
            return Err(Error::input(line, format!("expected {} fields, found {}", dim + 1, record.len())));
        }
        for (i, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::input(line, format!("`{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(Error::input(line, format!("non-finite value `{field}`")));
            }
            if i == 0 {
                if let Some(&prev) = times.last() {
                    if v <= prev {
                        return Err(Error::input(line, format!("time {v} does not increase")));
                    }
                }
                times.push(v);
            } else {
                data.push(v);
            }
        }
    }
    if times.len() < 2 {
        return Err(Error::input(None, "a path needs at least two rows"));
    }
    let grid = TimeGrid::new(times).map_err(|e| Error::input(None, e.to_string()))?;
    SampledPath::new(grid, dim, data)
}

fn csv_error(e: &csv::Error) -> Error {
    Error::input(e.position().map(|p| p.line()), e.to_string())
}

pub fn read_path_file(path: impl AsRef<Path>) -> Result<SampledPath> {
    let file = std::fs::File::open(path.as_ref())?;
    read_path(std::io::BufReader::new(file))
}

/// Writes `path` in shortest round-trip decimal notation.
pub fn write_path(path: &SampledPath, mut out: impl Write) -> Result<()> {
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=path.dim()).map(|i| format!("x{i}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for k in 0..path.len() {
        write!(out, "{}", path.grid().time(k))?;
        for v in path.value(k) {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_path_file(path: &SampledPath, file: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(file.as_ref())?);
    write_path(path, &mut w)?;
    w.flush()?;
    Ok(())
}
