//! EMA corpus CSV: `time_s` followed by one column per coil coordinate.

use std::path::Path;

use crate::error::{Error, Result};

use super::{CoilLayout, EmaFrame};

pub fn read_ema_csv(path: impl AsRef<Path>) -> Result<(CoilLayout, Vec<EmaFrame>)> {
    let path = path.as_ref();
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    if header.get(0) != Some("time_s") {
        return Err(parse_err(1, "first column must be time_s".into()));
    }
    let names: Vec<&str> = header.iter().skip(1).collect();
    let layout = CoilLayout::from_column_names(&names).map_err(|e| parse_err(1, e.to_string()))?;

    let mut frames = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut values = Vec::with_capacity(record.len());
        for (i, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                parse_err(line, format!("column {}: not a number: {field:?}", i + 1))
            })?;
            if !v.is_finite() {
                return Err(parse_err(
                    line,
                    format!("column {}: non-finite value", i + 1),
                ));
            }
            values.push(v);
        }
        frames.push(EmaFrame {
            time_s: values[0],
            coords: values[1..].to_vec(),
        });
    }
    Ok((layout, frames))
}

pub fn write_ema_csv(
    path: impl AsRef<Path>,
    layout: &CoilLayout,
    frames: &[EmaFrame],
) -> Result<()> {
    write_ema_csv_to(std::fs::File::create(path)?, layout, frames)
}

pub fn write_ema_csv_to<W: std::io::Write>(
    out: W,
    layout: &CoilLayout,
    frames: &[EmaFrame],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time_s".to_string()];
    header.extend(layout.column_names());
    w.write_record(&header)?;
    for f in frames {
        if f.coords.len() != layout.dims() {
            return Err(Error::Shape(format!(
                "frame has {} coordinates, layout expects {}",
                f.coords.len(),
                layout.dims()
            )));
        }
        let row: Vec<String> = std::iter::once(f.time_s)
            .chain(f.coords.iter().copied())
            .map(|v| v.to_string())
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
