//! Series input in CSV (`x,y` or a single `y` column) and whitespace TXT.

use std::io::Write;
use std::path::Path;

use super::{DataSeries, Result, StimulusError};

fn bad(msg: impl Into<String>) -> StimulusError {
    StimulusError::BadSeries(msg.into())
}

fn numbers(fields: &[&str]) -> Option<Vec<f64>> {
    fields.iter().map(|f| f.trim().parse::<f64>().ok()).collect()
}

/// Builds a series from rows of one (`y`) or two (`x, y`) numbers.
fn from_rows(name: &str, rows: Vec<Vec<f64>>) -> Result<DataSeries<f64>> {
    let width = rows.first().map(Vec::len).ok_or_else(|| bad("no data rows"))?;
    if rows.iter().any(|r| r.len() != width) {
        return Err(bad("rows have differing column counts"));
    }
    match width {
        1 => DataSeries::from_values(name, rows.into_iter().map(|r| r[0]).collect()),
        2 => {
            let (x, y) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
            DataSeries::new(name, Some(x), y)
        }
        n => Err(bad(format!("expected 1 or 2 columns, found {n}"))),
    }
}

/// CSV with an optional non-numeric header row.
pub fn parse_series_csv(name: &str, bytes: &[u8]) -> Result<DataSeries<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let fields: Vec<&str> = record.iter().collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        match numbers(&fields) {
            Some(values) => rows.push(values),
            None if i == 0 => continue,
            None => return Err(bad(format!("line {}: non-numeric value", i + 1))),
        }
    }
    from_rows(name, rows)
}

/// Whitespace-separated columns; blank lines and `#` comments are skipped.
pub fn parse_series_txt(name: &str, text: &str) -> Result<DataSeries<f64>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match numbers(&fields) {
            Some(values) => rows.push(values),
            None if rows.is_empty() => continue,
            None => return Err(bad(format!("line {}: non-numeric value", i + 1))),
        }
    }
    from_rows(name, rows)
}

/// Reads `.csv` as CSV and anything else as whitespace TXT.
pub fn load_series(path: &Path) -> Result<DataSeries<f64>> {
    let bytes = std::fs::read(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        parse_series_csv(&name, &bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|e| bad(e.to_string()))?;
        parse_series_txt(&name, &text)
    }
}

/// `x,y` CSV (or `y` when the series has no abscissae).
pub fn write_series_csv<W: Write>(series: &DataSeries<f64>, mut sink: W) -> Result<()> {
    match series.x() {
        Some(x) => {
            writeln!(sink, "x,y")?;
            for (x, y) in x.iter().zip(series.y()) {
                writeln!(sink, "{x},{y}")?;
            }
        }
        None => {
            writeln!(sink, "y")?;
            for y in series.y() {
                writeln!(sink, "{y}")?;
            }
        }
    }
    Ok(())
}
