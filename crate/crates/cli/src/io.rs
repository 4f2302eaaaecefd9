//! CSV reading and writing of numeric series.

use std::io::{Read, Write};

use dust_core::Series;

use crate::error::{CliError, CliResult};

/// Reads a numeric CSV with one observation per row. Blank lines are
/// skipped; every row must have the same number of fields; values use `.`
/// as the decimal separator and must be finite.
pub fn read_series<R: Read>(reader: R, header: bool) -> CliResult<Series> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut dim = 0;
    let mut rows = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Input(format!("line {line}: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if dim == 0 {
            dim = record.len();
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| CliError::Input(format!("line {line}, column {}: '{field}' is not a number", col + 1)))?;
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "line {line}, column {}: non-finite value '{field}'",
                    col + 1
                )));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::Input("no data rows".into()));
    }
    Ok(Series::new(rows, dim, values)?)
}

/// Writes one row per observation, columns separated by commas. Values are
/// printed with the shortest representation that reads back exactly.
pub fn write_series<W: Write>(writer: W, series: &Series) -> CliResult<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for row in series.rows() {
        wtr.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}
