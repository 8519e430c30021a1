//! Minimal CSV writing shared by all output schemas. Floats are written with
//! 17 significant digits so that files round-trip exactly and diff cleanly.

use std::io::{self, Write};

/// `x` in scientific notation with 17 significant digits.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_header<W: Write>(w: &mut W, columns: &[&str]) -> io::Result<()> {
    writeln!(w, "{}", columns.join(","))
}

pub fn write_row<W: Write>(w: &mut W, values: &[f64]) -> io::Result<()> {
    let cells: Vec<String> = values.iter().map(|&v| fmt(v)).collect();
    writeln!(w, "{}", cells.join(","))
}

/// Parses a CSV produced by this module back into a header and numeric rows.
pub fn read_table(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or("empty table")?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("row {}: {e}", k + 1)))
            .collect::<Result<Vec<f64>, String>>()?;
        if row.len() != header.len() {
            return Err(format!(
                "row {} has {} cells, header has {}",
                k + 1,
                row.len(),
                header.len()
            ));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
