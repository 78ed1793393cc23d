//! Series ingestion from CSV text.
//!
//! Accepted layouts are one value per line or two columns `t, value` with a
//! uniform `t` grid. A first row whose leading token is not a number is taken
//! as a header. Separators are commas, semicolons or whitespace.

use std::io::Read;
use std::path::Path;

use crate::CliError;

const SPACING_TOLERANCE: f64 = 1e-9;

/// Raw bytes of the input and a label for the manifest.
pub struct RawInput {
    pub bytes: Vec<u8>,
    pub source: String,
}

/// Reads `path`, or `stdin` when the path is absent or `-`.
pub fn read_raw(path: Option<&Path>, stdin: &mut dyn Read) -> Result<RawInput, CliError> {
    match path {
        Some(p) if p != Path::new("-") => {
            let bytes = std::fs::read(p).map_err(|e| CliError::io(format!("reading {}", p.display()), e))?;
            Ok(RawInput {
                bytes,
                source: p.display().to_string(),
            })
        }
        _ => {
            let mut bytes = Vec::new();
            stdin
                .read_to_end(&mut bytes)
                .map_err(|e| CliError::io("reading standard input", e))?;
            Ok(RawInput {
                bytes,
                source: "-".into(),
            })
        }
    }
}

fn tokens(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Parses the values column; line numbers in errors are 1-based.
pub fn parse_series(text: &str) -> Result<Vec<f64>, CliError> {
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut columns = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let toks = tokens(line);
        if toks.is_empty() {
            continue;
        }
        if rows.is_empty() && columns.is_none() && toks[0].parse::<f64>().is_err() {
            // header row
            columns = Some(toks.len());
            continue;
        }
        let width = *columns.get_or_insert(toks.len());
        if toks.len() != width || width > 2 {
            return Err(CliError::Data(format!(
                "line {lineno}: expected {} column(s), found {}",
                width.min(2),
                toks.len()
            )));
        }
        let parsed = toks
            .iter()
            .map(|t| match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(CliError::Data(format!("line {lineno}: non-finite value '{t}'"))),
                Err(_) => Err(CliError::Data(format!("line {lineno}: cannot parse '{t}' as a number"))),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push((lineno, parsed));
    }
    if rows.is_empty() {
        return Err(CliError::Data("input contains no data rows".into()));
    }
    if rows[0].1.len() == 2 {
        check_uniform_grid(&rows)?;
    }
    Ok(rows.into_iter().map(|(_, r)| *r.last().unwrap()).collect())
}

fn check_uniform_grid(rows: &[(usize, Vec<f64>)]) -> Result<(), CliError> {
    if rows.len() < 2 {
        return Ok(());
    }
    let first = rows[0].1[0];
    let last = rows[rows.len() - 1].1[0];
    let step = (last - first) / (rows.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(CliError::Data("t column must be strictly increasing".into()));
    }
    for pair in rows.windows(2) {
        let dt = pair[1].1[0] - pair[0].1[0];
        if (dt - step).abs() > SPACING_TOLERANCE * step {
            return Err(CliError::Data(format!(
                "line {}: t spacing {dt} departs from the uniform step {step}",
                pair[1].0
            )));
        }
    }
    Ok(())
}
