//! Ingestion of power grids in the `rx_idx,tx_idx,power_linear` schema.

use std::fs;
use std::path::Path;

use crate::channelsynth::PowerMap;
use crate::error::{Error, Result};

const MAX_LISTED: usize = 10;

/// Reads a complete `q x p` grid. With `db = true` the power column is taken
/// as dBm and converted to milliwatts.
pub fn ingest_grid(path: &Path, db: bool) -> Result<PowerMap> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_grid(&text, db, path)
}

pub fn parse_grid(text: &str, db: bool, path: &Path) -> Result<PowerMap> {
    let fail = |message: String| Error::Ingest {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| fail(format!("row 1: {e}")))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() != 3
        || names[0] != "rx_idx"
        || names[1] != "tx_idx"
        || !matches!(names[2], "power_linear" | "power_dbm")
    {
        return Err(fail(
            "row 1: header must be rx_idx,tx_idx,power_linear".into(),
        ));
    }

    // (line, rx, tx, linear power)
    let mut cells = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| fail(format!("row {line}: {e}")))?;
        if record.len() != 3 {
            return Err(fail(format!("row {line}: expected 3 fields")));
        }
        let rx: usize = record[0]
            .parse()
            .map_err(|_| fail(format!("row {line}: bad rx_idx `{}`", &record[0])))?;
        let tx: usize = record[1]
            .parse()
            .map_err(|_| fail(format!("row {line}: bad tx_idx `{}`", &record[1])))?;
        let value: f64 = record[2]
            .parse()
            .map_err(|_| fail(format!("row {line}: bad power `{}`", &record[2])))?;
        let power = if db { 10f64.powf(value / 10.0) } else { value };
        if !power.is_finite() {
            return Err(fail(format!("row {line}: power is not finite")));
        }
        if power < 0.0 {
            return Err(fail(format!("row {line}: negative linear power {power}")));
        }
        cells.push((line, rx, tx, power));
    }
    if cells.is_empty() {
        return Err(fail("grid has no rows".into()));
    }

    let q = cells.iter().map(|c| c.1).max().unwrap_or(0) + 1;
    let p = cells.iter().map(|c| c.2).max().unwrap_or(0) + 1;
    let mut slot: Vec<Option<usize>> = vec![None; q * p];
    let mut values = vec![0.0; q * p];
    let mut duplicates = Vec::new();
    for &(line, rx, tx, power) in &cells {
        let k = rx * p + tx;
        match slot[k] {
            Some(first) => {
                duplicates.push(format!("(rx {rx}, tx {tx}) at rows {first} and {line}"))
            }
            None => {
                slot[k] = Some(line);
                values[k] = power;
            }
        }
    }
    if !duplicates.is_empty() {
        return Err(fail(format!("duplicate cells: {}", list(&duplicates))));
    }
    let missing: Vec<String> = slot
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_none())
        .map(|(k, _)| format!("(rx {}, tx {})", k / p, k % p))
        .collect();
    if !missing.is_empty() {
        return Err(fail(format!(
            "{q}x{p} grid is missing {} cells: {}",
            missing.len(),
            list(&missing)
        )));
    }
    PowerMap::from_row_major(q, p, values).map_err(|e| fail(e.to_string()))
}

fn list(items: &[String]) -> String {
    let mut s = items
        .iter()
        .take(MAX_LISTED)
        .cloned()
        .collect::<Vec<_>>()
        .join(", ");
    if items.len() > MAX_LISTED {
        s.push_str(&format!(", ... ({} more)", items.len() - MAX_LISTED));
    }
    s
}
