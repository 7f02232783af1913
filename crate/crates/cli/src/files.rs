use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

use crate::Usage;

pub fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

/// Runs `body` against the file at `path`, or standard output when `None`.
pub fn write_to(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut w = BufWriter::new(f);
            body(&mut w).with_context(|| format!("writing {}", p.display()))?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// `index,label` with 1-based indices and labels.
pub fn write_labels(out: &mut dyn Write, labels: &[usize]) -> std::io::Result<()> {
    writeln!(out, "index,label")?;
    for (i, l) in labels.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, l + 1)?;
    }
    Ok(())
}

/// Reads a label file: either `index,label` rows or one label per line. A
/// non-numeric first line is a header. Labels are returned as written.
pub fn read_labels(path: &Path) -> Result<Vec<i64>> {
    let mut labels = Vec::new();
    for (k, line) in open(path)?.lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let cell = match cells.len() {
            1 => cells[0],
            2 => cells[1],
            m => {
                return Err(Usage(format!("{}:{}: expected 1 or 2 columns, found {m}", path.display(), k + 1)).into())
            }
        };
        match cell.parse::<i64>() {
            Ok(v) => {
                if cells.len() == 2 {
                    let idx: usize = cells[0].parse().map_err(|_| {
                        Usage(format!("{}:{}: bad index '{}'", path.display(), k + 1, cells[0]))
                    })?;
                    if idx != labels.len() + 1 {
                        return Err(Usage(format!(
                            "{}:{}: index {idx} out of sequence, expected {}",
                            path.display(),
                            k + 1,
                            labels.len() + 1
                        ))
                        .into());
                    }
                }
                labels.push(v);
            }
            Err(_) if labels.is_empty() && k == 0 => {}
            Err(_) => return Err(Usage(format!("{}:{}: '{cell}' is not an integer label", path.display(), k + 1)).into()),
        }
    }
    Ok(labels)
}

/// Maps arbitrary integer labels onto `0..c` in ascending order.
pub fn compact_labels(raw: &[i64]) -> (Vec<usize>, usize) {
    let mut distinct: Vec<i64> = raw.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let labels = raw.iter().map(|v| distinct.binary_search(v).expect("present")).collect();
    (labels, distinct.len())
}
