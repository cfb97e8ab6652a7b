//! Signed edge-list ingestion.
//!
//! One edge per line, `src dst weight`, whitespace separated. Node ids are
//! arbitrary tokens; blank lines and lines starting with `#` or `%` are skipped.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use sgl_core::SignedGraph;

use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct EdgeList {
    pub graph: SignedGraph,
    /// Original id of each dense index, in first-appearance order.
    pub ids: Vec<String>,
    pub self_loops_dropped: usize,
    /// Pairs whose duplicate weights summed to zero.
    pub cancelled_pairs: usize,
}

fn parse_err(line: usize, message: impl Into<String>) -> CliError {
    CliError::Data(sgl_core::Error::Parse { line, message: message.into() }.to_string())
}

pub fn parse_edge_list<R: BufRead>(input: R) -> Result<EdgeList, CliError> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut ids = Vec::new();
    let mut sums: HashMap<(usize, usize), f64> = HashMap::new();
    let mut order = Vec::new();
    let mut self_loops_dropped = 0;

    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(
                lineno,
                format!("expected `src dst weight`, found {} fields", fields.len()),
            ));
        }
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(lineno, format!("weight `{}` is not a number", fields[2])))?;
        if !w.is_finite() {
            return Err(parse_err(lineno, format!("weight `{}` is not finite", fields[2])));
        }
        if w == 0.0 {
            return Err(parse_err(lineno, "zero weight"));
        }
        let mut node = |id: &str| {
            *index.entry(id.to_string()).or_insert_with(|| {
                ids.push(id.to_string());
                ids.len() - 1
            })
        };
        let (a, b) = (node(fields[0]), node(fields[1]));
        if a == b {
            self_loops_dropped += 1;
            continue;
        }
        let key = (a.min(b), a.max(b));
        let entry = sums.entry(key).or_insert_with(|| {
            order.push(key);
            0.0
        });
        *entry += w;
    }

    let n = ids.len();
    if n < 2 {
        return Err(CliError::Data(format!("edge list has {n} nodes, need at least 2")));
    }
    let mut w = DMatrix::zeros(n, n);
    let mut cancelled_pairs = 0;
    for key in order {
        let v = sums[&key];
        if v == 0.0 {
            cancelled_pairs += 1;
            continue;
        }
        w[key] = v;
        w[(key.1, key.0)] = v;
    }
    if self_loops_dropped > 0 {
        log::warn!("dropped {self_loops_dropped} self-loop line(s)");
    }
    if cancelled_pairs > 0 {
        log::warn!("{cancelled_pairs} node pair(s) cancelled to zero weight");
    }
    let graph = SignedGraph::new(w).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(EdgeList {
        graph,
        ids,
        self_loops_dropped,
        cancelled_pairs,
    })
}

pub fn load_edge_list(path: &Path) -> Result<EdgeList, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::data(path, e))?;
    parse_edge_list(std::io::BufReader::new(file)).map_err(|e| match e {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Writes `index id` lines.
pub fn write_mapping<W: Write>(mut out: W, ids: &[String]) -> std::io::Result<()> {
    for (i, id) in ids.iter().enumerate() {
        writeln!(out, "{i} {id}")?;
    }
    Ok(())
}

pub fn read_mapping<R: BufRead>(input: R) -> Result<Vec<String>, CliError> {
    let mut ids = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| parse_err(i + 1, e.to_string()))?;
        let (idx, id) = line
            .split_once(' ')
            .ok_or_else(|| parse_err(i + 1, "expected `index id`"))?;
        if idx.parse::<usize>().ok() != Some(ids.len()) {
            return Err(parse_err(i + 1, format!("expected index {}", ids.len())));
        }
        ids.push(id.to_string());
    }
    Ok(ids)
}
