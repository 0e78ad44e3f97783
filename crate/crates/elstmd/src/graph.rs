//! Temporal edge lists and snapshot sequences.
//!
//! Raw records are `src dst timestamp` lines (whitespace or comma separated,
//! `#` comments ignored). Node labels are remapped to dense 0-based ids in
//! order of first appearance. The node universe is fixed to every node ever
//! observed, so all snapshots share one adjacency shape.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TemporalEdge {
    pub src: usize,
    pub dst: usize,
    pub timestamp: i64,
}

#[derive(Debug, Clone)]
pub struct TemporalEdgeList {
    /// Sorted non-decreasing by timestamp.
    pub edges: Vec<TemporalEdge>,
    pub node_count: usize,
    pub t_min: i64,
    pub t_max: i64,
    /// Original label for each dense id.
    pub labels: Vec<String>,
}

/// One binary directed adjacency matrix, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub adjacency: Matrix,
    pub index: usize,
}

impl Snapshot {
    pub fn node_count(&self) -> usize {
        self.adjacency.rows
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency.get(i, j) >= 0.5
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.node_count();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }
}

#[derive(Debug, Clone)]
pub struct SnapshotSequence {
    pub snapshots: Vec<Snapshot>,
    /// Seconds covered by each snapshot bin.
    pub interval: f64,
}

impl SnapshotSequence {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.snapshots.first().map(|s| s.node_count()).unwrap_or(0)
    }
}

/// N input snapshots plus the next snapshot as prediction target.
#[derive(Debug, Clone)]
pub struct SampleWindow {
    pub inputs: Vec<Snapshot>,
    pub target: Snapshot,
    /// Index of the target snapshot in the source sequence.
    pub t: usize,
}

impl SampleWindow {
    /// The snapshot right before the target, used as the "previous" graph in
    /// added/removed-link metrics.
    pub fn prev(&self) -> &Snapshot {
        self.inputs.last().expect("window has at least one input")
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<SampleWindow>,
    pub test: Vec<SampleWindow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeListFormat {
    /// Whitespace or comma separated, auto-detected per line.
    Auto,
}

/// Parses a raw edge list. Self-loops are dropped (their node labels still
/// count toward the node universe); duplicate records are retained and
/// collapse at snapshot build.
pub fn ingest_edge_list(source: impl Read, _format: EdgeListFormat) -> Result<TemporalEdgeList> {
    let reader = BufReader::new(source);
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges: Vec<TemporalEdge> = Vec::new();
    let mut saw_record = false;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = if trimmed.contains(',') {
            trimmed.split(',').map(str::trim).filter(|f| !f.is_empty()).collect()
        } else {
            trimmed.split_whitespace().collect()
        };
        if fields.len() < 3 {
            // Tolerate a CSV header on the first record line.
            if !saw_record && fields.iter().any(|f| f.parse::<f64>().is_err()) && fields.len() == 2
            {
                continue;
            }
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 'src dst timestamp', got {trimmed:?}"),
            });
        }
        if !saw_record && fields[2].parse::<f64>().is_err() {
            // CSV header like "source,target,time".
            saw_record = true;
            continue;
        }
        saw_record = true;
        let ts: i64 = parse_timestamp(fields[2]).ok_or_else(|| Error::Parse {
            line: lineno,
            msg: format!("bad timestamp {:?}", fields[2]),
        })?;
        let mut id_of = |label: &str| -> usize {
            *ids.entry(label.to_string()).or_insert_with(|| {
                labels.push(label.to_string());
                labels.len() - 1
            })
        };
        let src = id_of(fields[0]);
        let dst = id_of(fields[1]);
        if src == dst {
            continue;
        }
        edges.push(TemporalEdge { src, dst, timestamp: ts });
    }

    if edges.is_empty() {
        return Err(Error::Parse { line: 0, msg: "no edge records in input".into() });
    }
    edges.sort_by_key(|e| e.timestamp);
    let t_min = edges.first().unwrap().timestamp;
    let t_max = edges.last().unwrap().timestamp;
    Ok(TemporalEdgeList { edges, node_count: labels.len(), t_min, t_max, labels })
}

fn parse_timestamp(s: &str) -> Option<i64> {
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    // Some dumps carry float timestamps.
    s.parse::<f64>().ok().filter(|v| v.is_finite()).map(|v| v.floor() as i64)
}

/// Bins edges into `num_snapshots` half-open intervals of equal length; the
/// final timestamp is clamped into the last bin. An entry is 1 iff at least
/// one edge fell in the bin.
pub fn build_snapshots(edges: &TemporalEdgeList, num_snapshots: usize) -> Result<SnapshotSequence> {
    if num_snapshots < 2 {
        return Err(Error::InvalidArgument(format!(
            "num_snapshots must be >= 2, got {num_snapshots}"
        )));
    }
    if edges.t_max <= edges.t_min {
        return Err(Error::InvalidArgument(
            "all timestamps equal: cannot split into snapshots".into(),
        ));
    }
    let n = edges.node_count;
    let span = (edges.t_max - edges.t_min) as f64;
    let interval = span / num_snapshots as f64;
    let mut snapshots: Vec<Snapshot> = (0..num_snapshots)
        .map(|k| Snapshot { adjacency: Matrix::zeros(n, n), index: k })
        .collect();
    for e in &edges.edges {
        let k = (((e.timestamp - edges.t_min) as f64) / interval).floor() as usize;
        let k = k.min(num_snapshots - 1);
        if e.src != e.dst {
            snapshots[k].adjacency.set(e.src, e.dst, 1.0);
        }
    }
    Ok(SnapshotSequence { snapshots, interval })
}

/// Removes a link from snapshot k iff it appears in none of snapshots
/// k+1 .. min(k+horizon, T-1). Snapshots whose lookahead window is empty
/// (the last one) keep all links.
pub fn filter_transient_links(seq: &SnapshotSequence, horizon: usize) -> Result<SnapshotSequence> {
    if horizon < 1 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    let t_len = seq.len();
    let n = seq.node_count();
    let mut out = seq.clone();
    for k in 0..t_len {
        let end = (k + horizon).min(t_len.saturating_sub(1));
        if end <= k {
            continue; // empty lookahead: keep
        }
        for i in 0..n {
            for j in 0..n {
                if i == j || seq.snapshots[k].adjacency.get(i, j) < 0.5 {
                    continue;
                }
                let reappears = (k + 1..=end)
                    .any(|m| seq.snapshots[m].adjacency.get(i, j) >= 0.5);
                if !reappears {
                    out.snapshots[k].adjacency.set(i, j, 0.0);
                }
            }
        }
    }
    Ok(out)
}

/// Sliding windows: targets t = window_len .. T-1, each with the
/// `window_len` preceding snapshots as inputs.
pub fn make_windows(seq: &SnapshotSequence, window_len: usize) -> Result<Vec<SampleWindow>> {
    if window_len < 1 {
        return Err(Error::InvalidArgument("window_len must be >= 1".into()));
    }
    if seq.len() <= window_len {
        return Err(Error::InvalidArgument(format!(
            "need more than {} snapshots for window_len {}, got {}",
            window_len,
            window_len,
            seq.len()
        )));
    }
    let mut windows = Vec::with_capacity(seq.len() - window_len);
    for t in window_len..seq.len() {
        windows.push(SampleWindow {
            inputs: seq.snapshots[t - window_len..t].to_vec(),
            target: seq.snapshots[t].clone(),
            t,
        });
    }
    Ok(windows)
}

/// First `train_count` windows train, the rest test; order preserved.
pub fn split_windows(windows: Vec<SampleWindow>, train_count: usize) -> Result<DatasetSplit> {
    if train_count == 0 || train_count >= windows.len() {
        return Err(Error::InvalidArgument(format!(
            "train_count must be in 1..{}, got {train_count}",
            windows.len()
        )));
    }
    let mut windows = windows;
    let test = windows.split_off(train_count);
    Ok(DatasetSplit { train: windows, test })
}

/// Writes a snapshot sequence as a directory of per-snapshot sparse triplet
/// files (`k.edges`, "i j" per line) plus a `manifest.txt`.
pub fn export_snapshots(
    dir: &Path,
    seq: &SnapshotSequence,
    horizon_applied: Option<usize>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    for snap in &seq.snapshots {
        let mut f = fs::File::create(dir.join(format!("{}.edges", snap.index)))?;
        for (i, j) in snap.edges() {
            writeln!(f, "{i} {j}")?;
        }
    }
    let mut m = fs::File::create(dir.join("manifest.txt"))?;
    writeln!(m, "node_count {}", seq.node_count())?;
    writeln!(m, "snapshots {}", seq.len())?;
    writeln!(m, "interval {}", seq.interval)?;
    match horizon_applied {
        Some(h) => writeln!(m, "horizon {h}")?,
        None => writeln!(m, "horizon none")?,
    }
    Ok(())
}

/// Reads a directory written by [`export_snapshots`].
pub fn load_snapshots(dir: &Path) -> Result<SnapshotSequence> {
    let manifest = fs::read_to_string(dir.join("manifest.txt"))?;
    let mut node_count = None;
    let mut count = None;
    let mut interval = 0.0f64;
    for (lineno, line) in manifest.lines().enumerate() {
        let mut it = line.split_whitespace();
        let key = it.next().unwrap_or("");
        let val = it.next().unwrap_or("");
        match key {
            "node_count" => node_count = val.parse::<usize>().ok(),
            "snapshots" => count = val.parse::<usize>().ok(),
            "interval" => {
                interval = val.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("bad interval {val:?}"),
                })?
            }
            _ => {}
        }
    }
    let n = node_count
        .ok_or_else(|| Error::Parse { line: 0, msg: "manifest missing node_count".into() })?;
    let t_len =
        count.ok_or_else(|| Error::Parse { line: 0, msg: "manifest missing snapshots".into() })?;
    let mut snapshots = Vec::with_capacity(t_len);
    for k in 0..t_len {
        let path = dir.join(format!("{k}.edges"));
        let mut adjacency = Matrix::zeros(n, n);
        let content = fs::read_to_string(&path)?;
        for (lineno, line) in content.lines().enumerate() {
            let mut it = line.split_whitespace();
            let parse = |s: Option<&str>| -> Option<usize> { s.and_then(|v| v.parse().ok()) };
            match (parse(it.next()), parse(it.next())) {
                (Some(i), Some(j)) if i < n && j < n && i != j => adjacency.set(i, j, 1.0),
                _ => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: format!("bad edge record in {}", path.display()),
                    })
                }
            }
        }
        snapshots.push(Snapshot { adjacency, index: k });
    }
    Ok(SnapshotSequence { snapshots, interval })
}
