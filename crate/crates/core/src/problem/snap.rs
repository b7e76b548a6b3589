use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::DualSparseMatrix;

/// Directed graph on nodes `0..n_nodes` with distinct edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    pub n_nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

impl EdgeList {
    /// Validates ids and collapses duplicate edges, keeping first occurrences
    /// in order. Self-loops are kept.
    pub fn new(n_nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(from, to)) = edges.iter().find(|&&(a, b)| a >= n_nodes || b >= n_nodes) {
            return Err(Error::IndexOutOfRange {
                row: from,
                col: to,
                n_rows: n_nodes,
                n_cols: n_nodes,
            });
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let edges = edges.into_iter().filter(|e| seen.insert(*e)).collect();
        Ok(Self { n_nodes, edges })
    }
}

/// Reads a SNAP edge list: `#` comment lines and whitespace-separated
/// `from to` id pairs. Ids are compacted to `0..n` in order of first
/// appearance.
pub fn load_snap_edgelist(path: impl AsRef<Path>) -> Result<EdgeList> {
    let path = path.as_ref();
    parse_snap_edgelist(BufReader::new(File::open(path)?), path)
}

pub fn parse_snap_edgelist<R: BufRead>(reader: R, path: &Path) -> Result<EdgeList> {
    let mut ids: HashMap<u64, usize> = HashMap::new();
    let mut edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let malformed = || Error::MalformedLine {
            path: path.to_path_buf(),
            line: lineno + 1,
            content: line.clone(),
        };
        let mut fields = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(malformed());
        };
        let (a, b) = match (a.parse::<u64>(), b.parse::<u64>()) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Err(malformed()),
        };
        let mut compact = |raw: u64| {
            let next = ids.len();
            *ids.entry(raw).or_insert(next)
        };
        let from = compact(a);
        let to = compact(b);
        edges.push((from, to));
    }
    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    EdgeList::new(ids.len(), edges)
}

/// Random-walk matrix of a graph: `P(i, j) = 1/outdeg(i)` for every edge
/// `i → j`. A node without out-edges gets the self-loop `P(i, i) = 1`.
pub fn webgraph_to_p(g: &EdgeList) -> Result<DualSparseMatrix> {
    let mut outdeg = vec![0usize; g.n_nodes];
    for &(from, _) in &g.edges {
        outdeg[from] += 1;
    }
    let mut triplets: Vec<(usize, usize, f64)> = g
        .edges
        .iter()
        .map(|&(from, to)| (from, to, 1.0 / outdeg[from] as f64))
        .collect();
    triplets.extend(
        outdeg
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| (i, i, 1.0)),
    );
    DualSparseMatrix::from_triplets(&triplets, g.n_nodes, g.n_nodes)
}
