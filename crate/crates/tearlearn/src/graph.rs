//! Streams (directed edges), cycle detection, simple-cycle enumeration, and
//! the cycle-by-stream incidence ("loop") matrix.
//!
//! A stream is one directed edge `source -> target` carrying a non-negative
//! magnitude. Cycle enumeration is depth-first from each root node over the
//! subgraph of nodes with index >= root, which yields every simple directed
//! cycle exactly once in a deterministic order (smallest starting node first,
//! then lexicographic by node sequence). Both a length cap and a count cap
//! are supported; callers that tear cycles re-detect after every round, so a
//! truncated enumeration only delays progress, never breaks correctness.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::matrix::WeightMatrix;
use crate::prior::{Prior, PriorSpec};

/// One directed edge of the stream set, with its magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    /// Index of this stream in the stream list it was extracted into.
    pub id: usize,
    /// Origin node.
    pub source: usize,
    /// Destination node.
    pub target: usize,
    /// Magnitude `|A[source, target]|`; the sign stays in the matrix.
    pub weight: f64,
}

/// A simple directed cycle, stored as the stream ids walked in order.
/// Consecutive streams chain `target -> source`, and the last stream's
/// target equals the first stream's source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle {
    pub streams: Vec<usize>,
}

impl Cycle {
    /// Node sequence visited by the cycle (length = number of streams).
    pub fn nodes(&self, streams: &[Stream]) -> Vec<usize> {
        self.streams.iter().map(|&s| streams[s].source).collect()
    }
}

/// Enumeration result: the cycles found plus whether a cap cut the search
/// short (in which case more cycles exist than were returned).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleSet {
    pub cycles: Vec<Cycle>,
    pub truncated: bool,
}

/// Extracts one [`Stream`] per nonzero off-diagonal entry of `a`, in
/// row-major order, with `weight = |entry|`. When a prior is supplied,
/// entries classed [`Prior::Forbidden`] are skipped (preprocessing zeroes
/// them; skipping here keeps the two paths consistent).
pub fn nonzero_streams(a: &WeightMatrix, prior: Option<&PriorSpec>) -> Vec<Stream> {
    let d = a.dim();
    let mut out = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let v = a.get(i, j);
            if v == 0.0 {
                continue;
            }
            if let Some(p) = prior {
                if p.get(i, j) == Prior::Forbidden {
                    continue;
                }
            }
            out.push(Stream {
                id: out.len(),
                source: i,
                target: j,
                weight: v.abs(),
            });
        }
    }
    out
}

/// True iff the directed graph on `d` nodes with the given streams has no
/// directed cycle (Kahn's algorithm: repeatedly delete in-degree-0 nodes).
pub fn is_acyclic(streams: &[Stream], d: usize) -> bool {
    let mut indegree = vec![0usize; d];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); d];
    for s in streams {
        if s.source == s.target {
            return false;
        }
        adj[s.source].push(s.target);
        indegree[s.target] += 1;
    }
    let mut queue: VecDeque<usize> = (0..d).filter(|&v| indegree[v] == 0).collect();
    let mut removed = 0usize;
    while let Some(v) = queue.pop_front() {
        removed += 1;
        for &w in &adj[v] {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                queue.push_back(w);
            }
        }
    }
    removed == d
}

/// Enumerates simple directed cycles with at most `max_len` streams, up to
/// `max_count` of them. Deterministic order: cycles grouped by smallest
/// node (the starting node), lexicographic by node sequence within a group.
/// `truncated` is set when a cycle beyond `max_count` was found but not
/// recorded. No self-loops exist, so every cycle has >= 2 streams.
pub fn enumerate_simple_cycles(
    streams: &[Stream],
    d: usize,
    max_len: usize,
    max_count: usize,
) -> CycleSet {
    // Adjacency with (target, stream id), sorted so DFS explores the closing
    // edge back to the root (the smallest node in scope) before longer paths:
    // this makes the natural emission order lexicographic.
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); d];
    for s in streams {
        adj[s.source].push((s.target, s.id));
    }
    for list in &mut adj {
        list.sort_unstable();
    }

    let mut cycles = Vec::new();
    let mut truncated = false;
    let mut on_path = vec![false; d];
    let mut path: Vec<usize> = Vec::new(); // stream ids along the current path

    struct Dfs<'a> {
        adj: &'a [Vec<(usize, usize)>],
        max_len: usize,
        max_count: usize,
    }

    impl Dfs<'_> {
        /// Returns false when the count cap fired and the search must stop.
        fn visit(
            &self,
            root: usize,
            node: usize,
            on_path: &mut Vec<bool>,
            path: &mut Vec<usize>,
            cycles: &mut Vec<Cycle>,
            truncated: &mut bool,
        ) -> bool {
            for &(next, sid) in &self.adj[node] {
                if next < root {
                    continue; // cycles through smaller nodes were already found
                }
                if next == root {
                    if path.len() + 1 >= 2 && path.len() + 1 <= self.max_len {
                        if cycles.len() == self.max_count {
                            *truncated = true;
                            return false;
                        }
                        let mut c = path.clone();
                        c.push(sid);
                        cycles.push(Cycle { streams: c });
                    }
                    continue;
                }
                if on_path[next] || path.len() + 1 >= self.max_len {
                    // A longer path could never close within the cap: adding
                    // this stream uses one slot and closing needs another.
                    continue;
                }
                on_path[next] = true;
                path.push(sid);
                let keep_going = self.visit(root, next, on_path, path, cycles, truncated);
                path.pop();
                on_path[next] = false;
                if !keep_going {
                    return false;
                }
            }
            true
        }
    }

    let dfs = Dfs {
        adj: &adj,
        max_len,
        max_count,
    };
    for root in 0..d {
        on_path[root] = true;
        let ok = dfs.visit(root, root, &mut on_path, &mut path, &mut cycles, &mut truncated);
        on_path[root] = false;
        if !ok {
            break;
        }
    }
    CycleSet { cycles, truncated }
}

/// Binary cycle-by-stream incidence matrix: entry `(i, j)` is set exactly
/// when cycle `i` contains stream `j`. Columns are indexed by position in
/// the stream list; `stream_index` maps each column back to the stream id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopMatrix {
    rows: usize,
    cols: usize,
    /// For each cycle, the sorted column indices of its member streams.
    row_members: Vec<Vec<usize>>,
    /// Column -> stream id (identity for lists built by `nonzero_streams`).
    pub stream_index: Vec<usize>,
}

impl LoopMatrix {
    /// Number of cycles (rows).
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of streams (columns).
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Whether cycle `row` contains the stream in column `col`.
    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.row_members[row].binary_search(&col).is_ok()
    }

    /// Sorted column indices of the streams in cycle `row`.
    pub fn row_members(&self, row: usize) -> &[usize] {
        &self.row_members[row]
    }
}

/// Builds the incidence matrix of `cycles` over `streams`. Stream ids in
/// the cycles must refer to entries of `streams`; anything else is a
/// structural error.
pub fn build_loop_matrix(cycles: &[Cycle], streams: &[Stream]) -> Result<LoopMatrix> {
    // Map stream id -> column position.
    let mut col_of_id = std::collections::HashMap::new();
    for (pos, s) in streams.iter().enumerate() {
        if col_of_id.insert(s.id, pos).is_some() {
            return Err(Error::Data(format!("duplicate stream id {}", s.id)));
        }
    }
    let mut row_members = Vec::with_capacity(cycles.len());
    for (i, c) in cycles.iter().enumerate() {
        let mut members = Vec::with_capacity(c.streams.len());
        for &sid in &c.streams {
            let &col = col_of_id
                .get(&sid)
                .ok_or_else(|| Error::Data(format!("cycle {i} references unknown stream id {sid}")))?;
            members.push(col);
        }
        members.sort_unstable();
        members.dedup();
        if members.len() != c.streams.len() {
            return Err(Error::Data(format!("cycle {i} repeats a stream")));
        }
        row_members.push(members);
    }
    Ok(LoopMatrix {
        rows: cycles.len(),
        cols: streams.len(),
        row_members,
        stream_index: streams.iter().map(|s| s.id).collect(),
    })
}
