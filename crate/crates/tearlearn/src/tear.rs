//! Exact minimum-cost loop tearing.
//!
//! Given the simple cycles of a graph (as a cycle-by-stream incidence
//! matrix) and a non-negative weight per stream, find the cheapest set of
//! streams whose removal breaks every cycle: minimize `Σ wⱼ·yⱼ` subject to
//! `Σᵢ uᵢⱼ·yⱼ ≥ 1` for every cycle row, `yⱼ ∈ {0, 1}` — a weighted
//! set-cover integer program, solved exactly by best-first branch-and-bound
//! with an admissible amortized-cost bound.
//!
//! Prior knowledge enters through per-stream bounds on `y`: an
//! unconstrained stream gets `ub = 1.0`; a stream that must stay in the
//! model gets `ub = 0.5`, which for a binary variable forces `y = 0` (the
//! encoding is kept in this form deliberately). Forbidden streams never
//! appear here — preprocessing removes them from the matrix first.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::graph::{LoopMatrix, Stream};
use crate::matrix::WeightMatrix;
use crate::prior::{Prior, PriorSpec};

/// How stream weights derive from adjacency magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// `w = |A_ij|` — tearing cost proportional to the removed magnitude.
    #[default]
    Abs,
    /// `w = A_ij²` — de-emphasizes small entries further.
    Square,
}

/// Per-stream tearing weights `wⱼ = |A| at the stream's position`.
pub fn weights_from_matrix(a: &WeightMatrix, streams: &[Stream]) -> Vec<f64> {
    streams
        .iter()
        .map(|s| a.get(s.source, s.target).abs())
        .collect()
}

/// Weights under a [`WeightMode`]: absolute value, or its square.
pub fn weights_from_matrix_mode(
    a: &WeightMatrix,
    streams: &[Stream],
    mode: WeightMode,
) -> Vec<f64> {
    let abs = weights_from_matrix(a, streams);
    match mode {
        WeightMode::Abs => abs,
        WeightMode::Square => abs.into_iter().map(|w| w * w).collect(),
    }
}

/// Per-stream variable bounds. `lower` is always 0; `upper` is 1.0 for a
/// tearable stream and 0.5 for one that must be kept (binary `y ≤ 0.5`
/// forces `y = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TearBounds {
    pub lower: f64,
    pub upper: f64,
}

impl TearBounds {
    pub fn tearable(&self) -> bool {
        self.upper >= 1.0
    }
}

/// Derives bounds from prior knowledge. Exactly one case applies per
/// stream: unconstrained streams keep the full binary range, streams whose
/// presence is obligatory are pinned to `y = 0`. A forbidden stream
/// reaching this point breaks the preprocessing contract and is a
/// structural error, not a solvable state.
pub fn apply_prior(streams: &[Stream], prior: &PriorSpec) -> Result<Vec<TearBounds>> {
    let mut bounds = Vec::with_capacity(streams.len());
    for s in streams {
        let b = match prior.get(s.source, s.target) {
            Prior::Unknown => TearBounds {
                lower: 0.0,
                upper: 1.0,
            },
            Prior::Obligatory => TearBounds {
                lower: 0.0,
                upper: 0.5,
            },
            Prior::Forbidden => {
                return Err(Error::Precondition(format!(
                    "stream ({}, {}) is forbidden by the prior but still present; \
                     forbidden entries must be zeroed before tearing",
                    s.source, s.target
                )));
            }
        };
        bounds.push(b);
    }
    Ok(bounds)
}

/// A complete tearing instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TearProblem {
    pub streams: Vec<Stream>,
    pub u: LoopMatrix,
    pub weights: Vec<f64>,
    pub bounds: Vec<TearBounds>,
}

impl TearProblem {
    /// Validates cross-field consistency.
    pub fn new(
        streams: Vec<Stream>,
        u: LoopMatrix,
        weights: Vec<f64>,
        bounds: Vec<TearBounds>,
    ) -> Result<Self> {
        if weights.len() != streams.len() || u.cols() != streams.len() {
            return Err(Error::Precondition(format!(
                "inconsistent sizes: {} streams, {} weights, {} matrix columns",
                streams.len(),
                weights.len(),
                u.cols()
            )));
        }
        if bounds.len() != streams.len() {
            return Err(Error::Precondition(format!(
                "inconsistent sizes: {} streams, {} bounds",
                streams.len(),
                bounds.len()
            )));
        }
        for (j, w) in weights.iter().enumerate() {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::Precondition(format!(
                    "weight {j} must be finite and non-negative, got {w}"
                )));
            }
        }
        for (j, b) in bounds.iter().enumerate() {
            if b.lower != 0.0 || !(b.upper == 1.0 || b.upper == 0.5) {
                return Err(Error::Precondition(format!(
                    "bounds {j} must be (0, 1.0) or (0, 0.5), got ({}, {})",
                    b.lower, b.upper
                )));
            }
        }
        Ok(Self {
            streams,
            u,
            weights,
            bounds,
        })
    }

    /// All-tearable bounds convenience.
    pub fn unconstrained(streams: Vec<Stream>, u: LoopMatrix, weights: Vec<f64>) -> Result<Self> {
        let bounds = vec![
            TearBounds {
                lower: 0.0,
                upper: 1.0
            };
            streams.len()
        ];
        Self::new(streams, u, weights, bounds)
    }

    /// Serializes the instance as a line-oriented text block (streams,
    /// weights, bounds, cycle rows) for debugging and external checks.
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("streams {}\n", self.streams.len()));
        for s in &self.streams {
            out.push_str(&format!("{} {} {}\n", s.id, s.source, s.target));
        }
        out.push_str("weights");
        for w in &self.weights {
            out.push_str(&format!(" {w}"));
        }
        out.push('\n');
        out.push_str("upper_bounds");
        for b in &self.bounds {
            out.push_str(&format!(" {}", b.upper));
        }
        out.push('\n');
        out.push_str(&format!("rows {}\n", self.u.rows()));
        for i in 0..self.u.rows() {
            let cols: Vec<String> = self
                .u
                .row_members(i)
                .iter()
                .map(|c| c.to_string())
                .collect();
            out.push_str(&cols.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses [`TearProblem::dump_text`] output. `origin` labels parse
    /// errors (a file name, or a placeholder for in-memory text).
    pub fn parse_text(text: &str, origin: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: origin.into(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        let (ln, header) = lines
            .next()
            .ok_or_else(|| err(1, "empty problem text".into()))?;
        let count: usize = header
            .strip_prefix("streams ")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err(ln + 1, format!("expected 'streams <count>', got '{header}'")))?;
        let mut streams = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, row) = lines
                .next()
                .ok_or_else(|| err(count + 1, "truncated stream list".into()))?;
            let parts: Vec<&str> = row.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(err(ln + 1, format!("expected 'id source target', got '{row}'")));
            }
            let nums: Vec<usize> = parts
                .iter()
                .map(|p| p.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| err(ln + 1, format!("bad integer in '{row}': {e}")))?;
            streams.push(Stream {
                id: nums[0],
                source: nums[1],
                target: nums[2],
                weight: 0.0,
            });
        }
        let (ln, wline) = lines
            .next()
            .ok_or_else(|| err(count + 2, "missing weights line".into()))?;
        let weights: Vec<f64> = wline
            .strip_prefix("weights")
            .ok_or_else(|| err(ln + 1, format!("expected 'weights ...', got '{wline}'")))?
            .split_whitespace()
            .map(|p| p.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(ln + 1, format!("bad weight: {e}")))?;
        for (s, w) in streams.iter_mut().zip(weights.iter()) {
            s.weight = w.abs();
        }
        let (ln, bline) = lines
            .next()
            .ok_or_else(|| err(count + 3, "missing upper_bounds line".into()))?;
        let uppers: Vec<f64> = bline
            .strip_prefix("upper_bounds")
            .ok_or_else(|| err(ln + 1, format!("expected 'upper_bounds ...', got '{bline}'")))?
            .split_whitespace()
            .map(|p| p.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(ln + 1, format!("bad bound: {e}")))?;
        let bounds: Vec<TearBounds> = uppers
            .iter()
            .map(|&u| TearBounds {
                lower: 0.0,
                upper: u,
            })
            .collect();
        let (ln, rheader) = lines
            .next()
            .ok_or_else(|| err(count + 4, "missing rows header".into()))?;
        let nrows: usize = rheader
            .strip_prefix("rows ")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| err(ln + 1, format!("expected 'rows <count>', got '{rheader}'")))?;
        let mut cycles = Vec::with_capacity(nrows);
        for _ in 0..nrows {
            let (ln, row) = lines
                .next()
                .ok_or_else(|| err(count + 5, "truncated row list".into()))?;
            let members: Vec<usize> = row
                .split_whitespace()
                .map(|p| p.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| err(ln + 1, format!("bad stream index in row: {e}")))?;
            // Columns equal stream ids here because dump writes positions.
            cycles.push(crate::graph::Cycle {
                streams: members
                    .iter()
                    .map(|&c| {
                        streams
                            .get(c)
                            .map(|s| s.id)
                            .ok_or_else(|| err(ln + 1, format!("row references column {c} out of range")))
                    })
                    .collect::<Result<Vec<_>>>()?,
            });
        }
        let u = crate::graph::build_loop_matrix(&cycles, &streams)?;
        Self::new(streams, u, weights, bounds)
    }
}

/// Solver output. `y[j] = true` means stream `j` is torn (removed).
#[derive(Debug, Clone, PartialEq)]
pub struct TearSolution {
    pub y: Vec<bool>,
    pub cost: f64,
    pub optimal: bool,
    pub explored_nodes: usize,
}

/// Default branch-and-bound node budget.
pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

const EPS: f64 = 1e-12;

#[derive(Clone)]
struct Node {
    /// 0 = undecided, 1 = torn, 2 = excluded.
    state: Vec<u8>,
    cost: f64,
    bound: f64,
    seq: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl Eq for Node {}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for best-first on the bound,
        // breaking ties by insertion order for full determinism.
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then(other.seq.cmp(&self.seq))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Instance<'p> {
    problem: &'p TearProblem,
    /// Row-membership count per column (for the amortized bound).
    membership: Vec<usize>,
}

impl<'p> Instance<'p> {
    fn new(problem: &'p TearProblem) -> Self {
        let mut membership = vec![0usize; problem.streams.len()];
        for i in 0..problem.u.rows() {
            for &c in problem.u.row_members(i) {
                membership[c] += 1;
            }
        }
        Self {
            problem,
            membership,
        }
    }

    /// Rows not yet covered by a torn stream, or `None` for an infeasible
    /// state (some row has every member excluded).
    fn uncovered(&self, state: &[u8]) -> Option<Vec<usize>> {
        let mut open = Vec::new();
        for i in 0..self.problem.u.rows() {
            let members = self.problem.u.row_members(i);
            if members.iter().any(|&c| state[c] == 1) {
                continue;
            }
            let coverable = members
                .iter()
                .any(|&c| state[c] == 0 && self.problem.bounds[c].tearable());
            if !coverable {
                return None;
            }
            open.push(i);
        }
        Some(open)
    }

    /// Admissible lower bound: current cost plus, per uncovered row, the
    /// cheapest amortized tear available in it (weight divided by how many
    /// rows that stream could cover).
    fn bound(&self, state: &[u8], cost: f64, open: &[usize]) -> f64 {
        let mut b = cost;
        for &i in open {
            let mut best = f64::INFINITY;
            for &c in self.problem.u.row_members(i) {
                if state[c] == 0 && self.problem.bounds[c].tearable() {
                    let amortized = self.problem.weights[c] / self.membership[c].max(1) as f64;
                    if amortized < best {
                        best = amortized;
                    }
                }
            }
            b += best;
        }
        b
    }

    /// Branching choice: the undecided tearable stream present in the most
    /// uncovered rows; ties go to the smallest column index.
    fn pick_branch(&self, state: &[u8], open: &[usize]) -> Option<usize> {
        let cols = self.problem.streams.len();
        let mut count = vec![0usize; cols];
        for &i in open {
            for &c in self.problem.u.row_members(i) {
                if state[c] == 0 && self.problem.bounds[c].tearable() {
                    count[c] += 1;
                }
            }
        }
        let mut best: Option<usize> = None;
        for c in 0..cols {
            if count[c] == 0 {
                continue;
            }
            match best {
                None => best = Some(c),
                Some(b) if count[c] > count[b] => best = Some(c),
                _ => {}
            }
        }
        best
    }

    /// Greedy cover for the initial incumbent.
    fn greedy(&self) -> Option<(Vec<bool>, f64)> {
        let cols = self.problem.streams.len();
        let mut state = vec![0u8; cols];
        loop {
            let open = self.uncovered(&state)?;
            if open.is_empty() {
                let y: Vec<bool> = state.iter().map(|&s| s == 1).collect();
                let cost = self.cost_of(&y);
                return Some((y, cost));
            }
            let pick = self.pick_branch(&state, &open)?;
            state[pick] = 1;
        }
    }

    fn cost_of(&self, y: &[bool]) -> f64 {
        y.iter()
            .zip(self.problem.weights.iter())
            .map(|(&t, &w)| if t { w } else { 0.0 })
            .sum()
    }
}

/// Solves the tearing program exactly (up to `node_budget` branch-and-bound
/// nodes; past it the best incumbent is returned with `optimal = false`).
pub fn solve_tear_with_budget(problem: &TearProblem, node_budget: usize) -> Result<TearSolution> {
    if problem.u.rows() == 0 {
        return Err(Error::InvalidArgument(
            "tearing needs at least one cycle row".into(),
        ));
    }
    // Feasibility: every row needs at least one tearable stream.
    for i in 0..problem.u.rows() {
        let members = problem.u.row_members(i);
        if !members.iter().any(|&c| problem.bounds[c].tearable()) {
            let named: Vec<(usize, usize)> = members
                .iter()
                .map(|&c| (problem.streams[c].source, problem.streams[c].target))
                .collect();
            return Err(Error::InfeasibleTear { streams: named });
        }
    }

    let inst = Instance::new(problem);
    let cols = problem.streams.len();

    let (mut best_y, mut best_cost) = inst
        .greedy()
        .expect("greedy cover exists after the feasibility check");

    let root_state = vec![0u8; cols];
    let root_open = inst
        .uncovered(&root_state)
        .expect("root feasibility established");
    let root_bound = inst.bound(&root_state, 0.0, &root_open);

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node {
        state: root_state,
        cost: 0.0,
        bound: root_bound,
        seq,
    });

    let mut explored = 0usize;
    let mut proven = false;

    while let Some(node) = heap.pop() {
        explored += 1;
        if node.bound >= best_cost - EPS {
            // Best-first order: nothing left can improve the incumbent.
            proven = true;
            break;
        }
        if explored > node_budget {
            break;
        }
        let open = match inst.uncovered(&node.state) {
            Some(o) => o,
            None => continue,
        };
        if open.is_empty() {
            if node.cost < best_cost - EPS {
                best_cost = node.cost;
                best_y = node.state.iter().map(|&s| s == 1).collect();
            }
            continue;
        }
        let branch = match inst.pick_branch(&node.state, &open) {
            Some(b) => b,
            None => continue,
        };
        // Child 1: tear the branching stream.
        let mut torn = node.state.clone();
        torn[branch] = 1;
        let torn_cost = node.cost + problem.weights[branch];
        if let Some(open_t) = inst.uncovered(&torn) {
            let b = inst.bound(&torn, torn_cost, &open_t);
            if b < best_cost - EPS {
                seq += 1;
                heap.push(Node {
                    state: torn,
                    cost: torn_cost,
                    bound: b,
                    seq,
                });
            } else if open_t.is_empty() && torn_cost < best_cost - EPS {
                best_cost = torn_cost;
                best_y = create_y(&torn);
            }
        }
        // Child 2: exclude it.
        let mut excl = node.state.clone();
        excl[branch] = 2;
        if let Some(open_e) = inst.uncovered(&excl) {
            let b = inst.bound(&excl, node.cost, &open_e);
            if b < best_cost - EPS {
                seq += 1;
                heap.push(Node {
                    state: excl,
                    cost: node.cost,
                    bound: b,
                    seq,
                });
            } else if open_e.is_empty() && node.cost < best_cost - EPS {
                best_cost = node.cost;
                best_y = create_y(&excl);
            }
        }
    }
    if heap.is_empty() && !proven {
        proven = explored <= node_budget;
    }

    // Post-hoc certification of the incumbent: bounds respected, every row
    // covered, cost consistent.
    for (j, &t) in best_y.iter().enumerate() {
        if t && !problem.bounds[j].tearable() {
            return Err(Error::Precondition(format!(
                "internal: solution tears pinned stream {j}"
            )));
        }
    }
    for i in 0..problem.u.rows() {
        if !problem.u.row_members(i).iter().any(|&c| best_y[c]) {
            return Err(Error::Precondition(format!(
                "internal: cycle row {i} left uncovered"
            )));
        }
    }
    let recomputed = inst.cost_of(&best_y);
    if (recomputed - best_cost).abs() > EPS {
        return Err(Error::Precondition(format!(
            "internal: cost mismatch {best_cost} vs {recomputed}"
        )));
    }

    Ok(TearSolution {
        y: best_y,
        cost: best_cost,
        optimal: proven,
        explored_nodes: explored,
    })
}

fn create_y(state: &[u8]) -> Vec<bool> {
    state.iter().map(|&s| s == 1).collect()
}

/// Solves with the default node budget.
pub fn solve_tear(problem: &TearProblem) -> Result<TearSolution> {
    solve_tear_with_budget(problem, DEFAULT_NODE_BUDGET)
}
