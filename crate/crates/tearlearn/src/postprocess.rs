//! Turning a nearly-acyclic learned matrix into an exactly acyclic one.
//!
//! Continuous optimization drives the acyclicity measure close to zero but
//! rarely all the way; the leftover cycles must be removed afterwards. Two
//! repairs are implemented:
//!
//! * [`tear_until_acyclic`] — enumerate the remaining simple cycles, solve
//!   an exact minimum-cost covering program to pick the cheapest set of
//!   edges breaking all of them, zero those edges, and repeat until the
//!   graph is acyclic. Prior knowledge is honored: obligatory edges are
//!   never torn, forbidden edges are removed up front.
//! * [`truncate_until_acyclic`] — the simpler baseline: raise a global
//!   magnitude threshold through the observed entry magnitudes until the
//!   surviving graph is acyclic. This can discard many small edges that
//!   are not on any cycle, which is exactly the waste tearing avoids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_loop_matrix, enumerate_simple_cycles, is_acyclic, nonzero_streams};
use crate::matrix::WeightMatrix;
use crate::prior::{Prior, PriorSpec};
use crate::tear::{
    apply_prior, solve_tear_with_budget, weights_from_matrix_mode, TearProblem, WeightMode,
    DEFAULT_NODE_BUDGET,
};

/// Configuration for the tearing repair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TearConfig {
    /// Pre-tear magnitude threshold: entries with `|A| < omega` are zeroed
    /// before any cycle is enumerated.
    pub omega: f64,
    /// Cycle-length cap for enumeration; `None` means the node count.
    pub max_len: Option<usize>,
    /// Maximum number of cycles enumerated per round. When the cap bites,
    /// later rounds handle the cycles that were left out.
    pub max_count: usize,
    /// How edge magnitudes become tearing costs.
    pub weight_mode: WeightMode,
    /// Branch-and-bound node budget per round.
    pub node_budget: usize,
}

impl Default for TearConfig {
    fn default() -> Self {
        Self {
            omega: 0.0,
            max_len: None,
            max_count: 10_000,
            weight_mode: WeightMode::Abs,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

impl TearConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "omega must be finite and non-negative, got {}",
                self.omega
            )));
        }
        if let Some(l) = self.max_len {
            if l < 2 {
                return Err(Error::InvalidArgument(format!(
                    "max_len must be at least 2 (no self-loops exist), got {l}"
                )));
            }
        }
        if self.max_count == 0 {
            return Err(Error::InvalidArgument(
                "max_count must be positive".into(),
            ));
        }
        if self.node_budget == 0 {
            return Err(Error::InvalidArgument(
                "node_budget must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One removed edge: its position and the signed entry value at removal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TornStream {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// Solver statistics for one tearing round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TearRoundStat {
    /// Simple cycles enumerated this round.
    pub cycles_enumerated: usize,
    /// Whether the enumeration cap left some cycles unlisted.
    pub enumeration_truncated: bool,
    /// Branch-and-bound nodes explored.
    pub explored_nodes: usize,
    /// Whether the round's cover was proven optimal.
    pub optimal: bool,
    /// Streams torn this round.
    pub streams_torn: usize,
    /// Cover cost in the round's objective (respects the weight mode).
    pub cost: f64,
}

/// Outcome of a repair. `a_final` is acyclic — an unconditional
/// postcondition of both repairs. `total_torn_weight` is the sum of
/// absolute removed entry values regardless of the weight mode used in the
/// covering objective. `milp_optimal_every_round` reports whether every
/// round's covering program was solved to proven optimality; the
/// truncation baseline solves no such program, so there it is vacuously
/// true.
#[derive(Debug, Clone, PartialEq)]
pub struct TearReport {
    pub a_final: WeightMatrix,
    pub torn_streams: Vec<TornStream>,
    pub rounds: usize,
    pub total_torn_weight: f64,
    pub milp_optimal_every_round: bool,
    /// Per-round solver statistics; empty for the truncation baseline,
    /// which solves no covering program.
    pub round_stats: Vec<TearRoundStat>,
}

/// Prepares a learned matrix for tearing. Three rules, applied in order:
/// entries with `|A| < omega` are zeroed; entries forbidden by the prior
/// are zeroed; obligatory entries that are zero after the first two rules
/// are set to the input's largest absolute entry (positive sign — sign
/// does not affect tearing or acyclicity). An obligatory edge thinned away
/// by `omega` is therefore restored at that synthesized weight.
pub fn preprocess(a: &WeightMatrix, prior: &PriorSpec, omega: f64) -> Result<WeightMatrix> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "omega must be finite and non-negative, got {omega}"
        )));
    }
    let d = a.dim();
    if prior.dim() != d {
        return Err(Error::Precondition(format!(
            "matrix dimension {d} does not match prior dimension {}",
            prior.dim()
        )));
    }
    let max_abs = a.max_abs();
    let mut out = a.values().clone();
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            if out[[i, j]].abs() < omega || prior.get(i, j) == Prior::Forbidden {
                out[[i, j]] = 0.0;
            }
        }
    }
    for (i, j) in prior.obligatory_pairs() {
        if out[[i, j]] == 0.0 {
            if max_abs == 0.0 {
                return Err(Error::Precondition(format!(
                    "edge ({i}, {j}) is obligatory but absent, and the matrix has no \
                     nonzero entry to synthesize a weight from"
                )));
            }
            out[[i, j]] = max_abs;
        }
    }
    WeightMatrix::new(out)
}

/// Repairs a preprocessed matrix by repeated exact minimum-cost tearing:
/// enumerate cycles (capped), solve the covering program, zero the chosen
/// edges, and repeat until no cycle remains. Errors if a cycle consists
/// entirely of obligatory edges (infeasible), or if the length cap hides
/// every remaining cycle so a round cannot make progress.
pub fn tear_until_acyclic(
    a: &WeightMatrix,
    prior: &PriorSpec,
    cfg: &TearConfig,
) -> Result<TearReport> {
    cfg.validate()?;
    let d = a.dim();
    if prior.dim() != d {
        return Err(Error::Precondition(format!(
            "matrix dimension {d} does not match prior dimension {}",
            prior.dim()
        )));
    }
    let max_len = cfg.max_len.unwrap_or(d).min(d);
    let mut working = a.clone();
    let mut torn: Vec<TornStream> = Vec::new();
    let mut rounds = 0usize;
    let mut optimal_all = true;
    let mut round_stats: Vec<TearRoundStat> = Vec::new();

    // Each round tears at least one of the at-most d² edges, so d² + 1
    // rounds is a safe hard stop against a logic error turning into a hang.
    let round_cap = d * d + 1;
    loop {
        let streams = nonzero_streams(&working, None);
        if is_acyclic(&streams, d) {
            break;
        }
        if rounds >= round_cap {
            return Err(Error::NoProgress(format!(
                "tearing did not reach acyclicity within {round_cap} rounds"
            )));
        }
        let cycle_set = enumerate_simple_cycles(&streams, d, max_len, cfg.max_count);
        if cycle_set.cycles.is_empty() {
            return Err(Error::NoProgress(format!(
                "the graph is still cyclic but no cycle of length <= {max_len} exists; \
                 raise max_len"
            )));
        }
        let u = build_loop_matrix(&cycle_set.cycles, &streams)?;
        let weights = weights_from_matrix_mode(&working, &streams, cfg.weight_mode);
        let bounds = apply_prior(&streams, prior)?;
        let problem = TearProblem::new(streams, u, weights, bounds)?;
        let solution = solve_tear_with_budget(&problem, cfg.node_budget)?;
        optimal_all &= solution.optimal;
        rounds += 1;

        let mut torn_this_round = 0usize;
        for (j, &tear_it) in solution.y.iter().enumerate() {
            if !tear_it {
                continue;
            }
            let s = &problem.streams[j];
            let value = working.get(s.source, s.target);
            torn.push(TornStream {
                source: s.source,
                target: s.target,
                weight: value,
            });
            working.set(s.source, s.target, 0.0)?;
            torn_this_round += 1;
        }
        round_stats.push(TearRoundStat {
            cycles_enumerated: cycle_set.cycles.len(),
            enumeration_truncated: cycle_set.truncated,
            explored_nodes: solution.explored_nodes,
            optimal: solution.optimal,
            streams_torn: torn_this_round,
            cost: solution.cost,
        });
        if torn_this_round == 0 {
            return Err(Error::NoProgress(
                "a tearing round removed no edge while cycles remain".into(),
            ));
        }
    }

    // Defensive postcondition check: no obligatory edge may have been
    // zeroed (acyclicity is the loop's exit condition).
    for (i, j) in prior.obligatory_pairs() {
        if a.get(i, j) != 0.0 && working.get(i, j) != a.get(i, j) {
            return Err(Error::Precondition(format!(
                "internal: obligatory edge ({i}, {j}) was altered by tearing"
            )));
        }
    }

    let total_torn_weight = torn.iter().map(|t| t.weight.abs()).sum();
    Ok(TearReport {
        a_final: working,
        torn_streams: torn,
        rounds,
        total_torn_weight,
        milp_optimal_every_round: optimal_all,
        round_stats,
    })
}

/// The threshold-escalation baseline: step a global threshold `τ` upward
/// through the sorted distinct entry magnitudes, zeroing every entry with
/// `|A| ≤ τ`, and stop at the first `τ` whose surviving graph is acyclic.
/// Never fails — at the largest magnitude the graph is empty, which is
/// acyclic. `rounds` counts thresholds tried; an already-acyclic input
/// takes zero rounds and removes nothing.
pub fn truncate_until_acyclic(a: &WeightMatrix) -> TearReport {
    let d = a.dim();
    if is_acyclic(&nonzero_streams(a, None), d) {
        return TearReport {
            a_final: a.clone(),
            torn_streams: Vec::new(),
            rounds: 0,
            total_torn_weight: 0.0,
            milp_optimal_every_round: true,
            round_stats: Vec::new(),
        };
    }
    let mut magnitudes: Vec<f64> = a
        .values()
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| v.abs())
        .collect();
    magnitudes.sort_by(|x, y| x.partial_cmp(y).expect("magnitudes are finite"));
    magnitudes.dedup();

    let mut rounds = 0usize;
    for &tau in &magnitudes {
        rounds += 1;
        let mut candidate = a.values().clone();
        let mut removed = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let v = candidate[[i, j]];
                if v != 0.0 && v.abs() <= tau {
                    removed.push(TornStream {
                        source: i,
                        target: j,
                        weight: v,
                    });
                    candidate[[i, j]] = 0.0;
                }
            }
        }
        let survivor = WeightMatrix::new(candidate).expect("zeroing preserves validity");
        if is_acyclic(&nonzero_streams(&survivor, None), d) {
            let total_torn_weight = removed.iter().map(|t| t.weight.abs()).sum();
            return TearReport {
                a_final: survivor,
                torn_streams: removed,
                rounds,
                total_torn_weight,
                milp_optimal_every_round: true,
                round_stats: Vec::new(),
            };
        }
    }
    unreachable!("the largest magnitude empties the graph, which is acyclic")
}
