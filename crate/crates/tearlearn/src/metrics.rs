//! Structure-recovery metrics: how well an estimated graph matches a
//! known ground truth.
//!
//! Every estimated directed edge is classified against the truth as
//! correct-direction (TP), reversed (R), or absent from the true
//! undirected skeleton entirely (FP); skeleton-level extras (E) and
//! misses (M) complete the picture. The derived rates follow the usual
//! definitions: false discovery rate `(R+FP)/TEE`, true positive rate
//! `TP/T`, false positive rate `(R+FP)/F`, and structural Hamming
//! distance `E+M+R`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::WeightMatrix;

/// Classification counts comparing an estimated graph to the truth.
///
/// Directed-edge counts: `tp` (estimated edges whose direction matches),
/// `r` (estimated edges present reversed in the truth), `fp` (estimated
/// edges between node pairs the truth leaves unconnected), `tee` (total
/// estimated edges), `t` (total true edges). Skeleton counts over
/// unordered pairs: `e` (estimated skeleton edges absent from the true
/// skeleton), `m` (true skeleton edges absent from the estimated
/// skeleton). `f` counts unordered node pairs not connected in the true
/// skeleton — the conventional normalizer for the false positive rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeConfusion {
    pub tp: usize,
    pub r: usize,
    pub fp: usize,
    pub e: usize,
    pub m: usize,
    pub tee: usize,
    pub t: usize,
    pub f: usize,
}

/// Classifies every estimated edge against the ground truth. Both
/// matrices are read as supports: an edge exists where the entry is
/// nonzero. A pair connected in both directions contributes two directed
/// edges but one skeleton edge.
pub fn edge_confusion(estimated: &WeightMatrix, truth: &WeightMatrix) -> Result<EdgeConfusion> {
    let d = estimated.dim();
    if truth.dim() != d {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: estimated {d} vs truth {}",
            truth.dim()
        )));
    }
    let est = |i: usize, j: usize| estimated.get(i, j) != 0.0;
    let tru = |i: usize, j: usize| truth.get(i, j) != 0.0;

    let mut c = EdgeConfusion {
        tp: 0,
        r: 0,
        fp: 0,
        e: 0,
        m: 0,
        tee: 0,
        t: 0,
        f: 0,
    };
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            if tru(i, j) {
                c.t += 1;
            }
            if !est(i, j) {
                continue;
            }
            c.tee += 1;
            if tru(i, j) {
                c.tp += 1;
            } else if tru(j, i) {
                c.r += 1;
            } else {
                c.fp += 1;
            }
        }
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let est_skel = est(i, j) || est(j, i);
            let tru_skel = tru(i, j) || tru(j, i);
            if est_skel && !tru_skel {
                c.e += 1;
            }
            if tru_skel && !est_skel {
                c.m += 1;
            }
            if !tru_skel {
                c.f += 1;
            }
        }
    }
    debug_assert_eq!(c.tee, c.tp + c.r + c.fp);
    Ok(c)
}

/// False discovery rate `(R + FP) / TEE`; 0 when no edge was estimated.
pub fn fdr(c: &EdgeConfusion) -> f64 {
    if c.tee == 0 {
        0.0
    } else {
        (c.r + c.fp) as f64 / c.tee as f64
    }
}

/// True positive rate `TP / T`; 0 when the truth has no edges.
pub fn tpr(c: &EdgeConfusion) -> f64 {
    if c.t == 0 {
        0.0
    } else {
        c.tp as f64 / c.t as f64
    }
}

/// False positive rate `(R + FP) / F`; 0 when the true skeleton leaves no
/// pair unconnected. The numerator counts directed edges while `F` counts
/// unordered pairs, so the ratio can exceed 1 on adversarial inputs (many
/// reversed edges, or both directions estimated across a missing pair) —
/// it is reported as defined rather than clamped.
pub fn fpr(c: &EdgeConfusion) -> f64 {
    if c.f == 0 {
        0.0
    } else {
        (c.r + c.fp) as f64 / c.f as f64
    }
}

/// Structural Hamming distance `E + M + R`: skeleton insertions plus
/// deletions plus direction flips.
pub fn shd(c: &EdgeConfusion) -> usize {
    c.e + c.m + c.r
}

/// The four recovery metrics bundled with a record of which denominators
/// were degenerate (and therefore reported as 0 by convention).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    pub confusion: EdgeConfusion,
    pub fdr: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub shd: usize,
    /// Names of metrics whose denominator was zero ("fdr", "tpr", "fpr").
    pub degenerate: Vec<String>,
}

/// Computes all four metrics at once, flagging degenerate denominators.
pub fn recovery_metrics(estimated: &WeightMatrix, truth: &WeightMatrix) -> Result<RecoveryMetrics> {
    let c = edge_confusion(estimated, truth)?;
    let mut degenerate = Vec::new();
    if c.tee == 0 {
        degenerate.push("fdr".to_string());
    }
    if c.t == 0 {
        degenerate.push("tpr".to_string());
    }
    if c.f == 0 {
        degenerate.push("fpr".to_string());
    }
    Ok(RecoveryMetrics {
        confusion: c,
        fdr: fdr(&c),
        tpr: tpr(&c),
        fpr: fpr(&c),
        shd: shd(&c),
        degenerate,
    })
}
