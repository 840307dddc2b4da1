//! Synthetic ground truth and data.
//!
//! Ground-truth graphs are strictly upper-triangular weight matrices
//! (acyclic by construction) with entry `(i, j)` meaning an edge `i → j`.
//! Data comes from a nonlinear recursive model: each variable is
//! `tanh(s) + cos(s) + sin(s) + z` where `s` is the weighted sum of its
//! parents and `z` is Gaussian noise, generated causally in variable order.
//! Root variables get `1 + z` (the three nonlinearities of zero sum to 1).

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph;
use crate::matrix::WeightMatrix;
use crate::prior::{Prior, PriorSpec};
use crate::sem::Dataset;

/// A known-acyclic generating graph plus the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    w: WeightMatrix,
    dag_support: Array2<u8>,
    seed: u64,
}

impl GroundTruth {
    /// Wraps a strictly upper-triangular weight matrix.
    pub fn new(w: WeightMatrix, seed: u64) -> Result<Self> {
        let d = w.dim();
        for i in 0..d {
            for j in 0..=i {
                if w.get(i, j) != 0.0 {
                    return Err(Error::Precondition(format!(
                        "ground-truth weights must be strictly upper-triangular; \
                         entry ({i},{j}) = {}",
                        w.get(i, j)
                    )));
                }
            }
        }
        let mut support = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                if w.get(i, j) != 0.0 {
                    support[[i, j]] = 1;
                }
            }
        }
        Ok(Self {
            w,
            dag_support: support,
            seed,
        })
    }

    pub fn w(&self) -> &WeightMatrix {
        &self.w
    }

    /// 0/1 edge indicator matrix.
    pub fn dag_support(&self) -> &Array2<u8> {
        &self.dag_support
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.w.dim()
    }
}

/// Draws a random strictly upper-triangular graph. Every slot `i < j` is
/// filled independently with probability `edge_prob`; present edges get a
/// magnitude uniform in `weight_range` (which must stay away from zero so
/// no true edge is unlearnably faint) with a random sign.
pub fn random_triangular_w(
    d: usize,
    edge_prob: f64,
    weight_range: (f64, f64),
    seed: u64,
) -> Result<GroundTruth> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&edge_prob) || !edge_prob.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "edge_prob must lie in [0, 1], got {edge_prob}"
        )));
    }
    let (lo, hi) = weight_range;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidArgument(format!(
            "weight_range must satisfy 0 < lo <= hi, got ({lo}, {hi})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Array2::zeros((d, d));
    for i in 0..d {
        for j in (i + 1)..d {
            let present: f64 = rng.random();
            if present < edge_prob {
                let mag = lo + (hi - lo) * rng.random::<f64>();
                let sign = if rng.random::<f64>() < 0.5 { -1.0 } else { 1.0 };
                m[[i, j]] = sign * mag;
            }
        }
    }
    let w = WeightMatrix::new(m)?;
    GroundTruth::new(w, seed)
}

/// Nonlinear recursive sampling, scaling the noise by `noise_scale`
/// (`0.0` is the deterministic testing hook). Noise is drawn per variable
/// then per sample, in generation order.
pub fn sample_nonlinear_scaled(
    truth: &GroundTruth,
    n: usize,
    noise_seed: u64,
    noise_scale: f64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(noise_scale.is_finite() && noise_scale >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise_scale must be finite and non-negative, got {noise_scale}"
        )));
    }
    let w = truth.w();
    let streams = graph::nonzero_streams(w, None);
    if !graph::is_acyclic(&streams, w.dim()) {
        return Err(Error::Precondition(
            "generating weights must describe an acyclic graph".into(),
        ));
    }
    let d = w.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let mut x = Array2::<f64>::zeros((n, d));
    for j in 0..d {
        for r in 0..n {
            let mut s = 0.0;
            for i in 0..d {
                s += x[[r, i]] * w.get(i, j);
            }
            let z: f64 = rng.sample(StandardNormal);
            x[[r, j]] = s.tanh() + s.cos() + s.sin() + noise_scale * z;
        }
    }
    Dataset::new(x)
}

/// Nonlinear recursive sampling with unit-variance Gaussian noise.
pub fn sample_nonlinear(truth: &GroundTruth, n: usize, noise_seed: u64) -> Result<Dataset> {
    sample_nonlinear_scaled(truth, n, noise_seed, 1.0)
}

/// Prior for the ordered-variables setting: every edge pointing from a
/// later variable to an earlier one is forbidden, everything above the
/// diagonal is unconstrained.
pub fn prior_lower_triangular(d: usize) -> Result<PriorSpec> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "the triangular prior needs at least 2 variables, got {d}"
        )));
    }
    let mut spec = PriorSpec::all_unknown(d)?;
    for i in 0..d {
        for j in 0..i {
            spec.set(i, j, Prior::Forbidden)?;
        }
    }
    Ok(spec)
}
