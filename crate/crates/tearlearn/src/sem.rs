//! Linear structural-equation training.
//!
//! Fits a weighted adjacency matrix `A` so that `X ≈ X·A` by gradient
//! descent on an augmented-Lagrangian objective: least-squares
//! reconstruction plus an L1 weight penalty plus multiplier and quadratic
//! penalty terms on a smooth acyclicity measure. The dual update runs in an
//! outer loop that grows the penalty weight whenever the acyclicity measure
//! stalls. The returned matrix is the iterate with the best plain
//! reconstruction loss — it is *not* guaranteed to be acyclic; cycle repair
//! is a separate, exact post-processing step (see the tearing modules).

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acyclicity::{self, AcyclicityMode};
use crate::error::{Error, Result};
use crate::matrix::WeightMatrix;

/// Observation matrix: `n` samples (rows) by `d` variables (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Array2<f64>,
}

impl Dataset {
    /// Wraps an observation matrix. Requires at least one row and one
    /// column and all entries finite.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, d) = values.dim();
        if n == 0 || d == 0 {
            return Err(Error::Data(format!(
                "dataset must be non-empty, got {n} samples x {d} variables"
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "dataset contains a non-finite value ({bad})"
            )));
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Data("dataset must have at least one row".into()));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Data("dataset rows have inconsistent lengths".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| Error::Data(format!("bad dataset shape: {e}")))?;
        Self::new(values)
    }

    /// Number of samples.
    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    /// Number of variables.
    pub fn n_vars(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Column means.
    pub fn means(&self) -> Array1<f64> {
        let n = self.n_samples() as f64;
        self.values.sum_axis(ndarray::Axis(0)) / n
    }

    /// Per-column z-scoring with the population standard deviation
    /// (divide by n). A constant column has zero variance and cannot be
    /// standardized; that is a data error.
    pub fn standardized(&self) -> Result<Dataset> {
        let n = self.n_samples() as f64;
        let means = self.means();
        let mut out = self.values.clone();
        for (j, mean) in means.iter().enumerate() {
            let mut col = out.column_mut(j);
            col.mapv_inplace(|v| v - mean);
            let var = col.iter().map(|v| v * v).sum::<f64>() / n;
            if var <= 0.0 {
                return Err(Error::Data(format!(
                    "column {j} is constant (zero variance); it cannot be standardized"
                )));
            }
            let sd = var.sqrt();
            col.mapv_inplace(|v| v / sd);
        }
        Ok(Dataset { values: out })
    }
}

/// Hyper-parameters shared by both trainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// L1 penalty weight on the adjacency entries.
    pub lambda: f64,
    /// Initial Lagrange-multiplier value for the acyclicity constraint.
    pub alpha0: f64,
    /// Initial quadratic penalty weight.
    pub beta0: f64,
    /// Outer loop runs while the penalty weight stays at or below this.
    pub beta_max: f64,
    /// Gradient steps per outer iteration.
    pub epochs: usize,
    /// Gradient-descent step size.
    pub learning_rate: f64,
    /// Which smooth acyclicity measure to constrain.
    pub h_mode: AcyclicityMode,
    /// Outer loop stops early once the measure drops to this level.
    pub h_tolerance: f64,
    /// Seed for weight initialization (and minibatch order, when used).
    pub seed: u64,
    /// Hard cap on outer iterations, since the penalty-growth rule alone
    /// can fail to terminate when the measure plateaus.
    pub max_outer: usize,
    /// Minibatch size; `None` uses full-batch gradients.
    pub batch_size: Option<usize>,
    /// Per-entry gradient clipping threshold; `None` disables clipping.
    pub grad_clip: Option<f64>,
    /// Scale of the uniform weight initialization.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            alpha0: 0.0,
            beta0: 1.0,
            beta_max: 1e10,
            epochs: 100,
            learning_rate: 0.01,
            h_mode: AcyclicityMode::default(),
            h_tolerance: 1e-8,
            seed: 0,
            max_outer: 40,
            batch_size: None,
            grad_clip: None,
            init_scale: 0.1,
        }
    }
}

impl TrainConfig {
    /// Rejects configurations that cannot run at all. A `beta0` above
    /// `beta_max` is allowed: the outer loop then performs zero iterations
    /// and training returns the initial matrix.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beta0", self.beta0),
            ("beta_max", self.beta_max),
            ("learning_rate", self.learning_rate),
            ("init_scale", self.init_scale),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("alpha0", self.alpha0),
            ("h_tolerance", self.h_tolerance),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidArgument(
                "max_outer must be at least 1".into(),
            ));
        }
        if let Some(b) = self.batch_size {
            if b == 0 {
                return Err(Error::InvalidArgument(
                    "batch_size must be at least 1 when set".into(),
                ));
            }
        }
        if let Some(c) = self.grad_clip {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "grad_clip must be finite and positive when set, got {c}"
                )));
            }
        }
        if let AcyclicityMode::Polynomial { gamma } = self.h_mode {
            if !(gamma.is_finite() && gamma > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "polynomial acyclicity scale must be finite and positive, got {gamma}"
                )));
            }
        }
        Ok(())
    }
}

/// The penalty weight must shrink the measure by at least this factor per
/// outer iteration, or it gets multiplied by [`PENALTY_GROWTH`].
pub const PROGRESS_RATIO: f64 = 0.25;
/// Multiplicative penalty growth applied when progress stalls.
pub const PENALTY_GROWTH: f64 = 10.0;

/// Outcome of a training run.
#[derive(Debug, Clone)]
pub struct TrainResult {
    /// Iterate with the lowest plain reconstruction loss seen on full data.
    pub a_best: WeightMatrix,
    /// That reconstruction loss.
    pub loss_best: f64,
    /// Acyclicity measure at the end of each outer iteration.
    pub h_trajectory: Vec<f64>,
    /// Multiplier value entering each outer iteration.
    pub alpha_trajectory: Vec<f64>,
    /// Penalty weight entering each outer iteration.
    pub beta_trajectory: Vec<f64>,
    /// L1 norm of the iterate at the end of each outer iteration.
    pub l1_trajectory: Vec<f64>,
    /// Acyclicity measure of `a_best`.
    pub final_h: f64,
    /// Whether the measure reached `h_tolerance`.
    pub converged: bool,
    /// Outer iterations actually run.
    pub outer_steps: usize,
}

/// Plain least-squares reconstruction loss `‖X − X·A‖²_F / (2n)`.
pub fn lsq_loss(x: ArrayView2<f64>, a: &WeightMatrix) -> f64 {
    let n = x.nrows() as f64;
    let resid = &x.to_owned() - &x.dot(a.values());
    resid.iter().map(|v| v * v).sum::<f64>() / (2.0 * n)
}

/// Gradient of [`lsq_loss`] with respect to `A`: `Xᵀ(X·A − X)/n`.
pub fn lsq_grad(x: ArrayView2<f64>, a: &WeightMatrix) -> Array2<f64> {
    let n = x.nrows() as f64;
    let resid = &x.dot(a.values()) - &x.to_owned();
    x.t().dot(&resid) / n
}

/// Full training objective: reconstruction + L1 + multiplier·h + penalty·h²/2.
pub fn augmented_loss(
    x: ArrayView2<f64>,
    a: &WeightMatrix,
    alpha: f64,
    beta: f64,
    lambda: f64,
    h_mode: AcyclicityMode,
) -> Result<f64> {
    let h = h_mode.h(a)?;
    Ok(lsq_loss(x, a) + lambda * a.l1_norm() + alpha * h + 0.5 * beta * h * h)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// One plain gradient step on the smooth part of the objective with the
/// exponential-trace measure, *without* re-zeroing the diagonal:
/// `A_next = A − lr·(lsq_grad + alpha·grad_h)`. Exposed so the algebraic
/// step identity can be checked externally.
pub fn unconstrained_step_exp(
    x: ArrayView2<f64>,
    a: &WeightMatrix,
    lr: f64,
    alpha: f64,
) -> Result<Array2<f64>> {
    let g_lsq = lsq_grad(x, a);
    let g_h = acyclicity::grad_h_exp(a)?;
    Ok(a.values() - &(lr * (&g_lsq + &(alpha * &g_h))))
}

/// Residual of the defining identity of [`unconstrained_step_exp`],
/// rearranged into a difference of Hadamard squares:
/// `A_k∘A_k − {A_next∘A_next + lr·G∘(A_next + A_k)}` where
/// `G = lsq_grad + alpha·grad_h_exp` evaluated at `A_k`. Returns the
/// largest absolute entry of that residual matrix; it is exactly zero in
/// real arithmetic when `A_next` came from the step, so a tiny value
/// certifies the pair. Errors if the recomputed step disagrees with
/// `a_next` outright (wrong pair supplied).
pub fn step_identity_residual(
    x: ArrayView2<f64>,
    a_k: &WeightMatrix,
    a_next: &Array2<f64>,
    lr: f64,
    alpha: f64,
) -> Result<f64> {
    let recomputed = unconstrained_step_exp(x, a_k, lr, alpha)?;
    let mismatch = (&recomputed - a_next)
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if mismatch > 1e-9 {
        return Err(Error::Precondition(format!(
            "a_next does not come from this step: max deviation {mismatch:.3e}"
        )));
    }
    let g_lsq = lsq_grad(x, a_k);
    let g_h = acyclicity::grad_h_exp(a_k)?;
    let g = &g_lsq + &(alpha * &g_h);
    let ak = a_k.values();
    let lhs = ak * ak;
    let rhs = &(a_next * a_next) + &(lr * &g * &(a_next + ak));
    let residual = &lhs - &rhs;
    Ok(residual.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

fn uniform_init(d: usize, scale: f64, rng: &mut ChaCha8Rng) -> WeightMatrix {
    // Draw all d² entries in row-major order so the stream consumption is
    // part of the reproducibility contract, then zero the diagonal.
    let mut m = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            let u: f64 = rng.random::<f64>();
            m[[i, j]] = scale * (2.0 * u - 1.0);
        }
    }
    WeightMatrix::with_zeroed_diagonal(m).expect("finite init")
}

fn clip_inplace(g: &mut Array2<f64>, clip: Option<f64>) {
    if let Some(c) = clip {
        g.mapv_inplace(|v| v.clamp(-c, c));
    }
}

/// Gradient of the smooth objective part at `a`:
/// reconstruction + (alpha + beta·h)·grad_h.
fn smooth_grad(
    x: ArrayView2<f64>,
    a: &WeightMatrix,
    alpha: f64,
    beta: f64,
    h_mode: AcyclicityMode,
) -> Result<Array2<f64>> {
    let h = h_mode.h(a)?;
    let gh = h_mode.grad(a)?;
    let multiplier = alpha + beta * h;
    Ok(&lsq_grad(x, a) + &(multiplier * &gh))
}

/// Trains the linear model. See the module docs for the loop structure.
pub fn train_linear(data: &Dataset, cfg: &TrainConfig) -> Result<TrainResult> {
    cfg.validate()?;
    let d = data.n_vars();
    let x_full = data.values().view();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut a = uniform_init(d, cfg.init_scale, &mut rng);

    let mut a_best = a.clone();
    let mut loss_best = lsq_loss(x_full, &a);

    let mut alpha = cfg.alpha0;
    let mut beta = cfg.beta0;
    let mut h_prev = cfg.h_mode.h(&a)?;

    let mut h_traj = Vec::new();
    let mut alpha_traj = Vec::new();
    let mut beta_traj = Vec::new();
    let mut l1_traj = Vec::new();

    let n = data.n_samples();
    let mut order: Vec<usize> = (0..n).collect();
    let mut outer = 0usize;
    let mut converged = h_prev <= cfg.h_tolerance;

    while beta <= cfg.beta_max && outer < cfg.max_outer {
        alpha_traj.push(alpha);
        beta_traj.push(beta);

        for _ in 0..cfg.epochs {
            match cfg.batch_size {
                None => {
                    let mut g = smooth_grad(x_full, &a, alpha, beta, cfg.h_mode)?;
                    clip_inplace(&mut g, cfg.grad_clip);
                    let mut next = a.values() - &(cfg.learning_rate * &g);
                    let t = cfg.learning_rate * cfg.lambda;
                    if t > 0.0 {
                        next.mapv_inplace(|v| soft_threshold(v, t));
                    }
                    a = WeightMatrix::with_zeroed_diagonal(next).map_err(|_| {
                        Error::Diverged {
                            outer,
                            epoch: 0,
                            quantity: "adjacency entries".into(),
                            h_trajectory: indexed(&h_traj),
                        }
                    })?;
                }
                Some(b) => {
                    // Shuffle sample order, then walk it in chunks.
                    for i in (1..n).rev() {
                        let j = rng.random_range(0..=i);
                        order.swap(i, j);
                    }
                    for chunk in order.chunks(b) {
                        let xb = select_rows(x_full, chunk);
                        let mut g = smooth_grad(xb.view(), &a, alpha, beta, cfg.h_mode)?;
                        clip_inplace(&mut g, cfg.grad_clip);
                        let mut next = a.values() - &(cfg.learning_rate * &g);
                        let t = cfg.learning_rate * cfg.lambda;
                        if t > 0.0 {
                            next.mapv_inplace(|v| soft_threshold(v, t));
                        }
                        a = WeightMatrix::with_zeroed_diagonal(next).map_err(|_| {
                            Error::Diverged {
                                outer,
                                epoch: 0,
                                quantity: "adjacency entries".into(),
                                h_trajectory: indexed(&h_traj),
                            }
                        })?;
                    }
                }
            }
            // Track the best iterate by plain reconstruction on full data.
            let recon = lsq_loss(x_full, &a);
            // An entry this large overflows the Hadamard square inside the
            // acyclicity measure; report it as divergence with the history.
            if !recon.is_finite() || a.max_abs() > 1e100 {
                return Err(Error::Diverged {
                    outer,
                    epoch: 0,
                    quantity: "reconstruction loss".into(),
                    h_trajectory: indexed(&h_traj),
                });
            }
            if recon < loss_best {
                loss_best = recon;
                a_best = a.clone();
            }
        }

        let h_k = cfg.h_mode.h(&a)?;
        h_traj.push(h_k);
        l1_traj.push(a.l1_norm());
        outer += 1;

        // Dual ascent on the multiplier, penalty growth on stall.
        alpha += beta * h_k;
        if h_k.abs() > PROGRESS_RATIO * h_prev.abs() {
            beta *= PENALTY_GROWTH;
        }
        h_prev = h_k;
        if h_k <= cfg.h_tolerance {
            converged = true;
            break;
        }
    }

    let final_h = cfg.h_mode.h(&a_best)?;
    Ok(TrainResult {
        a_best,
        loss_best,
        h_trajectory: h_traj,
        alpha_trajectory: alpha_traj,
        beta_trajectory: beta_traj,
        l1_trajectory: l1_traj,
        final_h,
        converged,
        outer_steps: outer,
    })
}

fn indexed(h: &[f64]) -> Vec<(usize, f64)> {
    h.iter().copied().enumerate().collect()
}

fn select_rows(x: ArrayView2<f64>, rows: &[usize]) -> Array2<f64> {
    let d = x.ncols();
    let mut out = Array2::zeros((rows.len(), d));
    for (k, &r) in rows.iter().enumerate() {
        out.row_mut(k).assign(&x.row(r));
    }
    out
}
