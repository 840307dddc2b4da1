//! Nonlinear structure learning with a variational autoencoder whose
//! encoder and decoder are coupled through the adjacency matrix.
//!
//! Each variable owns one scalar input row; a shared two-layer MLP maps it
//! to a latent mean and log-standard-deviation, mixed across variables by
//! `(I − Aᵀ)`. Decoding inverts that mixing with a linear solve and maps
//! latents back to per-variable mean and log-standard-deviation. The
//! training objective is the usual evidence lower bound (KL to a standard
//! normal prior plus Gaussian reconstruction), optimized under the same
//! augmented-Lagrangian acyclicity scheme as the linear trainer, with the
//! polynomial acyclicity measure.
//!
//! All gradients are computed by hand-written reverse-mode accumulation:
//! the chain rule through matrix products, ReLU (subgradient 0 at 0), and
//! the linear solve (adjoint solve with the transposed system).

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::acyclicity::AcyclicityMode;
use crate::error::{Error, Result};
use crate::linalg::{self, LuFactors};
use crate::matrix::WeightMatrix;
use crate::sem::{Dataset, TrainConfig, TrainResult, PENALTY_GROWTH, PROGRESS_RATIO};

/// Standard deviations are floored here to keep the reconstruction
/// density's division by the variance finite.
pub const STD_FLOOR: f64 = 1e-6;

/// The mixing matrix `I − Aᵀ` must keep its smallest singular value above
/// this before decoding is attempted.
pub const MIN_SINGULAR: f64 = 1e-8;

/// A two-layer perceptron `x ↦ ReLU(x·W1ᵀ + b1)·W2ᵀ + b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// hidden × in.
    pub w1: Array2<f64>,
    /// hidden.
    pub b1: Array1<f64>,
    /// out × hidden.
    pub w2: Array2<f64>,
    /// out.
    pub b2: Array1<f64>,
}

impl MlpParams {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            w1: Array2::zeros((hidden, input)),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((output, hidden)),
            b2: Array1::zeros(output),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w1.nrows() != self.b1.len() {
            return Err(Error::Precondition(format!(
                "first-layer bias length {} does not match hidden size {}",
                self.b1.len(),
                self.w1.nrows()
            )));
        }
        if self.w2.ncols() != self.w1.nrows() {
            return Err(Error::Precondition(format!(
                "second-layer input width {} does not match hidden size {}",
                self.w2.ncols(),
                self.w1.nrows()
            )));
        }
        if self.w2.nrows() != self.b2.len() {
            return Err(Error::Precondition(format!(
                "second-layer bias length {} does not match output size {}",
                self.b2.len(),
                self.w2.nrows()
            )));
        }
        let finite = self.w1.iter().all(|v| v.is_finite())
            && self.b1.iter().all(|v| v.is_finite())
            && self.w2.iter().all(|v| v.is_finite())
            && self.b2.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Precondition("non-finite MLP parameter".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.nrows()
    }
}

/// Forward pass of the two-layer MLP; rows of `x` are independent inputs,
/// biases broadcast over rows.
pub fn mlp_forward(p: &MlpParams, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    p.validate()?;
    if x.ncols() != p.input_dim() {
        return Err(Error::Precondition(format!(
            "MLP expects {} input columns, got {}",
            p.input_dim(),
            x.ncols()
        )));
    }
    let pre = x.dot(&p.w1.t()) + &p.b1;
    let hidden = pre.mapv(|v| v.max(0.0));
    Ok(hidden.dot(&p.w2.t()) + &p.b2)
}

/// Architecture knobs for the variational model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GnnArch {
    /// Latent dimension per variable.
    pub latent_dim: usize,
    /// Hidden width of both MLPs.
    pub hidden: usize,
    /// Monte-Carlo samples per objective evaluation.
    pub sample_count: usize,
}

impl Default for GnnArch {
    fn default() -> Self {
        Self {
            latent_dim: 1,
            hidden: 16,
            sample_count: 1,
        }
    }
}

impl GnnArch {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.hidden == 0 || self.sample_count == 0 {
            return Err(Error::InvalidArgument(
                "latent_dim, hidden, and sample_count must all be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// The full model: adjacency plus the two shared per-variable MLPs.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    pub a: WeightMatrix,
    pub encoder: MlpParams,
    pub decoder: MlpParams,
    pub latent_dim: usize,
    pub sample_count: usize,
}

impl GnnModel {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.decoder.validate()?;
        let m = self.latent_dim;
        if self.latent_dim == 0 || self.sample_count == 0 {
            return Err(Error::Precondition(
                "latent_dim and sample_count must be at least 1".into(),
            ));
        }
        if self.encoder.input_dim() != 1 {
            return Err(Error::Precondition(format!(
                "encoder takes one scalar per variable, got input width {}",
                self.encoder.input_dim()
            )));
        }
        if self.encoder.output_dim() != 2 * m {
            return Err(Error::Precondition(format!(
                "encoder output width must be 2·latent_dim = {}, got {}",
                2 * m,
                self.encoder.output_dim()
            )));
        }
        if self.decoder.input_dim() != m {
            return Err(Error::Precondition(format!(
                "decoder input width must equal latent_dim = {m}, got {}",
                self.decoder.input_dim()
            )));
        }
        if self.decoder.output_dim() != 2 {
            return Err(Error::Precondition(format!(
                "decoder emits mean and log-std per variable (width 2), got {}",
                self.decoder.output_dim()
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// The mixing matrix `I − Aᵀ`.
    pub fn mixing(&self) -> Array2<f64> {
        let d = self.dim();
        let mut g = Array2::eye(d);
        g -= &self.a.values().t();
        g
    }
}

// ---------------------------------------------------------------------------
// Layout helpers. Per-variable quantities live in a "tall" layout with one
// row per (sample, variable) pair — row i·d + j is variable j of sample i —
// so both MLPs run as two big matrix products. Mixing by (I − Aᵀ) happens
// in a "wide" layout, d rows by n·k columns with sample blocks side by
// side, so all per-sample products and solves are single d-row operations.
// ---------------------------------------------------------------------------

fn tall_to_wide(t: ArrayView2<f64>, n: usize, d: usize) -> Array2<f64> {
    let k = t.ncols();
    let mut w = Array2::zeros((d, n * k));
    for i in 0..n {
        for j in 0..d {
            for c in 0..k {
                w[[j, i * k + c]] = t[[i * d + j, c]];
            }
        }
    }
    w
}

fn wide_to_tall(w: ArrayView2<f64>, n: usize, d: usize) -> Array2<f64> {
    let k = w.ncols() / n;
    let mut t = Array2::zeros((n * d, k));
    for i in 0..n {
        for j in 0..d {
            for c in 0..k {
                t[[i * d + j, c]] = w[[j, i * k + c]];
            }
        }
    }
    t
}

fn to_tall_input(x: &Array2<f64>) -> Array2<f64> {
    let (n, d) = x.dim();
    let mut t = Array2::zeros((n * d, 1));
    for i in 0..n {
        for j in 0..d {
            t[[i * d + j, 0]] = x[[i, j]];
        }
    }
    t
}

/// Floored standard deviation and the derivative factor d(std)/d(log-std)
/// (zero where the floor is active).
fn floor_std(log_s: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let mut s = Array2::zeros(log_s.raw_dim());
    let mut dfac = Array2::zeros(log_s.raw_dim());
    for ((sv, dv), &ls) in s.iter_mut().zip(dfac.iter_mut()).zip(log_s.iter()) {
        let raw = ls.exp();
        if raw < STD_FLOOR {
            *sv = STD_FLOOR;
            *dv = 0.0;
        } else {
            *sv = raw;
            *dv = raw;
        }
    }
    (s, dfac)
}

/// Encodes a dataset: `(I − Aᵀ)·MLP(X)` per sample, split into the latent
/// mean and log-standard-deviation halves (each n·d rows by latent_dim).
pub fn encode(model: &GnnModel, x: &Dataset) -> Result<(Array2<f64>, Array2<f64>)> {
    model.validate()?;
    if x.n_vars() != model.dim() {
        return Err(Error::Precondition(format!(
            "dataset has {} variables, model expects {}",
            x.n_vars(),
            model.dim()
        )));
    }
    let (n, d) = (x.n_samples(), x.n_vars());
    let m = model.latent_dim;
    let x_tall = to_tall_input(x.values());
    let o = mlp_forward(&model.encoder, x_tall.view())?;
    let o_wide = tall_to_wide(o.view(), n, d);
    let e_wide = model.mixing().dot(&o_wide);
    let e = wide_to_tall(e_wide.view(), n, d);
    let m_z = e.slice(ndarray::s![.., 0..m]).to_owned();
    let log_s = e.slice(ndarray::s![.., m..2 * m]).to_owned();
    Ok((m_z, log_s))
}

/// Decodes latents (n·d rows by latent_dim): solves `(I − Aᵀ)·V = Z` per
/// sample, then maps each variable's latent row through the decoder MLP.
/// Returns per-variable mean and log-standard-deviation columns stacked as
/// n·d-length vectors.
pub fn decode(model: &GnnModel, z: ArrayView2<f64>, n: usize) -> Result<(Array1<f64>, Array1<f64>)> {
    model.validate()?;
    let d = model.dim();
    if z.nrows() != n * d || z.ncols() != model.latent_dim {
        return Err(Error::Precondition(format!(
            "latents must be (n·d)x{} = {}x{}, got {}x{}",
            model.latent_dim,
            n * d,
            model.latent_dim,
            z.nrows(),
            z.ncols()
        )));
    }
    let g = model.mixing();
    let sigma_min = linalg::smallest_singular_value(g.view());
    if sigma_min <= MIN_SINGULAR {
        return Err(Error::SingularSystem { sigma_min });
    }
    let lu = linalg::lu_factor(g.view())?;
    let z_wide = tall_to_wide(z, n, d);
    let v_wide = lu.solve_mat(z_wide.view());
    let v = wide_to_tall(v_wide.view(), n, d);
    let o = mlp_forward(&model.decoder, v.view())?;
    Ok((o.column(0).to_owned(), o.column(1).to_owned()))
}

/// Per-element KL summand against a standard normal:
/// `½(s² + m² − 2·ln s − 1)`, summed.
fn kl_term(m: &Array2<f64>, s: &Array2<f64>) -> f64 {
    m.iter()
        .zip(s.iter())
        .map(|(&mv, &sv)| 0.5 * (sv * sv + mv * mv - 2.0 * sv.ln() - 1.0))
        .sum()
}

/// Gaussian negative log-density summand (constant dropped):
/// `(x − μ)²/(2σ²) + ln σ`, summed.
fn recon_term(x: &Array1<f64>, mean: &Array1<f64>, std: &Array1<f64>) -> f64 {
    x.iter()
        .zip(mean.iter())
        .zip(std.iter())
        .map(|((&xv, &mv), &sv)| {
            let r = xv - mv;
            r * r / (2.0 * sv * sv) + sv.ln()
        })
        .sum()
}

/// Draws the reparameterization noise for one objective evaluation:
/// `sample_count` matrices of standard normals, each (n·d) × latent_dim,
/// filled row-major.
pub fn draw_noise<R: Rng>(
    n: usize,
    d: usize,
    latent_dim: usize,
    sample_count: usize,
    rng: &mut R,
) -> Vec<Array2<f64>> {
    (0..sample_count)
        .map(|_| {
            let mut e = Array2::zeros((n * d, latent_dim));
            for v in e.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            e
        })
        .collect()
}

struct ForwardPass {
    x_tall: Array2<f64>,
    // Encoder intermediates.
    pre_e: Array2<f64>,
    h_e: Array2<f64>,
    o_e: Array2<f64>,
    m_z: Array2<f64>,
    s_z: Array2<f64>,
    dfac_z: Array2<f64>,
    // Mixing.
    lu: LuFactors,
    // Per Monte-Carlo sample.
    per_sample: Vec<McSample>,
    kl: f64,
    recon_mean: f64,
}

struct McSample {
    z: Array2<f64>,
    v: Array2<f64>,
    pre_d: Array2<f64>,
    h_d: Array2<f64>,
    m_x: Array1<f64>,
    s_x: Array1<f64>,
    dfac_x: Array1<f64>,
}

fn forward(model: &GnnModel, x: &Dataset, noise: &[Array2<f64>]) -> Result<ForwardPass> {
    model.validate()?;
    let (n, d) = (x.n_samples(), x.n_vars());
    let m = model.latent_dim;
    if x.n_vars() != model.dim() {
        return Err(Error::Precondition(format!(
            "dataset has {} variables, model expects {}",
            x.n_vars(),
            model.dim()
        )));
    }
    if noise.len() != model.sample_count {
        return Err(Error::Precondition(format!(
            "need {} noise draws, got {}",
            model.sample_count,
            noise.len()
        )));
    }
    for (idx, e) in noise.iter().enumerate() {
        if e.dim() != (n * d, m) {
            return Err(Error::Precondition(format!(
                "noise draw {idx} must be {}x{m}, got {}x{}",
                n * d,
                e.nrows(),
                e.ncols()
            )));
        }
    }

    let x_tall = to_tall_input(x.values());
    let pre_e = x_tall.dot(&model.encoder.w1.t()) + &model.encoder.b1;
    let h_e = pre_e.mapv(|v| v.max(0.0));
    let o_e = h_e.dot(&model.encoder.w2.t()) + &model.encoder.b2;

    let g = model.mixing();
    let sigma_min = linalg::smallest_singular_value(g.view());
    if sigma_min <= MIN_SINGULAR {
        return Err(Error::SingularSystem { sigma_min });
    }
    let lu = linalg::lu_factor(g.view())?;

    let o_wide = tall_to_wide(o_e.view(), n, d);
    let e_wide = g.dot(&o_wide);
    let e_tall = wide_to_tall(e_wide.view(), n, d);
    let m_z = e_tall.slice(ndarray::s![.., 0..m]).to_owned();
    let log_s_z = e_tall.slice(ndarray::s![.., m..2 * m]).to_owned();
    let (s_z, dfac_z) = floor_std(&log_s_z);

    let kl = kl_term(&m_z, &s_z);

    let x_col = x_tall.column(0).to_owned();
    let mut per_sample = Vec::with_capacity(noise.len());
    let mut recon_sum = 0.0;
    for eps in noise {
        let z = &m_z + &(&s_z * eps);
        let z_wide = tall_to_wide(z.view(), n, d);
        let v_wide = lu.solve_mat(z_wide.view());
        let v = wide_to_tall(v_wide.view(), n, d);
        let pre_d = v.dot(&model.decoder.w1.t()) + &model.decoder.b1;
        let h_d = pre_d.mapv(|p| p.max(0.0));
        let o_d = h_d.dot(&model.decoder.w2.t()) + &model.decoder.b2;
        let m_x = o_d.column(0).to_owned();
        let log_s_x = o_d.column(1).to_owned();
        let log_s_x2 = log_s_x.clone().insert_axis(Axis(1));
        let (s_x2, dfac_x2) = floor_std(&log_s_x2);
        let s_x = s_x2.remove_axis(Axis(1));
        let dfac_x = dfac_x2.remove_axis(Axis(1));
        recon_sum += recon_term(&x_col, &m_x, &s_x);
        per_sample.push(McSample {
            z,
            v,
            pre_d,
            h_d,
            m_x,
            s_x,
            dfac_x,
        });
    }
    let recon_mean = recon_sum / noise.len() as f64;
    Ok(ForwardPass {
        x_tall,
        pre_e,
        h_e,
        o_e,
        m_z,
        s_z,
        dfac_z,
        lu,
        per_sample,
        kl,
        recon_mean,
    })
}

/// KL and mean reconstruction components of the objective.
pub fn elbo_components(
    model: &GnnModel,
    x: &Dataset,
    noise: &[Array2<f64>],
) -> Result<(f64, f64)> {
    let f = forward(model, x, noise)?;
    if !f.kl.is_finite() || !f.recon_mean.is_finite() {
        return Err(Error::NonFiniteLoss {
            kl: f.kl,
            recon: f.recon_mean,
        });
    }
    Ok((f.kl, f.recon_mean))
}

/// The variational objective: KL + averaged reconstruction, totalled over
/// the dataset.
pub fn elbo_loss(model: &GnnModel, x: &Dataset, noise: &[Array2<f64>]) -> Result<f64> {
    let (kl, recon) = elbo_components(model, x, noise)?;
    Ok(kl + recon)
}

/// Gradient of the variational objective with respect to every
/// parameter group (adjacency, encoder, decoder).
#[derive(Debug, Clone)]
pub struct GnnGrads {
    pub a: Array2<f64>,
    pub enc_w1: Array2<f64>,
    pub enc_b1: Array1<f64>,
    pub enc_w2: Array2<f64>,
    pub enc_b2: Array1<f64>,
    pub dec_w1: Array2<f64>,
    pub dec_b1: Array1<f64>,
    pub dec_w2: Array2<f64>,
    pub dec_b2: Array1<f64>,
}

impl GnnGrads {
    fn zeros_like(model: &GnnModel) -> Self {
        Self {
            a: Array2::zeros((model.dim(), model.dim())),
            enc_w1: Array2::zeros(model.encoder.w1.raw_dim()),
            enc_b1: Array1::zeros(model.encoder.b1.len()),
            enc_w2: Array2::zeros(model.encoder.w2.raw_dim()),
            enc_b2: Array1::zeros(model.encoder.b2.len()),
            dec_w1: Array2::zeros(model.decoder.w1.raw_dim()),
            dec_b1: Array1::zeros(model.decoder.b1.len()),
            dec_w2: Array2::zeros(model.decoder.w2.raw_dim()),
            dec_b2: Array1::zeros(model.decoder.b2.len()),
        }
    }

    fn clip(&mut self, clip: Option<f64>) {
        if let Some(c) = clip {
            for arr in [
                &mut self.a,
                &mut self.enc_w1,
                &mut self.enc_w2,
                &mut self.dec_w1,
                &mut self.dec_w2,
            ] {
                arr.mapv_inplace(|v| v.clamp(-c, c));
            }
            for arr in [
                &mut self.enc_b1,
                &mut self.enc_b2,
                &mut self.dec_b1,
                &mut self.dec_b2,
            ] {
                arr.mapv_inplace(|v| v.clamp(-c, c));
            }
        }
    }
}

/// Objective value plus gradients for every parameter group, by
/// reverse-mode accumulation through the stored forward pass.
pub fn elbo_gradients(
    model: &GnnModel,
    x: &Dataset,
    noise: &[Array2<f64>],
) -> Result<(f64, GnnGrads)> {
    let f = forward(model, x, noise)?;
    if !f.kl.is_finite() || !f.recon_mean.is_finite() {
        return Err(Error::NonFiniteLoss {
            kl: f.kl,
            recon: f.recon_mean,
        });
    }
    let (n, d) = (x.n_samples(), x.n_vars());
    let l = noise.len() as f64;
    let mut g = GnnGrads::zeros_like(model);
    let mut dg = Array2::<f64>::zeros((d, d)); // gradient w.r.t. the mixing matrix

    let mut d_m_z = Array2::<f64>::zeros(f.m_z.raw_dim());
    let mut d_s_z = Array2::<f64>::zeros(f.s_z.raw_dim());

    let x_col = f.x_tall.column(0);
    for (mc, eps) in f.per_sample.iter().zip(noise.iter()) {
        // Reconstruction backward: (x−μ)²/(2σ²) + ln σ, upstream weight 1/L.
        let r = &mc.m_x - &x_col; // μ − x
        let inv_s2 = mc.s_x.mapv(|s| 1.0 / (s * s));
        let d_m_x = (&r * &inv_s2) / l;
        // d/dσ = −(x−μ)²/σ³ + 1/σ, chained through the floor.
        let d_log_s_x: Array1<f64> = r
            .iter()
            .zip(mc.s_x.iter())
            .zip(mc.dfac_x.iter())
            .map(|((&rv, &sv), &df)| ((-rv * rv) / (sv * sv * sv) + 1.0 / sv) / l * df)
            .collect();
        // Decoder output gradient, columns [mean | log-std].
        let mut d_o_d = Array2::<f64>::zeros((n * d, 2));
        d_o_d.column_mut(0).assign(&d_m_x);
        d_o_d.column_mut(1).assign(&d_log_s_x);
        // Decoder MLP backward.
        g.dec_w2 += &d_o_d.t().dot(&mc.h_d);
        g.dec_b2 += &d_o_d.sum_axis(Axis(0));
        let d_h_d = d_o_d.dot(&model.decoder.w2);
        let relu_mask_d = mc.pre_d.mapv(|p| if p > 0.0 { 1.0 } else { 0.0 });
        let d_pre_d = &d_h_d * &relu_mask_d;
        g.dec_w1 += &d_pre_d.t().dot(&mc.v);
        g.dec_b1 += &d_pre_d.sum_axis(Axis(0));
        let d_v = d_pre_d.dot(&model.decoder.w1);
        // Solve adjoint: V = G⁻¹Z ⟹ dZ = G⁻ᵀ·dV and dG −= dZ·Vᵀ.
        let d_v_wide = tall_to_wide(d_v.view(), n, d);
        let d_z_wide = f.lu.solve_transpose_mat(d_v_wide.view());
        let v_wide = tall_to_wide(mc.v.view(), n, d);
        dg -= &d_z_wide.dot(&v_wide.t());
        let d_z = wide_to_tall(d_z_wide.view(), n, d);
        // Reparameterization: Z = M_Z + S_Z∘ε.
        d_m_z += &d_z;
        d_s_z += &(&d_z * eps);
        let _ = &mc.z;
    }

    // KL backward: ½(s² + m² − 2 ln s − 1).
    d_m_z += &f.m_z;
    let kl_ds = f.s_z.mapv(|s| s - 1.0 / s);
    d_s_z += &kl_ds;
    let d_log_s_z = &d_s_z * &f.dfac_z;

    // Assemble the gradient of the encoder's mixed output [M_Z | log S_Z].
    let m = model.latent_dim;
    let mut d_e = Array2::<f64>::zeros((n * d, 2 * m));
    d_e.slice_mut(ndarray::s![.., 0..m]).assign(&d_m_z);
    d_e.slice_mut(ndarray::s![.., m..2 * m]).assign(&d_log_s_z);

    // E = G·O per sample: dO = Gᵀ·dE and dG += dE·Oᵀ.
    let d_e_wide = tall_to_wide(d_e.view(), n, d);
    let o_e_wide = tall_to_wide(f.o_e.view(), n, d);
    dg += &d_e_wide.dot(&o_e_wide.t());
    let g_mix = model.mixing();
    let d_o_e_wide = g_mix.t().dot(&d_e_wide);
    let d_o_e = wide_to_tall(d_o_e_wide.view(), n, d);

    // Encoder MLP backward.
    g.enc_w2 += &d_o_e.t().dot(&f.h_e);
    g.enc_b2 += &d_o_e.sum_axis(Axis(0));
    let d_h_e = d_o_e.dot(&model.encoder.w2);
    let relu_mask_e = f.pre_e.mapv(|p| if p > 0.0 { 1.0 } else { 0.0 });
    let d_pre_e = &d_h_e * &relu_mask_e;
    g.enc_w1 += &d_pre_e.t().dot(&f.x_tall);
    g.enc_b1 += &d_pre_e.sum_axis(Axis(0));

    // G = I − Aᵀ ⟹ dA = −dGᵀ.
    g.a = -dg.t().to_owned();
    // The diagonal of A is structurally zero and never updated.
    for i in 0..d {
        g.a[[i, i]] = 0.0;
    }

    Ok((f.kl + f.recon_mean, g))
}

/// Deterministic mean-path reconstruction loss `‖X − μ_X(Z = M_Z)‖²_F/(2n)`
/// — the noise-free analogue of the linear trainer's loss, used to track
/// the best iterate on a comparable scale.
pub fn mean_path_recon(model: &GnnModel, x: &Dataset) -> Result<f64> {
    let (m_z, _) = encode(model, x)?;
    let (m_x, _) = decode(model, m_z.view(), x.n_samples())?;
    let x_tall = to_tall_input(x.values());
    let n = x.n_samples() as f64;
    let diff = &x_tall.column(0).to_owned() - &m_x;
    Ok(diff.iter().map(|v| v * v).sum::<f64>() / (2.0 * n))
}

fn uniform_pm<R: Rng>(rng: &mut R, scale: f64) -> f64 {
    scale * (2.0 * rng.random::<f64>() - 1.0)
}

fn init_mlp<R: Rng>(input: usize, hidden: usize, output: usize, rng: &mut R) -> MlpParams {
    let mut p = MlpParams::zeros(input, hidden, output);
    let s1 = 1.0 / (input as f64).sqrt();
    for v in p.w1.iter_mut() {
        *v = uniform_pm(rng, s1);
    }
    let s2 = 1.0 / (hidden as f64).sqrt();
    for v in p.w2.iter_mut() {
        *v = uniform_pm(rng, s2);
    }
    p
}

/// Builds a freshly initialized model: adjacency entries uniform in
/// `±init_scale` (diagonal zeroed), network weights uniform in
/// `±1/√fan_in`, biases zero.
pub fn init_model(d: usize, arch: &GnnArch, init_scale: f64, rng: &mut ChaCha8Rng) -> GnnModel {
    let mut a = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            let v = uniform_pm(rng, init_scale);
            a[[i, j]] = v;
        }
    }
    let a = WeightMatrix::with_zeroed_diagonal(a).expect("finite init");
    let encoder = init_mlp(1, arch.hidden, 2 * arch.latent_dim, rng);
    let decoder = init_mlp(arch.latent_dim, arch.hidden, 2, rng);
    GnnModel {
        a,
        encoder,
        decoder,
        latent_dim: arch.latent_dim,
        sample_count: arch.sample_count,
    }
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

/// Applies one gradient step to every parameter group. Returns `None` when
/// the candidate must be rejected: a non-finite entry, or a mixing matrix
/// within [`MIN_SINGULAR`] of singular.
pub(crate) fn apply_step(
    model: &GnnModel,
    grads: &GnnGrads,
    lr: f64,
    lambda: f64,
) -> Option<GnnModel> {
    let mut a_next = model.a.values() - &(lr * &grads.a);
    let t = lr * lambda;
    if t > 0.0 {
        a_next.mapv_inplace(|v| soft_threshold(v, t));
    }
    let a_next = WeightMatrix::with_zeroed_diagonal(a_next).ok()?;
    let candidate = GnnModel {
        a: a_next,
        encoder: MlpParams {
            w1: &model.encoder.w1 - &(lr * &grads.enc_w1),
            b1: &model.encoder.b1 - &(lr * &grads.enc_b1),
            w2: &model.encoder.w2 - &(lr * &grads.enc_w2),
            b2: &model.encoder.b2 - &(lr * &grads.enc_b2),
        },
        decoder: MlpParams {
            w1: &model.decoder.w1 - &(lr * &grads.dec_w1),
            b1: &model.decoder.b1 - &(lr * &grads.dec_b1),
            w2: &model.decoder.w2 - &(lr * &grads.dec_w2),
            b2: &model.decoder.b2 - &(lr * &grads.dec_b2),
        },
        latent_dim: model.latent_dim,
        sample_count: model.sample_count,
    };
    if candidate.validate().is_err() {
        return None;
    }
    let sigma_min = linalg::smallest_singular_value(candidate.mixing().view());
    if sigma_min <= MIN_SINGULAR {
        return None;
    }
    Some(candidate)
}

/// Maximum step-size halvings when a candidate step is rejected.
const MAX_HALVINGS: u32 = 60;

/// Trains the variational model and also returns it (for checkpointing).
pub fn train_daggnn_full(
    x: &Dataset,
    cfg: &TrainConfig,
    arch: &GnnArch,
) -> Result<(TrainResult, GnnModel)> {
    cfg.validate()?;
    arch.validate()?;
    let d = x.n_vars();
    let n = x.n_samples();
    // This trainer always constrains the polynomial measure; an explicit
    // polynomial mode keeps its scale, otherwise the scale defaults to 1/d.
    let h_mode = match cfg.h_mode {
        AcyclicityMode::Polynomial { gamma } => AcyclicityMode::Polynomial { gamma },
        AcyclicityMode::ExpTrace => AcyclicityMode::Polynomial {
            gamma: 1.0 / d as f64,
        },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = init_model(d, arch, cfg.init_scale, &mut rng);

    let mut loss_best = mean_path_recon(&model, x)?;
    let mut best_model = model.clone();

    let mut alpha = cfg.alpha0;
    let mut beta = cfg.beta0;
    let mut h_prev = h_mode.h(&model.a)?;

    let mut h_traj = Vec::new();
    let mut alpha_traj = Vec::new();
    let mut beta_traj = Vec::new();
    let mut l1_traj = Vec::new();

    let mut order: Vec<usize> = (0..n).collect();
    let mut outer = 0usize;
    let mut converged = h_prev <= cfg.h_tolerance;

    while beta <= cfg.beta_max && outer < cfg.max_outer {
        alpha_traj.push(alpha);
        beta_traj.push(beta);

        for _ in 0..cfg.epochs {
            match cfg.batch_size {
                None => {
                    let noise = draw_noise(n, d, arch.latent_dim, arch.sample_count, &mut rng);
                    step_once(&mut model, x, &noise, cfg, h_mode, alpha, beta, outer, &h_traj)?;
                }
                Some(b) => {
                    for i in (1..n).rev() {
                        let j = rng.random_range(0..=i);
                        order.swap(i, j);
                    }
                    for chunk in order.chunks(b) {
                        let xb = select_rows(x.values().view(), chunk);
                        let xb = Dataset::new(xb)?;
                        let noise = draw_noise(
                            chunk.len(),
                            d,
                            arch.latent_dim,
                            arch.sample_count,
                            &mut rng,
                        );
                        step_once(
                            &mut model, &xb, &noise, cfg, h_mode, alpha, beta, outer, &h_traj,
                        )?;
                    }
                }
            }
            let recon = mean_path_recon(&model, x)?;
            if !recon.is_finite() {
                return Err(Error::Diverged {
                    outer,
                    epoch: 0,
                    quantity: "mean-path reconstruction".into(),
                    h_trajectory: h_traj.iter().copied().enumerate().collect(),
                });
            }
            if recon < loss_best {
                loss_best = recon;
                best_model = model.clone();
            }
        }

        let h_k = h_mode.h(&model.a)?;
        h_traj.push(h_k);
        l1_traj.push(model.a.l1_norm());
        outer += 1;

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

    let final_h = h_mode.h(&best_model.a)?;
    let result = TrainResult {
        a_best: best_model.a.clone(),
        loss_best,
        h_trajectory: h_traj,
        alpha_trajectory: alpha_traj,
        beta_trajectory: beta_traj,
        l1_trajectory: l1_traj,
        final_h,
        converged,
        outer_steps: outer,
    };
    Ok((result, best_model))
}

/// Trains the variational model; see [`train_daggnn_full`] to also keep
/// the trained network.
pub fn train_daggnn(x: &Dataset, cfg: &TrainConfig, arch: &GnnArch) -> Result<TrainResult> {
    train_daggnn_full(x, cfg, arch).map(|(r, _)| r)
}

#[allow(clippy::too_many_arguments)]
fn step_once(
    model: &mut GnnModel,
    x: &Dataset,
    noise: &[Array2<f64>],
    cfg: &TrainConfig,
    h_mode: AcyclicityMode,
    alpha: f64,
    beta: f64,
    outer: usize,
    h_traj: &[f64],
) -> Result<()> {
    let (_, mut grads) = elbo_gradients(model, x, noise)?;
    // Constraint terms: (α + β·h)·∇h added to the adjacency gradient.
    let h = h_mode.h(&model.a)?;
    let gh = h_mode.grad(&model.a)?;
    grads.a += &((alpha + beta * h) * &gh);
    grads.clip(cfg.grad_clip);

    let mut lr = cfg.learning_rate;
    for _ in 0..=MAX_HALVINGS {
        if let Some(next) = apply_step(model, &grads, lr, cfg.lambda) {
            *model = next;
            return Ok(());
        }
        lr *= 0.5;
    }
    // Step rejected even at a vanishing size: the mixing matrix is pinned
    // near singular. Report divergence with the history so far.
    Err(Error::Diverged {
        outer,
        epoch: 0,
        quantity: "step size (mixing matrix near singular)".into(),
        h_trajectory: h_traj.iter().copied().enumerate().collect(),
    })
}

fn select_rows(x: ArrayView2<f64>, rows: &[usize]) -> Array2<f64> {
    let d = x.ncols();
    let mut out = Array2::zeros((rows.len(), d));
    for (k, &r) in rows.iter().enumerate() {
        out.row_mut(k).assign(&x.row(r));
    }
    out
}
