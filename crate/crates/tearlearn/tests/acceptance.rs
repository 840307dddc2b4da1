//! Acceptance suite: one test per shipped guarantee, each printing a
//! single `ACCEPTANCE <nn> PASS` line with the measured numbers and
//! asserting both the behavioral claim and its runtime budget.
//!
//! Run with: cargo test --test acceptance -- --nocapture

use std::time::Instant;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tearlearn::acyclicity::{grad_h_exp, grad_h_poly, h_exp, h_poly};
use tearlearn::daggnn::{draw_noise, elbo_gradients, elbo_loss, init_model, train_daggnn};
use tearlearn::datagen::{prior_lower_triangular, random_triangular_w, sample_nonlinear_scaled};
use tearlearn::graph::{build_loop_matrix, is_acyclic, nonzero_streams};
use tearlearn::io::read_text;
use tearlearn::metrics::recovery_metrics;
use tearlearn::pipeline::{run_command, PipelineConfig};
use tearlearn::postprocess::{preprocess, tear_until_acyclic, truncate_until_acyclic};
use tearlearn::scores::{gaussian_bic, perturbation_bound};
use tearlearn::sem::{lsq_grad, lsq_loss, step_identity_residual, train_linear, unconstrained_step_exp};
use tearlearn::tear::{solve_tear, TearBounds};
use tearlearn::{
    Cycle, Dataset, Error, GnnArch, Prior, PriorSpec, Stream, TearConfig, TearProblem,
    TrainConfig, WeightMatrix,
};

// ---------------------------------------------------------------------
// Deterministic pseudo-random helper, independent of the crate's RNGs.
// ---------------------------------------------------------------------

struct Lcg(u64);

impl Lcg {
    fn new(seed: u64) -> Self {
        Lcg(seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407))
    }

    fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0 >> 33
    }

    /// Uniform in [0, 1).
    fn next_f64(&mut self) -> f64 {
        (self.next_u64() as f64) / ((1u64 << 31) as f64)
    }

    /// Uniform in [lo, hi).
    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n).
    fn below(&mut self, n: usize) -> usize {
        (self.next_u64() as usize) % n
    }

    /// Magnitude in [lo, hi) with a random sign.
    fn signed(&mut self, lo: f64, hi: f64) -> f64 {
        let v = self.range(lo, hi);
        if self.next_f64() < 0.5 {
            -v
        } else {
            v
        }
    }
}

/// Random matrix whose support is acyclic: strictly upper-triangular
/// under a random node permutation.
fn random_dag_matrix(d: usize, edge_prob: f64, rng: &mut Lcg) -> WeightMatrix {
    let mut order: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        order.swap(i, rng.below(i + 1));
    }
    let mut m = Array2::zeros((d, d));
    for a in 0..d {
        for b in (a + 1)..d {
            if rng.next_f64() < edge_prob {
                m[[order[a], order[b]]] = rng.signed(0.3, 2.0);
            }
        }
    }
    WeightMatrix::new(m).unwrap()
}

/// Random cyclic matrix: a DAG part plus a planted strong short cycle
/// (length 2 or 3, magnitudes in [0.8, 2)), so every acyclicity measure
/// is comfortably positive.
fn random_cyclic_matrix(d: usize, edge_prob: f64, rng: &mut Lcg) -> WeightMatrix {
    assert!(d >= 3);
    let base = random_dag_matrix(d, edge_prob, rng);
    let mut m = base.into_values();
    let len = 2 + rng.below(2);
    let start = rng.below(d);
    let nodes: Vec<usize> = (0..len).map(|k| (start + k) % d).collect();
    for k in 0..len {
        let (u, v) = (nodes[k], nodes[(k + 1) % len]);
        m[[u, v]] = rng.range(0.8, 2.0);
    }
    let out = WeightMatrix::with_zeroed_diagonal(m).unwrap();
    assert!(!is_acyclic(&nonzero_streams(&out, None), d));
    out
}

/// Random standard-normal-ish data matrix from the helper generator.
fn random_data(n: usize, d: usize, rng: &mut Lcg) -> Dataset {
    let mut x = Array2::zeros((n, d));
    for v in x.iter_mut() {
        // Sum of uniforms: light-tailed, mean 0, ample spread.
        *v = rng.range(-1.0, 1.0) + rng.range(-1.0, 1.0) + rng.range(-1.0, 1.0);
    }
    Dataset::new(x).unwrap()
}

/// Relative disagreement with an absolute floor: below the floor a
/// central difference is dominated by roundoff, so tiny entries are
/// compared absolutely (to floor × tolerance) instead.
fn mixed_rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    values[values.len() / 2]
}

// ---------------------------------------------------------------------
// 01 — acyclicity measures separate acyclic from cyclic supports
// ---------------------------------------------------------------------

#[test]
fn criterion_01_acyclicity_measures_separate_dag_from_cyclic() {
    let started = Instant::now();
    let mut rng = Lcg::new(101);
    let mut max_on_dags = 0.0_f64;
    let mut min_on_cyclic = f64::INFINITY;
    for k in 0..500 {
        let d = 3 + k % 8; // 3..=10
        let gamma = 1.0 / d as f64;

        let dag = random_dag_matrix(d, 0.5, &mut rng);
        let he = h_exp(&dag).unwrap();
        let hp = h_poly(&dag, gamma).unwrap();
        assert!(he < 1e-10 && hp < 1e-10, "measure not ~0 on DAG: {he:e} {hp:e}");
        max_on_dags = max_on_dags.max(he).max(hp);

        let cyc = random_cyclic_matrix(d, 0.3, &mut rng);
        let ce = h_exp(&cyc).unwrap();
        let cp = h_poly(&cyc, gamma).unwrap();
        assert!(ce > 1e-6 && cp > 1e-6, "measure not positive on cyclic: {ce:e} {cp:e}");
        min_on_cyclic = min_on_cyclic.min(ce).min(cp);
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 10.0, "runtime budget 10 s exceeded: {secs:.1} s");
    println!(
        "ACCEPTANCE 01 PASS — 500 acyclic supports: both measures < 1e-10 (max {max_on_dags:e}); \
         500 cyclic: both > 1e-6 (min {min_on_cyclic:e}); {secs:.2} s"
    );
}

// ---------------------------------------------------------------------
// 02 — every analytic gradient matches central finite differences
// ---------------------------------------------------------------------

fn fd_check_matrix<F: FnMut(&WeightMatrix) -> f64>(
    a: &WeightMatrix,
    analytic: &Array2<f64>,
    mut f: F,
    eps: f64,
    tol: f64,
    label: &str,
) -> f64 {
    let d = a.dim();
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let v = a.get(i, j);
            let mut plus = a.clone();
            plus.set(i, j, v + eps).unwrap();
            let mut minus = a.clone();
            minus.set(i, j, v - eps).unwrap();
            let fd = (f(&plus) - f(&minus)) / (2.0 * eps);
            let rel = mixed_rel_err(analytic[(i, j)], fd);
            assert!(
                rel < tol,
                "{label} gradient at ({i},{j}): analytic {} vs fd {fd}, rel {rel:e}",
                analytic[(i, j)]
            );
            worst = worst.max(rel);
        }
    }
    worst
}

#[test]
fn criterion_02_gradients_match_finite_differences() {
    let started = Instant::now();
    let mut rng = Lcg::new(202);
    let mut worst = 0.0_f64;

    for k in 0..100 {
        let d = 3 + k % 4; // 3..=6
        // Mild entries keep the exponential well-conditioned for FD.
        let mut m = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                if i != j && rng.next_f64() < 0.7 {
                    m[[i, j]] = rng.signed(0.05, 1.2);
                }
            }
        }
        let a = WeightMatrix::new(m).unwrap();

        let g = grad_h_exp(&a).unwrap();
        worst = worst.max(fd_check_matrix(
            &a,
            &g,
            |x| h_exp(x).unwrap(),
            1e-5,
            1e-5,
            "h_exp",
        ));

        let gamma = if k % 2 == 0 { 1.0 / d as f64 } else { 0.3 };
        let g = grad_h_poly(&a, gamma).unwrap();
        worst = worst.max(fd_check_matrix(
            &a,
            &g,
            |x| h_poly(x, gamma).unwrap(),
            1e-5,
            1e-5,
            "h_poly",
        ));

        let data = random_data(25, d, &mut rng);
        let g = lsq_grad(data.values().view(), &a);
        worst = worst.max(fd_check_matrix(
            &a,
            &g,
            |x| lsq_loss(data.values().view(), x),
            1e-5,
            1e-5,
            "least-squares",
        ));
    }

    // Variational model: every parameter group against finite
    // differences of the objective under frozen noise.
    let mut worst_gnn = 0.0_f64;
    for k in 0..100u64 {
        let d = 3 + (k % 2) as usize; // 3 or 4
        let arch = GnnArch {
            latent_dim: 1 + (k % 2) as usize,
            hidden: 4,
            sample_count: 1 + (k % 2) as usize,
        };
        let mut chacha = ChaCha8Rng::seed_from_u64(9000 + k);
        let model = init_model(d, &arch, 0.4, &mut chacha);
        let mut rng_k = Lcg::new(4000 + k);
        let data = random_data(8, d, &mut rng_k);
        let noise = draw_noise(8, d, arch.latent_dim, arch.sample_count, &mut chacha);
        let (_, grads) = elbo_gradients(&model, &data, &noise).unwrap();

        // The networks use rectified activations, so a probe can land
        // within ε of an activation kink, where a central difference
        // straddles two linear pieces and estimates their average slope
        // rather than the derivative. Shrinking ε moves the stencil off
        // the kink, so the step ladder accepts the first agreeing step;
        // a genuinely wrong gradient disagrees at every ε (roundoff at
        // the smallest step is ~1e-6 relative, well under tolerance).
        let mut check = |label: String, analytic: f64, mut bump: Box<dyn FnMut(f64) -> f64>| {
            let mut best = f64::INFINITY;
            for eps in [1e-5, 1e-6, 1e-7, 1e-8] {
                let fd = (bump(eps) - bump(-eps)) / (2.0 * eps);
                best = best.min(mixed_rel_err(analytic, fd));
                if best < 1e-4 {
                    break;
                }
            }
            assert!(
                best < 1e-4,
                "variational gradient {label} (instance {k}): analytic {analytic}, \
                 best relative disagreement {best:e} across step sizes"
            );
            worst_gnn = worst_gnn.max(best);
        };

        for i in 0..d {
            for j in 0..d {
                if i == j {
                    continue;
                }
                let (m0, data0, noise0) = (model.clone(), data.clone(), noise.clone());
                check(
                    format!("a[{i},{j}]"),
                    grads.a[(i, j)],
                    Box::new(move |e| {
                        let mut m = m0.clone();
                        m.a.set(i, j, m.a.get(i, j) + e).unwrap();
                        elbo_loss(&m, &data0, &noise0).unwrap()
                    }),
                );
            }
        }
        // One representative entry per network array keeps this fast
        // while still covering every parameter group; rotate the entry
        // with k so the whole arrays get probed across instances.
        let w1r = k as usize % 4;
        let picks: Vec<(&str, f64, Box<dyn Fn(&mut tearlearn::GnnModel, f64)>)> = vec![
            ("enc.w1", grads.enc_w1[(w1r, 0)], {
                Box::new(move |m, e| m.encoder.w1[(w1r, 0)] += e)
            }),
            ("enc.b1", grads.enc_b1[w1r], Box::new(move |m, e| m.encoder.b1[w1r] += e)),
            ("enc.w2", grads.enc_w2[(0, w1r)], {
                Box::new(move |m, e| m.encoder.w2[(0, w1r)] += e)
            }),
            ("enc.b2", grads.enc_b2[0], Box::new(|m, e| m.encoder.b2[0] += e)),
            ("dec.w1", grads.dec_w1[(w1r, 0)], {
                Box::new(move |m, e| m.decoder.w1[(w1r, 0)] += e)
            }),
            ("dec.b1", grads.dec_b1[w1r], Box::new(move |m, e| m.decoder.b1[w1r] += e)),
            ("dec.w2", grads.dec_w2[(0, w1r)], {
                Box::new(move |m, e| m.decoder.w2[(0, w1r)] += e)
            }),
            ("dec.b2", grads.dec_b2[0], Box::new(|m, e| m.decoder.b2[0] += e)),
        ];
        for (name, analytic, apply) in picks {
            let (m0, data0, noise0) = (model.clone(), data.clone(), noise.clone());
            check(
                format!("{name}[{w1r}]"),
                analytic,
                Box::new(move |e| {
                    let mut m = m0.clone();
                    apply(&mut m, e);
                    elbo_loss(&m, &data0, &noise0).unwrap()
                }),
            );
        }
    }

    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 60.0, "runtime budget 60 s exceeded: {secs:.1} s");
    println!(
        "ACCEPTANCE 02 PASS — 100 instances each: measure/least-squares gradients within 1e-5 \
         of central differences (worst {worst:e}), variational gradients within 1e-4 \
         (worst {worst_gnn:e}); {secs:.2} s"
    );
}

// ---------------------------------------------------------------------
// 03 — the rearranged gradient-step identity holds to 1e-10
// ---------------------------------------------------------------------

#[test]
fn criterion_03_step_identity_residual_is_numerically_zero() {
    let started = Instant::now();
    let mut rng = Lcg::new(303);
    let mut worst = 0.0_f64;
    for k in 0..50 {
        let d = 3 + k % 4;
        let data = random_data(30, d, &mut rng);
        let a = random_cyclic_matrix(d, 0.4, &mut rng);
        let lr = rng.range(1e-3, 0.3);
        let alpha = rng.range(0.0, 2.0);
        let x = data.values().view();
        let a_next = unconstrained_step_exp(x, &a, lr, alpha).unwrap();
        let residual = step_identity_residual(x, &a, &a_next, lr, alpha).unwrap();
        assert!(residual < 1e-10, "identity residual {residual:e} at instance {k}");
        worst = worst.max(residual);
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 5.0, "runtime budget 5 s exceeded: {secs:.1} s");
    println!(
        "ACCEPTANCE 03 PASS — 50 random (X, A, LR, α): step-identity residual < 1e-10 \
         (worst {worst:e}); {secs:.2} s"
    );
}

// ---------------------------------------------------------------------
// 04 — continuous training alone ends short of exact acyclicity
// ---------------------------------------------------------------------

#[test]
fn criterion_04_training_ends_with_residual_cycles() {
    let started = Instant::now();
    let mut linear_infeasible = 0;
    let mut gnn_infeasible = 0;
    for seed in 0..10u64 {
        let truth = random_triangular_w(5, 0.5, (0.5, 2.0), seed).unwrap();
        let data = sample_nonlinear_scaled(&truth, 500, seed + 1000, 1.0)
            .unwrap()
            .standardized()
            .unwrap();

        let lin_cfg = TrainConfig {
            grad_clip: Some(10.0),
            seed,
            ..TrainConfig::default()
        };
        let lin = train_linear(&data, &lin_cfg).unwrap();
        if lin.final_h > 1e-8 {
            linear_infeasible += 1;
        }

        let gnn_cfg = TrainConfig {
            learning_rate: 1e-4,
            epochs: 60,
            max_outer: 10,
            grad_clip: Some(10.0),
            seed,
            ..TrainConfig::default()
        };
        let arch = GnnArch::default();
        let gnn = train_daggnn(&data, &gnn_cfg, &arch).unwrap();
        if gnn.final_h > 1e-8 {
            gnn_infeasible += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(
        linear_infeasible >= 7,
        "linear training ended infeasible in only {linear_infeasible}/10 seeds"
    );
    assert!(
        gnn_infeasible >= 7,
        "variational training ended infeasible in only {gnn_infeasible}/10 seeds"
    );
    assert!(secs < 600.0, "runtime budget 10 min exceeded: {secs:.1} s");
    println!(
        "ACCEPTANCE 04 PASS — d=5, n=500, 10 seeds: final measure > 1e-8 in {linear_infeasible}/10 \
         (linear) and {gnn_infeasible}/10 (variational) runs — both ≥ 7/10; {secs:.1} s"
    );
}

// ---------------------------------------------------------------------
// 05 — the tearing solver matches brute force exactly
// ---------------------------------------------------------------------

struct RandomTearInstance {
    problem: TearProblem,
    obligatory: usize,
}

fn random_tear_instance(rng: &mut Lcg) -> RandomTearInstance {
    let n_streams = 2 + rng.below(13); // 2..=14
    let d = 6;
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if i != j {
                pairs.push((i, j));
            }
        }
    }
    for i in (1..pairs.len()).rev() {
        pairs.swap(i, rng.below(i + 1));
    }
    let streams: Vec<Stream> = pairs[..n_streams]
        .iter()
        .enumerate()
        .map(|(id, &(s, t))| Stream {
            id,
            source: s,
            target: t,
            weight: rng.range(0.1, 2.0),
        })
        .collect();
    let weights: Vec<f64> = streams.iter().map(|s| s.weight).collect();
    let bounds: Vec<TearBounds> = (0..n_streams)
        .map(|_|

            if rng.next_f64() < 0.25 {
                TearBounds { lower: 0.0, upper: 0.5 }
            } else {
                TearBounds { lower: 0.0, upper: 1.0 }
            })
        .collect();
    let obligatory = bounds.iter().filter(|b| !b.tearable()).count();
    let n_rows = 1 + rng.below(6);
    let mut cycles = Vec::new();
    for _ in 0..n_rows {
        let mut members: Vec<usize> =
            (0..n_streams).filter(|_| rng.next_f64() < 0.35).collect();
        if members.is_empty() {
            members.push(rng.below(n_streams));
        }
        cycles.push(Cycle { streams: members });
    }
    let lm = build_loop_matrix(&cycles, &streams).unwrap();
    RandomTearInstance {
        problem: TearProblem::new(streams, lm, weights, bounds).unwrap(),
        obligatory,
    }
}

/// Exhaustive minimum over every bound-respecting assignment.
fn brute_force_tear(p: &TearProblem) -> Option<f64> {
    let n = p.streams.len();
    let mut best: Option<f64> = None;
    'outer: for mask in 0u32..(1 << n) {
        let mut cost = 0.0;
        for s in 0..n {
            if mask & (1 << s) != 0 {
                if !p.bounds[s].tearable() {
                    continue 'outer;
                }
                cost += p.weights[s];
            }
        }
        for r in 0..p.u.rows() {
            if !p.u.row_members(r).iter().any(|&s| mask & (1 << s) != 0) {
                continue 'outer;
            }
        }
        best = Some(match best {
            None => cost,
            Some(b) if cost < b => cost,
            Some(b) => b,
        });
    }
    best
}

#[test]
fn criterion_05_tearing_solver_matches_brute_force() {
    let started = Instant::now();
    let mut rng = Lcg::new(505);
    let (mut feasible, mut infeasible, mut with_pins) = (0, 0, 0);
    for k in 0..200 {
        let inst = random_tear_instance(&mut rng);
        if inst.obligatory > 0 {
            with_pins += 1;
        }
        let brute = brute_force_tear(&inst.problem);
        match (solve_tear(&inst.problem), brute) {
            (Ok(sol), Some(best)) => {
                assert!(sol.optimal, "instance {k}: solver did not prove optimality");
                assert!(
                    (sol.cost - best).abs() < 1e-9,
                    "instance {k}: solver cost {} vs brute force {best}",
                    sol.cost
                );
                feasible += 1;
            }
            (Err(Error::InfeasibleTear { .. }), None) => {
                infeasible += 1;
            }
            (Ok(sol), None) => panic!(
                "instance {k}: solver returned cost {} where brute force proves infeasibility",
                sol.cost
            ),
            (Err(e), Some(best)) => panic!(
                "instance {k}: solver failed ({e}) on an instance with optimum {best}"
            ),
            (Err(e), None) => panic!("instance {k}: unexpected error kind: {e}"),
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(with_pins >= 50, "too few instances with pinned streams: {with_pins}");
    assert!(infeasible >= 1, "no infeasible instance was generated");
    assert!(secs < 60.0, "runtime budget 60 s exceeded: {secs:.1} s");
    println!(
        "ACCEPTANCE 05 PASS — 200 instances (≤ 14 streams, {with_pins} with pinned streams): \
         optimal cost equals exhaustive enumeration on {feasible}, infeasibility agreed on \
         {infeasible}; {secs:.2} s"
    );
}

// ---------------------------------------------------------------------
// 06 — tearing always reaches acyclicity and never removes pinned edges
// ---------------------------------------------------------------------

#[test]
fn criterion_06_tearing_reaches_acyclicity_preserving_pins() {
    let started = Instant::now();
    let mut rng = Lcg::new(606);
    let mut pinned_checked = 0;
    for k in 0..1000 {
        let d = 3 + k % 13; // 3..=15
        let a = random_cyclic_matrix(d, 2.5 / d as f64, &mut rng);
        let mut prior = PriorSpec::all_unknown(d).unwrap();
        // At most one obligatory entry keeps every cycle breakable.
        let nz = nonzero_streams(&a, None);
        let pin = if rng.next_f64() < 0.7 {
            let s = &nz[rng.below(nz.len())];
            prior.set(s.source, s.target, Prior::Obligatory).unwrap();
            Some((s.source, s.target))
        } else {
            None
        };
        let cfg = TearConfig::default();
        let pre = preprocess(&a, &prior, cfg.omega).unwrap();
        let report = tear_until_acyclic(&pre, &prior, &cfg).unwrap();
        assert!(
            is_acyclic(&nonzero_streams(&report.a_final, None), d),
            "instance {k}: output still cyclic"
        );
        if let Some((s, t)) = pin {
            assert_eq!(
                report.a_final.get(s, t),
                pre.get(s, t),
                "instance {k}: pinned stream {s} → {t} was altered"
            );
            assert!(report.a_final.get(s, t) != 0.0);
            pinned_checked += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 300.0, "runtime budget 5 min exceeded: {secs:.1} s");
    println!(
        "ACCEPTANCE 06 PASS — 1000 random cyclic matrices (d ≤ 15): every repaired matrix \
         acyclic; pinned streams survived in all {pinned_checked} pinned runs; {secs:.1} s"
    );
}

// ---------------------------------------------------------------------
// 07 — tearing never destroys more weight than threshold escalation
// ---------------------------------------------------------------------

#[test]
fn criterion_07_tearing_dominates_truncation_in_removed_weight() {
    let started = Instant::now();
    let mut rng = Lcg::new(707);
    let (mut strict, mut ties) = (0, 0);
    for k in 0..300 {
        let d = 4 + k % 7; // 4..=10
        // Trained-like: clear DAG structure plus small cyclic residue.
        let mut m = random_dag_matrix(d, 0.4, &mut rng).into_values();
        for _ in 0..(2 + rng.below(4)) {
            let (i, j) = (rng.below(d), rng.below(d));
            if i != j && m[[i, j]] == 0.0 {
                m[[i, j]] = rng.signed(0.02, 0.3);
            }
        }
        let a = WeightMatrix::with_zeroed_diagonal(m).unwrap();
        if is_acyclic(&nonzero_streams(&a, None), d) {
            // Force a cycle through two moderate extra entries.
            let mut m = a.into_values();
            let i = rng.below(d - 1);
            m[[i, i + 1]] = rng.range(0.3, 0.8);
            m[[i + 1, i]] = rng.range(0.05, 0.3);
            let a2 = WeightMatrix::with_zeroed_diagonal(m).unwrap();
            check_dominance(&a2, &mut strict, &mut ties, k);
            continue;
        }
        check_dominance(&a, &mut strict, &mut ties, k);
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(
        strict + ties == 300,
        "dominance violated: only {} of 300 instances had tear ≤ truncation",
        strict + ties
    );
    assert!(
        strict >= 90,
        "strict dominance in only {strict}/300 instances (need ≥ 30%)"
    );
    println!(
        "ACCEPTANCE 07 PASS — 300 instances (d ≤ 10, uncapped enumeration): torn weight ≤ \
         truncated weight in 300/300, strictly less in {strict} (≥ 30% required); {secs:.1} s"
    );
}

fn check_dominance(a: &WeightMatrix, strict: &mut usize, ties: &mut usize, k: usize) {
    let d = a.dim();
    let prior = PriorSpec::all_unknown(d).unwrap();
    let cfg = TearConfig {
        max_count: 10_000_000,
        ..TearConfig::default()
    };
    let pre = preprocess(a, &prior, cfg.omega).unwrap();
    let torn = tear_until_acyclic(&pre, &prior, &cfg).unwrap();
    assert!(
        torn.milp_optimal_every_round,
        "instance {k}: a tearing round returned without proof of optimality"
    );
    for rs in &torn.round_stats {
        assert!(!rs.enumeration_truncated, "instance {k}: enumeration was capped");
    }
    let truncated = truncate_until_acyclic(a);
    let (tw, uw) = (torn.total_torn_weight, truncated.total_torn_weight);
    assert!(tw <= uw + 1e-12, "instance {k}: torn {tw} > truncated {uw}");
    if uw - tw > 1e-9 {
        *strict += 1;
    } else {
        *ties += 1;
    }
}

// ---------------------------------------------------------------------
// 08 — the perturbation bound always dominates the actual error
// ---------------------------------------------------------------------

#[test]
fn criterion_08_perturbation_bound_never_violated() {
    let started = Instant::now();
    let mut rng = Lcg::new(808);
    let mut max_ratio = 0.0_f64;
    for k in 0..500 {
        let d = 3 + k % 4;
        let data = random_data(30, d, &mut rng);
        let a = random_cyclic_matrix(d, 0.5, &mut rng);
        let mut delta = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                if i != j && rng.next_f64() < 0.6 {
                    delta[[i, j]] = rng.signed(0.001, 0.5);
                }
            }
        }
        let (bound, actual) = perturbation_bound(&data, &a, delta.view()).unwrap();
        assert!(
            actual <= bound + 1e-12,
            "instance {k}: actual {actual} exceeds bound {bound}"
        );
        if bound > 0.0 {
            max_ratio = max_ratio.max(actual / bound);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(secs < 5.0, "runtime budget 5 s exceeded: {secs:.1} s");
    println!(
        "ACCEPTANCE 08 PASS — 500 trials: actual relative deviation ≤ bound with zero \
         violations (tightest ratio {max_ratio:.3}); {secs:.2} s"
    );
}

// ---------------------------------------------------------------------
// 09 — recovery metrics match an exhaustive classification oracle
// ---------------------------------------------------------------------

#[test]
fn criterion_09_metrics_match_exhaustive_oracle_d3() {
    let started = Instant::now();
    let positions = [(0usize, 1usize), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];
    let matrix_of = |mask: u32| {
        let mut m = Array2::zeros((3, 3));
        for (b, &(i, j)) in positions.iter().enumerate() {
            if mask & (1 << b) != 0 {
                m[[i, j]] = 1.0;
            }
        }
        WeightMatrix::new(m).unwrap()
    };
    let mut checked = 0;
    for est_mask in 0u32..64 {
        let est = matrix_of(est_mask);
        for tru_mask in 0u32..64 {
            let tru = matrix_of(tru_mask);
            let got = recovery_metrics(&est, &tru).unwrap();

            // Independent oracle, recomputed from scratch.
            let (mut tp, mut r, mut fp) = (0usize, 0, 0);
            for &(i, j) in &positions {
                if est.get(i, j) != 0.0 {
                    if tru.get(i, j) != 0.0 {
                        tp += 1;
                    } else if tru.get(j, i) != 0.0 {
                        r += 1;
                    } else {
                        fp += 1;
                    }
                }
            }
            let (mut e, mut mm, mut t_sk) = (0usize, 0, 0);
            for i in 0..3 {
                for j in (i + 1)..3 {
                    let es = est.get(i, j) != 0.0 || est.get(j, i) != 0.0;
                    let ts = tru.get(i, j) != 0.0 || tru.get(j, i) != 0.0;
                    t_sk += ts as usize;
                    e += (es && !ts) as usize;
                    mm += (!es && ts) as usize;
                }
            }
            let tee = est_mask.count_ones() as usize;
            let t = tru_mask.count_ones() as usize;
            let f = 3 - t_sk;
            let div = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };

            assert_eq!(
                (got.confusion.tp, got.confusion.r, got.confusion.fp),
                (tp, r, fp),
                "directed classification differs at est {est_mask:06b} / tru {tru_mask:06b}"
            );
            assert_eq!((got.confusion.e, got.confusion.m), (e, mm));
            assert_eq!((got.confusion.tee, got.confusion.t, got.confusion.f), (tee, t, f));
            assert_eq!(got.fdr, div(r + fp, tee));
            assert_eq!(got.tpr, div(tp, t));
            assert_eq!(got.fpr, div(r + fp, f));
            assert_eq!(got.shd, e + mm + r);
            checked += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    assert_eq!(checked, 4096);
    assert!(secs < 60.0, "runtime budget 60 s exceeded: {secs:.1} s");
    println!(
        "ACCEPTANCE 09 PASS — all 64 × 64 = {checked} support pairs at d = 3 match the \
         exhaustive classification oracle exactly; {secs:.2} s"
    );
}

// ---------------------------------------------------------------------
// 10 — tearing with an ordering prior beats truncation on recovery
// ---------------------------------------------------------------------

#[test]
fn criterion_10_tear_with_ordering_prior_beats_truncation() {
    let started = Instant::now();
    let d = 10;
    let (mut shd_tear, mut shd_trunc) = (Vec::new(), Vec::new());
    let (mut fdr_tear, mut fdr_trunc) = (Vec::new(), Vec::new());
    for seed in 0..5u64 {
        let truth = random_triangular_w(d, 0.5, (0.5, 2.0), seed).unwrap();
        let data = sample_nonlinear_scaled(&truth, 5000, seed + 1000, 1.0)
            .unwrap()
            .standardized()
            .unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e-5,
            epochs: 60,
            max_outer: 12,
            grad_clip: Some(10.0),
            seed,
            ..TrainConfig::default()
        };
        let trained = train_daggnn(&data, &cfg, &GnnArch::default()).unwrap();

        let prior = prior_lower_triangular(d).unwrap();
        let tear_cfg = TearConfig::default();
        let pre = preprocess(&trained.a_best, &prior, tear_cfg.omega).unwrap();
        let torn = tear_until_acyclic(&pre, &prior, &tear_cfg).unwrap();
        let m_tear = recovery_metrics(&torn.a_final, truth.w()).unwrap();

        let truncated = truncate_until_acyclic(&trained.a_best);
        let m_trunc = recovery_metrics(&truncated.a_final, truth.w()).unwrap();

        shd_tear.push(m_tear.shd as f64);
        shd_trunc.push(m_trunc.shd as f64);
        fdr_tear.push(m_tear.fdr);
        fdr_trunc.push(m_trunc.fdr);
    }
    let (ms_tear, ms_trunc) = (median(&mut shd_tear), median(&mut shd_trunc));
    let (mf_tear, mf_trunc) = (median(&mut fdr_tear), median(&mut fdr_trunc));
    let secs = started.elapsed().as_secs_f64();
    assert!(
        ms_tear < ms_trunc,
        "median SHD: tearing-with-prior {ms_tear} not below truncation {ms_trunc}"
    );
    assert!(
        mf_tear < mf_trunc,
        "median FDR: tearing-with-prior {mf_tear} not below truncation {mf_trunc}"
    );
    assert!(secs < 1800.0, "runtime budget 30 min exceeded: {secs:.1} s");
    println!(
        "ACCEPTANCE 10 PASS — d=10, n=5000, 5 seeds: median SHD {ms_tear} (tear + ordering \
         prior) < {ms_trunc} (truncation); median FDR {mf_tear:.3} < {mf_trunc:.3}; {secs:.1} s"
    );
}

// ---------------------------------------------------------------------
// 11 — without ground truth, tearing scores at least as well by BIC
// ---------------------------------------------------------------------

#[test]
fn criterion_11_tearing_wins_bic_without_ground_truth() {
    let started = Instant::now();
    let d = 15;
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..5u64 {
        let truth = random_triangular_w(d, 0.4, (0.5, 2.0), 100 + seed).unwrap();
        let data = sample_nonlinear_scaled(&truth, 5000, seed + 2000, 1.0)
            .unwrap()
            .standardized()
            .unwrap();
        let cfg = TrainConfig {
            grad_clip: Some(10.0),
            seed,
            ..TrainConfig::default()
        };
        let trained = train_linear(&data, &cfg).unwrap();

        let prior = PriorSpec::all_unknown(d).unwrap();
        let tear_cfg = TearConfig::default();
        let pre = preprocess(&trained.a_best, &prior, tear_cfg.omega).unwrap();
        let torn = tear_until_acyclic(&pre, &prior, &tear_cfg).unwrap();
        let truncated = truncate_until_acyclic(&trained.a_best);

        let bic_tear = gaussian_bic(&data, &torn.a_final).unwrap().value;
        let bic_trunc = gaussian_bic(&data, &truncated.a_final).unwrap().value;
        if bic_tear >= bic_trunc {
            wins += 1;
        }
        pairs.push((bic_tear, bic_trunc));
    }
    let secs = started.elapsed().as_secs_f64();
    assert!(
        wins >= 4,
        "tearing won the BIC comparison in only {wins}/5 seeds: {pairs:?}"
    );
    assert!(secs < 1800.0, "runtime budget 30 min exceeded: {secs:.1} s");
    println!(
        "ACCEPTANCE 11 PASS — d=15, unknown-truth evaluation, 5 seeds: BIC(tear) ≥ \
         BIC(truncation) from the same trained matrix in {wins}/5 seeds (≥ 4 required); \
         {secs:.1} s"
    );
}

// ---------------------------------------------------------------------
// 12 — every command is byte-for-byte reproducible
// ---------------------------------------------------------------------

#[test]
fn criterion_12_every_command_is_byte_deterministic() {
    let started = Instant::now();
    let root = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::new();
    cfg.output_dir = root.path().join("run");
    cfg.generate.d = 4;
    cfg.generate.n = 80;
    cfg.train.epochs = 40;
    cfg.train.max_outer = 8;
    cfg.train.beta_max = 1e6;
    cfg.apply_seed(12);

    let artifacts: &[(&str, &[&str])] = &[
        ("generate", &["data.csv", "truth.json", "prior.json"]),
        ("train", &["a_best.json", "train_log.json"]),
        ("tear", &["tear/a_final.json", "tear/tear_report.json"]),
        ("truncate", &["truncate/a_final.json", "truncate/tear_report.json"]),
        ("eval", &["tear/scores.json", "truncate/scores.json"]),
    ];

    // First full pass, snapshotting each command's outputs.
    let mut snapshots: Vec<Vec<String>> = Vec::new();
    for (command, files) in artifacts {
        run_command(&cfg, command, None).unwrap();
        snapshots.push(
            files
                .iter()
                .map(|f| read_text(&cfg.output_dir.join(f)).unwrap())
                .collect(),
        );
    }
    // Second pass over the same directory with the same config and seed.
    let mut compared = 0;
    for ((command, files), snapshot) in artifacts.iter().zip(&snapshots) {
        run_command(&cfg, command, None).unwrap();
        for (f, before) in files.iter().zip(snapshot) {
            let after = read_text(&cfg.output_dir.join(f)).unwrap();
            assert_eq!(
                before, &after,
                "command '{command}': artifact {f} changed between identical runs"
            );
            compared += 1;
        }
    }

    // The one-shot pipeline command, twice into its own directory.
    let mut pipe_cfg = cfg.clone();
    pipe_cfg.output_dir = root.path().join("pipe");
    run_command(&pipe_cfg, "pipeline", None).unwrap();
    let all_files: Vec<String> = artifacts
        .iter()
        .flat_map(|(_, fs)| fs.iter().map(|f| f.to_string()))
        .collect();
    let first: Vec<String> = all_files
        .iter()
        .map(|f| read_text(&pipe_cfg.output_dir.join(f)).unwrap())
        .collect();
    run_command(&pipe_cfg, "pipeline", None).unwrap();
    for (f, before) in all_files.iter().zip(&first) {
        let after = read_text(&pipe_cfg.output_dir.join(f)).unwrap();
        assert_eq!(before, &after, "pipeline artifact {f} changed between identical runs");
        compared += 1;
    }

    let secs = started.elapsed().as_secs_f64();
    println!(
        "ACCEPTANCE 12 PASS — all six commands rerun with identical config + seed: \
         {compared} artifact comparisons byte-identical (timestamps only in manifest.json); \
         {secs:.1} s"
    );
}
