//! Data-driven structure scores for when no ground truth exists: the
//! Gaussian BIC and the Bayesian Gaussian-equivalent marginal
//! likelihood, both of which should prefer the generating structure.
//!
//! Run with: cargo run --example score_candidate_graphs

use tearlearn::datagen::{random_triangular_w, sample_nonlinear_scaled};
use tearlearn::scores::{bge_score, gaussian_bic};
use tearlearn::{BgeHyper, WeightMatrix};

fn main() -> tearlearn::Result<()> {
    let d = 4;
    let truth = random_triangular_w(d, 0.7, (0.8, 2.0), 41)?;
    let data = sample_nonlinear_scaled(&truth, 2000, 42, 1.0)?.standardized()?;
    let hyper = BgeHyper::defaults_for(d);

    // Candidates: the empty graph, the generating DAG's support, and the
    // support with its weakest edge dropped.
    let empty = WeightMatrix::zeros(d)?;
    let generating = truth.w().clone();
    let mut weakest = (0, 0, f64::INFINITY);
    for i in 0..d {
        for j in 0..d {
            let v = generating.get(i, j).abs();
            if v > 0.0 && v < weakest.2 {
                weakest = (i, j, v);
            }
        }
    }
    let mut thinned_rows: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| generating.get(i, j)).collect())
        .collect();
    thinned_rows[weakest.0][weakest.1] = 0.0;
    let thinned = WeightMatrix::from_rows(&thinned_rows)?;

    println!("candidate          |      BIC       |      BGe");
    for (name, dag) in [
        ("empty graph", &empty),
        ("generating DAG", &generating),
        ("weakest edge cut", &thinned),
    ] {
        let bic = gaussian_bic(&data, dag)?;
        let bge = bge_score(&data, dag, &hyper)?;
        let flag = if bic.ridge_used { " (ridge)" } else { "" };
        println!("{name:<18} | {:>14.2} | {bge:>13.2}{flag}", bic.value);
    }
    println!();

    let bic_empty = gaussian_bic(&data, &empty)?.value;
    let bic_true = gaussian_bic(&data, &generating)?.value;
    let bge_empty = bge_score(&data, &empty, &hyper)?;
    let bge_true = bge_score(&data, &generating, &hyper)?;
    assert!(bic_true > bic_empty);
    assert!(bge_true > bge_empty);
    println!("both scores rank the generating structure above the empty graph");
    println!("(higher is better for both)");
    Ok(())
}
