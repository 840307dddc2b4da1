//! Graph-recovery metrics: classify estimated edges against the truth
//! (correct, reversed, spurious, missing) and derive FDR, TPR, FPR, and
//! structural Hamming distance.
//!
//! Run with: cargo run --example recovery_metrics

use tearlearn::metrics::recovery_metrics;
use tearlearn::WeightMatrix;

fn main() -> tearlearn::Result<()> {
    // Truth: 0 → 1 → 2, plus 0 → 3.
    let truth = WeightMatrix::from_rows(&[
        vec![0.0, 1.0, 0.0, 1.0],
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
    ])?;
    // Estimate: gets 0 → 1 right, reverses 1 → 2, invents 3 → 2, and
    // misses 0 → 3.
    let estimated = WeightMatrix::from_rows(&[
        vec![0.0, 0.6, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.8, 0.0, 0.0],
        vec![0.0, 0.0, 0.4, 0.0],
    ])?;

    let m = recovery_metrics(&estimated, &truth)?;
    let c = m.confusion;
    println!("edge classification (directed):");
    println!("  true positives (same direction):  {}", c.tp);
    println!("  reversed:                         {}", c.r);
    println!("  false positives (no true edge):   {}", c.fp);
    println!("skeleton view (direction ignored):");
    println!("  extra skeleton edges:             {}", c.e);
    println!("  missing skeleton edges:           {}", c.m);
    println!("denominators:");
    println!("  estimated edges:                  {}", c.tee);
    println!("  true edges:                       {}", c.t);
    println!("  true non-edges (pairs):           {}", c.f);
    println!();
    println!("false discovery rate:  {:.4}", m.fdr);
    println!("true positive rate:    {:.4}", m.tpr);
    println!("false positive rate:   {:.4}", m.fpr);
    println!("structural Hamming:    {}", m.shd);
    if m.degenerate.is_empty() {
        println!("no degenerate denominators");
    } else {
        println!("degenerate denominators: {:?}", m.degenerate);
    }

    // Perfect recovery is all zeros.
    let perfect = recovery_metrics(&truth, &truth)?;
    assert_eq!(perfect.shd, 0);
    assert_eq!(perfect.fdr, 0.0);
    println!();
    println!("estimating the truth itself scores SHD 0, FDR 0");
    Ok(())
}
