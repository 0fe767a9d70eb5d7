//! Agreement, per-dataset F1, the size-weighted average and a paired t-test
//! on small hand-made inputs.
//!
//! ```sh
//! cargo run --example evaluate_metrics
//! ```

use claimdet::eval::{cohen_kappa, f1_scores, paired_ttest, weighted_average, AgreementMatrix, ConfusionMatrix};

fn main() -> claimdet::Result<()> {
    let agreement = AgreementMatrix::new([[301, 47], [64, 550]]);
    println!("kappa {:.4}", cohen_kappa(&agreement)?);

    let datasets = [
        ("twitter", ConfusionMatrix { tp: 40, fp: 12, fn_: 9, tn: 60 }),
        ("comments", ConfusionMatrix { tp: 22, fp: 15, fn_: 18, tn: 45 }),
        ("essays", ConfusionMatrix { tp: 30, fp: 4, fn_: 6, tn: 20 }),
    ];
    let mut rows = Vec::new();
    for (name, cm) in &datasets {
        let s = f1_scores(cm)?;
        println!("{name:<9} m-F1 {:.3}  c-F1 {:.3}  n {}", s.m_f1, s.c_f1, cm.total());
        rows.push((s.m_f1, cm.total()));
    }
    println!("weighted m-F1 {:.4}", weighted_average(&rows)?);

    let ours = [0.70, 0.72, 0.69, 0.71, 0.73];
    let baseline = [0.68, 0.69, 0.68, 0.69, 0.71];
    let t = paired_ttest(&ours, &baseline)?;
    println!("paired t {:.3}, df {}, p {:.4}", t.t, t.df, t.p);
    Ok(())
}
