use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// `counts[a][b]`: items annotator A labelled class `a` and annotator B class `b`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    pub counts: [[u64; 2]; 2],
}

impl AgreementMatrix {
    pub fn new(counts: [[u64; 2]; 2]) -> Self {
        AgreementMatrix { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Cohen's κ with marginal-product chance agreement.
pub fn cohen_kappa(am: &AgreementMatrix) -> Result<f64> {
    let n = am.total() as f64;
    if n == 0.0 {
        return Err(Error::InsufficientData("kappa of an empty agreement matrix".into()));
    }
    let c = &am.counts;
    let p_o = (c[0][0] + c[1][1]) as f64 / n;
    let row = [(c[0][0] + c[0][1]) as f64 / n, (c[1][0] + c[1][1]) as f64 / n];
    let col = [(c[0][0] + c[1][0]) as f64 / n, (c[0][1] + c[1][1]) as f64 / n];
    let p_e = row[0] * col[0] + row[1] * col[1];
    if p_e >= 1.0 {
        return Ok(if p_o >= 1.0 { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Mean κ over all annotator pairs. `annotations[a][i]` is annotator `a`'s
/// label for item `i`; items either annotator marked `x` are left out of
/// that pair's matrix, and pairs with no shared binary items are skipped.
pub fn mean_pairwise_kappa(annotations: &[Vec<Label>]) -> Result<f64> {
    if annotations.len() < 2 {
        return Err(Error::InsufficientData("kappa needs at least two annotators".into()));
    }
    let n = annotations[0].len();
    if annotations.iter().any(|a| a.len() != n) {
        return Err(Error::Shape("annotators labelled different numbers of items".into()));
    }
    let mut kappas = Vec::new();
    for a in 0..annotations.len() {
        for b in a + 1..annotations.len() {
            let mut am = AgreementMatrix::default();
            for (la, lb) in annotations[a].iter().zip(&annotations[b]) {
                if let (Some(x), Some(y)) = (la.class(), lb.class()) {
                    am.counts[x][y] += 1;
                }
            }
            if am.total() > 0 {
                kappas.push(cohen_kappa(&am)?);
            }
        }
    }
    if kappas.is_empty() {
        return Err(Error::InsufficientData("no annotator pair shares a binary-labelled item".into()));
    }
    Ok(kappas.iter().sum::<f64>() / kappas.len() as f64)
}

/// Most frequent binary label; ties and all-obscure inputs resolve to `x`.
pub fn majority_vote(labels: &[Label]) -> Result<Label> {
    if labels.is_empty() {
        return Err(Error::InsufficientData("majority vote over no labels".into()));
    }
    let claims = labels.iter().filter(|&&l| l == Label::Claim).count();
    let non = labels.iter().filter(|&&l| l == Label::NonClaim).count();
    Ok(match claims.cmp(&non) {
        std::cmp::Ordering::Greater => Label::Claim,
        std::cmp::Ordering::Less => Label::NonClaim,
        std::cmp::Ordering::Equal => Label::Obscure,
    })
}
