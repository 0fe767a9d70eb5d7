use crate::error::{Error, Result};
use crate::nn::{ParamId, ParamStore, Rng};

#[derive(Clone, Copy, Debug)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub step: f64,
    /// Coordinates probed per parameter tensor (all of them when the tensor is smaller).
    pub samples_per_param: usize,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-5,
            samples_per_param: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub coords_checked: usize,
}

/// Compares analytic gradients against central finite differences.
///
/// `loss(store, backward)` must return the scalar loss and, when `backward`
/// is true, accumulate `dL/dparam` into the store's gradient buffers. The
/// error per coordinate is `|g_a - g_fd| / max(1, |g_a|, |g_fd|)`.
pub fn gradient_check<F>(store: &mut ParamStore, mut loss: F, rng: &mut Rng, cfg: &GradCheckConfig) -> Result<GradCheckReport>
where
    F: FnMut(&mut ParamStore, bool) -> Result<f64>,
{
    store.zero_grads();
    let base = loss(store, true)?;
    if !base.is_finite() {
        return Err(Error::Numeric("gradient check loss is not finite".into()));
    }
    let analytic: Vec<(ParamId, Vec<f64>)> = store
        .ids()
        .map(|id| (id, store.grad(id).data().to_vec()))
        .collect();
    store.zero_grads();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        coords_checked: 0,
    };
    for (id, grads) in &analytic {
        for coord in pick_coords(grads, cfg.samples_per_param, rng) {
            let original = store.value(*id).data()[coord];
            store.value_mut(*id).data_mut()[coord] = original + cfg.step;
            let up = loss(store, false)?;
            store.value_mut(*id).data_mut()[coord] = original - cfg.step;
            let down = loss(store, false)?;
            store.value_mut(*id).data_mut()[coord] = original;
            if !up.is_finite() || !down.is_finite() {
                return Err(Error::Numeric("gradient check loss is not finite".into()));
            }
            let numeric = (up - down) / (2.0 * cfg.step);
            let ga = grads[coord];
            let err = (ga - numeric).abs() / 1f64.max(ga.abs()).max(numeric.abs());
            report.coords_checked += 1;
            if report.worst_param.is_empty() || err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst_param = store.name(*id).to_string();
            }
        }
    }
    Ok(report)
}

/// Half the budget goes to coordinates with a non-zero analytic gradient
/// (sparse embedding tables would otherwise be probed only where both sides are 0).
fn pick_coords(grads: &[f64], budget: usize, rng: &mut Rng) -> Vec<usize> {
    if grads.len() <= budget {
        return (0..grads.len()).collect();
    }
    let nonzero: Vec<usize> = (0..grads.len()).filter(|&i| grads[i] != 0.0).collect();
    let mut picked = Vec::with_capacity(budget);
    let take = (budget / 2).min(nonzero.len());
    for i in rng.sample_indices(nonzero.len(), take) {
        picked.push(nonzero[i]);
    }
    while picked.len() < budget {
        let c = rng.below(grads.len());
        if !picked.contains(&c) {
            picked.push(c);
        }
    }
    picked
}
