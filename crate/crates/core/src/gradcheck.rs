//! Central finite-difference check of the analytic gradients.

use crate::error::{Error, Result};
use crate::nn::{Batch, LossKind, Model};

/// Perturbation used by [`gradient_check`].
pub const DEFAULT_STEP: f64 = 1e-4;

/// Largest parameter count accepted by [`gradient_check`].
pub const MAX_PARAMS: usize = 10_000;

/// Worst relative error between analytic and central-difference gradients.
///
/// Both sides are evaluated in `f64` on a promoted copy of `model`. The relative
/// error of a parameter is `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn gradient_check(model: &Model<f32>, batch: &Batch<f32>, kind: LossKind) -> Result<f64> {
    gradient_check_with_step(model, batch, kind, DEFAULT_STEP)
}

pub fn gradient_check_with_step(model: &Model<f32>, batch: &Batch<f32>, kind: LossKind, step: f64) -> Result<f64> {
    if model.num_params() > MAX_PARAMS {
        return Err(Error::Config(alloc::format!(
            "gradient check limited to {MAX_PARAMS} parameters, model has {}",
            model.num_params()
        )));
    }
    let mut probe: Model<f64> = model.cast();
    let batch: Batch<f64> = batch.cast();
    let (_, grads) = probe.loss_and_gradients(&batch, kind)?;
    let analytic = grads.flatten();

    let mut worst = 0.0f64;
    for (idx, &a) in analytic.iter().enumerate() {
        let original = *probe.param_mut(idx).expect("index within model");
        *probe.param_mut(idx).expect("index within model") = original + step;
        let plus = probe.loss(&batch, kind)?;
        *probe.param_mut(idx).expect("index within model") = original - step;
        let minus = probe.loss(&batch, kind)?;
        *probe.param_mut(idx).expect("index within model") = original;

        let numeric = (plus - minus) / (2.0 * step);
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}
