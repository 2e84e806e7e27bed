use crate::error::{PaintError, Result};
use crate::stroke::PARAM_COUNT;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> Self {
        AdamHyper {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update. Parameters are not projected here; the
/// optimizer clamps strokes afterwards.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    hyper: &AdamHyper,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(PaintError::shape(format!(
            "adam: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if let Some(k) = grads.iter().position(|g| !g.is_finite()) {
        return Err(PaintError::NumericFault {
            patch: 0,
            stroke: k / PARAM_COUNT,
            iteration: None,
            detail: format!(
                "non-finite gradient {} in slot {}",
                grads[k],
                k % PARAM_COUNT
            ),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - hyper.beta1.powi(t);
    let bc2 = 1.0 - hyper.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.eps);
    }
    Ok(())
}
