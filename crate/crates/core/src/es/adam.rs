use crate::error::{Error, Result};

/// Adam moments, step count and hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        AdamState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }
}

/// One bias-corrected Adam step in the ascent direction:
/// `θ += lr * m̂ / (sqrt(v̂) + ε)`.
pub fn adam_update(state: &mut AdamState, theta: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
    if theta.len() != state.dim() {
        return Err(Error::dim("adam parameters", state.dim(), theta.len()));
    }
    if grad.len() != state.dim() {
        return Err(Error::dim("adam gradient", state.dim(), grad.len()));
    }
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for i in 0..theta.len() {
        let g = grad[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        theta[i] += lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}
