use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }
}

/// Bias-corrected Adam update. `epoch` and `batch` only label errors.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    epoch: usize,
    batch: usize,
) -> Result<()> {
    check_len("Adam gradient", params.len(), grads.len())?;
    check_len("Adam state", params.len(), state.m.len())?;
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::Training {
            epoch,
            batch,
            reason: format!("non-finite gradient at parameter {i}: {}", grads[i]),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    if let Some(i) = params.iter().position(|p| !p.is_finite()) {
        return Err(Error::Training {
            epoch,
            batch,
            reason: format!("parameter {i} became non-finite"),
        });
    }
    Ok(())
}

/// Halves the learning rate after `patience` epochs without validation
/// improvement and stops once it reaches `lr_min` or after `max_epochs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub lr: f64,
    pub lr_min: f64,
    pub factor: f64,
    pub patience: usize,
    pub warmup: usize,
    pub max_epochs: usize,
    pub best: Option<f64>,
    pub since_improvement: usize,
}

const IMPROVEMENT_REL: f64 = 1e-8;

impl LrSchedule {
    pub fn new(lr: f64, patience: usize, max_epochs: usize) -> Self {
        Self {
            lr,
            lr_min: 1e-7,
            factor: 2.0,
            patience,
            warmup: 0,
            max_epochs,
            best: None,
            since_improvement: 0,
        }
    }

    /// Records the validation loss of the `epoch`-th completed epoch
    /// (1-based). Returns `(improved, stop)`.
    pub fn update(&mut self, val_loss: f64, epoch: usize) -> (bool, bool) {
        let improved = match self.best {
            None => !val_loss.is_nan(),
            Some(best) => val_loss < best - IMPROVEMENT_REL * best.abs(),
        };
        if improved {
            self.best = Some(val_loss);
            self.since_improvement = 0;
        } else if epoch > self.warmup {
            self.since_improvement += 1;
            if self.since_improvement >= self.patience {
                self.lr = (self.lr / self.factor).max(self.lr_min);
                self.since_improvement = 0;
            }
        }
        let stop = self.lr <= self.lr_min || epoch >= self.max_epochs;
        (improved, stop)
    }
}

pub fn schedule_update(schedule: &mut LrSchedule, val_loss: f64, epoch: usize) -> bool {
    schedule.update(val_loss, epoch).1
}
