use crate::error::{Error, Result};

use super::{Gradients, Matrix, ParamSet};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators for one [`ParamSet`].
#[derive(Clone, Debug)]
pub struct AdamState {
    config: AdamConfig,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Self {
        let zeros = || {
            params
                .iter()
                .map(|(_, _, m)| Matrix::zeros(m.rows(), m.cols()))
                .collect::<Vec<_>>()
        };
        Self {
            config,
            first: zeros(),
            second: zeros(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> AdamConfig {
        self.config
    }

    /// One bias-corrected Adam update. Gradients are checked for finiteness
    /// before any parameter is touched.
    pub fn step(&mut self, params: &mut ParamSet, grads: &Gradients, lr: f64) -> Result<()> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        if !grads.matches(params) || self.first.len() != params.len() {
            return Err(Error::State(
                "parameter, gradient and optimizer layouts disagree".into(),
            ));
        }
        for (id, g) in grads.iter() {
            if !g.is_finite() {
                return Err(Error::NonFinite(format!(
                    "gradient of parameter block '{}'",
                    params.name(id)
                )));
            }
        }

        self.step += 1;
        let AdamConfig {
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        let step_size = lr / bc1;
        let inv_sqrt_bc2 = 1.0 / bc2.sqrt();

        for (i, (id, g)) in grads.iter().enumerate() {
            let p = params.get_mut(id).as_mut_slice();
            let m = self.first[i].as_mut_slice();
            let v = self.second[i].as_mut_slice();
            for (((p, m), v), &g) in p.iter_mut().zip(m).zip(v).zip(g.as_slice()) {
                *m = flush(beta1 * *m + (1.0 - beta1) * g);
                *v = flush(beta2 * *v + (1.0 - beta2) * g * g);
                *p -= step_size * *m / ((*v).sqrt() * inv_sqrt_bc2 + epsilon);
            }
        }
        Ok(())
    }
}

/// Moments of units whose gradient stays zero decay geometrically and then
/// stick at the smallest subnormal (0.9 × 5e-324 rounds back up), which makes
/// every later step run on slow subnormal arithmetic. Anything this small
/// contributes nothing measurable to the update.
#[inline]
fn flush(x: f64) -> f64 {
    if x.abs() < 1e-200 {
        0.0
    } else {
        x
    }
}
