use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{FlatFeatures, FLAT_WIDTH};

const TAU: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrConfig {
    /// Box constraint.
    pub c: f64,
    /// Tube half-width, mAh/g.
    pub epsilon: f64,
    /// RBF width in `exp(-gamma·|a-b|²)`, on standardized features.
    pub gamma: f64,
    /// Iteration cap, in multiples of the number of dual variables.
    pub max_passes: usize,
    /// Stop once the maximal KKT violation falls below this.
    pub tolerance: f64,
}

impl Default for SvrConfig {
    fn default() -> Self {
        Self {
            c: 100.0,
            epsilon: 5.0,
            gamma: 0.1,
            max_passes: 1000,
            tolerance: 1e-3,
        }
    }
}

/// ε-SVR with an RBF kernel over z-scored flat features.
#[derive(Clone, Debug, PartialEq)]
pub struct SvrModel {
    pub config: SvrConfig,
    pub mean: [f64; FLAT_WIDTH],
    pub scale: [f64; FLAT_WIDTH],
    /// Standardized training points with nonzero coefficient.
    pub support: Vec<[f64; FLAT_WIDTH]>,
    /// α_i − α*_i per support vector, each within [−C, C].
    pub coef: Vec<f64>,
    /// Decision value is Σ coef·K − rho.
    pub rho: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Maximal KKT violation at exit.
    pub kkt_residual: f64,
}

impl SvrModel {
    fn standardize(&self, x: &FlatFeatures) -> [f64; FLAT_WIDTH] {
        let mut z = [0.0; FLAT_WIDTH];
        for k in 0..FLAT_WIDTH {
            z[k] = (x.0[k] - self.mean[k]) / self.scale[k];
        }
        z
    }

    pub fn predict(&self, x: &FlatFeatures) -> f64 {
        let z = self.standardize(x);
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, c)| c * rbf(self.config.gamma, s, &z))
            .sum::<f64>()
            - self.rho
    }
}

fn rbf(gamma: f64, a: &[f64; FLAT_WIDTH], b: &[f64; FLAT_WIDTH]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d).exp()
}

/// Sequential minimal optimization on the 2n-variable dual with
/// second-order working-set selection.
pub fn train_svr(data: &[(FlatFeatures, f64)], config: &SvrConfig) -> Result<SvrModel> {
    if data.is_empty() {
        return Err(Error::Input("SVR needs training data".into()));
    }
    if !(config.c > 0.0 && config.gamma > 0.0 && config.epsilon >= 0.0 && config.tolerance > 0.0) {
        return Err(Error::Config(
            "SVR needs C > 0, gamma > 0, epsilon >= 0 and a positive tolerance".into(),
        ));
    }
    if data
        .iter()
        .any(|(x, y)| !y.is_finite() || x.0.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::Input("SVR data contains non-finite values".into()));
    }

    let n = data.len();
    let mut mean = [0.0; FLAT_WIDTH];
    let mut scale = [1.0; FLAT_WIDTH];
    for k in 0..FLAT_WIDTH {
        mean[k] = data.iter().map(|(x, _)| x.0[k]).sum::<f64>() / n as f64;
        let var = data
            .iter()
            .map(|(x, _)| (x.0[k] - mean[k]).powi(2))
            .sum::<f64>()
            / n as f64;
        if var.sqrt() > 1e-12 {
            scale[k] = var.sqrt();
        }
    }
    let z: Vec<[f64; FLAT_WIDTH]> = data
        .iter()
        .map(|(x, _)| {
            let mut out = [0.0; FLAT_WIDTH];
            for k in 0..FLAT_WIDTH {
                out[k] = (x.0[k] - mean[k]) / scale[k];
            }
            out
        })
        .collect();
    let kernel: Vec<f64> = (0..n * n)
        .map(|ij| rbf(config.gamma, &z[ij / n], &z[ij % n]))
        .collect();
    let k = |a: usize, b: usize| kernel[(a % n) * n + b % n];

    // Variables 0..n carry sign +1, n..2n sign −1.
    let l = 2 * n;
    let c = config.c;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = |a: usize, b: usize| sign(a) * sign(b) * k(a, b);
    let mut alpha = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| {
            let y = data[t % n].1;
            if t < n {
                config.epsilon - y
            } else {
                config.epsilon + y
            }
        })
        .collect();

    let max_iter = config.max_passes.saturating_mul(l).max(1);
    let mut iterations = 0;
    let mut converged = false;
    let mut residual;
    loop {
        // Maximal violating pair, second-order choice of j.
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax2 = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..l {
            if sign(t) > 0.0 {
                if alpha[t] < c && -grad[t] >= gmax {
                    gmax = -grad[t];
                    i_sel = Some(t);
                }
            } else if alpha[t] > 0.0 && grad[t] >= gmax {
                gmax = grad[t];
                i_sel = Some(t);
            }
        }
        let mut j_sel = None;
        let mut obj_min = f64::INFINITY;
        if let Some(i) = i_sel {
            let yi = sign(i);
            for t in 0..l {
                let (viol, quad) = if sign(t) > 0.0 {
                    if alpha[t] <= 0.0 {
                        continue;
                    }
                    gmax2 = gmax2.max(grad[t]);
                    (gmax + grad[t], q(i, i) + q(t, t) - 2.0 * yi * q(i, t))
                } else {
                    if alpha[t] >= c {
                        continue;
                    }
                    gmax2 = gmax2.max(-grad[t]);
                    (gmax - grad[t], q(i, i) + q(t, t) + 2.0 * yi * q(i, t))
                };
                if viol > 0.0 {
                    let obj = -(viol * viol) / if quad > 0.0 { quad } else { TAU };
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        residual = gmax + gmax2;
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            converged = true;
            break;
        };
        if residual < config.tolerance {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if sign(i) != sign(j) {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..l {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }

    // Offset from free variables, else the midpoint of the feasible range.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_n) = (0.0, 0usize);
    for t in 0..l {
        let yg = sign(t) * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_n += 1;
        }
    }
    let rho = if free_n > 0 {
        free_sum / free_n as f64
    } else {
        0.5 * (ub + lb)
    };

    let mut support = Vec::new();
    let mut coef = Vec::new();
    for i in 0..n {
        let beta = alpha[i] - alpha[i + n];
        if beta != 0.0 {
            support.push(z[i]);
            coef.push(beta);
        }
    }
    Ok(SvrModel {
        config: config.clone(),
        mean,
        scale,
        support,
        coef,
        rho,
        converged,
        iterations,
        kkt_residual: residual,
    })
}
