use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{Gradients, ParamId, ParamSet};

/// A scalar loss over a parameter set with an analytic gradient.
pub trait Objective {
    fn loss(&self, params: &ParamSet) -> Result<f64>;
    fn loss_and_grad(&self, params: &ParamSet) -> Result<(f64, Gradients)>;

    /// ReLU activation signs at `params`; empty for smooth objectives.
    fn relu_pattern(&self, _params: &ParamSet) -> Result<Vec<bool>> {
        Ok(Vec::new())
    }
}

/// Outcome of [`fd_check_report`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdReport {
    /// Max relative error over the coordinates that were compared.
    pub max_rel: f64,
    pub compared: usize,
    /// Coordinates whose ±eps perturbation flips a ReLU; the loss is not
    /// differentiable on that interval, so they are left out of `max_rel`.
    pub kinked: usize,
}

/// Which scalar coordinates to probe.
#[derive(Clone, Copy, Debug)]
pub enum Probe {
    All,
    /// `count` coordinates drawn uniformly without replacement.
    Sample {
        count: usize,
        seed: u64,
    },
}

/// Compares the analytic gradient against central differences.
///
/// Returns the max over probed coordinates of
/// `|analytic - cd| / max(|analytic|, |cd|, 1e-12)`.
pub fn fd_check<O: Objective + ?Sized>(
    objective: &O,
    params: &ParamSet,
    eps: f64,
    probe: Probe,
) -> Result<f64> {
    Ok(compare(objective, params, eps, probe, false)?.max_rel)
}

/// [`fd_check`] that skips coordinates whose perturbation crosses a ReLU
/// kink and counts them instead.
pub fn fd_check_report<O: Objective + ?Sized>(
    objective: &O,
    params: &ParamSet,
    eps: f64,
    probe: Probe,
) -> Result<FdReport> {
    compare(objective, params, eps, probe, true)
}

fn compare<O: Objective + ?Sized>(
    objective: &O,
    params: &ParamSet,
    eps: f64,
    probe: Probe,
    skip_kinks: bool,
) -> Result<FdReport> {
    if !(eps > 0.0 && eps <= 1e-2) {
        return Err(Error::Config(format!(
            "fd step must be in (0, 1e-2], got {eps}"
        )));
    }
    let (_, analytic) = objective.loss_and_grad(params)?;
    let pattern = if skip_kinks {
        objective.relu_pattern(params)?
    } else {
        Vec::new()
    };

    let offsets: Vec<(ParamId, usize)> = params
        .iter()
        .flat_map(|(id, _, m)| (0..m.len()).map(move |k| (id, k)))
        .collect();
    let chosen: Vec<(ParamId, usize)> = match probe {
        Probe::All => offsets,
        Probe::Sample { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = sample(&mut rng, offsets.len(), count.min(offsets.len())).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| offsets[i]).collect()
        }
    };

    let mut work = params.clone();
    let mut report = FdReport {
        max_rel: 0.0,
        compared: 0,
        kinked: 0,
    };
    for (id, k) in chosen {
        let base = params.get(id).as_slice()[k];
        let mut flipped = false;
        work.get_mut(id).as_mut_slice()[k] = base + eps;
        let plus = objective.loss(&work)?;
        if skip_kinks {
            flipped |= objective.relu_pattern(&work)? != pattern;
        }
        work.get_mut(id).as_mut_slice()[k] = base - eps;
        let minus = objective.loss(&work)?;
        if skip_kinks {
            flipped |= objective.relu_pattern(&work)? != pattern;
        }
        work.get_mut(id).as_mut_slice()[k] = base;
        if !(plus.is_finite() && minus.is_finite()) {
            return Err(Error::NonFinite(format!(
                "loss at perturbed coordinate {k} of '{}'",
                params.name(id)
            )));
        }
        if flipped {
            report.kinked += 1;
            continue;
        }
        let cd = (plus - minus) / (2.0 * eps);
        let a = analytic.get(id).as_slice()[k];
        let rel = (a - cd).abs() / a.abs().max(cd.abs()).max(1e-12);
        report.max_rel = report.max_rel.max(rel);
        report.compared += 1;
    }
    Ok(report)
}
