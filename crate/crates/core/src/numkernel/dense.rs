use rand::Rng;

use crate::error::{Error, Result};

use super::{Matrix, NodeId, ParamId, ParamSet, Tape};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DenseLayer {
    pub weight: ParamId,
    pub bias: ParamId,
}

/// Fully connected layers with ReLU between them and an identity output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseStack {
    layers: Vec<DenseLayer>,
}

impl DenseStack {
    /// Adds `widths.len() - 1` layers named `{prefix}.{i}.w` / `{prefix}.{i}.b`
    /// with Glorot-uniform weights and zero biases.
    pub fn init<R: Rng + ?Sized>(
        params: &mut ParamSet,
        prefix: &str,
        widths: &[usize],
        rng: &mut R,
    ) -> Self {
        Self::build(params, prefix, widths, |r, c| {
            Matrix::glorot_uniform(r, c, rng)
        })
    }

    /// Same layout as [`DenseStack::init`] with every weight zero.
    pub fn zeros(params: &mut ParamSet, prefix: &str, widths: &[usize]) -> Self {
        Self::build(params, prefix, widths, Matrix::zeros)
    }

    fn build(
        params: &mut ParamSet,
        prefix: &str,
        widths: &[usize],
        mut weight: impl FnMut(usize, usize) -> Matrix,
    ) -> Self {
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| DenseLayer {
                weight: params.push(format!("{prefix}.{i}.w"), weight(w[0], w[1])),
                bias: params.push(format!("{prefix}.{i}.b"), Matrix::zeros(1, w[1])),
            })
            .collect();
        Self { layers }
    }

    /// Re-binds a stack to blocks already present in `params`.
    pub fn bind(params: &ParamSet, prefix: &str, depth: usize) -> Result<Self> {
        let layers = (0..depth)
            .map(|i| {
                let find = |suffix: &str| {
                    let name = format!("{prefix}.{i}.{suffix}");
                    params
                        .find(&name)
                        .ok_or_else(|| Error::Artifact(format!("missing parameter block '{name}'")))
                };
                Ok(DenseLayer {
                    weight: find("w")?,
                    bias: find("b")?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let stack = Self { layers };
        stack.validate(params)?;
        Ok(stack)
    }

    fn validate(&self, params: &ParamSet) -> Result<()> {
        let mut prev: Option<usize> = None;
        for l in &self.layers {
            let w = params.get(l.weight);
            let b = params.get(l.bias);
            if b.shape() != (1, w.cols()) || prev.is_some_and(|p| p != w.rows()) {
                return Err(Error::Artifact(format!(
                    "layer blocks '{}' {:?} and '{}' {:?} do not chain",
                    params.name(l.weight),
                    w.shape(),
                    params.name(l.bias),
                    b.shape()
                )));
            }
            prev = Some(w.cols());
        }
        Ok(())
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Input width followed by every layer's output width.
    pub fn widths(&self, params: &ParamSet) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.layers.len() + 1);
        if let Some(first) = self.layers.first() {
            out.push(params.get(first.weight).rows());
        }
        out.extend(self.layers.iter().map(|l| params.get(l.weight).cols()));
        out
    }

    pub fn forward_tape<'p>(
        &self,
        tape: &mut Tape<'p>,
        params: &'p ParamSet,
        x: NodeId,
    ) -> Result<NodeId> {
        let mut h = x;
        for (i, l) in self.layers.iter().enumerate() {
            let w = tape.param(params, l.weight);
            let b = tape.param(params, l.bias);
            h = tape.affine(h, w, b)?;
            if i + 1 < self.layers.len() {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }

    /// Tape-free forward pass for inference.
    pub fn forward(&self, params: &ParamSet, x: &Matrix) -> Result<Matrix> {
        let mut h = x.clone();
        for (i, l) in self.layers.iter().enumerate() {
            h = h.affine(params.get(l.weight), params.get(l.bias))?;
            if i + 1 < self.layers.len() {
                h.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        Ok(h)
    }
}
