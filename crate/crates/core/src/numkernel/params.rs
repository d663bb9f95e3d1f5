use crate::error::{Error, Result};

use super::Matrix;

/// Index of a parameter block inside a [`ParamSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

/// Named, ordered collection of trainable matrices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    values: Vec<Matrix>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: Matrix) -> ParamId {
        self.names.push(name.into());
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Matrix)> {
        self.names
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(i, (n, v))| (ParamId(i), n.as_str(), v))
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Matrix::len).sum()
    }

    /// Replaces every block's values with those of `other`, which must have
    /// the same layout.
    pub fn copy_from(&mut self, other: &ParamSet) -> Result<()> {
        if self.names != other.names {
            return Err(Error::State("parameter layouts differ".into()));
        }
        for (dst, src) in self.values.iter_mut().zip(&other.values) {
            if dst.shape() != src.shape() {
                return Err(Error::Shape {
                    op: "ParamSet::copy_from",
                    left_name: "destination",
                    left: dst.shape(),
                    right_name: "source",
                    right: src.shape(),
                });
            }
            dst.as_mut_slice().copy_from_slice(src.as_slice());
        }
        Ok(())
    }
}

/// Gradient blocks aligned with a [`ParamSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    blocks: Vec<Matrix>,
}

impl Gradients {
    pub fn zeros_like(params: &ParamSet) -> Self {
        Self {
            blocks: params
                .values
                .iter()
                .map(|m| Matrix::zeros(m.rows(), m.cols()))
                .collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.blocks[id.0]
    }

    pub fn block_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.blocks[id.0]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Matrix)> {
        self.blocks.iter().enumerate().map(|(i, m)| (ParamId(i), m))
    }

    pub fn fill_zero(&mut self) {
        for b in &mut self.blocks {
            b.as_mut_slice().fill(0.0);
        }
    }

    /// `self += other`, block by block.
    pub fn accumulate(&mut self, other: &Gradients) -> Result<()> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::State("gradient layouts differ".into()));
        }
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            if a.shape() != b.shape() {
                return Err(Error::Shape {
                    op: "Gradients::accumulate",
                    left_name: "accumulator",
                    left: a.shape(),
                    right_name: "gradient",
                    right: b.shape(),
                });
            }
            super::matrix::axpy(1.0, b.as_slice(), a.as_mut_slice());
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for b in &mut self.blocks {
            b.as_mut_slice().iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub(crate) fn matches(&self, params: &ParamSet) -> bool {
        self.blocks.len() == params.values.len()
            && self
                .blocks
                .iter()
                .zip(&params.values)
                .all(|(g, p)| g.shape() == p.shape())
    }
}
