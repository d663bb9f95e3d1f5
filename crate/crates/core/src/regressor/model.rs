use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::formulation::{DescriptorConvention, DescriptorVector};
use crate::numkernel::{DenseStack, Matrix, ParamSet};

pub const HIDDEN_WIDTHS: [usize; 3] = [1000, 500, 100];
pub const PREFIX: &str = "reg";

/// Dense capacity regressor plus the descriptor convention it was trained
/// on.
#[derive(Clone, Debug)]
pub struct RegressorModel {
    params: ParamSet,
    stack: DenseStack,
    convention: DescriptorConvention,
    gr_version: String,
}

impl RegressorModel {
    /// Glorot-initialized network with the standard hidden widths.
    pub fn init(seed: u64, convention: DescriptorConvention, gr_version: &str) -> Self {
        Self::init_with_hidden(seed, convention, gr_version, &HIDDEN_WIDTHS)
    }

    /// Glorot-initialized network with custom hidden widths, for small
    /// experiments.
    pub fn init_with_hidden(
        seed: u64,
        convention: DescriptorConvention,
        gr_version: &str,
        hidden: &[usize],
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let stack = DenseStack::init(
            &mut params,
            PREFIX,
            &widths(convention.width(), hidden),
            &mut rng,
        );
        Self {
            params,
            stack,
            convention,
            gr_version: gr_version.to_string(),
        }
    }

    /// Network over bare feature rows of width `input`, for experiments
    /// outside the descriptor pipeline.
    pub fn init_for_width(seed: u64, input: usize, hidden: &[usize]) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let stack = DenseStack::init(&mut params, PREFIX, &widths(input, hidden), &mut rng);
        Self {
            params,
            stack,
            convention: DescriptorConvention::default(),
            gr_version: String::new(),
        }
    }

    /// Every weight and bias zero.
    pub fn zeros(convention: DescriptorConvention, gr_version: &str) -> Self {
        let mut params = ParamSet::new();
        let stack = DenseStack::zeros(
            &mut params,
            PREFIX,
            &widths(convention.width(), &HIDDEN_WIDTHS),
        );
        Self {
            params,
            stack,
            convention,
            gr_version: gr_version.to_string(),
        }
    }

    /// Rebinds stored blocks `reg.{i}.w` / `reg.{i}.b`.
    pub fn from_params(
        params: ParamSet,
        depth: usize,
        convention: DescriptorConvention,
        gr_version: &str,
    ) -> Result<Self> {
        let stack = DenseStack::bind(&params, PREFIX, depth)?;
        let w = stack.widths(&params);
        if w.first() != Some(&convention.width()) || w.last() != Some(&1) {
            return Err(Error::Artifact(format!(
                "regressor widths {w:?} do not fit a {}-wide descriptor and scalar output",
                convention.width()
            )));
        }
        Ok(Self {
            params,
            stack,
            convention,
            gr_version: gr_version.to_string(),
        })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub(crate) fn stack(&self) -> &DenseStack {
        &self.stack
    }

    pub fn depth(&self) -> usize {
        self.stack.layers().len()
    }

    /// Input width, hidden widths, output width.
    pub fn widths(&self) -> Vec<usize> {
        self.stack.widths(&self.params)
    }

    pub fn convention(&self) -> DescriptorConvention {
        self.convention
    }

    pub fn gr_version(&self) -> &str {
        &self.gr_version
    }

    /// Refuses descriptors assembled under another convention or encoder.
    pub fn check_descriptor(&self, d: &DescriptorVector) -> Result<()> {
        if d.convention() != self.convention {
            return Err(Error::Convention(format!(
                "model expects loading={} separator={}, descriptor has loading={} separator={}",
                self.convention.loading,
                self.convention.separator,
                d.convention().loading,
                d.convention().separator
            )));
        }
        if d.gr_version() != self.gr_version {
            return Err(Error::Convention(format!(
                "model expects encoder version {}, descriptor built with {}",
                self.gr_version,
                d.gr_version()
            )));
        }
        Ok(())
    }

    pub fn predict(&self, d: &DescriptorVector) -> Result<f64> {
        self.check_descriptor(d)?;
        self.predict_raw(d.as_slice())
    }

    /// Prediction for a bare feature row of the model's input width.
    pub fn predict_raw(&self, x: &[f64]) -> Result<f64> {
        let out = self.stack.forward(&self.params, &Matrix::row_vector(x))?;
        Ok(out.as_slice()[0])
    }
}

fn widths(input: usize, hidden: &[usize]) -> Vec<usize> {
    let mut w = vec![input];
    w.extend_from_slice(hidden);
    w.push(1);
    w
}

/// Free-function form of [`RegressorModel::predict`].
pub fn predict(model: &RegressorModel, d: &DescriptorVector) -> Result<f64> {
    model.predict(d)
}
