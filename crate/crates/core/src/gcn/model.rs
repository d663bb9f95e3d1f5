use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::chem::{FeaturizedGraph, NODE_FEATURES};
use crate::error::{Error, Result};
use crate::numkernel::{DenseStack, Matrix, NodeId, ParamId, ParamSet, Tape};

pub const CONV_HIDDEN: usize = 64;
pub const GR_WIDTH: usize = 100;
pub const HEAD_HIDDEN: usize = 32;
pub const LABEL_COUNT: usize = 3;

/// 100-dimensional encoding of one molecule.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphRepresentation(Vec<f64>);

impl GraphRepresentation {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != GR_WIDTH {
            return Err(Error::Input(format!(
                "graph representation must have {GR_WIDTH} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("graph representation".into()));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-label mean and standard deviation used to standardize pretraining
/// targets.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelStats {
    pub mean: [f64; LABEL_COUNT],
    pub std: [f64; LABEL_COUNT],
}

impl Default for LabelStats {
    fn default() -> Self {
        Self {
            mean: [0.0; LABEL_COUNT],
            std: [1.0; LABEL_COUNT],
        }
    }
}

/// Two graph-convolution layers (F→64→100, no bias, ReLU) with mean-pool
/// readout, plus a 100→32→3 head used only while pretraining.
#[derive(Clone, Debug)]
pub struct GcnModel {
    params: ParamSet,
    conv: [ParamId; 2],
    head: DenseStack,
    label_stats: LabelStats,
    version: Option<String>,
}

impl GcnModel {
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let c0 = params.push(
            "gcn.conv.0",
            Matrix::glorot_uniform(NODE_FEATURES, CONV_HIDDEN, &mut rng),
        );
        let c1 = params.push(
            "gcn.conv.1",
            Matrix::glorot_uniform(CONV_HIDDEN, GR_WIDTH, &mut rng),
        );
        let head = DenseStack::init(
            &mut params,
            "gcn.head",
            &[GR_WIDTH, HEAD_HIDDEN, LABEL_COUNT],
            &mut rng,
        );
        Self {
            params,
            conv: [c0, c1],
            head,
            label_stats: LabelStats::default(),
            version: None,
        }
    }

    /// Every weight zero; unfrozen.
    pub fn zeros() -> Self {
        let mut params = ParamSet::new();
        let c0 = params.push("gcn.conv.0", Matrix::zeros(NODE_FEATURES, CONV_HIDDEN));
        let c1 = params.push("gcn.conv.1", Matrix::zeros(CONV_HIDDEN, GR_WIDTH));
        let head = DenseStack::zeros(
            &mut params,
            "gcn.head",
            &[GR_WIDTH, HEAD_HIDDEN, LABEL_COUNT],
        );
        Self {
            params,
            conv: [c0, c1],
            head,
            label_stats: LabelStats::default(),
            version: None,
        }
    }

    /// Rebuilds a model from stored blocks; frozen if `frozen` is set.
    pub fn from_params(params: ParamSet, label_stats: LabelStats, frozen: bool) -> Result<Self> {
        let find = |name: &str| {
            params
                .find(name)
                .ok_or_else(|| Error::Artifact(format!("missing parameter block '{name}'")))
        };
        let conv = [find("gcn.conv.0")?, find("gcn.conv.1")?];
        let head = DenseStack::bind(&params, "gcn.head", 2)?;
        let expect = [
            (conv[0], (NODE_FEATURES, CONV_HIDDEN)),
            (conv[1], (CONV_HIDDEN, GR_WIDTH)),
        ];
        for (id, shape) in expect {
            if params.get(id).shape() != shape {
                return Err(Error::Artifact(format!(
                    "block '{}' has shape {:?}, expected {shape:?}",
                    params.name(id),
                    params.get(id).shape()
                )));
            }
        }
        if head.widths(&params) != [GR_WIDTH, HEAD_HIDDEN, LABEL_COUNT] {
            return Err(Error::Artifact(
                "pretraining head has unexpected widths".into(),
            ));
        }
        let mut m = Self {
            params,
            conv,
            head,
            label_stats,
            version: None,
        };
        if frozen {
            m.freeze();
        }
        Ok(m)
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> Result<&mut ParamSet> {
        if self.is_frozen() {
            return Err(Error::State("encoder is frozen".into()));
        }
        Ok(&mut self.params)
    }

    pub fn label_stats(&self) -> &LabelStats {
        &self.label_stats
    }

    pub(crate) fn set_label_stats(&mut self, stats: LabelStats) {
        self.label_stats = stats;
    }

    pub fn is_frozen(&self) -> bool {
        self.version.is_some()
    }

    /// Content hash of the weights, available once frozen.
    pub fn version(&self) -> Option<&str> {
        self.version.as_deref()
    }

    pub fn freeze(&mut self) {
        let mut h = Sha256::new();
        for (_, name, m) in self.params.iter() {
            h.update(name.as_bytes());
            h.update((m.rows() as u64).to_le_bytes());
            h.update((m.cols() as u64).to_le_bytes());
            for v in m.as_slice() {
                h.update(v.to_le_bytes());
            }
        }
        let digest = h.finalize();
        self.version = Some(digest[..8].iter().map(|b| format!("{b:02x}")).collect());
    }

    pub(crate) fn head(&self) -> &DenseStack {
        &self.head
    }

    fn check_width(&self, fg: &FeaturizedGraph) -> Result<()> {
        let expected = self.params.get(self.conv[0]).rows();
        if fg.nodes.cols() != expected {
            return Err(Error::Shape {
                op: "gcn_forward",
                left_name: "node features",
                left: fg.nodes.shape(),
                right_name: "first conv weight",
                right: self.params.get(self.conv[0]).shape(),
            });
        }
        Ok(())
    }

    /// Records the encoder on `tape` and returns the pooled 1x100 node.
    pub(crate) fn encode_tape<'p>(
        &self,
        params: &'p ParamSet,
        tape: &mut Tape<'p>,
        fg: &'p FeaturizedGraph,
    ) -> Result<NodeId> {
        self.check_width(fg)?;
        let adj = tape.input_ref(&fg.adjacency);
        let mut h = tape.input_ref(&fg.nodes);
        for &w in &self.conv {
            let ah = tape.matmul(adj, h)?;
            let wn = tape.param(params, w);
            let z = tape.matmul(ah, wn)?;
            h = tape.relu(z);
        }
        tape.mean_rows(h)
    }

    /// `GR = mean_rows(ReLU(Ã·ReLU(Ã·X·W0)·W1))`.
    pub fn forward(&self, fg: &FeaturizedGraph) -> Result<GraphRepresentation> {
        self.check_width(fg)?;
        let mut h = fg.nodes.clone();
        for &w in &self.conv {
            h = fg.adjacency.matmul(&h)?.matmul(self.params.get(w))?;
            h.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
        }
        GraphRepresentation::new(h.mean_rows().into_vec())
    }

    /// Head prediction in standardized label units.
    pub fn predict_standardized(&self, fg: &FeaturizedGraph) -> Result<[f64; LABEL_COUNT]> {
        let gr = self.forward(fg)?;
        let out = self
            .head
            .forward(&self.params, &Matrix::row_vector(gr.as_slice()))?;
        Ok([out.as_slice()[0], out.as_slice()[1], out.as_slice()[2]])
    }
}

/// Free-function form of [`GcnModel::forward`].
pub fn gcn_forward(fg: &FeaturizedGraph, model: &GcnModel) -> Result<GraphRepresentation> {
    model.forward(fg)
}
