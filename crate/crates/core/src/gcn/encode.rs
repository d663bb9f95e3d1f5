use std::collections::HashMap;
use std::sync::Mutex;

use crate::chem::{canonical_constituents, featurize, Constituent, CONSTITUENT_COUNT};
use crate::error::{Error, Result};

use super::model::{GcnModel, GraphRepresentation};

/// Encodes one constituent with a frozen encoder.
pub fn encode_constituent(c: &Constituent, model: &GcnModel) -> Result<GraphRepresentation> {
    if !model.is_frozen() {
        return Err(Error::State(
            "encoder must be frozen before encoding constituents".into(),
        ));
    }
    model.forward(&featurize(&c.graph))
}

/// Memoizes representations per (constituent, encoder version).
#[derive(Debug, Default)]
pub struct GrCache {
    entries: Mutex<HashMap<(String, String), GraphRepresentation>>,
}

impl GrCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn encode(&self, c: &Constituent, model: &GcnModel) -> Result<GraphRepresentation> {
        let version = model.version().ok_or_else(|| {
            Error::State("encoder must be frozen before encoding constituents".into())
        })?;
        let key = (c.name.to_string(), version.to_string());
        if let Some(gr) = self.entries.lock().unwrap().get(&key) {
            return Ok(gr.clone());
        }
        let gr = encode_constituent(c, model)?;
        self.entries.lock().unwrap().insert(key, gr.clone());
        Ok(gr)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Representations of the eight registry constituents, in registry order,
/// tagged with the encoder version that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct GrSet {
    version: String,
    grs: Vec<GraphRepresentation>,
}

impl GrSet {
    pub fn new(version: impl Into<String>, grs: Vec<GraphRepresentation>) -> Result<Self> {
        if grs.len() != CONSTITUENT_COUNT {
            return Err(Error::Input(format!(
                "expected {CONSTITUENT_COUNT} graph representations, got {}",
                grs.len()
            )));
        }
        Ok(Self {
            version: version.into(),
            grs,
        })
    }

    pub fn from_model(model: &GcnModel, cache: &GrCache) -> Result<Self> {
        let grs = canonical_constituents()
            .iter()
            .map(|c| cache.encode(c, model))
            .collect::<Result<Vec<_>>>()?;
        Self::new(model.version().unwrap_or_default(), grs)
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn get(&self, i: usize) -> &GraphRepresentation {
        &self.grs[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &GraphRepresentation> {
        self.grs.iter()
    }
}
