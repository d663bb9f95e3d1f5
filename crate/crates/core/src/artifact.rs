//! Single-file model container.
//!
//! ```text
//! FSMODEL 1
//! key=value            (sorted by key)
//! ...
//! end-manifest
//! block <name> <rows> <cols>
//! <rows*cols little-endian f64>
//! ...
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::formulation::DescriptorConvention;
use crate::gcn::{GcnModel, GrCache, GrSet, LabelStats, LABEL_COUNT};
use crate::numkernel::{Matrix, ParamSet};
use crate::regressor::RegressorModel;

pub const MAGIC: &str = "FSMODEL 1";
const END_MANIFEST: &str = "end-manifest";
const LABEL_STATS_BLOCK: &str = "encoder.label_stats";
const RESERVED_PREFIXES: [&str; 3] = ["encoder.", "descriptor.", "regressor."];

#[derive(Clone, Debug)]
pub struct ModelArtifact {
    encoder: GcnModel,
    regressor: Option<RegressorModel>,
    metadata: BTreeMap<String, String>,
}

fn checksum(params: &ParamSet) -> String {
    let mut h = Sha256::new();
    for (_, name, m) in params.iter() {
        h.update(name.as_bytes());
        h.update((m.rows() as u64).to_le_bytes());
        h.update((m.cols() as u64).to_le_bytes());
        for v in m.as_slice() {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn check_key(key: &str) -> Result<()> {
    if key.is_empty() || key.contains(['=', '\n', '\r']) {
        return Err(Error::Artifact(format!("invalid manifest key {key:?}")));
    }
    Ok(())
}

impl ModelArtifact {
    /// Wraps a frozen encoder.
    pub fn new(encoder: GcnModel) -> Result<Self> {
        if !encoder.is_frozen() {
            return Err(Error::State("only a frozen encoder can be stored".into()));
        }
        Ok(Self {
            encoder,
            regressor: None,
            metadata: BTreeMap::new(),
        })
    }

    /// Attaches a regressor trained on this encoder's representations.
    pub fn with_regressor(mut self, regressor: RegressorModel) -> Result<Self> {
        let version = self.encoder.version().unwrap_or_default();
        if regressor.gr_version() != version {
            return Err(Error::Convention(format!(
                "regressor was trained on encoder {}, artifact holds {version}",
                regressor.gr_version()
            )));
        }
        self.regressor = Some(regressor);
        Ok(self)
    }

    /// Free-form creation metadata (seed, config hash, ...). Keys under
    /// `encoder.`, `descriptor.` and `regressor.` are reserved.
    pub fn set_meta(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        check_key(key)?;
        if RESERVED_PREFIXES.iter().any(|p| key.starts_with(p)) {
            return Err(Error::Artifact(format!("manifest key '{key}' is reserved")));
        }
        let value = value.into();
        if value.contains(['\n', '\r']) {
            return Err(Error::Artifact(format!(
                "manifest value for '{key}' spans lines"
            )));
        }
        self.metadata.insert(key.to_string(), value);
        Ok(())
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    pub fn encoder(&self) -> &GcnModel {
        &self.encoder
    }

    pub fn regressor(&self) -> Option<&RegressorModel> {
        self.regressor.as_ref()
    }

    /// The regressor, or a state error naming the missing stage.
    pub fn require_regressor(&self) -> Result<&RegressorModel> {
        self.regressor.as_ref().ok_or_else(|| {
            Error::State("model artifact holds no trained regressor; run train first".into())
        })
    }

    /// Representations of the registry constituents under this encoder.
    pub fn gr_set(&self) -> Result<GrSet> {
        GrSet::from_model(&self.encoder, &GrCache::new())
    }

    /// Every manifest entry, reserved ones included.
    pub fn manifest(&self) -> BTreeMap<String, String> {
        let mut m = self.metadata.clone();
        m.insert(
            "encoder.version".into(),
            self.encoder.version().unwrap_or_default().into(),
        );
        m.insert("encoder.tasks".into(), LABEL_COUNT.to_string());
        if let Some(r) = &self.regressor {
            let c = r.convention();
            m.insert("descriptor.loading".into(), c.loading.as_str().into());
            m.insert("descriptor.separator".into(), c.separator.as_str().into());
            m.insert("descriptor.width".into(), c.width().to_string());
            m.insert("regressor.checksum".into(), checksum(r.params()));
            m.insert("regressor.depth".into(), r.depth().to_string());
            m.insert("regressor.gr_version".into(), r.gr_version().into());
            let widths: Vec<String> = r.widths().iter().map(usize::to_string).collect();
            m.insert("regressor.widths".into(), widths.join(","));
        }
        m
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC.as_bytes());
        out.push(b'\n');
        for (k, v) in self.manifest() {
            out.extend_from_slice(format!("{k}={v}\n").as_bytes());
        }
        out.extend_from_slice(END_MANIFEST.as_bytes());
        out.push(b'\n');
        let stats = self.encoder.label_stats();
        let mut stat_values = stats.mean.to_vec();
        stat_values.extend(stats.std);
        write_block(&mut out, LABEL_STATS_BLOCK, 2, LABEL_COUNT, &stat_values);
        for (_, name, m) in self.encoder.params().iter() {
            write_block(&mut out, name, m.rows(), m.cols(), m.as_slice());
        }
        if let Some(r) = &self.regressor {
            for (_, name, m) in r.params().iter() {
                write_block(&mut out, name, m.rows(), m.cols(), m.as_slice());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.line()? != MAGIC {
            return Err(Error::Artifact(format!(
                "not a model artifact (expected '{MAGIC}' header)"
            )));
        }
        let mut manifest = BTreeMap::new();
        loop {
            let line = r.line()?;
            if line == END_MANIFEST {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Artifact(format!("malformed manifest line '{line}'")))?;
            check_key(k)?;
            if manifest.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Artifact(format!("manifest key '{k}' repeated")));
            }
        }
        let mut gcn = ParamSet::new();
        let mut reg = ParamSet::new();
        let mut stats = None;
        while !r.at_end() {
            let (name, m) = r.block()?;
            if name == LABEL_STATS_BLOCK {
                if m.shape() != (2, LABEL_COUNT) {
                    return Err(Error::Artifact(
                        "label statistics block has the wrong shape".into(),
                    ));
                }
                let s = m.as_slice();
                stats = Some(LabelStats {
                    mean: std::array::from_fn(|i| s[i]),
                    std: std::array::from_fn(|i| s[LABEL_COUNT + i]),
                });
            } else if name.starts_with("gcn.") {
                gcn.push(name, m);
            } else if name.starts_with("reg.") {
                reg.push(name, m);
            } else {
                return Err(Error::Artifact(format!("unknown block '{name}'")));
            }
        }
        let get = |k: &str| {
            manifest
                .get(k)
                .map(String::as_str)
                .ok_or_else(|| Error::Artifact(format!("manifest lacks '{k}'")))
        };
        let stats =
            stats.ok_or_else(|| Error::Artifact("label statistics block missing".into()))?;
        let encoder = GcnModel::from_params(gcn, stats, true)?;
        let recorded = get("encoder.version")?;
        if encoder.version() != Some(recorded) {
            return Err(Error::Artifact(format!(
                "encoder weights hash to {}, manifest records {recorded}",
                encoder.version().unwrap_or_default()
            )));
        }
        let regressor = if reg.is_empty() {
            None
        } else {
            let convention = DescriptorConvention {
                loading: get("descriptor.loading")?.parse()?,
                separator: get("descriptor.separator")?.parse()?,
            };
            let depth: usize = get("regressor.depth")?
                .parse()
                .map_err(|_| Error::Artifact("regressor.depth is not an integer".into()))?;
            let model =
                RegressorModel::from_params(reg, depth, convention, get("regressor.gr_version")?)?;
            if model.params().len() != 2 * depth {
                return Err(Error::Artifact(
                    "regressor has blocks beyond its recorded depth".into(),
                ));
            }
            let recorded = get("regressor.checksum")?;
            if checksum(model.params()) != recorded {
                return Err(Error::Artifact(format!(
                    "regressor weights do not match checksum {recorded}"
                )));
            }
            Some(model)
        };
        let metadata = manifest
            .into_iter()
            .filter(|(k, _)| !RESERVED_PREFIXES.iter().any(|p| k.starts_with(p)))
            .collect();
        let mut artifact = Self {
            encoder,
            regressor: None,
            metadata,
        };
        if let Some(m) = regressor {
            artifact = artifact.with_regressor(m)?;
        }
        if artifact.to_bytes() != bytes {
            return Err(Error::Artifact("artifact is not in canonical form".into()));
        }
        Ok(artifact)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn write_block(out: &mut Vec<u8>, name: &str, rows: usize, cols: usize, values: &[f64]) {
    out.extend_from_slice(format!("block {name} {rows} {cols}\n").as_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn line(&mut self) -> Result<&str> {
        let rest = &self.bytes[self.pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Artifact("artifact truncated inside a text line".into()))?;
        self.pos += end + 1;
        std::str::from_utf8(&rest[..end])
            .map_err(|_| Error::Artifact("manifest is not UTF-8".into()))
    }

    fn block(&mut self) -> Result<(String, Matrix)> {
        let header = self.line()?.to_string();
        let parts: Vec<&str> = header.split(' ').collect();
        let [tag, name, rows, cols] = parts[..] else {
            return Err(Error::Artifact(format!(
                "malformed block header '{header}'"
            )));
        };
        let dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Artifact(format!("bad dimension in block header '{header}'")))
        };
        if tag != "block" {
            return Err(Error::Artifact(format!(
                "malformed block header '{header}'"
            )));
        }
        let (rows, cols) = (dim(rows)?, dim(cols)?);
        let n = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::Artifact(format!("block '{name}' is too large")))?;
        if self.bytes.len() - self.pos < n {
            return Err(Error::Artifact(format!("block '{name}' is truncated")));
        }
        let data = self.bytes[self.pos..self.pos + n]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        self.pos += n;
        Ok((name.to_string(), Matrix::new(rows, cols, data)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ModelArtifact {
        let mut gcn = GcnModel::init(3);
        gcn.freeze();
        let version = gcn.version().unwrap().to_string();
        let reg =
            RegressorModel::init_with_hidden(5, DescriptorConvention::default(), &version, &[4, 3]);
        let mut a = ModelArtifact::new(gcn)
            .unwrap()
            .with_regressor(reg)
            .unwrap();
        a.set_meta("seed", "5").unwrap();
        a
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let a = sample();
        let bytes = a.to_bytes();
        let b = ModelArtifact::from_bytes(&bytes).unwrap();
        assert_eq!(b.to_bytes(), bytes);
        assert_eq!(b.meta("seed"), Some("5"));
        assert_eq!(
            b.regressor().unwrap().params(),
            a.regressor().unwrap().params()
        );
        assert_eq!(b.gr_set().unwrap(), a.gr_set().unwrap());
    }

    #[test]
    fn header_and_manifest_are_text() {
        let bytes = sample().to_bytes();
        let text = String::from_utf8_lossy(&bytes[..600]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "FSMODEL 1");
        assert_eq!(lines[1], "descriptor.loading=fraction");
        assert!(text.contains("\nend-manifest\nblock encoder.label_stats 2 3\n"));
    }

    #[test]
    fn encoder_only_round_trip() {
        let mut gcn = GcnModel::init(1);
        gcn.freeze();
        let a = ModelArtifact::new(gcn).unwrap();
        let b = ModelArtifact::from_bytes(&a.to_bytes()).unwrap();
        assert!(b.regressor().is_none());
        assert!(b.require_regressor().is_err());
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = sample().to_bytes();
        let enc_pos = bytes.windows(10).position(|w| w == b"gcn.conv.0").unwrap() + 40;
        let mut enc = bytes.clone();
        enc[enc_pos] ^= 1;
        assert!(matches!(
            ModelArtifact::from_bytes(&enc),
            Err(Error::Artifact(_))
        ));
        assert!(ModelArtifact::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        assert!(ModelArtifact::from_bytes(b"FSMODEL 2\n").is_err());
    }

    #[test]
    fn mismatched_regressor_and_reserved_keys() {
        let mut gcn = GcnModel::init(3);
        gcn.freeze();
        let reg =
            RegressorModel::init_with_hidden(5, DescriptorConvention::default(), "other", &[4]);
        assert!(matches!(
            ModelArtifact::new(gcn.clone()).unwrap().with_regressor(reg),
            Err(Error::Convention(_))
        ));
        let mut a = ModelArtifact::new(gcn).unwrap();
        assert!(a.set_meta("encoder.version", "x").is_err());
        assert!(a.set_meta("a=b", "x").is_err());
        assert!(a.set_meta("note", "two\nlines").is_err());
        assert!(ModelArtifact::new(GcnModel::init(0)).is_err());
    }
}
