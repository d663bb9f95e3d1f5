use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::chem::{parse_smiles, MolecularGraph};
use crate::error::{Error, Result};

use super::pretrain::PretrainLabel;

pub const CORPUS_COLUMNS: [&str; 4] = ["smiles", "homo_ev", "lumo_ev", "dipole_debye"];

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusEntry {
    pub smiles: String,
    pub graph: MolecularGraph,
    pub label: PretrainLabel,
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<CorpusEntry>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(file).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses a pretraining corpus. Any bad row fails the whole read with its
/// file line number (header is line 1).
pub fn read_corpus<R: Read>(reader: R) -> Result<Vec<CorpusEntry>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Input(format!("cannot read header: {e}")))?
        .clone();
    let idx: Vec<usize> = CORPUS_COLUMNS
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| Error::Input(format!("missing column '{c}'")))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let bad = |msg: String| Error::Input(format!("line {line}: {msg}"));
        let row = row.map_err(|e| bad(e.to_string()))?;
        let field = |k: usize| row.get(idx[k]).unwrap_or("");
        let smiles = field(0).to_string();
        let graph = parse_smiles(&smiles).map_err(|e| bad(e.to_string()))?;
        let values = (1..4)
            .map(|k| {
                field(k).parse::<f64>().map_err(|_| {
                    bad(format!(
                        "{} '{}' is not a number",
                        CORPUS_COLUMNS[k],
                        field(k)
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let label = PretrainLabel::from_slice(&values).map_err(|e| bad(e.to_string()))?;
        out.push(CorpusEntry {
            smiles,
            graph,
            label,
        });
    }
    if out.is_empty() {
        return Err(Error::Input("pretraining corpus has no rows".into()));
    }
    Ok(out)
}

pub fn write_corpus<W: Write>(out: W, entries: &[(String, PretrainLabel)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Input(format!("writing corpus: {e}"));
    w.write_record(CORPUS_COLUMNS).map_err(err)?;
    for (s, l) in entries {
        let [h, lu, d] = l.to_array();
        w.write_record([s.clone(), h.to_string(), lu.to_string(), d.to_string()])
            .map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::Input(format!("writing corpus: {e}")))
}
