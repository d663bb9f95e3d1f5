use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::chem::{mol_columns, CONSTITUENT_COUNT};
use crate::error::{Error, Result};

use super::design::{CellRecord, FormulationDesign, Separator};

pub const ID_COLUMN: &str = "id";
pub const LOADING_COLUMN: &str = "lii_wtpct";
pub const SEPARATOR_COLUMN: &str = "separator";
pub const CAPACITY_COLUMN: &str = "capacity_mah_g";
pub const CURRENT_DENSITY_COLUMN: &str = "current_density_ma_cm2";

/// Header of the dataset CSV, in order.
pub fn dataset_columns() -> Vec<&'static str> {
    let mut cols = vec![ID_COLUMN];
    cols.extend(mol_columns());
    cols.extend([
        LOADING_COLUMN,
        SEPARATOR_COLUMN,
        CAPACITY_COLUMN,
        CURRENT_DENSITY_COLUMN,
    ]);
    cols
}

/// A row that failed validation. `line` is the 1-based line in the file
/// (the header is line 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub records: Vec<CellRecord>,
    pub rejections: Vec<Rejection>,
    /// Accepted rows whose mol% were rescaled to sum to 100.
    pub renormalized: usize,
}

impl Dataset {
    pub fn summary(&self) -> String {
        format!(
            "{} records accepted ({} renormalized), {} rejected",
            self.records.len(),
            self.renormalized,
            self.rejections.len()
        )
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses dataset CSV text. Schema problems (missing columns) are errors;
/// bad rows are collected as rejections.
pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Input(format!("cannot read header: {e}")))?
        .clone();
    let index = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Input(format!("missing column '{name}'")))
    };
    let id_col = index(ID_COLUMN)?;
    let mol_cols = mol_columns()
        .iter()
        .map(|c| index(c))
        .collect::<Result<Vec<_>>>()?;
    let loading_col = index(LOADING_COLUMN)?;
    let sep_col = index(SEPARATOR_COLUMN)?;
    let cap_col = index(CAPACITY_COLUMN)?;
    let cd_col = index(CURRENT_DENSITY_COLUMN)?;

    let mut out = Dataset::default();
    let mut seen = HashSet::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Input(format!("malformed CSV: {e}")))?;
        let line = row.position().map_or(0, |p| p.line());
        let parsed = (|| -> Result<(CellRecord, bool)> {
            let field = |i: usize, name: &str| -> Result<f64> {
                let raw = row.get(i).unwrap_or("");
                raw.parse::<f64>()
                    .map_err(|_| Error::Input(format!("column '{name}': '{raw}' is not a number")))
            };
            let raw_id = row.get(id_col).unwrap_or("");
            let id = raw_id.parse::<u64>().map_err(|_| {
                Error::Input(format!(
                    "column 'id': '{raw_id}' is not a non-negative integer"
                ))
            })?;
            let mut mol = [0.0; CONSTITUENT_COUNT];
            for (k, (&c, name)) in mol_cols.iter().zip(mol_columns()).enumerate() {
                mol[k] = field(c, name)?;
            }
            let loading = field(loading_col, LOADING_COLUMN)?;
            let separator: Separator = row.get(sep_col).unwrap_or("").parse()?;
            let capacity = field(cap_col, CAPACITY_COLUMN)?;
            let current_density = field(cd_col, CURRENT_DENSITY_COLUMN)?;
            let (design, rescaled) = FormulationDesign::from_raw(mol, loading, separator)?;
            Ok((
                CellRecord::new(id, design, capacity, current_density)?,
                rescaled,
            ))
        })();
        match parsed {
            Ok((rec, rescaled)) => {
                if !seen.insert(rec.id) {
                    out.rejections.push(Rejection {
                        line,
                        reason: format!("duplicate id {}", rec.id),
                    });
                    continue;
                }
                out.renormalized += usize::from(rescaled);
                out.records.push(rec);
            }
            Err(e) => out.rejections.push(Rejection {
                line,
                reason: strip_prefix(e),
            }),
        }
    }
    Ok(out)
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Input(m) => m,
        other => other.to_string(),
    }
}

pub fn write_dataset<W: Write>(writer: W, records: &[CellRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Input(format!("writing dataset: {e}"));
    w.write_record(dataset_columns()).map_err(io)?;
    for r in records {
        let mut row = vec![r.id.to_string()];
        row.extend(r.design.mol().iter().map(|m| m.to_string()));
        row.push(r.design.loading().to_string());
        row.push(r.design.separator().label().to_string());
        row.push(r.capacity.to_string());
        row.push(r.current_density.to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Input(format!("writing dataset: {e}")))?;
    Ok(())
}

pub fn save_dataset(path: impl AsRef<Path>, records: &[CellRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(std::io::BufWriter::new(file), records)
}
