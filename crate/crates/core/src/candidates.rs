//! Dummy battery-design pool: random integer-simplex compositions under a
//! salt cap, crossed with cathode loadings and separators.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chem::{is_salt, mol_columns, CONSTITUENT_COUNT};
use crate::error::{Error, Result};
use crate::formulation::{FormulationDesign, Separator, LOADING_COLUMN, SEPARATOR_COLUMN};

pub const DESIGN_ID_COLUMN: &str = "design_id";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub n_compositions: usize,
    /// LiI wt% values.
    pub loadings: Vec<f64>,
    pub separators: Vec<Separator>,
    /// Maximum total salt mol%.
    pub salt_cap: f64,
    /// Fraction of compositions allowed above the cap.
    pub over_cap_allowance: f64,
    /// Composition grid step, mol%.
    pub resolution: f64,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_compositions: 2410,
            loadings: vec![30.0, 35.0, 40.0, 45.0, 50.0, 55.0, 60.0],
            separators: Separator::ALL.to_vec(),
            salt_cap: 50.0,
            over_cap_allowance: 0.0,
            resolution: 1.0,
            seed: 0,
        }
    }
}

impl GenConfig {
    /// Number of grid units making up 100 mol%.
    fn units(&self) -> Result<usize> {
        let u = 100.0 / self.resolution;
        if !(self.resolution > 0.0) || (u - u.round()).abs() > 1e-9 || u.round() < 1.0 {
            return Err(Error::Config(format!(
                "resolution {} mol% does not divide 100",
                self.resolution
            )));
        }
        Ok(u.round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.units()?;
        if self.n_compositions == 0 {
            return Err(Error::Config("n_compositions must be positive".into()));
        }
        if self.loadings.is_empty() || self.separators.is_empty() {
            return Err(Error::Config(
                "at least one loading and one separator required".into(),
            ));
        }
        if let Some(l) = self.loadings.iter().find(|l| !(0.0..=100.0).contains(*l)) {
            return Err(Error::Config(format!("loading {l} outside [0, 100]")));
        }
        if !(self.salt_cap > 0.0 && self.salt_cap <= 100.0) {
            return Err(Error::Config(format!(
                "salt cap {} outside (0, 100]",
                self.salt_cap
            )));
        }
        if !(0.0..=1.0).contains(&self.over_cap_allowance) {
            return Err(Error::Config(
                "over-cap allowance must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn pool_size(&self) -> usize {
        self.n_compositions * self.loadings.len() * self.separators.len()
    }
}

/// Uniform draw from the compositions of `units` into eight non-negative
/// parts (stars and bars), returned in grid units.
pub fn sample_composition_units<R: Rng + ?Sized>(
    rng: &mut R,
    units: usize,
) -> [usize; CONSTITUENT_COUNT] {
    let slots = units + CONSTITUENT_COUNT - 1;
    let mut bars = index::sample(rng, slots, CONSTITUENT_COUNT - 1).into_vec();
    bars.sort_unstable();
    let mut out = [0; CONSTITUENT_COUNT];
    let mut prev = 0;
    for (k, &b) in bars.iter().enumerate() {
        out[k] = b - prev;
        prev = b + 1;
    }
    out[CONSTITUENT_COUNT - 1] = slots - prev;
    out
}

fn salt_units(c: &[usize; CONSTITUENT_COUNT]) -> usize {
    c.iter()
        .enumerate()
        .filter(|(i, _)| is_salt(*i))
        .map(|(_, u)| u)
        .sum()
}

/// Distinct compositions (mol%) drawn uniformly on the grid, rejecting
/// salt totals above the cap beyond the allowance quota.
pub fn sample_compositions<R: Rng + ?Sized>(
    config: &GenConfig,
    rng: &mut R,
) -> Result<Vec<[f64; CONSTITUENT_COUNT]>> {
    config.validate()?;
    let units = config.units()?;
    let n = config.n_compositions;
    let over_quota = (config.over_cap_allowance * n as f64).round() as usize;
    let max_attempts = 1000 * n + 100_000;
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    let mut over = 0;
    for _ in 0..max_attempts {
        if out.len() == n {
            break;
        }
        let c = sample_composition_units(rng, units);
        let salt = salt_units(&c) as f64 * config.resolution;
        let over_cap = salt > config.salt_cap + 1e-9;
        if over_cap && over >= over_quota {
            continue;
        }
        if !seen.insert(c) {
            continue;
        }
        over += usize::from(over_cap);
        out.push(c.map(|u| u as f64 * config.resolution));
    }
    if out.len() < n {
        return Err(Error::Config(format!(
            "could only draw {} of {n} distinct compositions under a {} mol% salt cap",
            out.len(),
            config.salt_cap
        )));
    }
    Ok(out)
}

/// The full pool, composition-major: each composition appears with every
/// loading, and each loading with every separator.
pub fn generate(config: &GenConfig) -> Result<Vec<FormulationDesign>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let comps = sample_compositions(config, &mut rng)?;
    let mut pool = Vec::with_capacity(config.pool_size());
    for mol in comps {
        for &loading in &config.loadings {
            for &sep in &config.separators {
                pool.push(FormulationDesign::new(mol, loading, sep)?);
            }
        }
    }
    Ok(pool)
}

/// A pool with 1-based design ids in generation order.
#[derive(Clone, Debug, PartialEq)]
pub struct Pool {
    pub designs: Vec<(u64, FormulationDesign)>,
    /// Free-form `key=value` lines written as `#` comments.
    pub metadata: Vec<String>,
}

impl Pool {
    pub fn generate(config: &GenConfig) -> Result<Self> {
        let designs = generate(config)?
            .into_iter()
            .enumerate()
            .map(|(i, d)| (i as u64 + 1, d))
            .collect();
        Ok(Self {
            designs,
            metadata: metadata(config),
        })
    }

    pub fn len(&self) -> usize {
        self.designs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.designs.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Input(format!("writing pool: {e}"));
        for line in &self.metadata {
            writeln!(out, "# {line}").map_err(io)?;
        }
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Input(format!("writing pool: {e}"));
        w.write_record(pool_columns()).map_err(err)?;
        for (id, d) in &self.designs {
            w.write_record(design_fields(*id, d)).map_err(err)?;
        }
        w.flush().map_err(io)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut text = String::new();
        BufReader::new(reader)
            .read_to_string(&mut text)
            .map_err(|e| Error::Input(format!("reading pool: {e}")))?;
        let metadata = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| l.trim_start_matches('#').trim().to_string())
            .collect();
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| Error::Input(format!("reading pool header: {e}")))?
            .clone();
        let index = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Input(format!("pool is missing column '{name}'")))
        };
        let id_col = index(DESIGN_ID_COLUMN)?;
        let mol_cols = mol_columns()
            .iter()
            .map(|c| index(c))
            .collect::<Result<Vec<_>>>()?;
        let load_col = index(LOADING_COLUMN)?;
        let sep_col = index(SEPARATOR_COLUMN)?;
        let mut designs = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| Error::Input(format!("malformed pool CSV: {e}")))?;
            let line = row.position().map_or(0, |p| p.line());
            let bad = |what: &str| Error::Input(format!("pool line {line}: {what}"));
            let num = |i: usize| -> Result<f64> {
                row.get(i)
                    .unwrap_or("")
                    .parse()
                    .map_err(|_| bad("non-numeric field"))
            };
            let id: u64 = row
                .get(id_col)
                .unwrap_or("")
                .parse()
                .map_err(|_| bad("bad design_id"))?;
            let mut mol = [0.0; CONSTITUENT_COUNT];
            for (k, &c) in mol_cols.iter().enumerate() {
                mol[k] = num(c)?;
            }
            let sep: Separator = row
                .get(sep_col)
                .unwrap_or("")
                .parse()
                .map_err(|e: Error| bad(&e.to_string()))?;
            let d = FormulationDesign::new(mol, num(load_col)?, sep)
                .map_err(|e| bad(&e.to_string()))?;
            designs.push((id, d));
        }
        Ok(Self { designs, metadata })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file)
    }

    /// Keeps only designs using `sep`.
    pub fn restrict_separator(&self, sep: Separator) -> Self {
        Self {
            designs: self
                .designs
                .iter()
                .filter(|(_, d)| d.separator() == sep)
                .cloned()
                .collect(),
            metadata: self.metadata.clone(),
        }
    }
}

pub fn pool_columns() -> Vec<&'static str> {
    let mut cols = vec![DESIGN_ID_COLUMN];
    cols.extend(mol_columns());
    cols.extend([LOADING_COLUMN, SEPARATOR_COLUMN]);
    cols
}

pub(crate) fn design_fields(id: u64, d: &FormulationDesign) -> Vec<String> {
    let mut row = vec![id.to_string()];
    row.extend(d.mol().iter().map(|m| m.to_string()));
    row.push(d.loading().to_string());
    row.push(d.separator().label().to_string());
    row
}

fn metadata(config: &GenConfig) -> Vec<String> {
    let join = |v: Vec<String>| v.join(";");
    vec![
        "generator=integer-simplex".to_string(),
        format!("seed={}", config.seed),
        format!("n_compositions={}", config.n_compositions),
        format!(
            "loadings={}",
            join(config.loadings.iter().map(|l| l.to_string()).collect())
        ),
        format!(
            "separators={}",
            join(
                config
                    .separators
                    .iter()
                    .map(|s| s.label().to_string())
                    .collect()
            )
        ),
        format!("salt_cap={}", config.salt_cap),
        format!("over_cap_allowance={}", config.over_cap_allowance),
        format!("resolution={}", config.resolution),
    ]
}
