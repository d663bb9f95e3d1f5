//! Synthetic ground truth: a fixed capacity oracle over formulation designs
//! and a random-molecule pretraining corpus labelled with graph statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::candidates::{sample_compositions, GenConfig};
use crate::chem::{constituent_names, parse_smiles, MolecularGraph, CONSTITUENT_COUNT};
use crate::error::{Error, Result};
use crate::formulation::{CellRecord, FormulationDesign, Separator};
use crate::gcn::PretrainLabel;

/// Linear coefficients with magnitude at least this (mAh/g per mol%) are
/// large enough for their sign to be recovered by rank correlation.
pub const DETECTABILITY_FLOOR: f64 = 0.75;

/// Capacity function
///
/// f = base + Σ c_k·x_k + a·(x_i/100)(x_j/100) − s·max(0, loading − cliff)
///     + separator offset,
///
/// clamped at zero, with x in mol% and loading in LiI wt%. The linear
/// coefficients sum to zero so that each one's sign matches the sign of
/// its constituent's marginal correlation on the simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticOracle {
    pub base: f64,
    /// mAh/g per mol%, registry order.
    pub linear: [f64; CONSTITUENT_COUNT],
    /// Constituent indices and amplitude of the pairwise term.
    pub interaction: (usize, usize, f64),
    /// Loading (wt%) above which capacity falls.
    pub cliff: f64,
    /// mAh/g lost per wt% above the cliff.
    pub cliff_slope: f64,
    /// Added for (Celgard, QMA).
    pub separator_offset: [f64; 2],
    /// Cell-to-cell noise, mAh/g.
    pub sigma: f64,
}

impl Default for SyntheticOracle {
    fn default() -> Self {
        Self {
            base: 230.0,
            //       LiCl LiNO3 LiBOB LiTFSI DOL  DMI   EC   G4
            linear: [0.9, 0.4, -1.5, -0.6, 1.2, -0.9, 0.2, 0.3],
            interaction: (4, 6, 60.0),
            cliff: 44.0,
            cliff_slope: 4.0,
            separator_offset: [0.0, 15.0],
            sigma: 20.0,
        }
    }
}

impl SyntheticOracle {
    /// Noiseless capacity, mAh/g.
    pub fn capacity(&self, d: &FormulationDesign) -> f64 {
        let x = d.mol();
        let linear: f64 = self.linear.iter().zip(x).map(|(c, x)| c * x).sum();
        let (i, j, a) = self.interaction;
        let pair = a * (x[i] / 100.0) * (x[j] / 100.0);
        let penalty = self.cliff_slope * (d.loading() - self.cliff).max(0.0);
        let sep = match d.separator() {
            Separator::Celgard => self.separator_offset[0],
            Separator::Qma => self.separator_offset[1],
        };
        (self.base + linear + pair - penalty + sep).max(0.0)
    }

    /// Capacity plus Gaussian noise, clamped at zero.
    pub fn sample<R: Rng + ?Sized>(&self, d: &FormulationDesign, rng: &mut R) -> f64 {
        let f = self.capacity(d);
        if self.sigma == 0.0 {
            return f;
        }
        let noise = Normal::new(0.0, self.sigma).expect("sigma is finite and positive");
        (f + noise.sample(rng)).max(0.0)
    }

    /// Constituents whose coefficient clears [`DETECTABILITY_FLOOR`], with
    /// the sign of that coefficient.
    pub fn detectable_signs(&self) -> Vec<(&'static str, f64)> {
        constituent_names()
            .into_iter()
            .zip(self.linear)
            .filter(|(_, c)| c.abs() >= DETECTABILITY_FLOOR)
            .map(|(n, c)| (n, c.signum()))
            .collect()
    }
}

/// Loading range of synthetic records, LiI wt%.
pub const LOADING_RANGE: (f64, f64) = (30.0, 60.0);

/// `n` cells with compositions drawn like the candidate pool, loading
/// uniform over [`LOADING_RANGE`] (0.1 wt% steps), either separator with
/// equal probability, ids 1..=n and current density 1 mA/cm².
pub fn make_dataset(oracle: &SyntheticOracle, n: usize, seed: u64) -> Result<Vec<CellRecord>> {
    if n == 0 {
        return Err(Error::Config(
            "synthetic dataset needs at least one record".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gen = GenConfig {
        n_compositions: n,
        ..GenConfig::default()
    };
    let comps = sample_compositions(&gen, &mut rng)?;
    comps
        .into_iter()
        .enumerate()
        .map(|(i, mol)| {
            let loading =
                (rng.random_range(LOADING_RANGE.0..=LOADING_RANGE.1) * 10.0).round() / 10.0;
            let sep = if rng.random_bool(0.5) {
                Separator::Qma
            } else {
                Separator::Celgard
            };
            let design = FormulationDesign::new(mol, loading, sep)?;
            let capacity = oracle.sample(&design, &mut rng);
            CellRecord::new(i as u64 + 1, design, capacity, 1.0)
        })
        .collect()
}

/// Graph statistics used as stand-in pretraining labels: mean degree,
/// atom count / 10 and ring count.
pub fn graph_label(g: &MolecularGraph) -> PretrainLabel {
    PretrainLabel {
        homo_ev: g.mean_degree(),
        lumo_ev: g.atom_count() as f64 / 10.0,
        dipole_debye: g.ring_count() as f64,
    }
}

const CHAIN_ATOMS: [&str; 7] = ["C", "C", "C", "C", "N", "O", "S"];
const SUBSTITUENTS: [&str; 5] = ["F", "Cl", "=O", "C", "O"];

/// One random molecule: a chain of 1–8 heavy atoms, optionally closed
/// into a ring, with up to two substituent branches.
pub fn random_smiles<R: Rng + ?Sized>(rng: &mut R) -> String {
    let len = rng.random_range(1..=8usize);
    let ring = len >= 3 && rng.random_bool(0.4);
    let branches = if len >= 2 {
        rng.random_range(0..=2usize)
    } else {
        0
    };
    let branch_at: Vec<usize> = (0..branches).map(|_| rng.random_range(0..len)).collect();
    let mut s = String::new();
    for i in 0..len {
        s.push_str(CHAIN_ATOMS[rng.random_range(0..CHAIN_ATOMS.len())]);
        if ring && (i == 0 || i == len - 1) {
            s.push('1');
        }
        for _ in branch_at.iter().filter(|&&b| b == i) {
            s.push('(');
            s.push_str(SUBSTITUENTS[rng.random_range(0..SUBSTITUENTS.len())]);
            s.push(')');
        }
    }
    s
}

/// `n` random molecules with their graph-statistic labels.
pub fn make_pretrain_corpus(n: usize, seed: u64) -> Result<Vec<(String, PretrainLabel)>> {
    if n == 0 {
        return Err(Error::Config(
            "pretraining corpus needs at least one molecule".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let smiles = random_smiles(&mut rng);
            let g = parse_smiles(&smiles)?;
            Ok((smiles, graph_label(&g)))
        })
        .collect()
}
