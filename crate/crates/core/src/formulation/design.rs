use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chem::{is_salt, CONSTITUENT_COUNT};
use crate::error::{Error, Result};

/// Tolerance on Σ mol% for an already-normalized design.
pub const SUM_TOLERANCE: f64 = 1e-6;
/// Raw input rows within this distance of 100 mol% are renormalized.
pub const RAW_SUM_TOLERANCE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Separator {
    Celgard,
    Qma,
}

impl Separator {
    pub const ALL: [Separator; 2] = [Separator::Celgard, Separator::Qma];

    /// Class value: Celgard 1, QMA 2.
    pub fn class_value(self) -> f64 {
        match self {
            Separator::Celgard => 1.0,
            Separator::Qma => 2.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Separator::Celgard => "CELGARD",
            Separator::Qma => "QMA",
        }
    }
}

impl fmt::Display for Separator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Separator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CELGARD" => Ok(Separator::Celgard),
            "QMA" => Ok(Separator::Qma),
            other => Err(Error::Input(format!(
                "unknown separator '{other}' (allowed: CELGARD, QMA)"
            ))),
        }
    }
}

/// Eight mol% values in registry order, cathode loading (LiI wt%) and
/// separator.
#[derive(Clone, Debug, PartialEq)]
pub struct FormulationDesign {
    mol: [f64; CONSTITUENT_COUNT],
    loading: f64,
    separator: Separator,
}

impl FormulationDesign {
    pub fn new(mol: [f64; CONSTITUENT_COUNT], loading: f64, separator: Separator) -> Result<Self> {
        validate_parts(&mol, loading)?;
        let sum: f64 = mol.iter().sum();
        if (sum - 100.0).abs() > SUM_TOLERANCE {
            return Err(Error::Input(format!("mol% sums to {sum}, expected 100")));
        }
        Ok(Self {
            mol,
            loading,
            separator,
        })
    }

    /// Accepts hand-entered compositions summing to within ±0.5 of 100 and
    /// rescales them to exactly 100. Returns whether rescaling happened.
    pub fn from_raw(
        mol: [f64; CONSTITUENT_COUNT],
        loading: f64,
        separator: Separator,
    ) -> Result<(Self, bool)> {
        validate_parts(&mol, loading)?;
        let sum: f64 = mol.iter().sum();
        if (sum - 100.0).abs() > RAW_SUM_TOLERANCE {
            return Err(Error::Input(format!(
                "mol% sums to {sum}, outside 100 ± {RAW_SUM_TOLERANCE}"
            )));
        }
        if (sum - 100.0).abs() <= SUM_TOLERANCE {
            return Ok((Self::new(mol, loading, separator)?, false));
        }
        let scaled = mol.map(|m| m * 100.0 / sum);
        Ok((
            Self {
                mol: scaled,
                loading,
                separator,
            },
            true,
        ))
    }

    pub fn mol(&self) -> &[f64; CONSTITUENT_COUNT] {
        &self.mol
    }

    pub fn loading(&self) -> f64 {
        self.loading
    }

    pub fn separator(&self) -> Separator {
        self.separator
    }

    pub fn salt_total(&self) -> f64 {
        self.mol
            .iter()
            .enumerate()
            .filter(|(i, _)| is_salt(*i))
            .map(|(_, m)| m)
            .sum()
    }

    pub fn with_loading(&self, loading: f64) -> Result<Self> {
        Self::new(self.mol, loading, self.separator)
    }

    /// Flat feature vector: 8 mol%, LiI wt%, separator class.
    pub fn flat_features(&self) -> [f64; CONSTITUENT_COUNT + 2] {
        let mut out = [0.0; CONSTITUENT_COUNT + 2];
        out[..CONSTITUENT_COUNT].copy_from_slice(&self.mol);
        out[CONSTITUENT_COUNT] = self.loading;
        out[CONSTITUENT_COUNT + 1] = self.separator.class_value();
        out
    }
}

fn validate_parts(mol: &[f64; CONSTITUENT_COUNT], loading: f64) -> Result<()> {
    if let Some((i, m)) = mol
        .iter()
        .enumerate()
        .find(|(_, m)| !(m.is_finite() && **m >= 0.0))
    {
        return Err(Error::Input(format!(
            "mol% of constituent {i} must be finite and non-negative, got {m}"
        )));
    }
    if !(loading.is_finite() && (0.0..=100.0).contains(&loading)) {
        return Err(Error::Input(format!(
            "cathode loading must lie in [0, 100] wt%, got {loading}"
        )));
    }
    Ok(())
}

/// A measured cell: design plus specific capacity.
#[derive(Clone, Debug, PartialEq)]
pub struct CellRecord {
    pub id: u64,
    pub design: FormulationDesign,
    /// Specific capacity, mAh/g.
    pub capacity: f64,
    /// Current density of the measurement, mA/cm².
    pub current_density: f64,
}

impl CellRecord {
    pub fn new(
        id: u64,
        design: FormulationDesign,
        capacity: f64,
        current_density: f64,
    ) -> Result<Self> {
        if !(capacity.is_finite() && capacity >= 0.0) {
            return Err(Error::Input(format!(
                "capacity must be finite and non-negative, got {capacity}"
            )));
        }
        if !current_density.is_finite() {
            return Err(Error::Input("current density is not finite".into()));
        }
        Ok(Self {
            id,
            design,
            capacity,
            current_density,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE2_IV: [f64; 8] = [4.0, 6.0, 3.0, 1.0, 68.0, 2.0, 10.0, 6.0];

    #[test]
    fn separator_round_trip_and_rejection() {
        assert_eq!("QMA".parse::<Separator>().unwrap(), Separator::Qma);
        assert_eq!("celgard".parse::<Separator>().unwrap(), Separator::Celgard);
        let e = "PTFE".parse::<Separator>().unwrap_err().to_string();
        assert!(e.contains("CELGARD") && e.contains("QMA"), "{e}");
    }

    #[test]
    fn validates_invariants() {
        assert!(FormulationDesign::new(TABLE2_IV, 45.0, Separator::Qma).is_ok());
        let mut neg = TABLE2_IV;
        neg[0] = -1.0;
        neg[4] = 70.0;
        assert!(FormulationDesign::new(neg, 45.0, Separator::Qma).is_err());
        assert!(FormulationDesign::new(TABLE2_IV, 101.0, Separator::Qma).is_err());
        let mut short = TABLE2_IV;
        short[4] = 67.0;
        assert!(FormulationDesign::new(short, 45.0, Separator::Qma).is_err());
    }

    #[test]
    fn raw_rows_renormalize_within_tolerance() {
        let mut raw = TABLE2_IV;
        raw[4] = 67.8;
        let (d, rescaled) = FormulationDesign::from_raw(raw, 45.0, Separator::Qma).unwrap();
        assert!(rescaled);
        assert!((d.mol().iter().sum::<f64>() - 100.0).abs() < 1e-12);
        raw[4] = 67.0;
        assert!(FormulationDesign::from_raw(raw, 45.0, Separator::Qma).is_err());
    }

    #[test]
    fn salt_total_sums_first_four() {
        let d = FormulationDesign::new(TABLE2_IV, 45.0, Separator::Qma).unwrap();
        assert_eq!(d.salt_total(), 14.0);
    }
}
