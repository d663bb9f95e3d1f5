use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chem::CONSTITUENT_COUNT;
use crate::error::{Error, Result};
use crate::gcn::{GrSet, GR_WIDTH};

use super::design::{FormulationDesign, Separator};

/// How LiI wt% enters the descriptor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadingScale {
    /// wt% / 100.
    Fraction,
    /// wt% as given.
    Raw,
}

/// How the separator enters the descriptor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeparatorEncoding {
    /// One value: Celgard 1.0, QMA 2.0.
    Scalar,
    /// Two values: [1, 0] Celgard, [0, 1] QMA.
    OneHot,
}

macro_rules! str_enum {
    ($ty:ident { $($var:ident => $s:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$var => $s),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($ty::$var),)+
                    other => Err(Error::Config(format!(
                        concat!("unknown ", stringify!($ty), " '{}' (allowed: ", $($s, " "),+, ")"),
                        other
                    ))),
                }
            }
        }
    };
}

str_enum!(LoadingScale { Fraction => "fraction", Raw => "raw" });
str_enum!(SeparatorEncoding { Scalar => "scalar", OneHot => "onehot" });

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescriptorConvention {
    pub loading: LoadingScale,
    pub separator: SeparatorEncoding,
}

impl Default for DescriptorConvention {
    fn default() -> Self {
        Self {
            loading: LoadingScale::Fraction,
            separator: SeparatorEncoding::Scalar,
        }
    }
}

impl DescriptorConvention {
    /// 802 with the scalar separator, 803 with one-hot.
    pub fn width(self) -> usize {
        CONSTITUENT_COUNT * GR_WIDTH
            + 1
            + match self.separator {
                SeparatorEncoding::Scalar => 1,
                SeparatorEncoding::OneHot => 2,
            }
    }
}

/// Scaled GR segments followed by the cell-level variables.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorVector {
    values: Vec<f64>,
    convention: DescriptorConvention,
    gr_version: String,
}

impl DescriptorVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn convention(&self) -> DescriptorConvention {
        self.convention
    }

    pub fn gr_version(&self) -> &str {
        &self.gr_version
    }

    /// Segment `k` (100 values) belonging to constituent `k`.
    pub fn segment(&self, k: usize) -> &[f64] {
        &self.values[k * GR_WIDTH..(k + 1) * GR_WIDTH]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// Builds the descriptor for a validated design.
pub fn build_descriptor(
    design: &FormulationDesign,
    grs: &GrSet,
    convention: DescriptorConvention,
) -> DescriptorVector {
    descriptor_from_parts(
        design.mol(),
        design.loading(),
        design.separator(),
        grs,
        convention,
    )
}

/// Same assembly without the Σ mol% = 100 check, so scaling can be studied
/// on unnormalized compositions.
pub fn descriptor_from_parts(
    mol: &[f64; CONSTITUENT_COUNT],
    loading: f64,
    separator: Separator,
    grs: &GrSet,
    convention: DescriptorConvention,
) -> DescriptorVector {
    let mut values = Vec::with_capacity(convention.width());
    for (m, gr) in mol.iter().zip(grs.iter()) {
        let scale = m / 100.0;
        values.extend(gr.as_slice().iter().map(|g| scale * g));
    }
    values.push(match convention.loading {
        LoadingScale::Fraction => loading / 100.0,
        LoadingScale::Raw => loading,
    });
    match convention.separator {
        SeparatorEncoding::Scalar => values.push(separator.class_value()),
        SeparatorEncoding::OneHot => match separator {
            Separator::Celgard => values.extend([1.0, 0.0]),
            Separator::Qma => values.extend([0.0, 1.0]),
        },
    }
    DescriptorVector {
        values,
        convention,
        gr_version: grs.version().to_string(),
    }
}

/// Checked variant taking GRs as a plain list; errors unless exactly eight
/// are supplied.
pub fn build_descriptor_from_list(
    design: &FormulationDesign,
    version: &str,
    grs: Vec<crate::gcn::GraphRepresentation>,
    convention: DescriptorConvention,
) -> Result<DescriptorVector> {
    let set = GrSet::new(version, grs)?;
    Ok(build_descriptor(design, &set, convention))
}
