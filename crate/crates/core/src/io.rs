//! JSON file formats.
//!
//! * Matrix: `{"labels": [..], "dims": [..], "entries": [[re, im], ..]}`,
//!   entries row-major, `(Π dims)²` of them.
//! * Decomposition: `{"dx", "dy", "terms": [{"weight", "rho_x", "rho_y"}]}`
//!   with matrix objects for the factors.
//! * Joint distribution: `{"dims": [dx, dy, de], "probs": [..]}`, x-major.
//!
//! Unknown fields are ignored on input, so result documents that embed one
//! of these objects at top level can be fed back in unchanged. Floats are
//! written in shortest round-trip form, which reproduces every bit.

use serde::{Deserialize, Serialize, Serializer};

use crate::density::{validate_density, DensityMatrix};
use crate::dims::SubsystemDims;
use crate::entropy::JointDistribution;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};
use crate::states::{make_decomposition, SeparableDecomposition};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub labels: Vec<String>,
    pub dims: Vec<usize>,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn from_parts(m: &ComplexMatrix, dims: &SubsystemDims) -> Self {
        Self {
            labels: dims.labels().to_vec(),
            dims: dims.dims().to_vec(),
            entries: m.entries().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        Self::from_parts(rho.matrix(), rho.dims())
    }

    pub fn to_parts(&self) -> Result<(ComplexMatrix, SubsystemDims)> {
        let dims = SubsystemDims::new(self.labels.iter().cloned(), self.dims.iter().copied())?;
        let n = dims.total();
        let entries = self.entries.iter().map(|&[re, im]| C64::new(re, im)).collect();
        let m = ComplexMatrix::from_row_major(n, n, entries).map_err(|_| {
            Error::Shape(format!(
                "{} entries for dimensions {:?}, expected {}",
                self.entries.len(),
                self.dims,
                n * n
            ))
        })?;
        Ok((m, dims))
    }

    pub fn to_density(&self, tols: &Tolerances) -> Result<DensityMatrix> {
        let (m, dims) = self.to_parts()?;
        validate_density(m, dims, tols)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermFile {
    pub weight: f64,
    pub rho_x: MatrixFile,
    pub rho_y: MatrixFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub dx: usize,
    pub dy: usize,
    pub terms: Vec<TermFile>,
}

impl DecompositionFile {
    pub fn from_decomposition(d: &SeparableDecomposition) -> Self {
        Self {
            dx: d.dx(),
            dy: d.dy(),
            terms: d
                .terms()
                .iter()
                .map(|t| TermFile {
                    weight: t.weight,
                    rho_x: MatrixFile::from_density(&t.x),
                    rho_y: MatrixFile::from_density(&t.y),
                })
                .collect(),
        }
    }

    pub fn to_decomposition(&self, tols: &Tolerances) -> Result<SeparableDecomposition> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (k, t) in self.terms.iter().enumerate() {
            let x = t.rho_x.to_density(tols)?;
            let y = t.rho_y.to_density(tols)?;
            if x.dim() != self.dx || y.dim() != self.dy {
                return Err(Error::Shape(format!(
                    "term {k} has factor dimensions ({}, {}), file declares ({}, {})",
                    x.dim(),
                    y.dim(),
                    self.dx,
                    self.dy
                )));
            }
            terms.push((t.weight, x, y));
        }
        make_decomposition(terms, tols)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFile {
    pub dims: [usize; 3],
    pub probs: Vec<f64>,
}

impl DistributionFile {
    pub fn to_distribution(&self, tols: &Tolerances) -> Result<JointDistribution> {
        JointDistribution::new(self.dims, self.probs.clone(), tols)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixFile::from_density(self).serialize(s)
    }
}

impl Serialize for SeparableDecomposition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DecompositionFile::from_decomposition(self).serialize(s)
    }
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_density(text: &str, tols: &Tolerances) -> Result<DensityMatrix> {
    parse_json::<MatrixFile>(text)?.to_density(tols)
}

pub fn read_decomposition(text: &str, tols: &Tolerances) -> Result<SeparableDecomposition> {
    parse_json::<DecompositionFile>(text)?.to_decomposition(tols)
}

pub fn read_distribution(text: &str, tols: &Tolerances) -> Result<JointDistribution> {
    parse_json::<DistributionFile>(text)?.to_distribution(tols)
}
