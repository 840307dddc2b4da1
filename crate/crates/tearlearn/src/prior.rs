//! Structural prior knowledge about streams.
//!
//! Each ordered pair `(i, j)` carries one of three classes:
//! `Unknown` (data decides), `Obligatory` (the stream must survive repair),
//! or `Forbidden` (the stream must not exist). Because the class is a single
//! enum value per pair, no pair can be simultaneously obligatory and
//! forbidden. The diagonal is permanently `Forbidden` (no self-loops).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prior class of one directed stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Prior {
    /// No prior knowledge; the stream may be kept or torn freely.
    #[serde(rename = "U")]
    Unknown,
    /// The stream is known to exist and must never be torn.
    #[serde(rename = "O")]
    Obligatory,
    /// The stream is known not to exist.
    #[serde(rename = "F")]
    Forbidden,
}

/// Per-pair prior classes for a `dim`-variable problem, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorSpec {
    dim: usize,
    entries: Vec<Prior>,
}

impl PriorSpec {
    /// All pairs `Unknown` except the diagonal, which is `Forbidden`.
    pub fn all_unknown(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Data("prior must have dimension >= 1".into()));
        }
        let mut entries = vec![Prior::Unknown; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Prior::Forbidden;
        }
        Ok(PriorSpec { dim, entries })
    }

    /// Builds from explicit row-major entries, enforcing the diagonal rule.
    pub fn from_entries(dim: usize, entries: Vec<Prior>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Data("prior must have dimension >= 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::Data(format!(
                "prior has {} entries, expected {}",
                entries.len(),
                dim * dim
            )));
        }
        for i in 0..dim {
            if entries[i * dim + i] != Prior::Forbidden {
                return Err(Error::Data(format!(
                    "prior diagonal entry ({i}, {i}) must be forbidden (no self-loops)"
                )));
            }
        }
        Ok(PriorSpec { dim, entries })
    }

    /// Number of variables.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Prior class of the stream `source -> target`.
    pub fn get(&self, source: usize, target: usize) -> Prior {
        self.entries[source * self.dim + target]
    }

    /// Sets the class of one off-diagonal pair. Diagonal entries are fixed
    /// at `Forbidden` and any attempt to change them is an error.
    pub fn set(&mut self, source: usize, target: usize, class: Prior) -> Result<()> {
        if source >= self.dim || target >= self.dim {
            return Err(Error::Data(format!(
                "prior index ({source}, {target}) out of range for dim {}",
                self.dim
            )));
        }
        if source == target && class != Prior::Forbidden {
            return Err(Error::Data(format!(
                "prior diagonal entry ({source}, {source}) must stay forbidden"
            )));
        }
        self.entries[source * self.dim + target] = class;
        Ok(())
    }

    /// Row-major view of the entries.
    pub fn entries(&self) -> &[Prior] {
        &self.entries
    }

    /// Ordered pairs classed `Obligatory`.
    pub fn obligatory_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs_with(Prior::Obligatory)
    }

    /// Ordered pairs classed `Forbidden` (the diagonal included).
    pub fn forbidden_pairs(&self) -> Vec<(usize, usize)> {
        self.pairs_with(Prior::Forbidden)
    }

    fn pairs_with(&self, class: Prior) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in 0..self.dim {
                if self.entries[i * self.dim + j] == class {
                    out.push((i, j));
                }
            }
        }
        out
    }
}
