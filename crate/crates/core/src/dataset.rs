//! In-memory categorical dataset.
//!
//! Every cell is one byte. Rows are stored contiguously (row-major) so that
//! the assignment loop can stream a whole row against each center.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of categories an attribute may have: codes are `u8`.
pub const MAX_CARDINALITY: usize = 256;

/// An owned attribute-code vector, used for centers.
///
/// Centers may be synthetic (a mode need not be a row of the dataset).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DataPoint(Vec<u8>);

impl DataPoint {
    pub fn new(values: Vec<u8>) -> Self {
        DataPoint(values)
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

impl From<&[u8]> for DataPoint {
    fn from(values: &[u8]) -> Self {
        DataPoint(values.to_vec())
    }
}

impl From<Vec<u8>> for DataPoint {
    fn from(values: Vec<u8>) -> Self {
        DataPoint(values)
    }
}

impl AsRef<[u8]> for DataPoint {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

/// A single invariant violation reported by [`CategoricalDataset::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoRows,
    NoAttributes,
    ShapeMismatch {
        expected: usize,
        found: usize,
    },
    NameCountMismatch {
        expected: usize,
        found: usize,
    },
    ZeroCardinality {
        attribute: usize,
    },
    CardinalityTooLarge {
        attribute: usize,
        cardinality: usize,
    },
    CodeOutOfRange {
        row: usize,
        attribute: usize,
        code: u8,
        cardinality: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoRows => write!(f, "dataset has no rows"),
            Violation::NoAttributes => write!(f, "dataset has no attributes"),
            Violation::ShapeMismatch { expected, found } => {
                write!(f, "code block has {found} cells, expected {expected}")
            }
            Violation::NameCountMismatch { expected, found } => {
                write!(f, "{found} attribute names for {expected} attributes")
            }
            Violation::ZeroCardinality { attribute } => {
                write!(f, "attribute {attribute} has cardinality 0")
            }
            Violation::CardinalityTooLarge { attribute, cardinality } => write!(
                f,
                "attribute {attribute}: cardinality exceeds {MAX_CARDINALITY} ({cardinality})"
            ),
            Violation::CodeOutOfRange { row, attribute, code, cardinality } => write!(
                f,
                "code {code} at row {row}, attribute {attribute} is not below cardinality {cardinality}"
            ),
        }
    }
}

/// An n x m matrix of attribute codes with per-attribute cardinalities.
///
/// Immutable once built; share it freely across threads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoricalDataset {
    n: usize,
    m: usize,
    cardinalities: Vec<usize>,
    codes: Vec<u8>,
    attribute_names: Vec<String>,
}

impl CategoricalDataset {
    /// Builds and validates a dataset from a row-major code block.
    pub fn new(
        codes: Vec<u8>,
        cardinalities: Vec<usize>,
        attribute_names: Vec<String>,
    ) -> Result<Self> {
        let ds = Self::from_parts_unchecked(codes, cardinalities, attribute_names);
        ds.validate().map_err(Error::InvalidDataset)?;
        Ok(ds)
    }

    /// Builds a dataset without checking invariants. Use [`validate`](Self::validate)
    /// before handing it to any algorithm.
    pub fn from_parts_unchecked(
        codes: Vec<u8>,
        cardinalities: Vec<usize>,
        attribute_names: Vec<String>,
    ) -> Self {
        let m = cardinalities.len();
        let n = codes.len().checked_div(m).unwrap_or(0);
        CategoricalDataset {
            n,
            m,
            cardinalities,
            codes,
            attribute_names,
        }
    }

    /// Builds a dataset from rows, with default attribute names `a0..`.
    /// Cardinalities are inferred as `max code + 1` when not given.
    pub fn from_rows<R: AsRef<[u8]>>(
        rows: &[R],
        cardinalities: Option<Vec<usize>>,
    ) -> Result<Self> {
        let m = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut codes = Vec::with_capacity(rows.len() * m);
        for r in rows {
            let r = r.as_ref();
            if r.len() != m {
                return Err(Error::LengthMismatch {
                    expected: m,
                    found: r.len(),
                });
            }
            codes.extend_from_slice(r);
        }
        let cardinalities = cardinalities.unwrap_or_else(|| {
            (0..m)
                .map(|a| {
                    rows.iter()
                        .map(|r| r.as_ref()[a] as usize + 1)
                        .max()
                        .unwrap_or(1)
                })
                .collect()
        });
        let names = (0..cardinalities.len()).map(|a| format!("a{a}")).collect();
        Self::new(codes, cardinalities, names)
    }

    /// Returns every invariant violation; an empty list means the dataset is valid.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.m == 0 {
            out.push(Violation::NoAttributes);
        }
        if self.n == 0 {
            out.push(Violation::NoRows);
        }
        if self.codes.len() != self.n * self.m {
            out.push(Violation::ShapeMismatch {
                expected: self.n * self.m,
                found: self.codes.len(),
            });
        }
        if self.attribute_names.len() != self.m {
            out.push(Violation::NameCountMismatch {
                expected: self.m,
                found: self.attribute_names.len(),
            });
        }
        for (attribute, &c) in self.cardinalities.iter().enumerate() {
            if c == 0 {
                out.push(Violation::ZeroCardinality { attribute });
            } else if c > MAX_CARDINALITY {
                out.push(Violation::CardinalityTooLarge {
                    attribute,
                    cardinality: c,
                });
            }
        }
        if self.m > 0 {
            for (row, r) in self.codes.chunks_exact(self.m).enumerate() {
                for (attribute, (&code, &card)) in r.iter().zip(&self.cardinalities).enumerate() {
                    if code as usize >= card {
                        out.push(Violation::CodeOutOfRange {
                            row,
                            attribute,
                            code,
                            cardinality: card,
                        });
                    }
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    /// The raw row-major code block.
    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    /// Row `i`, bounds-checked.
    pub fn row(&self, i: usize) -> Result<&[u8]> {
        if i >= self.n {
            return Err(Error::RowOutOfRange {
                index: i,
                n: self.n,
            });
        }
        Ok(self.row_unchecked(i))
    }

    /// Row `i`. Panics if `i >= n`.
    #[inline]
    pub fn row_unchecked(&self, i: usize) -> &[u8] {
        &self.codes[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[u8]> + '_ {
        self.codes.chunks_exact(self.m.max(1)).take(self.n)
    }

    /// Number of distinct rows.
    pub fn distinct_rows(&self) -> usize {
        let set: std::collections::HashSet<&[u8]> = self.rows().collect();
        set.len()
    }

    /// Checks that a center has length m and respects the cardinalities.
    pub fn check_point(&self, p: &[u8]) -> Result<()> {
        if p.len() != self.m {
            return Err(Error::LengthMismatch {
                expected: self.m,
                found: p.len(),
            });
        }
        if let Some((a, &c)) = p
            .iter()
            .enumerate()
            .find(|&(a, &c)| c as usize >= self.cardinalities[a])
        {
            return Err(Error::InvalidConfig(format!(
                "center code {c} at attribute {a} exceeds cardinality {}",
                self.cardinalities[a]
            )));
        }
        Ok(())
    }
}

/// Row membership of a cluster: strictly increasing row indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RowSubset(Vec<usize>);

impl RowSubset {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSubset(format!(
                "indices not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(RowSubset(indices))
    }

    /// Caller guarantees the indices are strictly increasing.
    pub(crate) fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        RowSubset(indices)
    }

    pub fn all(n: usize) -> Self {
        RowSubset((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    /// Errors if any index is not a row of `dataset`.
    pub fn check(&self, dataset: &CategoricalDataset) -> Result<()> {
        match self.0.last() {
            Some(&last) if last >= dataset.n() => Err(Error::RowOutOfRange {
                index: last,
                n: dataset.n(),
            }),
            _ => Ok(()),
        }
    }
}
