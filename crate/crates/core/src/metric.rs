//! Distance, mode and quality kernels.
//!
//! All accumulation is exact integer arithmetic. The SD quality score only
//! becomes a float when it is reported.

use crate::dataset::{CategoricalDataset, DataPoint, RowSubset};
use crate::engine::ClusterModel;
use crate::error::{Error, Result};

const LOW7: u64 = 0x7f7f_7f7f_7f7f_7f7f;
const HIGH: u64 = 0x8080_8080_8080_8080;

/// Number of positions where `x` and `y` differ. Panics on length mismatch.
///
/// Compares eight cells per step: after XOR a byte is zero iff the cells
/// matched, and `((v & 0x7f..) + 0x7f..) | v` sets the top bit of exactly
/// the nonzero bytes without carrying across lanes.
#[inline]
pub fn hamming_unchecked(x: &[u8], y: &[u8]) -> u32 {
    assert_eq!(x.len(), y.len(), "hamming: length mismatch");
    let mut acc = 0u32;
    let mut xc = x.chunks_exact(8);
    let mut yc = y.chunks_exact(8);
    for (a, b) in (&mut xc).zip(&mut yc) {
        let a = u64::from_le_bytes(a.try_into().unwrap());
        let b = u64::from_le_bytes(b.try_into().unwrap());
        let v = a ^ b;
        acc += ((((v & LOW7) + LOW7) | v) & HIGH).count_ones();
    }
    acc + xc
        .remainder()
        .iter()
        .zip(yc.remainder())
        .filter(|(a, b)| a != b)
        .count() as u32
}

/// Hamming distance between two code vectors.
pub fn hamming(x: &[u8], y: &[u8]) -> Result<u32> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(hamming_unchecked(x, y))
}

/// Per-attribute, per-category counts over a set of rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyTable {
    // counts for attribute a live at offsets[a]..offsets[a + 1]
    counts: Vec<u64>,
    offsets: Vec<usize>,
    size: u64,
}

impl FrequencyTable {
    pub fn empty(cardinalities: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(cardinalities.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &c in cardinalities {
            acc += c;
            offsets.push(acc);
        }
        FrequencyTable {
            counts: vec![0; acc],
            offsets,
            size: 0,
        }
    }

    /// Counts over the rows of `subset`.
    pub fn build(dataset: &CategoricalDataset, subset: &RowSubset) -> Self {
        let mut t = Self::empty(dataset.cardinalities());
        for i in subset.iter() {
            t.add(dataset.row_unchecked(i));
        }
        t
    }

    /// Counts over every row.
    pub fn build_all(dataset: &CategoricalDataset) -> Self {
        let mut t = Self::empty(dataset.cardinalities());
        for r in dataset.rows() {
            t.add(r);
        }
        t
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn m(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Counts for one attribute, indexed by category code.
    pub fn attribute(&self, a: usize) -> &[u64] {
        &self.counts[self.offsets[a]..self.offsets[a + 1]]
    }

    #[inline]
    pub fn count(&self, a: usize, code: u8) -> u64 {
        self.counts[self.offsets[a] + code as usize]
    }

    #[inline]
    pub(crate) fn add(&mut self, point: &[u8]) {
        for (a, &c) in point.iter().enumerate() {
            self.counts[self.offsets[a] + c as usize] += 1;
        }
        self.size += 1;
    }

    /// Caller guarantees `point` is currently counted in the table.
    #[inline]
    pub(crate) fn remove(&mut self, point: &[u8]) {
        for (a, &c) in point.iter().enumerate() {
            self.counts[self.offsets[a] + c as usize] -= 1;
        }
        self.size -= 1;
    }

    /// Adds (`delta = +1`) or removes (`delta = -1`) one point.
    ///
    /// A removal that would drive any count below zero fails and leaves the
    /// table unchanged.
    pub fn update(&mut self, point: &[u8], delta: i8) -> Result<()> {
        if point.len() != self.m() {
            return Err(Error::LengthMismatch {
                expected: self.m(),
                found: point.len(),
            });
        }
        for (a, &c) in point.iter().enumerate() {
            if c as usize >= self.offsets[a + 1] - self.offsets[a] {
                return Err(Error::InvalidConfig(format!(
                    "code {c} out of range for attribute {a}"
                )));
            }
        }
        match delta {
            1 => self.add(point),
            -1 => {
                if let Some((a, &c)) = point
                    .iter()
                    .enumerate()
                    .find(|&(a, &c)| self.count(a, c) == 0)
                {
                    return Err(Error::CountUnderflow {
                        attribute: a,
                        category: c,
                    });
                }
                self.remove(point)
            }
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "frequency delta must be +1 or -1, got {delta}"
                )))
            }
        }
        Ok(())
    }

    /// Writes the per-attribute majority category into `out`; ties go to the lowest code.
    pub(crate) fn mode_into(&self, out: &mut [u8]) {
        for (a, slot) in out.iter_mut().enumerate() {
            let counts = self.attribute(a);
            let mut best = 0usize;
            for (c, &v) in counts.iter().enumerate().skip(1) {
                if v > counts[best] {
                    best = c;
                }
            }
            *slot = best as u8;
        }
    }

    /// Sum of Hamming distances from every counted row to `center`,
    /// computed from the counts alone: `size * m - sum_a count(a, center_a)`.
    pub fn distance_sum_to(&self, center: &[u8]) -> u64 {
        let matches: u64 = center
            .iter()
            .enumerate()
            .map(|(a, &c)| self.count(a, c))
            .sum();
        self.size * self.m() as u64 - matches
    }
}

/// The mode of the counted rows: the majority category per attribute,
/// lowest code on ties. Minimizes the summed Hamming distance over the rows.
pub fn mode_of(table: &FrequencyTable) -> Result<DataPoint> {
    if table.size == 0 {
        return Err(Error::EmptyMode);
    }
    let mut out = vec![0u8; table.m()];
    table.mode_into(&mut out);
    Ok(DataPoint::new(out))
}

/// Exact sum of Hamming distances from the subset's rows to `center`.
pub fn sum_of_distances(
    dataset: &CategoricalDataset,
    subset: &RowSubset,
    center: &[u8],
) -> Result<u64> {
    subset.check(dataset)?;
    dataset.check_point(center)?;
    Ok(subset
        .iter()
        .map(|i| hamming_unchecked(dataset.row_unchecked(i), center) as u64)
        .sum())
}

/// Exact within-cluster distance total for a model: the numerator of SD.
pub fn total_distance(dataset: &CategoricalDataset, model: &ClusterModel) -> Result<u64> {
    if model.assignments.len() != dataset.n() {
        return Err(Error::IncompleteAssignment(format!(
            "{} assignments for {} rows",
            model.assignments.len(),
            dataset.n()
        )));
    }
    let mut total = 0u64;
    for (i, &j) in model.assignments.iter().enumerate() {
        let center = model.centers.get(j).ok_or_else(|| {
            Error::IncompleteAssignment(format!("row {i} assigned to missing cluster {j}"))
        })?;
        total += hamming(dataset.row_unchecked(i), center.as_slice())? as u64;
    }
    Ok(total)
}

/// SD: total within-cluster Hamming distance divided by n.
pub fn sd_total(dataset: &CategoricalDataset, model: &ClusterModel) -> Result<f64> {
    Ok(total_distance(dataset, model)? as f64 / dataset.n() as f64)
}
