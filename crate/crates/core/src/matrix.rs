//! Dense row-major feature storage.

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// One feature vector per row, stored contiguously.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FeatureMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn new(cols: usize) -> Self {
        Self {
            rows: 0,
            cols,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(cols: usize, rows: usize) -> Self {
        Self {
            rows: 0,
            cols,
            data: Vec::with_capacity(rows * cols),
        }
    }

    pub fn from_flat(cols: usize, data: Vec<T>) -> Result<Self> {
        if cols == 0 || !data.len().is_multiple_of(cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                found: data.len(),
            });
        }
        Ok(Self {
            rows: data.len() / cols,
            cols,
            data,
        })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::with_capacity(cols, rows.len());
        for r in rows {
            m.push_row(r.as_ref())?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row: &[T]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// Appends all rows of `other`, which must have the same width.
    pub fn extend(&mut self, other: &FeatureMatrix<T>) -> Result<()> {
        if other.cols != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.cols,
            });
        }
        self.data.extend_from_slice(&other.data);
        self.rows += other.rows;
        Ok(())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        // chunks_exact on an empty slice with cols == 0 would panic
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    /// Applies `f` to every row in place.
    pub fn map_rows_in_place(&mut self, mut f: impl FnMut(usize, &mut [T])) {
        for i in 0..self.rows {
            let cols = self.cols;
            f(i, &mut self.data[i * cols..(i + 1) * cols]);
        }
    }

    /// Rows selected by `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut m = Self::with_capacity(self.cols, indices.len());
        for &i in indices {
            m.data.extend_from_slice(self.row(i));
            m.rows += 1;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_rows() {
        let mut m = FeatureMatrix::<f64>::new(2);
        m.push_row(&[1.0, 2.0]).unwrap();
        assert!(matches!(
            m.push_row(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
        assert_eq!(m.rows(), 1);
    }

    #[test]
    fn select_and_extend() {
        let m = FeatureMatrix::from_rows(&[[1.0f32, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let s = m.select_rows(&[2, 0]);
        assert_eq!(s.row(0), &[5.0, 6.0]);
        let mut e = s.clone();
        e.extend(&m).unwrap();
        assert_eq!(e.rows(), 5);
        assert_eq!(e.row(4), &[5.0, 6.0]);
    }
}
