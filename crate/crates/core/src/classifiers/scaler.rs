use serde::{Deserialize, Serialize};

use crate::matrix::FeatureMatrix;
use crate::{Error, Real, Result};

/// Per-feature z-score transform fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Scaler<T> {
    mean: Vec<T>,
    std: Vec<T>,
}

impl<T: Real> Scaler<T> {
    /// Population mean and standard deviation of each column. Columns whose
    /// deviation vanishes get a divisor of 1, so they map to zero.
    pub fn fit(x: &FeatureMatrix<T>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let n = T::from_usize(x.rows()).expect("row count fits the scalar");
        let mut mean = vec![T::zero(); x.cols()];
        for row in x.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += *v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![T::zero(); x.cols()];
        for row in x.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (*v - *m) * (*v - *m);
            }
        }
        let floor = T::epsilon().sqrt();
        let std = var
            .into_iter()
            .zip(&mean)
            .map(|(s, m)| {
                let sd = (s / n).sqrt();
                if sd <= floor * m.abs().max(T::one()) {
                    T::one()
                } else {
                    sd
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    /// Identity transform of width `dim`.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![T::zero(); dim],
            std: vec![T::one(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn std(&self) -> &[T] {
        &self.std
    }

    pub fn transform(&self, x: &[T]) -> Result<Vec<T>> {
        self.check(x.len())?;
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (*v - *m) / *s)
            .collect())
    }

    pub fn transform_in_place(&self, x: &mut [T]) -> Result<()> {
        self.check(x.len())?;
        for (v, (m, s)) in x.iter_mut().zip(self.mean.iter().zip(&self.std)) {
            *v = (*v - *m) / *s;
        }
        Ok(())
    }

    pub fn transform_matrix(&self, x: &FeatureMatrix<T>) -> Result<FeatureMatrix<T>> {
        self.check(x.cols())?;
        let mut out = x.clone();
        out.map_rows_in_place(|_, row| {
            for (v, (m, s)) in row.iter_mut().zip(self.mean.iter().zip(&self.std)) {
                *v = (*v - *m) / *s;
            }
        });
        Ok(out)
    }

    fn check(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizes_training_columns() {
        let x = FeatureMatrix::from_rows(&[[1.0, 10.0, 3.0], [2.0, 30.0, 3.0], [6.0, 20.0, 3.0]])
            .unwrap();
        let s = Scaler::fit(&x).unwrap();
        let z = s.transform_matrix(&x).unwrap();
        for c in 0..2 {
            let col: Vec<f64> = z.iter_rows().map(|r| r[c]).collect();
            let mean = col.iter().sum::<f64>() / 3.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-9 && (var.sqrt() - 1.0).abs() < 1e-9);
        }
        // constant column is guarded
        assert!(z.iter_rows().all(|r| r[2] == 0.0));
    }

    #[test]
    fn test_rows_use_training_statistics() {
        let s = Scaler::fit(&FeatureMatrix::from_rows(&[[0.0], [2.0]]).unwrap()).unwrap();
        assert_eq!(s.transform(&[1.0]).unwrap(), vec![0.0]);
        assert_eq!(s.transform(&[3.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        assert!(matches!(
            Scaler::<f64>::fit(&FeatureMatrix::new(3)),
            Err(Error::EmptyTrainingSet)
        ));
        let s = Scaler::<f32>::identity(2);
        assert!(matches!(
            s.transform(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
    }
}
