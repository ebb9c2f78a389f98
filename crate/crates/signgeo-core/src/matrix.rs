//! Minimal dense row-major matrix. The estimators only ever need matvec and
//! entry-wise surgery, so this deliberately is not a linear-algebra library.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;

/// Dense `m × n` matrix of `f64`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data. Errors if the length is not `m·n`
    /// or any entry is non-finite.
    pub fn from_rows(m: usize, n: usize, data: Vec<f64>) -> Result<Self, CoreError> {
        if data.len() != m * n {
            return Err(CoreError::DimMismatch {
                left: m * n,
                right: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::OutOfRange {
                what: "matrix entry",
                value: f64::NAN,
                expected: "finite",
            });
        }
        Ok(Self { m, n, data })
    }

    /// All-zeros matrix.
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            data: vec![0.0; m * n],
        }
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// `y = W x`. Errors on dimension mismatch.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, CoreError> {
        if x.len() != self.n {
            return Err(CoreError::DimMismatch {
                left: self.n,
                right: x.len(),
            });
        }
        let mut y = Vec::with_capacity(self.m);
        for i in 0..self.m {
            let row = self.row(i);
            let mut acc = 0.0;
            for (w, xv) in row.iter().zip(x) {
                acc += w * xv;
            }
            y.push(acc);
        }
        Ok(y)
    }

    /// `y += W x` into a caller-provided buffer (hot path for the estimators).
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), CoreError> {
        if x.len() != self.n || y.len() != self.m {
            return Err(CoreError::DimMismatch {
                left: self.n,
                right: x.len(),
            });
        }
        for i in 0..self.m {
            let row = self.row(i);
            let mut acc = 0.0;
            for (w, xv) in row.iter().zip(x) {
                acc += w * xv;
            }
            y[i] = acc;
        }
        Ok(())
    }

    /// Squared Frobenius norm.
    pub fn frob_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn matvec_small() {
        let w = Matrix::from_rows(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let y = w.matvec(&[1.0, 0.0, -1.0]).unwrap();
        assert_eq!(y, vec![-2.0, -2.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Matrix::from_rows(2, 2, vec![1.0; 3]).is_err());
        let w = Matrix::zeros(2, 2);
        assert!(w.matvec(&[1.0; 3]).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Matrix::from_rows(1, 2, vec![1.0, f64::INFINITY]).is_err());
    }
}
