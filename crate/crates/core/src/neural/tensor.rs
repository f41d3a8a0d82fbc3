//! Row-major dense matrices and the few kernels the network needs.

use std::fmt::Debug;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;

/// Element type of the network: `f32` for training, `f64` for checks.
pub trait Scalar: Float + AddAssign + SubAssign + MulAssign + Debug + Default + Send + Sync + 'static {}

impl<T: Float + AddAssign + SubAssign + MulAssign + Debug + Default + Send + Sync + 'static> Scalar for T {}

pub(crate) fn lit<T: Scalar>(x: f64) -> T {
    T::from(x).expect("finite literal")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| U::from(x).expect("castable")).collect(),
        }
    }

    /// `self * b`
    pub fn matmul(&self, b: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, b.rows, "matmul shapes");
        let mut out = Matrix::zeros(self.rows, b.cols);
        for r in 0..self.rows {
            let o = &mut out.data[r * b.cols..(r + 1) * b.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (x, &y) in o.iter_mut().zip(b.row(k)) {
                    *x += a * y;
                }
            }
        }
        out
    }

    /// `self^T * b`
    pub fn t_matmul(&self, b: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.rows, b.rows, "t_matmul shapes");
        let mut out = Matrix::zeros(self.cols, b.cols);
        for r in 0..self.rows {
            let brow = b.row(r);
            for (i, &a) in self.row(r).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (x, &y) in out.row_mut(i).iter_mut().zip(brow) {
                    *x += a * y;
                }
            }
        }
        out
    }

    /// `self * b^T`
    pub fn matmul_t(&self, b: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, b.cols, "matmul_t shapes");
        let mut out = Matrix::zeros(self.rows, b.rows);
        for r in 0..self.rows {
            let a = self.row(r);
            for c in 0..b.rows {
                out.data[r * b.rows + c] = dot(a, b.row(c));
            }
        }
        out
    }

    pub fn add_row_vector(&mut self, v: &[T]) {
        for r in 0..self.rows {
            for (x, &b) in self.row_mut(r).iter_mut().zip(v) {
                *x += b;
            }
        }
    }

    pub fn column_sums(&self) -> Vec<T> {
        let mut s = vec![T::zero(); self.cols];
        for r in 0..self.rows {
            for (acc, &x) in s.iter_mut().zip(self.row(r)) {
                *acc += x;
            }
        }
        s
    }

    /// `[a | b]` side by side.
    pub fn hconcat(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
        assert_eq!(a.rows, b.rows, "hconcat rows");
        let cols = a.cols + b.cols;
        let mut data = Vec::with_capacity(a.rows * cols);
        for r in 0..a.rows {
            data.extend_from_slice(a.row(r));
            data.extend_from_slice(b.row(r));
        }
        Matrix::from_vec(a.rows, cols, data)
    }

    /// Splits columns at `at` into `([.., at), [at, ..))`.
    pub fn hsplit(&self, at: usize) -> (Matrix<T>, Matrix<T>) {
        let mut left = Matrix::zeros(self.rows, at);
        let mut right = Matrix::zeros(self.rows, self.cols - at);
        for r in 0..self.rows {
            let (a, b) = self.row(r).split_at(at);
            left.row_mut(r).copy_from_slice(a);
            right.row_mut(r).copy_from_slice(b);
        }
        (left, right)
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}
