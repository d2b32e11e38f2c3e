//! Row-major dense matrices, sized for the small networks trained here.

use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(Vec::len).unwrap_or(0);
        assert!(r > 0 && c > 0 && rows.iter().all(|row| row.len() == c));
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    /// y = A x.
    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![S::zero(); self.rows];
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = S::zero();
            for (a, b) in row.iter().zip(x) {
                acc = acc + *a * *b;
            }
            *yi = acc;
        }
        y
    }

    /// x = A' y.
    pub fn matvec_t(&self, y: &[S]) -> Vec<S> {
        assert_eq!(y.len(), self.rows);
        let mut x = vec![S::zero(); self.cols];
        for (i, yi) in y.iter().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (xj, a) in x.iter_mut().zip(row) {
                *xj = *xj + *a * *yi;
            }
        }
        x
    }

    /// A += scale * y x' (outer product accumulation).
    pub fn add_outer(&mut self, y: &[S], x: &[S], scale: S) {
        assert_eq!(y.len(), self.rows);
        assert_eq!(x.len(), self.cols);
        for (i, yi) in y.iter().enumerate() {
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            let s = scale * *yi;
            for (a, xj) in row.iter_mut().zip(x) {
                *a = *a + s * *xj;
            }
        }
    }

    /// A += scale * B.
    pub fn add_scaled(&mut self, other: &Mat<S>, scale: S) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + scale * *b;
        }
    }

    pub fn scale(&mut self, s: S) {
        for a in &mut self.data {
            *a = *a * s;
        }
    }

    pub fn frobenius_sq(&self) -> S {
        self.data.iter().map(|&a| a * a).sum()
    }
}

impl<S: Scalar> Index<(usize, usize)> for Mat<S> {
    type Output = S;

    fn index(&self, (r, c): (usize, usize)) -> &S {
        assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<S: Scalar> IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}
