//! Dense row-major matrices and image batches.
//!
//! Everything downstream (encoders, attacks, losses) runs on [`Mat`]; an
//! [`ImageBatch`] is a matrix of flattened pixels plus the image shape it
//! was flattened from. Loops are written row-contiguous so summation order
//! is fixed and results are bit-reproducible.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    /// Matrix filled with a constant.
    pub fn full(rows: usize, cols: usize, value: S) -> Self {
        Mat {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Builds from a flat row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "buffer of length {} cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds from nested rows; rows must share a length.
    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::shape("ragged rows"));
            }
            data.extend_from_slice(row);
        }
        Ok(Mat { rows: r, cols: c, data })
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// True when every entry is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Index of the first non-finite row, if any.
    pub fn first_non_finite_row(&self) -> Option<usize> {
        (0..self.rows).find(|&i| self.row(i).iter().any(|v| !v.is_finite()))
    }

    /// Elementwise map into a new matrix.
    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + other`, same shape.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(Mat { rows: self.rows, cols: self.cols, data })
    }

    /// `self - other`, same shape.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a - b)
            .collect();
        Ok(Mat { rows: self.rows, cols: self.cols, data })
    }

    /// `self * k` elementwise.
    pub fn scale(&self, k: S) -> Self {
        self.map(|v| v * k)
    }

    /// Accumulates `other * k` into `self`.
    pub fn add_scaled_in_place(&mut self, other: &Self, k: S) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * k;
        }
    }

    /// `A · Bᵀ` where `A` is `n×k` and `B` is `m×k`.
    pub fn matmul_nt(&self, b: &Self) -> Result<Self> {
        if self.cols != b.cols {
            return Err(Error::shape(format!(
                "inner dimension mismatch: {}x{} vs ({}x{})ᵀ",
                self.rows, self.cols, b.rows, b.cols
            )));
        }
        let mut out = Mat::zeros(self.rows, b.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                let b_row = b.row(j);
                let mut acc = S::zero();
                for k in 0..self.cols {
                    acc += a_row[k] * b_row[k];
                }
                *o = acc;
            }
        }
        Ok(out)
    }

    /// Accumulates `A · B` into `acc`: `acc += A(n×k) · B(k×m)`.
    pub fn add_matmul_nn(acc: &mut Self, a: &Self, b: &Self) {
        debug_assert_eq!(a.cols, b.rows);
        debug_assert_eq!((acc.rows, acc.cols), (a.rows, b.cols));
        for i in 0..a.rows {
            let a_row = a.row(i);
            let acc_row = acc.row_mut(i);
            for (k, &aik) in a_row.iter().enumerate() {
                let b_row = b.row(k);
                for (j, acc_v) in acc_row.iter_mut().enumerate() {
                    *acc_v += aik * b_row[j];
                }
            }
        }
    }

    /// Accumulates `Aᵀ · B` into `acc`: `acc += Aᵀ(k×n)ᵀ... i.e. (n×k)ᵀ·(n×m)`.
    pub fn add_matmul_tn(acc: &mut Self, a: &Self, b: &Self) {
        debug_assert_eq!(a.rows, b.rows);
        debug_assert_eq!((acc.rows, acc.cols), (a.cols, b.cols));
        for i in 0..a.rows {
            let a_row = a.row(i);
            let b_row = b.row(i);
            for (k, &aik) in a_row.iter().enumerate() {
                let acc_row = acc.row_mut(k);
                for (j, acc_v) in acc_row.iter_mut().enumerate() {
                    *acc_v += aik * b_row[j];
                }
            }
        }
    }

    /// Per-row Euclidean norms.
    pub fn row_norms(&self) -> Vec<S> {
        (0..self.rows)
            .map(|i| {
                let mut acc = S::zero();
                for &v in self.row(i) {
                    acc += v * v;
                }
                acc.sqrt()
            })
            .collect()
    }

    /// Euclidean norm of the whole buffer.
    pub fn frobenius_norm(&self) -> S {
        let mut acc = S::zero();
        for &v in &self.data {
            acc += v * v;
        }
        acc.sqrt()
    }

    /// Elementwise clamp into `[lo, hi]`.
    pub fn clamp(&self, lo: S, hi: S) -> Self {
        self.map(|v| if v < lo { lo } else if v > hi { hi } else { v })
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// Bitwise equality (exact, including distinguishing NaN payloads).
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.shape() == other.shape()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.as_f64().to_bits() == b.as_f64().to_bits())
    }

    /// Converts entries to another scalar type.
    pub fn cast<T: Scalar>(&self) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| T::of(v.as_f64())).collect(),
        }
    }
}

impl<S: Scalar> std::ops::Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S: Scalar> std::ops::IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

/// Channels/height/width of one image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ImageShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl ImageShape {
    pub fn new(channels: usize, height: usize, width: usize) -> Self {
        ImageShape { channels, height, width }
    }

    /// Flattened pixel count per image.
    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Display for ImageShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.channels, self.height, self.width)
    }
}

/// Batch of images stored as one flattened row per image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBatch<S> {
    shape: ImageShape,
    pixels: Mat<S>,
}

impl<S: Scalar> ImageBatch<S> {
    /// Wraps a pixel matrix whose row width matches `shape`.
    pub fn new(shape: ImageShape, pixels: Mat<S>) -> Result<Self> {
        if pixels.cols() != shape.len() {
            return Err(Error::shape(format!(
                "pixel rows of width {} do not match image shape {shape}",
                pixels.cols()
            )));
        }
        Ok(ImageBatch { shape, pixels })
    }

    /// Batch of identical constant-valued images.
    pub fn constant(shape: ImageShape, n: usize, value: S) -> Self {
        ImageBatch {
            shape,
            pixels: Mat::full(n, shape.len(), value),
        }
    }

    pub fn shape(&self) -> ImageShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.pixels.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.rows() == 0
    }

    pub fn pixels(&self) -> &Mat<S> {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut Mat<S> {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Mat<S> {
        self.pixels
    }

    /// Sub-batch of the given row indices.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut out = Mat::zeros(indices.len(), self.pixels.cols());
        for (r, &idx) in indices.iter().enumerate() {
            out.row_mut(r).copy_from_slice(self.pixels.row(idx));
        }
        ImageBatch { shape: self.shape, pixels: out }
    }

    pub fn cast<T: Scalar>(&self) -> ImageBatch<T> {
        ImageBatch {
            shape: self.shape,
            pixels: self.pixels.cast(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_nt_matches_hand_product() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Mat::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0], vec![9.0, 10.0]]).unwrap();
        let c = a.matmul_nt(&b).unwrap();
        assert_eq!(c.shape(), (2, 3));
        assert_eq!(c[(0, 0)], 1.0 * 5.0 + 2.0 * 6.0);
        assert_eq!(c[(1, 2)], 3.0 * 9.0 + 4.0 * 10.0);
    }

    #[test]
    fn matmul_nt_rejects_dim_mismatch() {
        let a = Mat::<f64>::zeros(2, 3);
        let b = Mat::<f64>::zeros(2, 4);
        assert!(matches!(a.matmul_nt(&b), Err(Error::Shape(_))));
    }

    #[test]
    fn accumulating_products_match_direct_forms() {
        let a = Mat::from_rows(&[vec![1.0, -2.0, 0.5], vec![0.0, 3.0, 1.0]]).unwrap();
        let b = Mat::from_rows(&[vec![2.0, 1.0], vec![-1.0, 0.5], vec![4.0, -3.0]]).unwrap();
        // A·B via add_matmul_nn equals matmul_nt against Bᵀ.
        let mut acc = Mat::zeros(2, 2);
        Mat::add_matmul_nn(&mut acc, &a, &b);
        let bt = Mat::from_rows(&[vec![2.0, -1.0, 4.0], vec![1.0, 0.5, -3.0]]).unwrap();
        let direct = a.matmul_nt(&bt).unwrap();
        assert!(acc.bit_eq(&direct));

        // Aᵀ·A is symmetric.
        let mut ata = Mat::<f64>::zeros(3, 3);
        Mat::add_matmul_tn(&mut ata, &a, &a);
        for i in 0..3 {
            for j in 0..3 {
                assert!((ata[(i, j)] - ata[(j, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn image_batch_checks_row_width() {
        let shape = ImageShape::new(1, 2, 2);
        assert!(ImageBatch::new(shape, Mat::<f64>::zeros(3, 4)).is_ok());
        assert!(ImageBatch::new(shape, Mat::<f64>::zeros(3, 5)).is_err());
    }

    #[test]
    fn select_copies_rows() {
        let shape = ImageShape::new(1, 1, 2);
        let pixels = Mat::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 5.0]]).unwrap();
        let batch = ImageBatch::new(shape, pixels).unwrap();
        let sub = batch.select(&[2, 0]);
        assert_eq!(sub.pixels().row(0), &[4.0, 5.0]);
        assert_eq!(sub.pixels().row(1), &[0.0, 1.0]);
    }
}
