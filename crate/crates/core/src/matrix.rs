//! Dense row-major matrices of `f64`.
//!
//! The whole crate works on a scalar-batch layout: a matrix holds one value
//! per (feature row, batch column). A scalar is `[1 x 1]`, a batch of scalars
//! is `[1 x B]`, a layer activation is `[units x B]`. There is no general
//! broadcasting; the few shaped operations the networks need live on the
//! autodiff graph.

/// Row-major `rows x cols` matrix. Row `i` occupies `data[i*cols .. (i+1)*cols]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    /// A `[1 x n]` row out of a slice of scalars.
    pub fn row_vector(values: &[f64]) -> Self {
        Matrix::from_vec(1, values.len(), values.to_vec())
    }

    /// A `[n x 1]` column out of a slice of scalars.
    pub fn col_vector(values: &[f64]) -> Self {
        Matrix::from_vec(values.len(), 1, values.to_vec())
    }

    pub fn scalar(v: f64) -> Self {
        Matrix::from_vec(1, 1, vec![v])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn same_shape(&self, other: &Matrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let w = self.cols;
        &mut self.data[r * w..(r + 1) * w]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    /// Extract column `c` as a plain vector.
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self += other`, elementwise.
    pub fn add_assign(&mut self, other: &Matrix) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// `out += w * x` where `w` is `[m x n]`, `x` is `[n x B]`, `out` is `[m x B]`.
pub fn matmul_acc(out: &mut Matrix, w: &Matrix, x: &Matrix) {
    assert_eq!(w.cols, x.rows, "matmul inner dims");
    assert_eq!(out.rows, w.rows, "matmul out rows");
    assert_eq!(out.cols, x.cols, "matmul out cols");
    let n = w.cols;
    for i in 0..w.rows {
        let w_row = w.row(i);
        let out_row = out.row_mut(i);
        for j in 0..n {
            let wij = w_row[j];
            if wij == 0.0 {
                continue;
            }
            let x_row = &x.data[j * x.cols..(j + 1) * x.cols];
            for (o, xv) in out_row.iter_mut().zip(x_row) {
                *o += wij * xv;
            }
        }
    }
}

/// `out += w^T * d` where `w` is `[m x n]`, `d` is `[m x B]`, `out` is `[n x B]`.
pub fn matmul_transpose_acc(out: &mut Matrix, w: &Matrix, d: &Matrix) {
    assert_eq!(w.rows, d.rows, "matmul_t inner dims");
    assert_eq!(out.rows, w.cols, "matmul_t out rows");
    assert_eq!(out.cols, d.cols, "matmul_t out cols");
    for i in 0..w.rows {
        let w_row = w.row(i);
        let d_row = &d.data[i * d.cols..(i + 1) * d.cols];
        for j in 0..w.cols {
            let wij = w_row[j];
            if wij == 0.0 {
                continue;
            }
            let out_row = out.row_mut(j);
            for (o, dv) in out_row.iter_mut().zip(d_row) {
                *o += wij * dv;
            }
        }
    }
}

/// `out[i][j] += sum_b d[i][b] * x[j][b]` (gradient of weights in a dense layer).
pub fn outer_acc(out: &mut Matrix, d: &Matrix, x: &Matrix) {
    assert_eq!(d.cols, x.cols, "outer batch dims");
    assert_eq!(out.rows, d.rows, "outer out rows");
    assert_eq!(out.cols, x.rows, "outer out cols");
    for i in 0..d.rows {
        let d_row = d.row(i);
        let out_row = out.row_mut(i);
        for j in 0..x.rows {
            let x_row = x.row(j);
            let mut acc = 0.0;
            for (dv, xv) in d_row.iter().zip(x_row) {
                acc += dv * xv;
            }
            out_row[j] += acc;
        }
    }
}
