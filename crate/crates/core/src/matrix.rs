//! Dense column-major snapshot storage.

use crate::error::{MessError, Result};

/// A dense `m x n` matrix whose columns are snapshots of a system state.
///
/// Storage is column-major so that each snapshot occupies one contiguous
/// slice. Every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl SnapshotMatrix {
    /// Wraps column-major `data`, checking shape and finiteness.
    pub fn from_col_major(m: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(MessError::Validation(format!(
                "matrix dimensions must be positive, got {m} x {n}"
            )));
        }
        let expected = m.checked_mul(n).ok_or_else(|| {
            MessError::Validation(format!("matrix dimensions {m} x {n} overflow"))
        })?;
        if data.len() != expected {
            return Err(MessError::Validation(format!(
                "expected {expected} entries for a {m} x {n} matrix, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(MessError::Validation(format!(
                "non-finite entry {} at row {}, column {}",
                data[pos],
                pos % m,
                pos / m
            )));
        }
        Ok(Self { m, n, data })
    }

    /// Builds a matrix from a list of equally sized columns.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let n = columns.len();
        let m = columns.first().map(|c| c.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(m * n);
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != m {
                return Err(MessError::Validation(format!(
                    "column {j} has length {}, expected {m}",
                    c.len()
                )));
            }
            data.extend_from_slice(c);
        }
        Self::from_col_major(m, n, data)
    }

    /// Builds a matrix from row slices (the natural reading order of text files).
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = vec![0.0; m * n];
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n {
                return Err(MessError::Validation(format!(
                    "row {i} has length {}, expected {n}",
                    r.len()
                )));
            }
            for (j, &v) in r.iter().enumerate() {
                data[j * m + i] = v;
            }
        }
        Self::from_col_major(m, n, data)
    }

    /// One-dimensional snapshots: each value becomes a `1 x 1` column.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_col_major(1, values.len(), values.to_vec())
    }

    /// State dimension.
    pub fn nrows(&self) -> usize {
        self.m
    }

    /// Number of snapshots.
    pub fn ncols(&self) -> usize {
        self.n
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    pub fn columns(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.m)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.m + i]
    }

    pub fn as_col_major(&self) -> &[f64] {
        &self.data
    }

    pub fn into_col_major(self) -> Vec<f64> {
        self.data
    }

    /// Copies the listed columns, in order, into a new matrix.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(self.m * indices.len());
        for &j in indices {
            if j >= self.n {
                return Err(MessError::Parameter(format!(
                    "column index {j} out of range for {} columns",
                    self.n
                )));
            }
            data.extend_from_slice(self.column(j));
        }
        Self::from_col_major(self.m, indices.len(), data)
    }

    /// Frobenius norm, accumulated in storage order.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

// Kernels below accumulate in four interleaved lanes so the compiler can
// vectorize them. The summation order is fixed, so results are deterministic.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Euclidean distance by direct differencing.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        let d = x - y;
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
