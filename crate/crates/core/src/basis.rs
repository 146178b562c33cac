//! Orthonormal reduced bases, projection and reconstruction error.

use serde::{Deserialize, Serialize};

use crate::error::{MessError, Result};
use crate::matrix::{axpy, dot, euclidean_distance, norm, SnapshotMatrix};

/// Default relative tolerance below which a Gram-Schmidt residual is dropped.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Where a reduced basis came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Orthonormalized sampled snapshots.
    MessQr,
    /// Leading left singular vectors.
    Pod,
}

/// An `m x ell` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis {
    m: usize,
    ell: usize,
    q: Vec<f64>,
    pub provenance: Provenance,
    pub numerical_rank_tol: f64,
    /// Input columns that contributed a basis vector, in order.
    pub retained: Vec<usize>,
    /// Input columns dropped as numerically dependent.
    pub dropped: Vec<usize>,
}

impl ReducedBasis {
    pub(crate) fn from_parts(
        m: usize,
        q: Vec<f64>,
        provenance: Provenance,
        numerical_rank_tol: f64,
        retained: Vec<usize>,
        dropped: Vec<usize>,
    ) -> Self {
        debug_assert_eq!(q.len() % m, 0);
        Self {
            m,
            ell: q.len() / m,
            q,
            provenance,
            numerical_rank_tol,
            retained,
            dropped,
        }
    }

    /// State dimension.
    pub fn dim(&self) -> usize {
        self.m
    }

    /// Number of basis vectors.
    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.q[k * self.m..(k + 1) * self.m]
    }

    pub fn vectors(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.q.chunks_exact(self.m)
    }

    /// Column-major `m x ell` storage.
    pub fn as_col_major(&self) -> &[f64] {
        &self.q
    }

    /// `||Q^T Q - I||_F`
    pub fn orthonormality_defect(&self) -> f64 {
        let mut sum = 0.0;
        for a in 0..self.ell {
            for b in 0..self.ell {
                let g = dot(self.vector(a), self.vector(b)) - if a == b { 1.0 } else { 0.0 };
                sum += g * g;
            }
        }
        sum.sqrt()
    }

    /// Reduced coordinates `Q^T x`.
    pub fn coordinates(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok(self.vectors().map(|q| dot(q, x)).collect())
    }

    /// Lifts reduced coordinates back to state space, `Q z`.
    pub fn lift(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.ell {
            return Err(MessError::Parameter(format!(
                "expected {} reduced coordinates, got {}",
                self.ell,
                z.len()
            )));
        }
        let mut out = vec![0.0; self.m];
        for (q, &c) in self.vectors().zip(z) {
            axpy(c, q, &mut out);
        }
        Ok(out)
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.m {
            return Err(MessError::Parameter(format!(
                "vector of length {len} does not match basis dimension {}",
                self.m
            )));
        }
        Ok(())
    }
}

/// Orthonormalizes the columns of `y` by modified Gram-Schmidt with one
/// reorthogonalization pass.
///
/// A column whose residual after both passes has norm `<= rank_tol * ||y_k||`
/// is dropped and listed in [`ReducedBasis::dropped`].
pub fn orthonormalize(y: &SnapshotMatrix, rank_tol: f64) -> Result<ReducedBasis> {
    if !(rank_tol.is_finite() && rank_tol >= 0.0) {
        return Err(MessError::Parameter(format!(
            "rank tolerance must be nonnegative, got {rank_tol}"
        )));
    }
    let m = y.nrows();
    let mut q: Vec<f64> = Vec::with_capacity(m * y.ncols().min(m));
    let mut retained = Vec::new();
    let mut dropped = Vec::new();
    let mut w = vec![0.0; m];

    for (k, col) in y.columns().enumerate() {
        let col_norm = norm(col);
        if col_norm == 0.0 || retained.len() == m {
            dropped.push(k);
            continue;
        }
        w.copy_from_slice(col);
        for _pass in 0..2 {
            for basis_vec in q.chunks_exact(m) {
                let c = dot(basis_vec, &w);
                axpy(-c, basis_vec, &mut w);
            }
        }
        let r = norm(&w);
        if r <= rank_tol * col_norm {
            dropped.push(k);
            continue;
        }
        q.extend(w.iter().map(|v| v / r));
        retained.push(k);
    }

    if retained.is_empty() {
        return Err(MessError::Degenerate(
            "cannot orthonormalize: every column is zero".into(),
        ));
    }
    Ok(ReducedBasis::from_parts(
        m,
        q,
        Provenance::MessQr,
        rank_tol,
        retained,
        dropped,
    ))
}

/// Orthogonal projection `Q (Q^T x)`.
pub fn project(b: &ReducedBasis, x: &[f64]) -> Result<Vec<f64>> {
    let z = b.coordinates(x)?;
    b.lift(&z)
}

/// Back-projects every column of `x` through the basis.
pub fn reconstruct(x: &SnapshotMatrix, b: &ReducedBasis) -> Result<SnapshotMatrix> {
    b.check_dim(x.nrows())?;
    let mut data = Vec::with_capacity(x.nrows() * x.ncols());
    for col in x.columns() {
        data.extend(project(b, col)?);
    }
    SnapshotMatrix::from_col_major(x.nrows(), x.ncols(), data)
}

/// Quantity that relative errors are divided by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ErrorScale {
    /// Largest pairwise snapshot distance.
    Diameter(f64),
    /// Frobenius norm of the snapshot matrix.
    Frobenius(f64),
}

impl ErrorScale {
    pub fn value(&self) -> f64 {
        match *self {
            ErrorScale::Diameter(v) | ErrorScale::Frobenius(v) => v,
        }
    }
}

/// Per-snapshot Euclidean reconstruction errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub per_snapshot: Vec<f64>,
    pub max_abs: f64,
    pub max_rel: f64,
    pub scale: ErrorScale,
    pub eps_abs: f64,
}

impl ErrorReport {
    /// Whether every error lies strictly inside the ball radius.
    pub fn within_radius(&self) -> bool {
        self.max_abs < self.eps_abs
    }
}

/// Errors `||x_j - Q Q^T x_j||`, relative values scaled by `||X||_F`.
pub fn reconstruction_errors(
    x: &SnapshotMatrix,
    b: &ReducedBasis,
    eps_abs: f64,
) -> Result<ErrorReport> {
    reconstruction_errors_scaled(x, b, eps_abs, ErrorScale::Frobenius(x.frobenius_norm()))
}

/// As [`reconstruction_errors`] with an explicit relative scale.
pub fn reconstruction_errors_scaled(
    x: &SnapshotMatrix,
    b: &ReducedBasis,
    eps_abs: f64,
    scale: ErrorScale,
) -> Result<ErrorReport> {
    b.check_dim(x.nrows())?;
    let mut per_snapshot = Vec::with_capacity(x.ncols());
    for col in x.columns() {
        let xhat = project(b, col)?;
        per_snapshot.push(euclidean_distance(col, &xhat));
    }
    Ok(report_from_errors(per_snapshot, scale, eps_abs))
}

pub(crate) fn report_from_errors(
    per_snapshot: Vec<f64>,
    scale: ErrorScale,
    eps_abs: f64,
) -> ErrorReport {
    let max_abs = per_snapshot.iter().copied().fold(0.0, f64::max);
    let denom = scale.value();
    let max_rel = if denom > 0.0 { max_abs / denom } else { 0.0 };
    ErrorReport {
        per_snapshot,
        max_abs,
        max_rel,
        scale,
        eps_abs,
    }
}
