//! Pairwise distances, recurrence matrices and the Frobenius entropy trace.
//!
//! Given snapshots `x_1, ..., x_n` and a radius `eps`, the recurrence matrix
//! marks the pairs that lie inside each other's open `eps`-ball. The
//! *potential* `v_j` is the fraction of recurrent pairs in the leading
//! `j x j` block and the *Frobenius entropy* is `eta_j = -ln v_j`. The trace
//! is built incrementally: the `(j+1)`-th snapshot contributes
//! `delta_j = 2 * #{k <= j : R(j+1, k)} + 1` new recurrent entries, so
//!
//! ```text
//! v_1 = 1,    v_{j+1} = (j^2 v_j + delta_j) / (j+1)^2
//! ```
//!
//! which needs only the new row of the recurrence matrix at each step.

use serde::{Deserialize, Serialize};

use crate::error::{MessError, Result};
use crate::matrix::{euclidean_distance, SnapshotMatrix};

/// Symmetric matrix of Euclidean distances between snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Largest entry; zero for a single snapshot.
    pub fn max(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

/// Euclidean distances between every pair of columns of `x`.
pub fn pairwise_distances(x: &SnapshotMatrix) -> DistanceMatrix {
    let n = x.ncols();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        let xi = x.column(i);
        for j in (i + 1)..n {
            let d = euclidean_distance(xi, x.column(j));
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    DistanceMatrix { n, entries }
}

/// Maximum pairwise distance between columns of `x`.
///
/// Computed pair by pair without materializing the distance matrix.
pub fn diameter(x: &SnapshotMatrix) -> f64 {
    let n = x.ncols();
    let mut best = 0.0_f64;
    for i in 0..n {
        let xi = x.column(i);
        for j in (i + 1)..n {
            best = best.max(euclidean_distance(xi, x.column(j)));
        }
    }
    best
}

/// Boolean matrix of open-ball membership, `R[i][j] = d(x_i, x_j) < eps`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceMatrix {
    n: usize,
    entries: Vec<bool>,
}

impl RecurrenceMatrix {
    /// Builds a recurrence matrix from explicit row-major entries.
    ///
    /// The entries must be symmetric with a true diagonal.
    pub fn from_entries(n: usize, entries: Vec<bool>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(MessError::Validation(format!(
                "recurrence matrix needs {n} x {n} entries, got {}",
                entries.len()
            )));
        }
        for i in 0..n {
            if !entries[i * n + i] {
                return Err(MessError::Validation(format!(
                    "recurrence diagonal entry {i} is false"
                )));
            }
            for j in (i + 1)..n {
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(MessError::Validation(format!(
                        "recurrence matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![false; n * n];
        for i in 0..n {
            entries[i * n + i] = true;
        }
        Self { n, entries }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.n + j]
    }

    pub fn is_identity(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.get(i, j) == (i == j)))
    }

    /// Squared Frobenius norm of the leading `j x j` block, i.e. the number
    /// of true entries in it.
    pub fn leading_block_count(&self, j: usize) -> u64 {
        let mut count = 0;
        for r in 0..j {
            count += self.entries[r * self.n..r * self.n + j]
                .iter()
                .filter(|&&b| b)
                .count() as u64;
        }
        count
    }
}

/// Thresholds a distance matrix with open balls of radius `eps`.
pub fn recurrence_matrix(d: &DistanceMatrix, eps: f64) -> Result<RecurrenceMatrix> {
    check_radius(eps)?;
    let n = d.len();
    let mut entries: Vec<bool> = d.entries.iter().map(|&dist| dist < eps).collect();
    for i in 0..n {
        entries[i * n + i] = true;
    }
    Ok(RecurrenceMatrix { n, entries })
}

pub(crate) fn check_radius(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(MessError::Parameter(format!(
            "ball radius must be positive and finite, got {eps}"
        )));
    }
    Ok(())
}

/// Potentials, entropies and increments of a snapshot stream.
///
/// Indices are 0-based in storage: `v[0]` is the potential after the first
/// snapshot, `delta[0]` is the increment contributed by the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTrace {
    /// Frobenius potentials, `v[0] = 1`.
    pub v: Vec<f64>,
    /// Frobenius entropies `-ln v`.
    pub eta: Vec<f64>,
    /// Dynamical entropies `eta[j+1] - eta[j]`; one shorter than `v`.
    pub h: Vec<f64>,
    /// Odd recurrence increments; one shorter than `v`.
    pub delta: Vec<u64>,
}

impl EntropyTrace {
    /// Runs the potential recursion over a sequence of increments.
    pub fn from_deltas(deltas: &[u64]) -> Self {
        let mut builder = TraceBuilder::new();
        for &d in deltas {
            builder.push(d);
        }
        builder.finish()
    }

    /// Number of snapshots covered.
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Whether the entropy strictly increases from each snapshot to the next.
    pub fn is_strictly_increasing(&self) -> bool {
        self.eta.windows(2).all(|w| w[1] > w[0])
    }

    /// Potential at a 1-based step index.
    pub fn potential_at(&self, step: usize) -> Option<f64> {
        step.checked_sub(1).and_then(|i| self.v.get(i)).copied()
    }
}

/// Incremental form of the potential recursion, one snapshot at a time.
#[derive(Debug, Clone, Default)]
pub(crate) struct TraceBuilder {
    v: Vec<f64>,
    delta: Vec<u64>,
}

impl TraceBuilder {
    pub(crate) fn new() -> Self {
        Self {
            v: vec![1.0],
            delta: Vec::new(),
        }
    }

    /// Appends the next snapshot's increment and returns the new potential.
    pub(crate) fn push(&mut self, delta: u64) -> f64 {
        let j = self.v.len() as f64;
        let vj = *self.v.last().expect("trace starts with v_1");
        let next = (j * j * vj + delta as f64) / ((j + 1.0) * (j + 1.0));
        self.v.push(next);
        self.delta.push(delta);
        next
    }

    pub(crate) fn potentials(&self) -> &[f64] {
        &self.v
    }

    pub(crate) fn finish(self) -> EntropyTrace {
        let eta: Vec<f64> = self.v.iter().map(|v| -v.ln()).collect();
        let h = eta.windows(2).map(|w| w[1] - w[0]).collect();
        EntropyTrace {
            v: self.v,
            eta,
            h,
            delta: self.delta,
        }
    }
}

/// Entropy trace of a recurrence matrix, built by the potential recursion.
pub fn entropy_trace(r: &RecurrenceMatrix) -> EntropyTrace {
    let mut builder = TraceBuilder::new();
    for row in 1..r.len() {
        let recurrent = (0..row).filter(|&k| r.get(row, k)).count() as u64;
        builder.push(2 * recurrent + 1);
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-14 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn distances_of_scalar_snapshots() {
        let x = SnapshotMatrix::from_scalars(&[0.0, 3.0, 1.0]).unwrap();
        let d = pairwise_distances(&x);
        assert_eq!(d.get(0, 1), 3.0);
        assert_eq!(d.get(0, 2), 1.0);
        assert_eq!(d.get(1, 2), 2.0);
        assert_eq!(d.get(2, 1), 2.0);
        assert_eq!(diameter(&x), 3.0);
        assert_eq!(d.max(), 3.0);
    }

    #[test]
    fn identical_and_single_columns() {
        let x = SnapshotMatrix::from_columns(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]).unwrap();
        let d = pairwise_distances(&x);
        assert!((0..3).all(|i| d.row(i).iter().all(|&v| v == 0.0)));
        assert_eq!(diameter(&x), 0.0);

        let one = SnapshotMatrix::from_scalars(&[4.0]).unwrap();
        let d = pairwise_distances(&one);
        assert_eq!(d.len(), 1);
        assert_eq!(d.get(0, 0), 0.0);
        assert_eq!(diameter(&one), 0.0);
    }

    #[test]
    fn open_ball_threshold() {
        let x = SnapshotMatrix::from_scalars(&[0.0, 0.5, 1.2]).unwrap();
        let r = recurrence_matrix(&pairwise_distances(&x), 1.0).unwrap();
        // |1.2 - 0.5| = 0.7 < 1, so the last two snapshots recur as well
        let expected = [[true, true, false], [true, true, true], [false, true, true]];
        for (i, row) in expected.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                assert_eq!(r.get(i, j), e, "({i}, {j})");
            }
        }

        // distance exactly eps is not recurrent
        let x = SnapshotMatrix::from_scalars(&[0.0, 1.0]).unwrap();
        let r = recurrence_matrix(&pairwise_distances(&x), 1.0).unwrap();
        assert!(r.is_identity());
    }

    #[test]
    fn radius_extremes() {
        let x = SnapshotMatrix::from_scalars(&[0.0, 0.4, 1.0, 2.5]).unwrap();
        let d = pairwise_distances(&x);
        let all = recurrence_matrix(&d, 10.0).unwrap();
        assert!((0..4).all(|i| (0..4).all(|j| all.get(i, j))));
        let none = recurrence_matrix(&d, 0.3).unwrap();
        assert!(none.is_identity());
        assert!(matches!(
            recurrence_matrix(&d, 0.0),
            Err(MessError::Parameter(_))
        ));
        assert!(recurrence_matrix(&d, -1.0).is_err());
        assert!(recurrence_matrix(&d, f64::NAN).is_err());
    }

    #[test]
    fn worked_three_snapshot_trace() {
        let x = SnapshotMatrix::from_scalars(&[0.0, 0.5, 1.2]).unwrap();
        let r = recurrence_matrix(&pairwise_distances(&x), 1.0).unwrap();
        let t = entropy_trace(&r);
        assert_eq!(t.delta, vec![3, 3]);
        assert!(close(t.v[2], 7.0 / 9.0));
        assert_eq!(r.leading_block_count(3), 7);

        // moving the last snapshot out of both balls leaves one recurrent pair
        let x = SnapshotMatrix::from_scalars(&[0.0, 0.5, 1.6]).unwrap();
        let r = recurrence_matrix(&pairwise_distances(&x), 1.0).unwrap();
        let t = entropy_trace(&r);
        assert_eq!(t.delta, vec![3, 1]);
        assert_eq!(t.v[0], 1.0);
        assert_eq!(t.v[1], 1.0);
        assert!(close(t.v[2], 5.0 / 9.0));
        assert_eq!(t.eta[0], 0.0);
        assert!(close(t.eta[2], (9.0_f64 / 5.0).ln()));
        assert_eq!(t.h.len(), 2);
        assert_eq!(r.leading_block_count(2), 4);
        assert_eq!(r.leading_block_count(3), 5);
    }

    #[test]
    fn identity_trace_is_maximal() {
        let t = entropy_trace(&RecurrenceMatrix::identity(50));
        for (i, &v) in t.v.iter().enumerate() {
            let j = (i + 1) as f64;
            assert!(close(v, 1.0 / j));
            assert!(close(t.eta[i], j.ln()));
        }
        assert!(t.delta.iter().all(|&d| d == 1));
        assert!(t.is_strictly_increasing());
    }

    #[test]
    fn full_recurrence_trace_is_flat() {
        let r = RecurrenceMatrix::from_entries(6, vec![true; 36]).unwrap();
        let t = entropy_trace(&r);
        assert!(t.v.iter().all(|&v| v == 1.0));
        assert!(t.eta.iter().all(|&e| e == 0.0));
        assert!(!t.is_strictly_increasing());
    }

    #[test]
    fn malformed_recurrence_rejected() {
        assert!(RecurrenceMatrix::from_entries(2, vec![true, false, true, true]).is_err());
        assert!(RecurrenceMatrix::from_entries(2, vec![false, false, false, true]).is_err());
        assert!(RecurrenceMatrix::from_entries(2, vec![true; 3]).is_err());
    }

    #[test]
    fn single_snapshot_trace() {
        let t = entropy_trace(&RecurrenceMatrix::identity(1));
        assert_eq!(t.v, vec![1.0]);
        assert!(t.h.is_empty() && t.delta.is_empty());
        assert_eq!(t.potential_at(1), Some(1.0));
        assert_eq!(t.potential_at(0), None);
    }
}
