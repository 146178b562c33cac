//! Proper orthogonal decomposition: thin SVD and energy-based truncation.
//!
//! The SVD first reduces the tall side with a Householder QR, `X = Q R`, and
//! then runs one-sided (Hestenes) Jacobi on `R^T`. Jacobi on the transposed
//! triangular factor converges in few sweeps, and the accumulated rotations
//! give the left singular vectors `Q V_J` directly, so `U` stays orthonormal
//! even when trailing singular values vanish.

use serde::{Deserialize, Serialize};

use crate::basis::{Provenance, ReducedBasis};
use crate::error::{MessError, Result};
use crate::matrix::{axpy, dot, norm, SnapshotMatrix};

const MAX_SWEEPS: usize = 60;

/// Thin singular value decomposition `X = U diag(sigma) V^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    m: usize,
    n: usize,
    /// `m x r`, column-major.
    pub u: Vec<f64>,
    /// Non-increasing, nonnegative.
    pub sigma: Vec<f64>,
    /// `n x r`, column-major.
    pub v: Vec<f64>,
    /// Jacobi sweeps used.
    pub sweeps: usize,
}

impl SvdFactors {
    pub fn rank_bound(&self) -> usize {
        self.sigma.len()
    }

    pub fn left_vector(&self, k: usize) -> &[f64] {
        &self.u[k * self.m..(k + 1) * self.m]
    }

    pub fn right_vector(&self, k: usize) -> &[f64] {
        &self.v[k * self.n..(k + 1) * self.n]
    }

    /// Number of nonzero singular values. Directions at round-off level of
    /// `||X||_F` are reported with a zero singular value.
    pub fn rank(&self) -> usize {
        self.sigma.iter().filter(|&&s| s > 0.0).count()
    }

    /// Numerical rank: singular values above `max(m, n) * eps * sigma_1`.
    pub fn numerical_rank(&self) -> usize {
        let Some(&top) = self.sigma.first() else {
            return 0;
        };
        let tol = self.m.max(self.n) as f64 * f64::EPSILON * top;
        self.sigma.iter().filter(|&&s| s > tol).count()
    }

    /// The first `ell` columns of `U` as a basis, without a rank check.
    /// Columns past the rank belong to zero singular values but are still
    /// orthonormal, which lets size-matched comparisons go beyond the rank.
    pub fn leading_left_vectors(&self, ell: usize) -> Result<ReducedBasis> {
        if ell == 0 || ell > self.rank_bound() {
            return Err(MessError::Parameter(format!(
                "requested {ell} left singular vectors of {}",
                self.rank_bound()
            )));
        }
        Ok(ReducedBasis::from_parts(
            self.m,
            self.u[..ell * self.m].to_vec(),
            Provenance::Pod,
            self.m.max(self.n) as f64 * f64::EPSILON,
            (0..ell).collect(),
            Vec::new(),
        ))
    }

    /// Rank-`ell` approximation `U_ell Sigma_ell V_ell^T`.
    pub fn truncated(&self, ell: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.m * self.n];
        for k in 0..ell.min(self.sigma.len()) {
            let u = self.left_vector(k);
            for (j, &vj) in self.right_vector(k).iter().enumerate() {
                axpy(
                    self.sigma[k] * vj,
                    u,
                    &mut out[j * self.m..(j + 1) * self.m],
                );
            }
        }
        out
    }
}

/// Householder reflectors of a tall QR, stored LAPACK-style.
struct HouseholderQr {
    m: usize,
    n: usize,
    /// Reflector vectors below the diagonal, `R` on and above it.
    a: Vec<f64>,
    tau: Vec<f64>,
}

impl HouseholderQr {
    fn factor(m: usize, n: usize, mut a: Vec<f64>) -> Self {
        debug_assert!(m >= n);
        let mut tau = vec![0.0; n];
        for k in 0..n {
            let (head, tail) = a.split_at_mut((k + 1) * m);
            let col = &mut head[k * m + k..];
            let alpha = col[0];
            let xnorm = norm(&col[1..]);
            if xnorm == 0.0 {
                tau[k] = 0.0;
                continue;
            }
            let beta = -alpha.signum() * alpha.hypot(xnorm);
            tau[k] = (beta - alpha) / beta;
            let scale = 1.0 / (alpha - beta);
            for v in &mut col[1..] {
                *v *= scale;
            }
            col[0] = beta;

            // apply H_k = I - tau v v^T with v = (1, col[1..]) to trailing columns
            let v_tail = &col[1..];
            for c in tail.chunks_exact_mut(m) {
                let c = &mut c[k..];
                let s = tau[k] * (c[0] + dot(v_tail, &c[1..]));
                c[0] -= s;
                axpy(-s, v_tail, &mut c[1..]);
            }
        }
        Self { m, n, a, tau }
    }

    fn r(&self) -> Vec<f64> {
        let n = self.n;
        let mut r = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..=j {
                r[j * n + i] = self.a[j * self.m + i];
            }
        }
        r
    }

    /// Computes `Q [b; 0]` for an `n x p` column-major `b`.
    fn apply_q(&self, b: &[f64], p: usize) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        let mut out = vec![0.0; m * p];
        for j in 0..p {
            out[j * m..j * m + n].copy_from_slice(&b[j * n..(j + 1) * n]);
        }
        for k in (0..n).rev() {
            if self.tau[k] == 0.0 {
                continue;
            }
            let v_tail = &self.a[k * m + k + 1..(k + 1) * m];
            for c in out.chunks_exact_mut(m) {
                let c = &mut c[k..];
                let s = self.tau[k] * (c[0] + dot(v_tail, &c[1..]));
                c[0] -= s;
                axpy(-s, v_tail, &mut c[1..]);
            }
        }
        out
    }
}

/// One-sided Jacobi on the columns of `w` (`rows x cols`), accumulating the
/// rotations into `cols x cols` matrix `acc`. Returns the number of sweeps.
fn hestenes(w: &mut [f64], rows: usize, cols: usize, acc: &mut [f64]) -> Result<usize> {
    let tol = (rows.max(cols) as f64) * f64::EPSILON;
    let mut norms2: Vec<f64> = w.chunks_exact(rows).map(|c| dot(c, c)).collect();
    // rotations preserve the total; columns below round-off of it are noise
    let total: f64 = norms2.iter().sum();
    let noise = f64::EPSILON * f64::EPSILON * total;
    for sweep in 1..=MAX_SWEEPS {
        let mut rotated = false;
        let mut off = 0.0_f64;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (alpha, beta) = (norms2[p], norms2[q]);
                if alpha <= noise || beta <= noise {
                    continue;
                }
                let (wp, wq) = column_pair(w, rows, p, q);
                let gamma = dot(wp, wq);
                let cosine = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                off = off.max(cosine);
                if cosine <= tol {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(wp, wq, c, s);
                norms2[p] = dot(wp, wp);
                norms2[q] = dot(wq, wq);
                let (ap, aq) = column_pair(acc, cols, p, q);
                rotate(ap, aq, c, s);
            }
        }
        if !rotated {
            return Ok(sweep);
        }
        if sweep == MAX_SWEEPS {
            return Err(MessError::Numerical(format!(
                "Jacobi SVD did not converge after {MAX_SWEEPS} sweeps \
                 (largest off-diagonal cosine {off:.3e}, tolerance {tol:.3e})"
            )));
        }
    }
    unreachable!()
}

fn column_pair(a: &mut [f64], rows: usize, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let (left, right) = a.split_at_mut(q * rows);
    (&mut left[p * rows..(p + 1) * rows], &mut right[..rows])
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; a.len()];
    for j in 0..cols {
        for i in 0..rows {
            t[i * cols + j] = a[j * rows + i];
        }
    }
    t
}

/// Completes orthonormal columns `k..r` of `basis` (`dim x r`) where the
/// corresponding singular value vanished.
fn complete_orthonormal(basis: &mut [f64], dim: usize, valid: &[bool]) {
    let r = valid.len();
    for k in 0..r {
        if valid[k] {
            continue;
        }
        let others: Vec<usize> = (0..r).filter(|&o| o != k && (valid[o] || o < k)).collect();
        let residual = |i: usize| {
            let mut w = vec![0.0; dim];
            w[i] = 1.0;
            for _pass in 0..2 {
                for &o in &others {
                    let q = &basis[o * dim..(o + 1) * dim];
                    let c = dot(q, &w);
                    axpy(-c, q, &mut w);
                }
            }
            w
        };
        // the unit vector least covered by the span; its residual norm is at
        // least sqrt(missing / dim)
        let mut best = residual(0);
        let mut best_norm = norm(&best);
        for i in 1..dim {
            if best_norm > 0.5 {
                break;
            }
            let w = residual(i);
            let nw = norm(&w);
            if nw > best_norm {
                best = w;
                best_norm = nw;
            }
        }
        for (dst, v) in basis[k * dim..(k + 1) * dim].iter_mut().zip(&best) {
            *dst = v / best_norm;
        }
    }
}

/// Thin SVD of a tall-or-square column-major matrix.
fn svd_tall(m: usize, n: usize, data: Vec<f64>) -> Result<SvdFactors> {
    let qr = HouseholderQr::factor(m, n, data);
    let mut w = transpose(&qr.r(), n, n);
    let mut acc = vec![0.0; n * n];
    for k in 0..n {
        acc[k * n + k] = 1.0;
    }
    let sweeps = hestenes(&mut w, n, n, &mut acc)?;

    // R^T acc = W, so R = acc W^T and X = (Q acc) W^T; columns of W are
    // sigma_k times the right singular vectors.
    let mut order: Vec<(usize, f64)> = w.chunks_exact(n).map(norm).enumerate().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    // columns the Jacobi loop treated as noise carry no singular direction
    let total: f64 = order.iter().map(|o| o.1 * o.1).sum();
    let zero_tol = f64::EPSILON * total.sqrt();
    let mut sigma = Vec::with_capacity(n);
    let mut v = vec![0.0; n * n];
    let mut left = vec![0.0; n * n];
    let mut valid = vec![true; n];
    for (dst, &(src, s)) in order.iter().enumerate() {
        left[dst * n..(dst + 1) * n].copy_from_slice(&acc[src * n..(src + 1) * n]);
        if s > zero_tol {
            for (o, x) in v[dst * n..(dst + 1) * n]
                .iter_mut()
                .zip(&w[src * n..(src + 1) * n])
            {
                *o = x / s;
            }
            sigma.push(s);
        } else {
            valid[dst] = false;
            sigma.push(0.0);
        }
    }
    complete_orthonormal(&mut v, n, &valid);
    let u = qr.apply_q(&left, n);
    Ok(SvdFactors {
        m,
        n,
        u,
        sigma,
        v,
        sweeps,
    })
}

/// Economy-size SVD with `r = min(m, n)` singular triplets.
pub fn svd(x: &SnapshotMatrix) -> Result<SvdFactors> {
    let (m, n) = (x.nrows(), x.ncols());
    if m >= n {
        svd_tall(m, n, x.as_col_major().to_vec())
    } else {
        let t = svd_tall(n, m, transpose(x.as_col_major(), m, n))?;
        Ok(SvdFactors {
            m,
            n,
            u: t.v,
            sigma: t.sigma,
            v: t.u,
            sweeps: t.sweeps,
        })
    }
}

/// Result of energy-based truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyTruncation {
    pub ell: usize,
    /// Set when no `ell` below the rank captures enough energy, so the full
    /// rank was returned.
    pub reached_rank: bool,
}

/// Smallest `ell` with `sum_{k<=ell} sigma_k^2 >= (1 - energy_eps^2) sum_k sigma_k^2`.
pub fn truncate_energy(sigma: &[f64], energy_eps: f64) -> Result<EnergyTruncation> {
    if !(energy_eps > 0.0 && energy_eps < 1.0) {
        return Err(MessError::Parameter(format!(
            "energy tolerance must lie in (0, 1), got {energy_eps}"
        )));
    }
    if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(MessError::Validation(
            "singular values must be finite and nonnegative".into(),
        ));
    }
    if sigma.windows(2).any(|w| w[1] > w[0]) {
        return Err(MessError::Validation(
            "singular values must be sorted non-increasing".into(),
        ));
    }
    let total: f64 = sigma.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return Err(MessError::Degenerate("all singular values are zero".into()));
    }
    let rank = sigma.iter().filter(|&&s| s > 0.0).count();
    let target = (1.0 - energy_eps * energy_eps) * total;
    let mut captured = 0.0;
    for (k, s) in sigma.iter().take(rank).enumerate() {
        captured += s * s;
        if captured >= target {
            let ell = k + 1;
            return Ok(EnergyTruncation {
                ell,
                reached_rank: ell == rank,
            });
        }
    }
    Ok(EnergyTruncation {
        ell: rank,
        reached_rank: true,
    })
}

/// How many POD modes to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PodTarget {
    Rank(usize),
    EnergyEps(f64),
}

/// Leading left singular vectors of `x` as a reduced basis.
pub fn pod_basis(x: &SnapshotMatrix, target: PodTarget) -> Result<ReducedBasis> {
    let f = svd(x)?;
    pod_basis_from_factors(&f, target)
}

/// As [`pod_basis`], reusing an existing factorization.
pub fn pod_basis_from_factors(f: &SvdFactors, target: PodTarget) -> Result<ReducedBasis> {
    let rank = f.rank();
    let ell = match target {
        PodTarget::Rank(ell) => {
            if ell == 0 || ell > rank {
                return Err(MessError::Parameter(format!(
                    "requested {ell} POD modes but the rank is {rank}"
                )));
            }
            ell
        }
        PodTarget::EnergyEps(eps) => truncate_energy(&f.sigma, eps)?.ell,
    };
    f.leading_left_vectors(ell)
}
