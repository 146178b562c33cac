//! Snapshot generators: a 1-D brusselator, Gaussian random walks, and a
//! Galerkin reduced model of the brusselator.
//!
//! The brusselator is discretized by the method of lines on `N` interior
//! nodes `x_i = i / (N + 1)`:
//!
//! ```text
//! u_i' = 1 + u_i^2 v_i - 4 u_i + alpha (N+1)^2 (u_{i-1} - 2 u_i + u_{i+1})
//! v_i' = 3 u_i - u_i^2 v_i     + alpha (N+1)^2 (v_{i-1} - 2 v_i + v_{i+1})
//! ```
//!
//! with boundary values held at the steady state `(u, v) = (1, 3)` and
//! initial data `u = 1 + sin(2 pi x)`, `v = 3`. The state vector stacks all
//! `u_i` followed by all `v_i`, so `m = 2N`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::ReducedBasis;
use crate::error::{MessError, Result};
use crate::matrix::{axpy, euclidean_distance, norm, SnapshotMatrix};

/// Bound on the spectral radius of the reaction Jacobian over the region
/// the default trajectories visit.
const REACTION_RATE_BOUND: f64 = 40.0;

/// Reduced trajectories whose norm exceeds this factor times the initial
/// state norm are declared unstable.
const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    /// `u = 1 + sin(2 pi x)`, `v = 3`.
    Standard,
    /// Spatially constant `u`, `v`.
    Uniform { u: f64, v: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrusselatorConfig {
    pub grid_points: usize,
    pub alpha: f64,
    pub t_end: f64,
    pub n_snapshots: usize,
    pub dt_internal: f64,
    pub initial: InitialState,
}

impl Default for BrusselatorConfig {
    /// The desk-scale configuration: `N = 100`, 500 snapshots over `[0, 10]`.
    fn default() -> Self {
        Self {
            grid_points: 100,
            alpha: 0.02,
            t_end: 10.0,
            n_snapshots: 500,
            dt_internal: 5e-4,
            initial: InitialState::Standard,
        }
    }
}

impl BrusselatorConfig {
    /// State dimension `2N`.
    pub fn state_dim(&self) -> usize {
        2 * self.grid_points
    }

    fn diffusion_rate(&self) -> f64 {
        let h_inv = (self.grid_points + 1) as f64;
        self.alpha * h_inv * h_inv
    }

    /// Largest internal step accepted for explicit RK4.
    pub fn max_stable_dt(&self) -> f64 {
        0.4 / (2.0 * self.diffusion_rate() + REACTION_RATE_BOUND)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points == 0 {
            return Err(MessError::Parameter("grid_points must be positive".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(MessError::Parameter(format!(
                "diffusion coefficient must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(MessError::Parameter(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if self.n_snapshots < 2 {
            return Err(MessError::Parameter(
                "at least two snapshots are required".into(),
            ));
        }
        let spacing = self.t_end / self.n_snapshots as f64;
        if !(self.dt_internal > 0.0 && self.dt_internal <= spacing) {
            return Err(MessError::Parameter(format!(
                "dt_internal must lie in (0, {spacing}], got {}",
                self.dt_internal
            )));
        }
        let limit = self.max_stable_dt();
        if self.dt_internal > limit {
            return Err(MessError::Parameter(format!(
                "dt_internal {} exceeds the explicit stability limit {limit:.3e}",
                self.dt_internal
            )));
        }
        Ok(())
    }

    /// Initial state `[u_1..u_N, v_1..v_N]`.
    pub fn initial_state(&self) -> Vec<f64> {
        let n = self.grid_points;
        let mut x = vec![0.0; 2 * n];
        for i in 0..n {
            let (u, v) = match self.initial {
                InitialState::Standard => {
                    let xi = (i + 1) as f64 / (n + 1) as f64;
                    (1.0 + (2.0 * std::f64::consts::PI * xi).sin(), 3.0)
                }
                InitialState::Uniform { u, v } => (u, v),
            };
            x[i] = u;
            x[n + i] = v;
        }
        x
    }

    /// Output instants `t_k = k t_end / (n - 1)`.
    pub fn times(&self) -> Vec<f64> {
        let last = (self.n_snapshots - 1) as f64;
        (0..self.n_snapshots)
            .map(|k| self.t_end * k as f64 / last)
            .collect()
    }

    /// Internal steps per output interval and the resulting step size.
    fn substeps(&self) -> (usize, f64) {
        let interval = self.t_end / (self.n_snapshots - 1) as f64;
        let steps = (interval / self.dt_internal).ceil().max(1.0) as usize;
        (steps, interval / steps as f64)
    }

    /// Right-hand side of the semi-discrete system.
    pub fn rhs(&self, x: &[f64], out: &mut [f64]) {
        let n = self.grid_points;
        let c = self.diffusion_rate();
        let (u, v) = x.split_at(n);
        let (du, dv) = out.split_at_mut(n);
        for i in 0..n {
            let (ul, vl) = if i == 0 {
                (1.0, 3.0)
            } else {
                (u[i - 1], v[i - 1])
            };
            let (ur, vr) = if i + 1 == n {
                (1.0, 3.0)
            } else {
                (u[i + 1], v[i + 1])
            };
            let uuv = u[i] * u[i] * v[i];
            du[i] = 1.0 + uuv - 4.0 * u[i] + c * (ul - 2.0 * u[i] + ur);
            dv[i] = 3.0 * u[i] - uuv + c * (vl - 2.0 * v[i] + vr);
        }
    }
}

/// Classical fourth-order Runge-Kutta with scratch buffers.
struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    fn step<F: FnMut(&[f64], &mut [f64])>(&mut self, f: &mut F, y: &mut [f64], h: f64) {
        f(y, &mut self.k1);
        stage(&mut self.tmp, y, 0.5 * h, &self.k1);
        f(&self.tmp, &mut self.k2);
        stage(&mut self.tmp, y, 0.5 * h, &self.k2);
        f(&self.tmp, &mut self.k3);
        stage(&mut self.tmp, y, h, &self.k3);
        f(&self.tmp, &mut self.k4);
        for i in 0..y.len() {
            y[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

fn stage(out: &mut [f64], y: &[f64], h: f64, k: &[f64]) {
    for ((o, yi), ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + h * ki;
    }
}

/// Integrates the brusselator and returns the `2N x n_snapshots` matrix.
pub fn gen_brusselator(cfg: &BrusselatorConfig) -> Result<SnapshotMatrix> {
    cfg.validate()?;
    let dim = cfg.state_dim();
    let (steps, h) = cfg.substeps();
    let mut y = cfg.initial_state();
    let mut rk = Rk4::new(dim);
    let mut f = |x: &[f64], out: &mut [f64]| cfg.rhs(x, out);
    let mut data = Vec::with_capacity(dim * cfg.n_snapshots);
    data.extend_from_slice(&y);
    for k in 1..cfg.n_snapshots {
        for s in 0..steps {
            rk.step(&mut f, &mut y, h);
            if y.iter().any(|v| !v.is_finite()) {
                let step = (k - 1) * steps + s + 1;
                return Err(MessError::Numerical(format!(
                    "brusselator state became non-finite at internal step {step} (t = {:.6})",
                    step as f64 * h
                )));
            }
        }
        data.extend_from_slice(&y);
    }
    SnapshotMatrix::from_col_major(dim, cfg.n_snapshots, data)
}

/// Gaussian random walk: `x_0 = s xi_0`, `x_j = x_{j-1} + s xi_j`.
pub fn gen_random_walk(m: usize, n: usize, step_scale: f64, seed: u64) -> Result<SnapshotMatrix> {
    if m == 0 || n == 0 {
        return Err(MessError::Parameter(format!(
            "random walk dimensions must be positive, got {m} x {n}"
        )));
    }
    if !(step_scale.is_finite() && step_scale >= 0.0) {
        return Err(MessError::Parameter(format!(
            "step scale must be finite and nonnegative, got {step_scale}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(m * n);
    let mut state = vec![0.0; m];
    for _ in 0..n {
        for s in state.iter_mut() {
            let xi: f64 = StandardNormal.sample(&mut rng);
            *s += step_scale * xi;
        }
        data.extend_from_slice(&state);
    }
    SnapshotMatrix::from_col_major(m, n, data)
}

/// Full and reduced-then-lifted brusselator trajectories on a common grid.
#[derive(Debug, Clone)]
pub struct RomTrajectories {
    pub times: Vec<f64>,
    pub full: SnapshotMatrix,
    pub reduced: SnapshotMatrix,
    /// `||x(t) - Q z(t)|| / ||x(t)||` at every output instant.
    pub relative_errors: Vec<f64>,
}

impl RomTrajectories {
    pub fn max_relative_error(&self) -> f64 {
        self.relative_errors.iter().copied().fold(0.0, f64::max)
    }
}

/// Integrates the Galerkin model `z' = Q^T f(Q z)`, `z_0 = Q^T x_0`, with the
/// same RK4 steps as the full model and lifts it back with `Q`.
pub fn galerkin_rom_demo(cfg: &BrusselatorConfig, b: &ReducedBasis) -> Result<RomTrajectories> {
    cfg.validate()?;
    let dim = cfg.state_dim();
    if b.dim() != dim {
        return Err(MessError::Parameter(format!(
            "basis dimension {} does not match brusselator state dimension {dim}",
            b.dim()
        )));
    }
    let full = gen_brusselator(cfg)?;
    let (steps, h) = cfg.substeps();
    let x0 = cfg.initial_state();
    let limit = BLOWUP_FACTOR * norm(&x0).max(1.0);

    let mut z = b.coordinates(&x0)?;
    let mut lifted = vec![0.0; dim];
    let mut fx = vec![0.0; dim];
    let mut rhs = |z: &[f64], out: &mut [f64]| {
        lifted.iter_mut().for_each(|v| *v = 0.0);
        for (q, &c) in b.vectors().zip(z) {
            axpy(c, q, &mut lifted);
        }
        cfg.rhs(&lifted, &mut fx);
        for (o, q) in out.iter_mut().zip(b.vectors()) {
            *o = crate::matrix::dot(q, &fx);
        }
    };
    let mut rk = Rk4::new(b.ell());
    let mut data = Vec::with_capacity(dim * cfg.n_snapshots);
    data.extend(b.lift(&z)?);
    for k in 1..cfg.n_snapshots {
        for s in 0..steps {
            rk.step(&mut rhs, &mut z, h);
            let zn = norm(&z);
            if !zn.is_finite() || zn > limit {
                let step = (k - 1) * steps + s + 1;
                return Err(MessError::Numerical(format!(
                    "reduced model unstable: state norm {zn:.3e} at internal step {step} \
                     (t = {:.6})",
                    step as f64 * h
                )));
            }
        }
        data.extend(b.lift(&z)?);
    }
    let reduced = SnapshotMatrix::from_col_major(dim, cfg.n_snapshots, data)?;
    let relative_errors = full
        .columns()
        .zip(reduced.columns())
        .map(|(x, xr)| euclidean_distance(x, xr) / norm(x))
        .collect();
    Ok(RomTrajectories {
        times: cfg.times(),
        full,
        reduced,
        relative_errors,
    })
}
