//! Maximum entropy snapshot sampling.
//!
//! A snapshot is kept only if it lies at distance `>= eps` from every
//! snapshot kept before it. The kept set is therefore `eps`-separated, which
//! is exactly the condition under which its Frobenius entropy trace is
//! strictly increasing, and every discarded snapshot sits inside the open
//! `eps`-ball of an earlier kept one. The second property is what bounds the
//! back-projection error of a basis built from the kept snapshots.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{MessError, Result};
use crate::matrix::{euclidean_distance, SnapshotMatrix};
use crate::metrics::{
    check_radius, diameter, entropy_trace, pairwise_distances, recurrence_matrix, EntropyTrace,
    TraceBuilder,
};

/// How the ball radius is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum EpsilonRule {
    /// Radius in state units.
    Absolute(f64),
    /// Fraction in `(0, 1)` of the largest pairwise snapshot distance.
    RelativeToDiameter(f64),
}

impl EpsilonRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EpsilonRule::Absolute(eps) => check_radius(eps),
            EpsilonRule::RelativeToDiameter(frac) => {
                if frac.is_finite() && frac > 0.0 && frac < 1.0 {
                    Ok(())
                } else {
                    Err(MessError::Parameter(format!(
                        "relative radius must lie in (0, 1), got {frac}"
                    )))
                }
            }
        }
    }

    /// Absolute radius for the snapshots in `x`.
    pub fn resolve(&self, x: &SnapshotMatrix) -> Result<f64> {
        self.validate()?;
        match *self {
            EpsilonRule::Absolute(eps) => Ok(eps),
            EpsilonRule::RelativeToDiameter(frac) => {
                let diam = diameter(x);
                if diam <= 0.0 {
                    return Err(MessError::Degenerate(
                        "relative radius requested but all snapshots coincide".into(),
                    ));
                }
                Ok(frac * diam)
            }
        }
    }

    /// Same rule with a precomputed diameter.
    pub fn resolve_with_diameter(&self, diam: f64) -> Result<f64> {
        self.validate()?;
        match *self {
            EpsilonRule::Absolute(eps) => Ok(eps),
            EpsilonRule::RelativeToDiameter(_) if diam <= 0.0 => Err(MessError::Degenerate(
                "relative radius requested but all snapshots coincide".into(),
            )),
            EpsilonRule::RelativeToDiameter(frac) => Ok(frac * diam),
        }
    }
}

impl fmt::Display for EpsilonRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsilonRule::Absolute(v) => write!(f, "absolute {v}"),
            EpsilonRule::RelativeToDiameter(v) => write!(f, "relative {v}"),
        }
    }
}

/// Quantity watched for the plateau that stops sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateauCriterion {
    /// `|v_{j+1} - v_j| < tol`
    #[default]
    Potential,
    /// `|h_{j+1} - h_j| < tol`
    DynamicalEntropy,
}

/// When to stop accepting snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopConfig {
    pub potential_tol: f64,
    /// Consecutive sub-tolerance steps required; 1 stops at the first one.
    pub window: usize,
    pub enabled: bool,
    #[serde(default)]
    pub criterion: PlateauCriterion,
}

impl Default for StopConfig {
    fn default() -> Self {
        Self {
            potential_tol: 1e-3,
            window: 10,
            enabled: false,
            criterion: PlateauCriterion::Potential,
        }
    }
}

impl StopConfig {
    pub fn enabled(potential_tol: f64, window: usize) -> Self {
        Self {
            potential_tol,
            window,
            enabled: true,
            criterion: PlateauCriterion::Potential,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.potential_tol.is_finite() && self.potential_tol > 0.0) {
            return Err(MessError::Parameter(format!(
                "stop tolerance must be positive, got {}",
                self.potential_tol
            )));
        }
        if self.window == 0 {
            return Err(MessError::Parameter(
                "stop window must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    /// 0-based indices of the kept snapshots, strictly increasing, starting at 0.
    pub selected: Vec<usize>,
    pub trace: EntropyTrace,
    pub epsilon_abs: f64,
    pub epsilon_rule: EpsilonRule,
    /// 1-based step at which the potential plateau begins.
    pub stop_index: Option<usize>,
    pub n_seen: usize,
    /// False when the trace counts recurrences against kept snapshots only.
    pub trace_exact: bool,
}

impl SampleResult {
    /// Number of kept snapshots.
    pub fn ell(&self) -> usize {
        self.selected.len()
    }

    /// Horizon implied by the detected plateau, if any.
    pub fn horizon(&self) -> Option<HorizonEstimate> {
        let j_star = self.stop_index?;
        let v_star = self.trace.potential_at(j_star)?;
        horizon_bound(j_star, v_star).ok()
    }
}

/// Online plateau detector shared by the offline and streaming samplers.
#[derive(Debug, Clone)]
struct PlateauTracker {
    cfg: StopConfig,
    run: usize,
    stop_index: Option<usize>,
}

impl PlateauTracker {
    fn new(cfg: StopConfig) -> Self {
        Self {
            cfg,
            run: 0,
            stop_index: None,
        }
    }

    fn stopped(&self) -> bool {
        self.stop_index.is_some()
    }

    /// Inspects the newest potential in `v` (1-based length `L`).
    fn observe(&mut self, v: &[f64]) {
        if !self.cfg.enabled || self.stopped() {
            return;
        }
        let Some((k, diff)) = latest_difference(v, self.cfg.criterion) else {
            return;
        };
        if diff.abs() < self.cfg.potential_tol {
            self.run += 1;
            if self.run == self.cfg.window {
                self.stop_index = Some(k + 1 - self.cfg.window);
            }
        } else {
            self.run = 0;
        }
    }
}

/// Returns the 1-based index `k` and value of the newest watched difference.
fn latest_difference(v: &[f64], criterion: PlateauCriterion) -> Option<(usize, f64)> {
    let len = v.len();
    match criterion {
        PlateauCriterion::Potential => (len >= 2).then(|| (len - 1, v[len - 1] - v[len - 2])),
        PlateauCriterion::DynamicalEntropy => (len >= 3).then(|| {
            let h_new = v[len - 2].ln() - v[len - 1].ln();
            let h_old = v[len - 3].ln() - v[len - 2].ln();
            (len - 2, h_new - h_old)
        }),
    }
}

/// Greedy sampling of the columns of `x` with the exact entropy trace.
///
/// Column 0 is always kept; column `j` is kept iff its distance to every
/// previously kept column is at least the resolved radius. The trace counts
/// recurrences against all previous columns, so this costs `O(m n^2)`.
pub fn mess_sample(
    x: &SnapshotMatrix,
    rule: EpsilonRule,
    stop: StopConfig,
) -> Result<SampleResult> {
    let eps = rule.resolve(x)?;
    stop.validate()?;

    let n = x.ncols();
    let mut builder = TraceBuilder::new();
    let mut tracker = PlateauTracker::new(stop);
    let mut is_selected = vec![false; n];
    is_selected[0] = true;
    let mut selected = vec![0];

    for j in 1..n {
        let xj = x.column(j);
        let mut recurrent = 0u64;
        let mut covered = false;
        for k in 0..j {
            if euclidean_distance(xj, x.column(k)) < eps {
                recurrent += 1;
                covered |= is_selected[k];
            }
        }
        builder.push(2 * recurrent + 1);
        tracker.observe(builder.potentials());
        if !covered && !tracker.stopped() {
            is_selected[j] = true;
            selected.push(j);
        }
    }

    Ok(SampleResult {
        selected,
        trace: builder.finish(),
        epsilon_abs: eps,
        epsilon_rule: rule,
        stop_index: tracker.stop_index,
        n_seen: n,
        trace_exact: true,
    })
}

/// Online sampler that stores only the kept snapshots.
///
/// Selection is identical to [`mess_sample`] under the same absolute radius.
/// The trace is a surrogate: each increment counts recurrences against the
/// kept snapshots only, which under-counts the exact increment.
#[derive(Debug, Clone)]
pub struct StreamingSampler {
    eps: f64,
    dim: Option<usize>,
    kept: Vec<Vec<f64>>,
    selected: Vec<usize>,
    builder: TraceBuilder,
    tracker: PlateauTracker,
    n_seen: usize,
}

impl StreamingSampler {
    pub fn new(eps_abs: f64, stop: StopConfig) -> Result<Self> {
        check_radius(eps_abs)?;
        stop.validate()?;
        Ok(Self {
            eps: eps_abs,
            dim: None,
            kept: Vec::new(),
            selected: Vec::new(),
            builder: TraceBuilder::new(),
            tracker: PlateauTracker::new(stop),
            n_seen: 0,
        })
    }

    /// Feeds the next snapshot; returns whether it was kept.
    pub fn push(&mut self, snapshot: &[f64]) -> Result<bool> {
        let index = self.n_seen;
        match self.dim {
            None => {
                if snapshot.is_empty() {
                    return Err(MessError::Validation("empty snapshot".into()));
                }
                self.dim = Some(snapshot.len());
            }
            Some(m) if m != snapshot.len() => {
                return Err(MessError::Stream {
                    index,
                    expected: m,
                    found: snapshot.len(),
                });
            }
            Some(_) => {}
        }
        if let Some(pos) = snapshot.iter().position(|v| !v.is_finite()) {
            return Err(MessError::Validation(format!(
                "non-finite entry at row {pos} of snapshot {index}"
            )));
        }
        self.n_seen += 1;

        if index == 0 {
            self.kept.push(snapshot.to_vec());
            self.selected.push(0);
            return Ok(true);
        }

        let recurrent = self
            .kept
            .iter()
            .filter(|y| euclidean_distance(snapshot, y) < self.eps)
            .count() as u64;
        self.builder.push(2 * recurrent + 1);
        self.tracker.observe(self.builder.potentials());
        let accept = recurrent == 0 && !self.tracker.stopped();
        if accept {
            self.kept.push(snapshot.to_vec());
            self.selected.push(index);
        }
        Ok(accept)
    }

    pub fn n_seen(&self) -> usize {
        self.n_seen
    }

    pub fn stop_index(&self) -> Option<usize> {
        self.tracker.stop_index
    }

    /// Kept snapshots so far, in arrival order.
    pub fn kept(&self) -> &[Vec<f64>] {
        &self.kept
    }

    /// Kept snapshots as a matrix, ready for orthonormalization.
    pub fn kept_matrix(&self) -> Result<SnapshotMatrix> {
        if self.kept.is_empty() {
            return Err(MessError::Degenerate("no snapshots received".into()));
        }
        SnapshotMatrix::from_columns(&self.kept)
    }

    pub fn finish(self) -> Result<SampleResult> {
        if self.n_seen == 0 {
            return Err(MessError::Degenerate("empty snapshot stream".into()));
        }
        Ok(SampleResult {
            selected: self.selected,
            trace: self.builder.finish(),
            epsilon_abs: self.eps,
            epsilon_rule: EpsilonRule::Absolute(self.eps),
            stop_index: self.tracker.stop_index,
            n_seen: self.n_seen,
            trace_exact: false,
        })
    }
}

/// Runs a [`StreamingSampler`] over an iterator of snapshots.
pub fn mess_sample_streaming<I, S>(
    source: I,
    eps_abs: f64,
    stop: StopConfig,
) -> Result<SampleResult>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[f64]>,
{
    let mut sampler = StreamingSampler::new(eps_abs, stop)?;
    for snapshot in source {
        sampler.push(snapshot.as_ref())?;
    }
    sampler.finish()
}

/// Whether the columns of `x_sel` are pairwise at least `eps_abs` apart.
///
/// Equivalently, whether their entropy trace is strictly increasing; both
/// routes are evaluated and must agree.
pub fn verify_max_entropy(x_sel: &SnapshotMatrix, eps_abs: f64) -> Result<bool> {
    check_radius(eps_abs)?;
    let d = pairwise_distances(x_sel);
    let n = d.len();
    let separated = (0..n).all(|i| ((i + 1)..n).all(|j| d.get(i, j) >= eps_abs));
    let increasing = entropy_trace(&recurrence_matrix(&d, eps_abs)?).is_strictly_increasing();
    if separated != increasing {
        return Err(MessError::Numerical(format!(
            "separation ({separated}) and entropy monotonicity ({increasing}) disagree"
        )));
    }
    Ok(separated)
}

/// First 1-based step `j` such that the watched difference stays below the
/// tolerance for steps `j ..= j + window - 1`.
///
/// The `enabled` flag of `stop` is not consulted.
pub fn detect_plateau(trace: &EntropyTrace, stop: &StopConfig) -> Option<usize> {
    let diffs: Vec<f64> = match stop.criterion {
        PlateauCriterion::Potential => trace.v.windows(2).map(|w| w[1] - w[0]).collect(),
        PlateauCriterion::DynamicalEntropy => trace.h.windows(2).map(|w| w[1] - w[0]).collect(),
    };
    if stop.window == 0 || stop.window > diffs.len() {
        return None;
    }
    let mut run = 0;
    for (i, d) in diffs.iter().enumerate() {
        if d.abs() < stop.potential_tol {
            run += 1;
            if run == stop.window {
                return Some(i + 2 - stop.window);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// Largest future offset covered by the horizon inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Unbounded,
    Finite(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonEstimate {
    pub j_star: usize,
    pub v_star: f64,
    pub i_max: Horizon,
    /// False when not even `i = 1` satisfies the inequality.
    pub guaranteed: bool,
}

/// `i (1 - v*) < j* v* - (1 - v*) / 2`
pub fn horizon_inequality_holds(i: u64, j_star: usize, v_star: f64) -> bool {
    let gap = 1.0 - v_star;
    (i as f64) * gap < (j_star as f64) * v_star - 0.5 * gap
}

/// Largest `i >= 0` satisfying the horizon inequality for a plateau at
/// step `j_star` with potential `v_star`.
pub fn horizon_bound(j_star: usize, v_star: f64) -> Result<HorizonEstimate> {
    if j_star == 0 {
        return Err(MessError::Parameter(
            "plateau step must be at least 1".into(),
        ));
    }
    if !(v_star > 0.0 && v_star <= 1.0) {
        return Err(MessError::Parameter(format!(
            "plateau potential must lie in (0, 1], got {v_star}"
        )));
    }
    let gap = 1.0 - v_star;
    if gap == 0.0 {
        return Ok(HorizonEstimate {
            j_star,
            v_star,
            i_max: Horizon::Unbounded,
            guaranteed: true,
        });
    }
    let rhs = (j_star as f64) * v_star - 0.5 * gap;
    if rhs <= 0.0 {
        return Ok(HorizonEstimate {
            j_star,
            v_star,
            i_max: Horizon::Finite(0),
            guaranteed: false,
        });
    }
    // Closed form first, then settle on the exact floating-point boundary.
    let mut i = ((rhs / gap).ceil() - 1.0).max(0.0) as u64;
    while i > 0 && !horizon_inequality_holds(i, j_star, v_star) {
        i -= 1;
    }
    while horizon_inequality_holds(i + 1, j_star, v_star) {
        i += 1;
    }
    Ok(HorizonEstimate {
        j_star,
        v_star,
        i_max: Horizon::Finite(i),
        guaranteed: i >= 1,
    })
}
