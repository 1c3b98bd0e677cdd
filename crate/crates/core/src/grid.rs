//! Uniform time grid shared by the analytic and Monte Carlo pipelines.

use serde::{Deserialize, Serialize};

use crate::error::GridError;

/// Uniform grid on `[t0, t_end]` with `n_steps + 1` nodes.
///
/// The step count is `round((t_end - t0) / dt_requested)`; the stored `dt` is
/// the effective step `(t_end - t0) / n_steps`, so the last node lands on
/// `t_end` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, dt: f64) -> Result<Self, GridError> {
        if !(t0.is_finite() && t_end.is_finite() && dt.is_finite()) {
            return Err(GridError::NonFinite);
        }
        if dt <= 0.0 {
            return Err(GridError::NonPositiveStep(dt));
        }
        if t_end <= t0 {
            return Err(GridError::EmptyHorizon { t0, t_end });
        }
        let n = ((t_end - t0) / dt).round();
        if n < 1.0 {
            return Err(GridError::StepTooLarge {
                dt,
                span: t_end - t0,
            });
        }
        let n_steps = n as usize;
        Ok(Self {
            t0,
            t_end,
            dt: (t_end - t0) / n_steps as f64,
            n_steps,
        })
    }

    /// Grid with an explicit step count.
    pub fn with_steps(t0: f64, t_end: f64, n_steps: usize) -> Result<Self, GridError> {
        if n_steps == 0 {
            return Err(GridError::StepTooLarge {
                dt: f64::INFINITY,
                span: t_end - t0,
            });
        }
        Self::new(t0, t_end, (t_end - t0) / n_steps as f64)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn span(&self) -> f64 {
        self.t_end - self.t0
    }

    /// Time of node `i`. Computed as `t0 + span * i / n` so that nodes at
    /// rational fractions of the span are exact where possible.
    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            return self.t_end;
        }
        self.t0 + self.span() * i as f64 / self.n_steps as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.time(i))
    }

    /// Index of the node at `t`, if `t` lies on the grid (relative tolerance
    /// of 1e-9 of a step).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt;
        let k = x.round();
        if k < 0.0 || k > self.n_steps as f64 || (x - k).abs() > 1e-9 {
            return None;
        }
        Some(k as usize)
    }

    /// Number of grid steps spanned by the duration `dt`, if it is a whole
    /// multiple of the grid step.
    pub fn steps_in(&self, dt: f64) -> Option<usize> {
        let x = dt / self.dt;
        let k = x.round();
        if k < 1.0 || (x - k).abs() > 1e-9 * k.max(1.0) {
            return None;
        }
        Some(k as usize)
    }

    /// Index of the node nearest to `t`, clamped to the grid.
    pub fn nearest_index(&self, t: f64) -> usize {
        let x = ((t - self.t0) / self.dt).round();
        x.clamp(0.0, self.n_steps as f64) as usize
    }

    /// Index `k` of the cell `[t_k, t_{k+1}]` containing `t` (clamped).
    pub fn cell_of(&self, t: f64) -> usize {
        let x = ((t - self.t0) / self.dt).floor();
        x.clamp(0.0, (self.n_steps - 1) as f64) as usize
    }

    /// Same horizon with the step halved.
    pub fn refined(&self) -> Self {
        Self {
            t0: self.t0,
            t_end: self.t_end,
            dt: self.dt / 2.0,
            n_steps: self.n_steps * 2,
        }
    }
}
