//! Euler-Maruyama step tables and the per-path update loop.

use crate::coefficients::{driven_coefficients, valuation_coefficients, GUARD_EXCESS_DEMAND};
use crate::error::SimulationError;
use crate::grid::TimeGrid;
use crate::rng::NormalStream;
use crate::scenario::{Model, Scenario};

/// Paths are simulated in fixed blocks and merged in block order, so results
/// do not depend on the worker count.
pub(crate) const CHUNK: usize = 256;

#[derive(Debug, Clone)]
pub(crate) enum Dynamics {
    /// Coefficients depend on time only: `dX = a_k dt + b_k dW`.
    Driven { a: Vec<f64>, b: Vec<f64> },
    /// `dX = (x_a - X) dt + sigma (1 + x_a - X) dW`.
    Valuation { x_a: Vec<f64>, sigma: Vec<f64> },
    /// `df = mu_f dt + sigma_f dW` and `dX = f dt + sigma (1 + f) dW` on the same noise.
    StochasticF {
        mu_f: Vec<f64>,
        sigma_f: Vec<f64>,
        sigma: Vec<f64>,
        f0: f64,
    },
}

/// Everything a path needs, precomputed on the grid nodes.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    pub grid: TimeGrid,
    pub seed: u64,
    pub y0: f64,
    pub dt: f64,
    pub sqrt_dt: f64,
    pub dynamics: Dynamics,
}

impl Kernel {
    pub fn new(s: &Scenario) -> Result<Self, SimulationError> {
        let grid = s.grid;
        let n = grid.n_steps();
        let times: Vec<f64> = (0..n).map(|k| grid.time(k)).collect();
        let sigma: Vec<f64> = times.iter().map(|&t| s.sigma.eval(t)).collect();
        let dynamics = match s.model {
            Model::Valuation => Dynamics::Valuation {
                x_a: times.iter().map(|&t| s.drift.eval(t)).collect(),
                sigma,
            },
            Model::StochasticF => {
                let sf = s.sigma_f.as_ref().ok_or_else(|| {
                    SimulationError::Unsupported("stochastic_f needs sigma_f".into())
                })?;
                Dynamics::StochasticF {
                    mu_f: times.iter().map(|&t| s.drift.derivative(t)).collect(),
                    sigma_f: times.iter().map(|&t| sf.eval(t)).collect(),
                    sigma,
                    f0: s.drift.eval(grid.t0()),
                }
            }
            model => {
                let mut a = Vec::with_capacity(n);
                let mut b = Vec::with_capacity(n);
                for (k, &t) in times.iter().enumerate() {
                    let c = driven_coefficients(model, s.coefficient_power, s.drift.eval(t))
                        .map_err(|detail| SimulationError::Guard {
                            path: 0,
                            step: k,
                            time: t,
                            detail,
                        })?;
                    a.push(c.drift);
                    b.push(sigma[k] * c.unit);
                }
                Dynamics::Driven { a, b }
            }
        };
        Ok(Self {
            grid,
            seed: s.seed,
            y0: s.y0,
            dt: grid.dt(),
            sqrt_dt: grid.dt().sqrt(),
            dynamics,
        })
    }

    /// Simulates path `path` into `x` (length `n_steps + 1`) and, for the
    /// stochastic model, the excess demand into `f`.
    pub fn run_path(
        &self,
        path: usize,
        x: &mut [f64],
        mut f: Option<&mut [f64]>,
    ) -> Result<(), SimulationError> {
        let mut noise = NormalStream::new(self.seed, path as u64);
        let (dt, sq) = (self.dt, self.sqrt_dt);
        let mut state = self.y0;
        x[0] = state;
        let non_finite = |k: usize| SimulationError::NonFinite {
            path,
            step: k + 1,
            time: self.grid.time(k + 1),
        };
        match &self.dynamics {
            Dynamics::Driven { a, b } => {
                for k in 0..a.len() {
                    state += a[k] * dt + b[k] * sq * noise.normal();
                    if !state.is_finite() {
                        return Err(non_finite(k));
                    }
                    x[k + 1] = state;
                }
            }
            Dynamics::Valuation { x_a, sigma } => {
                for k in 0..x_a.len() {
                    let (gap, unit) = valuation_coefficients(x_a[k], state).map_err(|detail| {
                        SimulationError::Guard {
                            path,
                            step: k,
                            time: self.grid.time(k),
                            detail,
                        }
                    })?;
                    state += gap * dt + sigma[k] * unit * sq * noise.normal();
                    if !state.is_finite() {
                        return Err(non_finite(k));
                    }
                    x[k + 1] = state;
                }
            }
            Dynamics::StochasticF {
                mu_f,
                sigma_f,
                sigma,
                f0,
            } => {
                let mut fv = *f0;
                if let Some(out) = f.as_deref_mut() {
                    out[0] = fv;
                }
                for k in 0..mu_f.len() {
                    let unit = 1.0 + fv;
                    if !(unit > 0.0) {
                        return Err(SimulationError::Guard {
                            path,
                            step: k,
                            time: self.grid.time(k),
                            detail: GUARD_EXCESS_DEMAND,
                        });
                    }
                    let dw = sq * noise.normal();
                    state += fv * dt + sigma[k] * unit * dw;
                    fv += mu_f[k] * dt + sigma_f[k] * dw;
                    if !(state.is_finite() && fv.is_finite()) {
                        return Err(non_finite(k));
                    }
                    x[k + 1] = state;
                    if let Some(out) = f.as_deref_mut() {
                        out[k + 1] = fv;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Runs `work` on consecutive path blocks in parallel, `batch` blocks at a
/// time, and hands each result to `merge` in block order. The first error
/// in block order wins.
pub(crate) fn for_each_block<T: Send>(
    n_paths: usize,
    batch: usize,
    work: impl Fn(std::ops::Range<usize>) -> Result<T, SimulationError> + Sync,
    mut merge: impl FnMut(T),
) -> Result<(), SimulationError> {
    use rayon::prelude::*;
    let blocks = n_paths.div_ceil(CHUNK);
    let mut start = 0;
    while start < blocks {
        let end = (start + batch).min(blocks);
        let results: Vec<Result<T, SimulationError>> = (start..end)
            .into_par_iter()
            .map(|b| work(b * CHUNK..((b + 1) * CHUNK).min(n_paths)))
            .collect();
        for r in results {
            merge(r?);
        }
        start = end;
    }
    Ok(())
}
