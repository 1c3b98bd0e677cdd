//! Stand-alone simulation of the excess-demand process `df = mu_f dt + sigma_f dW`.

use crate::error::SimulationError;
use crate::function::FunctionSpec;
use crate::grid::TimeGrid;
use crate::rng::NormalStream;
use crate::scenario::Model;
use crate::stats::{sample_stats, SampleStats};

use super::{Observable, PathEnsemble, CHUNK};

/// Empirical `Var f(t)` against `int_{t0}^t sigma_f^2 ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct FVarianceCheck {
    pub t: Vec<f64>,
    pub empirical: Vec<SampleStats>,
    pub target: Vec<f64>,
    /// Largest `|Var - target| / se` over nodes with a positive standard error.
    pub max_abs_z: f64,
    /// Every node within four standard errors (exact match where the
    /// standard error is zero).
    pub within_4se: bool,
}

/// Paths of `f` from `f0` plus the variance check. The noise of path `i` is
/// the same stream a stochastic-excess-demand scenario with this seed uses.
pub fn simulate_stochastic_f(
    mu_f: &FunctionSpec,
    sigma_f: &FunctionSpec,
    f0: f64,
    grid: TimeGrid,
    n: usize,
    seed: u64,
) -> Result<(PathEnsemble, FVarianceCheck), SimulationError> {
    use rayon::prelude::*;
    if n == 0 {
        return Err(SimulationError::Unsupported(
            "at least one path is required".into(),
        ));
    }
    let len = grid.len();
    let steps = grid.n_steps();
    let dt = grid.dt();
    let sq = dt.sqrt();
    let mu: Vec<f64> = (0..steps).map(|k| mu_f.eval(grid.time(k))).collect();
    let sf: Vec<f64> = (0..steps).map(|k| sigma_f.eval(grid.time(k))).collect();

    let mut values = vec![0.0; n * len];
    let results: Vec<Result<(), SimulationError>> = values
        .par_chunks_mut(CHUNK * len)
        .enumerate()
        .map(|(b, block)| {
            for (j, row) in block.chunks_mut(len).enumerate() {
                let path = b * CHUNK + j;
                let mut noise = NormalStream::new(seed, path as u64);
                let mut f = f0;
                row[0] = f;
                for k in 0..steps {
                    f += mu[k] * dt + sf[k] * sq * noise.normal();
                    if !f.is_finite() {
                        return Err(SimulationError::NonFinite {
                            path,
                            step: k + 1,
                            time: grid.time(k + 1),
                        });
                    }
                    row[k + 1] = f;
                }
            }
            Ok(())
        })
        .collect();
    results.into_iter().collect::<Result<(), _>>()?;

    let ensemble = PathEnsemble {
        grid,
        n_paths: n,
        seed,
        model: Model::StochasticF,
        observable: Observable::ExcessDemand,
        values,
    };

    let mut target = Vec::with_capacity(len);
    let mut acc = 0.0;
    target.push(acc);
    for k in 0..steps {
        let (a, b) = (grid.time(k), grid.time(k + 1));
        let g = |t: f64| sigma_f.eval(t).powi(2);
        acc += crate::quadrature::simpson(b - a, g(a), g(0.5 * (a + b)), g(b));
        target.push(acc);
    }
    let empirical: Vec<SampleStats> = (0..len)
        .into_par_iter()
        .map(|k| sample_stats(&ensemble.column(k)))
        .collect();
    let mut max_abs_z: f64 = 0.0;
    let mut within = true;
    for (st, &tv) in empirical.iter().zip(&target) {
        if st.se_variance > 0.0 {
            let z = (st.variance - tv).abs() / st.se_variance;
            max_abs_z = max_abs_z.max(z);
            within &= z <= 4.0;
        } else {
            within &= (st.variance - tv).abs() <= 1e-15;
        }
    }
    let check = FVarianceCheck {
        t: grid.times().collect(),
        empirical,
        target,
        max_abs_z,
        within_4se: within,
    };
    Ok((ensemble, check))
}
