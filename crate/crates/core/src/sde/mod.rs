//! Euler-Maruyama simulation of the log-price SDEs and ensemble estimators.

mod kernel;
pub mod scaling;
pub mod stochastic_f;
pub mod summary;

use rayon::prelude::*;

use crate::error::SimulationError;
use crate::grid::TimeGrid;
use crate::rng::NormalStream;
use crate::scenario::{Model, Scenario};
use crate::stats::{sample_stats, SampleStats};
use crate::validate::validate_scenario;

pub(crate) use kernel::{for_each_block, Kernel, CHUNK};
pub use scaling::{variance_term_scaling, ScalingReport, TermFit, TermStatus};
pub use stochastic_f::{simulate_stochastic_f, FVarianceCheck};
pub use summary::{simulate_summary, EnsembleSummary, JensenCurve, SummaryOptions};

/// What the rows of an ensemble hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    LogPrice,
    ExcessDemand,
}

/// Simulated paths on a uniform grid, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    grid: TimeGrid,
    n_paths: usize,
    seed: u64,
    model: Model,
    observable: Observable,
    values: Vec<f64>,
}

impl PathEnsemble {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn observable(&self) -> Observable {
        self.observable
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let len = self.grid.len();
        &self.values[i * len..(i + 1) * len]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.grid.len())
    }

    pub fn value(&self, path: usize, node: usize) -> f64 {
        self.values[path * self.grid.len() + node]
    }

    /// Values of every path at grid node `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.paths().map(|p| p[k]).collect()
    }

    /// Raw row-major matrix.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

fn check_valid(s: &Scenario) -> Result<(), SimulationError> {
    let report = validate_scenario(s);
    if report.passed() {
        Ok(())
    } else {
        Err(SimulationError::Invalid(report))
    }
}

fn simulate_matrices(
    s: &Scenario,
    keep_f: bool,
) -> Result<(Vec<f64>, Option<Vec<f64>>), SimulationError> {
    check_valid(s)?;
    let kernel = Kernel::new(s)?;
    let len = s.grid.len();
    let mut x = vec![0.0; s.n_paths * len];
    let mut f = keep_f.then(|| vec![0.0; s.n_paths * len]);
    let block = CHUNK * len;
    let results: Vec<Result<(), SimulationError>> = match f.as_mut() {
        Some(f) => x
            .par_chunks_mut(block)
            .zip(f.par_chunks_mut(block))
            .enumerate()
            .map(|(b, (xs, fs))| {
                for (j, (xr, fr)) in xs.chunks_mut(len).zip(fs.chunks_mut(len)).enumerate() {
                    kernel.run_path(b * CHUNK + j, xr, Some(fr))?;
                }
                Ok(())
            })
            .collect(),
        None => x
            .par_chunks_mut(block)
            .enumerate()
            .map(|(b, xs)| {
                for (j, xr) in xs.chunks_mut(len).enumerate() {
                    kernel.run_path(b * CHUNK + j, xr, None)?;
                }
                Ok(())
            })
            .collect(),
    };
    results.into_iter().collect::<Result<(), _>>()?;
    Ok((x, f))
}

fn ensemble(s: &Scenario, observable: Observable, values: Vec<f64>) -> PathEnsemble {
    PathEnsemble {
        grid: s.grid,
        n_paths: s.n_paths,
        seed: s.seed,
        model: s.model,
        observable,
        values,
    }
}

/// Simulates the scenario. For the stochastic excess-demand model the rows
/// hold `f`; use [`simulate_coupled`] for the price it drives.
pub fn simulate(s: &Scenario) -> Result<PathEnsemble, SimulationError> {
    if s.model == Model::StochasticF {
        let (f, x) = simulate_coupled(s)?;
        drop(x);
        return Ok(f);
    }
    let (x, _) = simulate_matrices(s, false)?;
    Ok(ensemble(s, Observable::LogPrice, x))
}

/// Log-price paths for any model, including the price driven by a
/// stochastic excess demand.
pub fn simulate_log_price(s: &Scenario) -> Result<PathEnsemble, SimulationError> {
    let (x, _) = simulate_matrices(s, false)?;
    Ok(ensemble(s, Observable::LogPrice, x))
}

/// Excess demand and log price for the stochastic model, on shared noise.
pub fn simulate_coupled(s: &Scenario) -> Result<(PathEnsemble, PathEnsemble), SimulationError> {
    if s.model != Model::StochasticF {
        return Err(SimulationError::Unsupported(format!(
            "coupled simulation needs model stochastic_f, not {}",
            s.model
        )));
    }
    let (x, f) = simulate_matrices(s, true)?;
    let f = f.expect("excess demand kept");
    Ok((
        ensemble(s, Observable::ExcessDemand, f),
        ensemble(s, Observable::LogPrice, x),
    ))
}

/// Driven model with two independent noise sources:
/// `dX = a dt + u (sigma_a dW_a + sigma_b dW_b)`. The scenario's own sigma
/// is ignored.
pub fn simulate_two_noise(
    s: &Scenario,
    sigma_a: f64,
    sigma_b: f64,
) -> Result<PathEnsemble, SimulationError> {
    if matches!(s.model, Model::Valuation | Model::StochasticF) {
        return Err(SimulationError::Unsupported(format!(
            "two-noise simulation is defined for driven models, not {}",
            s.model
        )));
    }
    check_valid(s)?;
    let mut unit = s.clone();
    unit.sigma = crate::scenario::Sigma::Constant(1.0);
    let kernel = Kernel::new(&unit)?;
    let kernel::Dynamics::Driven { a, b: u } = &kernel.dynamics else {
        unreachable!("driven model");
    };
    let len = s.grid.len();
    let (dt, sq) = (kernel.dt, kernel.sqrt_dt);
    let mut x = vec![0.0; s.n_paths * len];
    x.par_chunks_mut(CHUNK * len)
        .enumerate()
        .for_each(|(b, xs)| {
            for (j, row) in xs.chunks_mut(len).enumerate() {
                let path = (b * CHUNK + j) as u64;
                let mut wa = NormalStream::new(s.seed, path);
                let mut wb = NormalStream::channel(s.seed, path, 1);
                let mut state = s.y0;
                row[0] = state;
                for k in 0..a.len() {
                    let shock = sigma_a * wa.normal() + sigma_b * wb.normal();
                    state += a[k] * dt + u[k] * sq * shock;
                    row[k + 1] = state;
                }
            }
        });
    Ok(ensemble(s, Observable::LogPrice, x))
}

/// Cross-path statistics of `X(t + dt) - X(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementStats {
    pub t: f64,
    pub dt: f64,
    pub mean: f64,
    pub variance: f64,
    pub std_error_mean: f64,
    pub std_error_var: f64,
}

impl IncrementStats {
    fn from_stats(t: f64, dt: f64, s: SampleStats) -> Self {
        Self {
            t,
            dt,
            mean: s.mean,
            variance: s.variance,
            std_error_mean: s.se_mean,
            std_error_var: s.se_variance,
        }
    }
}

pub fn estimate_increment_stats(
    e: &PathEnsemble,
    t: f64,
    dt: f64,
) -> Result<IncrementStats, SimulationError> {
    let k = e.grid.index_of(t).ok_or(SimulationError::OffGrid(t))?;
    let m = e
        .grid
        .steps_in(dt)
        .ok_or(SimulationError::OffGrid(t + dt))?;
    if k + m > e.grid.n_steps() {
        return Err(SimulationError::OffGrid(t + dt));
    }
    let incr: Vec<f64> = e.paths().map(|p| p[k + m] - p[k]).collect();
    Ok(IncrementStats::from_stats(
        e.grid.time(k),
        e.grid.time(k + m) - e.grid.time(k),
        sample_stats(&incr),
    ))
}

/// Pointwise estimate of the limiting volatility with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct VolCurve {
    pub t: Vec<f64>,
    pub vol: Vec<f64>,
    pub se: Vec<f64>,
}

/// `Var[X(t_{k+1}) - X(t_k)] / dt` at every node; the last node reuses the
/// final step.
pub fn estimate_limiting_volatility(e: &PathEnsemble) -> Result<VolCurve, SimulationError> {
    let n = e.grid.n_steps();
    if n < 2 {
        return Err(SimulationError::Unsupported(
            "limiting volatility needs at least two steps".into(),
        ));
    }
    let dt = e.grid.dt();
    let per_step: Vec<SampleStats> = (0..n)
        .into_par_iter()
        .map(|k| {
            let incr: Vec<f64> = e.paths().map(|p| p[k + 1] - p[k]).collect();
            sample_stats(&incr)
        })
        .collect();
    let pick = |k: usize| &per_step[k.min(n - 1)];
    Ok(VolCurve {
        t: e.grid.times().collect(),
        vol: (0..=n).map(|k| pick(k).variance / dt).collect(),
        se: (0..=n).map(|k| pick(k).se_variance / dt).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::FunctionSpec;
    use crate::scenario::Sigma;

    fn scenario(model: Model, drift: FunctionSpec, sigma: f64, t_end: f64, dt: f64) -> Scenario {
        Scenario::new(
            model,
            drift,
            Sigma::Constant(sigma),
            0.0,
            TimeGrid::new(0.0, t_end, dt).unwrap(),
        )
    }

    #[test]
    fn deterministic_limit_is_exact() {
        let s = scenario(
            Model::SupplyDemandSimple,
            FunctionSpec::constant(0.5),
            0.0,
            1.0,
            0.125,
        )
        .with_paths(5);
        let e = simulate(&s).unwrap();
        for p in e.paths() {
            assert_eq!(p[0], 0.0);
            assert_eq!(*p.last().unwrap(), 0.5);
        }
        let inc = estimate_increment_stats(&e, 0.25, 0.125).unwrap();
        assert_eq!(inc.variance, 0.0);
    }

    #[test]
    fn same_seed_same_matrix() {
        let s = scenario(
            Model::Valuation,
            FunctionSpec::constant(1.0),
            0.5,
            1.0,
            0.01,
        )
        .with_paths(600)
        .with_seed(9);
        let a = simulate(&s).unwrap();
        let b = simulate(&s).unwrap();
        assert_eq!(a, b);
        let c = simulate(&s.clone().with_seed(10)).unwrap();
        assert_ne!(a.as_slice(), c.as_slice());
        // path i depends on (seed, i) only
        let small = simulate(&s.clone().with_paths(3)).unwrap();
        assert_eq!(small.path(2), a.path(2));
    }

    #[test]
    fn off_grid_requests_fail() {
        let s = scenario(
            Model::GbmControl,
            FunctionSpec::constant(0.0),
            0.2,
            1.0,
            0.1,
        )
        .with_paths(4);
        let e = simulate(&s).unwrap();
        assert!(matches!(
            estimate_increment_stats(&e, 0.05, 0.1),
            Err(SimulationError::OffGrid(_))
        ));
        assert!(matches!(
            estimate_increment_stats(&e, 0.9, 0.2),
            Err(SimulationError::OffGrid(_))
        ));
        assert!(estimate_increment_stats(&e, 0.8, 0.2).is_ok());
    }

    #[test]
    fn invalid_scenario_is_rejected() {
        let s = scenario(
            Model::SupplyDemandSimple,
            FunctionSpec::constant(-1.5),
            0.5,
            1.0,
            0.1,
        );
        assert!(matches!(simulate(&s), Err(SimulationError::Invalid(_))));
    }

    #[test]
    fn valuation_guard_aborts_with_step() {
        // a huge sigma pushes 1 + x_a - X through zero within a few steps
        let s = scenario(
            Model::Valuation,
            FunctionSpec::constant(0.0),
            40.0,
            1.0,
            0.1,
        )
        .with_paths(50)
        .with_seed(1);
        match simulate(&s) {
            Err(SimulationError::Guard { step, detail, .. }) => {
                assert!(step >= 1);
                assert_eq!(detail, crate::coefficients::GUARD_VALUATION);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn increment_variance_matches_coefficient() {
        for (f, target) in [(0.0, 0.25), (0.2, 0.36)] {
            let s = scenario(
                Model::SupplyDemandSimple,
                FunctionSpec::constant(f),
                0.5,
                0.01,
                1e-3,
            )
            .with_paths(40_000)
            .with_seed(5);
            let e = simulate(&s).unwrap();
            let inc = estimate_increment_stats(&e, 0.005, 1e-3).unwrap();
            let z = (inc.variance / 1e-3 - target) / (inc.std_error_var / 1e-3);
            assert!(z.abs() < 4.0, "f = {f}: z = {z}");
        }
    }

    #[test]
    fn brownian_scaling() {
        let s = scenario(
            Model::GbmControl,
            FunctionSpec::constant(0.0),
            0.2,
            1.0,
            0.02,
        )
        .with_paths(100_000)
        .with_seed(2);
        let e = simulate(&s).unwrap();
        let end = sample_stats(&e.column(s.grid.n_steps()));
        assert!(end.variance_within(0.04, 4.0), "{end:?}");
    }
}
