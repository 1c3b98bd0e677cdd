//! Streaming per-node moments for ensembles too large to keep in memory.

use crate::error::SimulationError;
use crate::grid::TimeGrid;
use crate::scenario::{Model, Scenario};
use crate::stats::{PowerSums, SampleStats};

use super::{check_valid, for_each_block, Kernel, PathEnsemble, CHUNK};

/// Blocks simulated per parallel batch; bounds peak memory.
const BATCH: usize = 16;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SummaryOptions {
    /// Node used as the reference time for `E[exp(X(t_p) - X(t))]`.
    pub jensen_peak: Option<usize>,
}

/// Sample mean of `P(t_p) / P(t) = exp(X(t_p) - X(t))` per node.
#[derive(Debug, Clone, PartialEq)]
pub struct JensenCurve {
    pub peak_index: usize,
    pub peak_time: f64,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    /// Nodes where `mean < 1 - 4 se`.
    pub flagged: Vec<usize>,
}

impl JensenCurve {
    pub(crate) fn from_stats(grid: &TimeGrid, peak: usize, stats: &[SampleStats]) -> Self {
        let mean: Vec<f64> = stats.iter().map(|s| s.mean).collect();
        let se: Vec<f64> = stats.iter().map(|s| s.se_mean).collect();
        let flagged = (0..mean.len())
            .filter(|&k| mean[k] < 1.0 - 4.0 * se[k])
            .collect();
        Self {
            peak_index: peak,
            peak_time: grid.time(peak),
            mean,
            se,
            flagged,
        }
    }

    pub fn passed(&self) -> bool {
        self.flagged.is_empty()
    }
}

/// Per-node moments of the log price and of its one-step increments.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub grid: TimeGrid,
    pub model: Model,
    pub seed: u64,
    pub n_paths: usize,
    /// Statistics of `X(t_k)`.
    pub level: Vec<SampleStats>,
    /// Statistics of `X(t_{k+1}) - X(t_k)`, one per step.
    pub increments: Vec<SampleStats>,
    pub jensen: Option<JensenCurve>,
}

impl EnsembleSummary {
    pub fn mean(&self) -> Vec<f64> {
        self.level.iter().map(|s| s.mean).collect()
    }

    pub fn variance(&self) -> Vec<f64> {
        self.level.iter().map(|s| s.variance).collect()
    }

    fn step_stats(&self, k: usize) -> &SampleStats {
        &self.increments[k.min(self.increments.len() - 1)]
    }

    /// `Var[increment] / dt` per node; the last node reuses the final step.
    pub fn volhat(&self) -> Vec<f64> {
        let dt = self.grid.dt();
        (0..self.grid.len())
            .map(|k| self.step_stats(k).variance / dt)
            .collect()
    }

    pub fn volhat_se(&self) -> Vec<f64> {
        let dt = self.grid.dt();
        (0..self.grid.len())
            .map(|k| self.step_stats(k).se_variance / dt)
            .collect()
    }

    /// Summary of an in-memory ensemble, reduced in the same block order as
    /// [`simulate_summary`].
    pub fn from_ensemble(e: &PathEnsemble, opts: SummaryOptions) -> Self {
        let mut acc = Accumulator::new(e.path(0), opts.jensen_peak);
        for block in e.paths().collect::<Vec<_>>().chunks(CHUNK) {
            let mut part = acc.empty_like();
            for row in block {
                part.push(row);
            }
            acc.merge(&part);
        }
        acc.finish(e.grid, e.model(), e.seed(), e.n_paths())
    }
}

struct Accumulator {
    level: Vec<PowerSums>,
    incr: Vec<PowerSums>,
    jensen: Option<(usize, Vec<PowerSums>)>,
}

impl Accumulator {
    /// Shifts every column by the reference path so the raw sums stay well
    /// conditioned.
    fn new(reference: &[f64], peak: Option<usize>) -> Self {
        let level = reference.iter().map(|&v| PowerSums::new(v)).collect();
        let incr = reference
            .windows(2)
            .map(|w| PowerSums::new(w[1] - w[0]))
            .collect();
        let jensen = peak.map(|p| {
            let sums = reference
                .iter()
                .map(|&v| PowerSums::new((reference[p] - v).exp()))
                .collect();
            (p, sums)
        });
        Self {
            level,
            incr,
            jensen,
        }
    }

    fn empty_like(&self) -> Self {
        let reset = |v: &Vec<PowerSums>| v.iter().map(|p| p.emptied()).collect();
        Self {
            level: reset(&self.level),
            incr: reset(&self.incr),
            jensen: self.jensen.as_ref().map(|(p, v)| (*p, reset(v))),
        }
    }

    fn push(&mut self, x: &[f64]) {
        for (acc, &v) in self.level.iter_mut().zip(x) {
            acc.push(v);
        }
        for (acc, w) in self.incr.iter_mut().zip(x.windows(2)) {
            acc.push(w[1] - w[0]);
        }
        if let Some((p, sums)) = self.jensen.as_mut() {
            let top = x[*p];
            for (acc, &v) in sums.iter_mut().zip(x) {
                acc.push((top - v).exp());
            }
        }
    }

    fn merge(&mut self, other: &Self) {
        let merge_all = |a: &mut Vec<PowerSums>, b: &Vec<PowerSums>| {
            a.iter_mut().zip(b).for_each(|(x, y)| x.merge(y));
        };
        merge_all(&mut self.level, &other.level);
        merge_all(&mut self.incr, &other.incr);
        if let (Some((_, a)), Some((_, b))) = (self.jensen.as_mut(), other.jensen.as_ref()) {
            merge_all(a, b);
        }
    }

    fn finish(self, grid: TimeGrid, model: Model, seed: u64, n_paths: usize) -> EnsembleSummary {
        let jensen = self.jensen.map(|(p, sums)| {
            let stats: Vec<SampleStats> = sums.iter().map(PowerSums::stats).collect();
            JensenCurve::from_stats(&grid, p, &stats)
        });
        EnsembleSummary {
            grid,
            model,
            seed,
            n_paths,
            level: self.level.iter().map(PowerSums::stats).collect(),
            increments: self.incr.iter().map(PowerSums::stats).collect(),
            jensen,
        }
    }
}

/// Simulates the log price path by path and keeps only per-node moments.
/// Results are bit-identical to `EnsembleSummary::from_ensemble` on the full
/// matrix and do not depend on the worker count.
pub fn simulate_summary(
    s: &Scenario,
    opts: SummaryOptions,
) -> Result<EnsembleSummary, SimulationError> {
    check_valid(s)?;
    if let Some(p) = opts.jensen_peak {
        if p >= s.grid.len() {
            return Err(SimulationError::OffGrid(
                s.grid.t0() + p as f64 * s.grid.dt(),
            ));
        }
    }
    let kernel = Kernel::new(s)?;
    let len = s.grid.len();
    let mut reference = vec![0.0; len];
    kernel.run_path(0, &mut reference, None)?;
    let template = Accumulator::new(&reference, opts.jensen_peak);
    let mut total = template.empty_like();
    for_each_block(
        s.n_paths,
        BATCH,
        |range| {
            let mut part = template.empty_like();
            let mut row = vec![0.0; len];
            for path in range {
                kernel.run_path(path, &mut row, None)?;
                part.push(&row);
            }
            Ok(part)
        },
        |part| total.merge(&part),
    )?;
    Ok(total.finish(s.grid, s.model, s.seed, s.n_paths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::FunctionSpec;
    use crate::scenario::Sigma;
    use crate::sde::simulate_log_price;

    fn valuation(n: usize) -> Scenario {
        Scenario::new(
            Model::Valuation,
            FunctionSpec::quadratic_bump(1.5, 0.1, 2.0),
            Sigma::Constant(0.5),
            0.9,
            TimeGrid::new(0.0, 3.0, 0.01).unwrap(),
        )
        .with_paths(n)
        .with_seed(4)
    }

    #[test]
    fn streaming_matches_matrix_bit_for_bit() {
        let s = valuation(700);
        let opts = SummaryOptions {
            jensen_peak: Some(150),
        };
        let streamed = simulate_summary(&s, opts).unwrap();
        let full = EnsembleSummary::from_ensemble(&simulate_log_price(&s).unwrap(), opts);
        assert_eq!(streamed, full);
        let j = streamed.jensen.unwrap();
        assert_eq!(j.mean[150], 1.0);
        assert_eq!(j.se[150], 0.0);
    }

    #[test]
    fn summary_agrees_with_two_pass_moments() {
        let s = valuation(500);
        let e = simulate_log_price(&s).unwrap();
        let sum = simulate_summary(&s, SummaryOptions::default()).unwrap();
        for k in [0, 100, 300] {
            let direct = crate::stats::sample_stats(&e.column(k));
            assert!((direct.mean - sum.level[k].mean).abs() < 1e-12);
            assert!((direct.variance - sum.level[k].variance).abs() < 1e-12);
        }
        let vol = crate::sde::estimate_limiting_volatility(&e).unwrap();
        for (a, b) in vol.vol.iter().zip(sum.volhat()) {
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn martingale_when_drift_vanishes() {
        let s = Scenario::new(
            Model::SupplyDemandSimple,
            FunctionSpec::constant(0.0),
            Sigma::Constant(0.5),
            0.3,
            TimeGrid::new(0.0, 1.0, 0.02).unwrap(),
        )
        .with_paths(20_000)
        .with_seed(8);
        let sum = simulate_summary(&s, SummaryOptions::default()).unwrap();
        for st in &sum.level[1..] {
            assert!(st.mean_within(0.3, 4.0), "{st:?}");
        }
    }
}
