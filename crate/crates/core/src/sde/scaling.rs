//! Step-size scaling of the three parts of `Var[X(t + dt) - X(t)]`.
//!
//! Writing the increment as `A + B` with `A = int a ds` and `B = int b dW`:
//! `V1 = Var A`, `V2 = 2 Cov(A, B)` and `V3 = E B^2`. Each is estimated on
//! nested windows of a fine Euler grid that start at the same time, and its
//! log-log slope against the window length is fitted by least squares.

use crate::coefficients::{driven_coefficients, valuation_coefficients, GUARD_EXCESS_DEMAND};
use crate::error::SimulationError;
use crate::rng::NormalStream;
use crate::scenario::{Model, Scenario};
use crate::stats::{covariance_with_se, sample_stats};

use super::{check_valid, for_each_block};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermStatus {
    Fitted,
    /// Every estimate is exactly zero.
    Degenerate,
    /// Every estimate is below two standard errors.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermFit {
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub slope: Option<f64>,
    pub status: TermStatus,
}

impl TermFit {
    fn fit(dt_list: &[f64], estimates: Vec<f64>, std_errors: Vec<f64>) -> Self {
        let status = if estimates.iter().all(|&v| v == 0.0) {
            TermStatus::Degenerate
        } else if estimates
            .iter()
            .zip(&std_errors)
            .all(|(v, se)| v.abs() < 2.0 * se)
        {
            TermStatus::Inconclusive
        } else {
            TermStatus::Fitted
        };
        let slope = (status == TermStatus::Fitted).then(|| {
            let pts: Vec<(f64, f64)> = dt_list
                .iter()
                .zip(&estimates)
                .filter(|(_, v)| **v != 0.0)
                .map(|(dt, v)| (dt.ln(), v.abs().ln()))
                .collect();
            least_squares_slope(&pts)
        });
        Self {
            estimates,
            std_errors,
            slope: slope.filter(|s| s.is_finite()),
            status,
        }
    }

    /// Fitted slope within `[lo, hi]`.
    pub fn slope_in(&self, lo: f64, hi: f64) -> bool {
        self.status == TermStatus::Fitted && self.slope.is_some_and(|s| (lo..=hi).contains(&s))
    }
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    /// Start of every window.
    pub t: f64,
    pub dt_list: Vec<f64>,
    pub fine_step: f64,
    pub n_paths: usize,
    pub v1: TermFit,
    pub v2: TermFit,
    pub v3: TermFit,
}

impl ScalingReport {
    /// Slope of `V3` in `[0.8, 1.2]` and slope of `|V2|` at least 1.3, both
    /// from conclusive fits.
    pub fn meets_theory(&self) -> bool {
        self.v3.slope_in(0.8, 1.2) && self.v2.slope_in(1.3, f64::INFINITY)
    }
}

/// Coefficient values on a uniform sub-grid.
struct Table {
    h: f64,
    t0: f64,
    drift: Vec<f64>,
    sigma: Vec<f64>,
    mu_f: Vec<f64>,
    sigma_f: Vec<f64>,
}

impl Table {
    fn new(s: &Scenario, t0: f64, h: f64, steps: usize) -> Self {
        let times: Vec<f64> = (0..steps).map(|i| t0 + h * i as f64).collect();
        let stoch = s.model == Model::StochasticF;
        let sf = s.sigma_f.as_ref();
        Self {
            h,
            t0,
            drift: times.iter().map(|&t| s.drift.eval(t)).collect(),
            sigma: times.iter().map(|&t| s.sigma.eval(t)).collect(),
            mu_f: if stoch {
                times.iter().map(|&t| s.drift.derivative(t)).collect()
            } else {
                vec![]
            },
            sigma_f: match sf {
                Some(sf) if stoch => times.iter().map(|&t| sf.eval(t)).collect(),
                _ => vec![],
            },
        }
    }
}

struct PathState {
    x: f64,
    f: f64,
}

/// One Euler step of row `i`; returns `(a h, b dW)`.
#[inline]
fn step(
    s: &Scenario,
    table: &Table,
    i: usize,
    st: &mut PathState,
    z: f64,
) -> Result<(f64, f64), &'static str> {
    let h = table.h;
    let dw = h.sqrt() * z;
    let (a, b) = match s.model {
        Model::Valuation => {
            let (gap, unit) = valuation_coefficients(table.drift[i], st.x)?;
            (gap, table.sigma[i] * unit)
        }
        Model::StochasticF => {
            let unit = 1.0 + st.f;
            if !(unit > 0.0) {
                return Err(GUARD_EXCESS_DEMAND);
            }
            let a = st.f;
            st.f += table.mu_f[i] * h + table.sigma_f[i] * dw;
            (a, table.sigma[i] * unit)
        }
        model => {
            let c = driven_coefficients(model, s.coefficient_power, table.drift[i])?;
            (c.drift, table.sigma[i] * c.unit)
        }
    };
    let (ah, bdw) = (a * h, b * dw);
    st.x += ah + bdw;
    Ok((ah, bdw))
}

/// Estimates `V1`, `V2`, `V3` for every window length in `dt_list` from
/// `s.n_paths` paths. The windows start at the grid node nearest the middle
/// of the horizon; the path is brought there with the scenario grid step and
/// continued with a fine step of `min(dt_list) / 10`.
pub fn variance_term_scaling(
    s: &Scenario,
    dt_list: &[f64],
) -> Result<ScalingReport, SimulationError> {
    check_valid(s)?;
    if dt_list.len() < 4 || dt_list.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(SimulationError::Unsupported(
            "scaling needs at least four positive window lengths".into(),
        ));
    }
    let min = dt_list.iter().copied().fold(f64::INFINITY, f64::min);
    let max = dt_list.iter().copied().fold(0.0, f64::max);
    if max / min < 10.0 {
        return Err(SimulationError::Unsupported(
            "scaling window lengths must span at least a decade".into(),
        ));
    }
    let h = min / 10.0;
    let mut marks = Vec::with_capacity(dt_list.len());
    for &d in dt_list {
        let m = (d / h).round();
        if (m * h - d).abs() > 1e-9 * d {
            return Err(SimulationError::Unsupported(format!(
                "window {d} is not a multiple of the fine step {h}"
            )));
        }
        marks.push(m as usize);
    }
    let fine_steps = *marks.iter().max().expect("non-empty");

    let grid = s.grid;
    let start_node = grid.n_steps() / 2;
    let t_w = grid.time(start_node);
    if t_w + max > grid.t_end() + 1e-12 {
        return Err(SimulationError::Unsupported(format!(
            "window of length {max} from t = {t_w} leaves the horizon"
        )));
    }
    let coarse = Table::new(s, grid.t0(), grid.dt(), start_node);
    let fine = Table::new(s, t_w, h, fine_steps);
    let f0 = s.drift.eval(grid.t0());

    let n_terms = marks.len();
    let mut a_vals = vec![Vec::with_capacity(s.n_paths); n_terms];
    let mut b_vals = vec![Vec::with_capacity(s.n_paths); n_terms];

    for_each_block(
        s.n_paths,
        64,
        |range| {
            let mut out = Vec::with_capacity(range.len() * 2 * n_terms);
            for path in range {
                let mut noise = NormalStream::new(s.seed, path as u64);
                let mut st = PathState { x: s.y0, f: f0 };
                let guard = |table: &Table, i: usize, detail| SimulationError::Guard {
                    path,
                    step: i,
                    time: table.t0 + table.h * i as f64,
                    detail,
                };
                for i in 0..start_node {
                    step(s, &coarse, i, &mut st, noise.normal())
                        .map_err(|d| guard(&coarse, i, d))?;
                }
                let (mut a_sum, mut b_sum) = (0.0, 0.0);
                let mut next = 0;
                let mut order: Vec<usize> = (0..n_terms).collect();
                order.sort_by_key(|&j| marks[j]);
                let mut row = vec![(0.0, 0.0); n_terms];
                for i in 0..fine_steps {
                    let (ah, bdw) = step(s, &fine, i, &mut st, noise.normal())
                        .map_err(|d| guard(&fine, i, d))?;
                    a_sum += ah;
                    b_sum += bdw;
                    while next < n_terms && marks[order[next]] == i + 1 {
                        row[order[next]] = (a_sum, b_sum);
                        next += 1;
                    }
                }
                if !(st.x.is_finite() && st.f.is_finite()) {
                    return Err(SimulationError::NonFinite {
                        path,
                        step: fine_steps,
                        time: t_w + max,
                    });
                }
                for (a, b) in row {
                    out.push(a);
                    out.push(b);
                }
            }
            Ok(out)
        },
        |block| {
            for rec in block.chunks_exact(2 * n_terms) {
                for j in 0..n_terms {
                    a_vals[j].push(rec[2 * j]);
                    b_vals[j].push(rec[2 * j + 1]);
                }
            }
        },
    )?;

    let mut v1 = (vec![], vec![]);
    let mut v2 = (vec![], vec![]);
    let mut v3 = (vec![], vec![]);
    for j in 0..n_terms {
        let sa = sample_stats(&a_vals[j]);
        v1.0.push(sa.variance);
        v1.1.push(sa.se_variance);
        let (cov, se) = covariance_with_se(&a_vals[j], &b_vals[j]);
        v2.0.push(2.0 * cov);
        v2.1.push(2.0 * se);
        let sq: Vec<f64> = b_vals[j].iter().map(|b| b * b).collect();
        let s3 = sample_stats(&sq);
        v3.0.push(s3.mean);
        v3.1.push(s3.se_mean);
    }
    Ok(ScalingReport {
        t: t_w,
        dt_list: dt_list.to_vec(),
        fine_step: h,
        n_paths: s.n_paths,
        v1: TermFit::fit(dt_list, v1.0, v1.1),
        v2: TermFit::fit(dt_list, v2.0, v2.1),
        v3: TermFit::fit(dt_list, v3.0, v3.1),
    })
}
