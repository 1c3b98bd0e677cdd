//! Critical times of the mean log price and the limiting volatility.
//!
//! For the valuation model with a single-peaked `x_a`:
//!
//! * `t_m`: peak of `x_a` (root of `x_a'`),
//! * `t*`: first crossing `x_a = y`, the peak of the mean log price,
//! * `t1`: first root of `S = x_a' - x_a + y`,
//! * `t_v`: first root of `Q` in `(t1, t*)`, the extremum of the limiting volatility.
//!
//! Under the peak-shape conditions these satisfy `t0 < t1 < t_v < t_m < t*`.

use std::fmt;

use crate::analytic::AnalyticCurves;
use crate::error::SimulationError;
use crate::function::FunctionSpec;
use crate::grid::TimeGrid;
use crate::quadrature::simpson;
use crate::roots::{count_crossings, first_crossing, Root};
use crate::scenario::{Model, Scenario};
use crate::sde::{JensenCurve, PathEnsemble};
use crate::stats::sample_stats;

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    /// Sigma is constant and in `(0, 1)`.
    pub sigma_ok: bool,
    /// `x_a'` changes sign exactly once, from positive to negative, inside the horizon.
    pub c1_ok: bool,
    pub c1_sign_changes: usize,
    /// `x_a(t0) - x_a'(t0) < y0 < x_a(t0)`.
    pub c2_ok: bool,
    pub c2_lower: f64,
    pub c2_upper: f64,
    /// `-x_a' > m1` on grid times after `t_m + delta`.
    pub c3_ok: bool,
    pub delta: Option<f64>,
    pub m1: Option<f64>,
    /// Sign of `2 x_a'(t*) + sigma^2 e^{c (t0 - t*)}`; only set once `t*` is known.
    pub e_ok: Option<bool>,
    pub e_value: Option<f64>,
}

impl ConditionReport {
    pub fn all_ok(&self) -> bool {
        self.sigma_ok && self.c1_ok && self.c2_ok && self.c3_ok && self.e_ok == Some(true)
    }
}

fn tolerance(grid: &TimeGrid) -> f64 {
    1e-10 * grid.span()
}

fn samples(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    grid.times().map(f).collect()
}

fn peak_root(x_a: &FunctionSpec, grid: &TimeGrid) -> (Root, Vec<f64>) {
    let d = samples(grid, |t| x_a.derivative(t));
    let root = first_crossing(
        &d,
        |i| grid.time(i),
        0,
        grid.n_steps(),
        |t| x_a.derivative(t),
        tolerance(grid),
    );
    (root, d)
}

fn crossing_of_mean(x_a: &FunctionSpec, curves: &AnalyticCurves) -> Root {
    let grid = &curves.grid;
    let g: Vec<f64> = grid
        .times()
        .zip(&curves.y)
        .map(|(t, y)| x_a.eval(t) - y)
        .collect();
    first_crossing(
        &g,
        |i| grid.time(i),
        0,
        grid.n_steps(),
        |t| x_a.eval(t) - curves.y_at(t),
        tolerance(grid),
    )
}

pub fn check_conditions(s: &Scenario, curves: &AnalyticCurves) -> ConditionReport {
    let x_a = &s.drift;
    let grid = &s.grid;
    let n = grid.n_steps();
    let sigma = s.sigma.as_constant();
    let sigma_ok = sigma.is_some_and(|v| v > 0.0 && v < 1.0);

    let (tm, d) = peak_root(x_a, grid);
    let c1_sign_changes = count_crossings(&d, 0, n);
    let c1_ok = c1_sign_changes == 1 && d[0] > 0.0 && d[n] < 0.0 && tm.is_found();

    let t0 = grid.t0();
    let c2_lower = x_a.eval(t0) - x_a.derivative(t0);
    let c2_upper = x_a.eval(t0);
    let c2_ok = c2_lower < s.y0 && s.y0 < c2_upper;

    let (mut delta, mut m1) = (None, None);
    if let Root::Found(tm) = tm {
        let dt = grid.dt();
        let last_bad = (0..=n).rev().find(|&i| grid.time(i) > tm && -d[i] <= 0.0);
        let k = match last_bad {
            Some(i) => ((grid.time(i) - tm) / dt).ceil().max(1.0),
            None => 1.0,
        };
        let cut = tm + k * dt;
        let tail: Vec<f64> = (0..=n)
            .filter(|&i| grid.time(i) > cut)
            .map(|i| -d[i])
            .collect();
        let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
        if !tail.is_empty() && min > 0.0 {
            delta = Some(k * dt);
            m1 = Some(0.5 * min);
        }
    }
    let c3_ok = m1.is_some();

    let (mut e_ok, mut e_value) = (None, None);
    if let (Some(sig), Root::Found(ts)) = (sigma, crossing_of_mean(x_a, curves)) {
        let c = 2.0 - sig * sig;
        let v = 2.0 * x_a.derivative(ts) + sig * sig * (c * (t0 - ts)).exp();
        e_value = Some(v);
        e_ok = Some(v < 0.0);
    }

    ConditionReport {
        sigma_ok,
        c1_ok,
        c1_sign_changes,
        c2_ok,
        c2_lower,
        c2_upper,
        c3_ok,
        delta,
        m1,
        e_ok,
        e_value,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremaReport {
    pub t0: f64,
    pub dt: f64,
    pub t1: Root,
    pub tv: Root,
    /// Sign changes of `Q` inside `(t1, t*)`.
    pub tv_count: usize,
    pub tm: Root,
    pub tstar: Root,
    pub conditions: ConditionReport,
    /// `t0 < t1 < t_v < t_m < t*` with every time found.
    pub ordering_ok: bool,
    /// Consecutive gaps of `(t0, t1, t_v, t_m, t*)` in grid steps.
    pub margins: Vec<f64>,
    /// Every margin exceeds two grid steps.
    pub margins_ok: bool,
}

impl ExtremaReport {
    /// Ordering holds with margins, and the conditions that guarantee it pass.
    pub fn verified(&self) -> bool {
        self.conditions.all_ok() && self.ordering_ok && self.margins_ok
    }

    fn ordered_times(&self) -> Option<[f64; 5]> {
        Some([
            self.t0,
            self.t1.time()?,
            self.tv.time()?,
            self.tm.time()?,
            self.tstar.time()?,
        ])
    }
}

fn fmt_root(r: Root) -> String {
    match r {
        Root::Found(t) => format!("{t:.12}"),
        Root::NotFound { tangency: None } => "not found".into(),
        Root::NotFound { tangency: Some(t) } => format!("not found (tangency at {t:.12})"),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("na".into(), |x| format!("{x:.12}"))
}

impl fmt::Display for ExtremaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.conditions;
        writeln!(f, "t0 = {:.12}", self.t0)?;
        writeln!(f, "t1 = {}", fmt_root(self.t1))?;
        writeln!(f, "tv = {}", fmt_root(self.tv))?;
        writeln!(f, "tv_count = {}", self.tv_count)?;
        writeln!(f, "tm = {}", fmt_root(self.tm))?;
        writeln!(f, "tstar = {}", fmt_root(self.tstar))?;
        writeln!(f, "ordering_ok = {}", self.ordering_ok)?;
        let margins: Vec<String> = self.margins.iter().map(|m| format!("{m:.6}")).collect();
        writeln!(f, "margins = [{}]", margins.join(", "))?;
        writeln!(f, "margins_ok = {}", self.margins_ok)?;
        writeln!(f, "sigma_ok = {}", c.sigma_ok)?;
        writeln!(f, "c1_ok = {}", c.c1_ok)?;
        writeln!(f, "c1_sign_changes = {}", c.c1_sign_changes)?;
        writeln!(f, "c2_ok = {}", c.c2_ok)?;
        writeln!(f, "c2_bounds = ({:.12}, {:.12})", c.c2_lower, c.c2_upper)?;
        writeln!(f, "c3_ok = {}", c.c3_ok)?;
        writeln!(f, "c3_delta = {}", fmt_opt(c.delta))?;
        writeln!(f, "c3_m1 = {}", fmt_opt(c.m1))?;
        let e_ok = c.e_ok.map_or("na".to_string(), |b| b.to_string());
        writeln!(f, "e_ok = {e_ok}")?;
        writeln!(f, "e_value = {}", fmt_opt(c.e_value))
    }
}

/// Locates the critical times. Valuation scenarios use the full chain;
/// other models report the peak of the driver (`t_m`), the extremum of the
/// limiting volatility (`t_v`, first root of `Q`) and the peak of the mean
/// log price (`t*`), with no `t1`.
pub fn locate_extrema(s: &Scenario, curves: &AnalyticCurves) -> ExtremaReport {
    let grid = &s.grid;
    let n = grid.n_steps();
    let tol = tolerance(grid);
    let time = |i: usize| grid.time(i);
    let conditions = check_conditions(s, curves);
    let (tm, _) = peak_root(&s.drift, grid);

    let (t1, tv, tv_count, tstar) = if s.model == Model::Valuation {
        let x_a = &s.drift;
        let tstar = crossing_of_mean(x_a, curves);
        let s_fn = |t: f64| x_a.derivative(t) - x_a.eval(t) + curves.y_at(t);
        let s_samples: Vec<f64> = grid
            .times()
            .zip(&curves.y)
            .map(|(t, y)| x_a.derivative(t) - x_a.eval(t) + y)
            .collect();
        let t1 = first_crossing(&s_samples, time, 0, n, s_fn, tol);
        let (tv, count) = match (t1, tstar) {
            (Root::Found(a), Root::Found(b)) if a < b => q_root_between(curves, a, b, tol),
            _ => (Root::NotFound { tangency: None }, 0),
        };
        (t1, tv, count, tstar)
    } else {
        let q_root = first_crossing(&curves.q, time, 0, n, |t| curves.q_at(t), tol);
        let drift: Vec<f64> = grid.times().map(|t| curves.mean_drift_at(t)).collect();
        let tstar = first_crossing(&drift, time, 0, n, |t| curves.mean_drift_at(t), tol);
        (
            Root::NotFound { tangency: None },
            q_root,
            count_crossings(&curves.q, 0, n),
            tstar,
        )
    };

    let mut report = ExtremaReport {
        t0: grid.t0(),
        dt: grid.dt(),
        t1,
        tv,
        tv_count,
        tm,
        tstar,
        conditions,
        ordering_ok: false,
        margins: Vec::new(),
        margins_ok: false,
    };
    if let Some(ts) = report.ordered_times() {
        report.ordering_ok = ts.windows(2).all(|w| w[0] < w[1]);
        report.margins = ts.windows(2).map(|w| (w[1] - w[0]) / grid.dt()).collect();
        report.margins_ok = report.margins.iter().all(|&m| m > 2.0);
    }
    report
}

/// First root of `Q` strictly inside `(a, b)`, sampled at the endpoints and
/// the grid nodes between them.
fn q_root_between(curves: &AnalyticCurves, a: f64, b: f64, tol: f64) -> (Root, usize) {
    let grid = &curves.grid;
    let mut ts = vec![a];
    ts.extend(grid.times().filter(|&t| t > a && t < b));
    ts.push(b);
    let vals: Vec<f64> = ts.iter().map(|&t| curves.q_at(t)).collect();
    let root = first_crossing(&vals, |i| ts[i], 0, ts.len() - 1, |t| curves.q_at(t), tol);
    (root, count_crossings(&vals, 0, ts.len() - 1))
}

/// Peak of the deterministic log price `int f` against the peak of `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakLag {
    /// Peak of `f`.
    pub tm: Root,
    /// First zero of `f` after `t_m`, where `int f` peaks.
    pub tb: Root,
    /// Grid argmax of `int_{t0}^t f`.
    pub argmax_t: f64,
    /// `t_b > t_m` and the grid argmax lies within one step of `t_b`.
    pub ok: bool,
}

pub fn deterministic_peak_lag(f: &FunctionSpec, grid: &TimeGrid) -> PeakLag {
    let tol = tolerance(grid);
    let (tm, _) = peak_root(f, grid);
    let values = samples(grid, |t| f.eval(t));
    let tb = match tm {
        Root::Found(t) => {
            let start = grid.cell_of(t);
            let mut vals = vec![f.eval(t)];
            let mut ts = vec![t];
            for i in start + 1..=grid.n_steps() {
                vals.push(values[i]);
                ts.push(grid.time(i));
            }
            first_crossing(&vals, |i| ts[i], 0, vals.len() - 1, |x| f.eval(x), tol)
        }
        Root::NotFound { .. } => Root::NotFound { tangency: None },
    };
    let mut acc = 0.0;
    let mut best = (0.0, grid.t0());
    for k in 0..grid.n_steps() {
        let (a, b) = (grid.time(k), grid.time(k + 1));
        acc += simpson(b - a, values[k], f.eval(0.5 * (a + b)), values[k + 1]);
        if acc > best.0 {
            best = (acc, b);
        }
    }
    let argmax_t = best.1;
    let ok = match (tm, tb) {
        (Root::Found(m), Root::Found(b)) => b > m && (argmax_t - b).abs() <= grid.dt(),
        _ => false,
    };
    PeakLag {
        tm,
        tb,
        argmax_t,
        ok,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignLemmas {
    pub q_at_t1: Option<f64>,
    pub q_at_tstar: Option<f64>,
    pub q_at_t1_positive: Option<bool>,
    pub q_at_tstar_negative: Option<bool>,
    /// Deterministic peak lag, for models driven by an excess demand.
    pub peak_lag: Option<PeakLag>,
}

impl SignLemmas {
    /// Every evaluated flag holds and at least one was evaluated.
    pub fn passed(&self) -> bool {
        let flags = [
            self.q_at_t1_positive,
            self.q_at_tstar_negative,
            self.peak_lag.as_ref().map(|p| p.ok),
        ];
        flags.iter().any(Option::is_some) && flags.iter().all(|f| f.unwrap_or(true))
    }
}

pub fn verify_sign_lemmas(curves: &AnalyticCurves, report: &ExtremaReport) -> SignLemmas {
    let q_at_t1 = report.t1.time().map(|t| curves.q_at(t));
    let q_at_tstar = report.tstar.time().map(|t| curves.q_at(t));
    let peak_lag = (curves.model.is_supply_demand())
        .then(|| deterministic_peak_lag(curves.drift(), &curves.grid));
    let valuation = curves.model == Model::Valuation;
    SignLemmas {
        q_at_t1,
        q_at_tstar,
        q_at_t1_positive: q_at_t1.filter(|_| valuation).map(|q| q > 0.0),
        q_at_tstar_negative: q_at_tstar.filter(|_| valuation).map(|q| q < 0.0),
        peak_lag,
    }
}

/// `E[exp(X(t_m) - X(t))]` per node with standard errors.
pub fn jensen_check(e: &PathEnsemble, tm: f64) -> Result<JensenCurve, SimulationError> {
    let grid = e.grid();
    let p = grid.index_of(tm).ok_or(SimulationError::OffGrid(tm))?;
    let stats: Vec<_> = (0..grid.len())
        .map(|k| {
            let ratios: Vec<f64> = e.paths().map(|x| (x[p] - x[k]).exp()).collect();
            sample_stats(&ratios)
        })
        .collect();
    Ok(JensenCurve::from_stats(grid, p, &stats))
}
