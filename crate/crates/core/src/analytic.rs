//! Closed-form and ODE moments of the log price.
//!
//! For the valuation model `dX = (x_a - X) dt + sigma (1 + x_a - X) dW` with
//! constant `sigma` and `c = 2 - sigma^2`:
//!
//! * `y = E X` solves `y' = x_a - y`,
//! * `z = E X^2` solves `z' = (sigma^2 - 2) z + (2 - 2 sigma^2) x_a y - 2 sigma^2 y + sigma^2 (1 + x_a)^2`,
//! * `z1(t) = int_{t0}^t e^{c (s - t)} w(s) ds` with `w = (1 + x_a - y)^2`,
//! * `Var X = sigma^2 z1`, so `z = y^2 + sigma^2 z1`,
//! * the limiting volatility is `sigma^2 (w + Var X)`,
//! * `Q = w' + sigma^2 w - sigma^2 c z1` is the time derivative of `vol / sigma^2`.

use crate::coefficients::{driven_coefficients, Coefficients};
use crate::error::AnalyticError;
use crate::function::FunctionSpec;
use crate::grid::TimeGrid;
use crate::quadrature::{rk4_step, simpson};
use crate::scenario::{Model, Scenario, Sigma};

/// Mean log price on a grid, from the exponential-weight recursion, with the
/// RK4 solution as an independent check.
#[derive(Debug, Clone, PartialEq)]
pub struct YSolution {
    /// Values on the grid nodes.
    pub y: Vec<f64>,
    /// Values at the cell midpoints, `y_mid[k]` at `t_k + dt/2`.
    pub y_mid: Vec<f64>,
    /// RK4 solution of `y' = x_a - y` on the grid.
    pub rk4: Vec<f64>,
    /// `max |y - rk4|` over the grid.
    pub max_discrepancy: f64,
}

/// `y(t) = e^{t0 - t} y0 + int_{t0}^t x_a(s) e^{s - t} ds`, advanced cell by
/// cell with Simpson's rule on half cells.
pub fn solve_y(x_a: &FunctionSpec, y0: f64, grid: &TimeGrid) -> YSolution {
    let n = grid.n_steps();
    let h = grid.dt();
    let half = 0.5 * h;
    let decay_half = (-half).exp();
    let decay_quarter = (-0.25 * h).exp();

    // one half-cell of the recursion starting at `t` with value `v`
    let advance = |t: f64, v: f64| {
        let inc = simpson(
            half,
            x_a.eval(t) * decay_half,
            x_a.eval(t + 0.5 * half) * decay_quarter,
            x_a.eval(t + half),
        );
        decay_half * v + inc
    };

    let mut y = Vec::with_capacity(n + 1);
    let mut y_mid = Vec::with_capacity(n);
    let mut rk4 = Vec::with_capacity(n + 1);
    y.push(y0);
    rk4.push(y0);
    let mut cur = y0;
    let mut cur_rk = [y0];
    for k in 0..n {
        let t = grid.time(k);
        let mid = advance(t, cur);
        y_mid.push(mid);
        cur = advance(t + half, mid);
        y.push(cur);
        cur_rk = rk4_step(
            |s, u: &[f64; 1]| [x_a.eval(s) - u[0]],
            t,
            &cur_rk,
            grid.time(k + 1) - t,
        );
        rk4.push(cur_rk[0]);
    }
    let max_discrepancy = y
        .iter()
        .zip(&rk4)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    YSolution {
        y,
        y_mid,
        rk4,
        max_discrepancy,
    }
}

fn gap_squared(x_a: f64, y: f64) -> f64 {
    let g = 1.0 + x_a - y;
    g * g
}

/// RK4 solution of the second-moment ODE from `z(t0) = y0^2`, using the
/// solved mean at nodes and midpoints.
pub fn solve_z_with(x_a: &FunctionSpec, sigma: f64, y: &YSolution, grid: &TimeGrid) -> Vec<f64> {
    let s2 = sigma * sigma;
    let rhs = |z: f64, xa: f64, yv: f64| {
        (s2 - 2.0) * z + (2.0 - 2.0 * s2) * xa * yv - 2.0 * s2 * yv + s2 * (1.0 + xa) * (1.0 + xa)
    };
    let n = grid.n_steps();
    let mut z = Vec::with_capacity(n + 1);
    let mut cur = y.y[0] * y.y[0];
    z.push(cur);
    for k in 0..n {
        let t0 = grid.time(k);
        let h = grid.time(k + 1) - t0;
        let (xa0, xam, xa1) = (x_a.eval(t0), x_a.eval(t0 + 0.5 * h), x_a.eval(t0 + h));
        let (y0, ym, y1) = (y.y[k], y.y_mid[k], y.y[k + 1]);
        let k1 = rhs(cur, xa0, y0);
        let k2 = rhs(cur + 0.5 * h * k1, xam, ym);
        let k3 = rhs(cur + 0.5 * h * k2, xam, ym);
        let k4 = rhs(cur + h * k3, xa1, y1);
        cur += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        z.push(cur);
    }
    z
}

/// Second moment `E X^2` for the valuation model.
pub fn solve_z(x_a: &FunctionSpec, sigma: f64, y0: f64, grid: &TimeGrid) -> Vec<f64> {
    solve_z_with(x_a, sigma, &solve_y(x_a, y0, grid), grid)
}

/// `z1(t) = int_{t0}^t e^{c (s - t)} (1 + x_a(s) - y(s))^2 ds` with
/// `c = 2 - sigma^2`, by the recursion `I(t + dt) = e^{-c dt} I(t) + Simpson`.
pub fn z1_closed_form(x_a: &FunctionSpec, y: &YSolution, sigma: f64, grid: &TimeGrid) -> Vec<f64> {
    let c = 2.0 - sigma * sigma;
    let n = grid.n_steps();
    let mut z1 = Vec::with_capacity(n + 1);
    let mut cur = 0.0;
    z1.push(cur);
    for k in 0..n {
        let t0 = grid.time(k);
        let h = grid.time(k + 1) - t0;
        let left = gap_squared(x_a.eval(t0), y.y[k]) * (-c * h).exp();
        let mid = gap_squared(x_a.eval(t0 + 0.5 * h), y.y_mid[k]) * (-c * 0.5 * h).exp();
        let right = gap_squared(x_a.eval(t0 + h), y.y[k + 1]);
        cur = (-c * h).exp() * cur + simpson(h, left, mid, right);
        z1.push(cur);
    }
    z1
}

/// `Var X = sigma^2 z1`.
pub fn variance_closed_form(z1: &[f64], sigma: f64) -> Vec<f64> {
    z1.iter().map(|v| sigma * sigma * v).collect()
}

/// `Q = w' + sigma^2 w - sigma^2 c z1` with the chain-rule derivative
/// `w' = 2 (1 + x_a - y) (x_a' - (x_a - y))`.
pub fn q_curve(x_a: &FunctionSpec, y: &[f64], z1: &[f64], sigma: f64, grid: &TimeGrid) -> Vec<f64> {
    grid.times()
        .zip(y.iter().zip(z1))
        .map(|(t, (&yv, &z1v))| q_value(x_a, sigma, t, yv, z1v))
        .collect()
}

fn q_value(x_a: &FunctionSpec, sigma: f64, t: f64, y: f64, z1: f64) -> f64 {
    let s2 = sigma * sigma;
    let c = 2.0 - s2;
    let xa = x_a.eval(t);
    let gap = 1.0 + xa - y;
    let w = gap * gap;
    let w_prime = 2.0 * gap * (x_a.derivative(t) - (xa - y));
    w_prime + s2 * w - s2 * c * z1
}

/// Per-model inputs for [`limiting_volatility`]. All curves share one grid.
#[derive(Debug, Clone, Copy, Default)]
pub struct VolInputs<'a> {
    pub sigma: &'a [f64],
    /// Excess demand `f`, or its mean for the stochastic model.
    pub f: Option<&'a [f64]>,
    /// `Var f`, stochastic model only.
    pub var_f: Option<&'a [f64]>,
    /// `(1 + x_a - y)^2`, valuation only.
    pub w: Option<&'a [f64]>,
    /// `Var X`, valuation only.
    pub var_x: Option<&'a [f64]>,
}

/// Limiting volatility `lim Var[X(t + dt) - X(t)] / dt` per model.
pub fn limiting_volatility(
    model: Model,
    power: Option<u32>,
    inputs: &VolInputs<'_>,
) -> Result<Vec<f64>, AnalyticError> {
    let sigma = inputs.sigma;
    fn need<'b>(v: Option<&'b [f64]>, name: &'static str) -> Result<&'b [f64], AnalyticError> {
        v.ok_or(AnalyticError::MissingInput(name))
    }
    match model {
        Model::GbmControl => Ok(sigma.iter().map(|s| s * s).collect()),
        Model::Valuation => {
            let w = need(inputs.w, "w")?;
            let var_x = need(inputs.var_x, "var_x")?;
            Ok(sigma
                .iter()
                .zip(w.iter().zip(var_x))
                .map(|(s, (w, v))| s * s * w + s * s * v)
                .collect())
        }
        Model::StochasticF => {
            let f = need(inputs.f, "f")?;
            let var_f = need(inputs.var_f, "var_f")?;
            Ok(sigma
                .iter()
                .zip(f.iter().zip(var_f))
                .map(|(s, (f, v))| s * s * (1.0 + f) * (1.0 + f) + s * s * v)
                .collect())
        }
        _ => {
            if model.needs_power() && power.is_none() {
                return Err(AnalyticError::MissingInput("p"));
            }
            let f = need(inputs.f, "f")?;
            sigma
                .iter()
                .zip(f)
                .map(|(s, &fv)| {
                    let u = driven_coefficients(model, power, fv)
                        .map_err(|g| AnalyticError::Unsupported(format!("{model}: {g} violated")))?
                        .unit;
                    Ok(s * s * u * u)
                })
                .collect()
        }
    }
}

/// Grid-sampled analytic moments of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticCurves {
    pub grid: TimeGrid,
    pub model: Model,
    /// `E X`
    pub y: Vec<f64>,
    /// `E X^2`
    pub z: Vec<f64>,
    pub z1: Vec<f64>,
    pub var_x: Vec<f64>,
    /// Squared unit diffusion: `(1 + x_a - y)^2` for valuation, `u(f)^2` otherwise.
    pub w: Vec<f64>,
    /// Limiting volatility.
    pub vol: Vec<f64>,
    /// Time derivative of `vol / sigma^2`.
    pub q: Vec<f64>,
    /// `2 - sigma^2`; NaN when sigma varies in time.
    pub c: f64,
    /// Distance between the recursion and RK4 solutions of the mean.
    pub y_discrepancy: f64,
    sigma: Sigma,
    drift: FunctionSpec,
    power: Option<u32>,
}

impl AnalyticCurves {
    pub fn sigma_constant(&self) -> Option<f64> {
        self.sigma.as_constant()
    }

    /// The scenario drift spec the curves were solved for.
    pub fn drift(&self) -> &FunctionSpec {
        &self.drift
    }

    /// Mean log price and `z1` at an arbitrary time. Valuation curves use one
    /// RK4 step from the preceding node; other models interpolate linearly.
    pub fn state_at(&self, t: f64) -> (f64, f64) {
        let k = self.grid.cell_of(t);
        let tk = self.grid.time(k);
        if self.model != Model::Valuation {
            let h = t - tk;
            let frac = h / (self.grid.time(k + 1) - tk);
            let lerp = |v: &[f64]| v[k] + (v[k + 1] - v[k]) * frac;
            return (lerp(&self.y), lerp(&self.z1));
        }
        let c = self.c;
        let x_a = &self.drift;
        let u = rk4_step(
            |s, u: &[f64; 2]| {
                let xa = x_a.eval(s);
                [xa - u[0], gap_squared(xa, u[0]) - c * u[1]]
            },
            tk,
            &[self.y[k], self.z1[k]],
            t - tk,
        );
        (u[0], u[1])
    }

    pub fn y_at(&self, t: f64) -> f64 {
        self.state_at(t).0
    }

    /// `Q(t)` at an arbitrary time.
    pub fn q_at(&self, t: f64) -> f64 {
        match self.model {
            Model::Valuation => {
                let (y, z1) = self.state_at(t);
                q_value(&self.drift, self.sigma.eval(t), t, y, z1)
            }
            _ => driven_q(self.model, self.power, &self.drift, &self.sigma, None, t),
        }
    }

    /// Time derivative of the mean log price.
    pub fn mean_drift_at(&self, t: f64) -> f64 {
        match self.model {
            Model::Valuation => self.drift.eval(t) - self.y_at(t),
            _ => driven_coefficients(self.model, self.power, self.drift.eval(t))
                .map(|c| c.drift)
                .unwrap_or(f64::NAN),
        }
    }

    /// Index of the largest mean log price on the grid (first on ties).
    pub fn y_argmax(&self) -> usize {
        argmax(&self.y)
    }
}

/// Index of the first maximum of `v`.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// `d(vol / sigma^2)/dt` for the driven models:
/// `2 u u'(f) f' + 2 (sigma'/sigma) u^2`, plus `sigma_f^2` for the stochastic
/// model where `u^2 = (1 + E f)^2 + Var f`.
fn driven_q(
    model: Model,
    power: Option<u32>,
    drift: &FunctionSpec,
    sigma: &Sigma,
    sigma_f: Option<&FunctionSpec>,
    t: f64,
) -> f64 {
    let f = drift.eval(t);
    let df = drift.derivative(t);
    let Ok(Coefficients {
        unit, unit_slope, ..
    }) = driven_coefficients(model, power, f)
    else {
        return f64::NAN;
    };
    let s = sigma.eval(t);
    let log_slope = if s != 0.0 {
        2.0 * sigma.derivative(t) / s
    } else {
        0.0
    };
    let mut q = 2.0 * unit * unit_slope * df + log_slope * unit * unit;
    if let Some(sf) = sigma_f {
        q += sf.eval(t).powi(2);
    }
    q
}

/// Cumulative Simpson integral of `g` on the grid nodes, starting at 0.
fn cumulative(g: impl Fn(f64) -> f64, grid: &TimeGrid) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    out.push(acc);
    for k in 0..grid.n_steps() {
        let (a, b) = (grid.time(k), grid.time(k + 1));
        acc += simpson(b - a, g(a), g(0.5 * (a + b)), g(b));
        out.push(acc);
    }
    out
}

/// Analytic curves for any scenario.
///
/// Valuation scenarios need a constant sigma. For the stochastic excess
/// demand model `z`, `z1` and `var_x` have no closed form here and are NaN.
pub fn solve_curves(s: &Scenario) -> Result<AnalyticCurves, AnalyticError> {
    let grid = s.grid;
    let sigma_nodes: Vec<f64> = grid.times().map(|t| s.sigma.eval(t)).collect();
    if s.model == Model::Valuation {
        let sigma = s
            .sigma
            .as_constant()
            .ok_or(AnalyticError::NonConstantSigma(
                "the valuation closed forms",
            ))?;
        let ysol = solve_y(&s.drift, s.y0, &grid);
        let z = solve_z_with(&s.drift, sigma, &ysol, &grid);
        let z1 = z1_closed_form(&s.drift, &ysol, sigma, &grid);
        let var_x = variance_closed_form(&z1, sigma);
        let w: Vec<f64> = grid
            .times()
            .zip(&ysol.y)
            .map(|(t, &y)| gap_squared(s.drift.eval(t), y))
            .collect();
        let vol = limiting_volatility(
            s.model,
            None,
            &VolInputs {
                sigma: &sigma_nodes,
                w: Some(&w),
                var_x: Some(&var_x),
                ..Default::default()
            },
        )?;
        let q = q_curve(&s.drift, &ysol.y, &z1, sigma, &grid);
        return Ok(AnalyticCurves {
            grid,
            model: s.model,
            y: ysol.y,
            z,
            z1,
            var_x,
            w,
            vol,
            q,
            c: 2.0 - sigma * sigma,
            y_discrepancy: ysol.max_discrepancy,
            sigma: s.sigma.clone(),
            drift: s.drift.clone(),
            power: s.coefficient_power,
        });
    }

    if s.model.needs_power() && s.coefficient_power.is_none() {
        return Err(AnalyticError::MissingInput("p"));
    }
    let coeff = |t: f64| driven_coefficients(s.model, s.coefficient_power, s.drift.eval(t));
    if let Some(t) = grid.times().find(|&t| coeff(t).is_err()) {
        return Err(AnalyticError::Unsupported(format!(
            "{}: 1+f>0 violated at t = {t}",
            s.model
        )));
    }
    let drift_at = |t: f64| coeff(t).map(|c| c.drift).unwrap_or(f64::NAN);
    let unit_at = |t: f64| coeff(t).map(|c| c.unit).unwrap_or(f64::NAN);

    let y: Vec<f64> = cumulative(drift_at, &grid)
        .into_iter()
        .map(|v| s.y0 + v)
        .collect();
    let f_nodes: Vec<f64> = grid.times().map(|t| s.drift.eval(t)).collect();
    let sigma_const = s.sigma.as_constant();

    let (var_x, z1, w, vol, q) = if s.model == Model::StochasticF {
        let sigma_f = s
            .sigma_f
            .as_ref()
            .ok_or(AnalyticError::MissingInput("sigma_f"))?;
        let var_f = cumulative(|t| sigma_f.eval(t).powi(2), &grid);
        let vol = limiting_volatility(
            s.model,
            None,
            &VolInputs {
                sigma: &sigma_nodes,
                f: Some(&f_nodes),
                var_f: Some(&var_f),
                ..Default::default()
            },
        )?;
        let w = f_nodes
            .iter()
            .zip(&var_f)
            .map(|(f, v)| (1.0 + f) * (1.0 + f) + v)
            .collect();
        let q = grid
            .times()
            .map(|t| driven_q(s.model, None, &s.drift, &s.sigma, Some(sigma_f), t))
            .collect();
        let nan = vec![f64::NAN; grid.len()];
        (nan.clone(), nan, w, vol, q)
    } else {
        let var_x = cumulative(|t| (s.sigma.eval(t) * unit_at(t)).powi(2), &grid);
        let z1 = match sigma_const {
            Some(_) => cumulative(|t| unit_at(t).powi(2), &grid),
            None => vec![f64::NAN; grid.len()],
        };
        let w = grid.times().map(|t| unit_at(t).powi(2)).collect();
        let vol = limiting_volatility(
            s.model,
            s.coefficient_power,
            &VolInputs {
                sigma: &sigma_nodes,
                f: Some(&f_nodes),
                ..Default::default()
            },
        )?;
        let q = grid
            .times()
            .map(|t| driven_q(s.model, s.coefficient_power, &s.drift, &s.sigma, None, t))
            .collect();
        (var_x, z1, w, vol, q)
    };
    let z = y.iter().zip(&var_x).map(|(y, v)| y * y + v).collect();
    Ok(AnalyticCurves {
        grid,
        model: s.model,
        y,
        z,
        z1,
        var_x,
        w,
        vol,
        q,
        c: sigma_const.map_or(f64::NAN, |v| 2.0 - v * v),
        y_discrepancy: 0.0,
        sigma: s.sigma.clone(),
        drift: s.drift.clone(),
        power: s.coefficient_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t_end: f64, dt: f64) -> TimeGrid {
        TimeGrid::new(0.0, t_end, dt).unwrap()
    }

    #[test]
    fn y_fixed_point_and_relaxation() {
        let g = grid(3.0, 1e-3);
        let s = solve_y(&FunctionSpec::constant(0.7), 0.7, &g);
        assert!(s.y.iter().all(|&v| (v - 0.7).abs() < 1e-14));
        let s = solve_y(&FunctionSpec::constant(1.0), 0.0, &g);
        for (t, v) in g.times().zip(&s.y) {
            assert!((v - (1.0 - (-t).exp())).abs() < 1e-13);
        }
        assert!(s.max_discrepancy < 1e-12);
    }

    #[test]
    fn y_for_linear_valuation() {
        let g = grid(4.0, 1e-3);
        let s = solve_y(&FunctionSpec::linear(0.0, 1.0), 1.0, &g);
        for (t, v) in g.times().zip(&s.y) {
            assert!((v - (t - 1.0 + 2.0 * (-t).exp())).abs() < 1e-13, "{t}");
        }
        for (k, v) in s.y_mid.iter().enumerate() {
            let t = g.time(k) + 0.5 * g.dt();
            assert!((v - (t - 1.0 + 2.0 * (-t).exp())).abs() < 1e-13);
        }
    }

    #[test]
    fn z_without_noise_is_y_squared() {
        let g = grid(6.0, 1e-3);
        let xa = FunctionSpec::quadratic_bump(1.5, 0.1, 2.0);
        let y = solve_y(&xa, 0.9, &g);
        let z = solve_z_with(&xa, 0.0, &y, &g);
        for (zv, yv) in z.iter().zip(&y.y) {
            assert!((zv - yv * yv).abs() < 1e-8);
        }
        let a = FunctionSpec::constant(0.4);
        assert!(solve_z(&a, 0.0, 0.4, &g)
            .iter()
            .all(|&v| (v - 0.16).abs() < 1e-12));
    }

    #[test]
    fn constant_gap_variance() {
        let g = grid(5.0, 1e-3);
        let sigma: f64 = 0.5;
        let c = 2.0 - sigma * sigma;
        let xa = FunctionSpec::constant(1.0);
        let y = solve_y(&xa, 1.0, &g);
        let z1 = z1_closed_form(&xa, &y, sigma, &g);
        let var_x = variance_closed_form(&z1, sigma);
        assert_eq!(var_x[0], 0.0);
        for (t, v) in g.times().zip(&var_x) {
            let exact = sigma * sigma * (1.0 - (-c * t).exp()) / c;
            assert!((v - exact).abs() < 1e-13, "{t}");
        }
        let z = solve_z_with(&xa, sigma, &y, &g);
        for (zv, z1v) in z.iter().zip(&z1) {
            assert!((zv - (1.0 + sigma * sigma * z1v)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_w_gives_positive_q() {
        // x_a - y constant: x_a = t, y0 = -1 gives y = t - 1 exactly
        let g = grid(3.0, 1e-3);
        let sigma: f64 = 0.5;
        let c = 2.0 - sigma * sigma;
        let xa = FunctionSpec::linear(0.0, 1.0);
        let y = solve_y(&xa, -1.0, &g);
        let z1 = z1_closed_form(&xa, &y, sigma, &g);
        let q = q_curve(&xa, &y.y, &z1, sigma, &g);
        for (t, qv) in g.times().zip(&q) {
            let exact = sigma * sigma * 4.0 * (-c * t).exp();
            assert!((qv - exact).abs() < 1e-10, "{t}");
            assert!(*qv > 0.0);
        }
    }

    fn canonical(sigma: f64) -> Scenario {
        Scenario::new(
            Model::Valuation,
            FunctionSpec::quadratic_bump(1.5, 0.1, 2.0),
            Sigma::Constant(sigma),
            0.9,
            grid(6.0, 1e-3),
        )
    }

    #[test]
    fn decomposition_and_q_derivative() {
        let c = solve_curves(&canonical(0.5)).unwrap();
        for i in 0..c.grid.len() {
            let lhs = c.z[i];
            let rhs = c.y[i] * c.y[i] + 0.25 * c.z1[i];
            assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs().max(1.0));
        }
        let h = c.grid.dt();
        for i in 1..c.grid.n_steps() {
            let d = (c.vol[i + 1] - c.vol[i - 1]) / (2.0 * h) / 0.25;
            assert!((d - c.q[i]).abs() < 1e-5, "at {}", c.grid.time(i));
        }
        let t = 1.2345;
        let k = c.grid.cell_of(t);
        assert!((c.q_at(c.grid.time(k)) - c.q[k]).abs() < 1e-12);
        assert!(c.y_discrepancy < 1e-10);
    }

    #[test]
    fn driven_models() {
        let g = grid(4.0, 1e-3);
        let mut s = Scenario::new(
            Model::SupplyDemandSimple,
            FunctionSpec::constant(0.0),
            Sigma::Constant(0.5),
            0.0,
            g,
        );
        let c = solve_curves(&s).unwrap();
        assert!(c.vol.iter().all(|&v| v == 0.25));
        s.model = Model::GbmControl;
        s.sigma = Sigma::Constant(0.2);
        s.drift = FunctionSpec::linear(0.1, -0.05);
        let c = solve_curves(&s).unwrap();
        assert!(c.vol.iter().all(|&v| v == 0.2 * 0.2));
        assert!(c.q.iter().all(|&v| v == 0.0));
        let last = *c.y.last().unwrap();
        assert!((last - (0.1 * 4.0 - 0.025 * 16.0)).abs() < 1e-12);
        assert!((c.var_x.last().unwrap() - 0.04 * 4.0).abs() < 1e-12);
    }

    #[test]
    fn missing_inputs() {
        let sig = [0.5; 3];
        let e = limiting_volatility(
            Model::Valuation,
            None,
            &VolInputs {
                sigma: &sig,
                ..Default::default()
            },
        );
        assert_eq!(e, Err(AnalyticError::MissingInput("w")));
        let e = limiting_volatility(
            Model::GeneralCoefficient(crate::scenario::CoefficientForm::RatioPower),
            None,
            &VolInputs {
                sigma: &sig,
                f: Some(&[0.1; 3]),
                ..Default::default()
            },
        );
        assert_eq!(e, Err(AnalyticError::MissingInput("p")));
    }
}
