//! Deterministic time functions used for drifts, valuations and volatilities.

use serde::{Deserialize, Serialize};

use crate::error::FunctionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `[c]`
    Constant,
    /// `[a, b]`: `a + b t`
    Linear,
    /// `[a, b, t_m]`: `a - b (t - t_m)^2`
    QuadraticBump,
    /// `[base, amp, center, width]`: `base + amp exp(-(t - center)^2 / (2 width^2))`
    GaussianBump,
    /// `[a, k]`: `a exp(k t)`
    Exponential,
    /// `[t_0, v_0, t_1, v_1, ...]`, piecewise linear between knots
    Tabulated,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Constant => "constant",
            Family::Linear => "linear",
            Family::QuadraticBump => "quadratic_bump",
            Family::GaussianBump => "gaussian_bump",
            Family::Exponential => "exponential",
            Family::Tabulated => "tabulated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    #[default]
    Analytic,
    CentralDifference,
}

/// A deterministic function of time with a derivative rule.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    family: Family,
    params: Vec<f64>,
    derivative_mode: DerivativeMode,
}

impl FunctionSpec {
    pub fn new(
        family: Family,
        params: Vec<f64>,
        derivative_mode: DerivativeMode,
    ) -> Result<Self, FunctionError> {
        let name = family.name();
        if params.iter().any(|p| !p.is_finite()) {
            return Err(FunctionError::NonFinite(name));
        }
        let arity = |expected: &'static str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(FunctionError::Arity {
                    family: name,
                    expected,
                    got: params.len(),
                })
            }
        };
        match family {
            Family::Constant => arity("1", params.len() == 1)?,
            Family::Linear => arity("2", params.len() == 2)?,
            Family::QuadraticBump => arity("3", params.len() == 3)?,
            Family::GaussianBump => {
                arity("4", params.len() == 4)?;
                if params[3] == 0.0 {
                    return Err(FunctionError::Degenerate(name));
                }
            }
            Family::Exponential => arity("2", params.len() == 2)?,
            Family::Tabulated => {
                arity(
                    "an even number >= 4",
                    params.len() >= 4 && params.len().is_multiple_of(2),
                )?;
                if derivative_mode == DerivativeMode::Analytic {
                    return Err(FunctionError::TabulatedAnalytic);
                }
                if params
                    .chunks(2)
                    .zip(params.chunks(2).skip(1))
                    .any(|(a, b)| b[0] <= a[0])
                {
                    return Err(FunctionError::UnsortedKnots);
                }
            }
        }
        Ok(Self {
            family,
            params,
            derivative_mode,
        })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Family::Constant, vec![c], DerivativeMode::Analytic).expect("finite constant")
    }

    pub fn linear(a: f64, b: f64) -> Self {
        Self::new(Family::Linear, vec![a, b], DerivativeMode::Analytic).expect("finite linear")
    }

    /// `a - b (t - t_m)^2`
    pub fn quadratic_bump(a: f64, b: f64, t_m: f64) -> Self {
        Self::new(
            Family::QuadraticBump,
            vec![a, b, t_m],
            DerivativeMode::Analytic,
        )
        .expect("finite quadratic")
    }

    pub fn gaussian_bump(base: f64, amp: f64, center: f64, width: f64) -> Self {
        Self::new(
            Family::GaussianBump,
            vec![base, amp, center, width],
            DerivativeMode::Analytic,
        )
        .expect("finite gaussian bump")
    }

    pub fn exponential(a: f64, k: f64) -> Self {
        Self::new(Family::Exponential, vec![a, k], DerivativeMode::Analytic)
            .expect("finite exponential")
    }

    /// Piecewise-linear table from `(t, value)` knots.
    pub fn tabulated(knots: &[(f64, f64)]) -> Result<Self, FunctionError> {
        let params = knots.iter().flat_map(|&(t, v)| [t, v]).collect();
        Self::new(Family::Tabulated, params, DerivativeMode::CentralDifference)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        self.derivative_mode
    }

    pub fn with_derivative_mode(mut self, mode: DerivativeMode) -> Result<Self, FunctionError> {
        if self.family == Family::Tabulated && mode == DerivativeMode::Analytic {
            return Err(FunctionError::TabulatedAnalytic);
        }
        self.derivative_mode = mode;
        Ok(self)
    }

    /// Constant value, if this is a `Constant` spec.
    pub fn as_constant(&self) -> Option<f64> {
        (self.family == Family::Constant).then(|| self.params[0])
    }

    pub fn eval(&self, t: f64) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Constant => p[0],
            Family::Linear => p[0] + p[1] * t,
            Family::QuadraticBump => {
                let d = t - p[2];
                p[0] - p[1] * d * d
            }
            Family::GaussianBump => {
                let d = (t - p[2]) / p[3];
                p[0] + p[1] * (-0.5 * d * d).exp()
            }
            Family::Exponential => p[0] * (p[1] * t).exp(),
            Family::Tabulated => self.interpolate(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self.derivative_mode {
            DerivativeMode::Analytic => self.analytic_derivative(t),
            DerivativeMode::CentralDifference => {
                let h = 1e-5 * t.abs().max(1.0);
                (self.eval(t + h) - self.eval(t - h)) / (2.0 * h)
            }
        }
    }

    fn analytic_derivative(&self, t: f64) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Constant => 0.0,
            Family::Linear => p[1],
            Family::QuadraticBump => -2.0 * p[1] * (t - p[2]),
            Family::GaussianBump => {
                let d = (t - p[2]) / p[3];
                -p[1] * d / p[3] * (-0.5 * d * d).exp()
            }
            Family::Exponential => p[0] * p[1] * (p[1] * t).exp(),
            Family::Tabulated => unreachable!("tabulated specs are built with central differences"),
        }
    }

    fn interpolate(&self, t: f64) -> f64 {
        let n = self.params.len() / 2;
        let knot = |i: usize| (self.params[2 * i], self.params[2 * i + 1]);
        let (first_t, first_v) = knot(0);
        let (last_t, last_v) = knot(n - 1);
        if t <= first_t {
            return first_v;
        }
        if t >= last_t {
            return last_v;
        }
        // first knot with time > t
        let hi = (1..n).find(|&i| knot(i).0 > t).unwrap_or(n - 1);
        let (ta, va) = knot(hi - 1);
        let (tb, vb) = knot(hi);
        va + (vb - va) * (t - ta) / (tb - ta)
    }

    /// Time span covered by a tabulated spec.
    pub fn table_range(&self) -> Option<(f64, f64)> {
        (self.family == Family::Tabulated)
            .then(|| (self.params[0], self.params[self.params.len() - 2]))
    }
}
