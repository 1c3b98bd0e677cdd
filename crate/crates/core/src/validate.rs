//! Scenario invariant checks.

use std::fmt;

use crate::analytic;
use crate::function::{Family, FunctionSpec};
use crate::scenario::{Model, Scenario, Sigma};

/// Outcome of one invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// First grid time at which the invariant fails, when it is pointwise.
    pub first_violation: Option<f64>,
    pub detail: String,
}

impl Check {
    fn pass(name: &'static str) -> Self {
        Self {
            name,
            passed: true,
            first_violation: None,
            detail: String::new(),
        }
    }

    fn fail(name: &'static str, at: Option<f64>, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed: false,
            first_violation: at,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for c in self.failures() {
            if !first {
                f.write_str("; ")?;
            }
            first = false;
            write!(f, "{} failed", c.name)?;
            if let Some(t) = c.first_violation {
                write!(f, " at t = {t}")?;
            }
            if !c.detail.is_empty() {
                write!(f, " ({})", c.detail)?;
            }
        }
        if first {
            f.write_str("all checks passed")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValidationOptions {
    /// Require a constant sigma in (0, 1) for valuation scenarios.
    pub sigma_unit_interval: bool,
}

pub const CHECK_PATHS: &str = "n_paths>=1";
pub const CHECK_FINITE: &str = "finite";
pub const CHECK_SIGMA: &str = "sigma>=0";
pub const CHECK_SHAPE: &str = "quadratic_bump b>0";
pub const CHECK_POWER: &str = "p>=1";
pub const CHECK_EXCESS_DEMAND: &str = "1+f>0";
pub const CHECK_VALUATION: &str = "1+x_a-y>0";
pub const CHECK_SIGMA_UNIT: &str = "sigma in (0,1)";

pub fn validate_scenario(s: &Scenario) -> ValidationReport {
    validate_scenario_with(s, ValidationOptions::default())
}

pub fn validate_scenario_with(s: &Scenario, opts: ValidationOptions) -> ValidationReport {
    let mut checks = Vec::new();
    let grid = &s.grid;

    checks.push(if s.n_paths >= 1 {
        Check::pass(CHECK_PATHS)
    } else {
        Check::fail(CHECK_PATHS, None, "no paths requested")
    });

    let mut specs: Vec<(&str, &FunctionSpec)> = vec![("drift", &s.drift)];
    if let Sigma::Function(f) = &s.sigma {
        specs.push(("sigma", f));
    }
    if let Some(f) = &s.sigma_f {
        specs.push(("sigma_f", f));
    }

    let finite = specs.iter().find_map(|(name, spec)| {
        grid.times()
            .find(|&t| !(spec.eval(t).is_finite() && spec.derivative(t).is_finite()))
            .map(|t| (*name, t))
    });
    let finite_ok = finite.is_none() && s.y0.is_finite() && s.sigma.eval(grid.t0()).is_finite();
    checks.push(match finite {
        None if finite_ok => Check::pass(CHECK_FINITE),
        None => Check::fail(CHECK_FINITE, Some(grid.t0()), "non-finite y0 or sigma"),
        Some((name, t)) => Check::fail(CHECK_FINITE, Some(t), format!("{name} is not finite")),
    });

    checks.push(match grid.times().find(|&t| s.sigma.eval(t) < 0.0) {
        None => Check::pass(CHECK_SIGMA),
        Some(t) => Check::fail(CHECK_SIGMA, Some(t), "negative volatility"),
    });

    let bad_shape = specs
        .iter()
        .find(|(_, spec)| spec.family() == Family::QuadraticBump && spec.params()[1] <= 0.0);
    checks.push(match bad_shape {
        None => Check::pass(CHECK_SHAPE),
        Some((name, spec)) => Check::fail(
            CHECK_SHAPE,
            None,
            format!("{name} curvature b = {} is not positive", spec.params()[1]),
        ),
    });

    if s.model.needs_power() {
        checks.push(match s.coefficient_power {
            Some(p) if p >= 1 => Check::pass(CHECK_POWER),
            Some(_) => Check::fail(CHECK_POWER, None, "power must be a positive integer"),
            None => Check::fail(CHECK_POWER, None, "power missing"),
        });
    }

    if s.model.is_supply_demand() || s.model == Model::StochasticF {
        let first = grid.times().find(|&t| 1.0 + s.drift.eval(t) <= 0.0);
        checks.push(match first {
            None => Check::pass(CHECK_EXCESS_DEMAND),
            Some(t) => Check::fail(
                CHECK_EXCESS_DEMAND,
                Some(t),
                format!("1+f = {}", 1.0 + s.drift.eval(t)),
            ),
        });
    }

    if s.model == Model::Valuation && finite_ok {
        let y = analytic::solve_y(&s.drift, s.y0, grid);
        let first = grid
            .times()
            .zip(&y.y)
            .find(|&(t, &yt)| 1.0 + s.drift.eval(t) - yt <= 0.0);
        checks.push(match first {
            None => Check::pass(CHECK_VALUATION),
            Some((t, yt)) => Check::fail(
                CHECK_VALUATION,
                Some(t),
                format!("1+x_a-y = {}", 1.0 + s.drift.eval(t) - yt),
            ),
        });
        if opts.sigma_unit_interval {
            checks.push(match s.sigma.as_constant() {
                Some(v) if v > 0.0 && v < 1.0 => Check::pass(CHECK_SIGMA_UNIT),
                Some(v) => Check::fail(CHECK_SIGMA_UNIT, None, format!("sigma = {v}")),
                None => Check::fail(CHECK_SIGMA_UNIT, None, "sigma is not constant"),
            });
        }
    }

    ValidationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    fn grid() -> TimeGrid {
        TimeGrid::new(0.0, 2.0, 0.01).unwrap()
    }

    #[test]
    fn equilibrium_passes() {
        let s = Scenario::new(
            Model::SupplyDemandSimple,
            FunctionSpec::constant(0.0),
            Sigma::Constant(0.5),
            0.0,
            grid(),
        );
        let r = validate_scenario(&s);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn excess_demand_guard_fails_at_start() {
        let s = Scenario::new(
            Model::SupplyDemandSimple,
            FunctionSpec::constant(-1.5),
            Sigma::Constant(0.5),
            0.0,
            grid(),
        );
        let r = validate_scenario(&s);
        let c = r.get(CHECK_EXCESS_DEMAND).unwrap();
        assert!(!c.passed);
        assert_eq!(c.first_violation, Some(0.0));
        assert!(r.to_string().contains("1+f>0"));
    }

    #[test]
    fn flat_quadratic_fails_shape() {
        let s = Scenario::new(
            Model::Valuation,
            FunctionSpec::quadratic_bump(1.5, -0.1, 1.0),
            Sigma::Constant(0.5),
            0.9,
            grid(),
        );
        assert!(!validate_scenario(&s).get(CHECK_SHAPE).unwrap().passed);
    }

    #[test]
    fn valuation_guard_and_sigma_interval() {
        let s = Scenario::new(
            Model::Valuation,
            FunctionSpec::constant(0.0),
            Sigma::Constant(1.5),
            1.5,
            grid(),
        );
        let r = validate_scenario_with(
            &s,
            ValidationOptions {
                sigma_unit_interval: true,
            },
        );
        let guard = r.get(CHECK_VALUATION).unwrap();
        assert!(!guard.passed);
        assert_eq!(guard.first_violation, Some(0.0));
        assert!(!r.get(CHECK_SIGMA_UNIT).unwrap().passed);
        assert!(validate_scenario(&s).get(CHECK_SIGMA_UNIT).is_none());
    }

    #[test]
    fn missing_power_is_reported() {
        let s = Scenario::new(
            Model::GeneralCoefficient(crate::scenario::CoefficientForm::RatioPower),
            FunctionSpec::constant(0.1),
            Sigma::Constant(0.5),
            0.0,
            grid(),
        );
        assert!(!validate_scenario(&s).get(CHECK_POWER).unwrap().passed);
        assert!(validate_scenario(&s.with_power(2)).passed());
    }
}
