//! Drift and diffusion of `d log P = a dt + sigma u dW` per model, as
//! functions of the driving value (excess demand `f`, or the drift `mu` for
//! the control model).

use crate::scenario::{CoefficientForm, Model};
use crate::supply_demand::{drift_diffusion_coeffs, GKind};

pub const GUARD_EXCESS_DEMAND: &str = "1+f>0";
pub const GUARD_VALUATION: &str = "1+x_a-X>0";

/// Drift `a`, unit diffusion `u` and `du/df` at driving value `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub drift: f64,
    pub unit: f64,
    pub unit_slope: f64,
}

fn g_kind(model: Model) -> Option<GKind> {
    match model {
        Model::SupplyDemandSimple | Model::StochasticF => Some(GKind::Simple),
        Model::SupplyDemandSymmetric => Some(GKind::Symmetric),
        Model::MarketTop => Some(GKind::TopApprox),
        Model::MarketBottom => Some(GKind::BottomApprox),
        _ => None,
    }
}

/// Coefficients of the models driven by a scalar `f`. Valuation is state
/// dependent and handled by [`valuation_coefficients`].
///
/// Fails with the guard label when `1 + f <= 0` for supply/demand models.
pub fn driven_coefficients(
    model: Model,
    power: Option<u32>,
    f: f64,
) -> Result<Coefficients, &'static str> {
    if model == Model::GbmControl {
        return Ok(Coefficients {
            drift: f,
            unit: 1.0,
            unit_slope: 0.0,
        });
    }
    let r = 1.0 + f;
    if !(r > 0.0) {
        return Err(GUARD_EXCESS_DEMAND);
    }
    if let Some(kind) = g_kind(model) {
        let (drift, unit) =
            drift_diffusion_coeffs(kind, r, 1.0).map_err(|_| GUARD_EXCESS_DEMAND)?;
        let unit_slope = match kind {
            GKind::Symmetric => 1.0 - 1.0 / (r * r),
            GKind::BottomApprox => -1.0 / (r * r),
            GKind::Simple | GKind::TopApprox => 1.0,
        };
        return Ok(Coefficients {
            drift,
            unit,
            unit_slope,
        });
    }
    let p = power.unwrap_or(1) as i32;
    let dz = 2.0 / ((f + 2.0) * (f + 2.0));
    let z = f / (f + 2.0);
    let (unit, unit_slope) = match model {
        Model::GeneralCoefficient(CoefficientForm::Monomial) => {
            (f.powi(p), p as f64 * f.powi(p - 1))
        }
        Model::GeneralCoefficient(CoefficientForm::RatioPower) => {
            (z.powi(p), p as f64 * z.powi(p - 1) * dz)
        }
        Model::GeneralCoefficient(CoefficientForm::HForm) => {
            let u = (1.0 + z * z).sqrt();
            (u, z / u * dz)
        }
        _ => unreachable!("model {model} has no driven coefficients"),
    };
    Ok(Coefficients {
        drift: f,
        unit,
        unit_slope,
    })
}

/// Valuation model at log valuation `x_a` and state `x`:
/// `a = x_a - x`, `u = 1 + x_a - x`.
#[inline]
pub fn valuation_coefficients(x_a: f64, x: f64) -> Result<(f64, f64), &'static str> {
    let gap = x_a - x;
    let unit = 1.0 + gap;
    if unit > 0.0 {
        Ok((gap, unit))
    } else {
        Err(GUARD_VALUATION)
    }
}
