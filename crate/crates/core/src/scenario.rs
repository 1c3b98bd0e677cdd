//! Scenario definition and the key-value config format.
//!
//! Configs are TOML documents with a fixed key set:
//!
//! ```text
//! model = "valuation"
//! sigma = 0.5              # or a [sigma] section with family/params
//! y0 = 0.9
//! t0 = 0.0
//! t_end = 6.0
//! dt = 0.001
//! n_paths = 100000
//! seed = 42
//! p = 2                    # general_* models only
//!
//! [drift]
//! family = "quadratic_bump"
//! params = [1.5, 0.1, 2.0]
//! derivative = "analytic"  # optional
//!
//! [sigma_f]                # stochastic_f only
//! family = "constant"
//! params = [0.1]
//! ```
//!
//! Unknown keys are rejected.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::function::{DerivativeMode, Family, FunctionSpec};
use crate::grid::TimeGrid;

/// Diffusion coefficient shape for the generalised supply/demand model
/// `d log P = f dt + sigma h(f) dW`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoefficientForm {
    /// `h = f^q`
    Monomial,
    /// `h = (f / (f + 2))^p`, i.e. `((D - S) / (D + S))^p`
    RatioPower,
    /// `h = H(f / (f + 2))^{1/2}` with `H(z) = 1 + z^2`
    HForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    SupplyDemandSimple,
    SupplyDemandSymmetric,
    MarketTop,
    MarketBottom,
    GeneralCoefficient(CoefficientForm),
    Valuation,
    StochasticF,
    GbmControl,
}

impl Model {
    pub const ALL: [Model; 10] = [
        Model::SupplyDemandSimple,
        Model::SupplyDemandSymmetric,
        Model::MarketTop,
        Model::MarketBottom,
        Model::GeneralCoefficient(CoefficientForm::Monomial),
        Model::GeneralCoefficient(CoefficientForm::RatioPower),
        Model::GeneralCoefficient(CoefficientForm::HForm),
        Model::Valuation,
        Model::StochasticF,
        Model::GbmControl,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Model::SupplyDemandSimple => "supply_demand_simple",
            Model::SupplyDemandSymmetric => "supply_demand_symmetric",
            Model::MarketTop => "market_top",
            Model::MarketBottom => "market_bottom",
            Model::GeneralCoefficient(CoefficientForm::Monomial) => "general_monomial",
            Model::GeneralCoefficient(CoefficientForm::RatioPower) => "general_ratio_power",
            Model::GeneralCoefficient(CoefficientForm::HForm) => "general_h",
            Model::Valuation => "valuation",
            Model::StochasticF => "stochastic_f",
            Model::GbmControl => "gbm_control",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.tag() == tag)
    }

    /// Models whose drift spec is the excess demand `f = D/S - 1`.
    pub fn is_supply_demand(self) -> bool {
        matches!(
            self,
            Model::SupplyDemandSimple
                | Model::SupplyDemandSymmetric
                | Model::MarketTop
                | Model::MarketBottom
                | Model::GeneralCoefficient(_)
        )
    }

    pub fn needs_power(self) -> bool {
        matches!(
            self,
            Model::GeneralCoefficient(CoefficientForm::Monomial | CoefficientForm::RatioPower)
        )
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Price volatility parameter: a constant or a deterministic function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum Sigma {
    Constant(f64),
    Function(FunctionSpec),
}

impl Sigma {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Sigma::Constant(s) => *s,
            Sigma::Function(f) => f.eval(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Sigma::Constant(_) => 0.0,
            Sigma::Function(f) => f.derivative(t),
        }
    }

    /// The constant value, also for a `Constant`-family function.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Sigma::Constant(s) => Some(*s),
            Sigma::Function(f) => f.as_constant(),
        }
    }
}

/// Full experiment definition.
///
/// `drift` is interpreted per model: the excess demand `f` for the
/// supply/demand family, the log valuation `x_a` for `Valuation`, the drift
/// `mu(t)` for `GbmControl`, and the mean excess-demand path `E f(t)` for
/// `StochasticF` (whose process is `df = E f'(t) dt + sigma_f dW`, started at
/// `E f(t0)`).
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: Model,
    pub drift: FunctionSpec,
    pub sigma: Sigma,
    pub sigma_f: Option<FunctionSpec>,
    pub y0: f64,
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub seed: u64,
    pub coefficient_power: Option<u32>,
}

impl Scenario {
    pub fn new(model: Model, drift: FunctionSpec, sigma: Sigma, y0: f64, grid: TimeGrid) -> Self {
        Self {
            model,
            drift,
            sigma,
            sigma_f: None,
            y0,
            grid,
            n_paths: 1000,
            seed: 0,
            coefficient_power: None,
        }
    }

    pub fn with_paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_power(mut self, p: u32) -> Self {
        self.coefficient_power = Some(p);
        self
    }

    pub fn with_sigma_f(mut self, sigma_f: FunctionSpec) -> Self {
        self.sigma_f = Some(sigma_f);
        self
    }

    pub fn with_grid(mut self, grid: TimeGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn from_config_str(text: &str) -> Result<Self, ScenarioError> {
        ScenarioConfig::parse(text)?.build()
    }

    pub fn from_config_file(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        Self::from_config_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_config(&self) -> ScenarioConfig {
        ScenarioConfig {
            model: self.model.tag().to_string(),
            y0: self.y0,
            t0: self.grid.t0(),
            t_end: self.grid.t_end(),
            dt: self.grid.dt(),
            n_paths: self.n_paths as u64,
            seed: self.seed,
            p: self.coefficient_power,
            sigma: match &self.sigma {
                Sigma::Constant(s) => SigmaConfig::Constant(*s),
                Sigma::Function(f) => SigmaConfig::Function(FunctionConfig::from_spec(f)),
            },
            drift: FunctionConfig::from_spec(&self.drift),
            sigma_f: self.sigma_f.as_ref().map(FunctionConfig::from_spec),
        }
    }

    pub fn to_config_string(&self) -> String {
        self.to_config().emit()
    }
}

/// A function section (`[drift]`, `[sigma]`, `[sigma_f]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    pub family: Family,
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative: Option<DerivativeMode>,
}

impl FunctionConfig {
    fn from_spec(spec: &FunctionSpec) -> Self {
        let default_mode = default_mode(spec.family());
        Self {
            family: spec.family(),
            params: spec.params().to_vec(),
            derivative: (spec.derivative_mode() != default_mode).then(|| spec.derivative_mode()),
        }
    }

    fn build(&self) -> Result<FunctionSpec, ScenarioError> {
        let mode = self.derivative.unwrap_or(default_mode(self.family));
        Ok(FunctionSpec::new(self.family, self.params.clone(), mode)?)
    }
}

fn default_mode(family: Family) -> DerivativeMode {
    if family == Family::Tabulated {
        DerivativeMode::CentralDifference
    } else {
        DerivativeMode::Analytic
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaConfig {
    Constant(f64),
    Function(FunctionConfig),
}

/// Raw config document, field for field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: String,
    pub y0: f64,
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub n_paths: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    pub sigma: SigmaConfig,
    pub drift: FunctionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_f: Option<FunctionConfig>,
}

/// Keys accepted by [`ScenarioConfig::set`].
pub const NUMERIC_KEYS: [&str; 8] = ["sigma", "y0", "t0", "t_end", "dt", "n_paths", "seed", "p"];

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.message().to_string()))
    }

    pub fn emit(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn build(&self) -> Result<Scenario, ScenarioError> {
        let model = Model::from_tag(&self.model)
            .ok_or_else(|| ScenarioError::Parse(format!("unknown model `{}`", self.model)))?;
        let grid = TimeGrid::new(self.t0, self.t_end, self.dt)?;
        let sigma = match &self.sigma {
            SigmaConfig::Constant(s) => Sigma::Constant(*s),
            SigmaConfig::Function(f) => Sigma::Function(f.build()?),
        };
        let sigma_f = self
            .sigma_f
            .as_ref()
            .map(FunctionConfig::build)
            .transpose()?;
        if model == Model::StochasticF && sigma_f.is_none() {
            return Err(ScenarioError::Parse(
                "model `stochastic_f` requires a [sigma_f] section".into(),
            ));
        }
        if model != Model::StochasticF && sigma_f.is_some() {
            return Err(ScenarioError::Parse(format!(
                "key `sigma_f` is only valid for model `stochastic_f`, not `{}`",
                self.model
            )));
        }
        if model.needs_power() && self.p.is_none() {
            return Err(ScenarioError::Parse(format!(
                "model `{}` requires key `p`",
                self.model
            )));
        }
        Ok(Scenario {
            model,
            drift: self.drift.build()?,
            sigma,
            sigma_f,
            y0: self.y0,
            grid,
            n_paths: self.n_paths as usize,
            seed: self.seed,
            coefficient_power: self.p,
        })
    }

    /// Overrides one numeric key. `params.K` addresses the K-th drift
    /// parameter.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), ScenarioError> {
        let whole = |v: f64| -> Result<u64, ScenarioError> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
                Ok(v as u64)
            } else {
                Err(ScenarioError::Parse(format!(
                    "key `{key}` needs a non-negative integer, got {v}"
                )))
            }
        };
        match key {
            "sigma" => self.sigma = SigmaConfig::Constant(value),
            "y0" => self.y0 = value,
            "t0" => self.t0 = value,
            "t_end" => self.t_end = value,
            "dt" => self.dt = value,
            "n_paths" => self.n_paths = whole(value)?,
            "seed" => self.seed = whole(value)?,
            "p" => self.p = Some(whole(value)? as u32),
            _ => {
                let idx = key
                    .strip_prefix("params.")
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| ScenarioError::Parse(format!("unknown grid key `{key}`")))?;
                let slot = self.drift.params.get_mut(idx).ok_or_else(|| {
                    ScenarioError::Parse(format!("drift has no parameter index {idx}"))
                })?;
                *slot = value;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: &str = r#"
model = "valuation"
sigma = 0.5
y0 = 0.9
t0 = 0.0
t_end = 6.0
dt = 0.001
n_paths = 1000
seed = 7

[drift]
family = "quadratic_bump"
params = [1.5, 0.1, 2.0]
"#;

    #[test]
    fn parses_canonical() {
        let s = Scenario::from_config_str(CANONICAL).unwrap();
        assert_eq!(s.model, Model::Valuation);
        assert_eq!(s.sigma, Sigma::Constant(0.5));
        assert_eq!(s.grid.n_steps(), 6000);
        assert_eq!(s.drift.params(), &[1.5, 0.1, 2.0]);
        assert_eq!(s.seed, 7);
    }

    #[test]
    fn missing_sigma_names_the_key() {
        let text = CANONICAL.replace("sigma = 0.5\n", "");
        let err = Scenario::from_config_str(&text).unwrap_err();
        assert!(matches!(err, ScenarioError::Parse(_)));
        assert!(err.to_string().contains("sigma"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = CANONICAL.replace("seed = 7", "seed = 7\nmu = 3.0");
        let err = Scenario::from_config_str(&text).unwrap_err();
        assert!(err.to_string().contains("mu"), "{err}");
        let text = CANONICAL.replace("params = [1.5", "colour = 1\nparams = [1.5");
        assert!(Scenario::from_config_str(&text).is_err());
    }

    #[test]
    fn sigma_section_and_sigma_f() {
        let text = r#"
model = "stochastic_f"
y0 = 0.0
t0 = 0.0
t_end = 1.0
dt = 0.01
n_paths = 10
seed = 1

[sigma]
family = "exponential"
params = [0.5, -0.1]

[drift]
family = "constant"
params = [0.1]

[sigma_f]
family = "constant"
params = [0.1]
"#;
        let s = Scenario::from_config_str(text).unwrap();
        assert!(matches!(s.sigma, Sigma::Function(_)));
        assert_eq!(s.sigma_f.as_ref().unwrap().as_constant(), Some(0.1));
        let again = Scenario::from_config_str(&s.to_config_string()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn model_specific_keys() {
        let text = CANONICAL.replace("\"valuation\"", "\"general_ratio_power\"");
        assert!(Scenario::from_config_str(&text)
            .unwrap_err()
            .to_string()
            .contains("`p`"));
        let text = format!("{CANONICAL}\n[sigma_f]\nfamily = \"constant\"\nparams = [0.1]\n");
        assert!(Scenario::from_config_str(&text).is_err());
        let text = CANONICAL.replace("\"valuation\"", "\"bubble\"");
        assert!(Scenario::from_config_str(&text)
            .unwrap_err()
            .to_string()
            .contains("bubble"));
    }

    #[test]
    fn set_overrides() {
        let mut c = ScenarioConfig::parse(CANONICAL).unwrap();
        c.set("params.1", 0.2).unwrap();
        c.set("sigma", 0.8).unwrap();
        c.set("seed", 11.0).unwrap();
        let s = c.build().unwrap();
        assert_eq!(s.drift.params()[1], 0.2);
        assert_eq!(s.sigma, Sigma::Constant(0.8));
        assert_eq!(s.seed, 11);
        assert!(c.set("params.9", 1.0).is_err());
        assert!(c.set("n_paths", 1.5).is_err());
        assert!(c.set("volume", 1.0).is_err());
    }

    #[test]
    fn model_tags_round_trip() {
        for m in Model::ALL {
            assert_eq!(Model::from_tag(m.tag()), Some(m));
        }
    }
}
