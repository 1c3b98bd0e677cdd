//! End-to-end pipelines behind the command line: `run` and `sweep`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analytic::{solve_curves, AnalyticCurves};
use crate::error::{AnalyticError, ScenarioError, SimulationError};
use crate::export::{curves_csv, density_csv, fmt_num, summary_csv};
use crate::extrema::{locate_extrema, verify_sign_lemmas, ConditionReport, ExtremaReport};
use crate::roots::Root;
use crate::scenario::{Model, Scenario, ScenarioConfig, Sigma, NUMERIC_KEYS};
use crate::sde::{simulate_summary, variance_term_scaling, EnsembleSummary, SummaryOptions};
use crate::supply_demand::{
    density_window, exact_mass_on_window, ratio_cdf_exact, ratio_density_approx,
    ratio_density_exact, ratio_histogram_test, sample_supply_demand, BivariatePair,
};
use crate::validate::validate_scenario;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_INVALID: u8 = 3;
pub const EXIT_GUARD: u8 = 4;

/// Window lengths used by the `scaling` verification.
pub const SCALING_DTS: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
/// Histogram layout for `densitymatch`.
const DENSITY_BINS: usize = 50;
const DENSITY_HIST_K: f64 = 3.0;
const DENSITY_MASS_K: f64 = 10.0;
const DENSITY_POINTS: usize = 400;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("bad grid: {0}")]
    Grid(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Scenario(ScenarioError::Invalid(_)) => EXIT_INVALID,
            RunError::Scenario(ScenarioError::Grid(_) | ScenarioError::Function(_)) => EXIT_INVALID,
            RunError::Scenario(ScenarioError::Parse(_) | ScenarioError::Io(_)) => EXIT_PARSE,
            RunError::Simulation(
                SimulationError::Guard { .. } | SimulationError::NonFinite { .. },
            ) => EXIT_GUARD,
            RunError::Simulation(_) | RunError::Analytic(_) | RunError::Grid(_) => EXIT_INVALID,
            RunError::Output { .. } => EXIT_PARSE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verification {
    Ordering,
    SignLemmas,
    FlatVol,
    Jensen,
    Scaling,
    DensityMatch,
    McMatch,
}

impl Verification {
    pub const ALL: [Verification; 7] = [
        Verification::Ordering,
        Verification::SignLemmas,
        Verification::FlatVol,
        Verification::Jensen,
        Verification::Scaling,
        Verification::DensityMatch,
        Verification::McMatch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Verification::Ordering => "ordering",
            Verification::SignLemmas => "signlemmas",
            Verification::FlatVol => "flatvol",
            Verification::Jensen => "jensen",
            Verification::Scaling => "scaling",
            Verification::DensityMatch => "densitymatch",
            Verification::McMatch => "mcmatch",
        }
    }
}

impl fmt::Display for Verification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Verification {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|v| v.name()).collect();
                format!(
                    "unknown verification `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub name: Verification,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub paths: Option<u64>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub verify: Vec<Verification>,
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub scenario_path: PathBuf,
    pub scenario: Scenario,
    pub out_dir: PathBuf,
    /// File name and SHA-256 of every emitted artifact, in write order.
    pub artifacts: Vec<(String, String)>,
    pub timings: Vec<(&'static str, Duration)>,
    pub verifications: Vec<VerifyOutcome>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.verifications.iter().all(|v| v.passed)
    }

    pub fn exit_code(&self) -> u8 {
        if self.passed() {
            EXIT_OK
        } else {
            EXIT_VERIFY
        }
    }

    /// Manifest text: resolved config and artifact hashes. Timings and the
    /// output location are left out so reruns give identical bytes.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "scenario = {}\n",
            self.scenario_path
                .file_name()
                .map_or("".into(), |n| n.to_string_lossy())
        ));
        out.push_str("\n[artifacts]\n");
        for (name, hash) in &self.artifacts {
            out.push_str(&format!("{name} = {hash}\n"));
        }
        out.push_str("\n[resolved]\n");
        out.push_str(&self.scenario.to_config_string());
        out
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Writer {
    dir: PathBuf,
    artifacts: Vec<(String, String)>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Output {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|source| RunError::Output { path, source })?;
        self.artifacts
            .push((name.to_string(), sha256_hex(text.as_bytes())));
        Ok(())
    }
}

/// Reads a config and applies command-line overrides.
pub fn load_config(path: &Path, opts: &RunOptions) -> Result<ScenarioConfig, RunError> {
    let text = fs::read_to_string(path).map_err(ScenarioError::Io)?;
    let mut cfg = ScenarioConfig::parse(&text)?;
    if let Some(n) = opts.paths {
        cfg.n_paths = n;
    }
    if let Some(dt) = opts.dt {
        cfg.dt = dt;
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn build_valid(cfg: &ScenarioConfig) -> Result<Scenario, RunError> {
    let s = cfg.build()?;
    let report = validate_scenario(&s);
    if !report.passed() {
        return Err(ScenarioError::Invalid(report).into());
    }
    Ok(s)
}

/// Runs analytic, simulation, estimation, extrema and verification stages
/// and writes the artifacts into `opts.out_dir`.
pub fn run(config_path: &Path, opts: &RunOptions) -> Result<RunManifest, RunError> {
    let cfg = load_config(config_path, opts)?;
    let scenario = build_valid(&cfg)?;
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, timings: &mut Vec<(&'static str, Duration)>| {
        let now = Instant::now();
        timings.push((name, now - clock));
        clock = now;
    };

    let curves = solve_curves(&scenario)?;
    lap("analytic", &mut timings);

    let jensen_peak = opts
        .verify
        .contains(&Verification::Jensen)
        .then(|| curves.y_argmax());
    let summary = simulate_summary(&scenario, SummaryOptions { jensen_peak })?;
    lap("simulate", &mut timings);

    let curves_text = curves_csv(&curves);
    let summary_text = summary_csv(&summary);
    lap("estimate", &mut timings);

    let report = locate_extrema(&scenario, &curves);
    lap("extrema", &mut timings);

    let mut writer = Writer::new(&opts.out_dir)?;
    writer.write("curves.csv", &curves_text)?;
    writer.write("ensemble_summary.csv", &summary_text)?;
    writer.write("extrema_report.txt", &report.to_string())?;

    let ctx = Context {
        scenario: &scenario,
        curves: &curves,
        summary: &summary,
        report: &report,
    };
    let mut outcomes = Vec::with_capacity(opts.verify.len());
    for &v in &opts.verify {
        outcomes.push(ctx.verify(v, &mut writer)?);
    }
    let mut verify_text = String::new();
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        verify_text.push_str(&format!("{} {status} {}\n", o.name, o.detail));
    }
    if outcomes.is_empty() {
        verify_text.push_str("no verifications requested\n");
    }
    writer.write("verify.txt", &verify_text)?;
    lap("verify", &mut timings);

    let manifest = RunManifest {
        scenario_path: config_path.to_path_buf(),
        scenario,
        out_dir: opts.out_dir.clone(),
        artifacts: writer.artifacts.clone(),
        timings,
        verifications: outcomes,
    };
    let path = opts.out_dir.join("manifest.txt");
    fs::write(&path, manifest.render()).map_err(|source| RunError::Output { path, source })?;
    Ok(manifest)
}

struct Context<'a> {
    scenario: &'a Scenario,
    curves: &'a AnalyticCurves,
    summary: &'a EnsembleSummary,
    report: &'a ExtremaReport,
}

fn outcome(name: Verification, passed: bool, detail: String) -> VerifyOutcome {
    VerifyOutcome {
        name,
        passed,
        detail,
    }
}

/// `|value - target| <= k se`, with exact equality required when `se` is zero.
fn within(value: f64, target: f64, se: f64, k: f64) -> bool {
    (value - target).abs() <= k * se
}

impl Context<'_> {
    fn verify(&self, v: Verification, writer: &mut Writer) -> Result<VerifyOutcome, RunError> {
        Ok(match v {
            Verification::Ordering => self.ordering(),
            Verification::SignLemmas => self.sign_lemmas(),
            Verification::FlatVol => self.flat_vol(),
            Verification::Jensen => self.jensen(),
            Verification::Scaling => self.scaling()?,
            Verification::DensityMatch => self.density_match(writer)?,
            Verification::McMatch => self.mc_match(),
        })
    }

    fn ordering(&self) -> VerifyOutcome {
        let name = Verification::Ordering;
        if self.scenario.model != Model::Valuation {
            return outcome(name, false, "defined for the valuation model only".into());
        }
        let r = self.report;
        let detail = format!(
            "conditions_ok={} ordering_ok={} margins_ok={}",
            r.conditions.all_ok(),
            r.ordering_ok,
            r.margins_ok
        );
        outcome(name, r.verified(), detail)
    }

    fn sign_lemmas(&self) -> VerifyOutcome {
        let lemmas = verify_sign_lemmas(self.curves, self.report);
        let opt = |v: Option<f64>| v.map_or("na".to_string(), fmt_num);
        let lag = lemmas
            .peak_lag
            .as_ref()
            .map_or("na".to_string(), |p| p.ok.to_string());
        let detail = format!(
            "q_at_t1={} q_at_tstar={} peak_lag_ok={lag}",
            opt(lemmas.q_at_t1),
            opt(lemmas.q_at_tstar)
        );
        outcome(Verification::SignLemmas, lemmas.passed(), detail)
    }

    fn flat_vol(&self) -> VerifyOutcome {
        let name = Verification::FlatVol;
        let Sigma::Constant(sigma) = self.scenario.sigma else {
            return outcome(name, false, "requires a constant sigma".into());
        };
        let target = sigma * sigma;
        let analytic_flat = self.curves.vol.iter().all(|&v| v == target);
        let (vol, se) = (self.summary.volhat(), self.summary.volhat_se());
        let mut worst: f64 = 0.0;
        let mut bad = 0;
        for (v, s) in vol.iter().zip(&se) {
            if !within(*v, target, *s, 4.0) {
                bad += 1;
            }
            if *s > 0.0 {
                worst = worst.max((v - target).abs() / s);
            }
        }
        let detail = format!("analytic_flat={analytic_flat} max_z={worst:.3} outside_4se={bad}");
        outcome(name, analytic_flat && bad == 0, detail)
    }

    fn jensen(&self) -> VerifyOutcome {
        let name = Verification::Jensen;
        match &self.summary.jensen {
            Some(j) => {
                let detail = format!(
                    "peak_t={} flagged={}",
                    fmt_num(j.peak_time),
                    j.flagged.len()
                );
                outcome(
                    name,
                    j.passed() && j.peak_index == self.curves.y_argmax(),
                    detail,
                )
            }
            None => outcome(name, false, "no jensen accumulator".into()),
        }
    }

    fn scaling(&self) -> Result<VerifyOutcome, RunError> {
        let r = variance_term_scaling(self.scenario, &SCALING_DTS)?;
        let slope = |s: Option<f64>| s.map_or("na".to_string(), |v| format!("{v:.4}"));
        let detail = format!(
            "v1={:?}/{} v2={:?}/{} v3={:?}/{}",
            r.v1.status,
            slope(r.v1.slope),
            r.v2.status,
            slope(r.v2.slope),
            r.v3.status,
            slope(r.v3.slope)
        );
        Ok(outcome(Verification::Scaling, r.meets_theory(), detail))
    }

    fn density_match(&self, writer: &mut Writer) -> Result<VerifyOutcome, RunError> {
        let name = Verification::DensityMatch;
        let s = self.scenario;
        if !(s.model.is_supply_demand() || s.model == Model::StochasticF) {
            return Ok(outcome(
                name,
                false,
                "needs a model driven by excess demand".into(),
            ));
        }
        let t0 = s.grid.t0();
        let pair = match BivariatePair::anticorrelated(
            1.0 + s.drift.eval(t0),
            1.0,
            0.5 * s.sigma.eval(t0),
        ) {
            Ok(p) => p,
            Err(e) => return Ok(outcome(name, false, e.to_string())),
        };
        let (lo, hi) = density_window(&pair, DENSITY_MASS_K);
        if !(hi > lo) {
            return Ok(outcome(
                name,
                false,
                "degenerate supply/demand noise".into(),
            ));
        }
        let exact = |x: f64| ratio_density_exact(x, &pair).unwrap_or(f64::NAN);
        writer.write(
            "density_exact.csv",
            &density_csv(exact, lo, hi, DENSITY_POINTS),
        )?;
        let approx = |x: f64| ratio_density_approx(x, &pair);
        writer.write(
            "density_approx.csv",
            &density_csv(approx, lo, hi, DENSITY_POINTS),
        )?;

        let result = (|| {
            let mass = exact_mass_on_window(&pair, DENSITY_MASS_K)?;
            let cdf_mass = ratio_cdf_exact(hi, &pair)? - ratio_cdf_exact(lo, &pair)?;
            let ratios: Vec<f64> = sample_supply_demand(&pair, s.n_paths, s.seed)
                .into_iter()
                .map(|(d, sup)| d / sup)
                .collect();
            let hist = ratio_histogram_test(&ratios, &pair, DENSITY_BINS, DENSITY_HIST_K)?;
            Ok::<_, crate::error::SupplyDemandError>((mass, cdf_mass, hist.p_value))
        })();
        Ok(match result {
            Ok((mass, cdf_mass, p)) => {
                let ok = p > 1e-3 && (mass - cdf_mass).abs() < 1e-6 && (mass - 1.0).abs() < 1e-3;
                outcome(name, ok, format!("chi2_p={p:.6} window_mass={mass:.12}"))
            }
            Err(e) => outcome(name, false, e.to_string()),
        })
    }

    fn mc_match(&self) -> VerifyOutcome {
        let name = Verification::McMatch;
        let grid = &self.scenario.grid;
        let n = grid.n_steps();
        let mut var_ok = true;
        let mut var_z = Vec::new();
        for frac in [1usize, 2, 3, 4] {
            let k = n * frac / 4;
            let st = &self.summary.level[k];
            let target = self.curves.var_x[k];
            if !target.is_finite() {
                return outcome(name, false, "no closed-form variance for this model".into());
            }
            var_ok &= within(st.variance, target, st.se_variance, 4.0);
            var_z.push(if st.se_variance > 0.0 {
                format!("{:.3}", (st.variance - target) / st.se_variance)
            } else {
                "exact".into()
            });
        }
        let (vol, se) = (self.summary.volhat(), self.summary.volhat_se());
        let hits = (0..grid.len())
            .filter(|&k| within(vol[k], self.curves.vol[k], se[k], 4.0))
            .count();
        let frac = hits as f64 / grid.len() as f64;
        let ok = var_ok && frac >= 0.95;
        outcome(
            name,
            ok,
            format!("var_z=[{}] vol_within_4se={frac:.4}", var_z.join(",")),
        )
    }
}

/// One `key=a,b,c` axis of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<f64>,
}

impl FromStr for GridAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, list) = s
            .split_once('=')
            .ok_or_else(|| format!("grid axis `{s}` is not of the form key=a,b,c"))?;
        let key = key.trim().to_string();
        let is_param = key
            .strip_prefix("params.")
            .is_some_and(|i| i.parse::<usize>().is_ok());
        if !(NUMERIC_KEYS.contains(&key.as_str()) || is_param) {
            return Err(format!("unknown grid key `{key}`"));
        }
        let values = list
            .split(',')
            .filter(|v| !v.trim().is_empty())
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad value `{v}` for `{key}`"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { key, values })
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub conditions: Option<ConditionReport>,
    pub report: Option<ExtremaReport>,
    pub error: Option<String>,
}

impl SweepRow {
    /// Conditions hold, so ordering is asserted for this row.
    pub fn eligible(&self) -> bool {
        self.conditions
            .as_ref()
            .is_some_and(ConditionReport::all_ok)
    }

    pub fn verified(&self) -> bool {
        self.report.as_ref().is_some_and(ExtremaReport::verified)
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub keys: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn eligible(&self) -> usize {
        self.rows.iter().filter(|r| r.eligible()).count()
    }

    pub fn passing(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.eligible() && r.verified())
            .count()
    }

    pub fn exit_code(&self) -> u8 {
        if self.passing() == self.eligible() {
            EXIT_OK
        } else {
            EXIT_VERIFY
        }
    }

    pub fn pass_rate_line(&self) -> String {
        format!(
            "pass rate: {}/{} rows with passing conditions verified ({} rows total)",
            self.passing(),
            self.eligible(),
            self.rows.len()
        )
    }

    pub fn to_csv(&self) -> String {
        let mut header: Vec<String> = self.keys.clone();
        header.extend(
            [
                "sigma_ok",
                "c1_ok",
                "c2_ok",
                "c3_ok",
                "e_ok",
                "e_value",
                "t1",
                "tv",
                "tv_count",
                "tm",
                "tstar",
                "ordering",
                "margins_ok",
                "error",
            ]
            .map(String::from),
        );
        let mut out = header.join(",");
        out.push('\n');
        let root = |r: Root| r.time().map_or("NaN".to_string(), fmt_num);
        for row in &self.rows {
            let mut cells: Vec<String> = row.values.iter().map(|&v| fmt_num(v)).collect();
            match (&row.conditions, &row.report) {
                (Some(c), Some(r)) => {
                    cells.extend([
                        c.sigma_ok.to_string(),
                        c.c1_ok.to_string(),
                        c.c2_ok.to_string(),
                        c.c3_ok.to_string(),
                        c.e_ok.map_or("na".into(), |b| b.to_string()),
                        c.e_value.map_or("NaN".into(), fmt_num),
                        root(r.t1),
                        root(r.tv),
                        r.tv_count.to_string(),
                        root(r.tm),
                        root(r.tstar),
                        if c.all_ok() {
                            r.ordering_ok.to_string()
                        } else {
                            "na".into()
                        },
                        r.margins_ok.to_string(),
                        String::new(),
                    ]);
                }
                _ => {
                    cells.extend(std::iter::repeat_n("na".to_string(), 13));
                    let err = row.error.clone().unwrap_or_default();
                    cells.push(format!("\"{}\"", err.replace('"', "'")));
                }
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn sweep_row(base: &ScenarioConfig, keys: &[String], values: &[f64]) -> SweepRow {
    let analysed = (|| {
        let mut cfg = base.clone();
        for (k, &v) in keys.iter().zip(values) {
            cfg.set(k, v)?;
        }
        let s = build_valid(&cfg)?;
        let curves = solve_curves(&s)?;
        Ok::<_, RunError>(locate_extrema(&s, &curves))
    })();
    match analysed {
        Ok(report) => SweepRow {
            values: values.to_vec(),
            conditions: Some(report.conditions.clone()),
            report: Some(report),
            error: None,
        },
        Err(e) => SweepRow {
            values: values.to_vec(),
            conditions: None,
            report: None,
            error: Some(e.to_string()),
        },
    }
}

/// Analytic extrema for every point of the Cartesian product of `axes`
/// (first axis slowest). Rows are evaluated in parallel and kept in grid
/// order; a failing row records its error and the sweep continues.
pub fn sweep(config_path: &Path, axes: &[GridAxis]) -> Result<SweepReport, RunError> {
    use rayon::prelude::*;
    let cfg = load_config(config_path, &RunOptions::default())?;
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(RunError::Grid("sweep grid is empty".into()));
    }
    let keys: Vec<String> = axes.iter().map(|a| a.key.clone()).collect();
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    let rows = points
        .par_iter()
        .map(|p| sweep_row(&cfg, &keys, p))
        .collect();
    Ok(SweepReport { keys, rows })
}

/// Runs [`sweep`] and writes `sweep.csv` into `out_dir`.
pub fn sweep_to_dir(
    config_path: &Path,
    axes: &[GridAxis],
    out_dir: &Path,
) -> Result<SweepReport, RunError> {
    let report = sweep(config_path, axes)?;
    let mut writer = Writer::new(out_dir)?;
    writer.write("sweep.csv", &report.to_csv())?;
    Ok(report)
}
