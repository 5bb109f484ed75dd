//! Experiment configuration: one TOML file per scenario.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use poreflow_core::full_model::{FullModelParams, Voltage};
use poreflow_core::ModelParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("override `{0}` is not of the form section.key=value")]
    Override(String),
    #[error("unknown scenario `{0}`")]
    Scenario(String),
    #[error(transparent)]
    Model(#[from] poreflow_core::ParamError),
    #[error("{0}")]
    Hypothesis(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SelfsimilarAudit,
    HyperbolicStability,
    ParabolicStability,
    VolterraVsSim,
    BarrierAudit,
    XyLemma,
    FullReduction,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::SelfsimilarAudit,
        Scenario::HyperbolicStability,
        Scenario::ParabolicStability,
        Scenario::VolterraVsSim,
        Scenario::BarrierAudit,
        Scenario::XyLemma,
        Scenario::FullReduction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SelfsimilarAudit => "selfsimilar-audit",
            Scenario::HyperbolicStability => "hyperbolic-stability",
            Scenario::ParabolicStability => "parabolic-stability",
            Scenario::VolterraVsSim => "volterra-vs-sim",
            Scenario::BarrierAudit => "barrier-audit",
            Scenario::XyLemma => "xy-lemma",
            Scenario::FullReduction => "full-reduction",
        }
    }

    fn is_hyperbolic(self) -> bool {
        matches!(self, Scenario::HyperbolicStability | Scenario::VolterraVsSim)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| ConfigError::Scenario(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub beta: f64,
    pub mu: f64,
    pub gamma: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { beta: 3.0, mu: 1.0, gamma: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSection {
    pub epsilon: f64,
    pub c0: f64,
    pub tau0: f64,
    /// Amplitude of the fast part Ĝ0.
    pub hat_amplitude: f64,
    /// Replace the seeded modulation of G0 by the constant `w`.
    pub constant_w: Option<f64>,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self { epsilon: 1.0, c0: 0.01, tau0: 100f64.ln(), hat_amplitude: 0.4, constant_w: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSection {
    /// Length of the run in τ.
    pub span: f64,
    /// Relative time step `dt/t`.
    pub step_fraction: f64,
    /// Step in τ of the Volterra solver.
    pub volterra_step: f64,
    /// First cell width of the geometric x grid.
    pub h0: f64,
    /// Geometric growth of the x grid.
    pub ratio: f64,
    /// Truncation; the default depends on the run length.
    pub x_max: Option<f64>,
    /// Self-similar snapshots are written every `snapshot_every` in τ.
    pub snapshot_every: f64,
    /// Profiles are compared on `y ∈ [0, y_max]`.
    pub y_max: f64,
    /// Decay rates are fitted on `τ − τ0 ∈ [fit_start, span]`.
    pub fit_start: f64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        Self { span: 10.0, step_fraction: 0.01, volterra_step: 0.01, h0: 0.02, ratio: 1.02, x_max: None, snapshot_every: 0.5, y_max: 10.0, fit_start: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarrierSection {
    pub lambda: f64,
    /// Final time as a multiple of `t0`.
    pub t_ratio: f64,
    pub samples: usize,
}

impl Default for BarrierSection {
    fn default() -> Self {
        Self { lambda: 1.75, t_ratio: 100.0, samples: 41 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct XySection {
    pub eta: f64,
    /// `Δ1 = fraction · γ³(1−γ−η)/16 · sin(3τ)`.
    pub delta1_fraction: f64,
    pub delta2_amplitude: f64,
    pub delta2_rate: f64,
    pub step: f64,
    pub span: f64,
    pub fit_start: f64,
}

impl Default for XySection {
    fn default() -> Self {
        Self { eta: 0.2, delta1_fraction: 0.9, delta2_amplitude: 0.1, delta2_rate: 0.2, step: 0.01, span: 60.0, fit_start: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FullSection {
    pub d: f64,
    pub a0: f64,
    pub sigma_l: f64,
    pub sigma_c: f64,
    pub s_m: f64,
    pub c_m: f64,
    pub c_tilde: f64,
    pub l: f64,
    /// Constant external voltages, one run each.
    pub v_ext: Vec<f64>,
    pub e_star: f64,
    pub e0: f64,
    pub r_star: f64,
    pub r0: f64,
    pub source: f64,
    pub interior_cells: usize,
    pub span: f64,
    pub dt: f64,
    pub interior_times: f64,
    pub reduced_end: f64,
    pub perturbation: f64,
}

impl Default for FullSection {
    fn default() -> Self {
        let p = FullModelParams::reference();
        let r = poreflow_core::full_model::ReductionConfig::default();
        Self {
            d: p.d,
            a0: p.a0,
            sigma_l: p.sigma_l,
            sigma_c: p.sigma_c,
            s_m: p.s_m,
            c_m: p.c_m,
            c_tilde: p.c_tilde,
            l: p.l,
            v_ext: vec![0.0, 1.0],
            e_star: p.e_star,
            e0: p.e0,
            r_star: p.r_star,
            r0: p.r0,
            source: p.source,
            interior_cells: r.interior_cells,
            span: r.span,
            dt: r.dt,
            interior_times: r.interior_times,
            reduced_end: r.reduced_end,
            perturbation: r.perturbation,
        }
    }
}

impl FullSection {
    pub fn params(&self, v_ext: f64) -> FullModelParams {
        FullModelParams {
            d: self.d,
            a0: self.a0,
            sigma_l: self.sigma_l,
            sigma_c: self.sigma_c,
            s_m: self.s_m,
            c_m: self.c_m,
            c_tilde: self.c_tilde,
            l: self.l,
            v_ext: Voltage::constant(v_ext),
            e_star: self.e_star,
            e0: self.e0,
            r_star: self.r_star,
            r0: self.r0,
            source: self.source,
        }
    }

    pub fn reduction(&self) -> poreflow_core::full_model::ReductionConfig {
        poreflow_core::full_model::ReductionConfig {
            interior_cells: self.interior_cells,
            span: self.span,
            dt: self.dt,
            interior_times: self.interior_times,
            reduced_end: self.reduced_end,
            perturbation: self.perturbation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub barrier: BarrierSection,
    #[serde(default)]
    pub xy: XySection,
    #[serde(default)]
    pub full: FullSection,
}

impl ExperimentConfig {
    /// Defaults for a scenario.
    pub fn new(scenario: Scenario) -> Self {
        let mut cfg = Self {
            scenario,
            seed: 0,
            model: ModelSection::default(),
            perturbation: PerturbationSection::default(),
            numerics: NumericsSection::default(),
            barrier: BarrierSection::default(),
            xy: XySection::default(),
            full: FullSection::default(),
        };
        match scenario {
            Scenario::VolterraVsSim => cfg.numerics.span = 5.0,
            Scenario::HyperbolicStability => cfg.numerics.step_fraction = 0.02,
            // Second-order in the stretching; 1.02 leaves a 7e-4 bias in N_G at the end.
            Scenario::ParabolicStability => cfg.numerics.ratio = 1.005,
            _ => {}
        }
        cfg
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path` and applies `overrides` of the form `section.key=value`.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        let mut value: toml::Table = toml::from_str(&text)?;
        apply_overrides(&mut value, overrides)?;
        Ok(toml::Value::Table(value).try_into()?)
    }

    /// Defaults for `scenario` with `overrides` applied.
    pub fn with_overrides(scenario: Scenario, overrides: &[String]) -> Result<Self, ConfigError> {
        let base = toml::to_string(&Self::new(scenario)).expect("config serializes");
        let mut value: toml::Table = toml::from_str(&base)?;
        apply_overrides(&mut value, overrides)?;
        Ok(toml::Value::Table(value).try_into()?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn model_params(&self) -> Result<ModelParams, ConfigError> {
        Ok(ModelParams::new(self.model.beta, self.model.mu, self.model.gamma)?)
    }

    /// Checks the stability hypotheses a run relies on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let params = self.model_params()?;
        let gamma = params.gamma();
        let p = &self.perturbation;
        let fail = |msg: String| Err(ConfigError::Hypothesis(msg));
        if matches!(self.scenario, Scenario::HyperbolicStability | Scenario::ParabolicStability | Scenario::VolterraVsSim | Scenario::BarrierAudit)
            && !(gamma > 0.0 && gamma < 0.5)
        {
            return fail(format!("gamma = {gamma} must lie in (0, 1/2) for the stability scenarios"));
        }
        if self.scenario.is_hyperbolic() {
            let upper = (1.0 - gamma) / gamma;
            if !(p.epsilon > 0.0 && p.epsilon < upper) {
                return fail(format!("epsilon = {} violates epsilon in (0, (1-gamma)/gamma) = (0, {upper})", p.epsilon));
            }
        }
        if self.scenario == Scenario::ParabolicStability {
            let upper = 1.0 / (2.0 * gamma);
            if !(p.epsilon > 0.0 && p.epsilon <= upper) {
                return fail(format!("epsilon = {} violates epsilon in (0, 1/(2 gamma)] = (0, {upper}]", p.epsilon));
            }
        }
        if matches!(self.scenario, Scenario::HyperbolicStability | Scenario::ParabolicStability | Scenario::VolterraVsSim) {
            if !(p.c0 > 0.0) {
                return fail(format!("c0 = {} violates c0 > 0", p.c0));
            }
            if !(p.tau0 >= 0.0) {
                return fail(format!("tau0 = {} must be nonnegative (t0 >= 1)", p.tau0));
            }
        }
        let n = &self.numerics;
        if !(n.span > 0.0 && n.step_fraction > 0.0 && n.h0 > 0.0 && n.ratio >= 1.0 && n.y_max > 0.0 && n.snapshot_every > 0.0) {
            return fail("numerics: span, step_fraction, h0, y_max, snapshot_every must be positive and ratio >= 1".into());
        }
        if !(n.volterra_step > 0.0 && n.volterra_step <= 0.05) {
            return fail(format!("numerics.volterra_step = {} must lie in (0, 0.05]", n.volterra_step));
        }
        if self.scenario == Scenario::XyLemma {
            let x = &self.xy;
            if !(x.eta > 0.0 && x.eta < 1.0 - gamma) {
                return fail(format!("xy.eta = {} must lie in (0, 1 - gamma)", x.eta));
            }
            if !(x.delta1_fraction.abs() <= 1.0) {
                return fail(format!("xy.delta1_fraction = {} exceeds the admissible bound", x.delta1_fraction));
            }
        }
        if self.scenario == Scenario::FullReduction {
            for &v in &self.full.v_ext {
                self.full.params(v).validate().map_err(|e| ConfigError::Hypothesis(format!("full model: {e}")))?;
            }
        }
        Ok(())
    }
}

fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<(), ConfigError> {
    for item in overrides {
        let (key, raw) = item.split_once('=').ok_or_else(|| ConfigError::Override(item.clone()))?;
        let path: Vec<&str> = key.trim().split('.').collect();
        let raw = raw.trim();
        // Bare words are strings; everything else is parsed as a TOML value.
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let (last, parents) = path.split_last().ok_or_else(|| ConfigError::Override(item.clone()))?;
        let mut cursor = &mut *table;
        for part in parents {
            cursor = cursor
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| ConfigError::Override(item.clone()))?;
        }
        cursor.insert(last.to_string(), value);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for s in Scenario::ALL {
            let cfg = ExperimentConfig::new(s);
            let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
            assert_eq!(cfg, back);
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn rejects_epsilon_outside_bounds() {
        let mut cfg = ExperimentConfig::new(Scenario::HyperbolicStability);
        cfg.perturbation.epsilon = 3.0;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("(1-gamma)/gamma"), "{err}");
        let mut cfg = ExperimentConfig::new(Scenario::ParabolicStability);
        cfg.perturbation.epsilon = 2.5;
        assert!(cfg.validate().unwrap_err().to_string().contains("1/(2 gamma)"));
        cfg.perturbation.epsilon = 2.0;
        cfg.validate().unwrap();
        cfg.perturbation.c0 = 0.0;
        assert!(cfg.validate().unwrap_err().to_string().contains("c0 > 0"));
    }

    #[test]
    fn overrides() {
        let cfg = ExperimentConfig::with_overrides(Scenario::XyLemma, &["xy.eta=0.3".into(), "seed=7".into(), "model.gamma=0.1".into()]).unwrap();
        assert_eq!(cfg.xy.eta, 0.3);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.model.gamma, 0.1);
        let cfg = ExperimentConfig::with_overrides(Scenario::XyLemma, &["scenario=full-reduction".into()]).unwrap();
        assert_eq!(cfg.scenario, Scenario::FullReduction);
        assert!(ExperimentConfig::with_overrides(Scenario::XyLemma, &["nonsense".into()]).is_err());
        assert!(ExperimentConfig::with_overrides(Scenario::XyLemma, &["model.bogus=1".into()]).is_err());
    }
}
