//! Experiment configuration files (TOML). See `configs/` for one file per
//! built-in experiment and the README for the full schema.

use std::path::{Path, PathBuf};

use burgerlab_core::kpz::NU_FLOOR;
use burgerlab_core::{ExponentTriple, FlowConfig, Interpolation, InitialIterate, PicardConfig, TorusGrid};
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{CliError, Result};
use crate::spec::FieldSpec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Picard,
    #[default]
    Ifrk4,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub d: usize,
    pub n: usize,
    #[serde(rename = "L", default = "default_length")]
    pub length: f64,
}

fn default_length() -> f64 {
    std::f64::consts::TAU
}

/// Overrides of the Picard defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialIterate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    /// Lower cutoff; defaults to five solver steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub dt: f64,
    pub n_paths: usize,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub interpolation: Interpolation,
}

fn default_points() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemigroupSpec {
    /// `(m, p, q)` triples.
    pub triples: Vec<(u32, f64, f64)>,
    #[serde(default = "default_slope_tol")]
    pub slope_tol: f64,
}

fn default_slope_tol() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KpzSpec {
    pub nus: Vec<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_lambda() -> f64 {
    1.0
}

/// Tolerances of the solver cross-checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSpec {
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,
    #[serde(default = "default_agreement_tol")]
    pub agreement_tol: f64,
}

fn default_oracle_tol() -> f64 {
    1e-6
}

fn default_agreement_tol() -> f64 {
    1e-7
}

impl Default for ChecksSpec {
    fn default() -> Self {
        Self {
            oracle_tol: default_oracle_tol(),
            agreement_tol: default_agreement_tol(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(rename = "T", default = "default_t")]
    pub t_end: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub solver: SolverChoice,
    /// Reference time of the energy inequality; defaults to the first positive grid time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    pub initial: FieldSpec,
    #[serde(default = "default_force")]
    pub force: FieldSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub grid: GridSpec,
    #[serde(default)]
    pub checks: ChecksSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard: Option<PicardSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semigroup: Option<SemigroupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kpz: Option<KpzSpec>,
}

fn default_nu() -> f64 {
    0.1
}

fn default_t() -> f64 {
    0.2
}

fn default_steps() -> usize {
    200
}

fn default_p() -> f64 {
    2.0
}

fn default_force() -> FieldSpec {
    FieldSpec::Zero
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path`, resolving `file(...)` specs and `out` against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        cfg.initial.resolve(base);
        cfg.force.resolve(base);
        if let Some(out) = &cfg.out {
            if out.is_relative() {
                cfg.out = Some(base.join(out));
            }
        }
        Ok(cfg)
    }

    /// A built-in experiment name or a path to a config file.
    pub fn load_or_builtin(arg: &str) -> Result<Self> {
        let path = Path::new(arg);
        if !path.exists() {
            if let Some(text) = catalog::builtin_config(arg) {
                return Self::from_toml(text);
            }
        }
        Self::load(path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn grid(&self) -> std::result::Result<TorusGrid, String> {
        TorusGrid::with_length(self.grid.d, self.grid.n, self.grid.length).map_err(|e| e.to_string())
    }

    /// Components of the initial field and force.
    pub fn components(&self) -> usize {
        match self.experiment.as_str() {
            "semigroup-rates" | "kpz-sweep" => 1,
            _ => self.grid.d,
        }
    }

    pub fn picard_config(&self) -> PicardConfig {
        let mut pc = PicardConfig::new(self.grid.d, self.p, self.nu, self.t_end, self.steps);
        if let Some(o) = &self.picard {
            pc.max_iter = o.max_iter.unwrap_or(pc.max_iter);
            pc.tol = o.tol.unwrap_or(pc.tol);
            pc.t_min = o.t_min.unwrap_or(pc.t_min);
            pc.initial = o.initial.unwrap_or(pc.initial);
        }
        pc
    }

    pub fn flow_config(&self) -> Option<FlowConfig> {
        let mc = self.mc.as_ref()?;
        let delta = mc.delta.unwrap_or(5.0 * self.t_end / self.steps.max(1) as f64);
        Some(
            FlowConfig::new(self.nu, self.t_end, delta, mc.dt, mc.n_paths, self.seed)
                .with_interpolation(mc.interpolation),
        )
    }

    pub fn reference_time(&self) -> f64 {
        self.t0.unwrap_or(self.t_end / self.steps.max(1) as f64)
    }

    pub fn uses_picard(&self) -> bool {
        matches!(self.solver, SolverChoice::Picard | SolverChoice::Both)
            || matches!(self.experiment.as_str(), "picard-vs-ifrk4")
    }

    /// Every violated constraint; empty when the config can run.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if catalog::find(&self.experiment).is_none() {
            v.push(format!(
                "unknown experiment '{}' (see `burgerlab list`)",
                self.experiment
            ));
        }
        let grid = match self.grid() {
            Ok(g) => Some(g),
            Err(e) => {
                v.push(e);
                None
            }
        };
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            v.push(format!("nu must be positive (got {})", self.nu));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            v.push(format!("T must be positive (got {})", self.t_end));
        }
        if self.steps == 0 {
            v.push("steps must be ≥ 1".into());
        }
        if let Some(t0) = self.t0 {
            if !(t0 >= 0.0 && t0 < self.t_end) {
                v.push(format!("t0 must lie in [0, T) (got {t0})"));
            }
        }
        let comps = self.components();
        v.extend(self.initial.violations(grid.as_ref(), comps, "initial"));
        v.extend(self.force.violations(grid.as_ref(), comps, "force"));
        if self.uses_picard() {
            v.extend(
                self.picard_config()
                    .violations(self.grid.d)
                    .into_iter()
                    .map(|s| format!("picard: {s}")),
            );
        }
        if !(self.checks.oracle_tol > 0.0 && self.checks.agreement_tol > 0.0) {
            v.push("checks: tolerances must be positive".into());
        }
        match self.experiment.as_str() {
            "colehopf-1d" => {
                if !matches!(self.initial, FieldSpec::NegSine { .. }) {
                    v.push("colehopf-1d: initial must be neg-sine(A, m)".into());
                }
                if self.force != FieldSpec::Zero {
                    v.push("colehopf-1d: force must be zero".into());
                }
            }
            "fk-validate" => match self.flow_config() {
                None => v.push("fk-validate: missing [mc] section".into()),
                Some(fc) => {
                    v.extend(fc.violations().into_iter().map(|s| format!("mc: {s}")));
                    if self.mc.as_ref().is_some_and(|m| m.points == 0) {
                        v.push("mc: points must be ≥ 1".into());
                    }
                }
            },
            "bkm-certify" => {
                if !(self.p >= 2.0) {
                    v.push(format!("bkm-certify: p must be ≥ 2 (got {})", self.p));
                }
            }
            "semigroup-rates" => match &self.semigroup {
                None => v.push("semigroup-rates: missing [semigroup] section".into()),
                Some(s) => {
                    if s.triples.is_empty() {
                        v.push("semigroup: triples must not be empty".into());
                    }
                    for &(m, p, q) in &s.triples {
                        if let Err(e) = (ExponentTriple::Lebesgue { m, p, q }).validate() {
                            v.push(format!("semigroup: {e}"));
                        }
                    }
                    if !(s.slope_tol > 0.0) {
                        v.push("semigroup: slope_tol must be positive".into());
                    }
                }
            },
            "kpz-sweep" => match &self.kpz {
                None => v.push("kpz-sweep: missing [kpz] section".into()),
                Some(k) => {
                    if k.nus.len() < 2 {
                        v.push("kpz: need at least two viscosities".into());
                    }
                    if !k.nus.windows(2).all(|w| w[1] < w[0]) {
                        v.push("kpz: nus must be strictly decreasing".into());
                    }
                    if k.nus.iter().any(|&nu| !(nu >= NU_FLOOR)) {
                        v.push(format!("kpz: every nu must be ≥ {NU_FLOOR}"));
                    }
                    if !(k.lambda > 0.0) {
                        v.push("kpz: lambda must be positive".into());
                    }
                    if !(self.p > self.grid.d as f64) {
                        v.push(format!("kpz-sweep: p must exceed d = {} (got {})", self.grid.d, self.p));
                    }
                }
            },
            _ => {}
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(v))
        }
    }

    /// Every seed that influences the run.
    pub fn seeds(&self) -> Vec<u64> {
        let mut s = vec![self.seed];
        s.extend(self.initial.seed());
        s.extend(self.force.seed());
        s
    }
}
