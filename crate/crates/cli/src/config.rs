//! Run configuration: structured TOML with nested sections.

use serde::{Deserialize, Serialize};

/// Errors raised while loading or validating a configuration.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config field `{field}`: {problem}")]
    Invalid { field: &'static str, problem: String },
}

fn invalid(field: &'static str, problem: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, problem: problem.into() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub environment: EnvironmentConfig,
    pub model: ModelConfig,
    pub initial: InitialConfig,
    pub run: RunSection,
    #[serde(default)]
    pub rates: RatesConfig,
    #[serde(default)]
    pub mh: MhConfig,
    #[serde(default)]
    pub observables: Vec<ObservableConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    /// "hard_sphere" (ħ = M = kT = n = 1) or "gaussian" (ħ = m = kT = n = 1);
    /// omit to give explicit values.
    #[serde(default)]
    pub preset: Option<String>,
    /// Mass ratio M/m for the presets.
    #[serde(default)]
    pub mass_ratio: Option<f64>,
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default, rename = "M")]
    pub m_test: Option<f64>,
    #[serde(default)]
    pub kt: Option<f64>,
    #[serde(default)]
    pub n_gas: Option<f64>,
    #[serde(default)]
    pub hbar: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// "hard_sphere" | "gaussian_exact" | "gaussian_born"
    pub kind: String,
    #[serde(default = "default_one")]
    pub radius: f64,
    #[serde(default = "default_one")]
    pub v0: f64,
    #[serde(default = "default_one")]
    pub d: f64,
    #[serde(default = "default_l_max")]
    pub l_max: usize,
    #[serde(default = "default_p_min")]
    pub p_min: f64,
    #[serde(default = "default_p_max")]
    pub p_max: f64,
    #[serde(default = "default_n_p")]
    pub n_p: usize,
}

fn default_one() -> f64 {
    1.0
}
fn default_l_max() -> usize {
    30
}
fn default_p_min() -> f64 {
    0.05
}
fn default_p_max() -> f64 {
    25.0
}
fn default_n_p() -> usize {
    120
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// "eigenstate" | "two_eigenstate" | "gaussian_packet" | "double_gaussian"
    /// | "counter_propagating" | "ladder" | "explicit"
    pub kind: String,
    /// Momentum (dimensionless U) of eigenstate constructors; two_eigenstate
    /// uses ±u0.
    #[serde(default)]
    pub u0: Option<[f64; 3]>,
    /// Branch count for packet constructors.
    #[serde(default)]
    pub n: Option<usize>,
    /// Packet center in Λ_th units (double_gaussian uses ±center_s).
    #[serde(default)]
    pub center_s: Option<f64>,
    /// Packet width (standard deviation) in Λ_th units.
    #[serde(default)]
    pub sigma_s: Option<f64>,
    /// Packet momentum center (x component of U) for gaussian_packet.
    #[serde(default)]
    pub u_center: Option<f64>,
    /// counter_propagating: λ_dB / Λ_th.
    #[serde(default)]
    pub lambda_db_over_lambda_th: Option<f64>,
    /// counter_propagating: |⟨S_dB⟩| (packets start at ∓ this).
    #[serde(default)]
    pub s_db: Option<f64>,
    /// counter_propagating: |⟨U_dB⟩| (packets move at ± this).
    #[serde(default)]
    pub u_db: Option<f64>,
    /// counter_propagating: σ/λ_dB.
    #[serde(default)]
    pub sigma_over_lambda_db: Option<f64>,
    /// explicit: list of branches.
    #[serde(default)]
    pub branches: Vec<BranchConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    pub u: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub trajectories: usize,
    /// Reference trajectory count used by the original study, kept with the
    /// preset for provenance.
    #[serde(default)]
    pub trajectories_paper: Option<usize>,
    pub t_final: f64,
    /// Explicit snapshot times; empty with n_snapshots set means a uniform
    /// grid over [0, t_final].
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default)]
    pub n_snapshots: Option<usize>,
    pub seed: u64,
    /// 0 = all available cores.
    #[serde(default)]
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub u_max: f64,
    pub n_grid: usize,
    pub n_samples: usize,
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self { u_max: 8.0, n_grid: 24, n_samples: 20_000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MhConfig {
    pub burn_in: usize,
    pub thinning: usize,
}

impl Default for MhConfig {
    fn default() -> Self {
        Self { burn_in: 200, thinning: 50 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    /// "coherence" | "mean_square_momentum" | "density_diagonal" |
    /// "density_matrix" | "off_diagonal" | "spatial_variance" | "visibility"
    pub kind: String,
    #[serde(default)]
    pub s_min: Option<f64>,
    #[serde(default)]
    pub s_max: Option<f64>,
    #[serde(default)]
    pub n_points: Option<usize>,
    /// Off-diagonal probe points (Λ_th units).
    #[serde(default)]
    pub s1: Option<f64>,
    #[serde(default)]
    pub s2: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    /// Cache directory for phase and rate tables; defaults to `<dir>/cache`.
    #[serde(default)]
    pub cache_dir: Option<String>,
    /// Write a per-trajectory jump log (time, |K|, branch).
    #[serde(default)]
    pub event_log: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into(), cache_dir: None, event_log: false }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// The snapshot times: explicit list, or a uniform grid when only a count
    /// is given (always includes t = 0 and t_final).
    pub fn snapshot_times(&self) -> Vec<f64> {
        if !self.run.snapshots.is_empty() {
            return self.run.snapshots.clone();
        }
        let n = self.run.n_snapshots.unwrap_or(11).max(2);
        (0..n).map(|i| self.run.t_final * i as f64 / (n - 1) as f64).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.run.trajectories < 1 {
            return Err(invalid("run.trajectories", "must be at least 1"));
        }
        if !(self.run.t_final > 0.0) {
            return Err(invalid("run.t_final", "must be positive"));
        }
        let snaps = &self.run.snapshots;
        if snaps.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("run.snapshots", "must be sorted"));
        }
        if snaps.iter().any(|&t| t < 0.0 || t > self.run.t_final) {
            return Err(invalid("run.snapshots", "must lie within [0, t_final]"));
        }
        match self.model.kind.as_str() {
            "hard_sphere" | "gaussian_exact" | "gaussian_born" => {}
            other => {
                return Err(invalid("model.kind", format!("unknown model `{other}`")));
            }
        }
        match self.initial.kind.as_str() {
            "eigenstate" | "two_eigenstate" => {
                if self.initial.u0.is_none() {
                    return Err(invalid("initial.u0", "eigenstate constructors need u0"));
                }
            }
            "gaussian_packet" | "double_gaussian" => {
                for (name, v) in [
                    ("initial.n", self.initial.n.map(|v| v as f64)),
                    ("initial.sigma_s", self.initial.sigma_s),
                ] {
                    if v.is_none() {
                        return Err(invalid("initial", format!("{name} is required")));
                    }
                }
                if !(self.initial.sigma_s.unwrap() > 0.0) {
                    return Err(invalid("initial.sigma_s", "width must be positive"));
                }
                if self.initial.n.unwrap() < 1 {
                    return Err(invalid("initial.n", "need at least one branch"));
                }
            }
            "counter_propagating" => {
                for (name, v) in [
                    ("lambda_db_over_lambda_th", self.initial.lambda_db_over_lambda_th),
                    ("s_db", self.initial.s_db),
                    ("u_db", self.initial.u_db),
                    ("sigma_over_lambda_db", self.initial.sigma_over_lambda_db),
                ] {
                    if v.is_none() {
                        return Err(invalid("initial", format!("{name} is required")));
                    }
                }
                if self.initial.n.is_none() {
                    return Err(invalid("initial.n", "branch count is required"));
                }
            }
            "ladder" => {
                if self.initial.n.is_none() {
                    return Err(invalid("initial.n", "ladder needs a branch count"));
                }
            }
            "explicit" => {
                if self.initial.branches.is_empty() {
                    return Err(invalid("initial.branches", "explicit state needs branches"));
                }
            }
            other => {
                return Err(invalid("initial.kind", format!("unknown constructor `{other}`")));
            }
        }
        for obs in &self.observables {
            match obs.kind.as_str() {
                "coherence" | "mean_square_momentum" => {}
                "density_diagonal" | "density_matrix" | "spatial_variance" | "visibility" => {
                    if obs.s_min.is_none() || obs.s_max.is_none() || obs.n_points.is_none() {
                        return Err(invalid(
                            "observables",
                            format!("`{}` needs s_min, s_max, n_points", obs.kind),
                        ));
                    }
                    if obs.n_points.unwrap() < 8 {
                        return Err(invalid("observables.n_points", "need at least 8 points"));
                    }
                }
                "off_diagonal" => {
                    if obs.s1.is_none() || obs.s2.is_none() {
                        return Err(invalid("observables", "`off_diagonal` needs s1 and s2"));
                    }
                }
                other => {
                    return Err(invalid(
                        "observables.kind",
                        format!("unknown observable `{other}`"),
                    ));
                }
            }
        }
        Ok(())
    }
}
