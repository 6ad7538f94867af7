//! Experiment configuration: defaults, TOML round-trip, `--set` overrides,
//! validation, and the policy hash that guards merges.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GsSweep,
    QuenchSweep,
    IonSim,
    NoisyQuench,
    Collapse,
    CompileLasers,
    Adiabaticity,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::GsSweep => "gs-sweep",
            ExperimentKind::QuenchSweep => "quench-sweep",
            ExperimentKind::IonSim => "ion-sim",
            ExperimentKind::NoisyQuench => "noisy-quench",
            ExperimentKind::Collapse => "collapse",
            ExperimentKind::CompileLasers => "compile-lasers",
            ExperimentKind::Adiabaticity => "adiabaticity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "gs-sweep" => ExperimentKind::GsSweep,
            "quench-sweep" => ExperimentKind::QuenchSweep,
            "ion-sim" => ExperimentKind::IonSim,
            "noisy-quench" => ExperimentKind::NoisyQuench,
            "collapse" => ExperimentKind::Collapse,
            "compile-lasers" => ExperimentKind::CompileLasers,
            "adiabaticity" => ExperimentKind::Adiabaticity,
            _ => return None,
        })
    }
}

/// How frequency values given in Hz relate to angular frequencies, and how
/// `tau_q` values (given in units of `1/omega0_eff`) convert to seconds:
/// `plain-hz` reads `50` as `50 / f0`, `angular` as `50 / (2 pi f0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyConvention {
    PlainHz,
    Angular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryChoice {
    Traveling,
    Standing,
}

impl GeometryChoice {
    pub fn to_core(self) -> qpt_core::models::LaserGeometry {
        match self {
            GeometryChoice::Traveling => qpt_core::models::LaserGeometry::Traveling,
            GeometryChoice::Standing => qpt_core::models::LaserGeometry::Standing,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeometryChoice::Traveling => "traveling",
            GeometryChoice::Standing => "standing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Dephasing rate, in units of omega0.
    pub gamma_dp: f64,
    /// Atomic decay rate.
    pub gamma_c: f64,
    /// Phonon loss rate.
    pub gamma_a: f64,
    /// Phonon heating rate.
    pub gamma_h: f64,
}

impl NoiseConfig {
    pub fn is_zero(&self) -> bool {
        self.gamma_dp == 0.0 && self.gamma_c == 0.0 && self.gamma_a == 0.0 && self.gamma_h == 0.0
    }

    /// Rates in angular units for a given omega0.
    pub fn to_rates(&self, omega0: f64) -> qpt_core::evolve::NoiseRates {
        qpt_core::evolve::NoiseRates {
            gamma_dp: self.gamma_dp * omega0,
            gamma_c: self.gamma_c * omega0,
            gamma_a: self.gamma_a * omega0,
            gamma_h: self.gamma_h * omega0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    /// Fock cutoff seed for quench runs; 0 picks a ratio-dependent seed.
    pub cutoff_seed: usize,
    /// Fock cutoff seed for ground-state escalation.
    pub gs_cutoff_seed: usize,
    pub steps_per_period: f64,
    pub min_substeps: f64,
    /// Uniform sample intervals per run.
    pub samples: usize,
    /// Collapse spread threshold; 0 picks 2% (equilibrium) / 5% (dynamic).
    pub collapse_threshold: f64,
    pub adiabaticity_checkpoints: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            cutoff_seed: 0,
            gs_cutoff_seed: qpt_core::spectral::DEFAULT_CUTOFF_SEED,
            steps_per_period: 20.0,
            min_substeps: 5000.0,
            samples: 200,
            collapse_threshold: 0.0,
            adiabaticity_checkpoints: 21,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Output file stem; empty uses the kind (or preset) name.
    pub label: String,
    pub r_list: Vec<f64>,
    /// Direct final couplings `g_f` (equilibrium sweeps name them `g`).
    pub g_list: Vec<f64>,
    /// Rescaled final couplings `G_f`; each expands to a ratio-dependent
    /// `g_f = 1 - (G_f / R)^(2/3)`.
    pub g_final_list: Vec<f64>,
    /// Quench times in units of `1/omega0` (see `convention` for ion runs).
    pub tau_q_list: Vec<f64>,
    /// Oscillator frequency for Rabi-model runs (angular, dimensionless 1
    /// by default).
    pub omega0: f64,
    /// Effective oscillator frequency for ion runs, in Hz.
    pub omega0_eff_hz: f64,
    /// Trap frequency, in Hz.
    pub nu_hz: f64,
    pub eta: f64,
    /// Standing-wave Rabi-frequency imbalance.
    pub epsilon: f64,
    pub laser_geometry: GeometryChoice,
    pub noise: NoiseConfig,
    pub numerics: NumericsConfig,
    pub convention: FrequencyConvention,
    pub out_dir: String,
    /// Worker threads; 0 uses all cores. Affects wall time only.
    pub workers: usize,
    /// Reserved; all computations are deterministic and ignore it.
    pub seed: u64,
    /// Input result tables (collapse runs).
    pub inputs: Vec<String>,
    /// Use the full paper-scale grid where a preset ships a reduced one.
    pub full: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::GsSweep,
            label: String::new(),
            r_list: vec![50.0, 100.0, 200.0, 400.0],
            g_list: Vec::new(),
            g_final_list: Vec::new(),
            tau_q_list: Vec::new(),
            omega0: 1.0,
            omega0_eff_hz: 200.0,
            nu_hz: 1.0e6,
            eta: 0.06,
            epsilon: 0.08,
            laser_geometry: GeometryChoice::Standing,
            noise: NoiseConfig::default(),
            numerics: NumericsConfig::default(),
            convention: FrequencyConvention::PlainHz,
            out_dir: "out".into(),
            workers: 0,
            seed: 0,
            inputs: Vec::new(),
            full: false,
        }
    }
}

/// View of the fields that determine numerical content (not the grid);
/// hashed into every result file so `merge` can refuse incompatible inputs.
#[derive(Serialize)]
struct PolicyView<'a> {
    kind: &'a ExperimentKind,
    omega0: f64,
    omega0_eff_hz: f64,
    nu_hz: f64,
    eta: f64,
    epsilon: f64,
    laser_geometry: &'a GeometryChoice,
    noise: &'a NoiseConfig,
    numerics: &'a NumericsConfig,
    convention: &'a FrequencyConvention,
}

impl ExperimentConfig {
    pub fn effective_label(&self) -> String {
        if self.label.is_empty() {
            self.kind.name().to_string()
        } else {
            self.label.clone()
        }
    }

    /// Angular effective oscillator frequency for ion runs.
    pub fn omega0_eff_angular(&self) -> f64 {
        std::f64::consts::TAU * self.omega0_eff_hz
    }

    pub fn nu_angular(&self) -> f64 {
        std::f64::consts::TAU * self.nu_hz
    }

    /// Convert a quench time in `1/omega0_eff` units to seconds.
    pub fn ion_tau_seconds(&self, tau_x: f64) -> f64 {
        match self.convention {
            FrequencyConvention::PlainHz => tau_x / self.omega0_eff_hz,
            FrequencyConvention::Angular => tau_x / self.omega0_eff_angular(),
        }
    }

    pub fn step_policy(&self) -> qpt_core::evolve::StepPolicy {
        qpt_core::evolve::StepPolicy {
            steps_per_period: self.numerics.steps_per_period,
            min_substeps: self.numerics.min_substeps,
        }
    }

    pub fn quench_cutoff_seed(&self, r: f64) -> usize {
        if self.numerics.cutoff_seed == 0 {
            qpt_core::evolve::suggested_cutoff_seed(r)
        } else {
            self.numerics.cutoff_seed
        }
    }

    /// `g_f` for a rescaled target `G_f` at ratio `r` (approached from
    /// below).
    pub fn g_of_big_g(big_g: f64, r: f64) -> f64 {
        1.0 - (big_g / r).powf(2.0 / 3.0)
    }

    pub fn policy_hash(&self) -> String {
        let view = PolicyView {
            kind: &self.kind,
            omega0: self.omega0,
            omega0_eff_hz: self.omega0_eff_hz,
            nu_hz: self.nu_hz,
            eta: self.eta,
            epsilon: self.epsilon,
            laser_geometry: &self.laser_geometry,
            noise: &self.noise,
            numerics: &self.numerics,
            convention: &self.convention,
        };
        sha_hex(&toml::to_string(&view).expect("policy serializes"))
    }

    pub fn config_hash(&self) -> String {
        sha_hex(&self.to_toml())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    /// Apply one `key=value` override. Errors name the offending key.
    pub fn apply_set(&mut self, expr: &str) -> Result<(), String> {
        let (key, value) = expr
            .split_once('=')
            .ok_or_else(|| format!("--set '{expr}': expected key=value"))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| format!("--set {key}: {what} (got '{value}')");
        match key {
            "kind" => {
                self.kind =
                    ExperimentKind::parse(value).ok_or_else(|| bad("unknown experiment kind"))?
            }
            "label" => self.label = value.to_string(),
            "r_list" => self.r_list = parse_list(value).map_err(|e| bad(&e))?,
            "g_list" => self.g_list = parse_list(value).map_err(|e| bad(&e))?,
            "g_final_list" => self.g_final_list = parse_list(value).map_err(|e| bad(&e))?,
            "tau_q_list" => self.tau_q_list = parse_list(value).map_err(|e| bad(&e))?,
            "omega0" => self.omega0 = parse_f64(value).map_err(|e| bad(&e))?,
            "omega0_eff_hz" => self.omega0_eff_hz = parse_f64(value).map_err(|e| bad(&e))?,
            "nu_hz" => self.nu_hz = parse_f64(value).map_err(|e| bad(&e))?,
            "eta" => self.eta = parse_f64(value).map_err(|e| bad(&e))?,
            "epsilon" => self.epsilon = parse_f64(value).map_err(|e| bad(&e))?,
            "laser_geometry" | "laser_kind" => {
                self.laser_geometry = match value {
                    "traveling" => GeometryChoice::Traveling,
                    "standing" => GeometryChoice::Standing,
                    _ => return Err(bad("expected traveling|standing")),
                }
            }
            "gamma_dp" => self.noise.gamma_dp = parse_f64(value).map_err(|e| bad(&e))?,
            "gamma_c" => self.noise.gamma_c = parse_f64(value).map_err(|e| bad(&e))?,
            "gamma_a" => self.noise.gamma_a = parse_f64(value).map_err(|e| bad(&e))?,
            "gamma_h" => self.noise.gamma_h = parse_f64(value).map_err(|e| bad(&e))?,
            "cutoff_seed" => self.numerics.cutoff_seed = parse_usize(value).map_err(|e| bad(&e))?,
            "gs_cutoff_seed" => {
                self.numerics.gs_cutoff_seed = parse_usize(value).map_err(|e| bad(&e))?
            }
            "steps_per_period" => {
                self.numerics.steps_per_period = parse_f64(value).map_err(|e| bad(&e))?
            }
            "min_substeps" => self.numerics.min_substeps = parse_f64(value).map_err(|e| bad(&e))?,
            "samples" => self.numerics.samples = parse_usize(value).map_err(|e| bad(&e))?,
            "collapse_threshold" => {
                self.numerics.collapse_threshold = parse_f64(value).map_err(|e| bad(&e))?
            }
            "adiabaticity_checkpoints" => {
                self.numerics.adiabaticity_checkpoints =
                    parse_usize(value).map_err(|e| bad(&e))?
            }
            "convention" => {
                self.convention = match value {
                    "plain-hz" => FrequencyConvention::PlainHz,
                    "angular" => FrequencyConvention::Angular,
                    _ => return Err(bad("expected plain-hz|angular")),
                }
            }
            "out_dir" => self.out_dir = value.to_string(),
            "workers" => self.workers = parse_usize(value).map_err(|e| bad(&e))?,
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| bad("expected an unsigned integer"))?
            }
            "inputs" => {
                self.inputs = value.split(',').map(|s| s.trim().to_string()).collect()
            }
            "full" => {
                self.full = value
                    .parse::<bool>()
                    .map_err(|_| bad("expected true|false"))?
            }
            _ => return Err(format!("--set {key}: unknown configuration key")),
        }
        Ok(())
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|_| "expected a number".into())
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse::<usize>()
        .map_err(|_| "expected an unsigned integer".into())
}

/// Comma-separated numbers, or `logspace:start:stop:n` / `linspace:start:stop:n`.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    if let Some(rest) = s.strip_prefix("logspace:") {
        let (a, b, n) = parse_range(rest)?;
        if a <= 0.0 || b <= 0.0 {
            return Err("logspace needs positive endpoints".into());
        }
        return Ok(logspace(a, b, n));
    }
    if let Some(rest) = s.strip_prefix("linspace:") {
        let (a, b, n) = parse_range(rest)?;
        return Ok((0..n)
            .map(|k| a + (b - a) * k as f64 / (n - 1).max(1) as f64)
            .collect());
    }
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad list element '{tok}'"))
        })
        .collect()
}

fn parse_range(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected start:stop:count".into());
    }
    let a = parse_f64(parts[0])?;
    let b = parse_f64(parts[1])?;
    let n = parse_usize(parts[2])?;
    if n < 2 {
        return Err("count must be at least 2".into());
    }
    Ok((a, b, n))
}

pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|k| (la + (lb - la) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

fn sha_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IssueLevel {
    Warning,
    Error,
}

#[derive(Debug, Clone)]
pub struct Issue {
    pub level: IssueLevel,
    pub message: String,
}

/// Static checks: grid shape, sign constraints, rotating-wave and
/// Lamb-Dicke margins. Pure report; `run` refuses on errors.
pub fn validate(cfg: &ExperimentConfig) -> Vec<Issue> {
    let mut issues = Vec::new();
    let error = |issues: &mut Vec<Issue>, m: String| {
        issues.push(Issue {
            level: IssueLevel::Error,
            message: m,
        })
    };
    let warn = |issues: &mut Vec<Issue>, m: String| {
        issues.push(Issue {
            level: IssueLevel::Warning,
            message: m,
        })
    };

    let needs_r = !matches!(cfg.kind, ExperimentKind::Collapse);
    if needs_r && cfg.r_list.is_empty() {
        error(&mut issues, "r_list: must not be empty".into());
    }
    for &r in &cfg.r_list {
        if r <= 1.0 {
            error(&mut issues, format!("r_list: ratio {r} must exceed 1"));
        } else if r < 50.0 {
            warn(
                &mut issues,
                format!("r_list: ratio {r} is below the asymptotic regime (R >~ 50)"),
            );
        }
    }

    match cfg.kind {
        ExperimentKind::GsSweep | ExperimentKind::CompileLasers => {
            if cfg.g_list.is_empty() {
                error(&mut issues, "g_list: must not be empty".into());
            }
        }
        ExperimentKind::QuenchSweep | ExperimentKind::NoisyQuench => {
            if cfg.g_list.is_empty() && cfg.g_final_list.is_empty() {
                error(
                    &mut issues,
                    "g_list/g_final_list: one of them must be nonempty".into(),
                );
            }
            if cfg.tau_q_list.is_empty() {
                error(&mut issues, "tau_q_list: must not be empty".into());
            }
        }
        ExperimentKind::IonSim => {
            if cfg.g_list.is_empty() && cfg.g_final_list.is_empty() {
                error(
                    &mut issues,
                    "g_list/g_final_list: one of them must be nonempty".into(),
                );
            }
            if cfg.tau_q_list.is_empty() {
                error(&mut issues, "tau_q_list: must not be empty".into());
            }
        }
        ExperimentKind::Adiabaticity => {
            if cfg.tau_q_list.is_empty() {
                error(&mut issues, "tau_q_list: must not be empty".into());
            }
        }
        ExperimentKind::Collapse => {
            if cfg.inputs.is_empty() {
                error(&mut issues, "inputs: must list at least one result table".into());
            }
        }
    }

    for &tau in &cfg.tau_q_list {
        if tau <= 0.0 {
            error(&mut issues, format!("tau_q_list: {tau} must be positive"));
        } else if tau < qpt_core::evolve::SUDDEN_QUENCH_THRESHOLD
            && matches!(
                cfg.kind,
                ExperimentKind::QuenchSweep | ExperimentKind::NoisyQuench
            )
        {
            warn(
                &mut issues,
                format!("tau_q_list: omega0*tau_q = {tau} < 0.1 will be flagged non-universal"),
            );
        }
    }

    for (name, v) in [
        ("gamma_dp", cfg.noise.gamma_dp),
        ("gamma_c", cfg.noise.gamma_c),
        ("gamma_a", cfg.noise.gamma_a),
        ("gamma_h", cfg.noise.gamma_h),
    ] {
        if v < 0.0 {
            error(&mut issues, format!("{name}: negative rate {v}"));
        }
    }
    if matches!(cfg.kind, ExperimentKind::NoisyQuench) && cfg.noise.is_zero() {
        warn(
            &mut issues,
            "noise: all rates are zero; quench-sweep covers this case".into(),
        );
    }

    if cfg.omega0 <= 0.0 {
        error(&mut issues, format!("omega0: must be positive, got {}", cfg.omega0));
    }

    let ion_like = matches!(cfg.kind, ExperimentKind::IonSim | ExperimentKind::CompileLasers);
    if ion_like {
        if cfg.eta <= 0.0 {
            error(&mut issues, format!("eta: must be positive, got {}", cfg.eta));
        } else if cfg.eta >= 0.3 {
            warn(
                &mut issues,
                format!("eta: {} is outside the Lamb-Dicke sanity bound 0.3", cfg.eta),
            );
        }
        if cfg.omega0_eff_hz <= 0.0 {
            error(&mut issues, "omega0_eff_hz: must be positive".into());
        }
        if cfg.nu_hz <= 0.0 {
            error(&mut issues, "nu_hz: must be positive".into());
        }
        if cfg.epsilon.abs() >= 1.0 {
            warn(&mut issues, format!("epsilon: |{}| >= 1 is not a small imbalance", cfg.epsilon));
        }
        let omega0_eff = cfg.omega0_eff_angular();
        let nu = cfg.nu_angular();
        for &r in &cfg.r_list {
            let delta_blue = (r + 1.0) * omega0_eff;
            if delta_blue >= nu {
                error(
                    &mut issues,
                    format!(
                        "r_list: R = {r} puts the blue detuning at {:.3e} rad/s, beyond nu = {:.3e}",
                        delta_blue, nu
                    ),
                );
            } else if delta_blue > nu / 10.0 {
                warn(
                    &mut issues,
                    format!(
                        "r_list: R = {r} puts the blue detuning at {:.3e} rad/s, above nu/10; vibrational rotating-wave margin is thin",
                        delta_blue
                    ),
                );
            }
        }
    }

    if cfg.numerics.samples < 2 {
        error(&mut issues, "samples: need at least 2".into());
    }
    if cfg.numerics.adiabaticity_checkpoints < 2 {
        error(&mut issues, "adiabaticity_checkpoints: need at least 2".into());
    }
    if cfg.numerics.steps_per_period < 1.0 || cfg.numerics.min_substeps < 1.0 {
        error(&mut issues, "steps_per_period/min_substeps: need at least 1".into());
    }

    issues
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.kind = ExperimentKind::IonSim;
        cfg.g_list = vec![0.95, 1.0];
        cfg.tau_q_list = vec![50.0];
        let text = cfg.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn set_overrides() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_set("kind=quench-sweep").unwrap();
        cfg.apply_set("r_list=50,400").unwrap();
        cfg.apply_set("tau_q_list=logspace:0.1:100:4").unwrap();
        cfg.apply_set("gamma_dp=0.1").unwrap();
        assert_eq!(cfg.kind, ExperimentKind::QuenchSweep);
        assert_eq!(cfg.r_list, vec![50.0, 400.0]);
        assert_eq!(cfg.tau_q_list.len(), 4);
        assert!((cfg.tau_q_list[3] - 100.0).abs() < 1e-9);
        assert_eq!(cfg.noise.gamma_dp, 0.1);

        let err = cfg.apply_set("no_such_key=1").unwrap_err();
        assert!(err.contains("no_such_key"));
        let err = cfg.apply_set("omega0=abc").unwrap_err();
        assert!(err.contains("omega0"));
    }

    #[test]
    fn policy_hash_ignores_the_grid_but_not_the_physics() {
        let mut a = ExperimentConfig::default();
        a.kind = ExperimentKind::GsSweep;
        let mut b = a.clone();
        b.g_list = vec![0.9, 0.95];
        assert_eq!(a.policy_hash(), b.policy_hash());
        b.eta = 0.07;
        assert_ne!(a.policy_hash(), b.policy_hash());
    }

    #[test]
    fn validation_catches_the_basics() {
        let mut cfg = ExperimentConfig::default();
        cfg.kind = ExperimentKind::GsSweep;
        cfg.r_list.clear();
        cfg.g_list = vec![0.9];
        let issues = validate(&cfg);
        assert!(issues
            .iter()
            .any(|i| i.level == IssueLevel::Error && i.message.contains("r_list")));

        let mut cfg = ExperimentConfig::default();
        cfg.kind = ExperimentKind::QuenchSweep;
        cfg.g_final_list = vec![0.0];
        cfg.tau_q_list = vec![1.0];
        cfg.noise.gamma_a = -0.5;
        let issues = validate(&cfg);
        assert!(issues
            .iter()
            .any(|i| i.level == IssueLevel::Error && i.message.contains("gamma_a")));
    }

    #[test]
    fn thin_rwa_margin_warns() {
        let mut cfg = ExperimentConfig::default();
        cfg.kind = ExperimentKind::IonSim;
        cfg.g_list = vec![1.0];
        cfg.tau_q_list = vec![50.0];
        cfg.nu_hz = 500.0e3; // R = 400 -> delta_blue ~ 80 kHz > nu/10
        let issues = validate(&cfg);
        assert!(issues.iter().any(
            |i| i.level == IssueLevel::Warning && i.message.contains("vibrational rotating-wave")
        ));
    }
}
