//! Typed experiment configuration: the closed TOML schema, defaults, and the
//! mapping onto catalog problems.

use serde::{Deserialize, Serialize};

use crate::schema::{validate_table, ConfigError, KeyKind, KeySpec};

pub const COMMANDS: &[&str] = &[
    "simulate",
    "converge-dt",
    "converge-yosida",
    "picard",
    "averaging-sweep",
    "spde",
    "particles",
    "proptest",
];

const PROBLEM_KINDS: &[&str] = &[
    "half_line_reflection",
    "free_brownian",
    "quadratic_prox",
    "coulomb_particles",
    "supnorm_feedback",
    "reflected_jump_diffusion",
];

const SCHEMES: &[&str] = &["prox", "yosida"];
const DELAY_KINDS: &[&str] = &["none", "constant", "proportional", "full_path"];
const FORMATS: &[&str] = &["csv", "json"];
const PROFILES: &[&str] = &["sinusoid", "decaying", "periodic"];
const COMPOSITIONS: &[&str] = &["additive", "multiplicative"];
const SPDE_POTENTIALS: &[&str] = &["none", "halfline", "box"];

const PROBLEM_KEYS: &[KeySpec] = &[
    KeySpec { name: "kind", kind: KeyKind::Str { allowed: PROBLEM_KINDS } },
    KeySpec { name: "sigma", kind: KeyKind::Float { min: Some(0.0), strict: false } },
    KeySpec { name: "x0", kind: KeyKind::Float { min: None, strict: false } },
    KeySpec { name: "x0_vector", kind: KeyKind::FloatArray { min_len: 1 } },
    KeySpec { name: "lambda", kind: KeyKind::Float { min: Some(0.0), strict: true } },
    KeySpec { name: "particles", kind: KeyKind::Int { min: Some(2) } },
    KeySpec { name: "kappa", kind: KeyKind::Float { min: Some(0.0), strict: false } },
    KeySpec { name: "jump_intensity", kind: KeyKind::Float { min: Some(0.0), strict: false } },
    KeySpec { name: "jump_scale", kind: KeyKind::Float { min: None, strict: false } },
    KeySpec { name: "delay_kind", kind: KeyKind::Str { allowed: DELAY_KINDS } },
    KeySpec { name: "delay_gamma0", kind: KeyKind::Float { min: Some(0.0), strict: false } },
    KeySpec { name: "delay_iota", kind: KeyKind::Float { min: Some(0.0), strict: false } },
];

const NUMERICS_KEYS: &[KeySpec] = &[
    KeySpec { name: "dt", kind: KeyKind::Float { min: Some(0.0), strict: true } },
    KeySpec { name: "horizon", kind: KeyKind::Float { min: Some(0.0), strict: true } },
    KeySpec { name: "delay_horizon", kind: KeyKind::Float { min: Some(0.0), strict: false } },
    KeySpec { name: "scheme", kind: KeyKind::Str { allowed: SCHEMES } },
    KeySpec { name: "yosida_eps", kind: KeyKind::Float { min: Some(0.0), strict: true } },
    KeySpec { name: "dt_grid", kind: KeyKind::FloatArray { min_len: 2 } },
    KeySpec { name: "eps_grid", kind: KeyKind::FloatArray { min_len: 2 } },
    KeySpec { name: "picard_tol", kind: KeyKind::Float { min: Some(0.0), strict: true } },
    KeySpec { name: "picard_max_iter", kind: KeyKind::Int { min: Some(1) } },
    KeySpec { name: "slope_min", kind: KeyKind::Float { min: None, strict: false } },
    KeySpec { name: "slope_max", kind: KeyKind::Float { min: None, strict: false } },
    KeySpec { name: "refinement_factor", kind: KeyKind::Int { min: Some(2) } },
];

const MC_KEYS: &[KeySpec] = &[
    KeySpec { name: "paths", kind: KeyKind::Int { min: Some(1) } },
    KeySpec { name: "master_seed", kind: KeyKind::Int { min: Some(0) } },
    KeySpec { name: "workers", kind: KeyKind::Int { min: Some(0) } },
    KeySpec { name: "property_samples", kind: KeyKind::Int { min: Some(1) } },
];

const OUTPUT_KEYS: &[KeySpec] = &[
    KeySpec { name: "directory", kind: KeyKind::AnyStr },
    KeySpec { name: "formats", kind: KeyKind::StrArray { allowed: FORMATS } },
    KeySpec { name: "snapshot_every", kind: KeyKind::Int { min: Some(0) } },
    KeySpec { name: "snapshot_points", kind: KeyKind::Int { min: Some(1) } },
];

const SPDE_KEYS: &[KeySpec] = &[
    KeySpec { name: "modes", kind: KeyKind::Int { min: Some(1) } },
    KeySpec { name: "viscosity", kind: KeyKind::Float { min: Some(0.0), strict: true } },
    KeySpec { name: "noise_q", kind: KeyKind::FloatArray { min_len: 1 } },
    KeySpec { name: "reaction_coeffs", kind: KeyKind::FloatArray { min_len: 0 } },
    KeySpec { name: "reaction_bound", kind: KeyKind::Float { min: Some(0.0), strict: false } },
    KeySpec { name: "reaction_range", kind: KeyKind::Float { min: Some(0.0), strict: true } },
    KeySpec { name: "initial_modes", kind: KeyKind::FloatArray { min_len: 1 } },
    KeySpec { name: "potential", kind: KeyKind::Str { allowed: SPDE_POTENTIALS } },
    KeySpec { name: "potential_lower", kind: KeyKind::Float { min: None, strict: false } },
    KeySpec { name: "potential_upper", kind: KeyKind::Float { min: None, strict: false } },
    KeySpec { name: "b2_coeff", kind: KeyKind::Float { min: None, strict: false } },
    KeySpec { name: "b3_coeff", kind: KeyKind::Float { min: None, strict: false } },
    KeySpec { name: "delay1", kind: KeyKind::Float { min: Some(0.0), strict: false } },
    KeySpec { name: "delay2", kind: KeyKind::Float { min: Some(0.0), strict: false } },
    KeySpec { name: "delay_horizon", kind: KeyKind::Float { min: Some(0.0), strict: false } },
    KeySpec { name: "jump_intensity", kind: KeyKind::Float { min: Some(0.0), strict: false } },
    KeySpec { name: "jump_scale", kind: KeyKind::Float { min: None, strict: false } },
];

const AVERAGING_KEYS: &[KeySpec] = &[
    KeySpec { name: "profile", kind: KeyKind::Str { allowed: PROFILES } },
    KeySpec { name: "omega", kind: KeyKind::Float { min: Some(0.0), strict: true } },
    KeySpec { name: "phase", kind: KeyKind::Float { min: None, strict: false } },
    KeySpec { name: "rate", kind: KeyKind::Float { min: Some(0.0), strict: true } },
    KeySpec { name: "composition", kind: KeyKind::Str { allowed: COMPOSITIONS } },
    KeySpec { name: "eps_grid", kind: KeyKind::FloatArray { min_len: 1 } },
    KeySpec { name: "with_jumps", kind: KeyKind::Bool },
    KeySpec { name: "jump_intensity", kind: KeyKind::Float { min: Some(0.0), strict: false } },
    KeySpec { name: "jump_scale", kind: KeyKind::Float { min: None, strict: false } },
    KeySpec { name: "base_coeff", kind: KeyKind::Float { min: None, strict: false } },
    KeySpec { name: "base_offset", kind: KeyKind::Float { min: None, strict: false } },
];

const ROOT_KEYS: &[KeySpec] = &[
    KeySpec { name: "command", kind: KeyKind::Str { allowed: COMMANDS } },
    KeySpec { name: "problem", kind: KeyKind::Table(PROBLEM_KEYS) },
    KeySpec { name: "numerics", kind: KeyKind::Table(NUMERICS_KEYS) },
    KeySpec { name: "mc", kind: KeyKind::Table(MC_KEYS) },
    KeySpec { name: "output", kind: KeyKind::Table(OUTPUT_KEYS) },
    KeySpec { name: "spde", kind: KeyKind::Table(SPDE_KEYS) },
    KeySpec { name: "averaging", kind: KeyKind::Table(AVERAGING_KEYS) },
];

fn default_sigma() -> f64 { 1.0 }
fn default_lambda() -> f64 { 0.5 }
fn default_particles() -> i64 { 5 }
fn default_kappa() -> f64 { 0.5 }
fn default_delay_kind() -> String { "none".into() }
fn default_problem_kind() -> String { "half_line_reflection".into() }

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ProblemConfig {
    pub kind: String,
    pub sigma: f64,
    pub x0: f64,
    pub x0_vector: Option<Vec<f64>>,
    pub lambda: f64,
    pub particles: i64,
    pub kappa: f64,
    pub jump_intensity: f64,
    pub jump_scale: f64,
    pub delay_kind: String,
    pub delay_gamma0: f64,
    pub delay_iota: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            kind: default_problem_kind(),
            sigma: default_sigma(),
            x0: 0.0,
            x0_vector: None,
            lambda: default_lambda(),
            particles: default_particles(),
            kappa: default_kappa(),
            jump_intensity: 0.0,
            jump_scale: 0.0,
            delay_kind: default_delay_kind(),
            delay_gamma0: 0.0,
            delay_iota: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericsConfig {
    pub dt: f64,
    pub horizon: f64,
    pub delay_horizon: f64,
    pub scheme: String,
    pub yosida_eps: f64,
    pub dt_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub picard_tol: f64,
    pub picard_max_iter: i64,
    pub slope_min: f64,
    pub slope_max: f64,
    pub refinement_factor: i64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            dt: 1e-3,
            horizon: 1.0,
            delay_horizon: 0.0,
            scheme: "prox".into(),
            yosida_eps: 0.1,
            dt_grid: vec![8e-3, 4e-3, 2e-3, 1e-3],
            eps_grid: vec![1e-1, 1e-2, 1e-3, 1e-4],
            picard_tol: 1e-10,
            picard_max_iter: 30,
            slope_min: 0.3,
            slope_max: 0.7,
            refinement_factor: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub paths: i64,
    pub master_seed: i64,
    pub workers: i64,
    pub property_samples: i64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { paths: 1000, master_seed: 42, workers: 1, property_samples: 10_000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<String>,
    pub snapshot_every: i64,
    pub snapshot_points: i64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: "out".into(),
            formats: vec!["csv".into(), "json".into()],
            snapshot_every: 10,
            snapshot_points: 21,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SpdeBlock {
    pub modes: i64,
    pub viscosity: f64,
    pub noise_q: Vec<f64>,
    pub reaction_coeffs: Vec<f64>,
    pub reaction_bound: f64,
    pub reaction_range: f64,
    pub initial_modes: Vec<f64>,
    pub potential: String,
    pub potential_lower: f64,
    pub potential_upper: f64,
    pub b2_coeff: f64,
    pub b3_coeff: f64,
    pub delay1: f64,
    pub delay2: f64,
    pub delay_horizon: f64,
    pub jump_intensity: f64,
    pub jump_scale: f64,
}

impl Default for SpdeBlock {
    fn default() -> Self {
        SpdeBlock {
            modes: 1,
            viscosity: 1.0,
            noise_q: vec![1.0],
            reaction_coeffs: vec![],
            reaction_bound: 0.0,
            reaction_range: 10.0,
            initial_modes: vec![1.0],
            potential: "none".into(),
            potential_lower: 0.0,
            potential_upper: 1.0,
            b2_coeff: 0.0,
            b3_coeff: 0.0,
            delay1: 0.0,
            delay2: 0.0,
            delay_horizon: 0.0,
            jump_intensity: 0.0,
            jump_scale: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AveragingBlock {
    pub profile: String,
    pub omega: f64,
    pub phase: f64,
    pub rate: f64,
    pub composition: String,
    pub eps_grid: Vec<f64>,
    pub with_jumps: bool,
    pub jump_intensity: f64,
    pub jump_scale: f64,
    pub base_coeff: f64,
    pub base_offset: f64,
}

impl Default for AveragingBlock {
    fn default() -> Self {
        AveragingBlock {
            profile: "sinusoid".into(),
            omega: 1.0,
            phase: 0.0,
            rate: 1.0,
            composition: "additive".into(),
            eps_grid: vec![0.5, 0.1, 0.02, 0.004],
            with_jumps: false,
            jump_intensity: 2.0,
            jump_scale: 0.05,
            base_coeff: 1.0,
            base_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ExperimentConfig {
    pub command: Option<String>,
    pub problem: ProblemConfig,
    pub numerics: NumericsConfig,
    pub mc: McConfig,
    pub output: OutputConfig,
    pub spde: SpdeBlock,
    pub averaging: AveragingBlock,
}

/// Validates the document against the closed schema and materializes every
/// default. On failure, returns the complete list of violations.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigError>> {
    let doc: toml::Value = toml::from_str(text).map_err(|e| {
        vec![ConfigError { path: "<document>".into(), message: format!("toml parse error: {e}") }]
    })?;
    let mut errors = Vec::new();
    validate_table(&doc, ROOT_KEYS, "", &mut errors);
    if !errors.is_empty() {
        return Err(errors);
    }
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        vec![ConfigError { path: "<document>".into(), message: format!("extraction error: {e}") }]
    })?;
    cross_validate(&cfg).map_err(|e| vec![e])?;
    Ok(cfg)
}

/// Bounds that couple several keys.
fn cross_validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    let n = &cfg.numerics;
    if n.dt_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ConfigError {
            path: "numerics.dt_grid".into(),
            message: "grid must be strictly descending".into(),
        });
    }
    if n.eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ConfigError {
            path: "numerics.eps_grid".into(),
            message: "grid must be strictly descending".into(),
        });
    }
    if cfg.averaging.eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ConfigError {
            path: "averaging.eps_grid".into(),
            message: "grid must be strictly descending".into(),
        });
    }
    if cfg.problem.delay_kind == "proportional"
        && !(0.0..=1.0).contains(&cfg.problem.delay_iota)
    {
        return Err(ConfigError {
            path: "problem.delay_iota".into(),
            message: format!("value {} violates 0 <= iota <= 1", cfg.problem.delay_iota),
        });
    }
    if cfg.spde.noise_q.len() != cfg.spde.modes as usize {
        return Err(ConfigError {
            path: "spde.noise_q".into(),
            message: format!(
                "length {} must equal spde.modes = {}",
                cfg.spde.noise_q.len(),
                cfg.spde.modes
            ),
        });
    }
    if n.slope_min >= n.slope_max {
        return Err(ConfigError {
            path: "numerics.slope_min".into(),
            message: "slope_min must be below slope_max".into(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_materializes_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.numerics.dt, 1e-3);
        assert_eq!(cfg.mc.master_seed, 42);
        assert_eq!(cfg.output.directory, "out");
        assert_eq!(cfg.problem.kind, "half_line_reflection");
        // every default present in the serialized form
        let serialized = toml::to_string(&cfg).unwrap();
        assert!(serialized.contains("dt ="));
        assert!(serialized.contains("master_seed = 42"));
    }

    #[test]
    fn negative_dt_reports_bound_and_path() {
        let err = parse_config("[numerics]\ndt = -0.1\n").unwrap_err();
        assert_eq!(err.len(), 1);
        let msg = err[0].to_string();
        assert!(msg.contains("numerics.dt"), "{msg}");
        assert!(msg.contains("dt > 0"), "{msg}");
    }

    #[test]
    fn unknown_key_suggests_nearest() {
        let err = parse_config("[numerics]\ndtt = 0.1\n").unwrap_err();
        let msg = err[0].to_string();
        assert!(msg.contains("numerics.dtt"), "{msg}");
        assert!(msg.contains("did you mean `dt`"), "{msg}");
    }

    #[test]
    fn all_errors_reported_not_just_first() {
        let err = parse_config(
            "[numerics]\ndt = -1.0\nhorizon = 0.0\n[mc]\npaths = 0\nworker = 2\n",
        )
        .unwrap_err();
        assert_eq!(err.len(), 4, "{err:?}");
    }

    #[test]
    fn ascending_grids_rejected() {
        let err = parse_config("[numerics]\ndt_grid = [1e-3, 2e-3]\n").unwrap_err();
        assert!(err[0].to_string().contains("descending"));
    }
}
