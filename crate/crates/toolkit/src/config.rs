//! Run configuration: the JSON file given with `--config`, with strict
//! per-command parameter schemas.

use std::fmt;
use std::path::{Path, PathBuf};

use layerkit_core::euler::{Decay, ShearFamily};
use layerkit_core::expansion::{FirstOrderSetup, ForcingProfile};
use serde::{Deserialize, Serialize};

/// Environment variable multiplying the default grid sizes.
pub const GRID_SCALE_VAR: &str = "TOOLKIT_GRID_SCALE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Blasius,
    Euler,
    Prandtl,
    Degree,
    SolveU0,
    ResidualSweep,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Blasius => "blasius",
            Command::Euler => "euler",
            Command::Prandtl => "prandtl",
            Command::Degree => "degree",
            Command::SolveU0 => "solve-u0",
            Command::ResidualSweep => "residual-sweep",
            Command::VerifyAll => "verify-all",
        }
    }
}

/// Config-level failure; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// The file passed with `--config`. Every field is optional; the command
/// line takes precedence for `output_dir` and `seed`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub params: Option<serde_json::Value>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))
    }
}

/// Grid multiplier from the environment, 1 when unset.
pub fn grid_scale() -> Result<f64, ConfigError> {
    match std::env::var(GRID_SCALE_VAR) {
        Err(_) => Ok(1.0),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 && v <= 16.0 => Ok(v),
            _ => Err(ConfigError(format!("{GRID_SCALE_VAR} must be a number in (0, 16], got {s:?}"))),
        },
    }
}

/// `round((n − 1) · scale) + 1`, never below `floor`.
pub fn scaled_nodes(n: usize, scale: f64, floor: usize) -> usize {
    ((((n - 1) as f64) * scale).round() as usize + 1).max(floor)
}

fn default_tol() -> f64 {
    1e-10
}
fn default_eta_max() -> f64 {
    12.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlasiusParams {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_eta_max")]
    pub eta_max: f64,
    /// Virtual-origin shifts at which the entrainment velocity is reported.
    #[serde(default = "default_x0s")]
    pub x0_list: Vec<f64>,
    /// Stations for the profile table.
    #[serde(default = "default_stations")]
    pub stations: Vec<f64>,
    #[serde(default = "default_profile_y_max")]
    pub y_max: f64,
    #[serde(default = "default_profile_ny")]
    pub ny: usize,
}

fn default_x0s() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}
fn default_stations() -> Vec<f64> {
    vec![0.0, 0.25, 0.5]
}
fn default_profile_y_max() -> f64 {
    20.0
}
fn default_profile_ny() -> usize {
    201
}

impl Default for BlasiusParams {
    fn default() -> Self {
        BlasiusParams {
            tol: default_tol(),
            eta_max: default_eta_max(),
            x0_list: default_x0s(),
            stations: default_stations(),
            y_max: default_profile_y_max(),
            ny: default_profile_ny(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerParams {
    pub shear_family: ShearFamily,
    pub amplitude: f64,
    pub scale: f64,
    pub x0: f64,
    pub length: f64,
    pub nx: usize,
    pub y_max: f64,
    pub ny: usize,
    pub decay: Decay,
}

impl EulerParams {
    pub fn defaults(scale: f64) -> Self {
        EulerParams {
            shear_family: ShearFamily::TanhPlateau,
            amplitude: 0.05,
            scale: 2.0,
            x0: 1.0,
            length: 0.5,
            nx: scaled_nodes(129, scale, 17),
            y_max: 20.0,
            ny: scaled_nodes(401, scale, 17),
            decay: Decay::Exponential { m1: 1.0 },
        }
    }
}

/// Layer construction shared by `prandtl` and `residual-sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrandtlParams {
    pub layers: FirstOrderSetup,
    /// Stations (in x) written to the profile table.
    pub stations: Vec<f64>,
}

impl PrandtlParams {
    pub fn defaults(scale: f64) -> Self {
        PrandtlParams { layers: FirstOrderSetup::default().scaled(scale), stations: vec![0.0, 0.25, 0.5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeParams {
    pub y_max: f64,
    pub ny: usize,
    pub trials: usize,
    /// Target for `|∫K g|` when calibrating `g = c e^{−y}`.
    pub nondegeneracy_target: f64,
    /// Test functions whose degree is reported.
    pub test_functions: Vec<TestFunction>,
    pub layers: FirstOrderSetup,
}

impl DegreeParams {
    pub fn defaults(scale: f64) -> Self {
        DegreeParams {
            y_max: 20.0,
            ny: scaled_nodes(801, scale, 101),
            trials: 200,
            nondegeneracy_target: 1.0,
            test_functions: vec![TestFunction::ExpDecay { rate: 1.0 }, TestFunction::Bump { lo: 1.0, hi: 3.0 }],
            layers: FirstOrderSetup::default().scaled(scale),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family", deny_unknown_fields)]
pub enum TestFunction {
    /// `e^{−rate·y}`.
    ExpDecay { rate: f64 },
    /// Smooth bump supported in `[lo, hi]`.
    Bump { lo: f64, hi: f64 },
}

impl TestFunction {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            TestFunction::ExpDecay { rate } => (-rate * y).exp(),
            TestFunction::Bump { lo, hi } => layerkit_core::u0::compact_bump(y, lo, hi),
        }
    }
}

/// Forcing for `solve-u0`: a named family or a two-column CSV `(y, F)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum U0Forcing {
    Family(TestFunction),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveU0Params {
    pub forcing: U0Forcing,
    pub eps: f64,
    pub delta_ladder: Vec<f64>,
    pub y_max: f64,
    pub ny: usize,
    pub accuracy: usize,
    pub sigma: f64,
    pub layers: FirstOrderSetup,
}

impl SolveU0Params {
    pub fn defaults(scale: f64) -> Self {
        SolveU0Params {
            forcing: U0Forcing::Family(TestFunction::Bump { lo: 1.0, hi: 3.0 }),
            eps: 1e-4,
            delta_ladder: vec![1e-2, 1e-3, 1e-4, 0.0],
            y_max: 20.0,
            ny: scaled_nodes(401, scale, 101),
            accuracy: 6,
            sigma: 0.05,
            layers: FirstOrderSetup::default().scaled(scale),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualSweepParams {
    pub eps_list: Vec<f64>,
    pub n: usize,
    pub n0: f64,
    pub layers: FirstOrderSetup,
    pub g_ext: ForcingProfile,
}

impl ResidualSweepParams {
    pub fn defaults(scale: f64) -> Self {
        let layers = FirstOrderSetup::default().scaled(scale);
        ResidualSweepParams { eps_list: vec![4e-3, 2e-3, 1e-3, 5e-4], n: 1, n0: 1.05, g_ext: layers.forcing, layers }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyParams {
    /// Criteria to run (all when empty).
    #[serde(default)]
    pub only: Vec<u32>,
}

/// Parameters resolved against the defaults for one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Blasius(BlasiusParams),
    Euler(EulerParams),
    Prandtl(PrandtlParams),
    Degree(DegreeParams),
    SolveU0(SolveU0Params),
    ResidualSweep(ResidualSweepParams),
    VerifyAll(VerifyParams),
}

/// Overlays `user` onto `base` key by key (objects recurse, everything else
/// replaces).
fn overlay(base: &mut serde_json::Value, user: &serde_json::Value) {
    match (base, user) {
        (serde_json::Value::Object(b), serde_json::Value::Object(u)) => {
            for (k, v) in u {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => overlay(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, u) => *b = u.clone(),
    }
}

fn resolve_as<T>(defaults: T, user: Option<&serde_json::Value>) -> Result<T, ConfigError>
where
    T: Serialize + for<'de> Deserialize<'de>,
{
    let Some(user) = user else { return Ok(defaults) };
    if !user.is_object() {
        return Err(ConfigError("params must be a JSON object".into()));
    }
    let mut merged = serde_json::to_value(&defaults).map_err(|e| ConfigError(e.to_string()))?;
    overlay(&mut merged, user);
    serde_json::from_value(merged).map_err(|e| ConfigError(format!("invalid params: {e}")))
}

impl Params {
    pub fn resolve(command: Command, user: Option<&serde_json::Value>, scale: f64) -> Result<Self, ConfigError> {
        let p = match command {
            Command::Blasius => Params::Blasius(resolve_as(BlasiusParams::default(), user)?),
            Command::Euler => Params::Euler(resolve_as(EulerParams::defaults(scale), user)?),
            Command::Prandtl => Params::Prandtl(resolve_as(PrandtlParams::defaults(scale), user)?),
            Command::Degree => Params::Degree(resolve_as(DegreeParams::defaults(scale), user)?),
            Command::SolveU0 => Params::SolveU0(resolve_as(SolveU0Params::defaults(scale), user)?),
            Command::ResidualSweep => Params::ResidualSweep(resolve_as(ResidualSweepParams::defaults(scale), user)?),
            Command::VerifyAll => Params::VerifyAll(resolve_as(VerifyParams { only: Vec::new() }, user)?),
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError(m));
        match self {
            Params::Blasius(p) => {
                if !(p.tol > 0.0 && p.tol < 1e-2) {
                    return bad(format!("tol must lie in (0, 1e-2), got {}", p.tol));
                }
                if !(p.eta_max >= 10.0) {
                    return bad(format!("eta_max must be at least 10, got {}", p.eta_max));
                }
            }
            Params::ResidualSweep(p) => {
                if p.eps_list.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
                    return bad("every eps must lie in (0, 1)".into());
                }
                if p.eps_list.len() < 2 {
                    return bad("eps_list needs at least two values".into());
                }
                if p.n > 1 {
                    return bad(format!("n = {} needs layers beyond first order, which this tool does not build", p.n));
                }
            }
            Params::SolveU0(p) => {
                if p.delta_ladder.is_empty() || p.delta_ladder.iter().any(|d| !(*d >= 0.0)) {
                    return bad("delta_ladder must be a non-empty list of non-negative values".into());
                }
                if !(p.eps > 0.0 && p.eps < 1.0) {
                    return bad(format!("eps must lie in (0, 1), got {}", p.eps));
                }
            }
            Params::Degree(p) => {
                if p.trials < 100 {
                    return bad(format!("trials must be at least 100, got {}", p.trials));
                }
            }
            Params::VerifyAll(p) => {
                if let Some(c) = p.only.iter().find(|c| !(1..=15).contains(*c)) {
                    return bad(format!("unknown criterion {c}"));
                }
            }
            Params::Prandtl(p) => {
                if let Some(x) = p.stations.iter().find(|x| !(0.0..=p.layers.length).contains(*x)) {
                    return bad(format!("station x = {x} lies outside [0, {}]", p.layers.length));
                }
            }
            Params::Euler(_) => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse(r#"{"command":"blasius","bogus":1}"#).is_err());
        let cfg = RunConfig::parse(r#"{"command":"blasius","params":{"tol":1e-9,"etamax":3}}"#).unwrap();
        assert!(Params::resolve(Command::Blasius, cfg.params.as_ref(), 1.0).is_err());
    }

    #[test]
    fn overlay_keeps_unspecified_defaults() {
        let user = serde_json::json!({"eps_list": [1e-3, 5e-4], "layers": {"nx": 33}});
        let Params::ResidualSweep(p) = Params::resolve(Command::ResidualSweep, Some(&user), 1.0).unwrap() else {
            panic!()
        };
        assert_eq!(p.eps_list, vec![1e-3, 5e-4]);
        assert_eq!(p.layers.nx, 33);
        assert_eq!(p.layers.h_wall, FirstOrderSetup::default().h_wall);
    }

    #[test]
    fn scaled_nodes_floor() {
        assert_eq!(scaled_nodes(129, 1.0, 17), 129);
        assert_eq!(scaled_nodes(129, 0.5, 17), 65);
        assert_eq!(scaled_nodes(129, 0.01, 17), 17);
    }
}
