//! Flat TOML run configuration with defaults and validation.

use serde::{Deserialize, Serialize};

use crate::data::{ProfileKind, ProfileParams};
use crate::error::{Result, WaveError};
use crate::experiments::DataSpec;
use crate::grid::{build_grid, GridPolicy, RadialGrid, COEFF_BOUND_MAX};
use crate::multiplier::MultiplierField;
use crate::picard::ADMISSIBLE_H;
use crate::solver::{HKind, Nonlinearity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Iterate,
    VerifyIdentity,
    CheckInequalities,
    VerifyEstimate,
    Norms,
    Lifespan,
    Continuity,
    Continue,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Self::Solve,
        Self::Iterate,
        Self::VerifyIdentity,
        Self::CheckInequalities,
        Self::VerifyEstimate,
        Self::Norms,
        Self::Lifespan,
        Self::Continuity,
        Self::Continue,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Iterate => "iterate",
            Self::VerifyIdentity => "verify-identity",
            Self::CheckInequalities => "check-inequalities",
            Self::VerifyEstimate => "verify-estimate",
            Self::Norms => "norms",
            Self::Lifespan => "lifespan",
            Self::Continuity => "continuity",
            Self::Continue => "continue",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| WaveError::Config(format!("unknown command `{s}`")))
    }
}

fn d_cfl() -> f64 {
    0.9
}
fn d_mu() -> f64 {
    0.25
}
fn d_h_bound() -> f64 {
    ADMISSIBLE_H
}
fn d_dr() -> f64 {
    1.0 / 16.0
}
fn d_pad() -> f64 {
    8.0
}
fn d_coeff_bound() -> f64 {
    ADMISSIBLE_H
}
fn d_profile() -> ProfileKind {
    ProfileKind::Gaussian
}
fn d_one() -> f64 {
    1.0
}
fn d_t() -> f64 {
    1.0
}
fn d_variant() -> String {
    "kss".into()
}
fn d_param() -> f64 {
    0.5
}
fn d_budget() -> f64 {
    200.0
}
fn d_k_max() -> usize {
    12
}
fn d_tol() -> f64 {
    1e-8
}
fn d_segments() -> usize {
    2
}
fn d_samples() -> usize {
    10_000
}
fn d_directions() -> usize {
    1
}
fn d_h_kind() -> HKind {
    HKind::Linear
}

/// Every key of a run. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,

    /// Outer radius; sized from `T + pad` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    /// Interval count; derived from `dr` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nr: Option<usize>,
    #[serde(default = "d_dr")]
    pub dr: f64,
    #[serde(default = "d_pad")]
    pub pad: f64,
    #[serde(default = "d_cfl")]
    pub cfl: f64,
    /// sup |h| the time step is sized for.
    #[serde(default = "d_coeff_bound")]
    pub coeff_bound: f64,
    /// sup |h| a run may reach and stay admissible.
    #[serde(default = "d_h_bound")]
    pub h_bound: f64,

    #[serde(default = "d_profile")]
    pub profile: ProfileKind,
    #[serde(default = "d_one")]
    pub amplitude: f64,
    #[serde(default)]
    pub center: f64,
    #[serde(default = "d_one")]
    pub width: f64,
    #[serde(default)]
    pub g_amplitude: f64,
    /// Rescale the data to this size when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,

    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default = "d_h_kind")]
    pub h_kind: HKind,
    #[serde(default)]
    pub lambda: f64,
    /// `c` in a prescribed coefficient `h = c e^{-r²}` for linear runs.
    #[serde(default)]
    pub h_amplitude: f64,

    #[serde(rename = "T", default = "d_t")]
    pub t_end: f64,
    #[serde(default = "d_mu")]
    pub mu: f64,

    #[serde(default = "d_variant")]
    pub multiplier: String,
    #[serde(default = "d_param")]
    pub multiplier_param: f64,
    #[serde(default = "d_samples")]
    pub samples: usize,

    #[serde(default)]
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub t_list: Vec<f64>,
    #[serde(default)]
    pub h_list: Vec<f64>,
    #[serde(default)]
    pub g_list: Vec<f64>,
    #[serde(default)]
    pub nr_list: Vec<usize>,
    #[serde(default)]
    pub delta_list: Vec<f64>,
    #[serde(default)]
    pub k_list: Vec<u32>,
    #[serde(default)]
    pub alpha_list: Vec<f64>,
    #[serde(default)]
    pub gamma_list: Vec<f64>,

    #[serde(default = "d_budget")]
    pub t_budget: f64,
    #[serde(default = "d_k_max")]
    pub k_max: usize,
    #[serde(default = "d_tol")]
    pub tol: f64,
    #[serde(default = "d_segments")]
    pub segments: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollify_k: Option<u32>,
    #[serde(default = "d_directions")]
    pub directions: usize,
    /// Keep every n-th level in a trace CSV; no trace when 0.
    #[serde(default)]
    pub trace_stride: usize,
    #[serde(default)]
    pub seed: u64,
}

fn bad(msg: impl Into<String>) -> WaveError {
    WaveError::Config(msg.into())
}

fn check_list(name: &str, v: &[f64], ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
    match v.iter().find(|x| !ok(**x)) {
        Some(x) => Err(bad(format!("{name} entries must be {what}, got {x}"))),
        None => Ok(()),
    }
}

/// Parses and validates a TOML document.
pub fn parse_config(source: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(source).map_err(|e| bad(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| bad(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !(self.mu > 0.0 && self.mu < 0.5) {
            return Err(bad("mu must lie in (0, 1/2)"));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(bad("cfl must lie in (0, 1)"));
        }
        if !(self.coeff_bound >= 0.0 && self.coeff_bound <= COEFF_BOUND_MAX) {
            return Err(bad("coeff_bound must lie in [0, 1/2]"));
        }
        if !(self.h_bound > 0.0 && self.h_bound <= COEFF_BOUND_MAX) {
            return Err(bad("h_bound must lie in (0, 1/2]"));
        }
        if !pos(self.dr) || !pos(self.pad) {
            return Err(bad("dr and pad must be positive"));
        }
        if self.r_max.is_some_and(|r| !pos(r)) {
            return Err(bad("r_max must be positive"));
        }
        if self.nr.is_some_and(|n| n < 16) {
            return Err(bad("nr must be at least 16"));
        }
        if !pos(self.width) {
            return Err(bad("width must be positive"));
        }
        if ![
            self.amplitude,
            self.center,
            self.g_amplitude,
            self.a,
            self.b,
            self.lambda,
        ]
        .iter()
        .all(|x| x.is_finite())
        {
            return Err(bad("data and nonlinearity parameters must be finite"));
        }
        if self.eps.is_some_and(|e| !(e >= 0.0 && e.is_finite())) {
            return Err(bad("eps must be nonnegative"));
        }
        if self.h_amplitude.abs() > COEFF_BOUND_MAX {
            return Err(bad("h_amplitude must satisfy |c| <= 1/2"));
        }
        if !pos(self.t_end) {
            return Err(bad("T must be positive"));
        }
        if !pos(self.t_budget) {
            return Err(bad("t_budget must be positive"));
        }
        if self.k_max == 0 {
            return Err(bad("k_max must be at least 1"));
        }
        if !pos(self.tol) {
            return Err(bad("tol must be positive"));
        }
        if self.segments == 0 {
            return Err(bad("segments must be at least 1"));
        }
        if self.samples == 0 {
            return Err(bad("samples must be at least 1"));
        }
        if self.directions == 0 {
            return Err(bad("directions must be at least 1"));
        }
        MultiplierField::from_name(&self.multiplier, self.multiplier_param)
            .map_err(|e| bad(e.to_string()))?;
        check_list("eps_list", &self.eps_list, pos, "positive")?;
        if self.command == Command::Lifespan && self.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(bad("eps_list must be strictly decreasing"));
        }
        check_list("t_list", &self.t_list, pos, "positive")?;
        check_list(
            "h_list",
            &self.h_list,
            |x| x.abs() <= COEFF_BOUND_MAX,
            "at most 1/2 in size",
        )?;
        check_list("g_list", &self.g_list, f64::is_finite, "finite")?;
        check_list(
            "delta_list",
            &self.delta_list,
            |x| x >= 0.0 && x.is_finite(),
            "nonnegative",
        )?;
        check_list(
            "alpha_list",
            &self.alpha_list,
            |x| (0.0..3.0).contains(&x),
            "in [0, 3)",
        )?;
        check_list(
            "gamma_list",
            &self.gamma_list,
            |x| (0.0..1.0).contains(&x),
            "in [0, 1)",
        )?;
        if self.k_list.contains(&0) {
            return Err(bad("k_list entries must be at least 1"));
        }
        if self.nr_list.iter().any(|n| *n < 16) {
            return Err(bad("nr_list entries must be at least 16"));
        }
        Ok(())
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        Nonlinearity::new(self.a, self.b, self.h_kind, self.lambda)
    }

    pub fn data_spec(&self) -> DataSpec {
        DataSpec {
            kind: self.profile,
            params: ProfileParams {
                amplitude: self.amplitude,
                center: self.center,
                width: self.width,
                g_amplitude: self.g_amplitude,
            },
            epsilon: self.eps,
        }
    }

    pub fn policy(&self) -> GridPolicy {
        GridPolicy {
            dr: self.dr,
            pad: self.pad,
            cfl_factor: self.cfl,
            coeff_bound: self.coeff_bound,
        }
    }

    /// The grid for a horizon `t_end`, honoring explicit `r_max` and `nr`.
    pub fn grid_for(&self, t_end: f64) -> Result<RadialGrid> {
        let r_max = self
            .r_max
            .unwrap_or(t_end + self.pad + self.center.abs() + self.width);
        let nr = self
            .nr
            .unwrap_or(((r_max / self.dr).ceil() as usize).max(16));
        build_grid(r_max, nr, self.cfl, self.coeff_bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config("command = \"solve\"\neps = 0.05\nT = 10\n").unwrap();
        assert_eq!(c.command, Command::Solve);
        assert_eq!(c.mu, 0.25);
        assert_eq!(c.cfl, 0.9);
        assert_eq!(c.h_bound, 1.0 / 6.0);
        assert_eq!(c.t_end, 10.0);
    }

    #[test]
    fn errors_name_the_problem() {
        let e = parse_config("command = \"solve\"\nmu = 0.7\n").unwrap_err();
        assert!(e.to_string().contains("mu must lie in (0, 1/2)"), "{e}");
        let e = parse_config("command = \"solve\"\nbogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        let e =
            parse_config("command = \"verify-identity\"\nmultiplier_param = 1.5\n").unwrap_err();
        assert!(matches!(e, WaveError::Config(_)));
        assert!(parse_config("command = \"lifespan\"\neps_list = [0.1, 0.2]\n").is_err());
    }

    #[test]
    fn round_trip() {
        let c = parse_config(
            "command = \"lifespan\"\neps_list = [0.4, 0.3]\na = 1.0\nlambda = 1.0\nseed = 9\n",
        )
        .unwrap();
        let again = parse_config(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
    }
}
