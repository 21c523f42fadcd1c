//! Effective-capacity evaluators.
//!
//! For a user with exponent `theta`, blocklength `n` and kernel `k(gamma)`,
//! the effective capacity is `C = -ln E[k(gamma)] / (theta n)` in bits per
//! channel use. Three independent routes to `E[k(gamma)]` are provided:
//!
//! * [`ec_monte_carlo`]: sample average over ordered fading draws.
//! * [`ec_quadrature`]: adaptive integration against the order-statistic density.
//! * [`ec_closed_weak`] / [`ec_closed_strong`]: series and Tricomi-function
//!   forms of the expectation of the approximate kernel.

mod closed;
mod mc;
mod quadrature;

pub use closed::{ec_closed_strong, ec_closed_weak, strong_moment_terms, weak_moment, SeriesOutcome};
pub use mc::{ec_monte_carlo, ec_monte_carlo_with, monte_carlo_mean, Moments, MC_CHUNK};
pub use quadrature::{ec_quadrature, expected_value};

use serde::{Deserialize, Serialize};

use crate::channel::{Role, SystemConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    MonteCarlo,
    Quadrature,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::ClosedForm, Method::MonteCarlo, Method::Quadrature];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::MonteCarlo => "monte_carlo",
            Method::Quadrature => "quadrature",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

/// How the per-order bracket `e^eta E_s(eta)` of the weak-user series is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketForm {
    /// Scaled generalized exponential integral; stable for every `s`.
    #[default]
    ScaledExpint,
    /// Finite factorial sum plus an `Ei` remainder. Cancels badly once
    /// `eta` exceeds a few units.
    FiniteSum,
}

/// Coefficient of the first-order `Ei` term in the `(2 zeta - 2)` block of
/// the weak-user series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EiPrefactor {
    /// `(2 zeta - 2)(alpha_u - 1)/alpha_u`, the value the expansion produces.
    #[default]
    Derived,
    /// `theta n (alpha_u - 1)/(alpha_u ln 2)` in both blocks.
    SharedWithFirstBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ClosedFormOptions {
    pub bracket: BracketForm,
    pub ei_prefactor: EiPrefactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalControls {
    pub mc_samples: u64,
    pub seed: u64,
    pub quad_rel_tol: f64,
    pub series_max_terms: u32,
    pub series_rel_tol: f64,
    pub closed_form: ClosedFormOptions,
}

impl Default for EvalControls {
    fn default() -> Self {
        EvalControls {
            mc_samples: 1_000_000,
            seed: 1,
            quad_rel_tol: 1e-9,
            series_max_terms: 200,
            series_rel_tol: 1e-10,
            closed_form: ClosedFormOptions::default(),
        }
    }
}

impl EvalControls {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.mc_samples == 0 {
            return bad("mc_samples must be at least 1".into());
        }
        if !(self.quad_rel_tol > 0.0 && self.quad_rel_tol < 1.0) {
            return bad(format!("quad_rel_tol must lie in (0, 1), got {}", self.quad_rel_tol));
        }
        if !(self.series_rel_tol > 0.0 && self.series_rel_tol < 1.0) {
            return bad(format!("series_rel_tol must lie in (0, 1), got {}", self.series_rel_tol));
        }
        if self.series_max_terms < 2 {
            return bad("series_max_terms must be at least 2".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Series terms summed (weak-user closed form only).
    pub series_terms: Option<u32>,
    pub converged: bool,
    /// Bound on the effective-capacity error from series truncation.
    pub truncation_bound: f64,
    /// The value came from a fallback evaluator.
    pub fallback: bool,
    /// Negative effective capacity.
    pub infeasible: bool,
    pub notes: Vec<String>,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Diagnostics {
            series_terms: None,
            converged: true,
            truncation_bound: 0.0,
            fallback: false,
            infeasible: false,
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcResult {
    /// Bits per channel use.
    pub value: f64,
    pub method: Method,
    /// Monte-Carlo standard error, else 0.
    pub std_error: f64,
    pub diagnostics: Diagnostics,
}

impl EcResult {
    pub(crate) fn new(value: f64, method: Method, std_error: f64, mut diagnostics: Diagnostics) -> Self {
        if value < 0.0 && !diagnostics.infeasible {
            diagnostics.infeasible = true;
            diagnostics.notes.push("negative effective capacity: exponent not supportable".into());
        }
        EcResult {
            value,
            method,
            std_error,
            diagnostics,
        }
    }

    /// Result for `eps = 1`, where the kernel is identically one.
    pub(crate) fn certain_error(method: Method) -> Self {
        let mut d = Diagnostics::default();
        d.notes.push("error probability 1: kernel is identically 1".into());
        EcResult::new(0.0, method, 0.0, d)
    }
}

/// Exponent, blocklength and error probability of one user.
#[derive(Debug, Clone, Copy)]
pub(crate) struct UserContext {
    pub theta: f64,
    pub n: f64,
    pub eps: f64,
}

impl UserContext {
    pub fn new(cfg: &SystemConfig, role: Role) -> Result<Self> {
        cfg.validate()?;
        let p = cfg.user(role);
        Ok(UserContext {
            theta: p.qos_exponent,
            n: cfg.blocklength as f64,
            eps: p.error_prob,
        })
    }

    pub fn certain_error(&self) -> bool {
        self.eps >= 1.0
    }

    /// `-ln(mean) / (theta n)`.
    pub fn capacity(&self, mean: f64) -> f64 {
        -mean.ln() / (self.theta * self.n)
    }
}

/// Evaluates `method` for `role`; Monte-Carlo and quadrature use the exact kernel.
pub fn evaluate(cfg: &SystemConfig, role: Role, method: Method, ctl: &EvalControls) -> Result<EcResult> {
    match (method, role) {
        (Method::ClosedForm, Role::Weak) => ec_closed_weak(cfg, ctl),
        (Method::ClosedForm, Role::Strong) => ec_closed_strong(cfg, ctl),
        (Method::MonteCarlo, _) => ec_monte_carlo(cfg, role, ctl),
        (Method::Quadrature, _) => ec_quadrature(cfg, role, ctl, crate::KernelVariant::Exact),
    }
}
