//! Block-fading channel model of the NOMA pair.
//!
//! Every user sees an independent unit-mean exponential power gain per block
//! (Rayleigh amplitude). The base station orders the `V` gains ascending and
//! serves the users ranked `t` (weak) and `u` (strong).

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::specfun::ln_beta;
use crate::{Error, Result};

/// Tolerance on `alpha_t + alpha_u = 1` when power back-off is disabled.
const POWER_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Weak,
    Strong,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::Weak, Role::Strong];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Weak => "weak",
            Role::Strong => "strong",
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Role {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weak" => Ok(Role::Weak),
            "strong" => Ok(Role::Strong),
            _ => Err(Error::InvalidConfig(format!("unknown role `{s}`"))),
        }
    }
}

/// Per-user parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserParams {
    /// 1-based rank of the user's gain among the `V` sorted gains.
    pub rank: usize,
    /// Power-allocation coefficient.
    pub power: f64,
    /// Block error probability, in `(0, 1]`.
    pub error_prob: f64,
    /// QoS exponent, per bit.
    pub qos_exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Pool size `V`.
    pub num_users: usize,
    pub weak: UserParams,
    pub strong: UserParams,
    /// Transmit SNR, linear.
    pub snr: f64,
    /// Blocklength in channel uses.
    pub blocklength: u32,
    /// Permit `alpha_t + alpha_u < 1`.
    #[serde(default)]
    pub power_backoff: bool,
}

impl SystemConfig {
    /// `V = 10`, `t = 2`, `u = 8`, `alpha = (0.8, 0.2)`, 20 dB, `n = 300`,
    /// `eps = 1e-5`, `theta = 0.01`.
    pub fn reference() -> Self {
        let user = |rank, power| UserParams {
            rank,
            power,
            error_prob: 1e-5,
            qos_exponent: 0.01,
        };
        SystemConfig {
            num_users: 10,
            weak: user(2, 0.8),
            strong: user(8, 0.2),
            snr: 100.0,
            blocklength: 300,
            power_backoff: false,
        }
    }

    pub fn with_snr(mut self, snr: f64) -> Self {
        self.snr = snr;
        self
    }

    pub fn with_snr_db(self, db: f64) -> Self {
        self.with_snr(db_to_linear(db))
    }

    pub fn with_blocklength(mut self, n: u32) -> Self {
        self.blocklength = n;
        self
    }

    /// Sets the error probability of both users.
    pub fn with_error_prob(mut self, eps: f64) -> Self {
        self.weak.error_prob = eps;
        self.strong.error_prob = eps;
        self
    }

    /// Sets the QoS exponent of both users.
    pub fn with_qos_exponent(mut self, theta: f64) -> Self {
        self.weak.qos_exponent = theta;
        self.strong.qos_exponent = theta;
        self
    }

    pub fn with_powers(mut self, weak: f64, strong: f64) -> Self {
        self.weak.power = weak;
        self.strong.power = strong;
        self
    }

    pub fn with_ranks(mut self, num_users: usize, weak: usize, strong: usize) -> Self {
        self.num_users = num_users;
        self.weak.rank = weak;
        self.strong.rank = strong;
        self
    }

    pub fn user(&self, role: Role) -> &UserParams {
        match role {
            Role::Weak => &self.weak,
            Role::Strong => &self.strong,
        }
    }

    pub fn user_mut(&mut self, role: Role) -> &mut UserParams {
        match role {
            Role::Weak => &mut self.weak,
            Role::Strong => &mut self.strong,
        }
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr.log10()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let (v, t, u) = (self.num_users, self.weak.rank, self.strong.rank);
        if !(1 <= t && t < u && u <= v) {
            return bad(format!("ranks must satisfy 1 <= t < u <= V, got t = {t}, u = {u}, V = {v}"));
        }
        let (at, au) = (self.weak.power, self.strong.power);
        if !(au > 0.0 && at > au && at.is_finite()) {
            return bad(format!("power coefficients must satisfy alpha_t > alpha_u > 0, got ({at}, {au})"));
        }
        let sum = at + au;
        if self.power_backoff {
            if sum > 1.0 + POWER_SUM_TOL {
                return bad(format!("alpha_t + alpha_u = {sum} exceeds 1"));
            }
        } else if (sum - 1.0).abs() > POWER_SUM_TOL {
            return bad(format!("alpha_t + alpha_u = {sum}, expected 1 (enable power_backoff to allow less)"));
        }
        if !(self.snr > 0.0 && self.snr.is_finite()) {
            return bad(format!("snr must be positive and finite, got {}", self.snr));
        }
        if self.blocklength == 0 {
            return bad("blocklength must be at least 1".into());
        }
        for role in Role::ALL {
            let p = self.user(role);
            if !(p.error_prob > 0.0 && p.error_prob <= 1.0) {
                return bad(format!("{role} error_prob must lie in (0, 1], got {}", p.error_prob));
            }
            if !(p.qos_exponent > 0.0 && p.qos_exponent.is_finite()) {
                return bad(format!("{role} qos_exponent must be positive, got {}", p.qos_exponent));
            }
        }
        Ok(())
    }

    /// Instantaneous SINR (weak) or post-SIC SNR (strong) for the user's own
    /// ordered gain.
    pub fn gamma(&self, role: Role, gain: f64) -> f64 {
        match role {
            Role::Weak => sinr_weak(gain, self),
            Role::Strong => snr_strong(gain, self),
        }
    }

    /// Interference-limited SINR ceiling `alpha_t / alpha_u` of the weak user.
    pub fn weak_sinr_ceiling(&self) -> f64 {
        self.weak.power / self.strong.power
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Density and distribution function of a unit-mean exponential power gain.
pub fn unordered_pdf_cdf(x: f64) -> Result<(f64, f64)> {
    if !(x >= 0.0) {
        return Err(Error::domain("unordered_pdf_cdf", format!("x = {x}; requires x >= 0")));
    }
    Ok(((-x).exp(), -(-x).exp_m1()))
}

fn check_rank(func: &'static str, k: usize, v: usize) -> Result<()> {
    if !(1 <= k && k <= v) {
        return Err(Error::domain(func, format!("rank {k} outside 1..={v}")));
    }
    Ok(())
}

/// Normalising constant `1 / B(k, V - k + 1)` of the `k`-th order statistic.
pub fn order_constant(k: usize, v: usize) -> Result<f64> {
    check_rank("order_constant", k, v)?;
    Ok((-ln_beta(k as f64, (v - k + 1) as f64)).exp())
}

/// Density of the `k`-th smallest of `V` iid unit-mean exponential gains.
pub fn ordered_pdf(x: f64, k: usize, v: usize) -> Result<f64> {
    check_rank("ordered_pdf", k, v)?;
    if !(x >= 0.0) {
        return Err(Error::domain("ordered_pdf", format!("x = {x}; requires x >= 0")));
    }
    let xi = order_constant(k, v)?;
    Ok(ordered_pdf_unchecked(x, k, v, xi))
}

#[inline]
pub(crate) fn ordered_pdf_unchecked(x: f64, k: usize, v: usize, xi: f64) -> f64 {
    let cdf = -(-x).exp_m1();
    xi * cdf.powi(k as i32 - 1) * (-x * (v - k + 1) as f64).exp()
}

/// `Pr{X_(k) > x}` for the `k`-th order statistic, evaluated as a sum of
/// non-negative binomial terms so the far tail keeps full relative accuracy.
pub fn ordered_sf(x: f64, k: usize, v: usize) -> Result<f64> {
    check_rank("ordered_sf", k, v)?;
    if !(x >= 0.0) {
        return Err(Error::domain("ordered_sf", format!("x = {x}; requires x >= 0")));
    }
    // Fewer than k of the V gains fall at or below x.
    let cdf = -(-x).exp_m1();
    let mut sum = 0.0;
    let mut binom = 1.0;
    for j in 0..k {
        if j > 0 {
            binom *= (v - j + 1) as f64 / j as f64;
        }
        sum += binom * cdf.powi(j as i32) * (-x * (v - j) as f64).exp();
    }
    Ok(sum.min(1.0))
}

pub fn ordered_cdf(x: f64, k: usize, v: usize) -> Result<f64> {
    Ok(1.0 - ordered_sf(x, k, v)?)
}

/// Smallest `x` with `Pr{X_(k) > x} <= tail`.
pub fn ordered_upper_quantile(tail: f64, k: usize, v: usize) -> Result<f64> {
    check_rank("ordered_upper_quantile", k, v)?;
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::domain("ordered_upper_quantile", format!("tail = {tail}; requires (0, 1)")));
    }
    let sf = |x: f64| ordered_sf(x, k, v).unwrap_or(0.0);
    let mut hi = 1.0;
    while sf(hi) > tail {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sf(mid) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Mean of the `k`-th order statistic, `sum_{j=V-k+1}^{V} 1/j`.
pub fn ordered_mean(k: usize, v: usize) -> Result<f64> {
    check_rank("ordered_mean", k, v)?;
    Ok((v - k + 1..=v).map(|j| 1.0 / j as f64).sum())
}

/// Weak-user SINR `alpha_t x / (alpha_u x + 1/rho)`; the strong user's signal
/// is treated as interference.
pub fn sinr_weak(x: f64, cfg: &SystemConfig) -> f64 {
    // Written as a chain of monotone operations so rounding cannot break
    // monotonicity in x; x = 0 and x = inf map to 0 and the ceiling.
    cfg.weak.power / (cfg.strong.power + 1.0 / (cfg.snr * x))
}

/// Strong-user SNR `alpha_u rho x` after perfect interference cancellation.
pub fn snr_strong(x: f64, cfg: &SystemConfig) -> f64 {
    cfg.strong.power * cfg.snr * x
}

/// Ordered gains of the two scheduled users from one fading block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSample {
    pub weak: f64,
    pub strong: f64,
}

impl GainSample {
    pub fn get(&self, role: Role) -> f64 {
        match role {
            Role::Weak => self.weak,
            Role::Strong => self.strong,
        }
    }
}

/// Draws the joint pair `(X_(t), X_(u))` by sorting `V` iid exponentials.
#[derive(Debug, Clone)]
pub struct PairSampler {
    t: usize,
    u: usize,
    scratch: Vec<f64>,
}

impl PairSampler {
    pub fn new(cfg: &SystemConfig) -> Self {
        PairSampler {
            t: cfg.weak.rank,
            u: cfg.strong.rank,
            scratch: vec![0.0; cfg.num_users],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> GainSample {
        for g in self.scratch.iter_mut() {
            *g = rng.sample(Exp1);
        }
        self.scratch.sort_unstable_by(f64::total_cmp);
        GainSample {
            weak: self.scratch[self.t - 1],
            strong: self.scratch[self.u - 1],
        }
    }
}

/// One-shot convenience over [`PairSampler`].
pub fn sample_pair<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> GainSample {
    PairSampler::new(cfg).sample(rng)
}
