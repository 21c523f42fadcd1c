//! Finite-blocklength rate and the per-block effective-capacity kernel.
//!
//! With `r` the rate in bits per channel use, a block delivers `n r` bits and
//! the kernel is `eps + (1 - eps) exp(-theta n r)`, written in terms of
//! `zeta = -theta n / (2 ln 2)`, `beta = theta sqrt(n) Qinv(eps)` and the
//! dispersion root `delta` as `eps + (1 - eps) (1 + gamma)^(2 zeta) e^(beta delta)`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::{Role, SystemConfig};
use crate::specfun::gaussian_q_inv;
use crate::{Error, Result};

/// Per-user exponents of the kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub zeta: f64,
    pub beta: f64,
    /// `beta^2 / 2 + beta`.
    pub kappa: f64,
}

impl KernelParams {
    pub fn new(theta: f64, n: u32, eps: f64) -> Result<Self> {
        make_kernel_params(theta, n, eps)
    }

    pub fn for_user(cfg: &SystemConfig, role: Role) -> Result<Self> {
        let p = cfg.user(role);
        make_kernel_params(p.qos_exponent, cfg.blocklength, p.error_prob)
    }
}

pub fn make_kernel_params(theta: f64, n: u32, eps: f64) -> Result<KernelParams> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::domain("make_kernel_params", format!("theta = {theta}; requires theta > 0")));
    }
    if n == 0 {
        return Err(Error::domain("make_kernel_params", "n = 0; requires n >= 1"));
    }
    let qinv = gaussian_q_inv(eps).map_err(|_| Error::domain("make_kernel_params", format!("eps = {eps}; requires 0 < eps < 1")))?;
    let nf = n as f64;
    let zeta = -theta * nf / (2.0 * LN_2);
    let beta = theta * nf.sqrt() * qinv;
    Ok(KernelParams {
        zeta,
        beta,
        kappa: 0.5 * beta * beta + beta,
    })
}

/// `sqrt(1 - (1 + gamma)^-2)`, factored as
/// `sqrt(gamma / (1 + gamma)) sqrt((2 + gamma) / (1 + gamma))` to keep relative
/// accuracy for small `gamma` without overflow for large `gamma`.
pub fn dispersion_root(gamma: f64) -> f64 {
    if gamma.is_infinite() {
        return 1.0;
    }
    let g1 = 1.0 + gamma;
    ((gamma / g1) * ((2.0 + gamma) / g1)).sqrt()
}

/// Normal-approximation rate for a fixed `(n, eps)`; caches `Qinv(eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FblRate {
    sqrt_n: f64,
    qinv: f64,
}

impl FblRate {
    pub fn new(n: u32, eps: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("fbl_rate", "n = 0; requires n >= 1"));
        }
        let qinv = gaussian_q_inv(eps).map_err(|_| Error::domain("fbl_rate", format!("eps = {eps}; requires 0 < eps < 1")))?;
        Ok(FblRate {
            sqrt_n: (n as f64).sqrt(),
            qinv,
        })
    }

    /// `log2(1 + gamma) - delta Qinv(eps) / sqrt(n)`, bits per channel use.
    ///
    /// This is the rate whose `exp(-theta n r)` is the kernel; may be negative.
    #[inline]
    pub fn bits(&self, gamma: f64) -> f64 {
        gamma.ln_1p() / LN_2 - dispersion_root(gamma) * self.qinv / self.sqrt_n
    }

    /// `ln(1 + gamma) - delta Qinv(eps) / sqrt(n)`, nats per channel use.
    #[inline]
    pub fn nats(&self, gamma: f64) -> f64 {
        gamma.ln_1p() - dispersion_root(gamma) * self.qinv / self.sqrt_n
    }
}

/// Rate in bits per channel use; see [`FblRate::bits`].
pub fn fbl_rate(gamma: f64, n: u32, eps: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::domain("fbl_rate", format!("gamma = {gamma}; requires gamma >= 0")));
    }
    Ok(FblRate::new(n, eps)?.bits(gamma))
}

/// Rate in nats per channel use; see [`FblRate::nats`].
pub fn fbl_rate_nats(gamma: f64, n: u32, eps: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::domain("fbl_rate_nats", format!("gamma = {gamma}; requires gamma >= 0")));
    }
    Ok(FblRate::new(n, eps)?.nats(gamma))
}

/// Kernel integrand `eps + (1 - eps) (1 + gamma)^(2 zeta) e^(beta delta)`.
#[inline]
pub fn ec_kernel(gamma: f64, kp: &KernelParams, eps: f64) -> f64 {
    let e = (2.0 * kp.zeta * gamma.ln_1p() + kp.beta * dispersion_root(gamma)).exp();
    eps + (1.0 - eps) * e
}

/// Second-order expansion of the kernel in `beta` with the dispersion root
/// replaced by `1 - (1 + gamma)^-2 / 2`:
/// `eps + (1 - eps) [(1 + gamma)^(2 zeta) (K + 1) - (1 + gamma)^(2 zeta - 2) (K - beta / 2)]`.
///
/// Equals `1 + beta / 2` rather than `1` at `gamma = 0`.
#[inline]
pub fn ec_kernel_approx(gamma: f64, kp: &KernelParams, eps: f64) -> f64 {
    let l = gamma.ln_1p();
    let a = (2.0 * kp.zeta * l).exp();
    let b = ((2.0 * kp.zeta - 2.0) * l).exp();
    eps + (1.0 - eps) * (a * (kp.kappa + 1.0) - b * (kp.kappa - 0.5 * kp.beta))
}

/// Kernel with the rate floored at zero, `eps + (1 - eps) exp(-theta n max(r, 0))`.
#[inline]
pub fn ec_kernel_clamped(gamma: f64, kp: &KernelParams, eps: f64) -> f64 {
    let exponent = 2.0 * kp.zeta * gamma.ln_1p() + kp.beta * dispersion_root(gamma);
    eps + (1.0 - eps) * exponent.min(0.0).exp()
}

/// Which kernel integrand an evaluator averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    #[default]
    Exact,
    Approx,
    Clamped,
}

impl KernelVariant {
    #[inline]
    pub fn eval(self, gamma: f64, kp: &KernelParams, eps: f64) -> f64 {
        match self {
            KernelVariant::Exact => ec_kernel(gamma, kp, eps),
            KernelVariant::Approx => ec_kernel_approx(gamma, kp, eps),
            KernelVariant::Clamped => ec_kernel_clamped(gamma, kp, eps),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KernelVariant::Exact => "exact",
            KernelVariant::Approx => "approx",
            KernelVariant::Clamped => "clamped",
        }
    }
}
