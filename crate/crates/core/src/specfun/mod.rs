//! Special functions: Gaussian tail and its inverse, Gamma/Beta, generalized
//! binomial coefficients, exponential integrals and the Tricomi confluent
//! hypergeometric function `U(a, b, z)`.
//!
//! Everything here is a pure function of its arguments.

mod expint;
mod normal;
mod tricomi;

pub use expint::{e1, e1_scaled, en_scaled, exp_integral_ei};
pub use normal::{gaussian_q, gaussian_q_inv};
pub use tricomi::tricomi_u;

use crate::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `B(a, b) = Γ(a)Γ(b)/Γ(a+b)` for positive arguments.
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::domain("beta_fn", format!("a = {a}, b = {b}; both must be positive")));
    }
    Ok(ln_beta(a, b).exp())
}

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    // Sum the two smaller terms first; symmetric in (a, b) bit for bit.
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    (ln_gamma(lo) + ln_gamma(hi)) - ln_gamma(a + b)
}

/// Sign and natural log of the magnitude of a real number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    /// `1.0`, `-1.0`, or `0.0` for an exact zero.
    pub sign: f64,
    pub ln_abs: f64,
}

impl SignedLog {
    pub fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }
}

/// Generalized binomial coefficient `alpha (alpha-1) ... (alpha-s+1) / s!`
/// in sign/log-magnitude form, so that very large or very small coefficients
/// can be combined with other factors before exponentiation.
pub fn gen_binomial_log(alpha: f64, s: u32) -> SignedLog {
    let mut sign = 1.0;
    let mut ln_abs = 0.0;
    for j in 0..s {
        let f = alpha - j as f64;
        if f == 0.0 {
            return SignedLog {
                sign: 0.0,
                ln_abs: f64::NEG_INFINITY,
            };
        }
        if f < 0.0 {
            sign = -sign;
        }
        ln_abs += f.abs().ln();
    }
    ln_abs -= ln_gamma(s as f64 + 1.0);
    SignedLog { sign, ln_abs }
}

/// Generalized binomial coefficient as a plain number.
///
/// Small cases use the running product `c * (alpha - j) / (j + 1)`, which is
/// exact for integer `alpha`; larger ones go through [`gen_binomial_log`].
pub fn gen_binomial(alpha: f64, s: u32) -> f64 {
    if s <= 60 {
        let mut c = 1.0f64;
        for j in 0..s {
            c = c * (alpha - j as f64) / (j as f64 + 1.0);
            if !c.is_finite() {
                return gen_binomial_log(alpha, s).value();
            }
        }
        c
    } else {
        gen_binomial_log(alpha, s).value()
    }
}
