use super::EULER_GAMMA;
use crate::{Error, Result};

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

/// `E1(y) = ∫_y^∞ e^{-t}/t dt` for `y > 0`, by power series for `y <= 1` and
/// by the Lentz continued fraction otherwise.
pub fn e1(y: f64) -> f64 {
    if y <= 1.0 {
        e1_series(y)
    } else {
        (-y).exp() * en_continued_fraction(1, y)
    }
}

/// `e^y E1(y)`, finite for arbitrarily large `y`.
pub fn e1_scaled(y: f64) -> f64 {
    if y <= 1.0 {
        y.exp() * e1_series(y)
    } else {
        en_continued_fraction(1, y)
    }
}

fn e1_series(y: f64) -> f64 {
    // E1(y) = -γ - ln y - Σ_{k>=1} (-y)^k / (k k!)
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..MAX_ITER {
        let kf = k as f64;
        term *= -y / kf;
        let del = term / kf;
        sum += del;
        if del.abs() < EPS * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - y.ln() - sum
}

/// Continued fraction for `e^x E_n(x)`, `n >= 1`, `x > 0`.
fn en_continued_fraction(n: u32, x: f64) -> f64 {
    let nm1 = n as f64 - 1.0;
    let mut b = x + n as f64;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let a = -(i as f64) * (nm1 + i as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Exponential integral `Ei(x) = -∫_{-x}^∞ e^{-t}/t dt` for `x < 0`.
///
/// Accurate to about 1e-14 relative on `[-700, 0)`. Below about `-708` the
/// result underflows gracefully to subnormals and then to `-0.0`.
pub fn exp_integral_ei(x: f64) -> Result<f64> {
    if !(x < 0.0) {
        return Err(Error::domain("exp_integral_ei", format!("x = {x}; only x < 0 is supported")));
    }
    Ok(-e1(-x))
}

/// Scaled generalized exponential integral `e^x E_n(x)` for integer order
/// `n >= 0` and `x > 0`, where `E_n(x) = ∫_1^∞ e^{-xt} t^{-n} dt`.
pub fn en_scaled(n: u32, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("en_scaled", format!("x = {x}; requires finite x > 0")));
    }
    if n == 0 {
        return Ok(1.0 / x);
    }
    if x > 1.0 {
        return Ok(en_continued_fraction(n, x));
    }
    // Power series with the digamma correction at i = n - 1.
    let nm1 = n as i64 - 1;
    let mut ans = if nm1 != 0 {
        1.0 / nm1 as f64
    } else {
        -x.ln() - EULER_GAMMA
    };
    let mut fact = 1.0;
    for i in 1..MAX_ITER as i64 {
        fact *= -x / i as f64;
        let del = if i != nm1 {
            -fact / (i - nm1) as f64
        } else {
            let psi = -EULER_GAMMA + (1..=nm1).map(|k| 1.0 / k as f64).sum::<f64>();
            fact * (-x.ln() + psi)
        };
        ans += del;
        if del.abs() < ans.abs() * EPS {
            break;
        }
    }
    Ok(x.exp() * ans)
}
