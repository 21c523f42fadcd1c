use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::{Error, Result};

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

fn ln_gaussian_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * PI).ln()
}

/// Inverse of [`gaussian_q`]: the `x` with `Q(x) = p`.
///
/// Bisection brackets the root to a few digits, then Newton iterations on
/// `ln Q(x) - ln p` polish it; the log form keeps the steps well scaled far
/// into the tail. For `p > 1/2` the symmetry `Q(-x) = 1 - Q(x)` is used.
pub fn gaussian_q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("gaussian_q_inv", format!("p = {p} not in (0, 1)")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return gaussian_q_inv(1.0 - p).map(|x| -x);
    }

    // Q is decreasing; Q(0) = 1/2 >= p and Q(40) underflows below any p.
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if gaussian_q(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let target = p.ln();
    let mut x = 0.5 * (lo + hi);
    for _ in 0..50 {
        let q = gaussian_q(x);
        let resid = q.ln() - target;
        // d/dx ln Q(x) = -phi(x) / Q(x)
        let slope = -(ln_gaussian_pdf(x) - q.ln()).exp();
        let mut next = x - resid / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if gaussian_q(next) > p {
            lo = lo.max(next);
        } else {
            hi = hi.min(next);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: plain bisection on Q computed from statrs' erfc.
    fn bisection_oracle(p: f64) -> f64 {
        let q = |x: f64| 0.5 * statrs::function::erf::erfc(x / 2f64.sqrt());
        let (mut lo, mut hi) = (-40.0f64, 40.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn examples() {
        assert_eq!(gaussian_q_inv(0.5).unwrap(), 0.0);
        let x5 = gaussian_q_inv(1e-5).unwrap();
        let x6 = gaussian_q_inv(1e-6).unwrap();
        assert!((x5 - bisection_oracle(1e-5)).abs() < 1e-10);
        assert!((x6 - bisection_oracle(1e-6)).abs() < 1e-10);
        assert!((x5 - 4.26489).abs() < 1e-5);
        assert!((x6 - 4.75342).abs() < 1e-5);
        assert!(((gaussian_q(x5) - 1e-5) / 1e-5).abs() < 1e-12);
        assert!(((gaussian_q(x6) - 1e-6) / 1e-6).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(gaussian_q_inv(p), Err(Error::Domain { .. })), "p = {p}");
        }
    }

    #[test]
    fn deep_tail() {
        for p in [1e-12, 1e-50, 1e-200] {
            let x = gaussian_q_inv(p).unwrap();
            assert!(((gaussian_q(x) - p) / p).abs() < 1e-12, "p = {p}");
        }
    }

    proptest! {
        #[test]
        fn round_trip(log_p in -12.0f64..0.0, upper in any::<bool>()) {
            let mut p = 10f64.powf(log_p) * 0.5;
            if upper {
                p = 1.0 - p;
            }
            prop_assume!(p > 1e-12 && p < 1.0 - 1e-12);
            let x = gaussian_q_inv(p).unwrap();
            prop_assert!(((gaussian_q(x) - p) / p).abs() < 1e-10);
        }
    }
}
