use super::ln_gamma;
use crate::quad::{integrate, segments_with_tail, QuadOptions, Segment};
use crate::{Error, Result};

/// Relative accuracy requested from the quadrature.
const GOAL_REL: f64 = 1e-13;
/// Accuracy below which the result is reported as a convergence failure.
const REQUIRED_REL: f64 = 1e-9;

/// Tricomi confluent hypergeometric function of the second kind,
///
/// ```text
/// U(a, b, z) = 1/Γ(a) ∫_0^∞ e^{-zy} y^{a-1} (1+y)^{b-a-1} dy,   a > 0, z > 0,
/// ```
///
/// evaluated by adaptive quadrature of the integral. `b` may be any real
/// number, including large negative values where the hypergeometric series
/// representations lose all accuracy.
///
/// The domain is split near the initial decay length of the integrand, then
/// geometrically up to `y = 1`, and `[1, ∞)` is mapped onto a finite interval
/// by [`Segment::Tail`]. For `a < 1` the first panel is integrated in
/// `u = y^a`, which removes the endpoint singularity.
pub fn tricomi_u(a: f64, b: f64, z: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain("tricomi_u", format!("a = {a}; requires a > 0")));
    }
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::domain("tricomi_u", format!("z = {z}; requires z > 0")));
    }
    if !b.is_finite() {
        return Err(Error::domain("tricomi_u", format!("b = {b} is not finite")));
    }

    let power = b - a - 1.0;
    let ln_integrand = |y: f64| {
        let mut l = -z * y + power * y.ln_1p();
        if a != 1.0 {
            l += (a - 1.0) * y.ln();
        }
        l
    };
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: GOAL_REL,
        max_intervals: 2000,
    };

    let initial_rate = z + (-power).max(0.0);
    let head_end = (1.0 / initial_rate).min(1.0);

    // Head [0, head_end].
    let head = if a < 1.0 {
        let inv_a = 1.0 / a;
        let g = |u: f64| {
            if u <= 0.0 {
                return inv_a;
            }
            let y = u.powf(inv_a);
            inv_a * (-z * y + power * y.ln_1p()).exp()
        };
        integrate(g, &[Segment::Finite { a: 0.0, b: head_end.powf(a) }], &opts)
    } else {
        let f = |y: f64| if y <= 0.0 { if a == 1.0 { 1.0 } else { 0.0 } } else { ln_integrand(y).exp() };
        integrate(f, &[Segment::Finite { a: 0.0, b: head_end }], &opts)
    };

    // Body [head_end, 1] with geometric breakpoints, then the tail [1, ∞).
    let mut points = vec![head_end];
    let mut p = head_end;
    while p < 1.0 {
        p = (p * 8.0).min(1.0);
        points.push(p);
    }
    let tail_rate = (z + (-power).max(0.0) / 2.0 - (a - 1.0).max(0.0)).max(z);
    let body = integrate(|y: f64| ln_integrand(y).exp(), &segments_with_tail(&points, 1.0 / tail_rate), &opts);

    let value = head.value + body.value;
    let err = head.abs_error + body.abs_error;
    if !value.is_finite() || err > REQUIRED_REL * value.abs() {
        return Err(Error::Convergence {
            what: "tricomi_u",
            detail: format!("a = {a}, b = {b}, z = {z}: estimate {value:e} ± {err:e}"),
        });
    }
    Ok((value.ln() - ln_gamma(a)).exp())
}
