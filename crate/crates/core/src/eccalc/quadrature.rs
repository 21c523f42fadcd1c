//! Quadrature effective capacity: `E[k(gamma(X))]` integrated against the
//! density of the user's ordered gain.

use super::{Diagnostics, EcResult, EvalControls, Method, UserContext};
use crate::channel::{order_constant, ordered_pdf_unchecked, ordered_upper_quantile, Role, SystemConfig};
use crate::fblrate::{KernelParams, KernelVariant};
use crate::quad::{integrate, QuadOptions, Segment};
use crate::{Error, Result};

/// Upper-tail probability at which the bulk of the domain ends.
const BULK_TAIL: f64 = 1e-6;

/// Breakpoints over `[0, x_hi]`: decades down to 1e-8 and around the SNR
/// knee `1 / (alpha_u rho)` where the SINR saturates.
fn breakpoints(cfg: &SystemConfig, x_hi: f64) -> Vec<f64> {
    let knee = 1.0 / (cfg.strong.power * cfg.snr);
    let mut pts: Vec<f64> = (-8..=1).map(|e| 10f64.powi(e)).collect();
    pts.extend((-2..=2).map(|e| knee * 10f64.powi(e)));
    pts.retain(|&p| p > 0.0 && p < x_hi);
    pts.push(0.0);
    pts.push(x_hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `E[f(gamma)]` for `role` by adaptive quadrature over the ordered-gain density.
pub fn expected_value<F>(cfg: &SystemConfig, role: Role, rel_tol: f64, f: F) -> Result<crate::quad::QuadOutcome>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    let v = cfg.num_users;
    let k = cfg.user(role).rank;
    let xi = order_constant(k, v)?;
    let x_hi = ordered_upper_quantile(BULK_TAIL, k, v)?;
    let pts = breakpoints(cfg, x_hi);
    let mut segs: Vec<Segment> = pts.windows(2).map(|w| Segment::Finite { a: w[0], b: w[1] }).collect();
    segs.push(Segment::Tail {
        start: x_hi,
        scale: 1.0 / (v - k + 1) as f64,
    });
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol,
        max_intervals: 20_000,
    };
    let out = integrate(|x| f(cfg.gamma(role, x)) * ordered_pdf_unchecked(x, k, v, xi), &segs, &opts);
    if !out.converged {
        return Err(Error::Convergence {
            what: "ec_quadrature",
            detail: format!("estimate {:e} with error {:e} after {} panels", out.value, out.abs_error, out.intervals),
        });
    }
    Ok(out)
}

/// Quadrature effective capacity for the chosen kernel.
pub fn ec_quadrature(cfg: &SystemConfig, role: Role, ctl: &EvalControls, variant: KernelVariant) -> Result<EcResult> {
    let u = UserContext::new(cfg, role)?;
    ctl.validate()?;
    if u.certain_error() {
        return Ok(EcResult::certain_error(Method::Quadrature));
    }
    let kp = KernelParams::for_user(cfg, role)?;
    let out = expected_value(cfg, role, ctl.quad_rel_tol, |g| variant.eval(g, &kp, u.eps))?;
    let mut d = Diagnostics::default();
    if variant != KernelVariant::Exact {
        d.notes.push(format!("{} kernel", variant.as_str()));
    }
    Ok(EcResult::new(u.capacity(out.value), Method::Quadrature, 0.0, d))
}
