//! Closed-form expectations of the approximate kernel
//! `(1+g)^(2 zeta) (K+1) - (1+g)^(2 zeta - 2) (K - beta/2)`.
//!
//! Strong user: with `g = alpha_u rho x`, binomial expansion of the
//! order-statistic density turns `E[(1+g)^c]` into
//! `xi / (rho alpha_u) sum_i C(u-1, i) (-1)^i U(1, c + 2, eta_i)`,
//! `eta_i = (V - u + 1 + i) / (rho alpha_u)`.
//!
//! Weak user (`alpha_t + alpha_u = 1`): `1 + g = (1 + (alpha_u - 1) / (alpha_u rho z)) / alpha_u`
//! with `z = x + 1 / (alpha_u rho)`, and the binomial series in `1 / z`
//! integrates term by term to
//! `xi alpha_u^-c / (alpha_u rho) sum_r C(t-1, r) (-1)^r sum_s C(c, s) (alpha_u - 1)^s e^eta E_s(eta)`,
//! `eta_r = (V - t + 1 + r) / (rho alpha_u)`.

use super::{BracketForm, Diagnostics, EcResult, EiPrefactor, EvalControls, Method, UserContext};
use crate::channel::{order_constant, Role, SystemConfig};
use crate::eccalc::quadrature::ec_quadrature;
use crate::fblrate::{KernelParams, KernelVariant};
use crate::specfun::{e1_scaled, en_scaled, gen_binomial, ln_gamma, tricomi_u};
use crate::sum::{compensated_sum, NeumaierSum};
use crate::{Error, Result};

/// Effective-capacity truncation error above which an unconverged series
/// is replaced by the approximate-kernel quadrature.
const FALLBACK_BOUND: f64 = 1e-4;

/// Consecutive growing terms that, with an out-of-budget peak, count as divergence.
const GROWTH_RUN: u32 = 10;

/// Signed terms `C(u-1, i) (-1)^i U(1, c + 2, eta_i)` of the strong-user sum.
pub fn strong_moment_terms(cfg: &SystemConfig, c: f64) -> Result<Vec<f64>> {
    let (v, u) = (cfg.num_users, cfg.strong.rank);
    let scale = cfg.snr * cfg.strong.power;
    (0..u)
        .map(|i| {
            let eta = (v - u + 1 + i) as f64 / scale;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            Ok(sign * gen_binomial((u - 1) as f64, i as u32) * tricomi_u(1.0, c + 2.0, eta)?)
        })
        .collect()
}

/// `E[(1 + g_u)^c]` for the strong user.
fn strong_moment(cfg: &SystemConfig, c: f64) -> Result<f64> {
    let xi = order_constant(cfg.strong.rank, cfg.num_users)?;
    let terms = strong_moment_terms(cfg, c)?;
    Ok(xi / (cfg.snr * cfg.strong.power) * compensated_sum(terms))
}

pub fn ec_closed_strong(cfg: &SystemConfig, ctl: &EvalControls) -> Result<EcResult> {
    let u = UserContext::new(cfg, Role::Strong)?;
    ctl.validate()?;
    if u.certain_error() {
        return Ok(EcResult::certain_error(Method::ClosedForm));
    }
    let kp = KernelParams::for_user(cfg, Role::Strong)?;
    let a = strong_moment(cfg, 2.0 * kp.zeta)?;
    let b = strong_moment(cfg, 2.0 * kp.zeta - 2.0)?;
    let mean = u.eps + (1.0 - u.eps) * (a * (kp.kappa + 1.0) - b * (kp.kappa - 0.5 * kp.beta));
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::Convergence {
            what: "ec_closed_strong",
            detail: format!("non-finite or non-positive expectation {mean}"),
        });
    }
    Ok(EcResult::new(u.capacity(mean), Method::ClosedForm, 0.0, Diagnostics::default()))
}

/// Outcome of summing the weak-user series for one exponent `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesOutcome {
    /// `E[(1 + g_t)^c]` from the partial sums.
    pub value: f64,
    /// Bound on the truncated tail of `value`; infinite when no geometric
    /// majorant applies yet.
    pub bound: f64,
    /// Largest order `s` reached, plus one.
    pub terms: u32,
    pub converged: bool,
    pub diverged: bool,
    pub note: Option<String>,
}

/// `e^eta E_s(eta)` as a finite factorial sum plus the `Ei` remainder.
fn bracket_finite_sum(s: u32, eta: f64) -> f64 {
    let ei_part = e1_scaled(eta);
    if s == 1 {
        return ei_part;
    }
    let lf = ln_gamma(s as f64);
    let mut acc = NeumaierSum::new();
    for k in 0..=s - 2 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc.add(sign * (ln_gamma((s - k - 1) as f64) - lf + k as f64 * eta.ln()).exp());
    }
    let sign = if (s - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    acc.add(sign * ((s - 1) as f64 * eta.ln() - lf).exp() * ei_part);
    acc.value()
}

/// Log-magnitude excess over the first term at which summation stops.
const MAX_LN_GROWTH: f64 = 650.0;

/// `E[(1 + g_t)^c]` for the weak user by the series in `1 / z`.
///
/// All branches `r` are summed in lockstep over the order `s` so the stopping
/// test sees the combined value, including cancellation between branches.
/// `first_coeff` stands in for `C(c, 1) = c` at order one.
pub fn weak_moment(cfg: &SystemConfig, c: f64, first_coeff: f64, ctl: &EvalControls) -> Result<SeriesOutcome> {
    let (v, t) = (cfg.num_users, cfg.weak.rank);
    let au = cfg.strong.power;
    let scale = cfg.snr * au;
    let xi = order_constant(t, v)?;
    let ln_pref = xi.ln() - c * au.ln() - scale.ln();
    let ln_q = (1.0 - au).ln();
    let max_terms = ctl.series_max_terms;
    let peak = ((1.0 - au) * (-c) - 1.0) / au;

    let etas: Vec<f64> = (0..t).map(|r| (v - t + 1 + r) as f64 / scale).collect();
    let weights: Vec<f64> = (0..t)
        .map(|r| gen_binomial((t - 1) as f64, r as u32) * if r % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let mut sums = vec![NeumaierSum::new(); t];
    // Common scale: the largest order-zero term, 1 / eta_0.
    let ln_ref = -etas[0].ln();

    // Running C(c, s) as sign and log-magnitude.
    let (mut b_sign, mut b_ln) = (1.0f64, 0.0f64);
    let mut bound_scaled = f64::INFINITY;
    let mut converged = false;
    let mut diverged = false;
    let mut growth = 0u32;
    let mut prev_ln = f64::NEG_INFINITY;
    let mut terms = 0u32;
    let mut note = None;
    let mut ln_a = vec![0.0; t];

    'orders: for s in 0..max_terms {
        if s > 0 {
            let f = c - (s - 1) as f64;
            if f == 0.0 {
                // Non-negative integer exponent: the series terminates.
                converged = true;
                bound_scaled = 0.0;
                break;
            }
            b_sign *= f.signum();
            b_ln += f.abs().ln() - (s as f64).ln();
        }
        let (cs, cl) = if s == 1 { (first_coeff.signum(), first_coeff.abs().ln()) } else { (b_sign, b_ln) };
        let sign = cs * if s % 2 == 0 { 1.0 } else { -1.0 };
        for (r, &eta) in etas.iter().enumerate() {
            let bracket = match (s, ctl.closed_form.bracket) {
                (0, _) => 1.0 / eta,
                (_, BracketForm::ScaledExpint) => en_scaled(s, eta)?,
                (_, BracketForm::FiniteSum) => bracket_finite_sum(s, eta),
            };
            if !(bracket.is_finite() && bracket > 0.0) {
                note = Some(format!("bracket at order {s} evaluated to {bracket:e}"));
                diverged = true;
                break 'orders;
            }
            ln_a[r] = cl + s as f64 * ln_q + bracket.ln();
            if ln_a[r] - ln_ref > MAX_LN_GROWTH {
                note = Some(format!("terms exceeded e^{MAX_LN_GROWTH} times the leading term at order {s}"));
                diverged = true;
                break 'orders;
            }
        }
        for r in 0..t {
            sums[r].add(sign * (ln_a[r] - ln_ref).exp());
        }
        terms = s + 1;

        let top = ln_a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        growth = if top > prev_ln { growth + 1 } else { 0 };
        prev_ln = top;

        if s >= 2 {
            let q = (1.0 - au) * ((s as f64 - c) / (s as f64 + 1.0)).max(1.0);
            if q < 1.0 {
                bound_scaled = weights
                    .iter()
                    .zip(&ln_a)
                    .map(|(w, &l)| w.abs() * (l - ln_ref).exp())
                    .sum::<f64>()
                    * q
                    / (1.0 - q);
                let combined: f64 = weights.iter().zip(&sums).map(|(w, s)| w * s.value()).sum();
                if bound_scaled <= ctl.series_rel_tol * combined.abs() {
                    converged = true;
                    break;
                }
            } else {
                bound_scaled = f64::INFINITY;
            }
        }
        if growth >= GROWTH_RUN && peak > max_terms as f64 {
            diverged = true;
            note = Some(format!(
                "terms grew for {GROWTH_RUN} consecutive orders with peak near order {peak:.0}, beyond the budget of {max_terms}"
            ));
            break;
        }
    }

    let combined = weights
        .iter()
        .zip(&sums)
        .map(|(w, s)| w * s.value())
        .collect::<NeumaierSum>()
        .value();
    let factor = (ln_pref + ln_ref).exp();
    Ok(SeriesOutcome {
        value: combined * factor,
        bound: bound_scaled * factor,
        terms,
        converged,
        diverged,
        note,
    })
}

pub fn ec_closed_weak(cfg: &SystemConfig, ctl: &EvalControls) -> Result<EcResult> {
    let u = UserContext::new(cfg, Role::Weak)?;
    ctl.validate()?;
    if u.certain_error() {
        return Ok(EcResult::certain_error(Method::ClosedForm));
    }
    let sum = cfg.weak.power + cfg.strong.power;
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::domain(
            "ec_closed_weak",
            format!("requires alpha_t + alpha_u = 1, got {sum}"),
        ));
    }
    let kp = KernelParams::for_user(cfg, Role::Weak)?;
    let ca = 2.0 * kp.zeta;
    let cb = ca - 2.0;
    let first_b = match ctl.closed_form.ei_prefactor {
        EiPrefactor::Derived => cb,
        EiPrefactor::SharedWithFirstBlock => ca,
    };
    let a = weak_moment(cfg, ca, ca, ctl)?;
    let b = weak_moment(cfg, cb, first_b, ctl)?;
    let (wa, wb) = (kp.kappa + 1.0, kp.kappa - 0.5 * kp.beta);
    let mean = u.eps + (1.0 - u.eps) * (a.value * wa - b.value * wb);
    let mean_bound = (1.0 - u.eps) * (wa * a.bound + wb.abs() * b.bound);
    let ec_bound = mean_bound / (u.theta * u.n * mean);

    let mut d = Diagnostics {
        series_terms: Some(a.terms.max(b.terms)),
        converged: a.converged && b.converged,
        truncation_bound: if ec_bound.is_nan() { f64::INFINITY } else { ec_bound },
        ..Diagnostics::default()
    };
    d.notes.extend(a.note.iter().chain(&b.note).cloned());

    let usable = mean.is_finite() && mean > 0.0;
    let diverged = a.diverged || b.diverged;
    if diverged || !usable || (!d.converged && !(d.truncation_bound <= FALLBACK_BOUND)) {
        let q = ec_quadrature(cfg, Role::Weak, ctl, KernelVariant::Approx)?;
        d.converged = false;
        d.fallback = true;
        d.notes.push(format!(
            "series {}; reporting the approximate-kernel quadrature value",
            if diverged {
                "diverged"
            } else if !usable {
                "produced a non-positive expectation"
            } else {
                "truncated with a large tail bound"
            }
        ));
        return Ok(EcResult::new(q.value, Method::ClosedForm, 0.0, d));
    }
    if !d.converged {
        d.notes.push(format!("series truncated after {} terms", d.series_terms.unwrap_or(0)));
    }
    Ok(EcResult::new(u.capacity(mean), Method::ClosedForm, 0.0, d))
}
