//! Queueing-delay violation probability `Pr{D > D_max} ~ p exp(-theta mu D_max)`.
//!
//! `theta` is per bit and `mu` in bits per channel use, so `theta mu D_max`
//! is dimensionless with `D_max` in channel uses. Evaluated at
//! `mu = C(theta)` the probability never falls below `eps^(D_max / n)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{Role, SystemConfig};
use crate::eccalc::{self, EcResult, EvalControls};
use crate::fblrate::KernelVariant;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaySpec {
    /// Delay bound in channel uses.
    pub d_max: f64,
    /// `Pr{Q > 0}`, in `(0, 1]`.
    pub nonempty_prob: f64,
    /// Bits per channel use.
    pub arrival_rate: f64,
}

impl DelaySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_max >= 0.0 && self.d_max.is_finite()) {
            return Err(Error::InvalidConfig(format!("d_max must be non-negative, got {}", self.d_max)));
        }
        if !(self.nonempty_prob > 0.0 && self.nonempty_prob <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "nonempty_prob must lie in (0, 1], got {}",
                self.nonempty_prob
            )));
        }
        if !(self.arrival_rate >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "arrival_rate must be non-negative, got {}",
                self.arrival_rate
            )));
        }
        Ok(())
    }
}

pub fn delay_violation_prob(theta: f64, spec: &DelaySpec) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::domain("delay_violation_prob", format!("theta = {theta}; requires theta > 0")));
    }
    spec.validate()?;
    Ok(spec.nonempty_prob * (-theta * spec.arrival_rate * spec.d_max).exp())
}

/// Arrival rate used at each exponent of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalRate {
    /// `mu = C(theta)`, the largest rate the exponent supports.
    #[default]
    EffectiveCapacity,
    /// A constant rate in bits per channel use.
    Fixed(f64),
}

/// Evaluator supplying `C(theta)` for a curve.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacitySource {
    #[default]
    ClosedForm,
    Quadrature(KernelVariant),
    MonteCarlo(KernelVariant),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveOptions {
    pub d_max: f64,
    pub nonempty_prob: f64,
    pub arrival: ArrivalRate,
    pub source: CapacitySource,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            d_max: 400.0,
            nonempty_prob: 1.0,
            arrival: ArrivalRate::EffectiveCapacity,
            source: CapacitySource::ClosedForm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub theta: f64,
    pub capacity: EcResult,
    pub arrival_rate: f64,
    pub probability: f64,
}

pub fn capacity_at(cfg: &SystemConfig, role: Role, source: CapacitySource, ctl: &EvalControls) -> Result<EcResult> {
    match source {
        CapacitySource::ClosedForm => eccalc::evaluate(cfg, role, eccalc::Method::ClosedForm, ctl),
        CapacitySource::Quadrature(k) => eccalc::ec_quadrature(cfg, role, ctl, k),
        CapacitySource::MonteCarlo(k) => eccalc::ec_monte_carlo_with(cfg, role, ctl, k),
    }
}

/// Violation probability of `role` over an ascending grid of exponents; the
/// exponent is applied to the user in question only.
pub fn delay_violation_curve(
    cfg: &SystemConfig,
    role: Role,
    thetas: &[f64],
    opts: &CurveOptions,
    ctl: &EvalControls,
) -> Result<Vec<CurvePoint>> {
    if thetas.is_empty() {
        return Err(Error::InvalidConfig("empty theta grid".into()));
    }
    if thetas.iter().any(|&t| !(t > 0.0)) || thetas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("theta grid must be positive and strictly ascending".into()));
    }
    thetas
        .par_iter()
        .map(|&theta| {
            let mut c = *cfg;
            c.user_mut(role).qos_exponent = theta;
            let capacity = capacity_at(&c, role, opts.source, ctl)?;
            let mu = match opts.arrival {
                ArrivalRate::EffectiveCapacity => capacity.value.max(0.0),
                ArrivalRate::Fixed(mu) => mu,
            };
            let spec = DelaySpec {
                d_max: opts.d_max,
                nonempty_prob: opts.nonempty_prob,
                arrival_rate: mu,
            };
            Ok(CurvePoint {
                theta,
                probability: delay_violation_prob(theta, &spec)?,
                arrival_rate: mu,
                capacity,
            })
        })
        .collect()
}

/// Large-exponent limit `p eps^(D_max / n)` of the curve at `mu = C(theta)`.
pub fn violation_floor(eps: f64, d_max: f64, n: u32, nonempty_prob: f64) -> f64 {
    nonempty_prob * eps.powf(d_max / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(d_max: f64, p: f64, mu: f64) -> DelaySpec {
        DelaySpec {
            d_max,
            nonempty_prob: p,
            arrival_rate: mu,
        }
    }

    #[test]
    fn saturates_without_service_or_delay() {
        assert_eq!(delay_violation_prob(0.3, &spec(400.0, 0.7, 0.0)).unwrap(), 0.7);
        assert_eq!(delay_violation_prob(0.3, &spec(0.0, 0.7, 2.0)).unwrap(), 0.7);
    }

    #[test]
    fn domain_errors() {
        assert!(delay_violation_prob(0.0, &spec(1.0, 1.0, 1.0)).is_err());
        assert!(delay_violation_prob(0.1, &spec(1.0, 0.0, 1.0)).is_err());
        assert!(delay_violation_prob(0.1, &spec(-1.0, 1.0, 1.0)).is_err());
        assert!(delay_violation_prob(0.1, &spec(1.0, 1.0, -1.0)).is_err());
    }

    #[test]
    fn strictly_between_floor_and_one_at_moderate_exponent() {
        let cfg = SystemConfig::reference().with_blocklength(400).with_error_prob(1e-6);
        let pts = delay_violation_curve(&cfg, Role::Strong, &[0.01], &CurveOptions::default(), &EvalControls::default()).unwrap();
        let p = pts[0].probability;
        assert!(p > violation_floor(1e-6, 400.0, 400, 1.0) && p < 1.0, "{p}");
    }

    #[test]
    fn floor_at_large_exponent() {
        let cfg = SystemConfig::reference().with_blocklength(400).with_error_prob(1e-6);
        let floor = violation_floor(1e-6, 400.0, 400, 1.0);
        let pts = delay_violation_curve(&cfg, Role::Strong, &[10.0], &CurveOptions::default(), &EvalControls::default()).unwrap();
        let p = pts[0].probability;
        assert!(p >= 0.5 * floor && p <= 2.0 * floor, "{p}");
    }

    #[test]
    fn grid_must_ascend() {
        let cfg = SystemConfig::reference();
        let o = CurveOptions::default();
        let c = EvalControls::default();
        assert!(delay_violation_curve(&cfg, Role::Weak, &[], &o, &c).is_err());
        assert!(delay_violation_curve(&cfg, Role::Weak, &[0.1, 0.01], &o, &c).is_err());
    }

    #[test]
    fn fixed_arrival_rate() {
        let cfg = SystemConfig::reference();
        let o = CurveOptions {
            arrival: ArrivalRate::Fixed(1.0),
            d_max: 100.0,
            ..Default::default()
        };
        let pts = delay_violation_curve(&cfg, Role::Strong, &[0.01, 0.02], &o, &EvalControls::default()).unwrap();
        assert!((pts[0].probability - (-1.0f64).exp()).abs() < 1e-15);
        assert!((pts[1].probability - (-2.0f64).exp()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn decreasing_and_bounded(
            theta in 1e-4f64..0.2, mu in 1e-3f64..8.0, d in 1.0f64..400.0, p in 0.01f64..1.0, k in 1.01f64..3.0,
        ) {
            // Keep the exponent inside the normal range of f64.
            prop_assume!(theta * mu * d * k < 700.0);
            let base = delay_violation_prob(theta, &spec(d, p, mu)).unwrap();
            prop_assert!(base > 0.0 && base <= p);
            let more_mu = delay_violation_prob(theta, &spec(d, p, mu * k)).unwrap();
            let more_d = delay_violation_prob(theta, &spec(d * k, p, mu)).unwrap();
            prop_assert!(more_mu < base);
            prop_assert!(more_d < base);
        }
    }
}
