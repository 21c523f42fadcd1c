//! Monte-Carlo effective capacity.
//!
//! Samples are split into fixed-size chunks; chunk `i` draws from the ChaCha8
//! stream `i` of the configured seed. Chunk moments are merged in chunk order,
//! so results do not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Diagnostics, EcResult, EvalControls, Method, UserContext};
use crate::channel::{PairSampler, Role, SystemConfig};
use crate::fblrate::{KernelParams, KernelVariant};
use crate::{Error, Result};

pub const MC_CHUNK: u64 = 65_536;

/// Running count, mean and centred second moment.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = self.count + other.count;
        let (na, nb) = (self.count as f64, other.count as f64);
        let d = other.mean - self.mean;
        Moments {
            count: n,
            mean: self.mean + d * nb / n as f64,
            m2: self.m2 + other.m2 + d * d * na * nb / n as f64,
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Sample moments of `f(gamma)` over `ctl.mc_samples` fading draws for `role`.
pub fn monte_carlo_mean<F>(cfg: &SystemConfig, role: Role, ctl: &EvalControls, f: F) -> Result<Moments>
where
    F: Fn(f64) -> f64 + Sync,
{
    cfg.validate()?;
    ctl.validate()?;
    let total = ctl.mc_samples;
    let chunks = total.div_ceil(MC_CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(ctl.seed);
            rng.set_stream(i);
            let mut sampler = PairSampler::new(cfg);
            let len = MC_CHUNK.min(total - i * MC_CHUNK);
            let mut m = Moments::default();
            for _ in 0..len {
                let g = sampler.sample(&mut rng);
                m.push(f(cfg.gamma(role, g.get(role))));
            }
            m
        })
        .collect();
    Ok(parts.iter().fold(Moments::default(), |acc, m| acc.merge(m)))
}

/// Monte-Carlo effective capacity with the exact kernel.
pub fn ec_monte_carlo(cfg: &SystemConfig, role: Role, ctl: &EvalControls) -> Result<EcResult> {
    ec_monte_carlo_with(cfg, role, ctl, KernelVariant::Exact)
}

/// Monte-Carlo effective capacity; the standard error is propagated through
/// the logarithm by the delta method.
pub fn ec_monte_carlo_with(cfg: &SystemConfig, role: Role, ctl: &EvalControls, variant: KernelVariant) -> Result<EcResult> {
    let u = UserContext::new(cfg, role)?;
    ctl.validate()?;
    if u.certain_error() {
        return Ok(EcResult::certain_error(Method::MonteCarlo));
    }
    let kp = KernelParams::for_user(cfg, role)?;
    let m = monte_carlo_mean(cfg, role, ctl, |g| variant.eval(g, &kp, u.eps))?;
    if !(m.mean.is_finite() && m.mean > 0.0) {
        return Err(Error::Convergence {
            what: "ec_monte_carlo",
            detail: format!("non-finite or non-positive kernel mean {}", m.mean),
        });
    }
    let value = u.capacity(m.mean);
    let se = m.std_error() / (m.mean * u.theta * u.n);
    let mut d = Diagnostics::default();
    if variant != KernelVariant::Exact {
        d.notes.push(format!("{} kernel", variant.as_str()));
    }
    Ok(EcResult::new(value, Method::MonteCarlo, se, d))
}
