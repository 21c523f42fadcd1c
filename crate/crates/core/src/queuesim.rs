//! Block-fading fluid queue.
//!
//! Each block of `n` channel uses starts with `mu n` bits arriving; the
//! service process then offers `S` bits, drained at the constant rate `S / n`
//! during the block. A failed block offers nothing and its bits stay queued.
//! Quantities are kept in integer micro-bits so that flow conservation holds
//! exactly.
//!
//! Statistics: the end-of-block backlog feeds a tail histogram, and the
//! sojourn time of the last bit of every block's arrivals is compared with
//! the delay bound.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{PairSampler, Role, SystemConfig};
use crate::fblrate::FblRate;
use crate::{Error, Result};

/// Micro-bits per bit.
pub const UNITS_PER_BIT: f64 = 1e6;

/// Minimum hits for a threshold to enter the tail fit.
pub const MIN_FIT_HITS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSpec {
    pub cfg: SystemConfig,
    pub role: Role,
    /// Bits per channel use.
    pub arrival_rate: f64,
    pub num_blocks: u64,
    pub warmup_blocks: u64,
    /// Channel uses.
    pub d_max: f64,
    pub seed: u64,
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if self.num_blocks <= self.warmup_blocks {
            return Err(Error::InvalidConfig(format!(
                "num_blocks ({}) must exceed warmup_blocks ({})",
                self.num_blocks, self.warmup_blocks
            )));
        }
        if !(self.arrival_rate >= 0.0 && self.arrival_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("arrival_rate must be non-negative, got {}", self.arrival_rate)));
        }
        if !(self.d_max >= 0.0) {
            return Err(Error::InvalidConfig(format!("d_max must be non-negative, got {}", self.d_max)));
        }
        Ok(())
    }
}

/// Bits a block can deliver.
pub trait ServiceProcess {
    /// Bits delivered if the queue holds enough; 0 on a decoding failure.
    fn next_block(&mut self, rng: &mut ChaCha8Rng) -> f64;
}

/// Service of one NOMA user over i.i.d. fading blocks: `n max(r, 0)` bits
/// with probability `1 - eps`, else nothing.
#[derive(Debug, Clone)]
pub struct FadingService {
    cfg: SystemConfig,
    role: Role,
    sampler: PairSampler,
    rate: Option<FblRate>,
    eps: f64,
}

impl FadingService {
    pub fn new(cfg: &SystemConfig, role: Role) -> Result<Self> {
        cfg.validate()?;
        let eps = cfg.user(role).error_prob;
        let rate = if eps < 1.0 { Some(FblRate::new(cfg.blocklength, eps)?) } else { None };
        Ok(FadingService {
            cfg: *cfg,
            role,
            sampler: PairSampler::new(cfg),
            rate,
            eps,
        })
    }
}

impl ServiceProcess for FadingService {
    fn next_block(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let g = self.sampler.sample(rng);
        let failed = rng.random::<f64>() < self.eps;
        match self.rate {
            Some(rate) if !failed => {
                let gamma = self.cfg.gamma(self.role, g.get(self.role));
                self.cfg.blocklength as f64 * rate.bits(gamma).max(0.0)
            }
            _ => 0.0,
        }
    }
}

/// The same number of bits every block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantService {
    pub bits_per_block: f64,
}

impl ServiceProcess for ConstantService {
    fn next_block(&mut self, _rng: &mut ChaCha8Rng) -> f64 {
        self.bits_per_block
    }
}

/// Empirical `Pr{Q > x}` at fixed thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct TailHistogram {
    /// Bits, ascending.
    pub thresholds: Vec<f64>,
    /// Samples strictly above each threshold.
    pub hits: Vec<u64>,
    pub samples: u64,
}

impl TailHistogram {
    pub fn new(thresholds: Vec<f64>) -> Self {
        let hits = vec![0; thresholds.len()];
        TailHistogram {
            thresholds,
            hits,
            samples: 0,
        }
    }

    /// Log-spaced thresholds, `per_decade` per factor of ten from `lo` to `hi` bits.
    pub fn log_spaced(lo: f64, hi: f64, per_decade: u32) -> Self {
        let decades = (hi / lo).log10();
        let count = (decades * per_decade as f64).round() as u32;
        let thresholds = (0..=count)
            .map(|i| lo * 10f64.powf(i as f64 / per_decade as f64))
            .collect();
        Self::new(thresholds)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.samples.max(1) as f64;
        self.hits.iter().map(|&h| h as f64 / n).collect()
    }
}

impl Default for TailHistogram {
    fn default() -> Self {
        Self::log_spaced(1.0, 1e7, 8)
    }
}

/// Least-squares slope of `-ln Pr{Q > x}` against `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    /// Per bit.
    pub slope: f64,
    pub std_error: f64,
    pub points: usize,
}

pub fn fit_tail_exponent(hist: &TailHistogram) -> Result<TailFit> {
    let pts: Vec<(f64, f64)> = hist
        .thresholds
        .iter()
        .zip(&hist.hits)
        .filter(|(_, &h)| h >= MIN_FIT_HITS)
        .map(|(&x, &h)| (x, -(h as f64 / hist.samples as f64).ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "{} thresholds with at least {MIN_FIT_HITS} hits; need 5",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("qualifying thresholds do not vary".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(TailFit {
        slope,
        std_error: (ssr / (m - 2.0) / sxx).sqrt(),
        points: pts.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueStats {
    pub tail: TailHistogram,
    /// Fraction of measured blocks whose last arriving bit waited longer than `d_max`.
    pub delay_violation_freq: f64,
    pub violations: u64,
    /// Blocks whose delay outcome is known.
    pub delay_samples: u64,
    /// `None` when the histogram has too few populated thresholds.
    pub fitted_theta: Option<TailFit>,
    /// Bits.
    pub mean_queue: f64,
    /// Fraction of measured blocks ending with a non-empty queue.
    pub nonempty_freq: f64,
}

/// Integer bookkeeping of one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRecord {
    pub queue_before: u128,
    pub arrivals: u128,
    pub offered: u128,
    pub delivered: u128,
    pub queue_after: u128,
}

fn to_units(bits: f64) -> u128 {
    (bits * UNITS_PER_BIT).round().max(0.0) as u128
}

struct Queue {
    n: f64,
    arrivals: u128,
    backlog: u128,
    cum_arrivals: u128,
    cum_departures: u128,
    /// `(arrival block, cumulative arrivals through it)` not yet departed.
    pending: VecDeque<(u64, u128)>,
}

impl Queue {
    fn new(n: u32, arrival_rate: f64) -> Self {
        Queue {
            n: n as f64,
            arrivals: to_units(arrival_rate * n as f64),
            backlog: 0,
            cum_arrivals: 0,
            cum_departures: 0,
            pending: VecDeque::new(),
        }
    }

    /// Advances one block; `on_departure(arrival_block, sojourn)` fires for
    /// every block whose last bit leaves during this block.
    fn step(&mut self, block: u64, offered_bits: f64, mut on_departure: impl FnMut(u64, f64)) -> BlockRecord {
        let queue_before = self.backlog;
        if self.arrivals > 0 {
            self.cum_arrivals += self.arrivals;
            self.pending.push_back((block, self.cum_arrivals));
        }
        let offered = to_units(offered_bits);
        let available = self.backlog + self.arrivals;
        let delivered = offered.min(available);
        let before = self.cum_departures;
        self.cum_departures += delivered;
        self.backlog = available - delivered;
        while let Some(&(k, target)) = self.pending.front() {
            if target > self.cum_departures {
                break;
            }
            let within = (target - before) as f64 * self.n / offered as f64;
            on_departure(k, (block - k) as f64 * self.n + within);
            self.pending.pop_front();
        }
        BlockRecord {
            queue_before,
            arrivals: self.arrivals,
            offered,
            delivered,
            queue_after: self.backlog,
        }
    }
}

/// Per-block integer records for `blocks` blocks, for conservation checks.
pub fn run_queue_trace<S: ServiceProcess>(spec: &SimSpec, service: &mut S, blocks: u64) -> Result<Vec<BlockRecord>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut q = Queue::new(spec.cfg.blocklength, spec.arrival_rate);
    Ok((0..blocks).map(|j| q.step(j, service.next_block(&mut rng), |_, _| {})).collect())
}

/// Simulates the user's fading service.
pub fn run_queue_sim(spec: &SimSpec) -> Result<QueueStats> {
    let mut service = FadingService::new(&spec.cfg, spec.role)?;
    run_queue_sim_with(spec, &mut service, TailHistogram::default())
}

pub fn run_queue_sim_with<S: ServiceProcess>(spec: &SimSpec, service: &mut S, mut tail: TailHistogram) -> Result<QueueStats> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut q = Queue::new(spec.cfg.blocklength, spec.arrival_rate);
    let units: Vec<u128> = tail.thresholds.iter().map(|&x| to_units(x)).collect();
    // counts[i]: samples exceeding exactly the first i thresholds.
    let mut counts = vec![0u64; units.len() + 1];
    let (mut violations, mut delay_samples) = (0u64, 0u64);
    let mut queue_sum = 0u128;
    let mut nonempty = 0u64;
    let warmup = spec.warmup_blocks;

    for j in 0..spec.num_blocks {
        let offered = service.next_block(&mut rng);
        let rec = q.step(j, offered, |k, sojourn| {
            if k >= warmup {
                delay_samples += 1;
                if sojourn > spec.d_max {
                    violations += 1;
                }
            }
        });
        if j >= warmup {
            let b = rec.queue_after;
            counts[units.partition_point(|&u| u < b)] += 1;
            queue_sum += b;
            nonempty += (b > 0) as u64;
        }
    }
    // Bits still queued at the end whose wait already exceeds the bound.
    let end = spec.num_blocks as f64 * q.n;
    for &(k, _) in &q.pending {
        if k >= warmup && end - k as f64 * q.n > spec.d_max {
            delay_samples += 1;
            violations += 1;
        }
    }

    let measured = spec.num_blocks - warmup;
    let mut above = 0u64;
    for i in (0..units.len()).rev() {
        above += counts[i + 1];
        tail.hits[i] = above;
    }
    tail.samples = measured;
    let fitted_theta = fit_tail_exponent(&tail).ok();
    Ok(QueueStats {
        delay_violation_freq: if delay_samples > 0 { violations as f64 / delay_samples as f64 } else { 0.0 },
        violations,
        delay_samples,
        fitted_theta,
        mean_queue: queue_sum as f64 / measured as f64 / UNITS_PER_BIT,
        nonempty_freq: nonempty as f64 / measured as f64,
        tail,
    })
}

/// Independent replications, one per seed, returned in seed order.
pub fn run_replications(spec: &SimSpec, seeds: &[u64]) -> Result<Vec<QueueStats>> {
    seeds
        .par_iter()
        .map(|&seed| run_queue_sim(&SimSpec { seed, ..*spec }))
        .collect()
}
