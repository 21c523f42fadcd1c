//! Queue simulation at a fraction of the effective capacity, compared with
//! the exponential delay law.

use std::fmt::Write as _;

use noma_fbl::delay::{delay_violation_prob, DelaySpec};
use noma_fbl::eccalc::evaluate;
use noma_fbl::queuesim::{run_queue_sim, SimSpec, TailFit};
use noma_fbl::{EvalControls, Method, Role, SystemConfig};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueExperiment {
    pub rho_db: f64,
    pub role: Role,
    pub theta: f64,
    pub mu_frac: f64,
    pub blocks: u64,
    pub warmup: u64,
    pub d_max: f64,
    pub blocklength: u32,
    pub error_prob: f64,
    pub seed: u64,
}

impl Default for QueueExperiment {
    fn default() -> Self {
        QueueExperiment {
            rho_db: 20.0,
            role: Role::Strong,
            theta: 0.01,
            mu_frac: 0.95,
            blocks: 5_000_000,
            warmup: 10_000,
            d_max: 400.0,
            blocklength: 400,
            error_prob: 1e-6,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueReport {
    pub role: Role,
    pub rho_db: f64,
    pub theta: f64,
    pub capacity: f64,
    pub arrival_rate: f64,
    pub fitted_slope: Option<f64>,
    pub fitted_std_error: Option<f64>,
    pub fit_points: usize,
    pub delay_violation_freq: f64,
    pub violations: u64,
    pub delay_samples: u64,
    /// `exp(-theta mu d_max)`.
    pub analytic_violation_prob: f64,
    pub nonempty_freq: f64,
    pub mean_queue_bits: f64,
}

impl QueueExperiment {
    pub fn config(&self) -> SystemConfig {
        SystemConfig::reference()
            .with_snr_db(self.rho_db)
            .with_blocklength(self.blocklength)
            .with_error_prob(self.error_prob)
            .with_qos_exponent(self.theta)
    }

    pub fn run(&self) -> anyhow::Result<QueueReport> {
        if !(self.mu_frac > 0.0) {
            anyhow::bail!("mu_frac must be positive, got {}", self.mu_frac);
        }
        let cfg = self.config();
        let ec = evaluate(&cfg, self.role, Method::ClosedForm, &EvalControls::default())?;
        let mu = self.mu_frac * ec.value.max(0.0);
        let stats = run_queue_sim(&SimSpec {
            cfg,
            role: self.role,
            arrival_rate: mu,
            num_blocks: self.blocks,
            warmup_blocks: self.warmup,
            d_max: self.d_max,
            seed: self.seed,
        })?;
        let analytic = delay_violation_prob(
            self.theta,
            &DelaySpec {
                d_max: self.d_max,
                nonempty_prob: 1.0,
                arrival_rate: mu,
            },
        )?;
        let fit: Option<TailFit> = stats.fitted_theta;
        Ok(QueueReport {
            role: self.role,
            rho_db: self.rho_db,
            theta: self.theta,
            capacity: ec.value,
            arrival_rate: mu,
            fitted_slope: fit.map(|f| f.slope),
            fitted_std_error: fit.map(|f| f.std_error),
            fit_points: fit.map_or(0, |f| f.points),
            delay_violation_freq: stats.delay_violation_freq,
            violations: stats.violations,
            delay_samples: stats.delay_samples,
            analytic_violation_prob: analytic,
            nonempty_freq: stats.nonempty_freq,
            mean_queue_bits: stats.mean_queue,
        })
    }
}

impl QueueReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} user at {:.1} dB, theta = {:e} per bit", self.role, self.rho_db, self.theta);
        let _ = writeln!(s, "  effective capacity  {:.6} bits/cu", self.capacity);
        let _ = writeln!(s, "  arrival rate        {:.6} bits/cu", self.arrival_rate);
        match (self.fitted_slope, self.fitted_std_error) {
            (Some(k), Some(se)) => {
                let _ = writeln!(s, "  tail slope          {k:.6} +- {se:.6} per bit ({} points)", self.fit_points);
            }
            _ => {
                let _ = writeln!(s, "  tail slope          unavailable (too few populated thresholds)");
            }
        }
        let _ = writeln!(
            s,
            "  delay violations    {} of {} = {:.4e}",
            self.violations, self.delay_samples, self.delay_violation_freq
        );
        let _ = writeln!(s, "  exponential law     {:.4e}", self.analytic_violation_prob);
        let _ = writeln!(s, "  nonempty fraction   {:.4}", self.nonempty_freq);
        let _ = writeln!(s, "  mean backlog        {:.3} bits", self.mean_queue_bits);
        s
    }
}
