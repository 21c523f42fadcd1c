use noma_fbl::channel::{ordered_mean, PairSampler};
use noma_fbl::eccalc::{ec_monte_carlo, ec_quadrature, evaluate, monte_carlo_mean, Moments};
use noma_fbl::fblrate::{ec_kernel, ec_kernel_approx, FblRate};
use noma_fbl::{EvalControls, KernelParams, KernelVariant, Method, Role, SystemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fig3() -> SystemConfig {
    SystemConfig::reference()
}

fn ctl(samples: u64, seed: u64) -> EvalControls {
    EvalControls {
        mc_samples: samples,
        seed,
        ..Default::default()
    }
}

#[test]
fn strong_gain_mean_over_a_million_draws() {
    let cfg = fig3();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut s = PairSampler::new(&cfg);
    let mut m = Moments::default();
    for _ in 0..1_000_000 {
        m.push(s.sample(&mut rng).strong);
    }
    let expect = ordered_mean(8, 10).unwrap();
    assert!((expect - 1.428_968).abs() < 1e-6);
    assert!((m.mean - expect).abs() < 3.0 * m.std_error(), "{} vs {expect}", m.mean);
}

#[test]
fn small_exponent_recovers_mean_rate() {
    let cfg = fig3().with_qos_exponent(1e-6);
    let c = ctl(1_000_000, 11);
    for role in Role::ALL {
        let ec = ec_monte_carlo(&cfg, role, &c).unwrap();
        let rate = FblRate::new(cfg.blocklength, cfg.user(role).error_prob).unwrap();
        let r = monte_carlo_mean(&cfg, role, &c, |g| rate.bits(g)).unwrap();
        assert!(
            (ec.value - r.mean).abs() < 2.0 * r.std_error(),
            "{role}: {} vs {} +- {}",
            ec.value,
            r.mean,
            r.std_error()
        );
    }
}

#[test]
fn monte_carlo_agrees_with_quadrature_at_twenty_db() {
    let cfg = fig3();
    let c = ctl(1_000_000, 3);
    for role in Role::ALL {
        let mc = ec_monte_carlo(&cfg, role, &c).unwrap();
        let q = ec_quadrature(&cfg, role, &c, KernelVariant::Exact).unwrap();
        assert!((mc.value - q.value).abs() < 3.0 * mc.std_error, "{role}: {} vs {}", mc.value, q.value);
    }
}

#[test]
fn monte_carlo_agrees_with_quadrature_at_random_configs() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in 0..10 {
        let v = rng.random_range(3..=12usize);
        let t = rng.random_range(1..v);
        let u = rng.random_range(t + 1..=v);
        let au = rng.random_range(0.05..0.45);
        let cfg = SystemConfig::reference()
            .with_ranks(v, t, u)
            .with_powers(1.0 - au, au)
            .with_snr_db(rng.random_range(0.0..35.0))
            .with_blocklength(rng.random_range(100..600))
            .with_error_prob(10f64.powf(rng.random_range(-7.0..-2.0)))
            .with_qos_exponent(10f64.powf(rng.random_range(-3.5..-1.0)));
        let c = ctl(200_000, k);
        for role in Role::ALL {
            let mc = ec_monte_carlo(&cfg, role, &c).unwrap();
            let q = ec_quadrature(&cfg, role, &c, KernelVariant::Exact).unwrap();
            // A kernel pinned at eps yields zero sample variance.
            assert!(
                (mc.value - q.value).abs() <= 4.0 * mc.std_error + 1e-12 * q.value.abs(),
                "config {k} {role}: {} vs {} (se {})",
                mc.value,
                q.value,
                mc.std_error
            );
        }
    }
}

#[test]
fn closed_forms_match_approximate_kernel_quadrature() {
    let c = EvalControls::default();
    for db in [0.0, 10.0, 20.0, 30.0, 40.0] {
        let cfg = fig3().with_snr_db(db);
        let strong = evaluate(&cfg, Role::Strong, Method::ClosedForm, &c).unwrap();
        let qs = ec_quadrature(&cfg, Role::Strong, &c, KernelVariant::Approx).unwrap();
        assert!(((strong.value - qs.value) / qs.value).abs() < 1e-6, "{db} dB strong");

        let weak = evaluate(&cfg, Role::Weak, Method::ClosedForm, &c).unwrap();
        let qw = ec_quadrature(&cfg, Role::Weak, &c, KernelVariant::Approx).unwrap();
        assert!(weak.diagnostics.converged && !weak.diagnostics.fallback);
        let tol = weak.diagnostics.truncation_bound.max(1e-4);
        assert!((weak.value - qw.value).abs() < tol, "{db} dB weak");
    }
}

#[test]
fn weak_user_stays_below_interference_ceiling() {
    let cfg = fig3().with_snr_db(60.0);
    let c = EvalControls::default();
    let kp = KernelParams::for_user(&cfg, Role::Weak).unwrap();
    let (eps, tn) = (cfg.weak.error_prob, cfg.weak.qos_exponent * cfg.blocklength as f64);
    let ceiling = cfg.weak_sinr_ceiling();
    let exact_limit = -ec_kernel(ceiling, &kp, eps).ln() / tn;
    let approx_limit = -ec_kernel_approx(ceiling, &kp, eps).ln() / tn;
    let q = ec_quadrature(&cfg, Role::Weak, &c, KernelVariant::Exact).unwrap();
    let closed = evaluate(&cfg, Role::Weak, Method::ClosedForm, &c).unwrap();
    assert!(q.value <= exact_limit + 1e-3);
    assert!(closed.value <= approx_limit + 1e-3);
    assert!(q.value <= (1.0 + ceiling).log2());
}

#[test]
fn capacity_non_decreasing_in_snr() {
    let c = ctl(200_000, 5);
    for role in Role::ALL {
        for method in Method::ALL {
            let mut prev = f64::NEG_INFINITY;
            for step in 0..=20 {
                let cfg = fig3().with_snr_db(2.0 * step as f64);
                let v = evaluate(&cfg, role, method, &c).unwrap().value;
                assert!(v >= prev, "{role} {method} at {} dB", 2 * step);
                prev = v;
            }
        }
    }
}

#[test]
fn capacity_non_increasing_in_exponent() {
    let c = ctl(200_000, 5);
    let base = fig3().with_blocklength(400).with_error_prob(1e-6).with_snr_db(15.0);
    for role in Role::ALL {
        for method in Method::ALL {
            let mut prev = f64::INFINITY;
            for i in 0..30 {
                let theta = 10f64.powf(-4.0 + 4.0 * i as f64 / 29.0);
                let v = evaluate(&base.with_qos_exponent(theta), role, method, &c).unwrap().value;
                assert!(v <= prev, "{role} {method} at theta {theta}");
                prev = v;
            }
        }
    }
}
