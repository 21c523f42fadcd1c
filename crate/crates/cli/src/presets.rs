//! Parameter sets for the four reference figures.
//!
//! Grid densities are reconstructions: SNR from 0 to 40 dB in 2 dB steps and
//! 30 log-spaced exponents from 1e-4 to 1.

use std::path::PathBuf;

use anyhow::bail;
use noma_fbl::{EvalControls, Method, Role, SystemConfig};

use crate::sweep::{linspace_step, logspace, Axis, DelayColumn, Scenario, SweepSpec};

pub const PRESETS: [&str; 4] = ["fig3", "fig4", "fig5", "fig6"];

fn delay_base(db: f64) -> SystemConfig {
    SystemConfig::reference()
        .with_blocklength(400)
        .with_error_prob(1e-6)
        .with_snr_db(db)
}

fn theta_sweep(name: &str, dbs: &[f64], roles: Vec<Role>, delay: Option<DelayColumn>) -> SweepSpec {
    SweepSpec {
        scenarios: dbs
            .iter()
            .map(|&db| Scenario {
                id: format!("{name}_rho{db}dB"),
                base: delay_base(db),
            })
            .collect(),
        axis: Axis::Theta,
        grid: logspace(1e-4, 1.0, 30),
        roles,
        methods: vec![Method::ClosedForm, Method::MonteCarlo],
        controls: EvalControls::default(),
        delay,
        output_path: PathBuf::from(format!("{name}.csv")),
    }
}

pub fn figure_preset(name: &str) -> anyhow::Result<SweepSpec> {
    let delay = Some(DelayColumn {
        d_max: 400.0,
        nonempty_prob: 1.0,
    });
    Ok(match name {
        "fig3" => SweepSpec {
            scenarios: vec![Scenario {
                id: "fig3".into(),
                base: SystemConfig::reference(),
            }],
            axis: Axis::RhoDb,
            grid: linspace_step(0.0, 40.0, 2.0),
            roles: Role::ALL.to_vec(),
            methods: vec![Method::ClosedForm, Method::MonteCarlo],
            controls: EvalControls::default(),
            delay: None,
            output_path: PathBuf::from("fig3.csv"),
        },
        "fig4" => theta_sweep("fig4", &[15.0, 20.0], Role::ALL.to_vec(), None),
        "fig5" => theta_sweep("fig5", &[15.0, 20.0, 25.0], vec![Role::Strong], delay),
        "fig6" => theta_sweep("fig6", &[15.0, 20.0, 25.0], vec![Role::Weak], delay),
        other => bail!("unknown preset {other:?}; expected one of {}", PRESETS.join(", ")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_system(cfg: &SystemConfig, n: u32, eps: f64, theta: Option<f64>) {
        assert_eq!((cfg.num_users, cfg.weak.rank, cfg.strong.rank), (10, 2, 8));
        assert_eq!((cfg.weak.power, cfg.strong.power), (0.8, 0.2));
        assert_eq!(cfg.blocklength, n);
        for u in [cfg.weak, cfg.strong] {
            assert_eq!(u.error_prob, eps);
            if let Some(t) = theta {
                assert_eq!(u.qos_exponent, t);
            }
        }
    }

    #[test]
    fn fig3_parameters() {
        let s = figure_preset("fig3").unwrap();
        assert_eq!(s.axis, Axis::RhoDb);
        assert_eq!(s.grid.len(), 21);
        assert_eq!((s.grid[0], s.grid[20]), (0.0, 40.0));
        check_system(&s.scenarios[0].base, 300, 1e-5, Some(0.01));
        assert_eq!(s.roles.len(), 2);
        assert_eq!(s.methods, vec![Method::ClosedForm, Method::MonteCarlo]);
        assert!(s.delay.is_none());
        s.validate().unwrap();
    }

    #[test]
    fn fig4_parameters() {
        let s = figure_preset("fig4").unwrap();
        assert_eq!(s.axis, Axis::Theta);
        assert_eq!(s.grid.len(), 30);
        let dbs: Vec<f64> = s.scenarios.iter().map(|c| c.base.snr_db()).collect();
        assert!((dbs[0] - 15.0).abs() < 1e-12 && (dbs[1] - 20.0).abs() < 1e-12 && dbs.len() == 2);
        for c in &s.scenarios {
            check_system(&c.base, 400, 1e-6, None);
        }
        s.validate().unwrap();
    }

    #[test]
    fn fig5_and_fig6_differ_only_in_role() {
        let a = figure_preset("fig5").unwrap();
        let b = figure_preset("fig6").unwrap();
        assert_eq!(a.roles, vec![Role::Strong]);
        assert_eq!(b.roles, vec![Role::Weak]);
        assert_eq!(a.delay, Some(DelayColumn { d_max: 400.0, nonempty_prob: 1.0 }));
        assert_eq!(a.delay, b.delay);
        assert_eq!(a.grid, b.grid);
        assert_eq!(a.scenarios.len(), 3);
        for (x, y) in a.scenarios.iter().zip(&b.scenarios) {
            assert_eq!(x.base, y.base);
            check_system(&x.base, 400, 1e-6, None);
        }
        let dbs: Vec<f64> = a.scenarios.iter().map(|c| c.base.snr_db()).collect();
        for (d, e) in dbs.iter().zip([15.0, 20.0, 25.0]) {
            assert!((d - e).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_name() {
        assert!(figure_preset("fig7").is_err());
    }
}
