//! Cross-method agreement report: closed form against approximate-kernel
//! quadrature, and exact-kernel quadrature against Monte Carlo.

use std::fmt::Write as _;

use noma_fbl::eccalc::{ec_monte_carlo, ec_quadrature, evaluate};
use noma_fbl::{EcResult, EvalControls, KernelVariant, Method, Role, SystemConfig};
use serde::Serialize;

/// Strong-user closed form against approximate-kernel quadrature, relative.
pub const STRONG_CLOSED_REL_TOL: f64 = 1e-6;
/// Weak-user floor on the absolute gap; the series bound applies when larger.
pub const WEAK_CLOSED_ABS_TOL: f64 = 1e-4;
/// Monte-Carlo standard errors allowed between exact quadrature and sampling.
pub const MC_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub role: Role,
    pub label: &'static str,
    pub value: Option<f64>,
    pub std_error: Option<f64>,
    pub series_terms: Option<u32>,
    pub converged: bool,
    pub notes: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub rho_db: f64,
    pub config: SystemConfig,
    pub controls: EvalControls,
    pub evaluations: Vec<Evaluation>,
    pub checks: Vec<Check>,
    /// Closed form against exact-kernel Monte Carlo, relative. Informational.
    pub closed_vs_mc: Vec<(Role, Option<f64>)>,
    pub passed: bool,
}

fn record(role: Role, label: &'static str, r: &noma_fbl::Result<EcResult>) -> Evaluation {
    match r {
        Ok(ec) => Evaluation {
            role,
            label,
            value: Some(ec.value),
            std_error: Some(ec.std_error),
            series_terms: ec.diagnostics.series_terms,
            converged: ec.diagnostics.converged && !ec.diagnostics.fallback,
            notes: ec.diagnostics.notes.clone(),
            error: None,
        },
        Err(e) => Evaluation {
            role,
            label,
            value: None,
            std_error: None,
            series_terms: None,
            converged: false,
            notes: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

fn missing(what: &str, r: &noma_fbl::Result<EcResult>) -> String {
    match r {
        Err(e) => format!("{what} failed: {e}"),
        Ok(_) => String::new(),
    }
}

pub fn validate_report(cfg: &SystemConfig, ctl: &EvalControls) -> anyhow::Result<Report> {
    cfg.validate()?;
    ctl.validate()?;
    let mut evaluations = Vec::new();
    let mut checks = Vec::new();
    let mut closed_vs_mc = Vec::new();
    for role in Role::ALL {
        let closed = evaluate(cfg, role, Method::ClosedForm, ctl);
        let approx = ec_quadrature(cfg, role, ctl, KernelVariant::Approx);
        let exact = ec_quadrature(cfg, role, ctl, KernelVariant::Exact);
        let mc = ec_monte_carlo(cfg, role, ctl);

        let converged = closed.as_ref().map(|c| c.diagnostics.converged && !c.diagnostics.fallback);
        checks.push(Check {
            name: format!("{role} closed form converged"),
            passed: converged == Ok(true),
            detail: match &closed {
                Ok(c) if converged == Ok(true) => format!("{} series terms", c.diagnostics.series_terms.unwrap_or(0)),
                Ok(c) => format!(
                    "terms {:?}, truncation bound {:.3e}, fallback {}; {}",
                    c.diagnostics.series_terms,
                    c.diagnostics.truncation_bound,
                    c.diagnostics.fallback,
                    c.diagnostics.notes.join("; ")
                ),
                Err(_) => missing("closed form", &closed),
            },
        });

        checks.push(match (&closed, &approx) {
            (Ok(c), Ok(q)) => {
                let gap = (c.value - q.value).abs();
                let (passed, detail) = match role {
                    Role::Strong => {
                        let rel = if q.value == 0.0 { gap } else { gap / q.value.abs() };
                        (rel <= STRONG_CLOSED_REL_TOL, format!("relative gap {rel:.3e} (limit {STRONG_CLOSED_REL_TOL:e})"))
                    }
                    Role::Weak => {
                        let tol = WEAK_CLOSED_ABS_TOL.max(c.diagnostics.truncation_bound);
                        (gap <= tol, format!("absolute gap {gap:.3e} (limit {tol:.3e})"))
                    }
                };
                Check {
                    name: format!("{role} closed form vs approx-kernel quadrature"),
                    passed,
                    detail,
                }
            }
            _ => Check {
                name: format!("{role} closed form vs approx-kernel quadrature"),
                passed: false,
                detail: format!("{}{}", missing("closed form", &closed), missing("quadrature", &approx)),
            },
        });

        checks.push(match (&exact, &mc) {
            (Ok(q), Ok(m)) => {
                let gap = (q.value - m.value).abs();
                // A kernel pinned at eps gives zero sample variance.
                let tol = MC_SIGMAS * m.std_error + 1e-12 * q.value.abs();
                Check {
                    name: format!("{role} exact quadrature vs Monte Carlo"),
                    passed: gap <= tol,
                    detail: format!(
                        "gap {gap:.3e} = {:.2} standard errors (limit {MC_SIGMAS})",
                        if m.std_error > 0.0 { gap / m.std_error } else { 0.0 }
                    ),
                }
            }
            _ => Check {
                name: format!("{role} exact quadrature vs Monte Carlo"),
                passed: false,
                detail: format!("{}{}", missing("quadrature", &exact), missing("Monte Carlo", &mc)),
            },
        });

        closed_vs_mc.push((
            role,
            match (&closed, &mc) {
                (Ok(c), Ok(m)) if m.value != 0.0 => Some((c.value - m.value) / m.value),
                (Ok(c), Ok(m)) if c.value == m.value => Some(0.0),
                _ => None,
            },
        ));
        evaluations.push(record(role, "closed_form", &closed));
        evaluations.push(record(role, "quadrature_approx", &approx));
        evaluations.push(record(role, "quadrature_exact", &exact));
        evaluations.push(record(role, "monte_carlo", &mc));
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(Report {
        rho_db: cfg.snr_db(),
        config: *cfg,
        controls: *ctl,
        evaluations,
        checks,
        closed_vs_mc,
        passed,
    })
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "validation at rho = {:.2} dB (n = {}, eps = {:e}/{:e}, theta = {:e}/{:e})",
            self.rho_db,
            self.config.blocklength,
            self.config.weak.error_prob,
            self.config.strong.error_prob,
            self.config.weak.qos_exponent,
            self.config.strong.qos_exponent
        );
        for e in &self.evaluations {
            let _ = match (e.value, &e.error) {
                (Some(v), _) => writeln!(
                    s,
                    "  {:<6} {:<18} {:>14.9} se {:.3e}{}",
                    e.role,
                    e.label,
                    v,
                    e.std_error.unwrap_or(0.0),
                    if e.converged { "" } else { "  (not converged)" }
                ),
                (None, Some(err)) => writeln!(s, "  {:<6} {:<18} error: {err}", e.role, e.label),
                (None, None) => Ok(()),
            };
        }
        for (role, gap) in &self.closed_vs_mc {
            if let Some(g) = gap {
                let _ = writeln!(s, "  {role:<6} closed vs Monte Carlo: {:+.2}%", 100.0 * g);
            }
        }
        for c in &self.checks {
            let _ = writeln!(s, "  [{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let _ = writeln!(s, "  overall: {}", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> EvalControls {
        EvalControls {
            mc_samples: 200_000,
            ..Default::default()
        }
    }

    #[test]
    fn reference_point_passes() {
        let r = validate_report(&SystemConfig::reference(), &quick()).unwrap();
        assert_eq!(r.evaluations.len(), 8);
        assert!(r.evaluations.iter().all(|e| e.value.is_some()));
        assert!(r.passed, "{}", r.to_text());
        assert!(r.to_text().contains("overall: PASS"));
    }

    #[test]
    fn certain_error_passes_with_zeros() {
        let r = validate_report(&SystemConfig::reference().with_error_prob(1.0), &quick()).unwrap();
        assert!(r.passed);
        assert!(r.evaluations.iter().all(|e| e.value == Some(0.0)));
    }

    #[test]
    fn truncated_series_flagged() {
        let ctl = EvalControls {
            series_max_terms: 2,
            ..quick()
        };
        let r = validate_report(&SystemConfig::reference(), &ctl).unwrap();
        assert!(!r.passed);
        let c = r.checks.iter().find(|c| c.name == "weak closed form converged").unwrap();
        assert!(!c.passed);
        let w = &r.evaluations[0];
        assert_eq!((w.role, w.label, w.converged), (Role::Weak, "closed_form", false));
    }

    #[test]
    fn json_shape() {
        let r = validate_report(&SystemConfig::reference().with_error_prob(1.0), &quick()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["passed"], true);
        assert_eq!(v["checks"].as_array().unwrap().len(), 6);
        assert_eq!(v["evaluations"][0]["role"], "weak");
    }
}
