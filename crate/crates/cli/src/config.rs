//! TOML sweep files.
//!
//! ```toml
//! [controls]
//! mc_samples = 200000
//!
//! [[sweep]]
//! id = "snr"
//! output = "snr.csv"
//! axis = "rho_db"
//! grid = { start = 0, stop = 40, step = 5 }
//! roles = ["weak", "strong"]
//! methods = ["closed_form", "quadrature"]
//! system = { blocklength = 400 }
//!
//! [[sweep.scenario]]
//! id = "eps5"
//! system = { error_prob = 1e-5 }
//! ```
//!
//! Unset system fields keep the reference configuration. Relative output paths
//! resolve against the directory of the file.

use std::path::{Path, PathBuf};

use anyhow::Context;
use noma_fbl::eccalc::{BracketForm, EiPrefactor};
use noma_fbl::{EvalControls, Method, Role, SystemConfig};
use serde::Deserialize;

use crate::sweep::{linspace_step, logspace, Axis, DelayColumn, Scenario, SweepSpec};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlOverrides {
    pub mc_samples: Option<u64>,
    pub seed: Option<u64>,
    pub quad_rel_tol: Option<f64>,
    pub series_max_terms: Option<u32>,
    pub series_rel_tol: Option<f64>,
    pub bracket: Option<BracketForm>,
    pub ei_prefactor: Option<EiPrefactor>,
}

impl ControlOverrides {
    pub fn apply(&self, c: &mut EvalControls) {
        if let Some(v) = self.mc_samples {
            c.mc_samples = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.quad_rel_tol {
            c.quad_rel_tol = v;
        }
        if let Some(v) = self.series_max_terms {
            c.series_max_terms = v;
        }
        if let Some(v) = self.series_rel_tol {
            c.series_rel_tol = v;
        }
        if let Some(v) = self.bracket {
            c.closed_form.bracket = v;
        }
        if let Some(v) = self.ei_prefactor {
            c.closed_form.ei_prefactor = v;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemOverrides {
    pub num_users: Option<usize>,
    pub weak_rank: Option<usize>,
    pub strong_rank: Option<usize>,
    pub weak_power: Option<f64>,
    pub strong_power: Option<f64>,
    pub power_backoff: Option<bool>,
    pub snr_db: Option<f64>,
    pub blocklength: Option<u32>,
    pub error_prob: Option<f64>,
    pub qos_exponent: Option<f64>,
}

impl SystemOverrides {
    pub fn apply(&self, base: SystemConfig) -> SystemConfig {
        let mut c = base;
        if let Some(v) = self.num_users {
            c.num_users = v;
        }
        if let Some(v) = self.weak_rank {
            c.weak.rank = v;
        }
        if let Some(v) = self.strong_rank {
            c.strong.rank = v;
        }
        if let Some(v) = self.weak_power {
            c.weak.power = v;
        }
        if let Some(v) = self.strong_power {
            c.strong.power = v;
        }
        if let Some(v) = self.power_backoff {
            c.power_backoff = v;
        }
        if let Some(v) = self.snr_db {
            c = c.with_snr_db(v);
        }
        if let Some(v) = self.blocklength {
            c.blocklength = v;
        }
        if let Some(v) = self.error_prob {
            c = c.with_error_prob(v);
        }
        if let Some(v) = self.qos_exponent {
            c = c.with_qos_exponent(v);
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GridDef {
    Values(Vec<f64>),
    Linear { start: f64, stop: f64, step: f64 },
    Log { from: f64, to: f64, points: usize },
}

impl GridDef {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            GridDef::Values(ref v) => v.clone(),
            GridDef::Linear { start, stop, step } => linspace_step(start, stop, step),
            GridDef::Log { from, to, points } => logspace(from, to, points),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDef {
    pub id: String,
    #[serde(default)]
    pub system: SystemOverrides,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDef {
    pub id: String,
    pub output: PathBuf,
    pub axis: Axis,
    pub grid: GridDef,
    #[serde(default = "all_roles")]
    pub roles: Vec<Role>,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub system: SystemOverrides,
    #[serde(default)]
    pub controls: ControlOverrides,
    pub delay: Option<DelayColumn>,
    #[serde(default)]
    pub scenario: Vec<ScenarioDef>,
}

fn all_roles() -> Vec<Role> {
    Role::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub controls: ControlOverrides,
    pub sweep: Vec<SweepDef>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: ConfigFile = toml::from_str(text)?;
        if cfg.sweep.is_empty() {
            anyhow::bail!("config defines no [[sweep]] sections");
        }
        Ok(cfg)
    }

    /// Sweep specs with `flags` applied last. Outputs resolve against `root`.
    pub fn specs(&self, root: &Path, flags: &ControlOverrides) -> anyhow::Result<Vec<SweepSpec>> {
        self.sweep
            .iter()
            .map(|s| {
                let base = s.system.apply(SystemConfig::reference());
                let scenarios = if s.scenario.is_empty() {
                    vec![Scenario {
                        id: s.id.clone(),
                        base,
                    }]
                } else {
                    s.scenario
                        .iter()
                        .map(|c| Scenario {
                            id: c.id.clone(),
                            base: c.system.apply(base),
                        })
                        .collect()
                };
                let mut controls = EvalControls::default();
                self.controls.apply(&mut controls);
                s.controls.apply(&mut controls);
                flags.apply(&mut controls);
                let spec = SweepSpec {
                    scenarios,
                    axis: s.axis,
                    grid: s.grid.values(),
                    roles: s.roles.clone(),
                    methods: s.methods.clone(),
                    controls,
                    delay: s.delay,
                    output_path: root.join(&s.output),
                };
                spec.validate().with_context(|| format!("sweep {}", s.id))?;
                Ok(spec)
            })
            .collect()
    }
}

pub fn load(path: &Path, flags: &ControlOverrides) -> anyhow::Result<Vec<SweepSpec>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = ConfigFile::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    let root = path.parent().unwrap_or(Path::new("."));
    cfg.specs(root, flags)
}
