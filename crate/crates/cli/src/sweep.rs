//! Grid sweeps over SNR or QoS exponent with CSV export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use noma_fbl::delay::{delay_violation_prob, DelaySpec};
use noma_fbl::eccalc::evaluate;
use noma_fbl::{EvalControls, Method, Role, SystemConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str =
    "scenario_id,axis_name,axis_value,role,method,ec_bits_per_cu,std_error,delay_violation_prob,series_terms,converged";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    RhoDb,
    Theta,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::RhoDb => "rho_db",
            Axis::Theta => "theta",
        }
    }

    /// `base` with the axis set to `value`. The exponent axis moves both users.
    pub fn apply(self, base: &SystemConfig, value: f64) -> SystemConfig {
        match self {
            Axis::RhoDb => base.with_snr_db(value),
            Axis::Theta => base.with_qos_exponent(value),
        }
    }
}

/// Delay bound for the optional violation-probability column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayColumn {
    /// Channel uses.
    pub d_max: f64,
    #[serde(default = "one")]
    pub nonempty_prob: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub base: SystemConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scenarios: Vec<Scenario>,
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub roles: Vec<Role>,
    pub methods: Vec<Method>,
    pub controls: EvalControls,
    pub delay: Option<DelayColumn>,
    pub output_path: PathBuf,
}

impl SweepSpec {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.scenarios.is_empty() {
            bail!("sweep has no scenarios");
        }
        if self.grid.is_empty() {
            bail!("sweep grid is empty");
        }
        if self.roles.is_empty() {
            bail!("sweep has no roles");
        }
        if self.methods.is_empty() {
            bail!("sweep has no methods");
        }
        if self.grid.iter().any(|v| !v.is_finite()) || self.grid.windows(2).any(|w| w[1] <= w[0]) {
            bail!("sweep grid must be finite and strictly ascending");
        }
        if self.axis == Axis::Theta && self.grid[0] <= 0.0 {
            bail!("theta grid must be positive");
        }
        let mut ids: Vec<&str> = self.scenarios.iter().map(|s| s.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            bail!("duplicate scenario id");
        }
        if let Some(d) = &self.delay {
            DelaySpec {
                d_max: d.d_max,
                nonempty_prob: d.nonempty_prob,
                arrival_rate: 0.0,
            }
            .validate()?;
        }
        self.controls.validate()?;
        for s in &self.scenarios {
            for &v in &self.grid {
                self.axis
                    .apply(&s.base, v)
                    .validate()
                    .with_context(|| format!("scenario {} at {} = {v}", s.id, self.axis.as_str()))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario_id: String,
    pub axis_name: String,
    pub axis_value: f64,
    pub role: Role,
    pub method: Method,
    /// Empty when the evaluation failed.
    pub ec_bits_per_cu: Option<f64>,
    pub std_error: Option<f64>,
    pub delay_violation_prob: Option<f64>,
    pub series_terms: Option<u32>,
    pub converged: bool,
}

fn evaluate_row(spec: &SweepSpec, scenario: &Scenario, value: f64, role: Role, method: Method) -> ResultRow {
    let cfg = spec.axis.apply(&scenario.base, value);
    let mut row = ResultRow {
        scenario_id: scenario.id.clone(),
        axis_name: spec.axis.as_str().to_string(),
        axis_value: value,
        role,
        method,
        ec_bits_per_cu: None,
        std_error: None,
        delay_violation_prob: None,
        series_terms: None,
        converged: false,
    };
    let Ok(ec) = evaluate(&cfg, role, method, &spec.controls) else {
        return row;
    };
    row.ec_bits_per_cu = Some(ec.value);
    row.std_error = Some(ec.std_error);
    row.series_terms = ec.diagnostics.series_terms;
    row.converged = ec.diagnostics.converged && !ec.diagnostics.fallback;
    if let Some(d) = &spec.delay {
        let ds = DelaySpec {
            d_max: d.d_max,
            nonempty_prob: d.nonempty_prob,
            arrival_rate: ec.value.max(0.0),
        };
        match delay_violation_prob(cfg.user(role).qos_exponent, &ds) {
            Ok(p) => row.delay_violation_prob = Some(p),
            Err(_) => row.converged = false,
        }
    }
    row
}

/// Evaluates every scenario, grid point, role and method. Rows come back
/// ordered by `(scenario, axis_value, role, method)`.
pub fn evaluate_sweep(spec: &SweepSpec) -> anyhow::Result<Vec<ResultRow>> {
    spec.validate()?;
    let mut roles = spec.roles.clone();
    roles.sort_unstable();
    roles.dedup();
    let mut methods = spec.methods.clone();
    methods.sort_unstable();
    methods.dedup();
    let mut jobs = Vec::new();
    for s in &spec.scenarios {
        for &v in &spec.grid {
            for &r in &roles {
                for &m in &methods {
                    jobs.push((s, v, r, m));
                }
            }
        }
    }
    Ok(jobs
        .into_par_iter()
        .map(|(s, v, r, m)| evaluate_row(spec, s, v, r, m))
        .collect())
}

/// Evaluates the sweep and writes its CSV to `spec.output_path`.
pub fn run_sweep(spec: &SweepSpec) -> anyhow::Result<Vec<ResultRow>> {
    let rows = evaluate_sweep(spec)?;
    write_csv(&spec.output_path, &rows)?;
    Ok(rows)
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> anyhow::Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        bail!("{}: unexpected header", path.display());
    }
    r.deserialize()
        .collect::<Result<Vec<ResultRow>, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}

/// Gnuplot commands drawing one curve per scenario, role and method.
pub fn plot_script(spec: &SweepSpec, rows: &[ResultRow]) -> String {
    let csv_name = spec
        .output_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (col, ylabel) = if spec.delay.is_some() {
        (8, "delay violation probability")
    } else {
        (6, "effective capacity [bits/channel use]")
    };
    let mut out = String::new();
    out.push_str("set datafile separator ','\n");
    out.push_str("set key outside\n");
    out.push_str("set grid\n");
    out.push_str(&format!("set xlabel '{}'\n", spec.axis.as_str()));
    out.push_str(&format!("set ylabel '{ylabel}'\n"));
    if spec.axis == Axis::Theta {
        out.push_str("set logscale x\n");
    }
    if spec.delay.is_some() {
        out.push_str("set logscale y\n");
    }
    let mut curves: Vec<(String, Role, Method)> = rows
        .iter()
        .map(|r| (r.scenario_id.clone(), r.role, r.method))
        .collect();
    curves.dedup();
    curves.sort();
    curves.dedup();
    let plots: Vec<String> = curves
        .iter()
        .map(|(id, role, method)| {
            format!(
                "'{csv_name}' using (strcol(1) eq '{id}' && strcol(4) eq '{role}' && strcol(5) eq '{method}' ? $3 : NaN):{col} \
                 skip 1 with linespoints title '{id} {role} {method}'"
            )
        })
        .collect();
    out.push_str("plot ");
    out.push_str(&plots.join(", \\\n     "));
    out.push('\n');
    out
}

pub fn write_plot_script(spec: &SweepSpec, rows: &[ResultRow]) -> anyhow::Result<PathBuf> {
    let path = spec.output_path.with_extension("gp");
    let mut f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(plot_script(spec, rows).as_bytes())?;
    Ok(path)
}

/// `n` points spaced evenly in log between `lo` and `hi`, both included.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
        }
    }
}

/// `start, start + step, ...` up to `stop` inclusive.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return Vec::new();
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(path: PathBuf) -> SweepSpec {
        SweepSpec {
            scenarios: vec![Scenario {
                id: "t".into(),
                base: SystemConfig::reference(),
            }],
            axis: Axis::RhoDb,
            grid: vec![10.0, 20.0],
            roles: vec![Role::Strong, Role::Weak],
            methods: vec![Method::Quadrature, Method::ClosedForm],
            controls: EvalControls::default(),
            delay: None,
            output_path: path,
        }
    }

    #[test]
    fn grids() {
        let g = logspace(1e-4, 1.0, 30);
        assert_eq!(g.len(), 30);
        assert!((g[0] - 1e-4).abs() < 1e-18 && (g[29] - 1.0).abs() < 1e-14);
        let s = linspace_step(0.0, 40.0, 2.0);
        assert_eq!(s.len(), 21);
        assert_eq!(s[20], 40.0);
    }

    #[test]
    fn rows_sorted_by_axis_then_role_then_method() {
        let rows = evaluate_sweep(&small_spec(PathBuf::from("unused.csv"))).unwrap();
        assert_eq!(rows.len(), 8);
        let keys: Vec<_> = rows.iter().map(|r| (r.axis_value.to_bits(), r.role, r.method)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(rows.iter().all(|r| r.converged && r.ec_bits_per_cu.is_some()));
    }

    #[test]
    fn validation_rejects_empty_and_unsorted() {
        let base = small_spec(PathBuf::from("unused.csv"));
        let mut s = base.clone();
        s.grid.clear();
        assert!(evaluate_sweep(&s).is_err());
        let mut s = base.clone();
        s.grid = vec![20.0, 10.0];
        assert!(s.validate().is_err());
        let mut s = base.clone();
        s.roles.clear();
        assert!(s.validate().is_err());
        let mut s = base;
        s.axis = Axis::Theta;
        s.grid = vec![0.0, 0.1];
        assert!(s.validate().is_err());
    }

    #[test]
    fn failed_evaluation_recorded_per_row() {
        let mut s = small_spec(PathBuf::from("unused.csv"));
        s.methods = vec![Method::ClosedForm];
        // The weak-user series needs alpha_t + alpha_u = 1.
        let mut backoff = SystemConfig::reference().with_powers(0.7, 0.2);
        backoff.power_backoff = true;
        s.scenarios[0].base = backoff;
        let rows = evaluate_sweep(&s).unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows {
            match r.role {
                Role::Weak => assert!(!r.converged && r.ec_bits_per_cu.is_none()),
                Role::Strong => assert!(r.converged && r.ec_bits_per_cu.is_some()),
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = small_spec(dir.path().join("out.csv"));
        spec.delay = Some(DelayColumn {
            d_max: 400.0,
            nonempty_prob: 1.0,
        });
        let rows = run_sweep(&spec).unwrap();
        let text = std::fs::read_to_string(&spec.output_path).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(read_csv(&spec.output_path).unwrap(), rows);
        let script = plot_script(&spec, &rows);
        assert!(script.contains("out.csv") && script.contains("logscale y"));
    }
}
