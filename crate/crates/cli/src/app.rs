use std::path::{Path, PathBuf};
use std::ffi::OsString;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use noma_fbl::{EvalControls, Role, SystemConfig};
use crate::sweep::{run_sweep, write_plot_script, SweepSpec};
use crate::{config, exit, figure_preset, validate_report, ControlOverrides, QueueExperiment};

#[derive(Debug, Parser)]
#[command(name = "noma-fbl", version, about = "Effective capacity and delay analysis of downlink NOMA with short packets")]
struct Cli {
    /// Suppress reports and progress on stdout.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Args)]
struct ControlFlags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mc_samples: Option<u64>,
    #[arg(long)]
    series_max_terms: Option<u32>,
}

impl ControlFlags {
    fn overrides(&self) -> ControlOverrides {
        ControlOverrides {
            seed: self.seed,
            mc_samples: self.mc_samples,
            series_max_terms: self.series_max_terms,
            ..Default::default()
        }
    }
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run every sweep in a TOML config file.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        controls: ControlFlags,
        /// Also write a gnuplot script next to each CSV.
        #[arg(long)]
        plot: bool,
    },
    /// Reproduce a reference figure (fig3, fig4, fig5 or fig6).
    Figure {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        controls: ControlFlags,
        #[arg(long)]
        plot: bool,
    },
    /// Cross-check closed form, quadrature and Monte Carlo for both users.
    Validate {
        #[arg(long = "rho-db", num_args = 1.., default_values_t = [20.0])]
        rho_db: Vec<f64>,
        #[arg(long)]
        blocklength: Option<u32>,
        #[arg(long)]
        error_prob: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[command(flatten)]
        controls: ControlFlags,
        /// Write the machine-readable report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Simulate the user's queue fed at a fraction of its effective capacity.
    QueueSim {
        #[arg(long, default_value_t = 0.01)]
        theta: f64,
        #[arg(long, default_value_t = 0.95)]
        mu_frac: f64,
        #[arg(long, default_value_t = 5_000_000)]
        blocks: u64,
        #[arg(long, default_value_t = 10_000)]
        warmup: u64,
        #[arg(long = "rho-db", default_value_t = 20.0)]
        rho_db: f64,
        #[arg(long, default_value_t = Role::Strong)]
        role: Role,
        #[arg(long, default_value_t = 400.0)]
        d_max: f64,
        #[arg(long, default_value_t = 400)]
        blocklength: u32,
        #[arg(long, default_value_t = 1e-6)]
        error_prob: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn run_specs(specs: &[SweepSpec], plot: bool, quiet: bool) -> anyhow::Result<()> {
    for spec in specs {
        let rows = run_sweep(spec)?;
        let failed = rows.iter().filter(|r| !r.converged).count();
        if !quiet {
            println!("wrote {} rows to {}", rows.len(), spec.output_path.display());
            if failed > 0 {
                println!("  {failed} rows not converged");
            }
        }
        if plot {
            let gp = write_plot_script(spec, &rows)?;
            if !quiet {
                println!("wrote {}", gp.display());
            }
        }
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let quiet = cli.quiet;
    match cli.cmd {
        Cmd::Sweep { config, controls, plot } => {
            let specs = config::load(&config, &controls.overrides())?;
            run_specs(&specs, plot, quiet)?;
        }
        Cmd::Figure {
            name,
            out,
            controls,
            plot,
        } => {
            let mut spec = figure_preset(&name)?;
            controls.overrides().apply(&mut spec.controls);
            if let Some(out) = out {
                spec.output_path = out;
            }
            spec.validate()?;
            run_specs(&[spec], plot, quiet)?;
        }
        Cmd::Validate {
            rho_db,
            blocklength,
            error_prob,
            theta,
            controls,
            json,
        } => {
            let mut ctl = EvalControls::default();
            controls.overrides().apply(&mut ctl);
            let mut reports = Vec::new();
            for db in rho_db {
                let mut cfg = SystemConfig::reference().with_snr_db(db);
                if let Some(n) = blocklength {
                    cfg = cfg.with_blocklength(n);
                }
                if let Some(e) = error_prob {
                    cfg = cfg.with_error_prob(e);
                }
                if let Some(t) = theta {
                    cfg = cfg.with_qos_exponent(t);
                }
                let r = validate_report(&cfg, &ctl)?;
                if !quiet {
                    print!("{}", r.to_text());
                }
                reports.push(r);
            }
            if let Some(path) = json {
                write_json(&path, &reports)?;
            }
            if reports.iter().any(|r| !r.passed) {
                return Ok(exit::VALIDATION_FAILED);
            }
        }
        Cmd::QueueSim {
            theta,
            mu_frac,
            blocks,
            warmup,
            rho_db,
            role,
            d_max,
            blocklength,
            error_prob,
            seed,
            json,
        } => {
            let e = QueueExperiment {
                rho_db,
                role,
                theta,
                mu_frac,
                blocks,
                warmup,
                d_max,
                blocklength,
                error_prob,
                seed,
            };
            let r = e.run()?;
            if !quiet {
                print!("{}", r.to_text());
            }
            if let Some(path) = json {
                write_json(&path, &r)?;
            }
        }
    }
    Ok(exit::SUCCESS)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Usage errors print to stderr and map to
/// [`exit::CONFIG_OR_IO`]; `--help` and `--version` map to success.
pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::CONFIG_OR_IO } else { exit::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit::CONFIG_OR_IO
        }
    }
}
