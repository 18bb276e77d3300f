//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::app::checkpoint::save_checkpoint;
use crate::app::commands;
use crate::app::config::{Checks, RunConfig};
use crate::app::csv::read_records;
use crate::app::run::{simulate_to_csv, RunReport};
use crate::domain::AdvectionScheme;
use crate::dynamics::Variant;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckArg {
    Energy,
    Zcheck,
    Gronwall,
    All,
    None,
}

impl CheckArg {
    pub fn checks(self) -> Checks {
        match self {
            CheckArg::Energy => Checks { energy: true, ..Checks::NONE },
            CheckArg::Zcheck => Checks { zcheck: true, ..Checks::NONE },
            CheckArg::Gronwall => Checks { gronwall: true, ..Checks::NONE },
            CheckArg::All => Checks::ALL,
            CheckArg::None => Checks::NONE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mpolar", version, about = "2D micropolar flow simulator and verification harness")]
pub struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Checks to enforce; overrides `checks` from the configuration.
    #[arg(long, global = true, value_enum)]
    pub check: Option<CheckArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate, stream diagnostics to CSV and write a final checkpoint.
    Run,
    /// Convergence study against the manufactured solution.
    Mms,
    /// Damped runs over a (gamma, kappa) grid with fitted decay rates.
    Sweep {
        /// Run the cells concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Smallest discrete Dirichlet eigenvalue and Poincare constant.
    Eig,
    /// Standard-variant run reporting the Z residual and envelope margin.
    Zcheck,
    /// Fit decay rates on an existing diagnostics CSV.
    Decay {
        /// CSV file; defaults to the configured CSV in the output directory.
        csv: Option<PathBuf>,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_seed_override(std::env::var("MPOLAR_SEED").ok().as_deref())?;
    if let Some(c) = cli.check {
        cfg.checks = c.checks();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs `cli.command` inside a thread pool of the requested size.
pub fn execute(cli: &Cli, out: &mut (dyn Write + Send)) -> Result<()> {
    let cfg = load_config(cli)?;
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start {n} threads: {e}")))?;
        return pool.install(|| dispatch(cli, &cfg, out));
    }
    #[cfg(not(feature = "parallel"))]
    if matches!(cli.threads, Some(n) if n > 1) {
        return Err(Error::Usage("built without the `parallel` feature; only one thread is available".into()));
    }
    dispatch(cli, &cfg, out)
}

fn wr(out: &mut (dyn Write + Send), text: std::fmt::Arguments) -> Result<()> {
    out.write_fmt(text).map_err(|e| Error::io("<stdout>", e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run_and_save(cfg: &RunConfig, dir: &Path, out: &mut (dyn Write + Send)) -> Result<RunReport> {
    let csv = dir.join(&cfg.csv);
    let report = simulate_to_csv(cfg, &csv)?;
    let ck = dir.join(&cfg.checkpoint);
    save_checkpoint(&report.final_state, &report.params, &ck)?;
    wr(
        out,
        format_args!(
            "steps {} dt {:.6e} t_end {:.6e} records {}\ncsv {}\ncheckpoint {}\n",
            report.steps,
            report.dt,
            report.final_state.t(),
            report.records.len(),
            csv.display(),
            ck.display()
        ),
    )?;
    if let Some(r) = report.max_energy_ratio {
        wr(out, format_args!("max energy residual / scale {r:.6e}\n"))?;
    }
    if report.params.variant() == Variant::Damped {
        wr(out, format_args!("energy nonincreasing {}\n", report.monotone))?;
    }
    Ok(report)
}

fn dispatch(cli: &Cli, cfg: &RunConfig, out: &mut (dyn Write + Send)) -> Result<()> {
    let dir = cli.out.as_path();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    match &cli.command {
        Command::Run => {
            let report = run_and_save(cfg, dir, out)?;
            report.verify(cfg, cfg.checks)
        }
        Command::Zcheck => {
            let mut std_cfg = cfg.clone();
            std_cfg.variant = Variant::Standard;
            let report = run_and_save(&std_cfg, dir, out)?;
            let z = commands::zcheck_summary(&report);
            wr(
                out,
                format_args!(
                    "max Z residual {:.6e}\nmax Z residual / |Z| {:.6e}\nenvelope margin {:.6e}\n",
                    z.max_z_residual, z.max_z_ratio, z.envelope_margin
                ),
            )?;
            let checks = cli.check.map_or(Checks { energy: false, ..Checks::ALL }, CheckArg::checks);
            report.verify(&std_cfg, checks)
        }
        Command::Eig => {
            let grid = cfg.grid()?;
            let r = commands::eig(&grid)?;
            wr(
                out,
                format_args!(
                    "grid {}x{} on [0,{}]x[0,{}]\nlambda1 {:.16e}\nclosed_form {:.16e}\nrelative_difference {:.3e}\nC_P {:.16e}\niterations {}\n",
                    grid.nx(),
                    grid.ny(),
                    grid.lx(),
                    grid.ly(),
                    r.eigenpair.lambda1,
                    r.closed_form,
                    (r.eigenpair.lambda1 - r.closed_form).abs() / r.closed_form,
                    r.eigenpair.poincare_constant(),
                    r.eigenpair.iterations
                ),
            )
        }
        Command::Mms => {
            let table = commands::mms(cfg)?;
            let text = table.to_csv();
            write_file(&dir.join("mms.csv"), &text)?;
            wr(out, format_args!("{text}"))?;
            let want = match cfg.advection {
                AdvectionScheme::Central2 => 1.9,
                AdvectionScheme::Upwind1 => 0.9,
            };
            let orders = table.orders();
            let (oo, ow) = *orders.last().expect("at least two levels");
            wr(out, format_args!("finest-pair orders omega {oo:.4} w {ow:.4}\n"))?;
            if cfg.checks.any() && !(oo >= want && ow >= want) {
                return Err(Error::CheckFailed(format!(
                    "observed orders ({oo:.3}, {ow:.3}) below {want} for {}",
                    cfg.advection.as_str()
                )));
            }
            Ok(())
        }
        Command::Sweep { parallel } => {
            let rows = commands::sweep(cfg, *parallel || cfg.sweep_parallel)?;
            let text = commands::sweep_csv(&rows);
            write_file(&dir.join("sweep.csv"), &text)?;
            wr(out, format_args!("{text}"))?;
            if cfg.checks.any() {
                if let Some(r) = rows.iter().find(|r| !r.passes(cfg.rate_slack)) {
                    return Err(Error::CheckFailed(format!(
                        "cell gamma = {}, kappa = {}: rate {:.6} vs C0 {:.6}, monotone {}",
                        r.gamma, r.kappa, r.fitted_rate, r.predicted_c0, r.monotone
                    )));
                }
            }
            Ok(())
        }
        Command::Decay { csv } => {
            let path = csv.clone().unwrap_or_else(|| dir.join(&cfg.csv));
            let records = read_records(&path)?;
            let params = cfg.params()?;
            let r = commands::decay(&records, &params, &cfg.grid()?, cfg.fit_fraction)?;
            wr(
                out,
                format_args!(
                    "window {:.6e} {:.6e} samples {}\nenergy_rate {:.16e} r2 {:.6}\nh1_rate {:.16e} r2 {:.6}\n",
                    r.energy.window.0,
                    r.energy.window.1,
                    r.energy.samples,
                    r.energy.fitted_rate,
                    r.energy.r_squared,
                    r.h1.fitted_rate,
                    r.h1.r_squared
                ),
            )?;
            if let (Some(c0), Some(c0_half)) = (r.energy.predicted_c0, r.energy.predicted_c0_half_derivative) {
                wr(out, format_args!("predicted_c0 {c0:.16e}\npredicted_c0_half_derivative {c0_half:.16e}\n"))?;
            }
            if cfg.checks.energy && params.variant() == Variant::Damped {
                r.verify(cfg.rate_slack)?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_cli(args.iter().copied(), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(&["mpolar"]).0, 1);
        assert_eq!(run(&["mpolar", "fly"]).0, 1);
        assert_eq!(run(&["mpolar", "eig", "--check", "some"]).0, 1);
        assert_eq!(run(&["mpolar", "--help"]).0, 0);
    }

    #[test]
    fn missing_config_is_a_validation_error() {
        let (code, _, err) = run(&["mpolar", "eig", "--config", "/nonexistent/x.cfg"]);
        assert_eq!(code, 1);
        assert!(err.contains("x.cfg"));
    }
}
