//! Subcommand bodies, independent of argument parsing and printing.

use crate::analysis::{fit_decay_rate, tail_window, DecayFit, DiagnosticsRecord, FitQuantity};
use crate::app::config::RunConfig;
use crate::app::run::{simulate_quiet, RunReport};
use crate::domain::Grid;
use crate::dynamics::{PhysParams, Variant};
use crate::elliptic::{smallest_dirichlet_eigenvalue, Eigenpair};
use crate::error::{Error, Result};
use crate::mms::{convergence_study, ConvergenceTable, ManufacturedSolution, StudyConfig};
use crate::par;

/// Minimum coefficient of determination for the H1-energy fit.
pub const MIN_R_SQUARED: f64 = 0.99;

/// Closed-form smallest eigenvalue of the 5-point Dirichlet `-laplacian`.
pub fn closed_form_lambda1(grid: &Grid) -> f64 {
    let one = |n: usize, h: f64| {
        let s = (std::f64::consts::PI / (2.0 * (n - 1) as f64)).sin();
        4.0 / (h * h) * s * s
    };
    one(grid.nx(), grid.dx()) + one(grid.ny(), grid.dy())
}

#[derive(Debug, Clone)]
pub struct EigReport {
    pub eigenpair: Eigenpair,
    pub closed_form: f64,
}

pub fn eig(grid: &Grid) -> Result<EigReport> {
    Ok(EigReport { eigenpair: smallest_dirichlet_eigenvalue(grid)?, closed_form: closed_form_lambda1(grid) })
}

/// Exponential fits of a run's energy and H1 energy over its tail window.
#[derive(Debug, Clone)]
pub struct DecayReport {
    pub energy: DecayFit,
    pub h1: DecayFit,
}

impl DecayReport {
    /// Rate lower bound and H1 decay for damped runs in the decay regime.
    pub fn verify(&self, slack: f64) -> Result<()> {
        if let Some(c0) = self.energy.predicted_c0 {
            if !(self.energy.fitted_rate >= slack * c0) {
                return Err(Error::CheckFailed(format!(
                    "fitted energy rate {:.6} is below {slack} * C0 = {:.6}",
                    self.energy.fitted_rate,
                    slack * c0
                )));
            }
        }
        if !(self.h1.fitted_rate > 0.0 && self.h1.r_squared >= MIN_R_SQUARED) {
            return Err(Error::CheckFailed(format!(
                "H1 energy fit has rate {:.6} and r^2 {:.6}",
                self.h1.fitted_rate, self.h1.r_squared
            )));
        }
        Ok(())
    }
}

/// Fits both energies; attaches `C0` for damped parameters with `gamma > 4 kappa`.
pub fn decay(records: &[DiagnosticsRecord], params: &PhysParams, grid: &Grid, fraction: f64) -> Result<DecayReport> {
    let window = tail_window(records, fraction);
    let mut energy = fit_decay_rate(records, window, FitQuantity::Energy)?;
    let h1 = fit_decay_rate(records, window, FitQuantity::H1Energy)?;
    if params.variant() == Variant::Damped && params.decay_regime() {
        let c = smallest_dirichlet_eigenvalue(grid)?.poincare_sq();
        energy = energy.with_prediction(params, c)?;
    }
    Ok(DecayReport { energy, h1 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub kappa: f64,
    pub fitted_rate: f64,
    pub predicted_c0: f64,
    pub monotone: bool,
    pub r_squared: f64,
}

impl SweepRow {
    pub fn passes(&self, slack: f64) -> bool {
        self.monotone && self.fitted_rate >= slack * self.predicted_c0
    }
}

pub const SWEEP_HEADER: &str = "gamma,kappa,gamma_minus_4kappa,fitted_rate,predicted_c0,monotone_flag";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            r.gamma,
            r.kappa,
            r.gamma - 4.0 * r.kappa,
            r.fitted_rate,
            r.predicted_c0,
            r.monotone
        ));
    }
    out
}

/// Damped runs over the Cartesian product of `sweep_gamma` and `sweep_kappa`.
/// Refuses the whole sweep if any cell violates `gamma > 4 kappa`.
pub fn sweep(cfg: &RunConfig, parallel: bool) -> Result<Vec<SweepRow>> {
    let cells: Vec<(f64, f64)> = cfg
        .sweep_gamma
        .iter()
        .flat_map(|&g| cfg.sweep_kappa.iter().map(move |&k| (g, k)))
        .collect();
    for &(g, k) in &cells {
        let p = PhysParams::new(g, k, Variant::Damped)?;
        if !p.decay_regime() {
            return Err(Error::Regime { gamma: g, kappa: k });
        }
    }
    let grid = cfg.grid()?;
    let c = smallest_dirichlet_eigenvalue(&grid)?.poincare_sq();
    let run_cell = |&(g, k): &(f64, f64)| -> Result<SweepRow> {
        let mut cell = cfg.clone();
        cell.gamma = g;
        cell.kappa = k;
        cell.variant = Variant::Damped;
        cell.restart = None;
        let rep = simulate_quiet(&cell)?;
        let window = tail_window(&rep.records, cfg.fit_fraction);
        let fit = fit_decay_rate(&rep.records, window, FitQuantity::Energy)?.with_prediction(&rep.params, c)?;
        Ok(SweepRow {
            gamma: g,
            kappa: k,
            fitted_rate: fit.fitted_rate,
            predicted_c0: fit.predicted_c0.expect("prediction attached"),
            monotone: rep.monotone,
            r_squared: fit.r_squared,
        })
    };
    let rows: Vec<Result<SweepRow>> = if parallel {
        par::map_jobs(&cells, run_cell)
    } else {
        cells.iter().map(run_cell).collect()
    };
    rows.into_iter().collect()
}

/// Refinement study of the default manufactured solution on the configured domain.
pub fn mms(cfg: &RunConfig) -> Result<ConvergenceTable> {
    let ms = ManufacturedSolution { lx: cfg.lx, ly: cfg.ly, ..ManufacturedSolution::default() };
    let study = StudyConfig {
        levels: cfg.mms_levels.clone(),
        t_end: cfg.mms_t_end,
        dt_per_h: cfg.mms_dt_per_h,
        scheme: cfg.advection,
        parallel: false,
    };
    convergence_study(&ms, &cfg.params()?, &study)
}

/// Summary of a standard-variant run for the `zcheck` command.
#[derive(Debug, Clone)]
pub struct ZReport {
    pub max_z_residual: f64,
    pub max_z_ratio: f64,
    /// `1 - max(|Z|_p / envelope)`; negative when the envelope is exceeded.
    pub envelope_margin: f64,
}

pub fn zcheck_summary(report: &RunReport) -> ZReport {
    ZReport {
        max_z_residual: report.max_z_residual.unwrap_or(0.0),
        max_z_ratio: report.max_z_ratio.unwrap_or(0.0),
        envelope_margin: 1.0 - report.max_envelope_ratio.unwrap_or(0.0),
    }
}
