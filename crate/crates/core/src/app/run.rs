//! Run orchestration: stepping, record cadence, residuals, envelope and checks.

use std::path::Path;

use crate::analysis::{
    combined_z, energy, energy_budget, lp_norm, norms, z_residual, DiagnosticsRecord, GronwallTracker, NormExponent,
};
use crate::app::checkpoint::read_checkpoint;
use crate::app::config::{Checks, RunConfig};
use crate::dynamics::{initial_condition, PhysParams, State, StepControl, Stepper, Variant};
use crate::elliptic::PoissonSolver;
use crate::error::{Error, Result};

/// Energy may grow by at most this many ulps per step and still count as nonincreasing.
pub const MONOTONE_ULPS: f64 = 10.0;

/// Outcome of [`simulate`].
#[derive(Debug, Clone)]
pub struct RunReport {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: State,
    pub params: PhysParams,
    pub dt: f64,
    pub steps: usize,
    /// `E_{n+1} <= E_n (1 + 10 eps)` at every step.
    pub monotone: bool,
    /// Largest `residual / scale` of the energy identity over records.
    pub max_energy_ratio: Option<f64>,
    /// Largest absolute Z residual over records.
    pub max_z_residual: Option<f64>,
    /// Largest `residual / |Z|_L2` over records.
    pub max_z_ratio: Option<f64>,
    /// Largest `|Z|_p / envelope` over records.
    pub max_envelope_ratio: Option<f64>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

fn bump(slot: &mut Option<f64>, v: f64) {
    *slot = Some(slot.map_or(v, |s| s.max(v)));
}

impl RunReport {
    /// Enforces the selected checks; fails with the first violated one.
    pub fn verify(&self, cfg: &RunConfig, checks: Checks) -> Result<()> {
        let checks = checks.applicable(self.params.variant());
        if checks.energy {
            if let Some(r) = self.max_energy_ratio.filter(|r| !(*r <= cfg.energy_tol)) {
                return Err(Error::CheckFailed(format!(
                    "energy identity residual reached {r:.3e} of its scale (tolerance {:.1e})",
                    cfg.energy_tol
                )));
            }
            if self.params.variant() == Variant::Damped && !self.monotone {
                return Err(Error::CheckFailed("energy increased during a damped run".into()));
            }
        }
        if checks.zcheck {
            if let Some(r) = self.max_z_ratio.filter(|r| !(*r <= cfg.z_tol)) {
                return Err(Error::CheckFailed(format!(
                    "Z transport residual reached {r:.3e} of |Z| (tolerance {:.1e})",
                    cfg.z_tol
                )));
            }
        }
        if checks.gronwall {
            if let Some(r) = self.max_envelope_ratio.filter(|r| !(*r <= 1.0 + cfg.gronwall_tol)) {
                return Err(Error::CheckFailed(format!(
                    "|Z| exceeded the Gronwall envelope by a factor {r:.6} (allowed {})",
                    1.0 + cfg.gronwall_tol
                )));
            }
        }
        Ok(())
    }
}

/// Number of equal steps covering `[t0, t_end]` with steps no longer than `dt`.
fn partition(t0: f64, t_end: f64, dt: f64) -> (usize, f64) {
    let span = t_end - t0;
    let steps = ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (steps, span / steps as f64)
}

/// The state a run starts from: the restart checkpoint or the configured initial data.
pub fn initial_state(cfg: &RunConfig, solver: &PoissonSolver) -> Result<State> {
    match &cfg.restart {
        Some(path) => {
            let ck = read_checkpoint(path)?;
            if ck.grid != *solver.grid() {
                return Err(Error::config("restart", "checkpoint grid differs from the configured grid"));
            }
            if ck.params != cfg.params()? {
                return Err(Error::config("restart", "checkpoint parameters differ from the configured ones"));
            }
            ck.to_state(solver)
        }
        None => initial_condition(cfg.ic, solver, cfg.seed, cfg.amplitude),
    }
}

/// Runs the configured simulation, handing each record to `sink` as soon as
/// it is complete. Residuals at a record use the steps either side of it, so
/// the first and last records carry none.
pub fn simulate(cfg: &RunConfig, mut sink: impl FnMut(&DiagnosticsRecord) -> Result<()>) -> Result<RunReport> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let params = cfg.params()?;
    let solver = PoissonSolver::with_method(grid, cfg.solver);
    let stepper = Stepper::new(solver, params, cfg.advection);
    let mut cur = initial_state(cfg, stepper.solver())?;
    let t0 = cur.t();
    if !(cfg.t_end > t0) {
        return Err(Error::config("t_end", format!("must exceed the start time {t0}")));
    }
    let dt_bound = match cfg.step {
        StepControl::Fixed { dt } => dt,
        StepControl::Adaptive { cfl, dt_max } => stepper.stable_dt(&cur, cfl, dt_max),
    };
    let (steps, dt) = partition(t0, cfg.t_end, dt_bound);
    if steps > cfg.max_steps {
        return Err(Error::config(
            "max_steps",
            format!("run needs {steps} steps of {dt:e}, above the limit {}", cfg.max_steps),
        ));
    }

    let standard = params.variant() == Variant::Standard;
    let p = cfg.lp;
    let mut tracker = if standard {
        let z0 = lp_norm(&combined_z(&cur, &params)?, p);
        Some(GronwallTracker::new(&params, t0, z0, lp_norm(cur.w(), p))?)
    } else {
        None
    };
    let make_record = |state: &State, tracker: &Option<GronwallTracker>| {
        let mut r = norms(state, &params, p);
        r.gronwall_envelope = tracker.as_ref().map(GronwallTracker::value);
        r
    };

    let mut report = RunReport {
        records: Vec::new(),
        final_state: cur.clone(),
        params,
        dt,
        steps,
        monotone: true,
        max_energy_ratio: None,
        max_z_residual: None,
        max_z_ratio: None,
        max_envelope_ratio: None,
    };
    let mut emit = |r: DiagnosticsRecord, report: &mut RunReport| -> Result<()> {
        if let (Some(z), Some(env)) = (r.lp_z, r.gronwall_envelope) {
            bump(&mut report.max_envelope_ratio, ratio(z, env));
        }
        sink(&r)?;
        report.records.push(r);
        Ok(())
    };

    let mut prev: Option<State> = None;
    let mut pending = Some(make_record(&cur, &tracker));
    let mut e_cur = energy(&cur);
    for n in 0..steps {
        let next = stepper.step(&cur, dt)?;
        let e_next = energy(&next);
        if !e_next.is_finite() {
            return Err(Error::BlowUp { stage: "energy", t: next.t() });
        }
        if e_next > e_cur * (1.0 + MONOTONE_ULPS * f64::EPSILON) {
            report.monotone = false;
        }
        e_cur = e_next;
        if let Some(tr) = tracker.as_mut() {
            tr.push(next.t(), lp_norm(next.w(), p));
        }
        if let Some(mut r) = pending.take() {
            if let Some(before) = &prev {
                let window = [before, &cur, &next];
                let budget = energy_budget(window, &params)?;
                r.energy_residual = Some(budget.residual());
                bump(&mut report.max_energy_ratio, ratio(budget.residual(), budget.scale()));
                if standard {
                    let zr = z_residual(window, &params, cfg.advection)?;
                    let zn = lp_norm(&combined_z(&cur, &params)?, NormExponent::Finite(2.0));
                    r.z_residual_l2 = Some(zr);
                    bump(&mut report.max_z_residual, zr);
                    bump(&mut report.max_z_ratio, ratio(zr, zn));
                }
            }
            emit(r, &mut report)?;
        }
        if (n + 1) % cfg.every == 0 || n + 1 == steps {
            pending = Some(make_record(&next, &tracker));
        }
        prev = Some(cur);
        cur = next;
    }
    if let Some(r) = pending.take() {
        emit(r, &mut report)?;
    }
    report.final_state = cur;
    Ok(report)
}

/// Runs without a sink.
pub fn simulate_quiet(cfg: &RunConfig) -> Result<RunReport> {
    simulate(cfg, |_| Ok(()))
}

/// Like [`simulate`], streaming records to a CSV file at `path`.
pub fn simulate_to_csv(cfg: &RunConfig, path: &Path) -> Result<RunReport> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = crate::app::csv::CsvWriter::new(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))?;
    let report = simulate(cfg, |r| w.write(r).map_err(|e| Error::io(path, e)))?;
    w.finish().map_err(|e| Error::io(path, e))?;
    Ok(report)
}
