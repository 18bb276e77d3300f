//! Acceptance suite. Criteria run one after another in a single test so that
//! wall-clock budgets are not skewed by concurrent tests; each prints a
//! PASS/FAIL line directly to stderr, bypassing the test harness capture.

use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use micropolar::analysis::fit_exponential;
use micropolar::app::checkpoint::Checkpoint;
use micropolar::app::commands::{self, closed_form_lambda1};
use micropolar::app::run::initial_state;
use micropolar::app::{simulate_quiet, Checks, RunConfig, RunReport};
use micropolar::domain::{inner_product, AdvectionScheme, Grid, ScalarField};
use micropolar::dynamics::{PhysParams, State, StepControl, Stepper, Variant};
use micropolar::elliptic::{smallest_dirichlet_eigenvalue, PoissonSolver};
use micropolar::error::Error;

type Outcome = Result<String, String>;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    RunConfig::from_path(&configs().join(name)).unwrap()
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn sine_mode(grid: Grid) -> ScalarField {
    let pi = std::f64::consts::PI;
    ScalarField::from_fn(grid, |x, y| (pi * x).sin() * (pi * y).sin())
}

fn elliptic_exactness() -> Outcome {
    let mut notes = Vec::new();
    for n in [64, 128] {
        let grid = Grid::unit_square(n).map_err(err)?;
        let lambda = closed_form_lambda1(&grid);
        let mode = sine_mode(grid);
        let psi = PoissonSolver::new(grid).solve_poisson_dirichlet(&mode.scaled(lambda)).map_err(err)?;
        let sol_err = psi.lin_comb(1.0, -1.0, &mode).map_err(err)?.max_abs();
        let eig = smallest_dirichlet_eigenvalue(&grid).map_err(err)?;
        let rel = (eig.lambda1 - lambda).abs() / lambda;
        if !(sol_err <= 1e-10 && rel <= 1e-10) {
            return Err(format!("{n}^2: solve error {sol_err:.2e}, eigenvalue error {rel:.2e}"));
        }
        notes.push(format!("{n}^2 solve {sol_err:.1e} eig {rel:.1e}"));
    }
    Ok(notes.join(", "))
}

fn heat_limit_decay() -> Outcome {
    let grid = Grid::unit_square(128).map_err(err)?;
    let gamma = 1.0;
    let params = PhysParams::new(gamma, 0.0, Variant::Standard).map_err(err)?;
    let stepper = Stepper::new(PoissonSolver::new(grid), params, AdvectionScheme::Central2);
    let mut s =
        State::from_vorticity(0.0, ScalarField::zeros(grid), sine_mode(grid), stepper.solver()).map_err(err)?;
    let dt = grid.dx() / 4.0;
    let steps = (2.0 / dt).round() as usize;
    let (mut times, mut values) = (vec![0.0], vec![inner_product(s.w(), s.w()).map_err(err)?]);
    for n in 1..=steps {
        s = stepper.step(&s, dt).map_err(err)?;
        if n % 10 == 0 {
            times.push(s.t());
            values.push(inner_product(s.w(), s.w()).map_err(err)?);
        }
    }
    let (rate, _, _) = fit_exponential(&times, &values).map_err(err)?;
    let want = 2.0 * gamma * closed_form_lambda1(&grid);
    let rel = (rate - want).abs() / want;
    ensure(rel <= 0.01, format!("rate {rate:.6} vs 2 gamma lambda1 {want:.6} (rel {rel:.1e})"))
}

fn mms_convergence() -> Outcome {
    let start = Instant::now();
    let table = commands::mms(&load("mms.cfg")).map_err(err)?;
    let elapsed = start.elapsed();
    let orders = table.orders();
    let ok = orders.iter().all(|&(o, w)| o >= 1.9 && w >= 1.9) && elapsed <= Duration::from_secs(120);
    let listed: Vec<String> = orders.iter().map(|(o, w)| format!("({o:.3}, {w:.3})")).collect();
    ensure(ok, format!("orders (omega, w) {} in {:.1}s", listed.join(" "), elapsed.as_secs_f64()))
}

/// The standard run at `n^2` with `dt = h / 4` and records at common times.
fn standard_run(n: usize, every: usize) -> Result<RunReport, String> {
    let mut cfg = load("standard.cfg");
    cfg.nx = n;
    cfg.ny = n;
    cfg.every = every;
    cfg.step = StepControl::Fixed { dt: cfg.grid().map_err(err)?.dx() / 4.0 };
    simulate_quiet(&cfg).map_err(err)
}

fn max_residual(rep: &RunReport, pick: fn(&micropolar::analysis::DiagnosticsRecord) -> Option<f64>) -> f64 {
    rep.records.iter().filter_map(pick).fold(0.0, f64::max)
}

fn z_identity(coarse: &RunReport, fine: &RunReport) -> Outcome {
    let (zc, zf) = (max_residual(coarse, |r| r.z_residual_l2), max_residual(fine, |r| r.z_residual_l2));
    ensure(zc / zf >= 2.0, format!("max residual {zc:.3e} at 64^2, {zf:.3e} at 128^2, factor {:.2}", zc / zf))
}

fn energy_identity(cfg: &RunConfig, coarse: &RunReport, fine: &RunReport) -> Outcome {
    let ratio = fine.max_energy_ratio.ok_or("no interior records")?;
    let (ec, ef) = (max_residual(coarse, |r| r.energy_residual), max_residual(fine, |r| r.energy_residual));
    let order = (ec / ef).log2();
    let checked = fine.verify(cfg, Checks { energy: true, ..Checks::NONE }).is_ok();
    ensure(
        ratio <= 1e-3 && checked && order >= 1.5,
        format!("max residual / scale {ratio:.2e} at 128^2, refinement order {order:.2}"),
    )
}

fn gronwall_envelope(fine: &RunReport) -> Outcome {
    let r = fine.max_envelope_ratio.ok_or("no envelope")?;
    ensure(r <= 1.05, format!("max |Z|_inf / envelope {r:.6}"))
}

fn damped_decay() -> Outcome {
    let cfg = load("damped.cfg");
    let start = Instant::now();
    let rep = simulate_quiet(&cfg).map_err(err)?;
    let elapsed = start.elapsed();
    let d = commands::decay(&rep.records, &rep.params, &cfg.grid().map_err(err)?, cfg.fit_fraction).map_err(err)?;
    let c0 = d.energy.predicted_c0.ok_or("no C0")?;
    let ok = rep.monotone
        && (c0 - 0.6 * 0.2 / 1.4).abs() <= 1e-12
        && d.verify(0.9).is_ok()
        && elapsed <= Duration::from_secs(60);
    let detail = format!(
        "monotone {}, rate {:.4} vs C0 {c0:.4}, H1 rate {:.4} r2 {:.4}, {:.1}s",
        rep.monotone,
        d.energy.fitted_rate,
        d.h1.fitted_rate,
        d.h1.r_squared,
        elapsed.as_secs_f64()
    );
    ensure(ok, detail)
}

fn sweep_sanity() -> Outcome {
    let cfg = load("sweep.cfg");
    let rows = commands::sweep(&cfg, false).map_err(err)?;
    let mut bad = cfg.clone();
    bad.sweep_gamma = vec![1.0, 0.4];
    let refused = matches!(commands::sweep(&bad, false), Err(Error::Regime { .. }));
    let cells: Vec<String> = rows
        .iter()
        .map(|r| format!("({}, {}): {:.4} vs {:.4}", r.gamma, r.kappa, r.fitted_rate, r.predicted_c0))
        .collect();
    ensure(
        rows.len() == 4 && rows.iter().all(|r| r.passes(0.9)) && refused,
        format!("{}; gamma <= 4 kappa refused {refused}", cells.join(", ")),
    )
}

fn determinism() -> Outcome {
    let cfg = load("standard.cfg");
    let stepper = Stepper::new(PoissonSolver::new(cfg.grid().map_err(err)?), cfg.params().map_err(err)?, cfg.advection);
    let s0 = initial_state(&cfg, stepper.solver()).map_err(err)?;
    let state = stepper.step(&s0, 1e-3).map_err(err)?;
    let bytes = Checkpoint::from_state(&state, stepper.params()).to_bytes();
    let back = Checkpoint::from_bytes(&bytes).map_err(err)?.to_state(stepper.solver()).map_err(err)?;
    let bits = |f: &ScalarField| f.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let exact = bits(back.omega()) == bits(state.omega()) && bits(back.w()) == bits(state.w()) && back.t() == state.t();
    let dir = tempfile::TempDir::new().map_err(err)?;
    let mut csvs = Vec::new();
    for _ in 0..2 {
        let status = Command::new(env!("CARGO_BIN_EXE_mpolar"))
            .args(["run", "--threads", "1", "--check", "none", "--config"])
            .arg(configs().join("standard.cfg"))
            .arg("--out")
            .arg(dir.path())
            .env_remove("MPOLAR_SEED")
            .output()
            .map_err(err)?
            .status;
        if !status.success() {
            return Err(format!("run exited with {status}"));
        }
        csvs.push(std::fs::read(dir.path().join("diagnostics.csv")).map_err(err)?);
    }
    let same = csvs[0] == csvs[1];
    ensure(exact && same, format!("checkpoint bit-exact {exact}, single-thread reruns identical {same}"))
}

fn report(results: &mut Vec<bool>, id: usize, name: &str, outcome: Outcome) {
    let (verdict, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    let _ = writeln!(std::io::stderr(), "{verdict} {id} {name}: {detail}");
    results.push(outcome.is_ok());
}

#[test]
fn acceptance() {
    let mut results = Vec::new();
    report(&mut results, 1, "elliptic exactness", elliptic_exactness());
    report(&mut results, 2, "heat-limit decay", heat_limit_decay());
    report(&mut results, 3, "mms convergence", mms_convergence());
    match (standard_run(64, 5), standard_run(128, 10)) {
        (Ok(coarse), Ok(fine)) => {
            let cfg = load("standard.cfg");
            report(&mut results, 4, "Z identity residual", z_identity(&coarse, &fine));
            report(&mut results, 5, "energy identity residual", energy_identity(&cfg, &coarse, &fine));
            report(&mut results, 6, "Gronwall envelope", gronwall_envelope(&fine));
        }
        (a, b) => {
            let e = a.err().or(b.err()).unwrap_or_default();
            for (id, name) in [(4, "Z identity residual"), (5, "energy identity residual"), (6, "Gronwall envelope")] {
                report(&mut results, id, name, Err(e.clone()));
            }
        }
    }
    report(&mut results, 7, "damped exponential decay", damped_decay());
    report(&mut results, 8, "sweep sanity", sweep_sanity());
    report(&mut results, 9, "determinism and persistence", determinism());
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
