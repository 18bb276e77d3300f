//! Time integration of the micropolar system in vorticity-streamfunction
//! form.
//!
//! Evolved variables are the vorticity `omega` and the micro-rotation `w`:
//!
//! ```text
//! omega_t + u.grad omega = -2 kappa lap w            (- kappa omega, damped)
//! w_t - gamma lap w + c w + u.grad w = 2 kappa omega (c = 4 kappa standard, 0 damped)
//! -lap psi = omega,  u = grad_perp psi,  psi = w = 0 on the boundary
//! ```
//!
//! A step first advances `omega` with Heun's method, then `w` with
//! Crank-Nicolson on `gamma lap - c` and trapezoidal explicit treatment of
//! transport and coupling. The second Heun stage sees the Crank-Nicolson
//! predictor of `w`, so the `lap w` contributions to `omega` and to
//! `(2 kappa / gamma) w` cancel up to the predictor-corrector difference.

use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{advect, laplacian, AdvectionScheme, Grid, ScalarField, VectorField};
use crate::elliptic::PoissonSolver;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// `w` equation carries `4 kappa w`; no velocity damping.
    #[default]
    Standard,
    /// Velocity damping `kappa u`, no `4 kappa w` term.
    Damped,
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "standard" => Ok(Variant::Standard),
            "damped" => Ok(Variant::Damped),
            other => Err(Error::config(
                "variant",
                format!("unknown variant `{other}` (expected standard or damped)"),
            )),
        }
    }
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Damped => "damped",
        }
    }
}

/// Physical coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    gamma: f64,
    kappa: f64,
    variant: Variant,
}

impl PhysParams {
    pub fn new(gamma: f64, kappa: f64, variant: Variant) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::config("gamma", format!("must be positive, got {gamma}")));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::config("kappa", format!("must be non-negative, got {kappa}")));
        }
        Ok(PhysParams { gamma, kappa, variant })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// `gamma > 4 kappa`, the exponential-decay regime.
    pub fn decay_regime(&self) -> bool {
        self.gamma > 4.0 * self.kappa
    }

    /// Coefficient of the zeroth-order term in the `w` equation.
    pub fn w_reaction(&self) -> f64 {
        match self.variant {
            Variant::Standard => 4.0 * self.kappa,
            Variant::Damped => 0.0,
        }
    }

    /// Coefficient of the velocity damping term.
    pub fn velocity_damping(&self) -> f64 {
        match self.variant {
            Variant::Standard => 0.0,
            Variant::Damped => self.kappa,
        }
    }
}

/// Time-stamped snapshot. `psi` and `u` are always derived from `omega`
/// and `w` vanishes on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    t: f64,
    omega: ScalarField,
    w: ScalarField,
    psi: ScalarField,
    u: VectorField,
}

impl State {
    /// Builds a state from vorticity and micro-rotation. Boundary values of
    /// `w` are overwritten with zero.
    pub fn from_vorticity(t: f64, omega: ScalarField, mut w: ScalarField, solver: &PoissonSolver) -> Result<Self> {
        omega.grid().check_same(w.grid())?;
        solver.grid().check_same(omega.grid())?;
        w.zero_boundary();
        let (psi, u) = solver.velocity_from_vorticity(&omega)?;
        Ok(State { t, omega, w, psi, u })
    }

    pub fn zero(grid: Grid) -> Self {
        State {
            t: 0.0,
            omega: ScalarField::zeros(grid),
            w: ScalarField::zeros(grid),
            psi: ScalarField::zeros(grid),
            u: VectorField::zeros(grid),
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn omega(&self) -> &ScalarField {
        &self.omega
    }
    pub fn w(&self) -> &ScalarField {
        &self.w
    }
    pub fn psi(&self) -> &ScalarField {
        &self.psi
    }
    pub fn u(&self) -> &VectorField {
        &self.u
    }
    pub fn grid(&self) -> &Grid {
        self.omega.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.omega.is_finite() && self.w.is_finite() && self.psi.is_finite() && self.u.is_finite()
    }
}

/// How the step size is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepControl {
    Fixed { dt: f64 },
    /// `dt` from [`Stepper::stable_dt`] on the initial state.
    Adaptive { cfl: f64, dt_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeControls {
    pub step: StepControl,
    pub t_end: f64,
    pub max_steps: usize,
}

impl TimeControls {
    pub fn validate(&self) -> Result<()> {
        match self.step {
            StepControl::Fixed { dt } if !(dt.is_finite() && dt > 0.0) => {
                return Err(Error::config("dt", format!("must be positive, got {dt}")));
            }
            StepControl::Adaptive { cfl, dt_max } => {
                if !(cfl > 0.0 && cfl <= 1.0) {
                    return Err(Error::config("cfl", format!("must lie in (0, 1], got {cfl}")));
                }
                if !(dt_max.is_finite() && dt_max > 0.0) {
                    return Err(Error::config("dt_max", format!("must be positive, got {dt_max}")));
                }
            }
            _ => {}
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::config("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps", "must be at least 1"));
        }
        Ok(())
    }
}

/// Time-dependent source terms added to the two evolution equations.
pub trait Forcing: Send + Sync {
    fn omega(&self, t: f64, grid: &Grid) -> ScalarField;
    fn w(&self, t: f64, grid: &Grid) -> ScalarField;
}

/// The time integrator. Immutable; `step` is a pure function of its input.
#[derive(Clone)]
pub struct Stepper {
    params: PhysParams,
    scheme: AdvectionScheme,
    solver: PoissonSolver,
    forcing: Option<Arc<dyn Forcing>>,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper")
            .field("params", &self.params)
            .field("scheme", &self.scheme)
            .field("solver", &self.solver.method())
            .field("forced", &self.forcing.is_some())
            .finish()
    }
}

fn check(f: &ScalarField, stage: &'static str, t: f64) -> Result<()> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(Error::BlowUp { stage, t })
    }
}

impl Stepper {
    pub fn new(solver: PoissonSolver, params: PhysParams, scheme: AdvectionScheme) -> Self {
        Stepper {
            params,
            scheme,
            solver,
            forcing: None,
        }
    }

    pub fn with_forcing(mut self, forcing: Arc<dyn Forcing>) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }
    pub fn scheme(&self) -> AdvectionScheme {
        self.scheme
    }
    pub fn solver(&self) -> &PoissonSolver {
        &self.solver
    }
    pub fn grid(&self) -> &Grid {
        self.solver.grid()
    }

    /// Right-hand side of the vorticity equation for the given fields.
    fn omega_tendency(&self, omega: &ScalarField, u: &VectorField, w: &ScalarField, t: f64) -> Result<ScalarField> {
        let k = self.params.kappa;
        let mut r = advect(u, omega, self.scheme)?.lin_comb(-1.0, -2.0 * k, &laplacian(w))?;
        let damping = self.params.velocity_damping();
        if damping != 0.0 {
            r = r.lin_comb(1.0, -damping, omega)?;
        }
        if let Some(f) = &self.forcing {
            r = r.lin_comb(1.0, 1.0, &f.omega(t, self.grid()))?;
        }
        Ok(r)
    }

    /// `d omega / dt` at `state`: `-u.grad omega - 2 kappa lap w`, minus
    /// `kappa omega` for the damped variant.
    pub fn rhs_omega(&self, state: &State) -> Result<ScalarField> {
        self.omega_tendency(&state.omega, &state.u, &state.w, state.t)
    }

    /// Explicitly treated part of the `w` equation: `-u.grad w + 2 kappa omega`.
    pub fn explicit_w_terms(&self, u: &VectorField, w: &ScalarField, omega: &ScalarField) -> Result<ScalarField> {
        advect(u, w, self.scheme)?.lin_comb(-1.0, 2.0 * self.params.kappa, omega)
    }

    fn crank_nicolson(&self, w: &ScalarField, explicit: &ScalarField, dt: f64) -> Result<ScalarField> {
        let g = self.params.gamma;
        let c = self.params.w_reaction();
        let rhs = w
            .lin_comb(1.0 - 0.5 * c * dt, 0.5 * g * dt, &laplacian(w))?
            .lin_comb(1.0, dt, explicit)?;
        self.solver.solve_shifted(&rhs, 1.0 + 0.5 * c * dt, 0.5 * g * dt)
    }

    /// One Crank-Nicolson step for `w` with the explicit terms held at
    /// `explicit`; when `None`, they are evaluated at `state` (plus forcing
    /// at `state.t`). The result vanishes on the boundary.
    pub fn step_w(&self, state: &State, dt: f64, explicit: Option<&ScalarField>) -> Result<ScalarField> {
        match explicit {
            Some(e) => self.crank_nicolson(&state.w, e, dt),
            None => {
                let mut e = self.explicit_w_terms(&state.u, &state.w, &state.omega)?;
                if let Some(f) = &self.forcing {
                    e = e.lin_comb(1.0, 1.0, &f.w(state.t, self.grid()))?;
                }
                self.crank_nicolson(&state.w, &e, dt)
            }
        }
    }

    /// Advances `state` by `dt`.
    pub fn step(&self, state: &State, dt: f64) -> Result<State> {
        let t0 = state.t;
        let t1 = t0 + dt;

        // Predictor for w with explicit terms frozen at t0.
        let mut e0 = self.explicit_w_terms(&state.u, &state.w, &state.omega)?;
        let mut e0_forced = e0.clone();
        if let Some(f) = &self.forcing {
            e0_forced = e0.lin_comb(1.0, 1.0, &f.w(t0, self.grid()))?;
        }
        let w_pred = self.crank_nicolson(&state.w, &e0_forced, dt)?;
        check(&w_pred, "w_predictor", t0)?;

        // Heun for omega.
        let k1 = self.omega_tendency(&state.omega, &state.u, &state.w, t0)?;
        let omega_pred = state.omega.lin_comb(1.0, dt, &k1)?;
        check(&omega_pred, "omega_predictor", t0)?;
        let (_, u_pred) = self.solver.velocity_from_vorticity(&omega_pred)?;
        let k2 = self.omega_tendency(&omega_pred, &u_pred, &w_pred, t1)?;
        let omega = state.omega.lin_comb(1.0, 0.5 * dt, &k1.lin_comb(1.0, 1.0, &k2)?)?;
        check(&omega, "omega", t0)?;
        let (psi, u) = self.solver.velocity_from_vorticity(&omega)?;
        check(&psi, "velocity", t0)?;

        // Corrector for w: trapezoidal explicit terms, forcing at the midpoint.
        let e1 = self.explicit_w_terms(&u, &w_pred, &omega)?;
        e0 = e0.lin_comb(0.5, 0.5, &e1)?;
        if let Some(f) = &self.forcing {
            e0 = e0.lin_comb(1.0, 1.0, &f.w(t0 + 0.5 * dt, self.grid()))?;
        }
        let w = self.crank_nicolson(&state.w, &e0, dt)?;
        check(&w, "w", t0)?;

        // Swap the predicted w for the corrected one in the coupling term, so
        // both equations see the same trapezoidal average of lap w.
        let k = self.params.kappa;
        if k == 0.0 {
            return Ok(State { t: t1, omega, w, psi, u });
        }
        let dw = w.lin_comb(1.0, -1.0, &w_pred)?;
        let omega = omega.lin_comb(1.0, -k * dt, &laplacian(&dw))?;
        check(&omega, "omega_correction", t0)?;
        // Re-solved rather than shifted so that a step depends on (t, omega, w) only.
        let (psi, u) = self.solver.velocity_from_vorticity(&omega)?;

        Ok(State { t: t1, omega, w, psi, u })
    }

    /// Step size bound from the transport CFL condition and guards for the
    /// explicit `lap w` source and zeroth-order terms:
    ///
    /// `cfl * min(h / (max|u| + 1e-12), 1 / sqrt(2 kappa lambda_max), 1 / (5 kappa))`,
    /// capped at `dt_max`.
    pub fn stable_dt(&self, state: &State, cfl: f64, dt_max: f64) -> f64 {
        let h = self.grid().min_spacing();
        let mut bound = h / (state.u.max_magnitude() + 1e-12);
        let k = self.params.kappa;
        if k > 0.0 {
            bound = bound
                .min(1.0 / (2.0 * k * self.solver.max_eigenvalue()).sqrt())
                .min(1.0 / (5.0 * k));
        }
        (cfl * bound).min(dt_max)
    }
}

/// Built-in initial-data families. Each is a finite sum of Dirichlet sine
/// modes, so `w0 = 0` and `u0 . n = 0` on the boundary and `div u0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialKind {
    /// `psi0 = w0 = A sin(pi x / lx) sin(pi y / ly)`.
    Eigenmode,
    /// Counter-rotating cell pair `psi0 = A sin(2 pi x / lx) sin(pi y / ly)`, `w0 = 0`.
    VortexPair,
    /// Random combinations of the lowest 8x8 modes weighted by `1 / (m^2 + n^2)`.
    #[default]
    RandomSmooth,
}

impl FromStr for InitialKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "eigenmode" => Ok(InitialKind::Eigenmode),
            "vortex_pair" => Ok(InitialKind::VortexPair),
            "random_smooth" => Ok(InitialKind::RandomSmooth),
            other => Err(Error::config(
                "ic",
                format!("unknown initial condition `{other}` (expected eigenmode, vortex_pair or random_smooth)"),
            )),
        }
    }
}

impl InitialKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitialKind::Eigenmode => "eigenmode",
            InitialKind::VortexPair => "vortex_pair",
            InitialKind::RandomSmooth => "random_smooth",
        }
    }
}

const RANDOM_MODES: usize = 8;

fn sine_table(n: usize, h: f64, len: f64, modes: usize) -> Vec<Vec<f64>> {
    (1..=modes)
        .map(|m| {
            (0..n)
                .map(|i| (m as f64 * std::f64::consts::PI * i as f64 * h / len).sin())
                .collect()
        })
        .collect()
}

/// Initial state at `t = 0`. The vorticity is `-laplacian(psi0)` with the
/// 5-point stencil, so `psi` recovered by the solver equals `psi0` at the
/// nodes up to roundoff.
pub fn initial_condition(
    kind: InitialKind,
    solver: &PoissonSolver,
    seed: u64,
    amplitude: f64,
) -> Result<State> {
    let grid = *solver.grid();
    let (lx, ly) = (grid.lx(), grid.ly());
    let pi = std::f64::consts::PI;
    let (psi0, w0) = match kind {
        InitialKind::Eigenmode => {
            let f = ScalarField::from_fn(grid, move |x, y| amplitude * (pi * x / lx).sin() * (pi * y / ly).sin());
            (f.clone(), f)
        }
        InitialKind::VortexPair => (
            ScalarField::from_fn(grid, move |x, y| amplitude * (2.0 * pi * x / lx).sin() * (pi * y / ly).sin()),
            ScalarField::zeros(grid),
        ),
        InitialKind::RandomSmooth => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = || -> Vec<f64> {
                (0..RANDOM_MODES * RANDOM_MODES)
                    .map(|_| rng.random_range(-1.0..=1.0))
                    .collect()
            };
            let cpsi = draw();
            let cw = draw();
            let sx = sine_table(grid.nx(), grid.dx(), lx, RANDOM_MODES);
            let sy = sine_table(grid.ny(), grid.dy(), ly, RANDOM_MODES);
            let build = |c: &[f64]| {
                let mut f = ScalarField::zeros(grid);
                let nx = grid.nx();
                crate::par::for_each_row(f.values_mut(), nx, |j, row| {
                    for (i, v) in row.iter_mut().enumerate() {
                        let mut s = 0.0;
                        for n in 0..RANDOM_MODES {
                            for m in 0..RANDOM_MODES {
                                let weight = 1.0 / (((m + 1) * (m + 1) + (n + 1) * (n + 1)) as f64);
                                s += c[n * RANDOM_MODES + m] * weight * sx[m][i] * sy[n][j];
                            }
                        }
                        *v = amplitude * s;
                    }
                });
                f
            };
            (build(&cpsi), build(&cw))
        }
    };
    let omega0 = laplacian(&psi0).scaled(-1.0);
    State::from_vorticity(0.0, omega0, w0, solver)
}
