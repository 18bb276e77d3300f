//! Manufactured solutions: closed-form `(psi*, w*)`, the forcing that makes
//! them exact solutions of the forced system, and grid-refinement studies.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::domain::{inner_product, AdvectionScheme, Grid, ScalarField};
use crate::dynamics::{Forcing, PhysParams, State, Stepper};
use crate::elliptic::PoissonSolver;
use crate::error::Result;
use crate::par;

/// `A exp(-decay t) sin(m pi x / lx) sin(n pi y / ly)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineMode {
    pub amplitude: f64,
    pub decay: f64,
    pub m: u32,
    pub n: u32,
}

/// Value and derivatives of a [`SineMode`] at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub f: f64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl SineMode {
    pub fn zero() -> Self {
        SineMode { amplitude: 0.0, decay: 0.0, m: 1, n: 1 }
    }

    pub fn jet(&self, lx: f64, ly: f64, x: f64, y: f64, t: f64) -> Jet {
        let a = self.m as f64 * PI / lx;
        let b = self.n as f64 * PI / ly;
        let amp = self.amplitude * (-self.decay * t).exp();
        let (sx, cx) = (a * x).sin_cos();
        let (sy, cy) = (b * y).sin_cos();
        let f = amp * sx * sy;
        Jet {
            f,
            t: -self.decay * f,
            x: amp * a * cx * sy,
            y: amp * b * sx * cy,
            xx: -a * a * f,
            yy: -b * b * f,
            xy: amp * a * b * cx * cy,
        }
    }

    /// `a^2 + b^2`, the eigenvalue of `-lap` for this mode.
    pub fn wavenumber_sq(&self, lx: f64, ly: f64) -> f64 {
        let a = self.m as f64 * PI / lx;
        let b = self.n as f64 * PI / ly;
        a * a + b * b
    }
}

/// Closed-form streamfunction and micro-rotation, both vanishing on the
/// boundary of `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub psi: SineMode,
    pub w: SineMode,
    pub lx: f64,
    pub ly: f64,
}

impl Default for ManufacturedSolution {
    /// `psi* = e^{-t} sin(pi x) sin(pi y)`, `w* = e^{-t} sin(pi x) sin(2 pi y)`.
    fn default() -> Self {
        ManufacturedSolution {
            psi: SineMode { amplitude: 1.0, decay: 1.0, m: 1, n: 1 },
            w: SineMode { amplitude: 1.0, decay: 1.0, m: 1, n: 2 },
            lx: 1.0,
            ly: 1.0,
        }
    }
}

/// Pointwise closed-form fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactPoint {
    pub omega: f64,
    pub w: f64,
    pub u1: f64,
    pub u2: f64,
}

impl ManufacturedSolution {
    pub fn zero() -> Self {
        ManufacturedSolution {
            psi: SineMode::zero(),
            w: SineMode::zero(),
            lx: 1.0,
            ly: 1.0,
        }
    }

    pub fn exact(&self, x: f64, y: f64, t: f64) -> ExactPoint {
        let p = self.psi.jet(self.lx, self.ly, x, y, t);
        let w = self.w.jet(self.lx, self.ly, x, y, t);
        ExactPoint {
            omega: -(p.xx + p.yy),
            w: w.f,
            u1: p.y,
            u2: -p.x,
        }
    }

    /// `(f_omega, f_w)` at one point:
    ///
    /// ```text
    /// f_omega = omega_t + u.grad omega + 2 kappa lap w  (+ kappa omega, damped)
    /// f_w     = w_t - gamma lap w + c w + u.grad w - 2 kappa omega
    /// ```
    pub fn forcing_at(&self, params: &PhysParams, x: f64, y: f64, t: f64) -> (f64, f64) {
        let p = self.psi.jet(self.lx, self.ly, x, y, t);
        let w = self.w.jet(self.lx, self.ly, x, y, t);
        let k2 = self.psi.wavenumber_sq(self.lx, self.ly);
        let (u1, u2) = (p.y, -p.x);
        // omega = k2 psi for a single sine mode
        let omega = k2 * p.f;
        let omega_t = k2 * p.t;
        let adv_omega = k2 * (u1 * p.x + u2 * p.y);
        let lap_w = w.xx + w.yy;
        let kappa = params.kappa();
        let f_omega = omega_t + adv_omega + 2.0 * kappa * lap_w + params.velocity_damping() * omega;
        let f_w = w.t - params.gamma() * lap_w + params.w_reaction() * w.f + u1 * w.x + u2 * w.y
            - 2.0 * kappa * omega;
        (f_omega, f_w)
    }

    fn fields(&self, grid: &Grid, pick: impl Fn(f64, f64) -> f64 + Sync + Send) -> ScalarField {
        ScalarField::from_fn(*grid, pick)
    }

    pub fn omega_field(&self, grid: &Grid, t: f64) -> ScalarField {
        self.fields(grid, |x, y| self.exact(x, y, t).omega)
    }

    pub fn w_field(&self, grid: &Grid, t: f64) -> ScalarField {
        self.fields(grid, |x, y| self.exact(x, y, t).w)
    }
}

/// Forcing fields at time `t` on `grid`, evaluated from the closed forms.
pub fn mms_forcing(ms: &ManufacturedSolution, params: &PhysParams, t: f64, grid: &Grid) -> (ScalarField, ScalarField) {
    (
        ScalarField::from_fn(*grid, |x, y| ms.forcing_at(params, x, y, t).0),
        ScalarField::from_fn(*grid, |x, y| ms.forcing_at(params, x, y, t).1),
    )
}

/// [`Forcing`] adapter injecting the manufactured sources into a [`Stepper`].
#[derive(Debug, Clone)]
pub struct MmsForcing {
    pub ms: ManufacturedSolution,
    pub params: PhysParams,
}

impl Forcing for MmsForcing {
    fn omega(&self, t: f64, grid: &Grid) -> ScalarField {
        ScalarField::from_fn(*grid, |x, y| self.ms.forcing_at(&self.params, x, y, t).0)
    }
    fn w(&self, t: f64, grid: &Grid) -> ScalarField {
        ScalarField::from_fn(*grid, |x, y| self.ms.forcing_at(&self.params, x, y, t).1)
    }
}

/// Settings of a refinement study on the unit-aspect domain of `ms`.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    /// Nodes per axis at each level.
    pub levels: Vec<usize>,
    pub t_end: f64,
    /// `dt = dt_per_h * h`, rounded down so the run ends exactly at `t_end`.
    pub dt_per_h: f64,
    pub scheme: AdvectionScheme,
    /// Run levels concurrently.
    pub parallel: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            levels: vec![32, 64, 128],
            t_end: 0.5,
            dt_per_h: 0.25,
            scheme: AdvectionScheme::Central2,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    /// Max over time of the L2 error of omega.
    pub err_omega: f64,
    pub err_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub levels: Vec<LevelResult>,
}

impl ConvergenceTable {
    /// Observed orders `log2(e_h / e_{h/2})` between consecutive levels,
    /// scaled by the actual spacing ratio.
    pub fn orders(&self) -> Vec<(f64, f64)> {
        self.levels
            .windows(2)
            .map(|w| {
                let r = (w[0].h / w[1].h).ln();
                (
                    (w[0].err_omega / w[1].err_omega).ln() / r,
                    (w[0].err_w / w[1].err_w).ln() / r,
                )
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,h,dt,steps,err_omega,err_w,order_omega,order_w\n");
        let orders = self.orders();
        for (k, l) in self.levels.iter().enumerate() {
            let (po, pw) = if k == 0 {
                ("NaN".to_string(), "NaN".to_string())
            } else {
                (format!("{:.16e}", orders[k - 1].0), format!("{:.16e}", orders[k - 1].1))
            };
            s.push_str(&format!(
                "{},{:.16e},{:.16e},{},{:.16e},{:.16e},{},{}\n",
                l.n, l.h, l.dt, l.steps, l.err_omega, l.err_w, po, pw
            ));
        }
        s
    }
}

fn l2_error(f: &ScalarField, exact: &ScalarField) -> f64 {
    let d = f.lin_comb(1.0, -1.0, exact).expect("same grid");
    inner_product(&d, &d).expect("same grid").max(0.0).sqrt()
}

fn run_level(ms: &ManufacturedSolution, params: &PhysParams, cfg: &StudyConfig, n: usize) -> Result<LevelResult> {
    let grid = Grid::new(n, n, ms.lx, ms.ly)?;
    let solver = PoissonSolver::new(grid);
    let stepper = Stepper::new(solver, *params, cfg.scheme).with_forcing(Arc::new(MmsForcing { ms: *ms, params: *params }));
    let h = grid.min_spacing();
    let steps = (cfg.t_end / (cfg.dt_per_h * h)).ceil().max(1.0) as usize;
    let dt = cfg.t_end / steps as f64;
    let mut state = State::from_vorticity(0.0, ms.omega_field(&grid, 0.0), ms.w_field(&grid, 0.0), stepper.solver())?;
    let (mut eo, mut ew) = (0.0_f64, 0.0_f64);
    for k in 1..=steps {
        state = stepper.step(&state, dt)?;
        let t = k as f64 * dt;
        eo = eo.max(l2_error(state.omega(), &ms.omega_field(&grid, t)));
        ew = ew.max(l2_error(state.w(), &ms.w_field(&grid, t)));
    }
    Ok(LevelResult { n, h, dt, steps, err_omega: eo, err_w: ew })
}

/// Runs every level and collects max-in-time L2 errors against the closed form.
pub fn convergence_study(ms: &ManufacturedSolution, params: &PhysParams, cfg: &StudyConfig) -> Result<ConvergenceTable> {
    let results: Vec<Result<LevelResult>> = if cfg.parallel {
        par::map_jobs(&cfg.levels, |&n| run_level(ms, params, cfg, n))
    } else {
        cfg.levels.iter().map(|&n| run_level(ms, params, cfg, n)).collect()
    };
    Ok(ConvergenceTable {
        levels: results.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Variant;

    /// Values computed symbolically (sympy) for the default solution.
    /// Columns: x, y, t, f_omega, f_w.
    const STANDARD_G1_K02: [(f64, f64, f64, f64, f64); 5] = [
        (0.1, 0.2, 0.0, -9.3865515789113618145, 14.188182986209156557),
        (0.3, 0.7, 0.25, 1.7665379310793201588, -30.460818406380062093),
        (0.5, 0.5, 0.5, -11.972435336990877963, -4.7889741347963515139),
        (0.77, 0.13, 0.1, -13.301172832116164531, 19.059817592154387387),
        (0.9, 0.45, 0.4, -5.3019497828943759517, -0.98097443406309553286),
    ];
    const DAMPED_G1_K01: [(f64, f64, f64, f64, f64); 5] = [
        (0.1, 0.2, 0.0, -6.1274132558517408102, 14.670137618490197226),
        (0.3, 0.7, 0.25, -3.1414114561643591401, -27.969097725768440440),
        (0.5, 0.5, 0.5, -10.775191803291791043, -2.3944870673981757569),
        (0.77, 0.13, 0.1, -8.5269580520453956136, 19.649043375186662175),
        (0.9, 0.45, 0.4, -4.2663531402322926511, -0.22449320451958701268),
    ];

    #[test]
    fn forcing_matches_symbolic_values() {
        let ms = ManufacturedSolution::default();
        let cases = [
            (PhysParams::new(1.0, 0.2, Variant::Standard).unwrap(), STANDARD_G1_K02),
            (PhysParams::new(1.0, 0.1, Variant::Damped).unwrap(), DAMPED_G1_K01),
        ];
        for (params, table) in cases {
            for (x, y, t, fo, fw) in table {
                let (a, b) = ms.forcing_at(&params, x, y, t);
                assert!((a - fo).abs() < 1e-10, "f_omega at ({x},{y},{t}): {a} vs {fo}");
                assert!((b - fw).abs() < 1e-10, "f_w at ({x},{y},{t}): {b} vs {fw}");
            }
        }
    }

    #[test]
    fn zero_solution_needs_no_forcing() {
        let g = Grid::unit_square(12).unwrap();
        let p = PhysParams::new(1.0, 0.3, Variant::Standard).unwrap();
        let (fo, fw) = mms_forcing(&ManufacturedSolution::zero(), &p, 0.3, &g);
        assert_eq!(fo.max_abs(), 0.0);
        assert_eq!(fw.max_abs(), 0.0);
    }

    #[test]
    fn heat_eigenmode_needs_no_w_forcing() {
        let gamma = 0.8;
        let ms = ManufacturedSolution {
            psi: SineMode::zero(),
            w: SineMode { amplitude: 1.0, decay: gamma * 2.0 * PI * PI, m: 1, n: 1 },
            lx: 1.0,
            ly: 1.0,
        };
        let g = Grid::unit_square(20).unwrap();
        let p = PhysParams::new(gamma, 0.0, Variant::Standard).unwrap();
        for t in [0.0, 0.1, 0.7] {
            let (fo, fw) = mms_forcing(&ms, &p, t, &g);
            assert!(fw.max_abs() < 1e-13);
            assert!(fo.max_abs() < 1e-13);
        }
    }

    #[test]
    fn jet_matches_finite_differences() {
        let mode = SineMode { amplitude: 1.3, decay: 0.7, m: 2, n: 3 };
        let (lx, ly) = (1.5, 0.8);
        let h = 1e-4;
        let mut s: u64 = 12345;
        let mut rnd = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let (x, y, t) = (rnd() * lx, rnd() * ly, rnd());
            let j = mode.jet(lx, ly, x, y, t);
            let f = |x: f64, y: f64, t: f64| mode.jet(lx, ly, x, y, t).f;
            let fd_t = (f(x, y, t + h) - f(x, y, t - h)) / (2.0 * h);
            let fd_x = (f(x + h, y, t) - f(x - h, y, t)) / (2.0 * h);
            let fd_y = (f(x, y + h, t) - f(x, y - h, t)) / (2.0 * h);
            let fd_xx = (f(x + h, y, t) - 2.0 * j.f + f(x - h, y, t)) / (h * h);
            let fd_yy = (f(x, y + h, t) - 2.0 * j.f + f(x, y - h, t)) / (h * h);
            let fd_xy = (f(x + h, y + h, t) - f(x + h, y - h, t) - f(x - h, y + h, t) + f(x - h, y - h, t)) / (4.0 * h * h);
            for (a, b) in [(j.t, fd_t), (j.x, fd_x), (j.y, fd_y), (j.xx, fd_xx), (j.yy, fd_yy), (j.xy, fd_xy)] {
                assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn closed_forms_vanish_on_boundary() {
        let ms = ManufacturedSolution::default();
        for k in 0..=10 {
            let s = k as f64 / 10.0;
            for (x, y) in [(0.0, s), (1.0, s), (s, 0.0), (s, 1.0)] {
                let e = ms.exact(x, y, 0.3);
                assert!(e.w.abs() < 1e-15);
                assert!(ms.psi.jet(1.0, 1.0, x, y, 0.3).f.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_solution_study_has_zero_error() {
        let p = PhysParams::new(1.0, 0.2, Variant::Standard).unwrap();
        let cfg = StudyConfig { levels: vec![8, 16], t_end: 0.1, ..Default::default() };
        let t = convergence_study(&ManufacturedSolution::zero(), &p, &cfg).unwrap();
        for l in &t.levels {
            assert_eq!(l.err_omega, 0.0);
            assert_eq!(l.err_w, 0.0);
        }
    }
}
