//! Dirichlet problems for the 5-point Laplacian: Poisson and shifted
//! (Helmholtz-type) solves, streamfunction recovery and the smallest
//! Dirichlet eigenvalue.
//!
//! All solves act on interior unknowns; boundary values of the result are
//! exactly zero.

mod dst;

pub use dst::SineTransform;

use std::str::FromStr;

use crate::domain::{grad_perp, Grid, ScalarField, VectorField};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    /// Exact diagonalization of the 5-point operator by sine transforms.
    #[default]
    SineTransform,
    /// Unpreconditioned conjugate gradients on the same operator.
    ConjugateGradient,
}

impl FromStr for SolverMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sine_transform" => Ok(SolverMethod::SineTransform),
            "conjugate_gradient" => Ok(SolverMethod::ConjugateGradient),
            other => Err(Error::config(
                "solver",
                format!("unknown method `{other}` (expected sine_transform or conjugate_gradient)"),
            )),
        }
    }
}

/// Eigenvalue `p` (1-based) of the 1D second-difference operator with `n`
/// nodes and spacing `h`.
fn eigenvalue_1d(p: usize, n: usize, h: f64) -> f64 {
    let s = (std::f64::consts::PI * p as f64 / (2.0 * (n - 1) as f64)).sin();
    4.0 / (h * h) * s * s
}

/// Solver for `(shift - diffusion * laplacian) u = rhs`, `u = 0` on the boundary.
#[derive(Debug, Clone)]
pub struct PoissonSolver {
    grid: Grid,
    method: SolverMethod,
    cg_tolerance: f64,
    cg_max_iterations: usize,
    dst_x: SineTransform,
    dst_y: SineTransform,
    eig_x: Vec<f64>,
    eig_y: Vec<f64>,
}

impl PoissonSolver {
    pub fn new(grid: Grid) -> Self {
        PoissonSolver::with_method(grid, SolverMethod::SineTransform)
    }

    pub fn with_method(grid: Grid, method: SolverMethod) -> Self {
        let (mx, my) = (grid.nx() - 2, grid.ny() - 2);
        PoissonSolver {
            grid,
            method,
            cg_tolerance: 1e-10,
            cg_max_iterations: 10 * grid.nx().max(grid.ny()),
            dst_x: SineTransform::new(mx),
            dst_y: SineTransform::new(my),
            eig_x: (1..=mx).map(|p| eigenvalue_1d(p, grid.nx(), grid.dx())).collect(),
            eig_y: (1..=my).map(|q| eigenvalue_1d(q, grid.ny(), grid.dy())).collect(),
        }
    }

    /// Overrides the conjugate-gradient stopping rule.
    pub fn cg_settings(mut self, tolerance: f64, max_iterations: usize) -> Self {
        self.cg_tolerance = tolerance;
        self.cg_max_iterations = max_iterations;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn method(&self) -> SolverMethod {
        self.method
    }

    /// Largest eigenvalue of the discrete `-laplacian`.
    pub fn max_eigenvalue(&self) -> f64 {
        self.eig_x.last().copied().unwrap_or(0.0) + self.eig_y.last().copied().unwrap_or(0.0)
    }

    /// `-laplacian(psi) = rhs` at interior nodes, `psi = 0` on the boundary.
    pub fn solve_poisson_dirichlet(&self, rhs: &ScalarField) -> Result<ScalarField> {
        self.solve_shifted(rhs, 0.0, 1.0)
    }

    /// `shift * u - diffusion * laplacian(u) = rhs` at interior nodes.
    pub fn solve_shifted(&self, rhs: &ScalarField, shift: f64, diffusion: f64) -> Result<ScalarField> {
        self.grid.check_same(rhs.grid())?;
        if !(diffusion > 0.0 && shift >= 0.0) {
            return Err(Error::Usage(format!(
                "shifted solve needs diffusion > 0 and shift >= 0 (got {diffusion}, {shift})"
            )));
        }
        let interior = self.gather(rhs);
        let sol = match self.method {
            SolverMethod::SineTransform => self.dst_solve(interior, shift, diffusion),
            SolverMethod::ConjugateGradient => self.cg_solve(&interior, shift, diffusion)?,
        };
        Ok(self.scatter(&sol))
    }

    /// Streamfunction and velocity for a vorticity field, with the
    /// convention `u = grad_perp(psi)`, hence `-laplacian(psi) = omega`.
    pub fn velocity_from_vorticity(&self, omega: &ScalarField) -> Result<(ScalarField, VectorField)> {
        let psi = self.solve_poisson_dirichlet(omega)?;
        let u = grad_perp(&psi);
        Ok((psi, u))
    }

    fn gather(&self, f: &ScalarField) -> Vec<f64> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let v = f.values();
        let mut out = Vec::with_capacity((nx - 2) * (ny - 2));
        for j in 1..ny - 1 {
            out.extend_from_slice(&v[j * nx + 1..j * nx + nx - 1]);
        }
        out
    }

    fn scatter(&self, interior: &[f64]) -> ScalarField {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let mx = nx - 2;
        let mut out = ScalarField::zeros(self.grid);
        let v = out.values_mut();
        for j in 1..ny - 1 {
            v[j * nx + 1..j * nx + nx - 1].copy_from_slice(&interior[(j - 1) * mx..j * mx]);
        }
        out
    }

    fn dst_solve(&self, mut data: Vec<f64>, shift: f64, diffusion: f64) -> Vec<f64> {
        let (mx, my) = (self.eig_x.len(), self.eig_y.len());
        self.dst_x.transform_rows(&mut data);
        let mut t = transpose(&data, my, mx);
        self.dst_y.transform_rows(&mut t);
        let norm = 4.0 / ((mx + 1) * (my + 1)) as f64;
        par::for_each_row(&mut t, my, |p, row| {
            let ex = self.eig_x[p];
            for (q, v) in row.iter_mut().enumerate() {
                *v *= norm / (shift + diffusion * (ex + self.eig_y[q]));
            }
        });
        self.dst_y.transform_rows(&mut t);
        let mut data = transpose(&t, mx, my);
        self.dst_x.transform_rows(&mut data);
        data
    }

    fn apply_interior(&self, x: &[f64], out: &mut [f64], shift: f64, diffusion: f64) {
        let (mx, my) = (self.eig_x.len(), self.eig_y.len());
        let (cx, cy) = (
            diffusion / (self.grid.dx() * self.grid.dx()),
            diffusion / (self.grid.dy() * self.grid.dy()),
        );
        par::for_each_row(out, mx, |j, row| {
            for (i, r) in row.iter_mut().enumerate() {
                let k = j * mx + i;
                let c = x[k];
                let w = if i > 0 { x[k - 1] } else { 0.0 };
                let e = if i + 1 < mx { x[k + 1] } else { 0.0 };
                let s = if j > 0 { x[k - mx] } else { 0.0 };
                let n = if j + 1 < my { x[k + mx] } else { 0.0 };
                *r = shift * c + cx * (2.0 * c - w - e) + cy * (2.0 * c - s - n);
            }
        });
    }

    fn cg_solve(&self, b: &[f64], shift: f64, diffusion: f64) -> Result<Vec<f64>> {
        let mx = self.eig_x.len();
        let rows = self.eig_y.len();
        let dot = |a: &[f64], c: &[f64]| {
            par::sum_rows(rows, |j| {
                (j * mx..(j + 1) * mx).fold(0.0, |acc, k| acc + a[k] * c[k])
            })
        };
        let n = b.len();
        let mut x = vec![0.0; n];
        let bnorm = dot(b, b).sqrt();
        if bnorm == 0.0 {
            return Ok(x);
        }
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr = dot(&r, &r);
        for _ in 0..self.cg_max_iterations {
            if rr.sqrt() <= self.cg_tolerance * bnorm {
                return Ok(x);
            }
            self.apply_interior(&p, &mut ap, shift, diffusion);
            let alpha = rr / dot(&p, &ap);
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            for k in 0..n {
                p[k] = r[k] + beta * p[k];
            }
            rr = rr_new;
        }
        let residual = rr.sqrt() / bnorm;
        if residual <= self.cg_tolerance {
            Ok(x)
        } else {
            Err(Error::SolverFailure {
                iterations: self.cg_max_iterations,
                residual,
            })
        }
    }
}

fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
    out
}

/// First Dirichlet eigenpair of the 5-point `-laplacian`.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub lambda1: f64,
    /// L2-normalized (trapezoid) and positive in the interior.
    pub mode: ScalarField,
    pub iterations: usize,
}

impl Eigenpair {
    /// Poincare constant `C_P = 1 / sqrt(lambda1)`.
    pub fn poincare_constant(&self) -> f64 {
        1.0 / self.lambda1.sqrt()
    }
    /// `C_P^2 = 1 / lambda1`, the constant in `||w||^2 <= C ||grad w||^2`.
    pub fn poincare_sq(&self) -> f64 {
        1.0 / self.lambda1
    }
}

const EIG_MAX_ITERATIONS: usize = 10_000;
const EIG_TOLERANCE: f64 = 1e-12;

/// Smallest Dirichlet eigenvalue by inverse power iteration with the
/// default (sine-transform) solver.
pub fn smallest_dirichlet_eigenvalue(grid: &Grid) -> Result<Eigenpair> {
    smallest_dirichlet_eigenvalue_with(&PoissonSolver::new(*grid))
}

/// Inverse power iteration using `solver` for the inner solves. Stops when
/// successive Rayleigh quotients agree to `1e-12` relative.
pub fn smallest_dirichlet_eigenvalue_with(solver: &PoissonSolver) -> Result<Eigenpair> {
    let grid = *solver.grid();
    let ip = |a: &ScalarField, b: &ScalarField| crate::domain::inner_product(a, b).expect("same grid");
    let mut v = ScalarField::from_fn(grid, |_, _| 1.0);
    v.zero_boundary();
    let mut prev = f64::INFINITY;
    for it in 1..=EIG_MAX_ITERATIONS {
        let y = solver.solve_poisson_dirichlet(&v)?;
        // Rayleigh quotient of -laplacian at y, using -laplacian(y) = v.
        let yy = ip(&y, &y);
        let lambda = ip(&y, &v) / yy;
        v = y.scaled(1.0 / yy.sqrt());
        if (lambda - prev).abs() < EIG_TOLERANCE * lambda {
            let sign = if crate::domain::integrate(&v) < 0.0 { -1.0 } else { 1.0 };
            return Ok(Eigenpair {
                lambda1: lambda,
                mode: v.scaled(sign),
                iterations: it,
            });
        }
        prev = lambda;
    }
    Err(Error::SolverFailure {
        iterations: EIG_MAX_ITERATIONS,
        residual: f64::NAN,
    })
}
