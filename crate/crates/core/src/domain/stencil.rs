//! Second-order finite-difference stencils and trapezoid quadrature.

use std::str::FromStr;

use super::{ScalarField, VectorField};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Discretization of the transport term `u . grad f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdvectionScheme {
    /// Central differences, second order, non-dissipative.
    #[default]
    Central2,
    /// First-order upwind per velocity component.
    Upwind1,
}

impl FromStr for AdvectionScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "central2" => Ok(AdvectionScheme::Central2),
            "upwind1" => Ok(AdvectionScheme::Upwind1),
            other => Err(Error::config(
                "advection",
                format!("unknown scheme `{other}` (expected central2 or upwind1)"),
            )),
        }
    }
}

impl AdvectionScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            AdvectionScheme::Central2 => "central2",
            AdvectionScheme::Upwind1 => "upwind1",
        }
    }
}

#[inline]
fn first_derivative_1d(f: &dyn Fn(usize) -> f64, i: usize, n: usize, inv_2h: f64) -> f64 {
    if i == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) * inv_2h
    } else if i == n - 1 {
        (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) * inv_2h
    } else {
        (f(i + 1) - f(i - 1)) * inv_2h
    }
}

#[inline]
fn second_derivative_1d(f: &dyn Fn(usize) -> f64, i: usize, n: usize, inv_h2: f64) -> f64 {
    if i > 0 && i < n - 1 {
        (f(i - 1) - 2.0 * f(i) + f(i + 1)) * inv_h2
    } else if n >= 4 {
        // One-sided, exact for cubics.
        if i == 0 {
            (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3)) * inv_h2
        } else {
            (2.0 * f(n - 1) - 5.0 * f(n - 2) + 4.0 * f(n - 3) - f(n - 4)) * inv_h2
        }
    } else {
        // Three nodes only: the single interior stencil, first order at the ends.
        (f(0) - 2.0 * f(1) + f(2)) * inv_h2
    }
}

/// First derivative along `axis`: central in the interior, second-order
/// one-sided at the boundary.
pub fn partial_derivative(f: &ScalarField, axis: Axis) -> ScalarField {
    let g = *f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let v = f.values();
    let mut out = ScalarField::zeros(g);
    match axis {
        Axis::X => {
            let inv = 0.5 / g.dx();
            par::for_each_row(out.values_mut(), nx, |j, row| {
                let src = &v[j * nx..(j + 1) * nx];
                let at = |i: usize| src[i];
                for (i, r) in row.iter_mut().enumerate() {
                    *r = first_derivative_1d(&at, i, nx, inv);
                }
            });
        }
        Axis::Y => {
            let inv = 0.5 / g.dy();
            par::for_each_row(out.values_mut(), nx, |j, row| {
                for (i, r) in row.iter_mut().enumerate() {
                    let at = |jj: usize| v[jj * nx + i];
                    *r = first_derivative_1d(&at, j, ny, inv);
                }
            });
        }
    }
    out
}

/// 5-point Laplacian at interior nodes; boundary nodes use one-sided
/// second-order second differences along the normal direction.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let (ix2, iy2) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dy() * g.dy()));
    let v = f.values();
    let mut out = ScalarField::zeros(g);
    par::for_each_row(out.values_mut(), nx, |j, row| {
        let src = &v[j * nx..(j + 1) * nx];
        let along_x = |i: usize| src[i];
        for (i, r) in row.iter_mut().enumerate() {
            let along_y = |jj: usize| v[jj * nx + i];
            *r = second_derivative_1d(&along_x, i, nx, ix2)
                + second_derivative_1d(&along_y, j, ny, iy2);
        }
    });
    out
}

/// Laplacian obtained by composing the first-derivative stencils
/// (`d_x d_x + d_y d_y`). Equals `-curl(grad_perp(f))` node for node.
pub fn wide_laplacian(f: &ScalarField) -> ScalarField {
    let fxx = partial_derivative(&partial_derivative(f, Axis::X), Axis::X);
    let fyy = partial_derivative(&partial_derivative(f, Axis::Y), Axis::Y);
    fxx.lin_comb(1.0, 1.0, &fyy).expect("same grid")
}

/// `(d_y f, -d_x f)`.
pub fn grad_perp(f: &ScalarField) -> VectorField {
    VectorField {
        u1: partial_derivative(f, Axis::Y),
        u2: partial_derivative(f, Axis::X).scaled(-1.0),
    }
}

/// Scalar curl `d_x u2 - d_y u1`.
pub fn curl(u: &VectorField) -> ScalarField {
    let a = partial_derivative(&u.u2, Axis::X);
    let b = partial_derivative(&u.u1, Axis::Y);
    a.lin_comb(1.0, -1.0, &b).expect("components share a grid")
}

/// Transport term `u . grad f`.
pub fn advect(u: &VectorField, f: &ScalarField, scheme: AdvectionScheme) -> Result<ScalarField> {
    u.grid().check_same(f.grid())?;
    let g = *f.grid();
    match scheme {
        AdvectionScheme::Central2 => {
            let fx = partial_derivative(f, Axis::X);
            let fy = partial_derivative(f, Axis::Y);
            let (a, b) = (u.u1.values(), u.u2.values());
            let (fxv, fyv) = (fx.values(), fy.values());
            let nx = g.nx();
            let mut out = ScalarField::zeros(g);
            par::for_each_row(out.values_mut(), nx, |j, row| {
                for (i, r) in row.iter_mut().enumerate() {
                    let k = j * nx + i;
                    *r = a[k] * fxv[k] + b[k] * fyv[k];
                }
            });
            Ok(out)
        }
        AdvectionScheme::Upwind1 => Ok(upwind(u, f)),
    }
}

fn upwind(u: &VectorField, f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let (idx, idy) = (1.0 / g.dx(), 1.0 / g.dy());
    let v = f.values();
    let (a, b) = (u.u1.values(), u.u2.values());
    let mut out = ScalarField::zeros(g);
    par::for_each_row(out.values_mut(), nx, |j, row| {
        for (i, r) in row.iter_mut().enumerate() {
            let k = j * nx + i;
            let mut acc = 0.0;
            let c = a[k];
            if c != 0.0 {
                let backward = (c > 0.0 && i > 0) || i == nx - 1;
                let d = if backward { v[k] - v[k - 1] } else { v[k + 1] - v[k] };
                acc += c * d * idx;
            }
            let c = b[k];
            if c != 0.0 {
                let backward = (c > 0.0 && j > 0) || j == ny - 1;
                let d = if backward { v[k] - v[k - nx] } else { v[k + nx] - v[k] };
                acc += c * d * idy;
            }
            *r = acc;
        }
    });
    out
}

/// Trapezoid-rule integral over the rectangle.
pub fn integrate(f: &ScalarField) -> f64 {
    let g = *f.grid();
    let nx = g.nx();
    let v = f.values();
    par::sum_rows(g.ny(), |j| {
        let row = &v[j * nx..(j + 1) * nx];
        let s = row
            .iter()
            .enumerate()
            .fold(0.0, |acc, (i, &x)| acc + g.weight_x(i) * x);
        g.weight_y(j) * s
    })
}

/// `integrate(f * g)` without materializing the product.
pub fn inner_product(f: &ScalarField, h: &ScalarField) -> Result<f64> {
    f.grid().check_same(h.grid())?;
    let g = *f.grid();
    let nx = g.nx();
    let (a, b) = (f.values(), h.values());
    Ok(par::sum_rows(g.ny(), |j| {
        let s = (0..nx).fold(0.0, |acc, i| acc + g.weight_x(i) * a[j * nx + i] * b[j * nx + i]);
        g.weight_y(j) * s
    }))
}

/// Discrete Dirichlet energy `||grad f||^2` built from edge differences.
///
/// For `f` vanishing on the boundary this equals `<f, -laplacian(f)>`
/// exactly, so the 5-point operator's spectrum bounds it from below
/// (discrete Poincare inequality) and it is the gradient norm used by the
/// energy diagnostics.
pub fn gradient_energy(f: &ScalarField) -> f64 {
    let g = *f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let v = f.values();
    let (dx, dy) = (g.dx(), g.dy());
    par::sum_rows(ny, |j| {
        let row = &v[j * nx..(j + 1) * nx];
        let mut sx = 0.0;
        for i in 0..nx - 1 {
            let d = (row[i + 1] - row[i]) / dx;
            sx += d * d;
        }
        let mut total = g.weight_y(j) * dx * sx;
        if j + 1 < ny {
            let next = &v[(j + 1) * nx..(j + 2) * nx];
            let mut sy = 0.0;
            for i in 0..nx {
                let d = (next[i] - row[i]) / dy;
                sy += g.weight_x(i) * d * d;
            }
            total += dy * sy;
        }
        total
    })
}
