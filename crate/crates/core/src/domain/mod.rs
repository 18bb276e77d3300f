//! Rectangular node lattice, node-indexed fields and the finite-difference
//! operators acting on them.
//!
//! Storage is row-major with the y-index outer: node `(i, j)` lives at
//! `j * nx + i`. Boundary nodes are part of every field.

mod stencil;

pub use stencil::{
    advect, curl, grad_perp, gradient_energy, inner_product, integrate, laplacian,
    partial_derivative, wide_laplacian, AdvectionScheme, Axis,
};

use crate::error::{Error, Result};
use crate::par;

/// Uniform node lattice on `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    dx: f64,
    dy: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 3 {
            return Err(Error::config("nx", format!("need at least 3 nodes, got {nx}")));
        }
        if ny < 3 {
            return Err(Error::config("ny", format!("need at least 3 nodes, got {ny}")));
        }
        if !(lx.is_finite() && lx > 0.0) {
            return Err(Error::config("lx", format!("extent must be positive, got {lx}")));
        }
        if !(ly.is_finite() && ly > 0.0) {
            return Err(Error::config("ly", format!("extent must be positive, got {ly}")));
        }
        Ok(Grid {
            nx,
            ny,
            lx,
            ly,
            dx: lx / (nx - 1) as f64,
            dy: ly / (ny - 1) as f64,
        })
    }

    /// `n x n` nodes on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Grid::new(n, n, 1.0, 1.0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dy(&self) -> f64 {
        self.dy
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn min_spacing(&self) -> f64 {
        self.dx.min(self.dy)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }
    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy
    }
    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// 1D trapezoid weight along x.
    #[inline]
    pub fn weight_x(&self, i: usize) -> f64 {
        if i == 0 || i == self.nx - 1 {
            0.5 * self.dx
        } else {
            self.dx
        }
    }
    #[inline]
    pub fn weight_y(&self, j: usize) -> f64 {
        if j == 0 || j == self.ny - 1 {
            0.5 * self.dy
        } else {
            self.dy
        }
    }
    /// Trapezoid quadrature weight of node `(i, j)`.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weight_x(i) * self.weight_y(j)
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} on {}x{} vs {}x{} on {}x{}",
                self.nx, self.ny, self.lx, self.ly, other.nx, other.ny, other.lx, other.ly
            )))
        }
    }
}

/// Real values at every node of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64 + Sync + Send) -> Self {
        let mut out = ScalarField::zeros(grid);
        par::for_each_row(&mut out.values, grid.nx, |j, row| {
            let y = grid.y(j);
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(grid.x(i), y);
            }
        });
        out
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        let nx = self.grid.nx;
        par::max_rows(self.grid.ny, |j| {
            self.values[j * nx..(j + 1) * nx]
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.abs()))
        })
    }

    /// Applies `f` node by node.
    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync + Send) -> ScalarField {
        let mut out = self.clone();
        par::for_each_row(&mut out.values, self.grid.nx, |_, row| {
            for v in row.iter_mut() {
                *v = f(*v);
            }
        });
        out
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, b: f64, other: &ScalarField) -> Result<ScalarField> {
        self.grid.check_same(&other.grid)?;
        let mut out = ScalarField::zeros(self.grid);
        let nx = self.grid.nx;
        par::for_each_row(&mut out.values, nx, |j, row| {
            let s = &self.values[j * nx..(j + 1) * nx];
            let o = &other.values[j * nx..(j + 1) * nx];
            for ((r, &x), &y) in row.iter_mut().zip(s).zip(o) {
                *r = a * x + b * y;
            }
        });
        Ok(out)
    }

    pub fn scaled(&self, a: f64) -> ScalarField {
        self.map(|v| a * v)
    }

    /// Sets every boundary node to zero.
    pub fn zero_boundary(&mut self) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        for i in 0..nx {
            self.values[i] = 0.0;
            self.values[(ny - 1) * nx + i] = 0.0;
        }
        for j in 0..ny {
            self.values[j * nx] = 0.0;
            self.values[j * nx + nx - 1] = 0.0;
        }
    }

    /// Largest absolute value over boundary nodes.
    pub fn boundary_max_abs(&self) -> f64 {
        let g = &self.grid;
        let mut m = 0.0_f64;
        for j in 0..g.ny {
            for i in 0..g.nx {
                if g.is_boundary(i, j) {
                    m = m.max(self.at(i, j).abs());
                }
            }
        }
        m
    }
}

/// Two scalar components on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub u1: ScalarField,
    pub u2: ScalarField,
}

impl VectorField {
    pub fn new(u1: ScalarField, u2: ScalarField) -> Result<Self> {
        u1.grid().check_same(u2.grid())?;
        Ok(VectorField { u1, u2 })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            u1: ScalarField::zeros(grid),
            u2: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u1.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }

    /// Largest Euclidean magnitude over nodes.
    pub fn max_magnitude(&self) -> f64 {
        let nx = self.grid().nx();
        let (a, b) = (self.u1.values(), self.u2.values());
        par::max_rows(self.grid().ny(), |j| {
            (j * nx..(j + 1) * nx).fold(0.0_f64, |m, k| m.max(a[k].hypot(b[k])))
        })
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, b: f64, other: &VectorField) -> Result<VectorField> {
        Ok(VectorField {
            u1: self.u1.lin_comb(a, b, &other.u1)?,
            u2: self.u2.lin_comb(a, b, &other.u2)?,
        })
    }

    /// Largest |u . n| over boundary nodes.
    pub fn boundary_normal_max(&self) -> f64 {
        let g = *self.grid();
        let mut m = 0.0_f64;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                if i == 0 || i == g.nx() - 1 {
                    m = m.max(self.u1.at(i, j).abs());
                }
                if j == 0 || j == g.ny() - 1 {
                    m = m.max(self.u2.at(i, j).abs());
                }
            }
        }
        m
    }
}
