//! Uniform cell-centered grids on D = [−L/2, L/2]^d and the field types the
//! solvers exchange.
//!
//! Everything here is immutable value data after construction; fields are
//! freely shared across threads read-only.  2D values are stored row-major
//! with y varying fastest, i.e. `values[ix * ns + iy]`, and the CSV writers
//! emit rows in that same order so output is reproducible byte for byte.

use crate::error::{Error, Result};
use std::fmt::Write as _;

/// The computational domain: a symmetric interval or square of total width L.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    dim: usize,
    half_width: f64,
}

impl Domain {
    pub fn new(dim: usize, half_width: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidArgument(format!(
                "domain dimension must be 1 or 2, got {dim}"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "domain half-width must be positive and finite, got {half_width}"
            )));
        }
        Ok(Domain { dim, half_width })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// L/2.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Total width L.
    pub fn width(&self) -> f64 {
        2.0 * self.half_width
    }
}

/// Uniform grid of `cells_per_axis` equal cells per axis; values live at cell
/// centers x_i = −L/2 + (i + ½)dx.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    domain: Domain,
    cells_per_axis: usize,
    dx: f64,
}

pub fn make_grid(domain: Domain, ns: usize) -> Result<Grid> {
    if ns < 3 {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least 3 cells per axis for the stencils, got {ns}"
        )));
    }
    Ok(Grid {
        domain,
        cells_per_axis: ns,
        dx: domain.width() / ns as f64,
    })
}

impl Grid {
    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Total number of cells (Ns in 1D, Ns² in 2D).
    pub fn cell_count(&self) -> usize {
        match self.domain.dim() {
            1 => self.cells_per_axis,
            _ => self.cells_per_axis * self.cells_per_axis,
        }
    }

    /// Center coordinate of cell `i` along one axis.
    pub fn center(&self, i: usize) -> f64 {
        -self.domain.half_width() + (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells_per_axis).map(|i| self.center(i)).collect()
    }

    /// Flat index of 2D cell (ix, iy); y varies fastest.
    pub fn index2(&self, ix: usize, iy: usize) -> usize {
        ix * self.cells_per_axis + iy
    }

    /// Cell volume dx^d.
    pub fn cell_volume(&self) -> f64 {
        match self.domain.dim() {
            1 => self.dx,
            _ => self.dx * self.dx,
        }
    }
}

/// One real value per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::SizeMismatch(format!(
                "field has {} values but grid has {} cells",
                values.len(),
                grid.cell_count()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.cell_count()],
        }
    }

    /// Sample a function of the cell-center coordinate (1D grids).
    pub fn from_fn_1d(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.cell_count()).map(|i| f(grid.center(i))).collect();
        ScalarField { grid, values }
    }

    /// Sample a function of the cell-center coordinates (2D grids).
    pub fn from_fn_2d(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let ns = grid.cells_per_axis();
        let mut values = Vec::with_capacity(ns * ns);
        for ix in 0..ns {
            for iy in 0..ns {
                values.push(f(grid.center(ix), grid.center(iy)));
            }
        }
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
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

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Midpoint-quadrature integral Σ f(x_i) dx^d.
pub fn integrate_field(f: &ScalarField) -> f64 {
    f.values().iter().sum::<f64>() * f.grid().cell_volume()
}

/// Midpoint-quadrature inner product ⟨a, b⟩ = Σ a_i b_i dx^d.
pub fn inner_product(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::SizeMismatch("inner product of fields on different grids".into()));
    }
    let dv = a.grid().cell_volume();
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x * y)
        .sum::<f64>()
        * dv)
}

/// The hydrodynamic state: density plus d momentum components, one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct StateField {
    grid: Grid,
    pub rho: ScalarField,
    pub momentum: Vec<ScalarField>,
}

impl StateField {
    pub fn new(rho: ScalarField, momentum: Vec<ScalarField>) -> Result<Self> {
        let grid = rho.grid();
        if momentum.len() != grid.domain().dim() {
            return Err(Error::SizeMismatch(format!(
                "{} momentum components for a {}-dimensional grid",
                momentum.len(),
                grid.domain().dim()
            )));
        }
        for m in &momentum {
            if m.grid() != grid {
                return Err(Error::SizeMismatch("momentum component on a different grid".into()));
            }
        }
        Ok(StateField { grid, rho, momentum })
    }

    pub fn zeros(grid: Grid) -> Self {
        let momentum = (0..grid.domain().dim()).map(|_| ScalarField::zeros(grid)).collect();
        StateField { grid, rho: ScalarField::zeros(grid), momentum }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.momentum.iter().all(|m| m.is_finite())
    }

    /// Componentwise a + s·b.
    pub fn axpy(&self, s: f64, b: &StateField) -> Result<StateField> {
        if self.grid != b.grid {
            return Err(Error::SizeMismatch("state fields on different grids".into()));
        }
        let comb = |x: &ScalarField, y: &ScalarField| {
            let values = x
                .values()
                .iter()
                .zip(y.values())
                .map(|(a, b)| a + s * b)
                .collect();
            ScalarField { grid: self.grid, values }
        };
        Ok(StateField {
            grid: self.grid,
            rho: comb(&self.rho, &b.rho),
            momentum: self
                .momentum
                .iter()
                .zip(&b.momentum)
                .map(|(a, b)| comb(a, b))
                .collect(),
        })
    }
}

/// 17-significant-digit decimal encoding used by every CSV/JSON artifact.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `x,value` (1D) or `x,y,value` (2D), one row per cell.
pub fn field_to_csv(f: &ScalarField) -> String {
    let grid = f.grid();
    let mut out = String::new();
    match grid.domain().dim() {
        1 => {
            out.push_str("x,value\n");
            for (i, v) in f.values().iter().enumerate() {
                let _ = writeln!(out, "{},{}", fmt_f64(grid.center(i)), fmt_f64(*v));
            }
        }
        _ => {
            out.push_str("x,y,value\n");
            let ns = grid.cells_per_axis();
            for ix in 0..ns {
                for iy in 0..ns {
                    let _ = writeln!(
                        out,
                        "{},{},{}",
                        fmt_f64(grid.center(ix)),
                        fmt_f64(grid.center(iy)),
                        fmt_f64(f.values()[grid.index2(ix, iy)])
                    );
                }
            }
        }
    }
    out
}
