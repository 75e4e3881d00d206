//! Scalar and vector-valued functions sampled on a [`Grid`], with the
//! quadrature-based functionals used everywhere else: integrals, L^p
//! norms, positive parts and the discrete Dirichlet energy.

use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::grid::Grid;

/// Samples of a scalar function, one value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::DimensionMismatch(format!(
                "grid has {} nodes but {} values were given",
                grid.node_count(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidValue(
                "grid function values must be finite".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    /// Sample `f` at every node. `coords` has one entry per dimension.
    pub fn from_fn(grid: &Arc<Grid>, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|i| f(&grid.coords(i)))
            .collect();
        Self {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![c; grid.node_count()],
        }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Quadrature of the samples: exact for piecewise-linear integrands.
    pub fn integrate(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.weight(i) * v)
            .sum()
    }

    /// `(∫|f|^p)^{1/p}` for finite `p`, `max |f|` for `p = ∞`.
    pub fn lp_norm(&self, p: Exponent) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let p = p.get();
        let sum: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.weight(i) * pow_abs(*v, p))
            .sum();
        sum.powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise `max{f, 0}`.
    pub fn positive_part(&self) -> GridFunction {
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v.max(0.0)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn shifted(&self, k: f64) -> GridFunction {
        GridFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v + k).collect(),
        }
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.check_same_grid(other)?;
        Ok(GridFunction {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch(
                "grid functions live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// Discrete Dirichlet energy `∫ |∇f|²` as the sum of squared cell
    /// differences: `Σ (Δf)²/h` per axis, weighted by the transverse
    /// trapezoid weights in 2D. Exact for piecewise-linear `f` and
    /// identical to the quadratic form of the assembled Neumann operator,
    /// which keeps the quotient minimizers and the eigensolver consistent.
    pub fn dirichlet_energy(&self) -> f64 {
        let g = &self.grid;
        match g.dim() {
            1 => {
                let h = g.axis(0).spacing();
                self.values
                    .windows(2)
                    .map(|w| (w[1] - w[0]).powi(2) / h)
                    .sum()
            }
            _ => {
                let (nx, ny) = (g.axis(0).node_count(), g.axis(1).node_count());
                let (hx, hy) = (g.axis(0).spacing(), g.axis(1).spacing());
                let (wx, wy) = (g.axis(0).weights(), g.axis(1).weights());
                let mut e = 0.0;
                for iy in 0..ny {
                    for ix in 0..nx - 1 {
                        let d = self.values[g.index2(ix + 1, iy)] - self.values[g.index2(ix, iy)];
                        e += wy[iy] * d * d / hx;
                    }
                }
                for ix in 0..nx {
                    for iy in 0..ny - 1 {
                        let d = self.values[g.index2(ix, iy + 1)] - self.values[g.index2(ix, iy)];
                        e += wx[ix] * d * d / hy;
                    }
                }
                e
            }
        }
    }

    /// Absolute cosine of the angle between mean-centered samples;
    /// 1 means the shapes coincide up to affine rescaling.
    pub fn correlation(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        let n = self.values.len() as f64;
        let ma = self.values.iter().sum::<f64>() / n;
        let mb = other.values.iter().sum::<f64>() / n;
        let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
        for (a, b) in self.values.iter().zip(&other.values) {
            let (x, y) = (a - ma, b - mb);
            dot += x * y;
            na += x * x;
            nb += y * y;
        }
        if na == 0.0 || nb == 0.0 {
            return Err(Error::InvalidValue(
                "correlation undefined for constant samples".into(),
            ));
        }
        Ok((dot / (na.sqrt() * nb.sqrt())).abs())
    }

    /// Write one row per node, `coordinates..., value`, with a header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        match self.grid.dim() {
            1 => w.write_record(["x", "value"])?,
            _ => w.write_record(["x", "y", "value"])?,
        }
        for (i, v) in self.values.iter().enumerate() {
            let mut rec: Vec<String> = self.grid.coords(i).iter().map(f64::to_string).collect();
            rec.push(v.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a CSV written by [`GridFunction::write_csv`], inferring the
    /// uniform grid from the coordinate columns.
    pub fn read_csv(path: &Path) -> Result<GridFunction> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        let dim = match headers.len() {
            2 => 1,
            3 => 2,
            k => {
                return Err(Error::Format(format!(
                    "expected 2 or 3 CSV columns, found {k}"
                )))
            }
        };
        let mut coords: Vec<Vec<f64>> = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let mut row = Vec::with_capacity(dim + 1);
            for field in rec.iter() {
                row.push(field.trim().parse::<f64>().map_err(|_| {
                    Error::Format(format!("non-numeric CSV field `{field}`"))
                })?);
            }
            if row.len() != dim + 1 {
                return Err(Error::Format("ragged CSV row".into()));
            }
            values.push(row[dim]);
            coords.push(row[..dim].to_vec());
        }
        let grid = infer_grid(dim, &coords)?;
        // Re-validate node layout: row i must be node i.
        for (i, c) in coords.iter().enumerate() {
            let expect = grid.coords(i);
            for (a, b) in c.iter().zip(&expect) {
                if (a - b).abs() > 1e-9 * (1.0 + b.abs()) {
                    return Err(Error::Format(format!(
                        "CSV row {i} has coordinates {c:?}, expected {expect:?}"
                    )));
                }
            }
        }
        GridFunction::from_values(grid, values)
    }

    /// Read a CSV and check that it matches `grid`.
    pub fn read_csv_on(grid: &Arc<Grid>, path: &Path) -> Result<GridFunction> {
        let f = Self::read_csv(path)?;
        if f.grid().as_ref() != grid.as_ref() {
            return Err(Error::DimensionMismatch(format!(
                "CSV grid {:?} does not match the expected grid {:?}",
                f.grid().descriptor(),
                grid.descriptor()
            )));
        }
        GridFunction::from_values(Arc::clone(grid), f.values)
    }
}

fn infer_grid(dim: usize, coords: &[Vec<f64>]) -> Result<Arc<Grid>> {
    if coords.is_empty() {
        return Err(Error::Format("empty CSV".into()));
    }
    match dim {
        1 => {
            let count = coords.len();
            let length = coords[count - 1][0];
            Grid::line(length, count)
        }
        _ => {
            // x runs fastest; nx = index of the first row where y changes.
            let y0 = coords[0][1];
            let nx = coords
                .iter()
                .position(|c| c[1] != y0)
                .unwrap_or(coords.len());
            if nx == 0 || coords.len() % nx != 0 {
                return Err(Error::Format("CSV rows do not form a tensor grid".into()));
            }
            let ny = coords.len() / nx;
            let lx = coords[nx - 1][0];
            let ly = coords[coords.len() - 1][1];
            Grid::rectangle((lx, ly), (nx, ny))
        }
    }
}

/// `p`-independent integral of `|v|^p` helper: `|v|^p` with integral
/// exponents taken through `powi` (the descent loops hit this hard).
pub(crate) fn pow_abs(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if p == p.trunc() && p.abs() <= 128.0 {
        a.powi(p as i32)
    } else {
        a.powf(p)
    }
}

/// An `ℝⁿ`-valued function on a grid. Values are stored node-major:
/// `values[node * order + component]`, matching the unknown ordering of
/// the assembled Neumann operators.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFunction {
    grid: Arc<Grid>,
    order: usize,
    values: Vec<f64>,
}

impl VectorFunction {
    pub fn zeros(grid: &Arc<Grid>, order: usize) -> Self {
        Self {
            grid: Arc::clone(grid),
            order,
            values: vec![0.0; grid.node_count() * order],
        }
    }

    pub fn from_flat(grid: Arc<Grid>, order: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() * order {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values, got {}",
                grid.node_count() * order,
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidValue(
                "vector function values must be finite".into(),
            ));
        }
        Ok(Self {
            grid,
            order,
            values,
        })
    }

    pub fn from_components(components: &[GridFunction]) -> Result<Self> {
        let order = components.len();
        if order == 0 {
            return Err(Error::DimensionMismatch("no components given".into()));
        }
        let grid = Arc::clone(components[0].grid());
        for c in components {
            c.check_same_grid(&components[0])?;
        }
        let m = grid.node_count();
        let mut values = vec![0.0; m * order];
        for (c, f) in components.iter().enumerate() {
            for (i, v) in f.values().iter().enumerate() {
                values[i * order + c] = *v;
            }
        }
        Ok(Self {
            grid,
            order,
            values,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn flat(&self) -> &[f64] {
        &self.values
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn component(&self, c: usize) -> GridFunction {
        let values = self
            .values
            .iter()
            .skip(c)
            .step_by(self.order)
            .copied()
            .collect();
        GridFunction {
            grid: Arc::clone(&self.grid),
            values,
        }
    }

    /// State vector at one node.
    pub fn at_node(&self, node: usize) -> &[f64] {
        &self.values[node * self.order..(node + 1) * self.order]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `max_i ‖self − other‖∞`.
    pub fn max_abs_diff(&self, other: &VectorFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// One CSV with coordinates then one column per component.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = match self.grid.dim() {
            1 => vec!["x".into()],
            _ => vec!["x".into(), "y".into()],
        };
        for c in 0..self.order {
            header.push(format!("u{}", c + 1));
        }
        w.write_record(&header)?;
        for node in 0..self.grid.node_count() {
            let mut rec: Vec<String> =
                self.grid.coords(node).iter().map(f64::to_string).collect();
            for c in 0..self.order {
                rec.push(self.values[node * self.order + c].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
