//! Uniform grids on `[0, L]` and `[0, Lx] × [0, Ly]` with tensor-trapezoid
//! quadrature weights.
//!
//! Grids are immutable after construction and shared by reference
//! ([`std::sync::Arc`]); every consumer of a `Grid` may read it
//! concurrently.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One coordinate axis of a uniform grid: nodes include both endpoints,
/// weights are the 1D trapezoid weights (half weight at the endpoints).
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    length: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Axis {
    fn new(length: f64, count: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "axis length must be positive and finite, got {length}"
            )));
        }
        if count < 3 {
            return Err(Error::InvalidGrid(format!(
                "axis needs at least 3 nodes, got {count}"
            )));
        }
        let h = length / (count - 1) as f64;
        let nodes = (0..count).map(|i| i as f64 * h).collect();
        let mut weights = vec![h; count];
        weights[0] = 0.5 * h;
        weights[count - 1] = 0.5 * h;
        Ok(Self {
            length,
            nodes,
            weights,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.nodes.len() - 1) as f64
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// A uniform grid on an interval (1 axis) or a rectangle (2 axes).
///
/// 2D grids are tensor products of 1D grids; the flat node index runs
/// x-fastest: `index = iy * nx + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
}

/// Serializable descriptor of a grid: `{dim, lengths, nodes}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridDescriptor {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub nodes: Vec<usize>,
}

impl Grid {
    /// 1D grid on `[0, length]` with `count` nodes (both endpoints included).
    pub fn line(length: f64, count: usize) -> Result<Arc<Self>> {
        Ok(Arc::new(Self {
            axes: vec![Axis::new(length, count)?],
        }))
    }

    /// 2D tensor grid on `[0, lengths.0] × [0, lengths.1]`.
    pub fn rectangle(lengths: (f64, f64), counts: (usize, usize)) -> Result<Arc<Self>> {
        Ok(Arc::new(Self {
            axes: vec![
                Axis::new(lengths.0, counts.0)?,
                Axis::new(lengths.1, counts.1)?,
            ],
        }))
    }

    /// Dimension-generic constructor used by the CLI.
    pub fn build(dimension: usize, lengths: &[f64], counts: &[usize]) -> Result<Arc<Self>> {
        if dimension != 1 && dimension != 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dimension}"
            )));
        }
        if lengths.len() != dimension || counts.len() != dimension {
            return Err(Error::InvalidGrid(format!(
                "expected {dimension} lengths and node counts, got {} and {}",
                lengths.len(),
                counts.len()
            )));
        }
        match dimension {
            1 => Self::line(lengths[0], counts[0]),
            _ => Self::rectangle((lengths[0], lengths[1]), (counts[0], counts[1])),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    /// Total number of nodes.
    pub fn node_count(&self) -> usize {
        self.axes.iter().map(Axis::node_count).product()
    }

    /// Measure of the domain (`L` or `Lx·Ly`).
    pub fn measure(&self) -> f64 {
        self.axes.iter().map(Axis::length).product()
    }

    /// Largest axis spacing (the `h` of error estimates).
    pub fn max_spacing(&self) -> f64 {
        self.axes
            .iter()
            .map(Axis::spacing)
            .fold(0.0_f64, f64::max)
    }

    /// Quadrature weight of the flat node `index`.
    pub fn weight(&self, index: usize) -> f64 {
        match self.axes.len() {
            1 => self.axes[0].weights[index],
            _ => {
                let nx = self.axes[0].node_count();
                let (ix, iy) = (index % nx, index / nx);
                self.axes[0].weights[ix] * self.axes[1].weights[iy]
            }
        }
    }

    /// Coordinates of the flat node `index`.
    pub fn coords(&self, index: usize) -> Vec<f64> {
        match self.axes.len() {
            1 => vec![self.axes[0].nodes[index]],
            _ => {
                let nx = self.axes[0].node_count();
                let (ix, iy) = (index % nx, index / nx);
                vec![self.axes[0].nodes[ix], self.axes[1].nodes[iy]]
            }
        }
    }

    /// Flat index of the node `(ix, iy)` on a 2D grid.
    pub fn index2(&self, ix: usize, iy: usize) -> usize {
        debug_assert_eq!(self.dim(), 2);
        iy * self.axes[0].node_count() + ix
    }

    pub fn descriptor(&self) -> GridDescriptor {
        GridDescriptor {
            dim: self.dim(),
            lengths: self.axes.iter().map(Axis::length).collect(),
            nodes: self.axes.iter().map(Axis::node_count).collect(),
        }
    }

    /// Rebuild a grid from its descriptor.
    pub fn from_descriptor(d: &GridDescriptor) -> Result<Arc<Self>> {
        Self::build(d.dim, &d.lengths, &d.nodes)
    }
}

/// Free-function form of [`Grid::build`].
pub fn build_grid(dimension: usize, lengths: &[f64], counts: &[usize]) -> Result<Arc<Grid>> {
    Grid::build(dimension, lengths, counts)
}
