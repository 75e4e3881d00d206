//! Pointwise-symmetric matrix-valued coefficients `A(x)` sampled on a
//! grid, plus their disk format (one CSV per entry function and a JSON
//! manifest).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridDescriptor};
use crate::gridfn::GridFunction;
use crate::smallmat::SymMat;

/// One symmetric `n×n` sample per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    grid: Arc<Grid>,
    order: usize,
    samples: Vec<SymMat>,
}

impl MatrixField {
    pub fn from_samples(grid: Arc<Grid>, samples: Vec<SymMat>) -> Result<Self> {
        if samples.len() != grid.node_count() {
            return Err(Error::DimensionMismatch(format!(
                "grid has {} nodes but {} samples were given",
                grid.node_count(),
                samples.len()
            )));
        }
        let order = samples.first().map(SymMat::order).unwrap_or(0);
        if order == 0 {
            return Err(Error::DimensionMismatch("empty matrix field".into()));
        }
        for s in &samples {
            if s.order() != order {
                return Err(Error::DimensionMismatch(
                    "matrix order varies across nodes".into(),
                ));
            }
            if !s.is_finite() {
                return Err(Error::InvalidValue("non-finite matrix sample".into()));
            }
        }
        Ok(Self {
            grid,
            order,
            samples,
        })
    }

    /// Sample a coefficient function at every node.
    pub fn from_fn(
        grid: &Arc<Grid>,
        order: usize,
        mut f: impl FnMut(&[f64]) -> SymMat,
    ) -> Result<Self> {
        let samples: Vec<SymMat> = (0..grid.node_count())
            .map(|i| f(&grid.coords(i)))
            .collect();
        let field = Self::from_samples(Arc::clone(grid), samples)?;
        if field.order != order {
            return Err(Error::DimensionMismatch(format!(
                "sampler produced order {} but {} was requested",
                field.order, order
            )));
        }
        Ok(field)
    }

    pub fn constant(grid: &Arc<Grid>, m: SymMat) -> Self {
        let samples = vec![m.clone(); grid.node_count()];
        Self {
            grid: Arc::clone(grid),
            order: m.order(),
            samples,
        }
    }

    /// Diagonal field built from per-entry scalar functions.
    pub fn diagonal(entries: &[GridFunction]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DimensionMismatch("no diagonal entries".into()));
        }
        for e in entries {
            e.check_same_grid(&entries[0])?;
        }
        let grid = Arc::clone(entries[0].grid());
        let n = entries.len();
        let samples = (0..grid.node_count())
            .map(|node| {
                let mut m = SymMat::zeros(n);
                for (i, e) in entries.iter().enumerate() {
                    m.set(i, i, e.values()[node]);
                }
                m
            })
            .collect();
        Ok(Self {
            grid,
            order: n,
            samples,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn sample(&self, node: usize) -> &SymMat {
        &self.samples[node]
    }

    pub fn samples(&self) -> &[SymMat] {
        &self.samples
    }

    /// Scalar entry `(i, j)` as a grid function.
    pub fn entry(&self, i: usize, j: usize) -> GridFunction {
        let values: Vec<f64> = self.samples.iter().map(|s| s.get(i, j)).collect();
        GridFunction::from_values(Arc::clone(&self.grid), values).expect("finite entries")
    }

    pub fn check_compatible(&self, other: &MatrixField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch(
                "matrix fields live on different grids".into(),
            ));
        }
        if self.order != other.order {
            return Err(Error::DimensionMismatch(format!(
                "matrix field orders differ: {} vs {}",
                self.order, other.order
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &MatrixField) -> Result<MatrixField> {
        self.check_compatible(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        MatrixField::from_samples(Arc::clone(&self.grid), samples)
    }

    pub fn sub(&self, other: &MatrixField) -> Result<MatrixField> {
        self.check_compatible(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        MatrixField::from_samples(Arc::clone(&self.grid), samples)
    }

    pub fn scaled(&self, c: f64) -> MatrixField {
        MatrixField {
            grid: Arc::clone(&self.grid),
            order: self.order,
            samples: self.samples.iter().map(|s| s.scaled(c)).collect(),
        }
    }

    /// Pointwise spectral radius `ρ(x) = max |eigenvalue of A(x)|`.
    pub fn spectral_radius(&self) -> GridFunction {
        let values: Vec<f64> = self.samples.iter().map(SymMat::spectral_radius).collect();
        GridFunction::from_values(Arc::clone(&self.grid), values)
            .expect("spectral radius of finite samples is finite")
    }

    /// Pointwise trace as a grid function.
    pub fn trace_function(&self) -> GridFunction {
        let values: Vec<f64> = self.samples.iter().map(SymMat::trace).collect();
        GridFunction::from_values(Arc::clone(&self.grid), values)
            .expect("trace of finite samples is finite")
    }

    /// Entrywise quadrature `∫ A(x) dx`.
    pub fn average_matrix(&self) -> SymMat {
        let n = self.order;
        let mut avg = SymMat::zeros(n);
        for (node, s) in self.samples.iter().enumerate() {
            let w = self.grid.weight(node);
            for i in 0..n {
                for j in 0..=i {
                    avg.set(i, j, avg.get(i, j) + w * s.get(i, j));
                }
            }
        }
        avg
    }

    /// Smallest PSD slack of `self` over all nodes: `min_x λ_min(A(x))`.
    pub fn min_eigenvalue_over_nodes(&self) -> f64 {
        self.samples
            .iter()
            .map(SymMat::min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest pointwise spectral radius; the scale for node tolerances.
    pub fn max_spectral_radius(&self) -> f64 {
        self.samples
            .iter()
            .map(SymMat::spectral_radius)
            .fold(0.0_f64, f64::max)
    }

    /// Write the manifest plus one CSV per lower-triangle entry next to it.
    pub fn write_manifest(&self, manifest_path: &Path) -> Result<()> {
        let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let stem = manifest_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("field");
        let mut entry_files = Vec::new();
        for i in 0..self.order {
            for j in 0..=i {
                let name = format!("{stem}_a{}{}.csv", i + 1, j + 1);
                self.entry(i, j).write_csv(&dir.join(&name))?;
                entry_files.push(EntryFile {
                    row: i + 1,
                    col: j + 1,
                    file: name,
                });
            }
        }
        let manifest = FieldManifest {
            order: self.order,
            grid: self.grid.descriptor(),
            entry_files,
        };
        let json = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(manifest_path, json)?;
        Ok(())
    }

    /// Read a field written by [`MatrixField::write_manifest`].
    pub fn read_manifest(manifest_path: &Path) -> Result<MatrixField> {
        let text = std::fs::read_to_string(manifest_path)?;
        let manifest: FieldManifest = serde_json::from_str(&text)?;
        let grid = Grid::from_descriptor(&manifest.grid)?;
        let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let n = manifest.order;
        let mut entries: Vec<Option<GridFunction>> = vec![None; n * n];
        for ef in &manifest.entry_files {
            if ef.row == 0 || ef.col == 0 || ef.row > n || ef.col > n {
                return Err(Error::Format(format!(
                    "manifest entry ({}, {}) outside order {}",
                    ef.row, ef.col, n
                )));
            }
            let path: PathBuf = dir.join(&ef.file);
            let f = GridFunction::read_csv_on(&grid, &path)?;
            entries[(ef.row - 1) * n + (ef.col - 1)] = Some(f);
        }
        let samples = (0..grid.node_count())
            .map(|node| {
                let mut m = SymMat::zeros(n);
                for i in 0..n {
                    for j in 0..=i {
                        let e = entries[i * n + j]
                            .as_ref()
                            .or(entries[j * n + i].as_ref())
                            .ok_or_else(|| {
                                Error::Format(format!("manifest misses entry ({},{})", i + 1, j + 1))
                            })?;
                        m.set(i, j, e.values()[node]);
                    }
                }
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        MatrixField::from_samples(grid, samples)
    }
}

/// `{order, grid, entry_files}` manifest describing a field on disk.
#[derive(Debug, Serialize, Deserialize)]
pub struct FieldManifest {
    pub order: usize,
    pub grid: GridDescriptor,
    pub entry_files: Vec<EntryFile>,
}

/// One scalar entry file; `row`/`col` are 1-based.
#[derive(Debug, Serialize, Deserialize)]
pub struct EntryFile {
    pub row: usize,
    pub col: usize,
    pub file: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn line(l: f64, m: usize) -> Arc<Grid> {
        Grid::line(l, m).unwrap()
    }

    #[test]
    fn spectral_radius_of_constant_diagonal() {
        let g = line(1.0, 9);
        let a = MatrixField::constant(&g, SymMat::diagonal(&[1.0, -2.0]));
        let rho = a.spectral_radius();
        for v in rho.values() {
            assert_relative_eq!(*v, 2.0);
        }
    }

    #[test]
    fn spectral_radius_of_symmetric_2x2() {
        // [[a, b], [b, a]] with a, b >= 0 has ρ = a + b.
        let g = line(1.0, 21);
        let a = MatrixField::from_fn(&g, 2, |x| {
            let (p, q) = (1.0 + x[0], 0.5 * x[0]);
            SymMat::from_rows(&[vec![p, q], vec![q, p]]).unwrap()
        })
        .unwrap();
        let rho = a.spectral_radius();
        for (node, v) in rho.values().iter().enumerate() {
            let x = g.coords(node)[0];
            assert_relative_eq!(*v, 1.0 + x + 0.5 * x, max_relative = 1e-12);
        }
    }

    #[test]
    fn random_field_invariants() {
        // ρ ≥ |trace|/n, ρ ≤ trace for PSD samples, and A ≤ ρI pointwise.
        let g = line(2.0, 17);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let raw = MatrixField::from_fn(&g, 3, |_| {
            let mut m = SymMat::zeros(3);
            for i in 0..3 {
                for j in 0..=i {
                    m.set(i, j, rng.gen_range(-1.0..1.0));
                }
            }
            m
        })
        .unwrap();
        let rho = raw.spectral_radius();
        for (node, s) in raw.samples().iter().enumerate() {
            let r = rho.values()[node];
            assert!(r >= s.trace().abs() / 3.0 - 1e-12);
            // A(x) ≤ ρ(x)·I: smallest eigenvalue of ρI − A is ≥ −1e-10.
            let shifted = SymMat::scaled_identity(3, r).sub(s).unwrap();
            assert!(shifted.min_eigenvalue() >= -1e-10 * (1.0 + r));
        }

        // PSD samples: ρ ≤ trace.
        let psd = MatrixField::from_fn(&g, 3, |_| {
            let mut l = vec![vec![0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..=i {
                    l[i][j] = rng.gen_range(-1.0..1.0);
                }
            }
            // LLᵀ is PSD.
            let mut m = SymMat::zeros(3);
            for i in 0..3 {
                for j in 0..=i {
                    let mut s = 0.0;
                    for k in 0..3 {
                        s += l[i][k] * l[j][k];
                    }
                    m.set(i, j, s);
                }
            }
            m
        })
        .unwrap();
        for s in psd.samples() {
            assert!(s.spectral_radius() <= s.trace() + 1e-12 * (1.0 + s.trace()));
        }
    }

    #[test]
    fn average_matrix_by_quadrature() {
        let g = line(1.0, 201);
        let a = MatrixField::from_fn(&g, 2, |x| {
            SymMat::from_rows(&[
                vec![(2.0 * std::f64::consts::PI * x[0]).sin(), 0.0],
                vec![0.0, 1.0],
            ])
            .unwrap()
        })
        .unwrap();
        let avg = a.average_matrix();
        assert!(avg.get(0, 0).abs() < 1e-12);
        assert_relative_eq!(avg.get(1, 1), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.json");
        let g = Grid::rectangle((1.0, 1.0), (5, 5)).unwrap();
        let a = MatrixField::from_fn(&g, 2, |x| {
            SymMat::from_rows(&[
                vec![x[0] + 1.0, 0.3 * x[1]],
                vec![0.3 * x[1], 2.0 - x[0]],
            ])
            .unwrap()
        })
        .unwrap();
        a.write_manifest(&path).unwrap();
        let back = MatrixField::read_manifest(&path).unwrap();
        assert_eq!(back.order(), 2);
        for (s, t) in a.samples().iter().zip(back.samples()) {
            for i in 0..2 {
                for j in 0..2 {
                    assert_relative_eq!(s.get(i, j), t.get(i, j), max_relative = 1e-12);
                }
            }
        }
    }
}
