//! Uniform dyadic discretization of `(0,T)` (d=1) or `(0,T)²` (d=2) and the
//! piecewise-constant functions living on it.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SioError};
use crate::space::FiniteDimSpace;

/// Uniform grid over `(0,T)` or the square `(0,T)^2` with a power-of-two
/// number of cells per axis, so that all dyadic subcubes nest exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dimension: u8,
    cells_per_axis: usize,
    extent: f64,
}

impl Grid {
    pub fn new(dimension: u8, extent: f64, cells_per_axis: usize) -> Result<Self> {
        if dimension != 1 && dimension != 2 {
            return Err(SioError::domain("grid dimension must be 1 or 2"));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(SioError::domain("grid extent T must be finite positive"));
        }
        if cells_per_axis == 0 || !cells_per_axis.is_power_of_two() {
            return Err(SioError::domain(format!(
                "cells per axis must be a power of two, got {cells_per_axis}"
            )));
        }
        Ok(Grid {
            dimension,
            cells_per_axis,
            extent,
        })
    }

    pub fn line(extent: f64, cells: usize) -> Result<Self> {
        Grid::new(1, extent, cells)
    }

    pub fn square(extent: f64, cells_per_axis: usize) -> Result<Self> {
        Grid::new(2, extent, cells_per_axis)
    }

    pub fn dimension(&self) -> u8 {
        self.dimension
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    /// Side length of one cell.
    pub fn h(&self) -> f64 {
        self.extent / self.cells_per_axis as f64
    }

    /// Lebesgue measure of one cell.
    pub fn cell_measure(&self) -> f64 {
        let h = self.h();
        match self.dimension {
            1 => h,
            _ => h * h,
        }
    }

    /// Measure of the whole domain.
    pub fn domain_measure(&self) -> f64 {
        match self.dimension {
            1 => self.extent,
            _ => self.extent * self.extent,
        }
    }

    /// Total number of cells.
    pub fn num_cells(&self) -> usize {
        match self.dimension {
            1 => self.cells_per_axis,
            _ => self.cells_per_axis * self.cells_per_axis,
        }
    }

    /// Number of dyadic levels: level 0 is the whole domain, level
    /// `levels()` is the single-cell scale.
    pub fn levels(&self) -> u32 {
        self.cells_per_axis.trailing_zeros()
    }

    /// Center of cell `i` (1-d grids).
    pub fn center_1d(&self, i: usize) -> f64 {
        debug_assert_eq!(self.dimension, 1);
        (i as f64 + 0.5) * self.h()
    }

    /// Center of cell with flat index `i` (2-d grids), row-major `(ix, iy)`.
    pub fn center_2d(&self, i: usize) -> (f64, f64) {
        debug_assert_eq!(self.dimension, 2);
        let n = self.cells_per_axis;
        let ix = i % n;
        let iy = i / n;
        let h = self.h();
        ((ix as f64 + 0.5) * h, (iy as f64 + 0.5) * h)
    }

    /// Cell index containing the point `s` on a 1-d grid; clamps to the
    /// domain.
    pub fn cell_of_1d(&self, s: f64) -> usize {
        debug_assert_eq!(self.dimension, 1);
        let i = (s / self.h()).floor() as isize;
        i.clamp(0, self.cells_per_axis as isize - 1) as usize
    }

    /// Grid with twice as many cells per axis over the same domain.
    pub fn refined(&self) -> Grid {
        Grid {
            dimension: self.dimension,
            cells_per_axis: self.cells_per_axis * 2,
            extent: self.extent,
        }
    }
}

/// Scalar function on a grid, one value per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(SioError::structure(format!(
                "scalar field has {} values for {} cells",
                values.len(),
                grid.num_cells()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.num_cells()],
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// View as a scalar-valued grid function.
    pub fn to_grid_function(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            space: FiniteDimSpace::scalar(),
            values: self
                .values
                .iter()
                .map(|&v| DVector::from_element(1, v))
                .collect(),
        }
    }
}

/// Piecewise-constant function with values in a finite-dimensional space,
/// the discrete stand-in for `f ∈ L^p(S;X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub space: FiniteDimSpace,
    pub values: Vec<DVector<f64>>,
}

impl GridFunction {
    pub fn new(grid: Grid, space: FiniteDimSpace, values: Vec<DVector<f64>>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(SioError::structure(format!(
                "grid function has {} values for {} cells",
                values.len(),
                grid.num_cells()
            )));
        }
        if let Some(v) = values.iter().find(|v| v.len() != space.dim) {
            return Err(SioError::structure(format!(
                "value dimension {} does not match space dimension {}",
                v.len(),
                space.dim
            )));
        }
        Ok(GridFunction {
            grid,
            space,
            values,
        })
    }

    /// Build from a function of the cell center (1-d grids).
    pub fn from_fn_1d<F: Fn(f64) -> DVector<f64>>(
        grid: Grid,
        space: FiniteDimSpace,
        f: F,
    ) -> Result<Self> {
        let values = (0..grid.num_cells())
            .map(|i| f(grid.center_1d(i)))
            .collect();
        GridFunction::new(grid, space, values)
    }

    /// Scalar-valued helper for 1-d grids.
    pub fn scalar_from_fn<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Result<Self> {
        GridFunction::from_fn_1d(grid, FiniteDimSpace::scalar(), |t| {
            DVector::from_element(1, f(t))
        })
    }

    /// Build from a function of the cell center (2-d grids).
    pub fn from_fn_2d<F: Fn(f64, f64) -> DVector<f64>>(
        grid: Grid,
        space: FiniteDimSpace,
        f: F,
    ) -> Result<Self> {
        let values = (0..grid.num_cells())
            .map(|i| {
                let (x, y) = grid.center_2d(i);
                f(x, y)
            })
            .collect();
        GridFunction::new(grid, space, values)
    }

    pub fn constant(grid: Grid, space: FiniteDimSpace, v: DVector<f64>) -> Result<Self> {
        assert_eq!(v.len(), space.dim);
        let values = vec![v; grid.num_cells()];
        GridFunction::new(grid, space, values)
    }

    pub fn zero(grid: Grid, space: FiniteDimSpace) -> Self {
        let dim = space.dim;
        GridFunction {
            grid,
            space,
            values: vec![DVector::zeros(dim); grid.num_cells()],
        }
    }

    /// Per-cell norms as a scalar field.
    pub fn norms(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| self.space.norm(v)).collect(),
        }
    }

    /// Pointwise restriction: zero outside the cell set.
    pub fn restricted_to(&self, cells: &[bool]) -> GridFunction {
        assert_eq!(cells.len(), self.values.len());
        let values = self
            .values
            .iter()
            .zip(cells)
            .map(|(v, &keep)| if keep { v.clone() } else { DVector::zeros(v.len()) })
            .collect();
        GridFunction {
            grid: self.grid,
            space: self.space.clone(),
            values,
        }
    }
}

/// Strictly positive weight on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Weight {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(SioError::structure(format!(
                "weight has {} values for {} cells",
                values.len(),
                grid.num_cells()
            )));
        }
        if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(SioError::domain(
                "weight values must be strictly positive and finite",
            ));
        }
        Ok(Weight { grid, values })
    }

    pub fn unit(grid: Grid) -> Self {
        Weight {
            grid,
            values: vec![1.0; grid.num_cells()],
        }
    }

    /// Power weight `t^alpha` sampled at cell centers (1-d grids).
    pub fn power_1d(grid: Grid, alpha: f64) -> Result<Self> {
        let values = (0..grid.num_cells())
            .map(|i| grid.center_1d(i).powf(alpha))
            .collect();
        Weight::new(grid, values)
    }

    pub fn from_fn_1d<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let values = (0..grid.num_cells()).map(|i| f(grid.center_1d(i))).collect();
        Weight::new(grid, values)
    }
}

// --- serialization -------------------------------------------------------
//
// JSON schema: {"grid": {"dim": d, "T": extent, "cells": n}, "values": [...]}
// CSV: one row per cell, `index,c0,c1,...`.

#[derive(Serialize, Deserialize)]
struct GridSchema {
    dim: u8,
    #[serde(rename = "T")]
    extent: f64,
    cells: usize,
}

#[derive(Serialize, Deserialize)]
struct GridFunctionSchema {
    grid: GridSchema,
    space: FiniteDimSpace,
    values: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct WeightSchema {
    grid: GridSchema,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn to_json(&self) -> Result<String> {
        let schema = GridFunctionSchema {
            grid: GridSchema {
                dim: self.grid.dimension(),
                extent: self.grid.extent(),
                cells: self.grid.cells_per_axis(),
            },
            space: self.space.clone(),
            values: self.values.iter().map(|v| v.iter().copied().collect()).collect(),
        };
        serde_json::to_string(&schema).map_err(|e| SioError::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let schema: GridFunctionSchema =
            serde_json::from_str(s).map_err(|e| SioError::Serialization(e.to_string()))?;
        let grid = Grid::new(schema.grid.dim, schema.grid.extent, schema.grid.cells)?;
        let values = schema
            .values
            .into_iter()
            .map(DVector::from_vec)
            .collect::<Vec<_>>();
        GridFunction::new(grid, schema.space, values)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&i.to_string());
            for c in v.iter() {
                out.push(',');
                out.push_str(&format!("{c:.17e}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parse the CSV emitted by [`GridFunction::to_csv`]; grid and space come
    /// from the caller since CSV carries only the cell data.
    pub fn from_csv(grid: Grid, space: FiniteDimSpace, csv: &str) -> Result<Self> {
        let mut values = vec![DVector::zeros(space.dim); grid.num_cells()];
        for line in csv.lines().filter(|l| !l.trim().is_empty()) {
            let mut parts = line.split(',');
            let idx: usize = parts
                .next()
                .ok_or_else(|| SioError::Serialization("missing index".into()))?
                .trim()
                .parse()
                .map_err(|e| SioError::Serialization(format!("bad index: {e}")))?;
            let comps: Vec<f64> = parts
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| SioError::Serialization(format!("bad component: {e}")))?;
            if idx >= values.len() || comps.len() != space.dim {
                return Err(SioError::Serialization(format!("row {idx} malformed")));
            }
            values[idx] = DVector::from_vec(comps);
        }
        GridFunction::new(grid, space, values)
    }
}

impl Weight {
    pub fn to_json(&self) -> Result<String> {
        let schema = WeightSchema {
            grid: GridSchema {
                dim: self.grid.dimension(),
                extent: self.grid.extent(),
                cells: self.grid.cells_per_axis(),
            },
            values: self.values.clone(),
        };
        serde_json::to_string(&schema).map_err(|e| SioError::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let schema: WeightSchema =
            serde_json::from_str(s).map_err(|e| SioError::Serialization(e.to_string()))?;
        let grid = Grid::new(schema.grid.dim, schema.grid.extent, schema.grid.cells)?;
        Weight::new(grid, schema.values)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{i},{v:.17e}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_measure_times_cells_is_domain_measure() {
        for (d, t, n) in [(1u8, 3.5, 64usize), (2, 2.0, 16)] {
            let g = Grid::new(d, t, n).unwrap();
            let total = g.cell_measure() * g.num_cells() as f64;
            assert!((total - g.domain_measure()).abs() <= 1e-12 * g.domain_measure());
        }
    }

    #[test]
    fn non_power_of_two_rejected() {
        assert!(Grid::line(1.0, 12).is_err());
        assert!(Grid::line(1.0, 0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = Grid::line(2.0, 8).unwrap();
        let f = GridFunction::scalar_from_fn(g, |t| t * t).unwrap();
        let back = GridFunction::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(f, back);

        let w = Weight::power_1d(g, 0.5).unwrap();
        let back = Weight::from_json(&w.to_json().unwrap()).unwrap();
        assert_eq!(w, back);
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::line(1.0, 4).unwrap();
        let space = FiniteDimSpace::euclidean(2);
        let f = GridFunction::from_fn_1d(g, space.clone(), |t| {
            DVector::from_vec(vec![t, -t])
        })
        .unwrap();
        let back = GridFunction::from_csv(g, space, &f.to_csv()).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn weight_rejects_nonpositive() {
        let g = Grid::line(1.0, 4).unwrap();
        assert!(Weight::new(g, vec![1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(Weight::new(g, vec![1.0, -2.0, 1.0, 1.0]).is_err());
    }
}
