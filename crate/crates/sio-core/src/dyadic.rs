//! Dyadic cube bookkeeping on a uniform grid: addressing, cell ranges and
//! bottom-up per-level aggregation of cell data.
//!
//! Level 0 is the whole domain; level `grid.levels()` is the single-cell
//! scale. A cube at level `k` spans `cells_per_axis >> k` cells per axis.

use serde::{Deserialize, Serialize};

use crate::grid::Grid;

/// Address of a dyadic cube: level plus per-axis position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub ix: usize,
    pub iy: usize,
}

impl DyadicCube {
    pub fn root() -> Self {
        DyadicCube {
            level: 0,
            ix: 0,
            iy: 0,
        }
    }

    /// Cells per axis spanned by this cube.
    pub fn span(&self, grid: &Grid) -> usize {
        grid.cells_per_axis() >> self.level
    }

    /// Number of grid cells contained in the cube.
    pub fn num_cells(&self, grid: &Grid) -> usize {
        let s = self.span(grid);
        match grid.dimension() {
            1 => s,
            _ => s * s,
        }
    }

    /// Lebesgue measure of the cube.
    pub fn measure(&self, grid: &Grid) -> f64 {
        self.num_cells(grid) as f64 * grid.cell_measure()
    }

    /// Side length.
    pub fn side(&self, grid: &Grid) -> f64 {
        self.span(grid) as f64 * grid.h()
    }

    /// Center of the cube; second coordinate is 0 for 1-d grids.
    pub fn center(&self, grid: &Grid) -> (f64, f64) {
        let side = self.side(grid);
        let cx = (self.ix as f64 + 0.5) * side;
        let cy = if grid.dimension() == 2 {
            (self.iy as f64 + 0.5) * side
        } else {
            0.0
        };
        (cx, cy)
    }

    /// Flat indices of the cells in this cube.
    pub fn cells(&self, grid: &Grid) -> Vec<usize> {
        let s = self.span(grid);
        match grid.dimension() {
            1 => (self.ix * s..(self.ix + 1) * s).collect(),
            _ => {
                let n = grid.cells_per_axis();
                let mut out = Vec::with_capacity(s * s);
                for y in self.iy * s..(self.iy + 1) * s {
                    for x in self.ix * s..(self.ix + 1) * s {
                        out.push(y * n + x);
                    }
                }
                out
            }
        }
    }

    /// Children at the next finer level (2 in d=1, 4 in d=2); empty at cell
    /// scale.
    pub fn children(&self, grid: &Grid) -> Vec<DyadicCube> {
        if self.level >= grid.levels() {
            return Vec::new();
        }
        let l = self.level + 1;
        match grid.dimension() {
            1 => vec![
                DyadicCube { level: l, ix: 2 * self.ix, iy: 0 },
                DyadicCube { level: l, ix: 2 * self.ix + 1, iy: 0 },
            ],
            _ => {
                let mut out = Vec::with_capacity(4);
                for dy in 0..2 {
                    for dx in 0..2 {
                        out.push(DyadicCube {
                            level: l,
                            ix: 2 * self.ix + dx,
                            iy: 2 * self.iy + dy,
                        });
                    }
                }
                out
            }
        }
    }

    /// The cube at this level containing the given cell.
    pub fn containing(grid: &Grid, level: u32, cell: usize) -> DyadicCube {
        let shift = (grid.levels() - level) as usize;
        match grid.dimension() {
            1 => DyadicCube {
                level,
                ix: cell >> shift,
                iy: 0,
            },
            _ => {
                let n = grid.cells_per_axis();
                DyadicCube {
                    level,
                    ix: (cell % n) >> shift,
                    iy: (cell / n) >> shift,
                }
            }
        }
    }

    pub fn contains_cell(&self, grid: &Grid, cell: usize) -> bool {
        DyadicCube::containing(grid, self.level, cell) == *self
    }
}

/// All dyadic cubes of the grid, coarse to fine. O(N) cubes in total.
pub fn all_cubes(grid: &Grid) -> Vec<DyadicCube> {
    let mut out = Vec::new();
    for level in 0..=grid.levels() {
        let per_axis = 1usize << level;
        match grid.dimension() {
            1 => {
                for ix in 0..per_axis {
                    out.push(DyadicCube { level, ix, iy: 0 });
                }
            }
            _ => {
                for iy in 0..per_axis {
                    for ix in 0..per_axis {
                        out.push(DyadicCube { level, ix, iy });
                    }
                }
            }
        }
    }
    out
}

/// Per-level aggregation of scalar cell data. `data[level]` holds one value
/// per cube at that level, indexed `iy * 2^level + ix`.
pub struct LevelAggregate {
    pub data: Vec<Vec<f64>>,
    dimension: u8,
}

impl LevelAggregate {
    /// Aggregate with a binary combiner (sum, min, max) applied over
    /// children, starting from per-cell values at the finest level.
    pub fn build<F: Fn(f64, f64) -> f64 + Copy>(grid: &Grid, cells: &[f64], combine: F) -> Self {
        let levels = grid.levels() as usize;
        let mut data = vec![Vec::new(); levels + 1];
        data[levels] = cells.to_vec();
        for level in (0..levels).rev() {
            let per_axis = 1usize << level;
            let finer = &data[level + 1];
            let mut coarse = match grid.dimension() {
                1 => vec![0.0; per_axis],
                _ => vec![0.0; per_axis * per_axis],
            };
            match grid.dimension() {
                1 => {
                    for (ix, slot) in coarse.iter_mut().enumerate() {
                        *slot = combine(finer[2 * ix], finer[2 * ix + 1]);
                    }
                }
                _ => {
                    let fine_axis = per_axis * 2;
                    for iy in 0..per_axis {
                        for ix in 0..per_axis {
                            let a = finer[(2 * iy) * fine_axis + 2 * ix];
                            let b = finer[(2 * iy) * fine_axis + 2 * ix + 1];
                            let c = finer[(2 * iy + 1) * fine_axis + 2 * ix];
                            let d = finer[(2 * iy + 1) * fine_axis + 2 * ix + 1];
                            coarse[iy * per_axis + ix] = combine(combine(a, b), combine(c, d));
                        }
                    }
                }
            }
            data[level] = coarse;
        }
        LevelAggregate {
            data,
            dimension: grid.dimension(),
        }
    }

    pub fn sums(grid: &Grid, cells: &[f64]) -> Self {
        Self::build(grid, cells, |a, b| a + b)
    }

    pub fn mins(grid: &Grid, cells: &[f64]) -> Self {
        Self::build(grid, cells, f64::min)
    }

    pub fn get(&self, cube: &DyadicCube) -> f64 {
        let per_axis = 1usize << cube.level;
        match self.dimension {
            1 => self.data[cube.level as usize][cube.ix],
            _ => self.data[cube.level as usize][cube.iy * per_axis + cube.ix],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_cells_partition() {
        let g = Grid::square(1.0, 8).unwrap();
        for level in 0..=g.levels() {
            let mut seen = vec![false; g.num_cells()];
            for cube in all_cubes(&g).into_iter().filter(|c| c.level == level) {
                for cell in cube.cells(&g) {
                    assert!(!seen[cell]);
                    seen[cell] = true;
                }
            }
            assert!(seen.iter().all(|&b| b));
        }
    }

    #[test]
    fn aggregation_matches_direct_sum() {
        let g = Grid::square(2.0, 8).unwrap();
        let cells: Vec<f64> = (0..g.num_cells()).map(|i| (i as f64).sin()).collect();
        let agg = LevelAggregate::sums(&g, &cells);
        for cube in all_cubes(&g) {
            let direct: f64 = cube.cells(&g).iter().map(|&i| cells[i]).sum();
            assert!((agg.get(&cube) - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn containing_round_trip() {
        let g = Grid::line(1.0, 16).unwrap();
        for cube in all_cubes(&g) {
            for cell in cube.cells(&g) {
                assert_eq!(DyadicCube::containing(&g, cube.level, cell), cube);
                assert!(cube.contains_cell(&g, cell));
            }
        }
    }
}
