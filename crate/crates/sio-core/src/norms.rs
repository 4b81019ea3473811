//! Scalar norm and characteristic computations on grid functions: L^p and
//! weighted L^p norms, the weak-L^p quasinorm, Muckenhoupt A_p and
//! Fujii–Wilson A_∞ characteristics and the BMO seminorm.
//!
//! All cube suprema run over the dyadic family only; non-dyadic suprema are
//! comparable up to a fixed dimensional constant. Integrals are exact for
//! piecewise-constant representatives.

use crate::dyadic::{all_cubes, DyadicCube, LevelAggregate};
use crate::error::{Result, SioError};
use crate::grid::{Grid, GridFunction, Weight};

fn check_same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return Err(SioError::structure("mismatched grids"));
    }
    Ok(())
}

/// `(Σ_cells ‖f_cell‖^p · w_cell · cell_measure)^{1/p}`; `w` defaults to 1.
pub fn lp_norm(f: &GridFunction, p: f64, w: Option<&Weight>) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(SioError::domain(format!("lp_norm requires finite p ≥ 1, got {p}")));
    }
    if let Some(w) = w {
        check_same_grid(&f.grid, &w.grid)?;
    }
    let meas = f.grid.cell_measure();
    let mut acc = 0.0;
    for (i, v) in f.values.iter().enumerate() {
        let n = f.space.norm(v);
        let wi = w.map_or(1.0, |w| w.values[i]);
        acc += n.powf(p) * wi * meas;
    }
    Ok(acc.powf(1.0 / p))
}

/// Weak-L^p quasinorm `sup_t t·μ({‖f‖ > t})^{1/p}`.
///
/// For a piecewise-constant `f` the supremum over all levels equals the
/// maximum over the distinct values `v` of `‖f_cell‖` of
/// `v · μ({‖f‖ ≥ v})^{1/p}` (the level function is increasing between jumps),
/// which is what is computed.
pub fn weak_lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(SioError::domain(format!("weak_lp_norm requires p > 1, got {p}")));
    }
    let meas = f.grid.cell_measure();
    let mut norms: Vec<f64> = f.values.iter().map(|v| f.space.norm(v)).collect();
    norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = norms.len();
    let mut best: f64 = 0.0;
    let mut i = 0;
    while i < n {
        let v = norms[i];
        // cells with norm ≥ v are exactly those from index i on
        if v > 0.0 {
            let mu = (n - i) as f64 * meas;
            best = best.max(v * mu.powf(1.0 / p));
        }
        // skip duplicates
        let mut j = i + 1;
        while j < n && norms[j] == v {
            j += 1;
        }
        i = j;
    }
    Ok(best)
}

/// Muckenhoupt characteristic `[w]_{A_p}` over all dyadic cubes.
///
/// For `p = 1` the second factor is `(essinf_Q w)^{-1}`; for `p > 1` it is
/// `(⨍_Q w^{1-p'})^{p-1}`.
pub fn ap_characteristic(w: &Weight, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(SioError::domain(format!("A_p requires p ≥ 1, got {p}")));
    }
    if w.values.iter().any(|&v| !(v > 0.0)) {
        return Err(SioError::domain("weight values must be positive"));
    }
    let grid = w.grid;
    let sums_w = LevelAggregate::sums(&grid, &w.values);
    let mut best: f64 = 0.0;
    if p == 1.0 {
        let mins = LevelAggregate::mins(&grid, &w.values);
        for cube in all_cubes(&grid) {
            let cells = cube.num_cells(&grid) as f64;
            let mean = sums_w.get(&cube) / cells;
            best = best.max(mean / mins.get(&cube));
        }
    } else {
        let pprime = p / (p - 1.0);
        let dual: Vec<f64> = w.values.iter().map(|&v| v.powf(1.0 - pprime)).collect();
        let sums_d = LevelAggregate::sums(&grid, &dual);
        for cube in all_cubes(&grid) {
            let cells = cube.num_cells(&grid) as f64;
            let mean_w = sums_w.get(&cube) / cells;
            let mean_d = sums_d.get(&cube) / cells;
            best = best.max(mean_w * mean_d.powf(p - 1.0));
        }
    }
    Ok(best)
}

/// Fujii–Wilson characteristic `[w]_{A_∞} = sup_Q ∫_Q M(w 1_Q) / ∫_Q w` over
/// dyadic cubes, with `M` the dyadic maximal operator (so the competing cubes
/// inside the supremum are the dyadic subcubes of `Q`).
pub fn ainf_characteristic(w: &Weight) -> Result<f64> {
    if w.values.iter().any(|&v| !(v > 0.0)) {
        return Err(SioError::domain("weight values must be positive"));
    }
    let grid = w.grid;
    let sums = LevelAggregate::sums(&grid, &w.values);
    let mut best: f64 = 0.0;
    for cube in all_cubes(&grid) {
        // ∫_Q M(w 1_Q) = cell_measure · Σ_{cells ∈ Q} max over dyadic P with
        // cell ∈ P ⊆ Q of ⨍_P w. DFS with a running maximum of means.
        let int_max = dfs_max_mean(&grid, &sums, &cube, 0.0);
        let int_w = sums.get(&cube) * grid.cell_measure();
        best = best.max(int_max * grid.cell_measure() / int_w);
    }
    Ok(best)
}

/// Sum over cells of the running maximum of cube means down the subtree.
fn dfs_max_mean(grid: &Grid, sums: &LevelAggregate, cube: &DyadicCube, max_above: f64) -> f64 {
    let mean = sums.get(cube) / cube.num_cells(grid) as f64;
    let running = max_above.max(mean);
    let children = cube.children(grid);
    if children.is_empty() {
        return running;
    }
    children
        .iter()
        .map(|c| dfs_max_mean(grid, sums, c, running))
        .sum()
}

/// BMO seminorm `sup_Q ⨍_Q ‖f − ⨍_Q f‖` over dyadic cubes.
///
/// The infimum over constants is replaced by the cube mean, a
/// 2-approximation of the true infimum.
pub fn bmo_seminorm(f: &GridFunction) -> f64 {
    let grid = f.grid;
    let dim = f.space.dim;
    // per-component sums for cube means
    let comp_sums: Vec<LevelAggregate> = (0..dim)
        .map(|c| {
            let cells: Vec<f64> = f.values.iter().map(|v| v[c]).collect();
            LevelAggregate::sums(&grid, &cells)
        })
        .collect();
    let mut best: f64 = 0.0;
    for cube in all_cubes(&grid) {
        let cells = cube.cells(&grid);
        let nc = cells.len() as f64;
        let mean = nalgebra::DVector::from_fn(dim, |c, _| comp_sums[c].get(&cube) / nc);
        let dev: f64 = cells
            .iter()
            .map(|&i| f.space.norm(&(&f.values[i] - &mean)))
            .sum::<f64>()
            / nc;
        best = best.max(dev);
    }
    best
}
