//! Cylindrical Brownian paths on the grid and adapted integrand processes.
//!
//! Paths are generated from counter-based ChaCha substreams: path `j` of a
//! run with master seed `seed` uses `ChaCha8Rng::seed_from_u64(seed)` with
//! stream `j`, so parallel and serial ensembles agree bit for bit.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, SioError};
use crate::grid::Grid;
use crate::space::FiniteDimSpace;

/// One realization of the increments of an m-dimensional Brownian motion on
/// the time grid: `ΔW_i ~ N(0, h·I_m)` independently per cell.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    pub grid: Grid,
    pub h_dim: usize,
    pub increments: Vec<DVector<f64>>,
    pub seed: u64,
    pub stream: u64,
}

impl BrownianPath {
    pub fn sample(grid: Grid, h_dim: usize, seed: u64, stream: u64) -> Self {
        assert!(h_dim >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let sd = grid.cell_measure().sqrt();
        let increments = (0..grid.num_cells())
            .map(|_| {
                DVector::from_fn(h_dim, |_, _| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sd * z
                })
            })
            .collect();
        BrownianPath {
            grid,
            h_dim,
            increments,
            seed,
            stream,
        }
    }

    /// `W(t_k)` at the cell boundary `k·h`: the sum of the first `k`
    /// increments.
    pub fn at_boundary(&self, k: usize) -> DVector<f64> {
        let mut acc = DVector::zeros(self.h_dim);
        for inc in self.increments.iter().take(k) {
            acc += inc;
        }
        acc
    }
}

type PastFn = Arc<dyn Fn(&[DVector<f64>], usize) -> DMatrix<f64> + Send + Sync>;
type PathFn = Arc<dyn Fn(&BrownianPath, usize) -> DMatrix<f64> + Send + Sync>;

enum Repr {
    Deterministic(Vec<DMatrix<f64>>),
    PastFunctional(PastFn),
    /// Bypasses the adaptedness guarantee; only for planting violations in
    /// diagnostic runs.
    UncheckedPath(PathFn),
}

/// An integrand process `G: (0,T) → L(H,X)` (one `dim(X) × m` matrix per
/// cell, left-endpoint convention).
///
/// The construction API enforces adaptedness: processes are deterministic or
/// functionals of the strictly-past increments. The unchecked constructor is
/// the only escape hatch and is rejected by the safe integration entry
/// point.
pub struct AdaptedProcess {
    pub grid: Grid,
    pub h_dim: usize,
    pub space: FiniteDimSpace,
    pub deterministic: bool,
    repr: Repr,
}

impl AdaptedProcess {
    pub fn deterministic_from_fn(
        grid: Grid,
        space: FiniteDimSpace,
        h_dim: usize,
        f: impl Fn(f64) -> DMatrix<f64>,
    ) -> Result<Self> {
        let values: Vec<DMatrix<f64>> = (0..grid.num_cells())
            .map(|i| f(grid.center_1d(i)))
            .collect();
        if let Some(m) = values
            .iter()
            .find(|m| m.nrows() != space.dim || m.ncols() != h_dim)
        {
            return Err(SioError::structure(format!(
                "process value has shape {}×{}, expected {}×{}",
                m.nrows(),
                m.ncols(),
                space.dim,
                h_dim
            )));
        }
        Ok(AdaptedProcess {
            grid,
            h_dim,
            space,
            deterministic: true,
            repr: Repr::Deterministic(values),
        })
    }

    /// Adapted by construction: the closure receives only the increments of
    /// cells strictly before the current one.
    pub fn from_past_functional(
        grid: Grid,
        space: FiniteDimSpace,
        h_dim: usize,
        f: impl Fn(&[DVector<f64>], usize) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        AdaptedProcess {
            grid,
            h_dim,
            space,
            deterministic: false,
            repr: Repr::PastFunctional(Arc::new(f)),
        }
    }

    /// Unchecked: the closure sees the whole path, so it can violate
    /// adaptedness. The safe integral rejects it; diagnostics use it to
    /// plant violations.
    pub fn unchecked_path_functional(
        grid: Grid,
        space: FiniteDimSpace,
        h_dim: usize,
        f: impl Fn(&BrownianPath, usize) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        AdaptedProcess {
            grid,
            h_dim,
            space,
            deterministic: false,
            repr: Repr::UncheckedPath(Arc::new(f)),
        }
    }

    pub fn is_adapted_by_construction(&self) -> bool {
        !matches!(self.repr, Repr::UncheckedPath(_))
    }

    /// Materialize the per-cell matrices along a path.
    pub fn realize(&self, path: &BrownianPath) -> Result<Vec<DMatrix<f64>>> {
        if path.grid != self.grid {
            return Err(SioError::structure("process and path grids differ"));
        }
        if path.h_dim != self.h_dim {
            return Err(SioError::structure("process and path H-dimensions differ"));
        }
        Ok(match &self.repr {
            Repr::Deterministic(vals) => vals.clone(),
            Repr::PastFunctional(f) => (0..self.grid.num_cells())
                .map(|i| f(&path.increments[..i], i))
                .collect(),
            Repr::UncheckedPath(f) => (0..self.grid.num_cells())
                .map(|i| f(path, i))
                .collect(),
        })
    }

    /// The deterministic values when available.
    pub fn deterministic_values(&self) -> Option<&[DMatrix<f64>]> {
        match &self.repr {
            Repr::Deterministic(v) => Some(v),
            _ => None,
        }
    }
}
