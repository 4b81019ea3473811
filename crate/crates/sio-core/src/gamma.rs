//! Discretized γ-norms and the γ-integral operator `T_K f(s) = K(s,·)f(·)`.
//!
//! With the normalized cell indicators as orthonormal system, the γ-norm of
//! a piecewise-constant `g: (0,T) → Y` is `‖Σ_k γ_k g(t_k) √h‖_{L²(Ω;Y)}`.
//! For euclidean `Y` this equals the L² norm exactly; for other model norms
//! it is estimated by Gaussian Monte Carlo.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SioError};
use crate::grid::{Grid, GridFunction};
use crate::kernel::Kernel;
use crate::space::FiniteDimSpace;

/// A function `t ↦ Y` on the integration grid, the argument of a γ-norm.
#[derive(Debug, Clone)]
pub struct GammaElement {
    pub grid: Grid,
    pub space: FiniteDimSpace,
    pub values: Vec<DVector<f64>>,
}

impl GammaElement {
    pub fn new(grid: Grid, space: FiniteDimSpace, values: Vec<DVector<f64>>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(SioError::structure("gamma element length mismatch"));
        }
        Ok(GammaElement {
            grid,
            space,
            values,
        })
    }

    pub fn zero(grid: Grid, space: FiniteDimSpace) -> Self {
        let dim = space.dim;
        GammaElement {
            grid,
            space,
            values: vec![DVector::zeros(dim); grid.num_cells()],
        }
    }

    pub fn sub(&self, other: &GammaElement) -> GammaElement {
        debug_assert_eq!(self.values.len(), other.values.len());
        GammaElement {
            grid: self.grid,
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    Quadrature,
    GaussianMc,
    PowerIteration,
}

/// A norm value with its provenance: deterministic quadrature (stderr 0),
/// Gaussian Monte Carlo, or power iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub stderr: f64,
    pub method: EstimateMethod,
    pub samples: u64,
    pub seed: u64,
}

impl NormEstimate {
    pub fn quadrature(value: f64) -> Self {
        NormEstimate {
            value,
            stderr: 0.0,
            method: EstimateMethod::Quadrature,
            samples: 0,
            seed: 0,
        }
    }

    pub fn power_iteration(value: f64, iterations: u64) -> Self {
        NormEstimate {
            value,
            stderr: 0.0,
            method: EstimateMethod::PowerIteration,
            samples: iterations,
            seed: 0,
        }
    }
}

/// Monte Carlo sample count for non-euclidean γ-norms.
pub const GAMMA_MC_SAMPLES: usize = 4096;

/// γ-norm of a gamma element.
///
/// Euclidean target: exact, `(Σ_t ‖g(t)‖² h)^{1/2}`, method `quadrature`.
/// Other targets: Gaussian Monte Carlo with batched standard error.
pub fn gamma_norm(g: &GammaElement) -> NormEstimate {
    gamma_norm_seeded(g, GAMMA_MC_SAMPLES, 0x9a33a0)
}

pub fn gamma_norm_seeded(g: &GammaElement, samples: usize, seed: u64) -> NormEstimate {
    let h = g.grid.cell_measure();
    if g.space.is_euclidean() {
        let v = g
            .values
            .iter()
            .map(|v| v.norm_squared() * h)
            .sum::<f64>()
            .sqrt();
        return NormEstimate::quadrature(v);
    }
    // Gaussian MC: E ‖Σ_k γ_k g(t_k) √h‖²  over batches for the stderr
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batches = 32;
    let per_batch = samples.div_ceil(batches);
    let dim = g.space.dim;
    let sqrt_h = h.sqrt();
    let mut batch_means = Vec::with_capacity(batches);
    for _ in 0..batches {
        let mut acc = 0.0;
        for _ in 0..per_batch {
            let mut s = DVector::zeros(dim);
            for v in &g.values {
                let gaussian: f64 = StandardNormal.sample(&mut rng);
                s.axpy(gaussian * sqrt_h, v, 1.0);
            }
            acc += g.space.norm(&s).powi(2);
        }
        batch_means.push(acc / per_batch as f64);
    }
    let mean = batch_means.iter().sum::<f64>() / batches as f64;
    let var = batch_means
        .iter()
        .map(|m| (m - mean).powi(2))
        .sum::<f64>()
        / (batches as f64 * (batches - 1) as f64);
    let value = mean.sqrt();
    // delta method for the square root
    let stderr = if value > 0.0 {
        var.sqrt() / (2.0 * value)
    } else {
        var.sqrt()
    };
    NormEstimate {
        value,
        stderr,
        method: EstimateMethod::GaussianMc,
        samples: (per_batch * batches) as u64,
        seed,
    }
}

/// `T_K f(s)`: the map `t ↦ K(s,t) f(t)` as a gamma element.
///
/// When the kernel declares a singular diagonal, the cell containing `s` is
/// excluded from the integration grid (a one-cell-width truncation; the
/// truncation estimates guarantee monotone convergence back to the full
/// operator under refinement).
pub fn apply_tk(kernel: &Kernel, f: &GridFunction, s: f64) -> GammaElement {
    debug_assert_eq!(f.grid.dimension(), 1);
    let n = f.grid.num_cells();
    let diag = f.grid.cell_of_1d(s);
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        if kernel.singular_diagonal && i == diag {
            values.push(DVector::zeros(kernel.target.dim));
            continue;
        }
        let t = f.grid.center_1d(i);
        values.push(kernel.eval(s, t) * &f.values[i]);
    }
    GammaElement {
        grid: f.grid,
        space: kernel.target.clone(),
        values,
    }
}

/// Annular truncation `K_ε(s,t) = K(s,t) 1_{ε ≤ |s-t| ≤ 1/ε}`.
pub fn truncate_kernel(kernel: &Kernel, eps: f64) -> Result<Kernel> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(SioError::domain("truncation parameter must lie in (0,1)"));
    }
    let inner = kernel.clone();
    let lo = eps;
    let hi = 1.0 / eps;
    Ok(Kernel::new(
        kernel.source.clone(),
        kernel.target.clone(),
        format!("{}|ann({eps})", kernel.name),
        kernel.is_convolution,
        kernel.causal,
        false,
        move |s, t| {
            let d = (s - t).abs();
            if d < lo || d > hi {
                nalgebra::DMatrix::zeros(inner.target.dim, inner.source.dim)
            } else {
                inner.eval(s, t)
            }
        },
    ))
}
