//! Itô integration against the grid Brownian motion, the stochastic integral
//! operator `S_K G(s) = Σ_i K(s,t_i) G(t_i) ΔW_i`, Monte Carlo
//! `L^p(Ω×(0,T),w)` norms with batched errors, and the derived experiments
//! (Doob maximal bound, stochastic maximal regularity, H-independence).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::brownian::{AdaptedProcess, BrownianPath};
use crate::error::{Result, SioError};
use crate::gamma::{truncate_kernel, EstimateMethod, NormEstimate};
use crate::grid::{Grid, ScalarField, Weight};
use crate::kernel::Kernel;
use crate::quad::integrate_composite_gl;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: usize,
    pub seed: u64,
    pub p: f64,
    /// Confidence multiplier for stderr bands (3σ throughout the artifact).
    pub confidence: f64,
}

impl McConfig {
    pub fn new(paths: usize, seed: u64, p: f64) -> Result<Self> {
        if paths < 2 {
            return Err(SioError::domain("Monte Carlo needs at least 2 paths"));
        }
        if !(p >= 2.0) {
            return Err(SioError::domain(format!(
                "stochastic L^p norms are restricted to p ≥ 2, got {p}"
            )));
        }
        Ok(McConfig {
            paths,
            seed,
            p,
            confidence: 3.0,
        })
    }
}

/// `∫_0^{kh} G dW = Σ_{i<k} G(t_i) ΔW_i` (left-endpoint sums).
///
/// Rejects processes built through the unchecked constructor: adaptedness
/// violations are a construction-API error here.
pub fn ito_integral(
    process: &AdaptedProcess,
    path: &BrownianPath,
    upto_boundary: usize,
) -> Result<DVector<f64>> {
    if !process.is_adapted_by_construction() {
        return Err(SioError::construction(
            "process bypassed the adaptedness-checked constructors; \
             use ito_integral_unchecked for diagnostics",
        ));
    }
    ito_integral_unchecked(process, path, upto_boundary)
}

/// Same sum without the adaptedness gate; diagnostic harnesses use this to
/// integrate planted violations and observe the isometry defect.
pub fn ito_integral_unchecked(
    process: &AdaptedProcess,
    path: &BrownianPath,
    upto_boundary: usize,
) -> Result<DVector<f64>> {
    let vals = process.realize(path)?;
    let k = upto_boundary.min(vals.len());
    let mut acc = DVector::zeros(process.space.dim);
    for i in 0..k {
        acc.gemv(1.0, &vals[i], &path.increments[i], 1.0);
    }
    Ok(acc)
}

/// Precomputed kernel values on the grid, reused across Monte Carlo paths.
/// Scalar kernels store raw floats; the diagonal cell is zeroed for kernels
/// with a singular diagonal.
pub enum KernelTable {
    Scalar { n: usize, data: Vec<f64> },
    Matrix { n: usize, data: Vec<DMatrix<f64>> },
}

impl KernelTable {
    pub fn build(kernel: &Kernel, grid: &Grid) -> KernelTable {
        let n = grid.num_cells();
        let centers: Vec<f64> = (0..n).map(|i| grid.center_1d(i)).collect();
        if kernel.is_scalar() {
            let mut data = vec![0.0; n * n];
            for j in 0..n {
                for i in 0..n {
                    if kernel.singular_diagonal && i == j {
                        continue;
                    }
                    data[j * n + i] = kernel.eval_scalar(centers[j], centers[i]);
                }
            }
            KernelTable::Scalar { n, data }
        } else {
            let zero = DMatrix::zeros(kernel.target.dim, kernel.source.dim);
            let mut data = vec![zero; n * n];
            for j in 0..n {
                for i in 0..n {
                    if kernel.singular_diagonal && i == j {
                        continue;
                    }
                    data[j * n + i] = kernel.eval(centers[j], centers[i]);
                }
            }
            KernelTable::Matrix { n, data }
        }
    }

    pub fn n(&self) -> usize {
        match self {
            KernelTable::Scalar { n, .. } | KernelTable::Matrix { n, .. } => *n,
        }
    }

    pub fn target_dim(&self) -> usize {
        match self {
            KernelTable::Scalar { .. } => 1,
            KernelTable::Matrix { data, .. } => data[0].nrows(),
        }
    }
}

/// `S_K G` along one path: for every grid point `s_j` the vector
/// `Σ_i K(s_j,t_i) G(t_i) ΔW_i` in Y.
pub fn apply_sk(
    table: &KernelTable,
    process: &AdaptedProcess,
    path: &BrownianPath,
) -> Result<Vec<DVector<f64>>> {
    let realized = process.realize(path)?;
    let n = table.n();
    if realized.len() != n {
        return Err(SioError::structure("kernel table and process grids differ"));
    }
    // V_i = G(t_i) ΔW_i ∈ X
    let stochastic: Vec<DVector<f64>> = realized
        .iter()
        .zip(&path.increments)
        .map(|(g, dw)| g * dw)
        .collect();
    let out = match table {
        KernelTable::Scalar { n, data } => {
            let v: Vec<f64> = stochastic.iter().map(|x| x[0]).collect();
            (0..*n)
                .map(|j| {
                    let row = &data[j * n..(j + 1) * n];
                    let acc: f64 = row.iter().zip(&v).map(|(k, x)| k * x).sum();
                    DVector::from_element(1, acc)
                })
                .collect()
        }
        KernelTable::Matrix { n, data } => {
            let ydim = table.target_dim();
            (0..*n)
                .map(|j| {
                    let mut acc = DVector::zeros(ydim);
                    for (i, v) in stochastic.iter().enumerate() {
                        acc.gemv(1.0, &data[j * n + i], v, 1.0);
                    }
                    acc
                })
                .collect()
        }
    };
    Ok(out)
}

/// Quadrature counterpart of `apply_sk` for deterministic `G`: the field
/// `s ↦ (Σ_i ‖K(s,t_i) G(t_i)‖²_HS h)^{1/2}`, the exact second moment of the
/// stochastic integral per grid point (euclidean targets).
pub fn gamma_quadrature_field(
    table: &KernelTable,
    process: &AdaptedProcess,
    grid: &Grid,
) -> Result<ScalarField> {
    let vals = process
        .deterministic_values()
        .ok_or_else(|| SioError::structure("quadrature field needs a deterministic process"))?;
    let n = table.n();
    let h = grid.cell_measure();
    let mut out = vec![0.0; n];
    match table {
        KernelTable::Scalar { n, data } => {
            // X is 1-dimensional: G(t_i) is 1×m, ‖K G‖²_HS = K² ‖G‖²_F
            let gsq: Vec<f64> = vals.iter().map(|g| g.norm_squared()).collect();
            for (j, o) in out.iter_mut().enumerate() {
                let row = &data[j * n..(j + 1) * n];
                let acc: f64 = row.iter().zip(&gsq).map(|(k, g)| k * k * g).sum();
                *o = (acc * h).sqrt();
            }
        }
        KernelTable::Matrix { n, data } => {
            for (j, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (i, g) in vals.iter().enumerate() {
                    acc += (&data[j * n + i] * g).norm_squared();
                }
                *o = (acc * h).sqrt();
            }
        }
    }
    ScalarField::new(*grid, out)
}

/// Monte Carlo estimate of `(E ∫ ‖S_K G(s)‖^p w(s) ds)^{1/p}` with a batched
/// standard error (32 batches, delta method for the p-th root).
pub fn mc_lp_norm(
    kernel: &Kernel,
    process: &AdaptedProcess,
    w: Option<&Weight>,
    cfg: &McConfig,
) -> Result<NormEstimate> {
    let grid = process.grid;
    let table = KernelTable::build(kernel, &grid);
    mc_lp_norm_with_table(&table, kernel, process, w, cfg)
}

pub fn mc_lp_norm_with_table(
    table: &KernelTable,
    kernel: &Kernel,
    process: &AdaptedProcess,
    w: Option<&Weight>,
    cfg: &McConfig,
) -> Result<NormEstimate> {
    let grid = process.grid;
    if let Some(w) = w {
        if w.grid != grid {
            return Err(SioError::structure("weight grid mismatch"));
        }
    }
    let h = grid.cell_measure();
    let p = cfg.p;
    let target = kernel.target.clone();
    let mut per_path = Vec::with_capacity(cfg.paths);
    for j in 0..cfg.paths {
        let path = BrownianPath::sample(grid, process.h_dim, cfg.seed, j as u64);
        let u = apply_sk(table, process, &path)?;
        let f: f64 = u
            .iter()
            .enumerate()
            .map(|(i, v)| target.norm(v).powf(p) * w.map_or(1.0, |w| w.values[i]) * h)
            .sum();
        per_path.push(f);
    }
    Ok(batched_root_mean(&per_path, p, cfg.seed))
}

/// Batch an i.i.d. sample of path functionals into a p-th-root estimate.
pub fn batched_root_mean(per_path: &[f64], p: f64, seed: u64) -> NormEstimate {
    let batches = 32.min(per_path.len());
    let per_batch = per_path.len() / batches;
    let mut means = Vec::with_capacity(batches);
    for b in 0..batches {
        let lo = b * per_batch;
        let hi = if b == batches - 1 {
            per_path.len()
        } else {
            lo + per_batch
        };
        let m = per_path[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        means.push(m);
    }
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = if batches > 1 {
        means.iter().map(|m| (m - mean).powi(2)).sum::<f64>()
            / (batches as f64 * (batches - 1) as f64)
    } else {
        0.0
    };
    let value = mean.powf(1.0 / p);
    let stderr = if mean > 0.0 {
        var.sqrt() * value / (p * mean)
    } else {
        var.sqrt()
    };
    NormEstimate {
        value,
        stderr,
        method: EstimateMethod::GaussianMc,
        samples: per_path.len() as u64,
        seed,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoobReport {
    pub lhs: NormEstimate,
    pub rhs_base: NormEstimate,
    pub doob_constant: f64,
    pub pass: bool,
}

/// Empirical Doob bound for the maximal truncation operator:
/// `‖ sup_ε ‖S_{K_ε} G‖ ‖_{L^p(Ω×(0,T))} ≤ (4p/(p-1)) ‖S_K G‖` within the
/// Monte Carlo band.
pub fn doob_maximal_check(
    kernel: &Kernel,
    process: &AdaptedProcess,
    eps_lattice: &[f64],
    cfg: &McConfig,
) -> Result<DoobReport> {
    let grid = process.grid;
    let h = grid.cell_measure();
    let full = KernelTable::build(kernel, &grid);
    let truncated: Vec<KernelTable> = eps_lattice
        .iter()
        .map(|&eps| truncate_kernel(kernel, eps).map(|k| KernelTable::build(&k, &grid)))
        .collect::<Result<_>>()?;
    let target = kernel.target.clone();
    let p = cfg.p;
    let mut sup_functional = Vec::with_capacity(cfg.paths);
    let mut base_functional = Vec::with_capacity(cfg.paths);
    for j in 0..cfg.paths {
        let path = BrownianPath::sample(grid, process.h_dim, cfg.seed, j as u64);
        let base = apply_sk(&full, process, &path)?;
        let mut sup: Vec<f64> = vec![0.0; grid.num_cells()];
        for table in &truncated {
            let u = apply_sk(table, process, &path)?;
            for (slot, v) in sup.iter_mut().zip(&u) {
                *slot = slot.max(target.norm(v));
            }
        }
        sup_functional.push(sup.iter().map(|v| v.powf(p) * h).sum());
        base_functional.push(base.iter().map(|v| target.norm(v).powf(p) * h).sum());
    }
    let lhs = batched_root_mean(&sup_functional, p, cfg.seed);
    let rhs_base = batched_root_mean(&base_functional, p, cfg.seed);
    let doob_constant = 4.0 * p / (p - 1.0);
    let band = cfg.confidence * (lhs.stderr + doob_constant * rhs_base.stderr);
    let pass = lhs.value <= doob_constant * rhs_base.value + band;
    Ok(DoobReport {
        lhs,
        rhs_base,
        doob_constant,
        pass,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmrReport {
    /// Per-mode quadrature of `∫_0^∞ λ e^{-2λt} dt` with analytic tail.
    pub mode_identities: Vec<f64>,
    /// Interpolation-scale ratios `lhs/‖x‖²_θ` for θ ∈ {1/4, 1/2, 3/4}
    /// (each must be 1/2).
    pub interpolation_ratios: Vec<f64>,
    /// Per-integrand ratios `‖S_K G‖_{L^p(Ω×(0,T),w)} / ‖G‖_{L^p(w)}`.
    pub mc_ratios: Vec<f64>,
    pub best_constant: f64,
}

/// Stochastic maximal regularity experiment for the diagonal generator
/// `A = diag(λ_k)` with kernel `A^{1/2} e^{-(s-t)A}`.
pub fn smr_heat_experiment(
    eigenvalues: &[f64],
    w: Option<&Weight>,
    grid: &Grid,
    cfg: &McConfig,
) -> Result<SmrReport> {
    if !(cfg.p >= 2.0) {
        return Err(SioError::domain("SMR experiments need p ≥ 2"));
    }
    let kernel = crate::kernel::zoo::semigroup(eigenvalues)?;
    // (a) square-function identity per mode, quadrature + analytic tail
    let t_end = grid.extent();
    let mode_identities: Vec<f64> = eigenvalues
        .iter()
        .map(|&lam| {
            integrate_composite_gl(|t| lam * (-2.0 * lam * t).exp(), 0.0, t_end, 64, 24)
                + 0.5 * (-2.0 * lam * t_end).exp()
        })
        .collect();
    // (b) interpolation-scale identity for the diagonal model: with the
    // θ-weighted norm ‖x‖²_θ = Σ λ^{2θ} x_k², the time integral of
    // ‖A^{1/2}e^{-tA}x‖²_θ equals ‖x‖²_θ/2 (analytic summation oracle).
    let dim = eigenvalues.len();
    let x: Vec<f64> = (0..dim).map(|k| 1.0 / (k + 1) as f64).collect();
    let interpolation_ratios: Vec<f64> = [0.25, 0.5, 0.75]
        .iter()
        .map(|&theta| {
            let lhs: f64 = eigenvalues
                .iter()
                .zip(&x)
                .zip(&mode_identities)
                .map(|((&lam, &xk), &id)| lam.powf(2.0 * theta) * xk * xk * id)
                .sum();
            let norm_sq: f64 = eigenvalues
                .iter()
                .zip(&x)
                .map(|(&lam, &xk)| lam.powf(2.0 * theta) * xk * xk)
                .sum();
            lhs / norm_sq
        })
        .collect();
    // (c) Monte Carlo SMR inequality over a small integrand zoo
    let space = crate::space::FiniteDimSpace::euclidean(dim);
    let table = KernelTable::build(&kernel, grid);
    let mut mc_ratios = Vec::new();
    let integrands: Vec<AdaptedProcess> = vec![
        AdaptedProcess::deterministic_from_fn(*grid, space.clone(), 1, |_| {
            DMatrix::from_element(dim, 1, 1.0 / (dim as f64).sqrt())
        })?,
        AdaptedProcess::deterministic_from_fn(*grid, space.clone(), 1, |t| {
            DMatrix::from_fn(dim, 1, |k, _| ((k + 1) as f64 * t).sin())
        })?,
        AdaptedProcess::deterministic_from_fn(*grid, space.clone(), 2, |t| {
            DMatrix::from_fn(dim, 2, |k, c| {
                if c == 0 {
                    (-(t - 1.0) * (t - 1.0)).exp() / (k + 1) as f64
                } else {
                    0.5
                }
            })
        })?,
    ];
    let h = grid.cell_measure();
    for g in &integrands {
        let est = mc_lp_norm_with_table(&table, &kernel, g, w, cfg)?;
        let vals = g.deterministic_values().expect("deterministic zoo");
        let denom: f64 = vals
            .iter()
            .enumerate()
            .map(|(i, m)| {
                m.norm().powf(cfg.p) * w.map_or(1.0, |w| w.values[i]) * h
            })
            .sum::<f64>()
            .powf(1.0 / cfg.p);
        mc_ratios.push(est.value / denom);
    }
    let best_constant = mc_ratios.iter().fold(0.0f64, |m, &r| m.max(r));
    Ok(SmrReport {
        mode_identities,
        interpolation_ratios,
        mc_ratios,
        best_constant,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HIndependenceReport {
    pub h_dims: Vec<usize>,
    pub estimates: Vec<NormEstimate>,
    pub max_over_min: f64,
    pub band: f64,
    pub pass: bool,
}

/// Matched-integrand comparison of `‖S_K G‖_{L^p}` across H-dimensions: the
/// integrands are rank-one with unit row vector, so their
/// Hilbert–Schmidt profile is m-independent and the estimates must agree
/// within a common band.
pub fn h_independence_check(
    kernel: &Kernel,
    m_list: &[usize],
    grid: &Grid,
    cfg: &McConfig,
) -> Result<HIndependenceReport> {
    let dim = kernel.source.dim;
    let space = crate::space::FiniteDimSpace::euclidean(dim);
    let table = KernelTable::build(kernel, grid);
    let mut estimates = Vec::new();
    for &m in m_list {
        let row = DVector::from_element(m, 1.0 / (m as f64).sqrt());
        let g = AdaptedProcess::deterministic_from_fn(*grid, space.clone(), m, |t| {
            let profile = DVector::from_fn(dim, |k, _| 1.0 + 0.3 * ((k + 1) as f64 * t).cos());
            &profile * row.transpose()
        })?;
        estimates.push(mc_lp_norm_with_table(&table, kernel, &g, None, cfg)?);
    }
    let max = estimates.iter().map(|e| e.value).fold(0.0f64, f64::max);
    let min = estimates.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    let rel_err = estimates
        .iter()
        .map(|e| if e.value > 0.0 { e.stderr / e.value } else { 0.0 })
        .fold(0.0f64, f64::max);
    // the type-2 constant of euclidean targets is 1: the band is purely MC
    let tau = kernel.target.type2_constant;
    let band = tau * tau * (1.0 + 2.0 * cfg.confidence * rel_err);
    let max_over_min = if min > 0.0 { max / min } else if max == 0.0 { 1.0 } else { f64::INFINITY };
    Ok(HIndependenceReport {
        h_dims: m_list.to_vec(),
        estimates,
        max_over_min,
        band,
        pass: max_over_min <= band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::zoo;
    use crate::space::FiniteDimSpace;
    use approx::assert_abs_diff_eq;

    fn grid(extent: f64, n: usize) -> Grid {
        Grid::line(extent, n).unwrap()
    }

    #[test]
    fn constant_integrand_reproduces_brownian_value() {
        // G ≡ 1, m=1: ∫_0^1 dW = W(1); ensemble variance → 1
        let g = grid(1.0, 64);
        let proc = AdaptedProcess::deterministic_from_fn(g, FiniteDimSpace::scalar(), 1, |_| {
            DMatrix::from_element(1, 1, 1.0)
        })
        .unwrap();
        let paths = 10_000;
        let mut acc = 0.0;
        for j in 0..paths {
            let w = BrownianPath::sample(g, 1, 99, j);
            let v = ito_integral(&proc, &w, 64).unwrap();
            let direct = w.at_boundary(64);
            assert_abs_diff_eq!(v[0], direct[0], epsilon = 1e-12);
            acc += v[0] * v[0];
        }
        let var = acc / paths as f64;
        let stderr = (2.0f64 / paths as f64).sqrt(); // Var(χ²₁) = 2
        assert!((var - 1.0).abs() <= 3.0 * stderr, "var = {var}");
    }

    #[test]
    fn interval_integrand_variance_is_length() {
        // G = 1_{(a,b]}: Var(∫ G dW) = b - a
        let g = grid(1.0, 128);
        let (a, b) = (0.25, 0.75);
        let proc = AdaptedProcess::deterministic_from_fn(g, FiniteDimSpace::scalar(), 1, |t| {
            DMatrix::from_element(1, 1, if t > a && t <= b { 1.0 } else { 0.0 })
        })
        .unwrap();
        let paths = 10_000;
        let mut acc = 0.0;
        for j in 0..paths {
            let w = BrownianPath::sample(g, 1, 5, j);
            let v = ito_integral(&proc, &w, 128).unwrap();
            acc += v[0] * v[0];
        }
        let var = acc / paths as f64;
        let want = b - a;
        assert!((var - want).abs() <= 3.0 * want * (2.0f64 / paths as f64).sqrt());
    }

    #[test]
    fn zero_process_integrates_to_zero() {
        let g = grid(1.0, 32);
        let proc = AdaptedProcess::deterministic_from_fn(g, FiniteDimSpace::scalar(), 1, |_| {
            DMatrix::zeros(1, 1)
        })
        .unwrap();
        let w = BrownianPath::sample(g, 1, 3, 0);
        assert_eq!(ito_integral(&proc, &w, 32).unwrap()[0], 0.0);
    }

    #[test]
    fn unchecked_process_rejected_by_safe_entry() {
        let g = grid(1.0, 16);
        let proc = AdaptedProcess::unchecked_path_functional(
            g,
            FiniteDimSpace::scalar(),
            1,
            |path, i| DMatrix::from_element(1, 1, path.increments[(i + 1) % 16][0]),
        );
        let w = BrownianPath::sample(g, 1, 3, 0);
        assert!(matches!(
            ito_integral(&proc, &w, 16),
            Err(SioError::Construction(_))
        ));
        assert!(ito_integral_unchecked(&proc, &w, 16).is_ok());
    }

    #[test]
    fn sk_linearity_pathwise() {
        let g = grid(2.0, 64);
        let k = zoo::exponential(1.0);
        let table = KernelTable::build(&k, &g);
        let space = FiniteDimSpace::scalar();
        let g1 = AdaptedProcess::deterministic_from_fn(g, space.clone(), 1, |t| {
            DMatrix::from_element(1, 1, t.sin())
        })
        .unwrap();
        let g2 = AdaptedProcess::deterministic_from_fn(g, space.clone(), 1, |t| {
            DMatrix::from_element(1, 1, (t * t).cos())
        })
        .unwrap();
        let combo = AdaptedProcess::deterministic_from_fn(g, space, 1, |t| {
            DMatrix::from_element(1, 1, 2.0 * t.sin() - 3.0 * (t * t).cos())
        })
        .unwrap();
        let w = BrownianPath::sample(g, 1, 21, 4);
        let u1 = apply_sk(&table, &g1, &w).unwrap();
        let u2 = apply_sk(&table, &g2, &w).unwrap();
        let uc = apply_sk(&table, &combo, &w).unwrap();
        for i in 0..u1.len() {
            assert_abs_diff_eq!(uc[i][0], 2.0 * u1[i][0] - 3.0 * u2[i][0], epsilon = 1e-12);
        }
    }

    #[test]
    fn sk_matches_mild_solution_variance() {
        // heat kernel, G ≡ e_λ: Var(component at time s) = (1-e^{-2λs})/2
        let g = grid(1.0, 256);
        let k = zoo::semigroup(&[1.0]).unwrap();
        let table = KernelTable::build(&k, &g);
        let proc = AdaptedProcess::deterministic_from_fn(g, FiniteDimSpace::euclidean(1), 1, |_| {
            DMatrix::from_element(1, 1, 1.0)
        })
        .unwrap();
        let paths = 6000;
        let j_cell = 255; // s ≈ 1
        let mut acc = 0.0;
        for j in 0..paths {
            let w = BrownianPath::sample(g, 1, 31, j);
            let u = apply_sk(&table, &proc, &w).unwrap();
            acc += u[j_cell][0] * u[j_cell][0];
        }
        let var = acc / paths as f64;
        let s = g.center_1d(j_cell);
        let want = (1.0 - (-2.0 * s).exp()) / 2.0;
        assert!(
            (var - want).abs() <= 3.0 * want * (2.0f64 / paths as f64).sqrt() + 2.0 * g.h(),
            "var={var} want={want}"
        );
    }

    #[test]
    fn planted_adaptedness_violation_breaks_isometry() {
        // peeking one cell ahead turns the Itô sum anticipative: for
        // G(t_i) = ΔW_{i+1}/h the isometry defect is visible at 10⁴ paths
        let g = grid(1.0, 32);
        let peek = AdaptedProcess::unchecked_path_functional(
            g,
            FiniteDimSpace::scalar(),
            1,
            |path, i| {
                let next = (i + 1).min(path.increments.len() - 1);
                DMatrix::from_element(1, 1, path.increments[next][0])
            },
        );
        let honest = AdaptedProcess::from_past_functional(
            g,
            FiniteDimSpace::scalar(),
            1,
            |past, _| {
                let v = past.last().map_or(0.0, |d| d[0]);
                DMatrix::from_element(1, 1, v)
            },
        );
        let paths = 10_000;
        let (mut var_peek, mut var_honest, mut quad) = (0.0, 0.0, 0.0);
        for j in 0..paths {
            let w = BrownianPath::sample(g, 1, 77, j);
            let vp = ito_integral_unchecked(&peek, &w, 32).unwrap()[0];
            let vh = ito_integral(&honest, &w, 32).unwrap()[0];
            var_peek += vp * vp;
            var_honest += vh * vh;
            // quadrature side: ∫ E‖G‖² dt is the same for both processes
            let q: f64 = honest
                .realize(&w)
                .unwrap()
                .iter()
                .map(|m| m.norm_squared() * g.cell_measure())
                .sum();
            quad += q;
        }
        var_peek /= paths as f64;
        var_honest /= paths as f64;
        quad /= paths as f64;
        let stderr = quad * (2.0f64 / paths as f64).sqrt();
        // honest process satisfies the isometry
        assert!((var_honest - quad).abs() <= 4.0 * stderr);
        // the peeker does not: its "integral" is Σ ΔW_i ΔW_{i+1} shifted by
        // one full diagonal term Σ ΔW² ≈ T
        assert!((var_peek - quad).abs() > 10.0 * stderr, "defect undetected");
    }

    #[test]
    fn mc_lp_norm_zero_kernel() {
        let g = grid(1.0, 32);
        let proc = AdaptedProcess::deterministic_from_fn(g, FiniteDimSpace::scalar(), 1, |_| {
            DMatrix::from_element(1, 1, 1.0)
        })
        .unwrap();
        let cfg = McConfig::new(64, 1, 2.0).unwrap();
        let est = mc_lp_norm(&zoo::zero(1), &proc, None, &cfg).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn mc_determinism_under_fixed_seed() {
        let g = grid(1.0, 64);
        let proc = AdaptedProcess::deterministic_from_fn(g, FiniteDimSpace::scalar(), 1, |t| {
            DMatrix::from_element(1, 1, 1.0 + t)
        })
        .unwrap();
        let cfg = McConfig::new(256, 123, 2.0).unwrap();
        let a = mc_lp_norm(&zoo::exponential(1.0), &proc, None, &cfg).unwrap();
        let b = mc_lp_norm(&zoo::exponential(1.0), &proc, None, &cfg).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn smr_identity_half_to_1e9() {
        let g = grid(8.0, 64);
        let cfg = McConfig::new(64, 7, 2.0).unwrap();
        let report = smr_heat_experiment(&[1.0, 4.0, 9.0, 16.0, 25.0], None, &g, &cfg).unwrap();
        for v in &report.mode_identities {
            assert_abs_diff_eq!(*v, 0.5, epsilon = 1e-9);
        }
        for r in &report.interpolation_ratios {
            assert_abs_diff_eq!(*r, 0.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn doob_single_eps_dominated() {
        // a single annulus is dominated by the full kernel in L² mean
        let g = grid(2.0, 64);
        let k = zoo::exponential(1.0);
        let proc = AdaptedProcess::deterministic_from_fn(g, FiniteDimSpace::scalar(), 1, |_| {
            DMatrix::from_element(1, 1, 1.0)
        })
        .unwrap();
        let cfg = McConfig::new(600, 3, 2.0).unwrap();
        let report = doob_maximal_check(&k, &proc, &[0.05], &cfg).unwrap();
        assert!(report.lhs.value <= report.rhs_base.value * (1.0 + 3.0 * 0.1) + 3.0 * report.lhs.stderr);
        assert!(report.pass);
    }
}
