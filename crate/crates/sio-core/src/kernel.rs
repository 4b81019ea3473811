//! Operator-valued two-point kernels `(s,t) ↦ L(X,Y)` on `(0,T)` and the
//! kernel zoo used throughout the experiments.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::error::{Result, SioError};
use crate::fractional;
use crate::space::FiniteDimSpace;

type EvalFn = Arc<dyn Fn(f64, f64) -> DMatrix<f64> + Send + Sync>;

/// A strongly measurable kernel acting between finite-dimensional spaces.
///
/// Causality is enforced in `eval`: causal kernels return the zero matrix
/// whenever `s ≤ t` regardless of the underlying closure.
#[derive(Clone)]
pub struct Kernel {
    pub source: FiniteDimSpace,
    pub target: FiniteDimSpace,
    raw: EvalFn,
    pub is_convolution: bool,
    pub causal: bool,
    pub singular_diagonal: bool,
    pub name: String,
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("source_dim", &self.source.dim)
            .field("target_dim", &self.target.dim)
            .field("is_convolution", &self.is_convolution)
            .field("causal", &self.causal)
            .field("singular_diagonal", &self.singular_diagonal)
            .finish()
    }
}

impl Kernel {
    pub fn new(
        source: FiniteDimSpace,
        target: FiniteDimSpace,
        name: impl Into<String>,
        is_convolution: bool,
        causal: bool,
        singular_diagonal: bool,
        raw: impl Fn(f64, f64) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Kernel {
            source,
            target,
            raw: Arc::new(raw),
            is_convolution,
            causal,
            singular_diagonal,
            name: name.into(),
        }
    }

    /// Scalar kernel (X = Y = R).
    pub fn scalar(
        name: impl Into<String>,
        is_convolution: bool,
        causal: bool,
        singular_diagonal: bool,
        k: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Kernel::new(
            FiniteDimSpace::scalar(),
            FiniteDimSpace::scalar(),
            name,
            is_convolution,
            causal,
            singular_diagonal,
            move |s, t| DMatrix::from_element(1, 1, k(s, t)),
        )
    }

    pub fn eval(&self, s: f64, t: f64) -> DMatrix<f64> {
        if self.causal && s <= t {
            return DMatrix::zeros(self.target.dim, self.source.dim);
        }
        (self.raw)(s, t)
    }

    /// Scalar value for 1x1 kernels.
    pub fn eval_scalar(&self, s: f64, t: f64) -> f64 {
        debug_assert!(self.source.dim == 1 && self.target.dim == 1);
        if self.causal && s <= t {
            return 0.0;
        }
        (self.raw)(s, t)[(0, 0)]
    }

    pub fn is_scalar(&self) -> bool {
        self.source.dim == 1 && self.target.dim == 1
    }

    /// Induced operator norm of `K(s,t)` between the declared space norms.
    ///
    /// Euclidean-to-euclidean uses power iteration on `AᵀA`; any other
    /// pairing uses a direction search over a fixed unit-sphere lattice
    /// (exact for diagonal matrices, a lower bound in general; dims ≤ 8 at
    /// desk scale keep the lattice dense enough).
    pub fn operator_norm(&self, m: &DMatrix<f64>) -> f64 {
        operator_norm(m, &self.source, &self.target)
    }

    /// Spot-check declared structure on random point pairs: convolution
    /// kernels must depend on `s - t` only and causal kernels vanish for
    /// `s ≤ t` (the latter holds by construction; checked anyway).
    pub fn validate(&self, extent: f64, samples: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let s: f64 = rng.gen_range(0.0..extent);
            let t: f64 = rng.gen_range(0.0..extent);
            if self.causal && s <= t {
                let m = self.eval(s, t);
                if m.iter().any(|&x| x != 0.0) {
                    return Err(SioError::structure(format!(
                        "kernel {} declared causal but nonzero at s={s}, t={t}",
                        self.name
                    )));
                }
            }
            if self.is_convolution {
                let shift: f64 = rng.gen_range(0.0..extent / 2.0);
                let (s2, t2) = (s * 0.5 + shift, t * 0.5 + shift);
                let d1 = s * 0.5 - t * 0.5;
                if self.singular_diagonal && d1.abs() < 1e-6 {
                    continue;
                }
                let a = self.eval(s * 0.5, t * 0.5);
                let b = self.eval(s2, t2);
                let diff = (&a - &b).norm();
                if diff > 1e-9 * (1.0 + a.norm()) {
                    return Err(SioError::structure(format!(
                        "kernel {} declared convolution but eval differs under translation",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Induced norm of a matrix between two finite-dimensional normed spaces.
pub fn operator_norm(m: &DMatrix<f64>, source: &FiniteDimSpace, target: &FiniteDimSpace) -> f64 {
    if source.is_euclidean() && target.is_euclidean() {
        return spectral_norm(m);
    }
    // direction lattice: basis vectors, sign patterns of small support and a
    // few mixed directions
    let dim = source.dim;
    let mut best: f64 = 0.0;
    let mut probe = |x: &nalgebra::DVector<f64>| {
        let nx = source.norm(x);
        if nx > 0.0 {
            best = best.max(target.norm(&(m * x)) / nx);
        }
    };
    for i in 0..dim {
        let mut e = nalgebra::DVector::zeros(dim);
        e[i] = 1.0;
        probe(&e);
    }
    // sign patterns (dim ≤ 8 keeps this at ≤ 256 directions)
    if dim <= 8 {
        for mask in 0..(1u32 << dim) {
            let x = nalgebra::DVector::from_fn(dim, |i, _| {
                if mask & (1 << i) != 0 {
                    1.0
                } else {
                    -1.0
                }
            });
            probe(&x);
        }
    }
    // graded magnitudes
    for k in 0..dim {
        let x = nalgebra::DVector::from_fn(dim, |i, _| if i <= k { 1.0 / (i + 1) as f64 } else { 0.0 });
        probe(&x);
    }
    best
}

/// Largest singular value via power iteration on `AᵀA`.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let (rows, cols) = m.shape();
    if rows == 1 && cols == 1 {
        return m[(0, 0)].abs();
    }
    if m.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    let mut v = nalgebra::DVector::from_element(cols, 1.0 / (cols as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = m.transpose() * (m * &v);
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        let next = w / n;
        let delta = (&next - &v).norm();
        v = next;
        lambda = n;
        if delta < 1e-13 {
            break;
        }
    }
    lambda.sqrt()
}

/// Kernel zoo. Kernels are selectable by name plus a JSON parameter block,
/// e.g. `{"kind":"semigroup","eigenvalues":[1,4,9]}`.
pub mod zoo {
    use super::*;

    pub fn zero(dim: usize) -> Kernel {
        let space = FiniteDimSpace::euclidean(dim);
        Kernel::new(
            space.clone(),
            space,
            "zero",
            true,
            false,
            false,
            move |_, _| DMatrix::zeros(dim, dim),
        )
    }

    /// Causal convolution kernel `k = 1_{(0,1)}`, the simplest L² kernel.
    pub fn indicator_conv() -> Kernel {
        Kernel::scalar("indicator_conv", true, true, false, |s, t| {
            let u = s - t;
            if u > 0.0 && u < 1.0 {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Causal exponential `k_λ(u) = λ^{1/2} e^{-λu}`; `‖k_λ‖_{L²} = 2^{-1/2}`
    /// for every λ > 0.
    pub fn exponential(lambda: f64) -> Kernel {
        assert!(lambda > 0.0);
        Kernel::scalar(format!("exponential(λ={lambda})"), true, true, false, move |s, t| {
            lambda.sqrt() * (-lambda * (s - t)).exp()
        })
    }

    /// Diagonal semigroup kernel `K(s,t) = diag(λ_k^{1/2} e^{-(s-t)λ_k})` for
    /// `s > t`: the composition `A^{1/2} e^{-(s-t)A}` for the diagonal
    /// generator `A = diag(λ_k)`, the kernel of stochastic maximal
    /// regularity in the fractional-domain scale.
    pub fn semigroup(eigenvalues: &[f64]) -> Result<Kernel> {
        if eigenvalues.is_empty() {
            return Err(SioError::domain("semigroup kernel needs at least one eigenvalue"));
        }
        if eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(SioError::domain("semigroup eigenvalues must be positive"));
        }
        let eigs = eigenvalues.to_vec();
        let dim = eigs.len();
        let space = FiniteDimSpace::euclidean(dim);
        Ok(Kernel::new(
            space.clone(),
            space,
            format!("semigroup({dim} modes)"),
            true,
            true,
            false,
            move |s, t| {
                let u = s - t;
                DMatrix::from_fn(dim, dim, |i, j| {
                    if i == j {
                        eigs[i].sqrt() * (-u * eigs[i]).exp()
                    } else {
                        0.0
                    }
                })
            },
        ))
    }

    /// `K(s,t) = (s+t)^{-1/2}`: Hörmander-regular, bounded on L^p exactly for
    /// p ∈ (2,∞); the Schur reduction of |K|² is the classical Hilbert–Hankel
    /// operator with L² norm π.
    pub fn hilbert_hankel() -> Kernel {
        Kernel::scalar("hilbert_hankel", false, false, false, |s, t| {
            1.0 / (s + t).sqrt()
        })
    }

    /// `K(s,t) = |s-t|^{-1/2}`: smooth off the diagonal yet unbounded as a
    /// γ-integral operator for every p ∈ [2,∞) (no stochastic cancellation).
    pub fn abs_inv_sqrt() -> Kernel {
        Kernel::scalar("abs_inv_sqrt", true, false, true, |s, t| {
            1.0 / (s - t).abs().sqrt()
        })
    }

    /// Planted non-L² causal convolution kernel `k(u) = u^{-1} 1_{(0,1)}(u)`;
    /// its discrete L² mass doubles per grid refinement.
    pub fn planted_non_l2() -> Kernel {
        Kernel::scalar("planted_non_l2", true, true, true, |s, t| {
            let u = s - t;
            if u > 0.0 && u < 1.0 {
                1.0 / u
            } else {
                0.0
            }
        })
    }

    /// Fractional-smoothness kernel from `Φ(r) = min(1, r^{-1/2-ε})` via the
    /// Riemann–Liouville integral; an (ε,2)-standard kernel.
    pub fn fractional(epsilon: f64) -> Result<Kernel> {
        fractional::make_fractional_kernel(
            move |r: f64| DMatrix::from_element(1, 1, r.powf(-0.5 - epsilon).min(1.0)),
            FiniteDimSpace::scalar(),
            FiniteDimSpace::scalar(),
            epsilon,
            fractional::FractionalQuad::default(),
        )
    }

    /// Build a zoo kernel from a JSON parameter block.
    pub fn from_spec(spec: &Value) -> Result<Kernel> {
        let kind = spec
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| SioError::domain("kernel spec needs a string field 'kind'"))?;
        match kind {
            "zero" => {
                let dim = spec.get("dim").and_then(Value::as_u64).unwrap_or(1) as usize;
                Ok(zero(dim))
            }
            "indicator_conv" => Ok(indicator_conv()),
            "exponential" => {
                let lambda = spec
                    .get("lambda")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| SioError::domain("exponential kernel needs 'lambda'"))?;
                if lambda <= 0.0 {
                    return Err(SioError::domain("lambda must be positive"));
                }
                Ok(exponential(lambda))
            }
            "semigroup" => {
                let eigs: Vec<f64> = spec
                    .get("eigenvalues")
                    .and_then(Value::as_array)
                    .ok_or_else(|| SioError::domain("semigroup kernel needs 'eigenvalues'"))?
                    .iter()
                    .filter_map(Value::as_f64)
                    .collect();
                semigroup(&eigs)
            }
            "hilbert_hankel" => Ok(hilbert_hankel()),
            "abs_inv_sqrt" => Ok(abs_inv_sqrt()),
            "planted_non_l2" => Ok(planted_non_l2()),
            "fractional" => {
                let eps = spec
                    .get("epsilon")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| SioError::domain("fractional kernel needs 'epsilon'"))?;
                fractional(eps)
            }
            other => Err(SioError::domain(format!("unknown kernel kind '{other}'"))),
        }
    }
}
