//! Finite-dimensional normed spaces standing in for the Banach spaces X, Y.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SioError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "q")]
pub enum NormKind {
    Euclidean,
    /// ℓ^q with q ∈ [2, ∞]; `f64::INFINITY` selects the max norm.
    Lq(f64),
}

/// A finite-dimensional normed space with a cached type-2 constant.
///
/// The type-2 constant is exactly 1 for euclidean spaces. For ℓ^q model
/// spaces it is estimated once at construction by Gaussian Monte Carlo over
/// random finite sequences (fixed internal seed, recorded together with the
/// sampling error).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDimSpace {
    pub dim: usize,
    pub norm_kind: NormKind,
    pub type2_constant: f64,
    /// Sampling error of `type2_constant`; 0 for euclidean.
    pub type2_stderr: f64,
}

impl FiniteDimSpace {
    pub fn euclidean(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        FiniteDimSpace {
            dim,
            norm_kind: NormKind::Euclidean,
            type2_constant: 1.0,
            type2_stderr: 0.0,
        }
    }

    pub fn scalar() -> Self {
        Self::euclidean(1)
    }

    pub fn lq(dim: usize, q: f64) -> Result<Self> {
        if !(q >= 2.0) {
            return Err(SioError::domain(format!(
                "ℓ^q norms require q ≥ 2, got {q}"
            )));
        }
        assert!(dim >= 1, "dimension must be positive");
        let (tau, se) = estimate_type2_lq(dim, q, 4096, 0x5107_2a11);
        Ok(FiniteDimSpace {
            dim,
            norm_kind: NormKind::Lq(q),
            type2_constant: tau,
            type2_stderr: se,
        })
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.norm_kind, NormKind::Euclidean)
    }

    /// Norm of a vector in this space.
    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        debug_assert_eq!(v.len(), self.dim);
        match self.norm_kind {
            NormKind::Euclidean => v.norm(),
            NormKind::Lq(q) if q.is_infinite() => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormKind::Lq(q) => v.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q),
        }
    }

    /// Spot-check that the norm satisfies homogeneity and the triangle
    /// inequality on `samples` random pairs.
    pub fn validate_norm(&self, samples: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let a = random_vector(self.dim, &mut rng);
            let b = random_vector(self.dim, &mut rng);
            let c: f64 = rng.gen_range(-4.0..4.0);
            let na = self.norm(&a);
            let nb = self.norm(&b);
            let nsum = self.norm(&(&a + &b));
            if nsum > na + nb + 1e-10 * (na + nb) {
                return Err(SioError::structure(format!(
                    "triangle inequality violated: {nsum} > {na} + {nb}"
                )));
            }
            let scaled = self.norm(&(&a * c));
            if (scaled - c.abs() * na).abs() > 1e-10 * (1.0 + scaled) {
                return Err(SioError::structure("homogeneity violated".to_string()));
            }
        }
        Ok(())
    }
}

fn random_vector(dim: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| StandardNormal.sample(rng))
}

/// Monte Carlo estimate of the type-2 constant of ℓ^q_dim: the least C with
/// E‖Σ γ_k x_k‖² ≤ C² Σ ‖x_k‖² over random finite sequences. Returns the
/// largest observed ratio together with the sampling error of the mean of the
/// top decile (a crude but stable spread indicator).
fn estimate_type2_lq(dim: usize, q: f64, trials: usize, seed: u64) -> (f64, f64) {
    let space = FiniteDimSpace {
        dim,
        norm_kind: NormKind::Lq(q),
        type2_constant: 1.0,
        type2_stderr: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussians = 64usize;
    let mut ratios = Vec::with_capacity(trials);
    for _ in 0..trials {
        let n = rng.gen_range(1..=6usize);
        let xs: Vec<DVector<f64>> = (0..n).map(|_| random_vector(dim, &mut rng)).collect();
        let sum_sq: f64 = xs.iter().map(|x| space.norm(x).powi(2)).sum();
        if sum_sq < 1e-30 {
            continue;
        }
        let mut acc = 0.0;
        for _ in 0..gaussians {
            let mut s = DVector::zeros(dim);
            for x in &xs {
                let g: f64 = StandardNormal.sample(&mut rng);
                s += x * g;
            }
            acc += space.norm(&s).powi(2);
        }
        let lhs = acc / gaussians as f64;
        ratios.push((lhs / sum_sq).sqrt());
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let top = &ratios[ratios.len() * 9 / 10..];
    let mean = top.iter().sum::<f64>() / top.len() as f64;
    let var = top.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / top.len() as f64;
    let best = *ratios.last().unwrap();
    (best.max(1.0), (var / top.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_type2_is_one() {
        let s = FiniteDimSpace::euclidean(4);
        assert_eq!(s.type2_constant, 1.0);
        assert_eq!(s.type2_stderr, 0.0);
    }

    #[test]
    fn norms_validate() {
        FiniteDimSpace::euclidean(5).validate_norm(64, 1).unwrap();
        FiniteDimSpace::lq(4, 4.0).unwrap().validate_norm(64, 2).unwrap();
        FiniteDimSpace::lq(3, f64::INFINITY)
            .unwrap()
            .validate_norm(64, 3)
            .unwrap();
    }

    #[test]
    fn lq_below_two_rejected() {
        assert!(FiniteDimSpace::lq(3, 1.5).is_err());
    }

    #[test]
    fn lq_type2_at_least_one() {
        let s = FiniteDimSpace::lq(4, 4.0).unwrap();
        assert!(s.type2_constant >= 1.0);
        assert!(s.type2_constant < 3.0);
    }

    #[test]
    fn linf_norm_is_max() {
        let s = FiniteDimSpace::lq(3, f64::INFINITY).unwrap();
        let v = DVector::from_vec(vec![1.0, -5.0, 2.0]);
        assert_eq!(s.norm(&v), 5.0);
    }
}
