//! Dini moduli of continuity and their square-Dini integral.

use std::sync::Arc;

use crate::error::{Result, SioError};
use crate::quad;

/// Cap above which the Dini integral is reported as divergent.
pub const DINI_DIVERGENCE_CAP: f64 = 1e6;

/// A modulus ω: [0,1] → [0,∞) with its cached square-Dini integral
/// `(∫_0^1 ω(r)² dr/r)^{1/2}`.
#[derive(Clone)]
pub struct DiniModulus {
    omega: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub dini_integral: f64,
    pub name: String,
}

impl std::fmt::Debug for DiniModulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiniModulus")
            .field("name", &self.name)
            .field("dini_integral", &self.dini_integral)
            .finish()
    }
}

impl DiniModulus {
    /// Wrap a modulus after validating ω(0)=0, monotonicity and
    /// subadditivity on a 256-point lattice (all lattice pairs).
    pub fn new(
        name: impl Into<String>,
        omega: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let omega = Arc::new(omega);
        validate_modulus(omega.as_ref(), 256)?;
        let dini_integral = dini_integral_of(omega.as_ref());
        Ok(DiniModulus {
            omega,
            dini_integral,
            name: name.into(),
        })
    }

    /// Power modulus `ω(r) = c·r^ε`, the (ε,2)-standard case. Its Dini norm
    /// is `c/√(2ε)`.
    pub fn power(c: f64, epsilon: f64) -> Result<Self> {
        if !(c >= 0.0) || !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(SioError::domain("power modulus needs c ≥ 0, ε ∈ (0,1]"));
        }
        DiniModulus::new(format!("{c}·r^{epsilon}"), move |r| c * r.powf(epsilon))
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.omega)(r.clamp(0.0, 1.0))
    }

    /// Rescaled modulus `c·ω`.
    pub fn scaled(&self, c: f64) -> DiniModulus {
        let omega = self.omega.clone();
        DiniModulus {
            omega: Arc::new(move |r| c * omega(r)),
            dini_integral: c * self.dini_integral,
            name: format!("{c}·({})", self.name),
        }
    }
}

fn validate_modulus(omega: &(dyn Fn(f64) -> f64 + Send + Sync), lattice: usize) -> Result<()> {
    if omega(0.0).abs() > 1e-14 {
        return Err(SioError::domain("modulus must satisfy ω(0) = 0"));
    }
    let pts: Vec<f64> = (0..=lattice).map(|i| i as f64 / lattice as f64).collect();
    let vals: Vec<f64> = pts.iter().map(|&r| omega(r)).collect();
    for w in vals.windows(2) {
        if w[1] < w[0] - 1e-12 {
            return Err(SioError::domain("modulus must be nondecreasing"));
        }
    }
    for (i, &a) in pts.iter().enumerate() {
        for (j, &b) in pts.iter().enumerate() {
            if a + b <= 1.0 {
                let sum_idx = ((a + b) * lattice as f64).round() as usize;
                if vals[sum_idx] > vals[i] + vals[j] + 1e-10 {
                    return Err(SioError::domain(format!(
                        "modulus not subadditive at ({a}, {b})"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// `(∫_0^1 ω(r)² dr/r)^{1/2}` by log-spaced quadrature down to r = 1e-14;
/// values above [`DINI_DIVERGENCE_CAP`] are reported as +∞.
pub fn dini_integral_of(omega: &(dyn Fn(f64) -> f64 + Send + Sync)) -> f64 {
    let v = quad::integrate_log(|r| omega(r).powi(2), 1e-14, 1.0, 256, 16).sqrt();
    if v > DINI_DIVERGENCE_CAP || !v.is_finite() {
        f64::INFINITY
    } else {
        v
    }
}

/// The cached square-Dini integral of a modulus (recomputes and re-caches).
pub fn dini_norm(m: &DiniModulus) -> f64 {
    m.dini_integral
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sqrt_modulus_has_unit_norm() {
        // ω = r^{1/2}: ∫_0^1 dr = 1
        let m = DiniModulus::power(1.0, 0.5).unwrap();
        assert_abs_diff_eq!(m.dini_integral, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn linear_modulus() {
        // ω = r: ∫_0^1 r dr = 1/2
        let m = DiniModulus::power(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(m.dini_integral, 1.0 / 2f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn power_modulus_matches_closed_form() {
        // ω = C·r^ε: norm C/√(2ε)
        for (c, eps) in [(2.0, 0.25), (0.5, 0.75), (3.0, 0.1)] {
            let m = DiniModulus::power(c, eps).unwrap();
            assert_abs_diff_eq!(m.dini_integral, c / (2.0 * eps).sqrt(), epsilon = 1e-7 * c);
        }
    }

    #[test]
    fn divergence_cap_reports_infinity() {
        // ω(r) = r^{-1} blows past the cap within the quadrature range
        let v = dini_integral_of(&|r: f64| if r == 0.0 { 0.0 } else { 1.0 / r });
        assert!(v.is_infinite());
    }

    #[test]
    fn log_divergent_modulus_truncated_value() {
        // ω(r) = (1-ln r)^{-1/2} diverges log-log; truncated at r = 1e-14 the
        // integral is ln(1 + ln 1e14) ≈ 3.504, so the norm is ≈ 1.872.
        let v = dini_integral_of(&|r: f64| {
            if r == 0.0 {
                0.0
            } else {
                1.0 / (1.0 - r.ln()).sqrt()
            }
        });
        assert!((1.8..1.95).contains(&v), "got {v}");
    }

    #[test]
    fn non_monotone_rejected() {
        assert!(DiniModulus::new("bad", |r| (4.0 * std::f64::consts::PI * r).sin().abs()).is_err());
    }

    #[test]
    fn nonzero_at_origin_rejected() {
        assert!(DiniModulus::new("bad", |_| 1.0).is_err());
    }
}
