//! Schur-test integrals for the heat kernel on a wedge:
//! `∫ k_t^j(x,y) |x|^{θ/q} |y|^{2-θ/q} dx/|x|²` (and the symmetric
//! y-integral) with
//! `k_t^j(x,y) = ζ^{μ-j}(t,x) ζ^{μ}(t,y) t^{-1} exp(-σ|x-y|²/t)` and
//! `ζ(t,x) = |x|/(|x|+√t)` on R².
//!
//! The integral is computed in polar coordinates with log-radial spacing;
//! the Gaussian tail beyond the truncation radius is bounded analytically
//! and reported.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SioError};
use crate::quad::gauss_legendre;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WedgeParams {
    /// Wedge opening angle κ ∈ (0, 2π).
    pub kappa: f64,
    /// μ = π/κ.
    pub mu: f64,
    /// Gaussian decay rate σ > 0.
    pub sigma: f64,
    /// Weight exponent θ and integrability exponent q; only θ/q enters.
    pub theta: f64,
    pub q: f64,
    /// Kernel order j ∈ {0, 1, 2}.
    pub j: u8,
}

impl WedgeParams {
    pub fn new(kappa: f64, sigma: f64, theta: f64, q: f64, j: u8) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 2.0 * std::f64::consts::PI) {
            return Err(SioError::domain("wedge angle must lie in (0, 2π)"));
        }
        if !(sigma > 0.0) {
            return Err(SioError::domain("gaussian rate σ must be positive"));
        }
        if !(q > 1.0) {
            return Err(SioError::domain("integrability exponent q must exceed 1"));
        }
        if j > 2 {
            return Err(SioError::domain("kernel order j must be 0, 1 or 2"));
        }
        Ok(WedgeParams {
            kappa,
            mu: std::f64::consts::PI / kappa,
            sigma,
            theta,
            q,
            j,
        })
    }

    pub fn exponent_ratio(&self) -> f64 {
        self.theta / self.q
    }

    /// The admissibility window `j - μ < θ/q < 2 + μ`.
    pub fn admissible(&self) -> bool {
        let r = self.exponent_ratio();
        (self.j as f64 - self.mu) < r && r < 2.0 + self.mu
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrateOver {
    X,
    Y,
}

#[derive(Debug, Clone, Copy)]
pub struct WedgeQuad {
    pub radial_pieces: usize,
    pub radial_order: usize,
    pub angular_points: usize,
    pub r_min: f64,
    /// Truncation radius in units of `sqrt(t/σ)` past the fixed point.
    pub tail_sigmas: f64,
}

impl Default for WedgeQuad {
    fn default() -> Self {
        WedgeQuad {
            radial_pieces: 96,
            radial_order: 8,
            angular_points: 192,
            r_min: 1e-12,
            tail_sigmas: 12.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WedgeValue {
    pub value: f64,
    /// Analytic bound on the truncated Gaussian tail.
    pub tail_bound: f64,
    /// Exponent governing the radial integrand at the origin; the integral
    /// diverges as `r_min → 0` when it is ≤ 0.
    pub radial_exponent: f64,
}

fn zeta(t: f64, r: f64) -> f64 {
    r / (r + t.sqrt())
}

/// Evaluate the Schur integral at time `t` with the other point fixed at
/// distance `fixed_radius` from the wedge vertex (the integrals depend on
/// the fixed point through its radius only).
pub fn wedge_schur_integral(
    params: &WedgeParams,
    t: f64,
    fixed_radius: f64,
    over: IntegrateOver,
    quad: &WedgeQuad,
) -> Result<WedgeValue> {
    if !(t > 0.0) {
        return Err(SioError::domain("time t must be positive"));
    }
    if !(fixed_radius >= 0.0) {
        return Err(SioError::domain("fixed radius must be nonnegative"));
    }
    let ratio = params.exponent_ratio();
    let mu = params.mu;
    let j = params.j as f64;

    // moving-variable data: ζ exponent, radial weight exponent (on r, after
    // absorbing dx/|x|² in polar coordinates), and the exponent at the origin
    let (zeta_exp, weight_exp, radial_exponent, fixed_factor) = match over {
        IntegrateOver::X => (
            mu - j,
            ratio - 1.0,
            mu - j + ratio,
            zeta(t, fixed_radius).powf(mu) * fixed_radius.powf(2.0 - ratio),
        ),
        IntegrateOver::Y => (
            mu,
            1.0 - ratio,
            mu + 2.0 - ratio,
            zeta(t, fixed_radius).powf(mu - j) * fixed_radius.powf(ratio),
        ),
    };

    let sqrt_t = t.sqrt();
    let r_min = quad.r_min * sqrt_t.max(fixed_radius).max(1e-30);
    let r_max = fixed_radius + quad.tail_sigmas * (t / params.sigma).sqrt() + 4.0 * sqrt_t;

    // angular factor: ∫_0^{2π} exp(-σ(r² + ρ² - 2rρcosφ)/t) dφ, midpoint rule
    let m = quad.angular_points;
    let dphi = 2.0 * std::f64::consts::PI / m as f64;
    let angular = |r: f64| -> f64 {
        let mut acc = 0.0;
        for k in 0..m {
            let phi = (k as f64 + 0.5) * dphi;
            let dist_sq = r * r + fixed_radius * fixed_radius
                - 2.0 * r * fixed_radius * phi.cos();
            acc += (-params.sigma * dist_sq / t).exp();
        }
        acc * dphi
    };

    let radial_integrand =
        |r: f64| -> f64 { zeta(t, r).powf(zeta_exp) * r.powf(weight_exp) * angular(r) };

    // log-radial composite Gauss–Legendre: ∫ f(r) dr = ∫ f(e^u) e^u du
    let (nodes, weights) = gauss_legendre(quad.radial_order);
    let (u_lo, u_hi) = (r_min.ln(), r_max.ln());
    let hp = (u_hi - u_lo) / quad.radial_pieces as f64;
    let mut acc = 0.0;
    for p in 0..quad.radial_pieces {
        let mid = u_lo + (p as f64 + 0.5) * hp;
        for (&x, &w) in nodes.iter().zip(&weights) {
            let u = mid + 0.5 * hp * x;
            let r = u.exp();
            acc += w * radial_integrand(r) * r;
        }
    }
    let value = fixed_factor * acc * 0.5 * hp / t;

    // Gaussian tail past r_max: the integrand there is bounded by
    // r^{weight_exp} · 2π · exp(-σ(r-ρ)²/t), decreasing, so one width of the
    // Gaussian at the cut dominates the remainder.
    let gap = r_max - fixed_radius;
    let tail_env = r_max.powf(weight_exp.max(0.0))
        * 2.0
        * std::f64::consts::PI
        * (-params.sigma * gap * gap / t).exp();
    let tail_bound = fixed_factor * tail_env * (t / params.sigma).sqrt() / t;

    Ok(WedgeValue {
        value,
        tail_bound,
        radial_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn admissibility_window() {
        // κ = π/2 gives μ = 2: window (j-2, 4)
        let p = WedgeParams::new(std::f64::consts::FRAC_PI_2, 1.0, 1.0, 1.0, 0).unwrap();
        assert!(p.admissible());
        let p = WedgeParams::new(std::f64::consts::FRAC_PI_2, 1.0, 4.5, 1.0, 0).unwrap();
        assert!(!p.admissible());
        let p = WedgeParams::new(std::f64::consts::FRAC_PI_2, 1.0, -2.5, 1.0, 0).unwrap();
        assert!(!p.admissible());
    }

    #[test]
    fn scaling_invariance_in_t() {
        // I(t, √t·ρ) = I(1, ρ): values at t = 1 and t = 4 agree after the
        // substitution x → x√t, y → y√t
        let p = WedgeParams::new(std::f64::consts::FRAC_PI_2, 1.0, 1.0, 1.0, 0).unwrap();
        let quad = WedgeQuad::default();
        for over in [IntegrateOver::X, IntegrateOver::Y] {
            let rho = 0.7;
            let v1 = wedge_schur_integral(&p, 1.0, rho, over, &quad).unwrap();
            let v4 = wedge_schur_integral(&p, 4.0, 2.0 * rho, over, &quad).unwrap();
            assert_abs_diff_eq!(v1.value, v4.value, epsilon = 1e-4 * v1.value.max(1.0));
        }
    }

    #[test]
    fn admissible_value_finite_and_truncation_stable() {
        // j=0, μ=2 (κ=π/2), θ/q=1, σ=1: stable under doubling the radius
        let p = WedgeParams::new(std::f64::consts::FRAC_PI_2, 1.0, 1.0, 1.0, 0).unwrap();
        let q1 = WedgeQuad::default();
        let q2 = WedgeQuad {
            tail_sigmas: 24.0,
            radial_pieces: 192,
            ..q1
        };
        let v1 = wedge_schur_integral(&p, 1.0, 1.3, IntegrateOver::X, &q1).unwrap();
        let v2 = wedge_schur_integral(&p, 1.0, 1.3, IntegrateOver::X, &q2).unwrap();
        assert!(v1.value.is_finite() && v1.value > 0.0);
        assert!((v2.value - v1.value).abs() <= 1e-5 * v1.value + v1.tail_bound.max(v2.tail_bound));
    }

    #[test]
    fn divergence_approaching_lower_boundary() {
        // θ/q ↓ j - μ: the x-integral loses integrability at the origin and
        // the value grows monotonically without bound along the sequence
        let mut last = 0.0;
        let quad = WedgeQuad::default();
        for k in 1..=5 {
            let delta = 0.5f64.powi(k);
            let ratio = -2.0 + delta; // j=0, μ=2: boundary at -2
            let p = WedgeParams::new(std::f64::consts::FRAC_PI_2, 1.0, ratio, 1.0, 0).unwrap();
            assert!(p.admissible());
            let v = wedge_schur_integral(&p, 1.0, 1.0, IntegrateOver::X, &quad).unwrap();
            assert!(v.value > last, "value must grow monotonically");
            last = v.value;
        }
        assert!(last > 5.0, "values should blow up near the boundary, got {last}");
    }

    #[test]
    fn divergence_outside_window_under_rmin_refinement() {
        // strictly outside the window the truncated integral grows without
        // bound as r_min shrinks
        let p = WedgeParams::new(std::f64::consts::FRAC_PI_2, 1.0, -2.5, 1.0, 0).unwrap();
        assert!(!p.admissible());
        let mut last = 0.0;
        for r_min in [1e-2, 1e-4, 1e-6, 1e-8] {
            let quad = WedgeQuad {
                r_min,
                ..WedgeQuad::default()
            };
            let v = wedge_schur_integral(&p, 1.0, 1.0, IntegrateOver::X, &quad).unwrap();
            assert!(v.value > 1.5 * last, "divergence must be monotone, got {} then {}", last, v.value);
            last = v.value;
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(WedgeParams::new(0.0, 1.0, 1.0, 1.0, 0).is_err());
        assert!(WedgeParams::new(1.0, -1.0, 1.0, 1.0, 0).is_err());
        assert!(WedgeParams::new(1.0, 1.0, 1.0, 1.0, 3).is_err());
        let p = WedgeParams::new(1.0, 1.0, 1.0, 2.0, 0).unwrap();
        assert!(
            wedge_schur_integral(&p, 0.0, 1.0, IntegrateOver::X, &WedgeQuad::default()).is_err()
        );
    }
}
