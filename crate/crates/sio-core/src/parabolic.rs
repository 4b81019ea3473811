//! Parabolic kernel-regularity checks on `(0,T) × D` with the parabolic
//! norm `|(t,x)|_{(2,1)} = max(|t|^{1/2}, |x|)`:
//!
//! * Gaussian-derivative hypotheses → the parabolic smoothness conclusion
//!   `|ΔK| ≲ |(t-t',x-x')|_{(2,1)} / |(t-s,x-y)|_{(2,1)}^{d+2}`;
//! * the integrated square-Hörmander-type conclusion
//!   `(∫ (∫_{I(s)} |ΔK| dy)² ds)^{1/2} ≤ C_ε A₀`.
//!
//! Constants are fitted on samples; a kernel violating the bounds shows up
//! as a fitted constant that diverges when the minimum sampled scale is
//! refined.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SioError};

/// `|(t,x)|_{(2,1)} = max(|t|^{1/2}, |x|)`.
pub fn parabolic_norm(t: f64, x: f64) -> f64 {
    t.abs().sqrt().max(x.abs())
}

pub type Kernel4 = dyn Fn(f64, f64, f64, f64) -> f64 + Sync;

#[derive(Debug, Clone, Copy)]
pub struct ParabolicCheckConfig {
    /// Time extent of `(0,T)`.
    pub t_extent: f64,
    /// Space extent of the interval domain `D = (0, X)`.
    pub x_extent: f64,
    /// Exponential decay rate in the hypothesis bounds.
    pub c: f64,
    pub samples: usize,
    pub seed: u64,
    /// Smallest parabolic distance sampled; refinement studies shrink it.
    pub min_scale: f64,
}

impl Default for ParabolicCheckConfig {
    fn default() -> Self {
        ParabolicCheckConfig {
            t_extent: 1.0,
            x_extent: 1.0,
            c: 0.25,
            samples: 4000,
            seed: 0x9a7ab01,
            min_scale: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParabolicReport {
    /// Fitted constant in the Gaussian-derivative hypotheses.
    pub hypothesis_constant: f64,
    /// Fitted constant in the parabolic smoothness conclusion
    /// `sup |ΔK| · R^{d+2} / ρ` over admissible samples `ρ ≤ R/2`.
    pub conclusion_constant: f64,
    /// Max over probe pairs of `lhs / conclusion_constant` in the integrated
    /// conclusion; finiteness is the check.
    pub integrated_ratio: f64,
    pub min_scale: f64,
    pub samples_used: usize,
}

/// Run the full parabolic check (d = 1).
pub fn parabolic_standard_check(
    kernel: &Kernel4,
    cfg: &ParabolicCheckConfig,
) -> Result<ParabolicReport> {
    if !(cfg.t_extent > 0.0 && cfg.x_extent > 0.0) {
        return Err(SioError::domain("parabolic domain extents must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = 1.0f64;

    // --- hypotheses: finite-difference derivative bounds ---
    let mut hyp: f64 = 0.0;
    for _ in 0..cfg.samples {
        let s: f64 = rng.gen_range(0.0..cfg.t_extent * 0.9);
        let dt: f64 = cfg.min_scale
            * ((cfg.t_extent - s) / cfg.min_scale).powf(rng.gen_range(0.0..1.0f64));
        let t = s + dt;
        let x: f64 = rng.gen_range(0.0..cfg.x_extent);
        let y: f64 = rng.gen_range(0.0..cfg.x_extent);
        let u = (x - y).abs() / dt.sqrt();
        let damp = (cfg.c * u).exp();
        let step_x = (dt.sqrt() * 1e-4).min(1e-6 * cfg.x_extent).max(1e-9);
        if x - step_x <= 0.0 || x + step_x >= cfg.x_extent {
            continue;
        }
        let dkx = (kernel(t, s, x + step_x, y) - kernel(t, s, x - step_x, y)) / (2.0 * step_x);
        let step_t = (dt * 1e-4).max(1e-12);
        let dkt = (kernel(t + step_t, s, x, y) - kernel(t - step_t, s, x, y)) / (2.0 * step_t);
        let k0 = kernel(t, s, x, y).abs();
        hyp = hyp
            .max(k0 * dt.powf((d + 1.0) / 2.0) * damp)
            .max(dkx.abs() * dt.powf((d + 2.0) / 2.0) * damp)
            .max(dkt.abs() * dt.powf((d + 3.0) / 2.0) * damp);
    }

    // --- conclusion: parabolic smoothness on admissible samples ---
    let mut concl: f64 = 0.0;
    let mut used = 0usize;
    let mut attempts = 0usize;
    while used < cfg.samples && attempts < 50 * cfg.samples {
        attempts += 1;
        // base configuration at parabolic distance R, perturbation at ρ ≤ R/2
        let big = parabolic_norm(cfg.t_extent, cfg.x_extent);
        let r_scale: f64 =
            cfg.min_scale * (0.25 * big / cfg.min_scale).powf(rng.gen_range(0.0..1.0f64));
        let s: f64 = rng.gen_range(0.0..cfg.t_extent * 0.5);
        let t = s + r_scale * r_scale * rng.gen_range(0.5..1.0f64);
        let y: f64 = rng.gen_range(0.0..cfg.x_extent);
        let x = y + r_scale * rng.gen_range(-1.0..1.0f64);
        if t >= cfg.t_extent || x <= 0.0 || x >= cfg.x_extent {
            continue;
        }
        let big_r = parabolic_norm(t - s, x - y);
        if big_r < cfg.min_scale {
            continue;
        }
        let rho_target = big_r * rng.gen_range(0.05..0.5f64);
        let t2 = t + rho_target * rho_target * rng.gen_range(-1.0..1.0f64);
        let x2 = x + rho_target * rng.gen_range(-1.0..1.0f64);
        if t2 <= 0.0 || t2 >= cfg.t_extent || x2 <= 0.0 || x2 >= cfg.x_extent {
            continue;
        }
        let rho = parabolic_norm(t - t2, x - x2);
        if rho == 0.0 || rho > 0.5 * big_r {
            continue;
        }
        used += 1;
        let delta = (kernel(t, s, x, y) - kernel(t2, s, x2, y)).abs();
        concl = concl.max(delta * big_r.powf(d + 2.0) / rho);
    }

    // --- integrated conclusion (ε = 1): quadrature over (s, y) ---
    let a0 = concl.max(1e-300);
    let mut integrated: f64 = 0.0;
    let n_s = 192;
    let n_y = 192;
    let h_s = cfg.t_extent / n_s as f64;
    let h_y = cfg.x_extent / n_y as f64;
    for _ in 0..4 {
        let t: f64 = rng.gen_range(cfg.t_extent * 0.3..cfg.t_extent * 0.9);
        let x: f64 = rng.gen_range(cfg.x_extent * 0.2..cfg.x_extent * 0.8);
        let scale: f64 = rng.gen_range(0.02..0.1f64);
        let t2 = t + scale * scale * cfg.t_extent;
        let x2 = x + scale * cfg.x_extent * 0.5;
        if t2 >= cfg.t_extent || x2 >= cfg.x_extent {
            continue;
        }
        let rho = parabolic_norm(t - t2, x - x2);
        let mut acc = 0.0;
        for is in 0..n_s {
            let s = (is as f64 + 0.5) * h_s;
            let mut inner = 0.0;
            for iy in 0..n_y {
                let y = (iy as f64 + 0.5) * h_y;
                if rho > 0.5 * parabolic_norm(t - s, x - y) {
                    continue;
                }
                inner += (kernel(t, s, x, y) - kernel(t2, s, x2, y)).abs() * h_y;
            }
            acc += inner * inner * h_s;
        }
        integrated = integrated.max(acc.sqrt() / a0);
    }

    Ok(ParabolicReport {
        hypothesis_constant: hyp,
        conclusion_constant: concl,
        integrated_ratio: integrated,
        min_scale: cfg.min_scale,
        samples_used: used,
    })
}

/// The exact heat kernel on the line, `(t-s)^{-1} e^{-(x-y)²/(4(t-s))}`
/// for `t > s` (d = 1 with the extra `(t-s)^{-1/2}` from the hypotheses'
/// normalization).
pub fn gaussian_model_kernel(t: f64, s: f64, x: f64, y: f64) -> f64 {
    if t <= s {
        return 0.0;
    }
    let dt = t - s;
    dt.powf(-1.0) * (-(x - y) * (x - y) / (4.0 * dt)).exp()
}
