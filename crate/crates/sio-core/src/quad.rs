//! Small quadrature toolbox: Gauss–Legendre rules, composite integration and
//! log-spaced rules for integrands with power-law endpoint behaviour.

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre polynomial; accurate to machine precision
/// for the orders used here (n ≤ 128).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P'_n(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// ∫_a^b f by a single Gauss–Legendre rule of order `n`.
pub fn integrate_gl<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    xs.iter()
        .zip(&ws)
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// ∫_a^b f with the interval split into `pieces` equal parts, GL order `n` each.
pub fn integrate_composite_gl<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    pieces: usize,
    n: usize,
) -> f64 {
    let (xs, ws) = gauss_legendre(n);
    let h = (b - a) / pieces as f64;
    let mut acc = 0.0;
    for k in 0..pieces {
        let lo = a + k as f64 * h;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        for (&x, &w) in xs.iter().zip(&ws) {
            acc += w * f(mid + half * x);
        }
    }
    acc * 0.5 * h
}

/// ∫_a^b f(r) dr/r via the substitution r = e^u, i.e. ∫ f(e^u) du.
///
/// `a > 0`. Suited to integrands that are slowly varying per octave.
pub fn integrate_log<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize, n: usize) -> f64 {
    assert!(a > 0.0 && b > a);
    integrate_composite_gl(|u| f(u.exp()), a.ln(), b.ln(), pieces, n)
}
