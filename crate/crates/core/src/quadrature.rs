//! Gauss–Legendre quadrature.
//!
//! Nodes and weights are generated by Newton iteration on the Legendre
//! polynomials (Bonnet recurrence), which is accurate to machine precision
//! for the orders used here (tens to a few hundred points). Everything is
//! deterministic: the same order always produces the same bits.

/// Nodes (ascending, on [-1, 1]) and weights of the n-point Gauss–Legendre rule.
///
/// Panics if `n == 0`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "quadrature order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi's initial guess for the i-th root (descending order).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 * (1.0 + x.abs()) {
                let (_, d2) = legendre_with_derivative(n, x);
                dp = d2;
                break;
            }
        }
        // Store ascending.
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Legendre polynomial P_n and its derivative at x, via the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 1 {
        return (x, 1.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // P_n' from P_n and P_{n-1}.
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// ∫_a^b f(x) dx by the n-point Gauss–Legendre rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights.iter()) {
        acc += w * f(mid + half * x);
    }
    half * acc
}

/// ∫_a^b f dx where f vanishes like a square root at one or both endpoints.
///
/// Substitutes x = mid + half·sin(u); the Jacobian half·cos(u) absorbs the
/// root singularity and the transformed integrand is smooth, so the rule
/// converges spectrally. Harmless (still exact order) when an endpoint is
/// regular.
pub fn integrate_sqrt_endpoints<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    integrate(
        |u| {
            let x = mid + half * u.sin();
            f(x) * half * u.cos()
        },
        -0.5 * std::f64::consts::PI,
        0.5 * std::f64::consts::PI,
        n,
    )
}
