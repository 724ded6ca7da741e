//! Composite Simpson quadrature on a fixed interval.
//!
//! All integrands in this crate are smooth with Gaussian tails, so composite
//! Simpson on a generous interval converges far below the tolerances used by
//! the verification suites.

/// Integrates `f` over `[a, b]` with `n` panels (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n.max(2) } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        sum += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    sum * h / 3.0
}

/// Simpson weights on an existing uniform grid of odd length.
pub fn simpson_on_grid(values: &[f64], step: f64) -> f64 {
    assert!(values.len() >= 3 && values.len() % 2 == 1, "need odd grid length >= 3");
    let mut sum = values[0] + values[values.len() - 1];
    for (i, v) in values.iter().enumerate().skip(1).take(values.len() - 2) {
        sum += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    sum * step / 3.0
}

/// Uniform grid of `n` points spanning `[a, b]` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + i as f64 * h).collect()
}
