//! Independent composite Simpson rule used as a quadrature oracle.
#![allow(dead_code)]

/// Composite Simpson on `[a, b]` with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

/// `∫_a^∞ f` for `f = O(x^{-p})`, `p > 1`, via `x = a + L((1 − u)^{-k} − 1)`
/// with `k = 3/(p − 1)` so the transformed integrand vanishes at `u = 1`.
pub fn simpson_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, length: f64, p: f64, n: usize) -> f64 {
    let k = 3.0 / (p - 1.0);
    simpson(
        |u| {
            if u >= 1.0 {
                return 0.0;
            }
            let w = 1.0 - u;
            let x = a + length * (w.powf(-k) - 1.0);
            f(x) * length * k * w.powf(-k - 1.0)
        },
        0.0,
        1.0,
        n,
    )
}
