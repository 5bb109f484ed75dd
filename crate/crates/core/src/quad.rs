//! Adaptive Gauss–Kronrod (7/15) quadrature.

use alloc::vec::Vec;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub converged: bool,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// `∫_a^b f` to `max(tol·|I|, tol·1e-300)` by interval bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Integral {
    if a == b {
        return Integral { value: 0.0, abs_error: 0.0, converged: true };
    }
    let (v, e) = kronrod(&f, a, b);
    let mut parts: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    parts.push((a, b, v, e));
    let mut total = v;
    let mut err = e;
    while err > tol * total.abs().max(1e-300) && parts.len() < MAX_INTERVALS {
        // Split the worst interval.
        let (worst, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, pv, pe) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = kronrod(&f, lo, mid);
        let (v2, e2) = kronrod(&f, mid, hi);
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
        if (hi - lo).abs() < 1e-14 * (lo.abs() + hi.abs()) {
            break;
        }
    }
    // Re-sum to shed accumulated rounding from the running updates.
    let value: f64 = parts.iter().map(|p| p.2).sum();
    let abs_error: f64 = parts.iter().map(|p| p.3).sum();
    Integral { value, abs_error, converged: abs_error <= tol * value.abs().max(1e-300) }
}

/// `∫_a^∞ f` via `x = a + L s/(1-s)`.
pub fn to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, length: f64, tol: f64) -> Integral {
    let l = if length > 0.0 { length } else { 1.0 };
    integrate(
        |s| {
            let w = 1.0 - s;
            let x = a + l * s / w;
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v * l / (w * w)
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// Cumulative trapezoid of samples `ys` on nodes `xs`.
pub fn cumulative_trapezoid(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..xs.len() {
        acc += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-14);
        assert_relative_eq!(r.value, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn gaussian_tail() {
        let r = to_infinity(|x| (-x * x).exp(), 0.0, 1.0, 1e-13);
        assert_relative_eq!(r.value, 0.5 * core::f64::consts::PI.sqrt(), max_relative = 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn power_tail() {
        // ∫_1^∞ x^{-3} = 1/2
        let r = to_infinity(|x| x.powi(-3), 1.0, 1.0, 1e-13);
        assert_relative_eq!(r.value, 0.5, max_relative = 1e-12);
    }
}
