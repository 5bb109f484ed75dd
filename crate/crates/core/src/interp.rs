//! Monotone piecewise-cubic (Fritsch–Carlson) interpolation.

use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `xs` must be strictly increasing with at least two entries.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert!(xs.len() >= 2 && xs.len() == ys.len());
        let n = xs.len();
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = Vec::with_capacity(n);
        slopes.push(end_slope(xs[1] - xs[0], xs[2.min(n - 1)] - xs[1], &secants, 0));
        for i in 1..n - 1 {
            let (d0, d1) = (secants[i - 1], secants[i]);
            if d0 * d1 <= 0.0 {
                slopes.push(0.0);
            } else {
                // Weighted harmonic mean (Fritsch–Butland) keeps the cubic monotone.
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slopes.push((w1 + w2) / (w1 / d0 + w2 / d1));
            }
        }
        let last = n - 2;
        let hl = xs[n - 1] - xs[n - 2];
        let hp = if n > 2 { xs[n - 2] - xs[n - 3] } else { hl };
        slopes.push(end_slope_right(hl, hp, &secants, last));
        Self { xs, ys, slopes }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    /// Evaluates the interpolant; outside the node range the end cubic is extended.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, secants: &[f64], i: usize) -> f64 {
    if secants.len() < 2 {
        return secants[0];
    }
    let (d0, d1) = (secants[i], secants[i + 1]);
    shape_preserving_end(h0, h1, d0, d1)
}

fn end_slope_right(hl: f64, hp: f64, secants: &[f64], last: usize) -> f64 {
    if secants.len() < 2 {
        return secants[0];
    }
    shape_preserving_end(hl, hp, secants[last], secants[last - 1])
}

fn shape_preserving_end(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn reproduces_nodes_and_linear_data() {
        let xs = vec![0.0, 0.5, 1.5, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let m = MonotoneCubic::new(xs.clone(), ys);
        for &x in &[0.0, 0.2, 1.0, 2.2, 3.0] {
            assert!((m.eval(x) - (2.0 * x + 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn stays_monotone_on_step() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| if x < 5.0 { 0.0 } else { 1.0 }).collect();
        let m = MonotoneCubic::new(xs, ys);
        let mut prev = m.eval(0.0);
        for k in 1..900 {
            let v = m.eval(k as f64 * 0.01);
            assert!(v >= prev - 1e-15 && (-1e-15..=1.0 + 1e-15).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn accurate_on_smooth_data() {
        let xs: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (-x).exp()).collect();
        let m = MonotoneCubic::new(xs, ys);
        for k in 0..90 {
            let x = 0.013 + k as f64 * 0.11;
            assert!((m.eval(x) - (-x).exp()).abs() < 1e-5);
        }
    }
}
