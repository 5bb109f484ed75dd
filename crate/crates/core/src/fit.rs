//! Log-linear fits of exponential decay.

use alloc::vec::Vec;
// Unused when std is linked (its inherent float methods take precedence).
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("only {0} usable samples in the fit window (need 10)")]
    TooFewSamples(usize),
    #[error("trace lengths differ: {0} times, {1} values")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// `−d ln|N| / dτ`; positive for decay.
    pub rate: f64,
    /// `|N|` extrapolated to the window start.
    pub amplitude: f64,
    pub r_squared: f64,
    pub samples: usize,
    /// Interpolated zero crossings inside the window.
    pub sign_changes: Vec<f64>,
}

/// Fit window `[start, end]` and the half-width excluded around zero crossings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    pub start: f64,
    pub end: f64,
    pub crossing_guard: f64,
}

impl FitWindow {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end, crossing_guard: 0.0 }
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.crossing_guard = guard;
        self
    }
}

/// Least squares on `ln|N|` against `τ`.
pub fn fit_decay_rate(taus: &[f64], values: &[f64], window: FitWindow) -> Result<DecayFit, FitError> {
    if taus.len() != values.len() {
        return Err(FitError::LengthMismatch(taus.len(), values.len()));
    }
    let inside: Vec<usize> = (0..taus.len()).filter(|&i| taus[i] >= window.start && taus[i] <= window.end).collect();
    let mut sign_changes = Vec::new();
    let nonzero: Vec<usize> = inside.iter().copied().filter(|&i| values[i] != 0.0).collect();
    for w in nonzero.windows(2) {
        let (a, b) = (w[0], w[1]);
        if values[a] * values[b] < 0.0 {
            let s = values[a] / (values[a] - values[b]);
            sign_changes.push(taus[a] + s * (taus[b] - taus[a]));
        }
    }
    let usable: Vec<usize> = inside
        .into_iter()
        .filter(|&i| values[i] != 0.0 && values[i].is_finite())
        .filter(|&i| sign_changes.iter().all(|&c| (taus[i] - c).abs() > window.crossing_guard))
        .collect();
    if usable.len() < 10 {
        return Err(FitError::TooFewSamples(usable.len()));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|&i| taus[i]).sum::<f64>() / n;
    let my = usable.iter().map(|&i| values[i].abs().ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &i in &usable {
        let dx = taus[i] - mx;
        let dy = values[i].abs().ln() - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r_squared = if syy > 0.0 && sxx > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    let t_start = taus[usable[0]];
    let amplitude = (my + slope * (t_start - mx)).exp();
    Ok(DecayFit { rate: if slope == 0.0 { 0.0 } else { -slope }, amplitude, r_squared, samples: usable.len(), sign_changes })
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
