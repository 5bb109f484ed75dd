//! Tridiagonal solves.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("zero pivot in row {0}")]
    ZeroPivot(usize),
}

/// Solves `lower[i] u[i-1] + diag[i] u[i] + upper[i] u[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>, LinalgError> {
    let n = diag.len();
    let mut c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    let mut denom = diag[0];
    if denom == 0.0 || !denom.is_finite() {
        return Err(LinalgError::ZeroPivot(0));
    }
    c.push(if n > 1 { upper[0] / denom } else { 0.0 });
    d.push(rhs[0] / denom);
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(LinalgError::ZeroPivot(i));
        }
        c.push(if i + 1 < n { upper[i] / denom } else { 0.0 });
        d.push((rhs[i] - lower[i] * d[i - 1]) / denom);
    }
    let mut u = d;
    for i in (0..n - 1).rev() {
        u[i] -= c[i] * u[i + 1];
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn solves_small_system() {
        // [2 1 0; 1 3 1; 0 1 2] u = [3, 5, 3] -> u = 1
        let u = solve_tridiagonal(&[0.0, 1.0, 1.0], &[2.0, 3.0, 2.0], &[1.0, 1.0, 0.0], &[3.0, 5.0, 3.0])
            .unwrap();
        for v in u {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn reports_zero_pivot() {
        let r = solve_tridiagonal(&[0.0], &[0.0], &[0.0], &[1.0]);
        assert_eq!(r, Err(LinalgError::ZeroPivot(0)));
        let _ = vec![0];
    }
}
