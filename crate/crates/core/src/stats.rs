//! Ordinary least squares on small design matrices.

use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    /// Coefficients in the order of the basis functions.
    pub coef: Vec<f64>,
    pub rss: f64,
    pub r2: f64,
    pub residuals: Vec<f64>,
}

impl LinearFit {
    pub fn intercept(&self) -> f64 {
        self.coef[0]
    }

    pub fn slope(&self) -> f64 {
        self.coef[1]
    }
}

/// Fit y ≈ Σ_k coef_k·basis_k(x) by normal equations solved with Gaussian
/// elimination (partial pivoting). R² is taken against the mean of y; a
/// constant y gives R² = 1 when the fit is exact.
pub fn least_squares(xs: &[f64], ys: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Result<LinearFit> {
    let n = xs.len();
    let k = basis.len();
    if n != ys.len() {
        return Err(invalid("x and y lengths differ"));
    }
    if n < k || k == 0 {
        return Err(invalid(format!("{n} points cannot fit {k} parameters")));
    }
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| basis.iter().map(|f| f(x)).collect()).collect();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (row, &y) in rows.iter().zip(ys) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += row[i] * row[j];
            }
            a[i][k] += row[i] * y;
        }
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        let scale = a.iter().map(|r| r[col].abs()).fold(0.0, f64::max).max(1e-300);
        if a[col][col].abs() <= 1e-13 * scale {
            return Err(invalid("degenerate design: basis functions are dependent on this grid"));
        }
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..k).map(|i| a[i][k] / a[i][i]).collect();
    let residuals: Vec<f64> =
        rows.iter().zip(ys).map(|(row, &y)| y - row.iter().zip(&coef).map(|(b, c)| b * c).sum::<f64>()).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let mean = ys.iter().sum::<f64>() / n as f64;
    let tss: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r2 = if tss > 0.0 { (1.0 - rss / tss).clamp(0.0, 1.0) } else if rss <= 1e-20 { 1.0 } else { 0.0 };
    Ok(LinearFit { coef, rss, r2, residuals })
}

/// y ≈ a + b·x.
pub fn line(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    least_squares(xs, ys, &[&|_| 1.0, &|x| x])
}
