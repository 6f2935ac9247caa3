//! Small dense weighted least squares used by the LIME and kernel SHAP fits.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;

/// Solve `a x = b` by Gaussian elimination with partial pivoting. `a` is
/// row-major `n x n`. Returns `None` when a pivot falls below `PIVOT_TOL`
/// relative to the largest entry.
pub(crate) fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if n == 0 {
        return Some(Vec::new());
    }
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .expect("non-empty range");
        if a[pivot_row * n + col].abs() <= PIVOT_TOL * scale {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let p = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / p;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row * n + row];
    }
    Some(x)
}

/// Fitted linear model `intercept + coef . x`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LinearFit {
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl LinearFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

/// Minimize `sum_i w_i (y_i - b0 - b . x_i)^2 + lambda |b|^2`. The intercept is
/// fitted (and unpenalized) only when `fit_intercept` is set; otherwise it is 0.
pub(crate) fn weighted_ridge(
    rows: &[Vec<f64>],
    y: &[f64],
    w: &[f64],
    lambda: f64,
    fit_intercept: bool,
) -> Result<LinearFit> {
    let p = rows.first().map_or(0, Vec::len);
    let off = usize::from(fit_intercept);
    let n = p + off;
    let mut ata = vec![0.0; n * n];
    let mut atb = vec![0.0; n];
    let mut z = vec![0.0; n];
    for ((row, &yi), &wi) in rows.iter().zip(y).zip(w) {
        if fit_intercept {
            z[0] = 1.0;
        }
        z[off..].copy_from_slice(row);
        for i in 0..n {
            if z[i] == 0.0 {
                continue;
            }
            let wz = wi * z[i];
            atb[i] += wz * yi;
            for j in 0..n {
                ata[i * n + j] += wz * z[j];
            }
        }
    }
    for j in off..n {
        ata[j * n + j] += lambda;
    }
    let sol = solve(ata, atb).ok_or(Error::Singular)?;
    Ok(if fit_intercept {
        LinearFit {
            intercept: sol[0],
            coef: sol[1..].to_vec(),
        }
    } else {
        LinearFit {
            intercept: 0.0,
            coef: sol,
        }
    })
}
