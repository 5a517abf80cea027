use nalgebra::{DMatrix, DVector};

/// Ordinary least squares solution.
#[derive(Clone, Debug)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub rss: f64,
    pub observations: usize,
    /// Diagonal of `(X'X)^-1`, for standard errors.
    pub xtx_inv_diag: Vec<f64>,
}

impl OlsFit {
    pub fn parameters(&self) -> usize {
        self.coefficients.len()
    }

    /// Unbiased residual variance, falling back to `rss / n` when there are no
    /// residual degrees of freedom.
    pub fn sigma2(&self) -> f64 {
        let dof = self.observations.saturating_sub(self.parameters());
        if dof > 0 {
            self.rss / dof as f64
        } else {
            self.rss / self.observations.max(1) as f64
        }
    }

    pub fn std_error(&self, i: usize) -> f64 {
        (self.sigma2() * self.xtx_inv_diag[i]).sqrt()
    }
}

/// Least squares via SVD. Returns `None` when the design is rank deficient.
pub fn ols(rows: &[Vec<f64>], y: &[f64]) -> Option<OlsFit> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if n == 0 || k == 0 || n < k {
        return None;
    }
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let yv = DVector::from_column_slice(y);
    // Column scaling keeps the rank test independent of regressor units.
    let scale: Vec<f64> = (0..k)
        .map(|j| {
            let norm = x.column(j).norm();
            if norm > 0.0 {
                norm
            } else {
                1.0
            }
        })
        .collect();
    let xs = DMatrix::from_fn(n, k, |i, j| x[(i, j)] / scale[j]);
    let svd = xs.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let tol = max_sv * (n.max(k) as f64) * 1e-10;
    if max_sv == 0.0 || svd.rank(tol) < k {
        return None;
    }
    let beta_s = svd.solve(&yv, tol).ok()?;
    let coefficients: Vec<f64> = (0..k).map(|j| beta_s[j] / scale[j]).collect();
    let fitted = &xs * &beta_s;
    let rss = (&yv - fitted).norm_squared();
    let v_t = svd.v_t.as_ref()?;
    let xtx_inv_diag = (0..k)
        .map(|j| {
            let s: f64 = (0..k)
                .map(|r| (v_t[(r, j)] / svd.singular_values[r]).powi(2))
                .sum();
            s / (scale[j] * scale[j])
        })
        .collect();
    Some(OlsFit {
        coefficients,
        rss,
        observations: n,
        xtx_inv_diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 2.0 + 3.0 * i as f64).collect();
        let fit = ols(&rows, &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-10);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-10);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn collinear_is_rejected() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64, 2.0 * i as f64]).collect();
        assert!(ols(&rows, &[1.0, 2.0, 3.0, 4.0, 6.0]).is_none());
        let zero_col: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64, 0.0]).collect();
        assert!(ols(&zero_col, &[1.0, 2.0, 3.0, 4.0, 6.0]).is_none());
    }

    #[test]
    fn standard_errors_match_closed_form() {
        // Simple regression: se(slope) = sigma / sqrt(sum (x - xbar)^2).
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.0, 2.9, 5.2, 7.1, 8.8, 11.3];
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
        let fit = ols(&rows, &y).unwrap();
        let sxx: f64 = xs.iter().map(|x| (x - 2.5f64).powi(2)).sum();
        let expected = (fit.sigma2() / sxx).sqrt();
        assert!((fit.std_error(1) - expected).abs() < 1e-10);
    }
}
