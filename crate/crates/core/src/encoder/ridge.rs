//! Closed-form ridge regression with an unpenalized intercept, and
//! contiguous k-fold selection of the penalty.

use crate::error::{Error, Result};
use crate::numerics::{cholesky_solve, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeConfig {
    pub lambda_grid: Vec<f64>,
    pub folds: usize,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        Self { lambda_grid: log_spaced(1e-5, 1e5, 10), folds: 5 }
    }
}

impl RidgeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() {
            return Err(Error::invalid("ridge lambda grid is empty"));
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::invalid(format!("ridge lambda must be positive, got {l}")));
        }
        if self.folds < 2 {
            return Err(Error::invalid(format!("need at least 2 folds, got {}", self.folds)));
        }
        Ok(())
    }
}

/// `count` values spaced evenly in log10 between `lo` and `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

/// Fitted ridge weights (`D × V`) and intercept (`V`).
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub lambda: f64,
}

impl RidgeFit {
    pub fn predict(&self, x: &Matrix) -> Matrix {
        let mut out = x.matmul(&self.weights);
        for r in 0..out.rows() {
            for (c, b) in self.bias.iter().enumerate() {
                out.set(r, c, out.get(r, c) + b);
            }
        }
        out
    }
}

fn check_inputs(x: &Matrix, y: &Matrix) -> Result<()> {
    if x.rows() != y.rows() {
        return Err(Error::Shape(format!("X has {} rows, Y has {}", x.rows(), y.rows())));
    }
    if x.rows() < 2 {
        return Err(Error::invalid(format!("ridge needs at least 2 samples, got {}", x.rows())));
    }
    if x.data().iter().chain(y.data()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ridge inputs".into()));
    }
    Ok(())
}

fn centered(m: &Matrix, means: &[f64]) -> Matrix {
    let mut data = m.data().to_vec();
    for row in data.chunks_mut(m.cols()) {
        for (v, mu) in row.iter_mut().zip(means) {
            *v -= mu;
        }
    }
    Matrix::new(m.rows(), m.cols(), data).expect("same shape")
}

/// Minimizes `‖Y − XW − 1bᵀ‖² + λ‖W‖²`. With `fit_bias` false the intercept
/// is fixed at zero.
///
/// Solved on centered data through the primal normal equations when
/// `D ≤ N`, and through the kernel form `W = Xᵀ(XXᵀ + λI)⁻¹Y` otherwise.
pub fn ridge_fit(x: &Matrix, y: &Matrix, lambda: f64, fit_bias: bool) -> Result<RidgeFit> {
    check_inputs(x, y)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("ridge lambda must be positive, got {lambda}")));
    }
    let (xm, ym) = if fit_bias {
        (x.column_means(), y.column_means())
    } else {
        (vec![0.0; x.cols()], vec![0.0; y.cols()])
    };
    let xc = centered(x, &xm);
    let yc = centered(y, &ym);
    let (n, d, v) = (x.rows(), x.cols(), y.cols());

    let weights = if d <= n {
        let mut gram = xc.t_matmul(&xc);
        for i in 0..d {
            gram.set(i, i, gram.get(i, i) + lambda);
        }
        let rhs = xc.t_matmul(&yc);
        let w = cholesky_solve(gram.data(), d, rhs.data(), v)
            .ok_or_else(|| Error::Degenerate("ridge system is not positive definite".into()))?;
        Matrix::new(d, v, w)?
    } else {
        let mut kernel = xc.matmul_t(&xc);
        for i in 0..n {
            kernel.set(i, i, kernel.get(i, i) + lambda);
        }
        let alpha = cholesky_solve(kernel.data(), n, yc.data(), v)
            .ok_or_else(|| Error::Degenerate("ridge system is not positive definite".into()))?;
        xc.t_matmul(&Matrix::new(n, v, alpha)?)
    };

    let bias = (0..v)
        .map(|j| ym[j] - (0..d).map(|i| xm[i] * weights.get(i, j)).sum::<f64>())
        .collect();
    Ok(RidgeFit { weights, bias, lambda })
}

/// Contiguous fold boundaries: the first `n % k` folds get one extra sample.
pub fn fold_ranges(n: usize, k: usize) -> Result<Vec<std::ops::Range<usize>>> {
    if k < 2 || n < k {
        return Err(Error::invalid(format!("cannot split {n} samples into {k} folds")));
    }
    let base = n / k;
    let extra = n % k;
    let mut start = 0;
    let ranges = (0..k)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect();
    Ok(ranges)
}

/// Held-out MSE of each fold for one λ.
pub fn fold_mse(x: &Matrix, y: &Matrix, lambda: f64, folds: usize) -> Result<Vec<f64>> {
    let ranges = fold_ranges(x.rows(), folds)?;
    let mut out = Vec::with_capacity(ranges.len());
    for r in ranges {
        let train: Vec<usize> = (0..x.rows()).filter(|i| !r.contains(i)).collect();
        let test: Vec<usize> = r.collect();
        if train.len() < 2 {
            return Err(Error::invalid("fold leaves fewer than 2 training samples"));
        }
        let fit = ridge_fit(&x.select_rows(&train), &y.select_rows(&train), lambda, true)?;
        let pred = fit.predict(&x.select_rows(&test));
        let truth = y.select_rows(&test);
        let sse: f64 = pred.data().iter().zip(truth.data()).map(|(a, b)| (a - b) * (a - b)).sum();
        out.push(sse / (test.len() * y.cols()) as f64);
    }
    Ok(out)
}

/// Result of a cross-validated penalty search.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSelection {
    pub best_lambda: f64,
    /// Mean held-out MSE for each grid value, in grid order.
    pub cv_mse: Vec<f64>,
    pub fit: RidgeFit,
}

/// Picks the grid λ with the lowest mean held-out MSE over contiguous folds
/// (ties go to the larger λ) and refits on all samples.
pub fn ridge_cv_select(x: &Matrix, y: &Matrix, config: &RidgeConfig) -> Result<RidgeSelection> {
    config.validate()?;
    check_inputs(x, y)?;
    if x.rows() < config.folds {
        return Err(Error::invalid(format!(
            "{} samples cannot fill {} folds",
            x.rows(),
            config.folds
        )));
    }
    let mut cv_mse = Vec::with_capacity(config.lambda_grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &lambda in &config.lambda_grid {
        let per_fold = fold_mse(x, y, lambda, config.folds)?;
        let mse = per_fold.iter().sum::<f64>() / per_fold.len() as f64;
        cv_mse.push(mse);
        let better = match best {
            None => true,
            Some((bl, bm)) => mse < bm || (mse == bm && lambda > bl),
        };
        if better {
            best = Some((lambda, mse));
        }
    }
    let (best_lambda, _) = best.expect("grid is nonempty");
    let fit = ridge_fit(x, y, best_lambda, true)?;
    Ok(RidgeSelection { best_lambda, cv_mse, fit })
}
