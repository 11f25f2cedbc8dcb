//! Low-level numerical kernels shared by the rest of the crate.
//!
//! Everything here is a pure function over `f64` buffers. Convolutions are
//! "same"-sized cross-correlations with zero padding; resizing uses
//! pixel-center aligned bilinear interpolation.

use crate::error::{Error, Result};

/// Dense real grid, row-major (column index fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl Grid2D {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "grid dimensions must be positive, got {height}x{width}"
            )));
        }
        if values.len() != height * width {
            return Err(Error::Shape(format!(
                "grid {height}x{width} needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("grid value at index {i}")));
        }
        Ok(Self { height, width, values })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height > 0 && width > 0, "grid dimensions must be positive");
        Self { height, width, values: vec![0.0; height * width] }
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        let mut g = Self::zeros(height, width);
        g.values.fill(value);
        g
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Self { height, width, values }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.width + col] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index of the largest value (first one on ties) as `(row, col)`.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        (best / self.width, best % self.width)
    }

    pub fn same_shape(&self, other: &Grid2D) -> bool {
        self.height == other.height && self.width == other.width
    }
}

/// Normalized, symmetric Gaussian window.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    size: usize,
    sigma: f64,
    weights: Grid2D,
}

impl GaussianKernel {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn weights(&self) -> &Grid2D {
        &self.weights
    }
}

impl AsRef<Grid2D> for GaussianKernel {
    fn as_ref(&self) -> &Grid2D {
        &self.weights
    }
}

impl AsRef<Grid2D> for Grid2D {
    fn as_ref(&self) -> &Grid2D {
        self
    }
}

/// Builds a `size`x`size` Gaussian with the center cell at offset (0, 0),
/// normalized to sum to one.
pub fn gaussian_kernel2d(size: usize, sigma: f64) -> Result<GaussianKernel> {
    if size == 0 || size % 2 == 0 {
        return Err(Error::invalid(format!("kernel size must be odd and positive, got {size}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("kernel sigma must be positive, got {sigma}")));
    }
    let r = (size / 2) as f64;
    let denom = 2.0 * sigma * sigma;
    let mut weights = Grid2D::from_fn(size, size, |row, col| {
        let dy = row as f64 - r;
        let dx = col as f64 - r;
        (-(dx * dx + dy * dy) / denom).exp()
    });
    let total = weights.sum();
    weights.values_mut().iter_mut().for_each(|w| *w /= total);
    Ok(GaussianKernel { size, sigma, weights })
}

fn check_odd_kernel(kernel: &Grid2D) -> Result<()> {
    if kernel.height() % 2 == 0 || kernel.width() % 2 == 0 {
        return Err(Error::invalid(format!(
            "kernel sides must be odd, got {}x{}",
            kernel.height(),
            kernel.width()
        )));
    }
    Ok(())
}

/// "Same"-shaped cross-correlation with zero padding:
/// `out[r][c] = Σ k[i][j] · in[r + i - kh/2][c + j - kw/2]`.
///
/// The kernel is not flipped.
pub fn convolve2d_same<K: AsRef<Grid2D>>(input: &Grid2D, kernel: K) -> Result<Grid2D> {
    let kernel = kernel.as_ref();
    check_odd_kernel(kernel)?;
    let mut out = Grid2D::zeros(input.height(), input.width());
    correlate_same_into(
        input.values(),
        input.height(),
        input.width(),
        kernel.values(),
        kernel.height(),
        kernel.width(),
        out.values_mut(),
    );
    Ok(out)
}

/// Adjoint of [`convolve2d_same`] with respect to its input: scatters each
/// output cell back through the kernel taps.
pub fn convolve2d_same_adjoint<K: AsRef<Grid2D>>(grad_out: &Grid2D, kernel: K) -> Result<Grid2D> {
    let kernel = kernel.as_ref();
    check_odd_kernel(kernel)?;
    let (h, w) = (grad_out.height(), grad_out.width());
    let (kh, kw) = (kernel.height(), kernel.width());
    let (ry, rx) = ((kh / 2) as isize, (kw / 2) as isize);
    let mut out = Grid2D::zeros(h, w);
    for r in 0..h {
        for c in 0..w {
            let g = grad_out.get(r, c);
            if g == 0.0 {
                continue;
            }
            for i in 0..kh {
                let rr = r as isize + i as isize - ry;
                if rr < 0 || rr >= h as isize {
                    continue;
                }
                for j in 0..kw {
                    let cc = c as isize + j as isize - rx;
                    if cc < 0 || cc >= w as isize {
                        continue;
                    }
                    let idx = rr as usize * w + cc as usize;
                    out.values_mut()[idx] += g * kernel.get(i, j);
                }
            }
        }
    }
    Ok(out)
}

pub(crate) fn correlate_same_into(
    input: &[f64],
    h: usize,
    w: usize,
    kernel: &[f64],
    kh: usize,
    kw: usize,
    out: &mut [f64],
) {
    let (ry, rx) = ((kh / 2) as isize, (kw / 2) as isize);
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0;
            for i in 0..kh {
                let rr = r as isize + i as isize - ry;
                if rr < 0 || rr >= h as isize {
                    continue;
                }
                let row = &input[rr as usize * w..(rr as usize + 1) * w];
                for j in 0..kw {
                    let cc = c as isize + j as isize - rx;
                    if cc < 0 || cc >= w as isize {
                        continue;
                    }
                    acc += kernel[i * kw + j] * row[cc as usize];
                }
            }
            out[r * w + c] = acc;
        }
    }
}

/// Linear interpolation taps for resampling one axis from `n_in` to `n_out`
/// cells with pixel-center alignment. Each output cell reads
/// `(1 - t) · src[i0] + t · src[i1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Tap {
    pub i0: usize,
    pub i1: usize,
    pub t: f64,
}

pub(crate) fn linear_taps(n_in: usize, n_out: usize) -> Vec<Tap> {
    let scale = n_in as f64 / n_out as f64;
    let max = (n_in - 1) as f64;
    (0..n_out)
        .map(|i| {
            let src = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let i0 = src.floor() as usize;
            let i1 = (i0 + 1).min(n_in - 1);
            Tap { i0, i1, t: src - i0 as f64 }
        })
        .collect()
}

/// Bilinear resize with pixel-center alignment. The source coordinate of
/// output cell `i` is `(i + 0.5)·(in/out) − 0.5`, clamped to `[0, in − 1]`.
pub fn bilinear_resize(input: &Grid2D, out_height: usize, out_width: usize) -> Result<Grid2D> {
    if out_height == 0 || out_width == 0 {
        return Err(Error::invalid(format!(
            "resize target must be positive, got {out_height}x{out_width}"
        )));
    }
    if out_height == input.height() && out_width == input.width() {
        return Ok(input.clone());
    }
    let rows = linear_taps(input.height(), out_height);
    let cols = linear_taps(input.width(), out_width);
    let out = Grid2D::from_fn(out_height, out_width, |r, c| {
        let ty = rows[r];
        let tx = cols[c];
        let top = (1.0 - tx.t) * input.get(ty.i0, tx.i0) + tx.t * input.get(ty.i0, tx.i1);
        let bottom = (1.0 - tx.t) * input.get(ty.i1, tx.i0) + tx.t * input.get(ty.i1, tx.i1);
        (1.0 - ty.t) * top + ty.t * bottom
    });
    Ok(out)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population (divide-by-N) standard deviation.
pub fn population_std(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

pub(crate) const DEGENERATE_STD: f64 = 1e-12;

/// Standardizes to mean 0 and population standard deviation 1.
pub fn zscore(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::invalid(format!("zscore needs at least 2 values, got {}", values.len())));
    }
    let m = mean(values);
    let sd = population_std(values);
    if sd < DEGENERATE_STD {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok(values.iter().map(|v| (v - m) / sd).collect())
}

/// Pearson correlation; `None` when either side has (near) zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx / n).sqrt() < DEGENERATE_STD || (syy / n).sqrt() < DEGENERATE_STD {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Solves `A x = B` for symmetric positive definite `A` (n×n, row-major) with
/// `m` right-hand sides stored row-major as n×m. Returns `None` if `A` is not
/// numerically positive definite.
pub fn cholesky_solve(a: &[f64], n: usize, b: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut x = b.to_vec();
    for col in 0..m {
        // forward: L y = b
        for i in 0..n {
            let mut s = x[i * m + col];
            for k in 0..i {
                s -= l[i * n + k] * x[k * m + col];
            }
            x[i * m + col] = s / l[i * n + i];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[i * m + col];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k * m + col];
            }
            x[i * m + col] = s / l[i * n + i];
        }
    }
    Some(x)
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!("row {i} has {} columns, expected {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (a, b) in m.iter_mut().zip(self.row(r)) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.rows as f64);
        m
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul inner dimensions");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · other`.
    pub fn t_matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "t_matmul inner dimensions");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · otherᵀ`.
    pub fn matmul_t(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "matmul_t inner dimensions");
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                out.data[i * other.rows + j] = self.row(i).iter().zip(other.row(j)).map(|(a, b)| a * b).sum();
            }
        }
        out
    }
}
