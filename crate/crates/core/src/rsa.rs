//! Representational dissimilarity matrices compared with Kendall's tau-a.

use crate::attention::{modulate_and_pool, AttentionMap, FeatureMap};
use crate::error::{Error, Result};
use crate::numerics::{pearson, population_std, DEGENERATE_STD};

/// Symmetric n×n correlation-distance matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Rdm {
    n: usize,
    values: Vec<f64>,
}

impl Rdm {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 || values.len() != n * n {
            return Err(Error::Shape(format!("RDM needs n >= 2 and n*n entries, got n={n}, {}", values.len())));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::invalid(format!("RDM diagonal entry {i} is not zero")));
            }
            for j in 0..i {
                if (values[i * n + j] - values[j * n + i]).abs() > 1e-12 {
                    return Err(Error::invalid(format!("RDM is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Strict upper triangle in row-major order.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for i in 0..self.n {
            for j in i + 1..self.n {
                out.push(self.get(i, j));
            }
        }
        out
    }
}

/// Entry (i, j) is 1 − Pearson(v_i, v_j). With `normalize`, every dimension
/// is first z-scored across the conditions (constant dimensions become 0).
pub fn build_rdm(vectors: &[Vec<f64>], normalize: bool) -> Result<Rdm> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::invalid("RDM needs at least two vectors"));
    }
    let d = vectors[0].len();
    if d < 2 || vectors.iter().any(|v| v.len() != d) {
        return Err(Error::Shape("RDM vectors must share a length of at least 2".into()));
    }
    let mut vs: Vec<Vec<f64>> = vectors.to_vec();
    if normalize {
        for k in 0..d {
            let col: Vec<f64> = vs.iter().map(|v| v[k]).collect();
            let m = col.iter().sum::<f64>() / n as f64;
            let sd = population_std(&col);
            for v in vs.iter_mut() {
                v[k] = if sd < DEGENERATE_STD { 0.0 } else { (v[k] - m) / sd };
            }
        }
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let r = pearson(&vs[i], &vs[j])
                .ok_or_else(|| Error::Degenerate(format!("condition {} or {} is constant", i.min(j), j)))?;
            let dist = (1.0 - r).clamp(0.0, 2.0);
            values[i * n + j] = dist;
            values[j * n + i] = dist;
        }
    }
    Rdm::new(n, values)
}

fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

fn tied_pairs<T: PartialEq>(sorted: impl Iterator<Item = T>) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut prev: Option<T> = None;
    for x in sorted {
        if prev.as_ref() == Some(&x) {
            run += 1;
        } else {
            total += run * (run.saturating_sub(1)) / 2;
            run = 1;
        }
        prev = Some(x);
    }
    total + run * run.saturating_sub(1) / 2
}

/// Kendall's tau-a in O(n log n): (concordant − discordant) / (n(n−1)/2),
/// tied pairs in the denominator only.
pub fn kendall_tau_a(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Shape(format!("sequences have lengths {n} and {}", y.len())));
    }
    if n < 2 {
        return Err(Error::invalid("tau needs at least two observations"));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::NonFinite("NaN in tau input".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let n1 = tied_pairs(idx.iter().map(|&i| x[i]));
    let n3 = tied_pairs(idx.iter().map(|&i| (x[i], y[i])));
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = Vec::with_capacity(n);
    let discordant = merge_count(&mut ys, &mut buf);
    let n2 = tied_pairs(ys.iter().copied());
    // concordant − discordant over pairs untied in both coordinates
    let diff = n0 as i128 - n1 as i128 - n2 as i128 + n3 as i128 - 2 * discordant as i128;
    Ok(diff as f64 / n0 as f64)
}

/// Tau-a between the strict upper triangles of two RDMs.
pub fn rsa_compare(model: &Rdm, neural: &Rdm) -> Result<f64> {
    if model.n() != neural.n() {
        return Err(Error::Shape(format!("RDMs cover {} and {} conditions", model.n(), neural.n())));
    }
    kendall_tau_a(&model.upper_triangle(), &neural.upper_triangle())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Vectorization {
    #[default]
    Pooled,
    Flattened,
}

/// Per-frame model representation: attention-modulated pooled features, or
/// the attention-weighted feature map flattened cell-major.
pub fn representation_vector(
    features: &FeatureMap,
    attention: Option<&AttentionMap>,
    how: Vectorization,
) -> Result<Vec<f64>> {
    match how {
        Vectorization::Pooled => Ok(modulate_and_pool(features, attention)?.values),
        Vectorization::Flattened => {
            let c = features.channels();
            let mut out = features.data().to_vec();
            if let Some(a) = attention {
                let w = a.values().values();
                if w.len() != features.cells() {
                    return Err(Error::Shape("attention map does not match the feature grid".into()));
                }
                for (i, &wi) in w.iter().enumerate() {
                    out[i * c..(i + 1) * c].iter_mut().for_each(|v| *v *= wi);
                }
            }
            Ok(out)
        }
    }
}
