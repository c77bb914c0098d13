//! Principal component analysis through a one-sided Jacobi SVD of the
//! centered data matrix.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PcaError {
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("k = {k} must be in 1..={max}")]
    BadK { k: usize, max: usize },
    #[error("all rows are identical; there is no variance to decompose")]
    ZeroVariance,
    #[error("matrix contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Unit-norm, mutually orthogonal directions, by decreasing variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    /// Sum of per-column variances of the training data.
    pub total_variance: f64,
    pub n_samples: usize,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.explained_variance.iter().map(|v| v / self.total_variance).collect()
    }
}

fn dims(matrix: &[Vec<f64>]) -> Result<(usize, usize), PcaError> {
    let n = matrix.len();
    let d = matrix.first().map_or(0, Vec::len);
    for (row, r) in matrix.iter().enumerate() {
        if r.len() != d {
            return Err(PcaError::RaggedRow {
                row,
                expected: d,
                found: r.len(),
            });
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(PcaError::NonFinite);
        }
    }
    Ok((n, d))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthogonalizes the columns of `cols` in place by plane rotations and
/// returns the accumulated rotation (columns of the right factor).
fn one_sided_jacobi(cols: &mut [Vec<f64>]) -> Vec<Vec<f64>> {
    let p = cols.len();
    let mut v: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut e = vec![0.0; p];
            e[i] = 1.0;
            e
        })
        .collect();
    const EPS: f64 = 1e-15;
    for _sweep in 0..100 {
        let mut rotated = false;
        for i in 0..p {
            for j in (i + 1)..p {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if gamma == 0.0 || gamma.abs() <= EPS * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(cols, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    v
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(j);
    let (a, b) = (&mut left[i], &mut right[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// Fills directions whose singular value vanished with an orthonormal
/// completion drawn from the coordinate axes.
fn complete_basis(mut basis: Vec<Vec<f64>>, d: usize, want: usize) -> Vec<Vec<f64>> {
    let mut axis = 0;
    while basis.len() < want && axis < d {
        let mut e = vec![0.0; d];
        e[axis] = 1.0;
        axis += 1;
        for b in &basis {
            let proj = dot(&e, b);
            e.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
        }
        let norm = dot(&e, &e).sqrt();
        if norm > 1e-8 {
            e.iter_mut().for_each(|x| *x /= norm);
            basis.push(e);
        }
    }
    basis
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Fits the top `k` principal components of the rows of `matrix`.
pub fn fit_pca(matrix: &[Vec<f64>], k: usize) -> Result<PcaModel, PcaError> {
    let (n, d) = dims(matrix)?;
    if n < 2 {
        return Err(PcaError::TooFewRows(n));
    }
    let max_k = (n - 1).min(d);
    if k == 0 || k > max_k {
        return Err(PcaError::BadK { k, max: max_k });
    }
    let mut mean = vec![0.0; d];
    for row in matrix {
        mean.iter_mut().zip(row).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = matrix
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let total_ss: f64 = centered.iter().map(|r| dot(r, r)).sum();
    if total_ss == 0.0 {
        return Err(PcaError::ZeroVariance);
    }

    // (singular value, right singular vector) pairs
    let mut pairs: Vec<(f64, Option<Vec<f64>>)> = if n <= d {
        // Columns of X^T are the centered rows; their rotated images are
        // sigma_i * v_i.
        let mut cols = centered;
        one_sided_jacobi(&mut cols);
        cols.into_iter()
            .map(|c| {
                let s = dot(&c, &c).sqrt();
                (s, Some(c))
            })
            .collect()
    } else {
        let mut cols: Vec<Vec<f64>> = (0..d).map(|j| centered.iter().map(|r| r[j]).collect()).collect();
        let v = one_sided_jacobi(&mut cols);
        cols.iter().zip(v).map(|(c, vj)| (dot(c, c).sqrt(), Some(vj))).collect()
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let sigma_max = pairs[0].0;
    let scale_by_sigma = n <= d;

    let mut components: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for (s, vec) in pairs.into_iter().take(k) {
        explained_variance.push(s * s / (n as f64 - 1.0));
        if s <= 1e-12 * sigma_max {
            continue;
        }
        let mut v = vec.expect("vector present");
        if scale_by_sigma {
            v.iter_mut().for_each(|x| *x /= s);
        }
        components.push(v);
    }
    let mut components = complete_basis(components, d, k);
    components.iter_mut().for_each(|c| fix_sign(c));
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        total_variance: total_ss / (n as f64 - 1.0),
        n_samples: n,
    })
}

/// Coordinates of each row on the model's components.
pub fn project(model: &PcaModel, matrix: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, PcaError> {
    let (_, d) = dims(matrix)?;
    if !matrix.is_empty() && d != model.dim() {
        return Err(PcaError::RaggedRow {
            row: 0,
            expected: model.dim(),
            found: d,
        });
    }
    Ok(matrix
        .iter()
        .map(|row| {
            let centered: Vec<f64> = row.iter().zip(&model.mean).map(|(x, m)| x - m).collect();
            model.components.iter().map(|c| dot(&centered, c)).collect()
        })
        .collect())
}

/// Maps coordinates back to the original space.
pub fn reconstruct(model: &PcaModel, coords: &[Vec<f64>]) -> Vec<Vec<f64>> {
    coords
        .iter()
        .map(|z| {
            let mut row = model.mean.clone();
            for (c, w) in model.components.iter().zip(z) {
                row.iter_mut().zip(c).for_each(|(x, ci)| *x += w * ci);
            }
            row
        })
        .collect()
}
