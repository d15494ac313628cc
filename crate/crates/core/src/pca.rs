//! Principal component analysis over angle vectors.
//!
//! The fit forms the `d x d` sample covariance (divisor `n - 1`) and
//! diagonalizes it with the cyclic Jacobi method. Components are sorted by
//! non-increasing eigenvalue (stable, so equal eigenvalues keep solver
//! order) and each is sign-normalized so that its largest-magnitude entry is
//! positive, the first such entry on ties.
//!
//! Within a block of equal eigenvalues the basis is arbitrary; compare
//! subspaces, not vectors, in that case.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::AngleVector;
use crate::landmark::SentenceClass;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PcaError {
    #[error("need at least 2 samples to fit, got {0}")]
    TooFewSamples(usize),
    #[error("k = {k} exceeds min(n - 1, d) = {max}")]
    KTooLarge { k: usize, max: usize },
    #[error("k must be positive")]
    ZeroComponents,
    #[error("expected dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("row {0} contains a non-finite value")]
    NonFinite(usize),
    #[error("model invariant violated: {0}")]
    InvalidModel(String),
}

/// Stacked angle vectors with their (optional) labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    pub rows: Vec<AngleVector>,
    pub labels: Vec<Option<SentenceClass>>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Row `j` is the `j`-th principal axis.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

/// Result of [`symmetric_eigen`]: eigenpairs in solver order.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// `vectors[i]` pairs with `values[i]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Row-major sample covariance of `rows` (divisor `n - 1`) and column means.
pub fn covariance<R: AsRef<[f64]>>(rows: &[R]) -> Result<(Vec<f64>, Vec<f64>), PcaError> {
    let n = rows.len();
    if n < 2 {
        return Err(PcaError::TooFewSamples(n));
    }
    let d = rows[0].as_ref().len();
    let mut mean = vec![0.0; d];
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != d {
            return Err(PcaError::DimensionMismatch {
                expected: d,
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(PcaError::NonFinite(i));
        }
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for row in rows {
        for ((c, v), m) in centered.iter_mut().zip(row.as_ref()).zip(&mean) {
            *c = v - m;
        }
        for i in 0..d {
            let ci = centered[i];
            for j in i..d {
                cov[i * d + j] += ci * centered[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    Ok((mean, cov))
}

/// Eigen-decomposition of a symmetric `d x d` row-major matrix by cyclic
/// Jacobi rotations.
pub fn symmetric_eigen(matrix: &[f64], d: usize) -> Eigen {
    assert_eq!(matrix.len(), d * d, "matrix must be d x d");
    let mut a = matrix.to_vec();
    // v holds eigenvectors as columns
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    const MAX_SWEEPS: usize = 100;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..d)
            .flat_map(|p| ((p + 1)..d).map(move |q| (p, q)))
            .map(|(p, q)| a[p * d + q] * a[p * d + q])
            .sum();
        let diag: f64 = (0..d).map(|i| a[i * d + i] * a[i * d + i]).sum();
        if off == 0.0 || off <= f64::EPSILON * f64::EPSILON * diag * 1e-4 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * d + p] = app - t * apq;
                a[q * d + q] = aqq + t * apq;
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for r in 0..d {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * d + p];
                    let arq = a[r * d + q];
                    let new_rp = arp - s * (arq + tau * arp);
                    let new_rq = arq + s * (arp - tau * arq);
                    a[r * d + p] = new_rp;
                    a[p * d + r] = new_rp;
                    a[r * d + q] = new_rq;
                    a[q * d + r] = new_rq;
                }
                for r in 0..d {
                    let vrp = v[r * d + p];
                    let vrq = v[r * d + q];
                    v[r * d + p] = vrp - s * (vrq + tau * vrp);
                    v[r * d + q] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }
    Eigen {
        values: (0..d).map(|i| a[i * d + i]).collect(),
        vectors: (0..d)
            .map(|j| (0..d).map(|r| v[r * d + j]).collect())
            .collect(),
    }
}

/// Flips `v` so that its largest-magnitude entry is positive.
pub fn normalize_sign(v: &mut [f64]) {
    let mut pivot = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[pivot].abs() {
            pivot = i;
        }
    }
    if v.get(pivot).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Fits a `k`-component model; requires `n >= 2` and `k <= min(n - 1, d)`.
pub fn fit_pca<R: AsRef<[f64]>>(rows: &[R], k: usize) -> Result<PcaModel, PcaError> {
    if k == 0 {
        return Err(PcaError::ZeroComponents);
    }
    let (mean, cov) = covariance(rows)?;
    let d = mean.len();
    let max = (rows.len() - 1).min(d);
    if k > max {
        return Err(PcaError::KTooLarge { k, max });
    }
    let eigen = symmetric_eigen(&cov, d);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eigen.values[j].total_cmp(&eigen.values[i]));
    let (components, explained_variance) = order
        .into_iter()
        .take(k)
        .map(|i| {
            let mut v = eigen.vectors[i].clone();
            normalize_sign(&mut v);
            (v, eigen.values[i].max(0.0))
        })
        .unzip();
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `components . (v - mean)`
    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>, PcaError> {
        self.check_dim(v.len(), self.dim())?;
        let centered: Vec<f64> = v.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        Ok(self.components.iter().map(|c| dot(c, &centered)).collect())
    }

    /// `mean + sum_j z_j components[j]`
    pub fn inverse_transform(&self, z: &[f64]) -> Result<Vec<f64>, PcaError> {
        self.check_dim(z.len(), self.k())?;
        let mut out = self.mean.clone();
        for (zj, c) in z.iter().zip(&self.components) {
            out.iter_mut().zip(c).for_each(|(o, ci)| *o += zj * ci);
        }
        Ok(out)
    }

    fn check_dim(&self, found: usize, expected: usize) -> Result<(), PcaError> {
        if found == expected {
            Ok(())
        } else {
            Err(PcaError::DimensionMismatch { expected, found })
        }
    }

    /// Checks shapes, orthonormality (1e-8) and eigenvalue ordering.
    pub fn check(&self) -> Result<(), PcaError> {
        let invalid = |msg: &str| Err(PcaError::InvalidModel(msg.to_string()));
        let (d, k) = (self.dim(), self.k());
        if k == 0 || k > d {
            return invalid("component count must be in 1..=dim");
        }
        if self.explained_variance.len() != k {
            return invalid("explained_variance length differs from k");
        }
        if self.components.iter().any(|c| c.len() != d) {
            return invalid("component length differs from mean length");
        }
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        if !finite(&self.mean)
            || !finite(&self.explained_variance)
            || !self.components.iter().all(|c| finite(c))
        {
            return invalid("non-finite value");
        }
        if self.explained_variance.iter().any(|v| *v < 0.0)
            || self.explained_variance.windows(2).any(|w| w[1] > w[0])
        {
            return invalid("explained_variance must be non-negative and non-increasing");
        }
        for i in 0..k {
            for j in i..k {
                let expected = if i == j { 1.0 } else { 0.0 };
                if (dot(&self.components[i], &self.components[j]) - expected).abs() > 1e-8 {
                    return invalid("components are not orthonormal");
                }
            }
        }
        Ok(())
    }
}
