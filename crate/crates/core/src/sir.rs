//! Estimation of `Λ = E[R(Y) R(Y)ᵀ]` and extraction of the EDR directions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{EdrError, Result};
use crate::estimators::{EstimatorConfig, KernelEstimator, Sample};

/// `Λ̂_n`, its spectrum and the leading eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdrEstimate {
    pub lambda_hat: DMatrix<f64>,
    /// Descending.
    pub eigenvalues: DVector<f64>,
    /// Orthonormal columns; column `j` belongs to `eigenvalues[j]`.
    pub eigenvectors: DMatrix<f64>,
    /// The first `N` eigenvector columns.
    pub directions: DMatrix<f64>,
    pub n_used: usize,
    pub config: EstimatorConfig,
}

impl EdrEstimate {
    pub fn n_directions(&self) -> usize {
        self.directions.ncols()
    }

    /// `λ_N - λ_{N+1}`. Small values mean the direction estimate is unstable.
    pub fn spectral_gap(&self) -> f64 {
        let n = self.n_directions();
        self.eigenvalues[n - 1] - self.eigenvalues[n]
    }
}

/// `Λ̂_n = (1/n) Σ_i R̂(Y_i) R̂(Y_i)ᵀ` using the configured method.
pub fn estimate_lambda(sample: &Sample, cfg: &EstimatorConfig) -> Result<DMatrix<f64>> {
    let est = KernelEstimator::new(sample, cfg)?;
    let r = est.inverse_regression_at_samples()?;
    Ok(lambda_from_inverse_regressions(&r))
}

/// Average outer product of the rows of `r` (an `n × d` matrix of `R̂(Y_i)`).
pub fn lambda_from_inverse_regressions(r: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d) = r.shape();
    let mut out = DMatrix::zeros(d, d);
    for i in 0..n {
        for a in 0..d {
            let ra = r[(i, a)];
            for b in a..d {
                out[(a, b)] += ra * r[(i, b)];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = out[(a, b)] / n as f64;
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    out
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// The input is symmetrized as `(M + Mᵀ)/2` first. Eigenvalues come back in
/// descending order; each eigenvector is flipped so that its largest-magnitude
/// entry is positive (the lowest index wins ties).
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if !m.is_square() {
        return Err(EdrError::Parameter(format!("matrix must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(EdrError::Parameter("matrix has non-finite entries".into()));
    }
    let d = m.nrows();
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(d, d);
    let scale = a.norm();

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off == 0.0 || off.sqrt() <= f64::EPSILON * scale {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..d {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values = DVector::from_iterator(d, order.iter().map(|&i| a[(i, i)]));
    let mut vectors = DMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).into_owned();
        // Magnitudes equal up to rounding count as a tie.
        let max = col.amax();
        let lead = (0..d).find(|&k| col[k].abs() >= max * (1.0 - 1e-12)).unwrap_or(0);
        if col[lead] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    Ok((values, vectors))
}

/// The first `n_dirs` eigenvector columns; requires `1 <= n_dirs < d`.
pub fn edr_directions(eigenvectors: &DMatrix<f64>, n_dirs: usize) -> Result<DMatrix<f64>> {
    let d = eigenvectors.ncols();
    if n_dirs < 1 || n_dirs >= d {
        return Err(EdrError::Parameter(format!("number of directions must be in 1..{d}, got {n_dirs}")));
    }
    Ok(eigenvectors.columns(0, n_dirs).into_owned())
}

/// Runs the whole pipeline: `Λ̂_n`, its eigendecomposition and the top
/// `n_dirs` directions.
pub fn estimate_edr(sample: &Sample, cfg: &EstimatorConfig, n_dirs: usize) -> Result<EdrEstimate> {
    if n_dirs < 1 || n_dirs >= sample.dim() {
        return Err(EdrError::Parameter(format!(
            "number of directions must be in 1..{}, got {n_dirs}",
            sample.dim()
        )));
    }
    let lambda_hat = estimate_lambda(sample, cfg)?;
    let (eigenvalues, eigenvectors) = symmetric_eigen(&lambda_hat)?;
    let directions = edr_directions(&eigenvectors, n_dirs)?;
    Ok(EdrEstimate {
        lambda_hat,
        eigenvalues,
        eigenvectors,
        directions,
        n_used: sample.n(),
        config: *cfg,
    })
}
