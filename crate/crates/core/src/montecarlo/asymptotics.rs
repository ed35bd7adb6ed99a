//! Plug-in estimates of the limiting variances of `Λ̂_n` and of its
//! eigenvectors, and a Monte Carlo check of the central limit behaviour.
//!
//! For a nonzero `d × d` matrix `A`, `Tr(Aᵀ √n (Λ̂_n - Λ))` is asymptotically
//! normal with variance
//!
//! ```text
//! σ_A² = Var( Σ_ℓ Σ_j (a_ℓj / 2) (X_ℓ R_j(Y) + X_j R_ℓ(Y)) )
//! ```
//!
//! and `√n (β̂_ℓ - β_ℓ)` is asymptotically `N(0, Σ_ℓ)` with `Σ_ℓ` the
//! covariance of `W_ℓ`,
//!
//! ```text
//! W_ℓj = ( Σ_{r≠ℓ} β_rj / (ν_ℓ - ν_r) ) · Σ_p Σ_q (β_ℓp β_ℓq / 2) (X_q R_p(Y) + X_p R_q(Y))
//! ```
//!
//! The plug-ins replace `R` by the clamped kernel estimate and the population
//! eigenpairs by those of `Λ̂_n`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{mean_sd, parallel_map};
use crate::error::{EdrError, Result};
use crate::estimators::{EstimatorConfig, KernelEstimator, Sample};
use crate::simulation::{generate, Model, RngSeed};
use crate::sir::{estimate_edr, estimate_lambda, EdrEstimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticDiagnostics {
    pub n: usize,
    pub replicates: usize,
    pub calibration_n: usize,
    /// `σ_A²` plug-in on the calibration sample.
    pub sigma_a_sq_plugin: f64,
    /// Sample variance of the draws `T_r = √n Tr(Aᵀ(Λ̂_r - Λ))`.
    pub sigma_a_sq_empirical: f64,
    pub t_mean: f64,
    /// `Σ_1` plug-in on the calibration sample, or `None` when its
    /// spectrum is too degenerate for the formula.
    pub sigma_ell_plugin: Option<DMatrix<f64>>,
    /// Jarque-Bera statistic of the standardized draws.
    pub normality_stat: f64,
    /// Asymptotic χ²(2) p-value of `normality_stat`.
    pub normality_p_value: f64,
    pub draws: Vec<f64>,
}

fn check_weight_matrix(a: &DMatrix<f64>, d: usize) -> Result<()> {
    if a.shape() != (d, d) {
        return Err(EdrError::Parameter(format!(
            "weight matrix must be {d}x{d}, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(EdrError::Parameter("weight matrix has non-finite entries".into()));
    }
    if a.iter().all(|&v| v == 0.0) {
        return Err(EdrError::Parameter("weight matrix must be nonzero".into()));
    }
    Ok(())
}

/// Sample variance of `U_i = Σ_ℓj (a_ℓj/2)(X_iℓ R̂_j(Y_i) + X_ij R̂_ℓ(Y_i))`.
///
/// The weights are symmetrized before summing, so `A` and `Aᵀ` give
/// bit-identical results.
pub fn sigma_a_plugin(sample: &Sample, cfg: &EstimatorConfig, a: &DMatrix<f64>) -> Result<f64> {
    let d = sample.dim();
    check_weight_matrix(a, d)?;
    let est = KernelEstimator::new(sample, cfg)?;
    let r = est.inverse_regression_at_samples()?;
    let x = est.predictors();
    let sym = DMatrix::from_fn(d, d, |l, j| (a[(l, j)] + a[(j, l)]) * 0.5);
    let u: Vec<f64> = (0..sample.n())
        .map(|i| {
            let mut acc = 0.0;
            for l in 0..d {
                for j in 0..d {
                    acc += sym[(l, j)] * x[(i, l)] * r[(i, j)];
                }
            }
            acc
        })
        .collect();
    Ok(mean_sd(&u).1.powi(2))
}

/// Sample covariance of the per-observation vectors `Ŵ_ℓ` (`ell` 0-based),
/// built from the eigenpairs in `est` and `R̂` recomputed on `sample` with
/// `est.config`.
pub fn sigma_ell_plugin(sample: &Sample, est: &EdrEstimate, ell: usize) -> Result<DMatrix<f64>> {
    let d = sample.dim();
    if est.eigenvectors.shape() != (d, d) || est.eigenvalues.len() != d {
        return Err(EdrError::Parameter("estimate dimension does not match the sample".into()));
    }
    if ell >= d {
        return Err(EdrError::Parameter(format!("eigenvector index {ell} out of range (d = {d})")));
    }
    let nu = &est.eigenvalues;
    let mut coef = DVector::<f64>::zeros(d);
    for r in (0..d).filter(|&r| r != ell) {
        let gap = nu[ell] - nu[r];
        if gap.is_nan() || gap.abs() <= 1e-8 {
            return Err(EdrError::NearDegenerateSpectrum { ell, other: r, gap });
        }
        for j in 0..d {
            coef[j] += est.eigenvectors[(j, r)] / gap;
        }
    }
    let kern = KernelEstimator::new(sample, &est.config)?;
    let rhat = kern.inverse_regression_at_samples()?;
    let x = kern.predictors();
    let beta = est.eigenvectors.column(ell);

    let n = sample.n();
    // Σ_p Σ_q (β_p β_q / 2)(X_q R_p + X_p R_q) = (βᵀX)(βᵀR).
    let s: Vec<f64> = (0..n)
        .map(|i| {
            let bx: f64 = (0..d).map(|p| beta[p] * x[(i, p)]).sum();
            let br: f64 = (0..d).map(|p| beta[p] * rhat[(i, p)]).sum();
            bx * br
        })
        .collect();
    let w = DMatrix::from_fn(n, d, |i, j| coef[j] * s[i]);
    Ok(sample_covariance(&w))
}

/// Covariance of the rows of `w` with divisor `n - 1`, symmetric by construction.
fn sample_covariance(w: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d) = w.shape();
    let means: Vec<f64> = w.column_iter().map(|c| c.sum() / n as f64).collect();
    let mut cov = DMatrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let v = (0..n).map(|i| (w[(i, a)] - means[a]) * (w[(i, b)] - means[b])).sum::<f64>() / (n - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    cov
}

/// `Λ = ββᵀ/5` for Model 1: jointly normal `(X, Y)` gives `E(X|Y) = (Y/5) β`
/// with `Var(Y) = 5`.
pub fn model_one_lambda() -> DMatrix<f64> {
    let beta = Model::One.true_basis();
    &beta * beta.transpose() / 5.0
}

/// Jarque-Bera statistic and its χ²(2) p-value `exp(-JB/2)`.
pub fn jarque_bera(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    let jb = n / 6.0 * (skew * skew + (kurt - 3.0).powi(2) / 4.0);
    (jb, (-jb / 2.0).exp())
}

/// Draws `replicates` Model 1 samples of size `n`, forms
/// `T_r = √n Tr(Aᵀ(Λ̂_r - Λ))`, and compares the spread of the draws with the
/// `σ_A²` plug-in on an independent calibration sample of size
/// `calibration_n`.
#[allow(clippy::too_many_arguments)]
pub fn clt_diagnostic(
    model: Model,
    a: &DMatrix<f64>,
    n: usize,
    replicates: usize,
    seed: RngSeed,
    calibration_n: usize,
    cfg: &EstimatorConfig,
    threads: usize,
) -> Result<AsymptoticDiagnostics> {
    if model != Model::One {
        return Err(EdrError::Unsupported(format!(
            "CLT diagnostic needs an analytic Λ, available only for model 1 (got model {model})"
        )));
    }
    check_weight_matrix(a, model.dim())?;
    if replicates < 3 {
        return Err(EdrError::Parameter("need at least 3 replicates".into()));
    }
    cfg.validate()?;
    let lambda = model_one_lambda();
    let root_n = (n as f64).sqrt();
    let draws: Vec<Result<f64>> = parallel_map(replicates, threads, |r| {
        let data = generate(model, n, seed.derive(model, n, cfg.kernel.index(), cfg.method.index(), r))?;
        let diff = estimate_lambda(&data.sample, cfg)? - &lambda;
        Ok(root_n * a.dot(&diff))
    });
    let draws = draws.into_iter().collect::<Result<Vec<f64>>>()?;
    let (t_mean, t_sd) = mean_sd(&draws);

    let calib = generate(model, calibration_n, seed.child(0xCA11_B8A7E))?;
    let sigma_a_sq_plugin = sigma_a_plugin(&calib.sample, cfg, a)?;
    let est = estimate_edr(&calib.sample, cfg, model.n_directions())?;
    let sigma_ell = match sigma_ell_plugin(&calib.sample, &est, 0) {
        Ok(m) => Some(m),
        Err(EdrError::NearDegenerateSpectrum { .. }) => None,
        Err(e) => return Err(e),
    };

    let standardized: Vec<f64> = draws.iter().map(|t| (t - t_mean) / t_sd).collect();
    let (normality_stat, normality_p_value) = jarque_bera(&standardized);
    Ok(AsymptoticDiagnostics {
        n,
        replicates,
        calibration_n,
        sigma_a_sq_plugin,
        sigma_a_sq_empirical: t_sd * t_sd,
        t_mean,
        sigma_ell_plugin: sigma_ell,
        normality_stat,
        normality_p_value,
        draws,
    })
}
