//! k-NN kernel estimators of the response density `f`, the moments
//! `g_ℓ(y) = E[X_ℓ | Y = y] f(y)`, and the inverse regression curve
//! `R(y) = E[X | Y = y]`, plus the fixed-bandwidth Nadaraya-Watson baseline.
//!
//! With `k_n` neighbors the adaptive bandwidth at `y` is the distance from
//! `y` to its `k_n`-th nearest response:
//!
//! ```text
//! H_n(y)   = k_n-th smallest |Y_i - y|
//! f̂_n(y)   = 1/(n H_n(y)) Σ_i K((Y_i - y) / H_n(y))
//! ĝ_ℓ,n(y) = 1/(n H_n(y)) Σ_i X_iℓ K((Y_i - y) / H_n(y))
//! R̂_ℓ(y)   = ĝ_ℓ,n(y) / max(f̂_n(y), b_n)
//! ```
//!
//! The fixed-bandwidth variants replace `H_n(y)` by a constant `h`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{EdrError, Result};
use crate::kernels::KernelKind;

/// Paired observations: an `n × d` predictor matrix and `n` responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    xs: DMatrix<f64>,
    ys: DVector<f64>,
}

impl Sample {
    pub fn new(xs: DMatrix<f64>, ys: DVector<f64>) -> Result<Self> {
        if xs.nrows() != ys.len() {
            return Err(EdrError::Parameter(format!(
                "predictor rows ({}) and responses ({}) differ",
                xs.nrows(),
                ys.len()
            )));
        }
        if ys.len() < 2 {
            return Err(EdrError::Parameter(format!("need at least 2 observations, got {}", ys.len())));
        }
        if xs.ncols() < 1 {
            return Err(EdrError::Parameter("need at least one predictor column".into()));
        }
        if let Some(i) = xs.iter().position(|v| !v.is_finite()) {
            return Err(EdrError::Domain(format!(
                "non-finite predictor at row {}, column {}",
                i % xs.nrows(),
                i / xs.nrows()
            )));
        }
        if let Some(i) = ys.iter().position(|v| !v.is_finite()) {
            return Err(EdrError::Domain(format!("non-finite response at row {i}")));
        }
        Ok(Sample { xs, ys })
    }

    /// Builds a sample from row-major predictor rows.
    pub fn from_rows(rows: &[Vec<f64>], ys: &[f64]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(EdrError::Parameter(format!("row {bad} has {} columns, expected {d}", rows[bad].len())));
        }
        let xs = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Sample::new(xs, DVector::from_column_slice(ys))
    }

    pub fn xs(&self) -> &DMatrix<f64> {
        &self.xs
    }

    pub fn ys(&self) -> &DVector<f64> {
        &self.ys
    }

    pub fn n(&self) -> usize {
        self.ys.len()
    }

    pub fn dim(&self) -> usize {
        self.xs.ncols()
    }

    /// Predictor matrix with each column shifted to zero sample mean.
    pub fn centered_xs(&self) -> DMatrix<f64> {
        let mut xs = self.xs.clone();
        let n = xs.nrows() as f64;
        for mut col in xs.column_iter_mut() {
            let mean = col.sum() / n;
            col.add_scalar_mut(-mean);
        }
        xs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Adaptive bandwidth `H_n(y)` from the `k_n` nearest responses.
    Knn,
    /// Constant bandwidth (Nadaraya-Watson baseline).
    Fixed,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Knn, Method::Fixed];

    pub fn name(self) -> &'static str {
        match self {
            Method::Knn => "knn",
            Method::Fixed => "fixed",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = EdrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knn" => Ok(Method::Knn),
            "fixed" => Ok(Method::Fixed),
            _ => Err(EdrError::Parameter(format!("unknown method '{s}' (expected knn or fixed)"))),
        }
    }
}

/// Bandwidth used by [`Method::Fixed`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// `h = 1.06 · sd(Y) · n^(-1/5)`, with the `n - 1` standard deviation.
    SilvermanLike,
    Explicit(f64),
}

impl BandwidthRule {
    pub fn describe(&self) -> String {
        match self {
            BandwidthRule::SilvermanLike => "silverman_like: h = 1.06 * sd(y) * n^(-1/5)".to_string(),
            BandwidthRule::Explicit(h) => format!("explicit: h = {h}"),
        }
    }

    pub fn resolve(&self, ys: &DVector<f64>) -> Result<f64> {
        let h = match *self {
            BandwidthRule::Explicit(h) => h,
            BandwidthRule::SilvermanLike => {
                let n = ys.len() as f64;
                let mean = ys.sum() / n;
                let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1.0);
                1.06 * var.sqrt() * n.powf(-0.2)
            }
        };
        if !(h.is_finite() && h > 0.0) {
            return Err(EdrError::Parameter(format!("fixed bandwidth must be positive and finite, got {h}")));
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kernel: KernelKind,
    pub method: Method,
    /// `k_n = max(2, ⌊n^kn_exponent⌋)`; must lie in `(1/2, 9/10]`.
    pub kn_exponent: f64,
    /// `b_n = n^(-bn_exponent)`; must lie in `(0, 1/10]`.
    pub bn_exponent: f64,
    pub fixed_bandwidth_rule: BandwidthRule,
    pub center_predictors: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            kernel: KernelKind::Gaussian,
            method: Method::Knn,
            kn_exponent: 0.85,
            bn_exponent: 0.09,
            fixed_bandwidth_rule: BandwidthRule::SilvermanLike,
            center_predictors: true,
        }
    }
}

impl EstimatorConfig {
    pub fn with_kernel(mut self, kernel: KernelKind) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kn_exponent > 0.5 && self.kn_exponent <= 0.9) {
            return Err(EdrError::Parameter(format!(
                "kn_exponent must lie in (0.5, 0.9], got {}",
                self.kn_exponent
            )));
        }
        if !(self.bn_exponent > 0.0 && self.bn_exponent <= 0.1) {
            return Err(EdrError::Parameter(format!(
                "bn_exponent must lie in (0, 0.1], got {}",
                self.bn_exponent
            )));
        }
        if let BandwidthRule::Explicit(h) = self.fixed_bandwidth_rule {
            if !(h.is_finite() && h > 0.0) {
                return Err(EdrError::Parameter(format!("explicit bandwidth must be positive, got {h}")));
            }
        }
        Ok(())
    }

    /// Number of neighbors for a sample of size `n`.
    pub fn k_n(&self, n: usize) -> usize {
        let k = (n as f64).powf(self.kn_exponent).floor() as usize;
        k.max(2).min(n)
    }

    /// Density floor for a sample of size `n`.
    pub fn b_n(&self, n: usize) -> f64 {
        (n as f64).powf(-self.bn_exponent)
    }
}

/// `k`-th smallest distance `|Y_i - y|` (1-based `k`).
pub fn knn_radius(ys: &[f64], y: f64, k: usize) -> Result<f64> {
    if k < 1 || k > ys.len() {
        return Err(EdrError::Parameter(format!("k = {k} out of range 1..={}", ys.len())));
    }
    let mut dist: Vec<f64> = ys.iter().map(|&yi| (yi - y).abs()).collect();
    let (_, kth, _) = dist.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// `max(f̂, b_n)`.
pub fn clamp_density(fhat: f64, b_n: f64) -> f64 {
    fhat.max(b_n)
}

/// Kernel sums at one evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimate {
    pub bandwidth: f64,
    pub density: f64,
    /// `ĝ_ℓ(y)` for every column `ℓ`.
    pub numerators: DVector<f64>,
}

impl PointEstimate {
    /// `R̂(y) = ĝ(y) / max(f̂(y), b_n)`.
    pub fn inverse_regression(&self, b_n: f64) -> DVector<f64> {
        let denom = clamp_density(self.density, b_n);
        self.numerators.map(|g| g / denom)
    }
}

/// A sample prepared for repeated evaluation: predictors centered (if
/// configured), responses sorted for neighbor search, `k_n`, `b_n` and the
/// fixed bandwidth resolved.
#[derive(Debug, Clone)]
pub struct KernelEstimator<'a> {
    sample: &'a Sample,
    xs: DMatrix<f64>,
    sorted_ys: Vec<f64>,
    cfg: EstimatorConfig,
    k: usize,
    b_n: f64,
    fixed_h: Option<f64>,
}

impl<'a> KernelEstimator<'a> {
    pub fn new(sample: &'a Sample, cfg: &EstimatorConfig) -> Result<Self> {
        cfg.validate()?;
        let xs = if cfg.center_predictors {
            sample.centered_xs()
        } else {
            sample.xs().clone()
        };
        let mut sorted_ys: Vec<f64> = sample.ys().iter().copied().collect();
        sorted_ys.sort_by(f64::total_cmp);
        let fixed_h = match cfg.method {
            Method::Fixed => Some(cfg.fixed_bandwidth_rule.resolve(sample.ys())?),
            Method::Knn => None,
        };
        Ok(KernelEstimator {
            sample,
            xs,
            sorted_ys,
            cfg: *cfg,
            k: cfg.k_n(sample.n()),
            b_n: cfg.b_n(sample.n()),
            fixed_h,
        })
    }

    pub fn sample(&self) -> &Sample {
        self.sample
    }

    /// Predictors as used in the sums (centered when configured).
    pub fn predictors(&self) -> &DMatrix<f64> {
        &self.xs
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn b_n(&self) -> f64 {
        self.b_n
    }

    /// `H_n(y)` via a two-pointer walk outward from `y` in the sorted
    /// responses. Returns the same value as [`knn_radius`].
    pub fn knn_radius(&self, y: f64) -> f64 {
        let ys = &self.sorted_ys;
        let mut hi = ys.partition_point(|&v| v < y);
        let mut lo = hi;
        let mut last = 0.0;
        for _ in 0..self.k {
            let left = if lo > 0 { Some((ys[lo - 1] - y).abs()) } else { None };
            let right = if hi < ys.len() { Some((ys[hi] - y).abs()) } else { None };
            last = match (left, right) {
                (Some(l), Some(r)) if l <= r => {
                    lo -= 1;
                    l
                }
                (Some(l), None) => {
                    lo -= 1;
                    l
                }
                (_, Some(r)) => {
                    hi += 1;
                    r
                }
                (None, None) => unreachable!("k <= n"),
            };
        }
        last
    }

    /// Bandwidth at `y` for the configured method.
    pub fn bandwidth(&self, y: f64) -> f64 {
        match self.fixed_h {
            Some(h) => h,
            None => self.knn_radius(y),
        }
    }

    /// Kernel sums at `y` with an explicit bandwidth `h > 0`.
    pub fn estimate_with_bandwidth(&self, y: f64, h: f64) -> Result<PointEstimate> {
        let mut weights = Vec::with_capacity(self.sample.n());
        self.estimate_into(y, h, &mut weights)
    }

    fn estimate_into(&self, y: f64, h: f64, weights: &mut Vec<f64>) -> Result<PointEstimate> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(EdrError::Parameter(format!("bandwidth must be positive and finite, got {h}")));
        }
        let kernel = self.cfg.kernel;
        weights.clear();
        weights.extend(self.sample.ys().iter().map(|&yi| kernel.eval_unchecked((yi - y) / h)));
        let scale = self.sample.n() as f64 * h;
        let density = weights.iter().sum::<f64>() / scale;
        let numerators = DVector::from_iterator(
            self.xs.ncols(),
            self.xs
                .column_iter()
                .map(|col| col.iter().zip(weights.iter()).map(|(x, w)| x * w).sum::<f64>() / scale),
        );
        Ok(PointEstimate {
            bandwidth: h,
            density,
            numerators,
        })
    }

    /// Kernel sums at `y` using the configured bandwidth.
    pub fn estimate_at(&self, y: f64) -> Result<PointEstimate> {
        let mut weights = Vec::with_capacity(self.sample.n());
        self.estimate_at_into(y, &mut weights)
    }

    fn estimate_at_into(&self, y: f64, weights: &mut Vec<f64>) -> Result<PointEstimate> {
        if !y.is_finite() {
            return Err(EdrError::Domain(format!("evaluation point must be finite, got {y}")));
        }
        let h = self.bandwidth(y);
        if h == 0.0 && self.fixed_h.is_none() {
            return Err(EdrError::DegenerateBandwidth { y, index: None });
        }
        self.estimate_into(y, h, weights)
    }

    /// `R̂(y)` with the `b_n` clamp.
    pub fn inverse_regression(&self, y: f64) -> Result<DVector<f64>> {
        Ok(self.estimate_at(y)?.inverse_regression(self.b_n))
    }

    /// `R̂(Y_i)` for every observation, as the rows of an `n × d` matrix.
    /// A degenerate bandwidth reports the offending observation index.
    pub fn inverse_regression_at_samples(&self) -> Result<DMatrix<f64>> {
        let n = self.sample.n();
        let d = self.xs.ncols();
        let mut out = DMatrix::zeros(n, d);
        let mut weights = Vec::with_capacity(n);
        for (i, &y) in self.sample.ys().iter().enumerate() {
            let est = self.estimate_at_into(y, &mut weights).map_err(|e| match e {
                EdrError::DegenerateBandwidth { y, .. } => EdrError::DegenerateBandwidth { y, index: Some(i) },
                other => other,
            })?;
            let denom = clamp_density(est.density, self.b_n);
            for l in 0..d {
                out[(i, l)] = est.numerators[l] / denom;
            }
        }
        Ok(out)
    }
}

fn knn_cfg(cfg: &EstimatorConfig) -> EstimatorConfig {
    EstimatorConfig {
        method: Method::Knn,
        ..*cfg
    }
}

fn check_column(sample: &Sample, ell: usize) -> Result<()> {
    if ell >= sample.dim() {
        return Err(EdrError::Parameter(format!(
            "column index {ell} out of range (d = {})",
            sample.dim()
        )));
    }
    Ok(())
}

/// `f̂_n(y)` with the k-NN bandwidth. `cfg.method` is ignored.
pub fn density_knn(sample: &Sample, y: f64, cfg: &EstimatorConfig) -> Result<f64> {
    Ok(KernelEstimator::new(sample, &knn_cfg(cfg))?.estimate_at(y)?.density)
}

/// `ĝ_ℓ,n(y)` with the k-NN bandwidth; `ell` is a 0-based column index.
pub fn numerator_knn(sample: &Sample, y: f64, ell: usize, cfg: &EstimatorConfig) -> Result<f64> {
    check_column(sample, ell)?;
    Ok(KernelEstimator::new(sample, &knn_cfg(cfg))?.estimate_at(y)?.numerators[ell])
}

/// `R̂(y)` with the k-NN bandwidth and the `b_n` clamp.
pub fn inverse_regression_knn(sample: &Sample, y: f64, cfg: &EstimatorConfig) -> Result<DVector<f64>> {
    KernelEstimator::new(sample, &knn_cfg(cfg))?.inverse_regression(y)
}

fn fixed_cfg(cfg: &EstimatorConfig) -> EstimatorConfig {
    EstimatorConfig {
        method: Method::Fixed,
        ..*cfg
    }
}

/// Fixed-bandwidth density estimate; `h` comes from `cfg.fixed_bandwidth_rule`.
pub fn density_fixed(sample: &Sample, y: f64, cfg: &EstimatorConfig) -> Result<f64> {
    Ok(KernelEstimator::new(sample, &fixed_cfg(cfg))?.estimate_at(y)?.density)
}

pub fn numerator_fixed(sample: &Sample, y: f64, ell: usize, cfg: &EstimatorConfig) -> Result<f64> {
    check_column(sample, ell)?;
    Ok(KernelEstimator::new(sample, &fixed_cfg(cfg))?.estimate_at(y)?.numerators[ell])
}

pub fn inverse_regression_fixed(sample: &Sample, y: f64, cfg: &EstimatorConfig) -> Result<DVector<f64>> {
    KernelEstimator::new(sample, &fixed_cfg(cfg))?.inverse_regression(y)
}
