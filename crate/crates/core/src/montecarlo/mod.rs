//! Monte Carlo benchmark of the EDR estimators and asymptotic diagnostics.
//!
//! A cell is one `(model, n, kernel, method)` combination. Every replicate
//! draws its own sample from a seed derived from the master seed and the cell
//! coordinates, so any replicate can be re-run in isolation and the report
//! does not depend on how replicates are scheduled across threads.

mod asymptotics;
mod report;

pub use asymptotics::{clt_diagnostic, jarque_bera, model_one_lambda, sigma_a_plugin, sigma_ell_plugin, AsymptoticDiagnostics};
pub use report::{ExperimentReport, ReportMetadata, ReportRow, REPORT_COLUMNS};

use serde::{Deserialize, Serialize};

use crate::error::{EdrError, Result};
use crate::estimators::{EstimatorConfig, Method};
use crate::kernels::KernelKind;
use crate::simulation::{generate, true_projector, Model, RngSeed};
use crate::sir::estimate_edr;
use crate::subspace::{edr_distance, projector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub models: Vec<Model>,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    pub kernels: Vec<KernelKind>,
    pub methods: Vec<Method>,
    /// Template; `kernel` and `method` are overridden per cell.
    pub estimator: EstimatorConfig,
    pub master_seed: RngSeed,
    /// Worker threads for replicates. Not part of the report: results are
    /// identical for any value.
    #[serde(skip, default = "one")]
    pub threads: usize,
}

fn one() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            models: Model::ALL.to_vec(),
            sample_sizes: vec![50, 100, 200, 400],
            replicates: 500,
            kernels: KernelKind::ALL.to_vec(),
            methods: Method::ALL.to_vec(),
            estimator: EstimatorConfig::default(),
            master_seed: RngSeed(42),
            threads: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(EdrError::Parameter("model list is empty".into()));
        }
        if self.sample_sizes.is_empty() {
            return Err(EdrError::Parameter("sample size list is empty".into()));
        }
        if let Some(n) = self.sample_sizes.iter().find(|&&n| n < 10) {
            return Err(EdrError::Parameter(format!("sample sizes must be at least 10, got {n}")));
        }
        if self.kernels.is_empty() {
            return Err(EdrError::Parameter("kernel list is empty".into()));
        }
        if self.methods.is_empty() {
            return Err(EdrError::Parameter("method list is empty".into()));
        }
        if self.replicates < 1 {
            return Err(EdrError::Parameter("replicates must be at least 1".into()));
        }
        self.estimator.validate()
    }

    pub fn n_cells(&self) -> usize {
        self.models.len() * self.sample_sizes.len() * self.kernels.len() * self.methods.len()
    }
}

/// Aggregate over the successful replicates of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub mean_d: f64,
    /// Sample standard deviation (divisor `replicates - 1`); 0 for a single replicate.
    pub sd_d: f64,
    pub spectral_gap_mean: f64,
    pub replicates_used: usize,
    pub failed: usize,
}

/// Outcome of a single replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateOutcome {
    pub distance: f64,
    pub spectral_gap: f64,
}

/// Generates one sample, estimates the EDR space and measures `D` against
/// the true projector.
pub fn run_replicate(model: Model, n: usize, cfg: &EstimatorConfig, seed: RngSeed) -> Result<ReplicateOutcome> {
    let data = generate(model, n, seed)?;
    let est = estimate_edr(&data.sample, cfg, model.n_directions())?;
    let phat = projector(&est.directions)?;
    Ok(ReplicateOutcome {
        distance: edr_distance(&true_projector(model), &phat)?,
        spectral_gap: est.spectral_gap(),
    })
}

/// Runs `f(0..count)` on up to `threads` scoped workers and returns the
/// results in index order.
pub(crate) fn parallel_map<T, F>(count: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.clamp(1, count.max(1));
    if threads == 1 {
        return (0..count).map(f).collect();
    }
    let chunk = count.div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let f = &f;
                scope.spawn(move || (t * chunk..((t + 1) * chunk).min(count)).map(f).collect::<Vec<T>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("replicate worker panicked"))
            .collect()
    })
}

/// Mean and standard deviation of `D` over `replicates` draws.
///
/// Replicates failing with a degenerate bandwidth are skipped; more than 1%
/// of them failing aborts the cell.
pub fn run_cell(
    model: Model,
    n: usize,
    cfg: &EstimatorConfig,
    replicates: usize,
    master_seed: RngSeed,
    threads: usize,
) -> Result<CellSummary> {
    if replicates < 1 {
        return Err(EdrError::Parameter("replicates must be at least 1".into()));
    }
    cfg.validate()?;
    let outcomes = parallel_map(replicates, threads, |r| {
        let seed = master_seed.derive(model, n, cfg.kernel.index(), cfg.method.index(), r);
        run_replicate(model, n, cfg, seed)
    });
    summarize(model, n, cfg, outcomes)
}

fn summarize(
    model: Model,
    n: usize,
    cfg: &EstimatorConfig,
    outcomes: Vec<Result<ReplicateOutcome>>,
) -> Result<CellSummary> {
    let replicates = outcomes.len();
    let mut distances = Vec::with_capacity(replicates);
    let mut gaps = Vec::with_capacity(replicates);
    let mut failed = 0;
    let mut first_failure = None;
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                distances.push(o.distance);
                gaps.push(o.spectral_gap);
            }
            Err(e @ EdrError::DegenerateBandwidth { .. }) => {
                failed += 1;
                first_failure.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    if failed * 100 > replicates {
        return Err(EdrError::CellFailed {
            model: model.id(),
            n,
            kernel: cfg.kernel.to_string(),
            method: cfg.method.to_string(),
            failed,
            replicates,
            first: Box::new(first_failure.expect("failures recorded")),
        });
    }
    let (mean_d, sd_d) = mean_sd(&distances);
    let (spectral_gap_mean, _) = mean_sd(&gaps);
    Ok(CellSummary {
        mean_d,
        sd_d,
        spectral_gap_mean,
        replicates_used: distances.len(),
        failed,
    })
}

/// Sample mean and standard deviation (divisor `len - 1`, 0 for one value).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Runs every cell of the grid in the order models × sizes × kernels × methods.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.n_cells());
    for &model in &cfg.models {
        for &n in &cfg.sample_sizes {
            for &kernel in &cfg.kernels {
                for &method in &cfg.methods {
                    let est = cfg.estimator.with_kernel(kernel).with_method(method);
                    let cell = run_cell(model, n, &est, cfg.replicates, cfg.master_seed, cfg.threads)?;
                    rows.push(ReportRow {
                        model,
                        n,
                        kernel,
                        method,
                        replicates: cell.replicates_used,
                        mean_d: cell.mean_d,
                        sd_d: cell.sd_d,
                        spectral_gap_mean: cell.spectral_gap_mean,
                        seed: cfg.master_seed.0,
                    });
                }
            }
        }
    }
    Ok(ExperimentReport {
        metadata: ReportMetadata::for_config(cfg),
        rows,
    })
}
