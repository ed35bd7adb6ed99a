//! Sliced inverse regression with k-nearest-neighbor kernel estimators.
//!
//! The effective dimension reduction (EDR) space of a regression
//! `Y = F(β₁ᵀX, …, β_NᵀX, ε)` is estimated from the top eigenvectors of
//! `Λ = E[E(X|Y) E(X|Y)ᵀ]`. This crate estimates the inverse regression
//! curve `E(X | Y = y)` with kernel smoothers whose bandwidth is the distance
//! to the `k_n`-th nearest response, and also provides the fixed-bandwidth
//! Nadaraya-Watson baseline, the simulation models used to benchmark both,
//! and plug-in estimates of the asymptotic variances.
//!
//! ```
//! use edrknn_core::{estimate_edr, generate, true_projector, edr_distance, projector, EstimatorConfig, Model, RngSeed};
//!
//! let data = generate(Model::One, 200, RngSeed(7)).unwrap();
//! let est = estimate_edr(&data.sample, &EstimatorConfig::default(), 1).unwrap();
//! let d = edr_distance(&true_projector(Model::One), &projector(&est.directions).unwrap()).unwrap();
//! assert!(d < 0.6);
//! ```

pub mod error;
pub mod estimators;
pub mod kernels;
pub mod montecarlo;
pub mod simulation;
pub mod sir;
pub mod subspace;

pub use error::{EdrError, Result};
pub use estimators::{
    clamp_density, density_fixed, density_knn, inverse_regression_fixed, inverse_regression_knn, knn_radius,
    numerator_fixed, numerator_knn, BandwidthRule, EstimatorConfig, KernelEstimator, Method, PointEstimate, Sample,
};
pub use kernels::{kernel_eval, kernel_moment, KernelKind};
pub use montecarlo::{
    clt_diagnostic, run_cell, run_experiment, sigma_a_plugin, sigma_ell_plugin, AsymptoticDiagnostics, CellSummary,
    ExperimentConfig, ExperimentReport, ReportMetadata, ReportRow,
};
pub use simulation::{generate, true_projector, Model, RngSeed, SimulatedSample};
pub use sir::{edr_directions, estimate_edr, estimate_lambda, symmetric_eigen, EdrEstimate};
pub use subspace::{edr_distance, orthonormal_basis, projector, projector_onto_span, Projector};

pub use nalgebra::{DMatrix, DVector};
