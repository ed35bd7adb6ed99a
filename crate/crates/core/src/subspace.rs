//! Orthonormal bases, orthogonal projectors and the projector distance
//! `D = sqrt(Tr[(P - P̂)²])` between two subspaces.
//!
//! For two rank-`N` projectors `D² = 2N - 2 Tr(P P̂)`, so `0 <= D <= √(2N)`,
//! with `D = 0` exactly when the subspaces coincide.

use nalgebra::DMatrix;

use crate::error::{EdrError, Result};

/// Orthogonal projector onto a rank-`N` subspace of `ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    p: DMatrix<f64>,
    rank: usize,
}

impl Projector {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }
}

/// Modified Gram-Schmidt on the columns of `vectors`.
///
/// A column whose residual after removing the previous directions is below
/// `1e-10` times its original norm is rejected as linearly dependent.
pub fn orthonormal_basis(vectors: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if vectors.iter().any(|v| !v.is_finite()) {
        return Err(EdrError::Parameter("basis vectors must be finite".into()));
    }
    let mut q = vectors.clone();
    for j in 0..q.ncols() {
        let original = vectors.column(j).norm();
        for i in 0..j {
            let proj = q.column(i).dot(&q.column(j));
            let qi = q.column(i).into_owned();
            q.column_mut(j).axpy(-proj, &qi, 1.0);
        }
        let norm = q.column(j).norm();
        if original == 0.0 || norm <= 1e-10 * original {
            return Err(EdrError::RankDeficient {
                column: j,
                residual: if original == 0.0 { 0.0 } else { norm / original },
            });
        }
        q.column_mut(j).unscale_mut(norm);
    }
    Ok(q)
}

/// `P = B Bᵀ` for a basis with orthonormal columns (checked to 1e-8).
pub fn projector(basis: &DMatrix<f64>) -> Result<Projector> {
    let n = basis.ncols();
    let gram = basis.transpose() * basis;
    let defect = (gram - DMatrix::<f64>::identity(n, n)).amax();
    if defect.is_nan() || defect > 1e-8 {
        return Err(EdrError::Parameter(format!("basis is not orthonormal (defect {defect:e})")));
    }
    Ok(Projector {
        p: basis * basis.transpose(),
        rank: n,
    })
}

/// Projector onto the span of arbitrary independent columns.
pub fn projector_onto_span(vectors: &DMatrix<f64>) -> Result<Projector> {
    projector(&orthonormal_basis(vectors)?)
}

/// `sqrt(Tr[(P - P̂)²])`, computed as the Frobenius norm of `P - P̂`.
pub fn edr_distance(p: &Projector, phat: &Projector) -> Result<f64> {
    if p.dim() != phat.dim() {
        return Err(EdrError::Parameter(format!(
            "projector dimensions differ: {} vs {}",
            p.dim(),
            phat.dim()
        )));
    }
    // Summing squared entries is symmetric in the argument order, so
    // D(P, P̂) == D(P̂, P) bit for bit.
    let sq: f64 = p.p.iter().zip(phat.p.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sq.sqrt())
}
