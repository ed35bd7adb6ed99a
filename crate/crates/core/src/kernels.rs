//! Smoothing kernels.
//!
//! | Kernel       | K(t)                     | Support  | K(0)   |
//! |--------------|--------------------------|----------|--------|
//! | Gaussian     | `exp(-t²/2) / √(2π)`     | ℝ        | 0.3989 |
//! | Epanechnikov | `(3/4)(1 - t²)`          | [-1, 1]  | 0.75   |
//! | Biweight     | `(15/16)(1 - t²)²`       | [-1, 1]  | 0.9375 |
//! | Triweight    | `(35/32)(1 - t²)³`       | [-1, 1]  | 1.09375|
//! | Triangular   | `1 - |t|`                | [-1, 1]  | 1      |
//!
//! All five are symmetric, integrate to one, and are radially non-increasing
//! (`K(a t) >= K(t)` for `a ∈ [0, 1]`). None of them has a vanishing second
//! moment, so they are all second-order kernels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{EdrError, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Gaussian,
    Epanechnikov,
    Biweight,
    Triweight,
    Triangular,
}

impl KernelKind {
    pub const ALL: [KernelKind; 5] = [
        KernelKind::Gaussian,
        KernelKind::Epanechnikov,
        KernelKind::Biweight,
        KernelKind::Triweight,
        KernelKind::Triangular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Epanechnikov => "epanechnikov",
            KernelKind::Biweight => "biweight",
            KernelKind::Triweight => "triweight",
            KernelKind::Triangular => "triangular",
        }
    }

    /// Position in [`KernelKind::ALL`]; used when deriving replicate seeds.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Evaluates the kernel without checking `t`. NaN propagates.
    #[inline]
    pub fn eval_unchecked(self, t: f64) -> f64 {
        match self {
            KernelKind::Gaussian => FRAC_1_SQRT_2PI * (-0.5 * t * t).exp(),
            KernelKind::Epanechnikov => {
                let u = 1.0 - t * t;
                if u > 0.0 {
                    0.75 * u
                } else {
                    0.0
                }
            }
            KernelKind::Biweight => {
                let u = 1.0 - t * t;
                if u > 0.0 {
                    0.9375 * u * u
                } else {
                    0.0
                }
            }
            KernelKind::Triweight => {
                let u = 1.0 - t * t;
                if u > 0.0 {
                    1.093_75 * u * u * u
                } else {
                    0.0
                }
            }
            KernelKind::Triangular => {
                let u = 1.0 - t.abs();
                if u > 0.0 {
                    u
                } else {
                    0.0
                }
            }
        }
    }

    /// `K(0)`, which is also `sup |K|`.
    pub fn mode_value(self) -> f64 {
        self.eval_unchecked(0.0)
    }

    /// Half-width of the support, `None` for the Gaussian.
    pub fn support_radius(self) -> Option<f64> {
        match self {
            KernelKind::Gaussian => None,
            _ => Some(1.0),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = EdrError;

    fn from_str(s: &str) -> Result<Self> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                EdrError::Parameter(format!(
                    "unknown kernel '{s}' (expected one of: gaussian, epanechnikov, biweight, triweight, triangular)"
                ))
            })
    }
}

/// Evaluates `K(t)`. Non-finite `t` is a domain error.
pub fn kernel_eval(kind: KernelKind, t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(EdrError::Domain(format!("kernel argument must be finite, got {t}")));
    }
    Ok(kind.eval_unchecked(t))
}

/// Trapezoid approximation of `∫ t^order K(t) dt` over `[-halfwidth, halfwidth]`.
///
/// Meant for checking kernel properties, not for hot paths. The grid is
/// symmetric around zero so odd moments cancel up to rounding.
pub fn kernel_moment(kind: KernelKind, order: u32, quad_step: f64, quad_halfwidth: f64) -> Result<f64> {
    if order > 4 {
        return Err(EdrError::Parameter(format!("moment order must be <= 4, got {order}")));
    }
    if !(quad_step.is_finite() && quad_step > 0.0) {
        return Err(EdrError::Parameter(format!("quadrature step must be positive, got {quad_step}")));
    }
    if !(quad_halfwidth.is_finite() && quad_halfwidth > 0.0) {
        return Err(EdrError::Parameter(format!(
            "quadrature half-width must be positive, got {quad_halfwidth}"
        )));
    }
    let half_steps = (quad_halfwidth / quad_step).round().max(1.0) as i64;
    if half_steps > 50_000_000 {
        return Err(EdrError::Parameter("quadrature grid too fine".into()));
    }
    let h = quad_halfwidth / half_steps as f64;
    let f = |i: i64| {
        let t = i as f64 * h;
        t.powi(order as i32) * kind.eval_unchecked(t)
    };
    // Pair +i with -i so that odd integrands cancel term by term.
    let mut acc = f(0);
    for i in 1..half_steps {
        acc += f(i) + f(-i);
    }
    acc += 0.5 * (f(half_steps) + f(-half_steps));
    Ok(acc * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_reference_points() {
        assert!((kernel_eval(KernelKind::Gaussian, 0.0).unwrap() - 0.398_942_3).abs() < 1e-7);
        assert_eq!(kernel_eval(KernelKind::Epanechnikov, 1.5).unwrap(), 0.0);
        assert_eq!(kernel_eval(KernelKind::Biweight, 0.0).unwrap(), 0.9375);
        assert_eq!(kernel_eval(KernelKind::Triangular, 0.25).unwrap(), 0.75);
        assert_eq!(kernel_eval(KernelKind::Triweight, 0.0).unwrap(), 35.0 / 32.0);
    }

    #[test]
    fn rejects_non_finite_arguments() {
        for k in KernelKind::ALL {
            assert!(matches!(kernel_eval(k, f64::NAN), Err(EdrError::Domain(_))));
            assert!(matches!(kernel_eval(k, f64::INFINITY), Err(EdrError::Domain(_))));
        }
    }

    #[test]
    fn compact_kernels_vanish_outside_unit_interval() {
        for k in KernelKind::ALL.into_iter().filter(|k| k.support_radius().is_some()) {
            for t in [1.0, -1.0, 1.000001, 3.0, -7.5] {
                assert_eq!(k.eval_unchecked(t), 0.0, "{k} at {t}");
            }
        }
    }

    #[test]
    fn moment_examples() {
        let m0 = kernel_moment(KernelKind::Gaussian, 0, 1e-4, 10.0).unwrap();
        assert!((m0 - 1.0).abs() < 1e-6, "{m0}");
        let m1 = kernel_moment(KernelKind::Epanechnikov, 1, 1e-5, 1.0).unwrap();
        assert!(m1.abs() < 1e-8, "{m1}");
        let m2 = kernel_moment(KernelKind::Gaussian, 2, 1e-4, 10.0).unwrap();
        assert!((m2 - 1.0).abs() < 1e-4, "{m2}");
    }

    #[test]
    fn second_moments_match_closed_forms() {
        // ∫ t² K: Epanechnikov 1/5, biweight 1/7, triweight 1/9, triangular 1/6.
        let expected = [
            (KernelKind::Epanechnikov, 1.0 / 5.0),
            (KernelKind::Biweight, 1.0 / 7.0),
            (KernelKind::Triweight, 1.0 / 9.0),
            (KernelKind::Triangular, 1.0 / 6.0),
        ];
        for (k, v) in expected {
            let m2 = kernel_moment(k, 2, 1e-5, 1.0).unwrap();
            assert!((m2 - v).abs() < 1e-6, "{k}: {m2} vs {v}");
        }
    }

    #[test]
    fn moment_parameter_validation() {
        assert!(kernel_moment(KernelKind::Gaussian, 5, 1e-3, 1.0).is_err());
        assert!(kernel_moment(KernelKind::Gaussian, 0, 0.0, 1.0).is_err());
        assert!(kernel_moment(KernelKind::Gaussian, 0, 1e-3, -1.0).is_err());
    }

    #[test]
    fn parses_names() {
        for k in KernelKind::ALL {
            assert_eq!(k.name().parse::<KernelKind>().unwrap(), k);
        }
        let err = "box".parse::<KernelKind>().unwrap_err().to_string();
        assert!(err.contains("triangular"));
    }
}
