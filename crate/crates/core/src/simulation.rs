//! The three benchmark models with `X ~ N(0, I_5)` and `ε ~ N(0, 1)`:
//!
//! ```text
//! Model 1: Y = X1 + X2 + X3 + X4 + ε                  EDR basis (1,1,1,1,0)
//! Model 2: Y = X1 (X1 + X2 + 1) + ε                   EDR basis (1,0,0,0,0), (1,1,0,0,0)
//! Model 3: Y = X1 / (0.5 + (X2 + 1.5)²) + ε           EDR basis (1,0,0,0,0), (0,1,0,0,0)
//! ```

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{EdrError, Result};
use crate::estimators::Sample;
use crate::subspace::{projector_onto_span, Projector};

/// Name of the generator recorded in report metadata. Each row draws
/// `X1..X5` then `ε`, in that order.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9) + StandardNormal ziggurat (rand_distr 0.5)";

pub const MODEL_DIM: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Model {
    One,
    Two,
    Three,
}

impl From<Model> for u8 {
    fn from(m: Model) -> u8 {
        m.id()
    }
}

impl TryFrom<u8> for Model {
    type Error = EdrError;

    fn try_from(id: u8) -> Result<Self> {
        Model::from_id(id)
    }
}

impl Model {
    pub const ALL: [Model; 3] = [Model::One, Model::Two, Model::Three];

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Model::One),
            2 => Ok(Model::Two),
            3 => Ok(Model::Three),
            _ => Err(EdrError::Parameter(format!("unknown model {id} (expected 1, 2 or 3)"))),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Model::One => 1,
            Model::Two => 2,
            Model::Three => 3,
        }
    }

    pub fn dim(self) -> usize {
        MODEL_DIM
    }

    /// Dimension `N` of the EDR space.
    pub fn n_directions(self) -> usize {
        match self {
            Model::One => 1,
            Model::Two | Model::Three => 2,
        }
    }

    /// The β vectors as columns, not orthonormalized.
    pub fn true_basis(self) -> DMatrix<f64> {
        let cols: &[[f64; MODEL_DIM]] = match self {
            Model::One => &[[1.0, 1.0, 1.0, 1.0, 0.0]],
            Model::Two => &[[1.0, 0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0, 0.0]],
            Model::Three => &[[1.0, 0.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0, 0.0]],
        };
        DMatrix::from_fn(MODEL_DIM, cols.len(), |i, j| cols[j][i])
    }

    /// `Y = F(βᵀx, ε)` for one predictor row.
    pub fn response(self, x: &[f64], eps: f64) -> f64 {
        match self {
            Model::One => x[0] + x[1] + x[2] + x[3] + eps,
            Model::Two => x[0] * (x[0] + x[1] + 1.0) + eps,
            Model::Three => {
                let s = x[1] + 1.5;
                x[0] / (0.5 + s * s) + eps
            }
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// Seed for one deterministic stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Seed for one replicate of one experiment cell: each coordinate is
    /// folded in with a SplitMix64 finalizer, in the order
    /// master, model, n, kernel, method, replicate.
    pub fn derive(self, model: Model, n: usize, kernel_index: usize, method_index: usize, replicate: usize) -> RngSeed {
        let mut h = splitmix64(self.0);
        for part in [
            model.id() as u64,
            n as u64,
            kernel_index as u64,
            method_index as u64,
            replicate as u64,
        ] {
            h = splitmix64(h ^ part.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        }
        RngSeed(h)
    }

    /// Independent stream labelled by `tag`, used for auxiliary draws such
    /// as calibration samples.
    pub fn child(self, tag: u64) -> RngSeed {
        RngSeed(splitmix64(splitmix64(self.0) ^ tag.wrapping_mul(0xD1B5_4A32_D192_ED03)))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A generated sample together with the noise that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSample {
    pub sample: Sample,
    pub noise: DVector<f64>,
}

pub fn generate(model: Model, n: usize, seed: RngSeed) -> Result<SimulatedSample> {
    if n < 2 {
        return Err(EdrError::Parameter(format!("sample size must be at least 2, got {n}")));
    }
    let mut rng = seed.rng();
    let mut xs = DMatrix::zeros(n, MODEL_DIM);
    let mut ys = DVector::zeros(n);
    let mut noise = DVector::zeros(n);
    let mut row = [0.0; MODEL_DIM];
    for i in 0..n {
        for (j, v) in row.iter_mut().enumerate() {
            *v = rng.sample(StandardNormal);
            xs[(i, j)] = *v;
        }
        let eps: f64 = rng.sample(StandardNormal);
        noise[i] = eps;
        ys[i] = model.response(&row, eps);
    }
    Ok(SimulatedSample {
        sample: Sample::new(xs, ys)?,
        noise,
    })
}

/// Projector onto the model's EDR space.
pub fn true_projector(model: Model) -> Projector {
    projector_onto_span(&model.true_basis()).expect("model bases are full rank")
}
