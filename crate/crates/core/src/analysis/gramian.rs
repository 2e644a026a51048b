use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::quadrature::QuadratureSpec;
use crate::sensing::SensorSuite;
use crate::spectral::ModeSet;

pub const DEFAULT_PD_TOL: f64 = 1e-10;

/// Truncated observability Gramian in spectral coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservabilityGramian {
    pub dimension: usize,
    pub horizon: f64,
    pub matrix: DMatrix<f64>,
    /// Nondecreasing.
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramianSummary {
    pub dimension: usize,
    pub horizon: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// `max / min`, absent when the minimum is not positive.
    pub condition: Option<f64>,
}

impl ObservabilityGramian {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn summary(&self) -> GramianSummary {
        let (lo, hi) = (self.min_eigenvalue(), self.max_eigenvalue());
        GramianSummary {
            dimension: self.dimension,
            horizon: self.horizon,
            min_eigenvalue: lo,
            max_eigenvalue: hi,
            condition: (lo > 0.0).then(|| hi / lo),
        }
    }
}

/// `M_ab = sum_i g_i(a) g_i(b) (exp((l_a + l_b) T) - 1) / (l_a + l_b)` with
/// `g_i` the value functional of sensor `i`.
pub fn gramian(
    suite: &SensorSuite,
    modeset: &ModeSet,
    horizon: f64,
    quad: &QuadratureSpec,
) -> Result<ObservabilityGramian> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::NonPositiveHorizon(horizon));
    }
    let c = suite.value_matrix(modeset, quad)?;
    let lambda = modeset.eigenvalues();
    let n = lambda.len();
    let ctc = c.transpose() * &c;
    let mut matrix = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..=a {
            let s = lambda[a] + lambda[b];
            let w = (s * horizon).exp_m1() / s;
            let v = 0.5 * (ctc[(a, b)] + ctc[(b, a)]) * w;
            matrix[(a, b)] = v;
            matrix[(b, a)] = v;
        }
    }
    let eigenvalues = symmetric_eigenvalues(&matrix);
    Ok(ObservabilityGramian {
        dimension: n,
        horizon,
        matrix,
        eigenvalues,
    })
}

/// True iff the smallest eigenvalue exceeds `pd_tol` times the largest; a
/// zero matrix is never positive definite.
pub fn positive_definite_test(gram: &ObservabilityGramian, pd_tol: f64) -> bool {
    let hi = gram.max_eigenvalue();
    hi > 0.0 && gram.min_eigenvalue() > pd_tol * hi
}
