//! Recovery of the initial gradient trace on a boundary region from sampled
//! outputs, and the trace error norms.
//!
//! Coefficients are estimated by Tikhonov least squares over the stacked
//! samples `y_i(t_k)`, then mapped to the gradient trace. Errors use the
//! line-integral norm `(int |grad e|^2 ds)^(1/2)` of the trace error, with an
//! optional spectral weight `(lambda_a / lambda_1)^(s/2)` on each coefficient.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::tikhonov_solve;
use crate::quadrature::{GaussLegendre, QuadratureSpec};
use crate::sensing::SensorSuite;
use crate::simulate::{gradient_of, OutputRecord, StateCoeffs};
use crate::spectral::{BoundaryRegion, ModeSet, Side};

/// Below this `sigma_min / sigma_max` an unregularized solve is refused.
pub const SINGULAR_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SurrogateNorm {
    pub weight_exponent: f64,
}

impl SurrogateNorm {
    fn weights(&self, modeset: &ModeSet) -> Vec<f64> {
        let lambda = modeset.eigenvalues();
        if self.weight_exponent == 0.0 {
            return vec![1.0; lambda.len()];
        }
        let base = lambda[0].abs();
        lambda
            .iter()
            .map(|l| (l.abs() / base).powf(0.5 * self.weight_exponent))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientTrace {
    pub gamma: BoundaryRegion,
    pub arc: Vec<f64>,
    /// Cartesian gradient at each arc sample.
    pub values: Vec<[f64; 2]>,
}

impl GradientTrace {
    /// `(tangential, outward normal)` components per sample.
    pub fn tangential_normal(&self) -> Vec<(f64, f64)> {
        let side = self.gamma.side();
        self.values.iter().map(|v| side.tangential_normal(*v)).collect()
    }
}

/// Gradient of the truncated expansion at `samples` evenly spaced arc
/// positions on `gamma`, ends included.
pub fn gradient_trace(
    coeffs: &StateCoeffs,
    modeset: &ModeSet,
    gamma: &BoundaryRegion,
    samples: usize,
) -> Result<GradientTrace> {
    if !coeffs.matches(modeset) {
        return Err(Error::ModeSetMismatch);
    }
    let samples = samples.max(2);
    let domain = modeset.domain();
    let arc: Vec<f64> = (0..samples)
        .map(|k| {
            if k + 1 == samples {
                gamma.hi()
            } else {
                gamma.lo() + gamma.length() * k as f64 / (samples - 1) as f64
            }
        })
        .collect();
    let values = arc
        .iter()
        .map(|&s| gradient_of(coeffs.values(), modeset, gamma.point(domain, s)))
        .collect();
    Ok(GradientTrace {
        gamma: *gamma,
        arc,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub err_gamma: f64,
    pub err_boundary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub estimated_coeffs: StateCoeffs,
    pub trace_on_gamma: GradientTrace,
    /// Whole sides, in `Side::ALL` order.
    pub trace_on_boundary: Vec<GradientTrace>,
    pub err_gamma: Option<f64>,
    pub err_boundary: Option<f64>,
    pub regularization: f64,
    /// Euclidean norm of the stacked output residual.
    pub residual: f64,
    /// `sigma_min / sigma_max` of the observation map.
    pub rcond: f64,
    pub norm: SurrogateNorm,
}

/// Default trace sampling density: `8 J + 1` points per region.
fn trace_samples(modeset: &ModeSet) -> usize {
    8 * modeset.order() as usize + 1
}

fn check_record(record: &OutputRecord, q: usize) -> Result<()> {
    if record.samples.len() != record.times.len() {
        return Err(Error::HorizonMismatch(format!(
            "{} samples for {} times",
            record.samples.len(),
            record.times.len()
        )));
    }
    if record.times.is_empty() {
        return Err(Error::HorizonMismatch("record has no samples".into()));
    }
    if record.times[0] != 0.0 {
        return Err(Error::HorizonMismatch(format!(
            "first sample at t = {}, expected 0",
            record.times[0]
        )));
    }
    if record.times.windows(2).any(|w| !(w[1] > w[0])) || !record.horizon().is_finite() {
        return Err(Error::HorizonMismatch("times are not strictly increasing".into()));
    }
    if let Some(row) = record.samples.iter().find(|r| r.len() != q) {
        return Err(Error::ChannelMismatch {
            expected: q,
            found: row.len(),
        });
    }
    Ok(())
}

pub fn reconstruct_gradient(
    record: &OutputRecord,
    suite: &SensorSuite,
    modeset: &ModeSet,
    gamma: &BoundaryRegion,
    reg_lambda: f64,
    quad: &QuadratureSpec,
    truth: Option<&StateCoeffs>,
) -> Result<ReconstructionResult> {
    reconstruct_gradient_with(
        record,
        suite,
        modeset,
        gamma,
        reg_lambda,
        quad,
        truth,
        SurrogateNorm::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn reconstruct_gradient_with(
    record: &OutputRecord,
    suite: &SensorSuite,
    modeset: &ModeSet,
    gamma: &BoundaryRegion,
    reg_lambda: f64,
    quad: &QuadratureSpec,
    truth: Option<&StateCoeffs>,
    norm: SurrogateNorm,
) -> Result<ReconstructionResult> {
    if suite.is_empty() {
        return Err(Error::EmptySuite);
    }
    check_record(record, suite.len())?;
    if !(reg_lambda >= 0.0 && reg_lambda.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "regularization.lambda",
            reason: format!("must be non-negative (got {reg_lambda})"),
        });
    }
    let domain = modeset.domain();
    BoundaryRegion::new(domain, gamma.side(), gamma.lo(), gamma.hi())?;
    if truth.is_some_and(|t| !t.matches(modeset)) {
        return Err(Error::ModeSetMismatch);
    }

    let c = suite.value_matrix(modeset, quad)?;
    let lambda = modeset.eigenvalues();
    let (q, n) = (suite.len(), lambda.len());
    let rows = record.len() * q;
    let mut design = DMatrix::zeros(rows, n);
    let mut y = DVector::zeros(rows);
    for (k, (&t, sample)) in record.times.iter().zip(&record.samples).enumerate() {
        let decay: Vec<f64> = lambda.iter().map(|l| (l * t).exp()).collect();
        for i in 0..q {
            let row = k * q + i;
            y[row] = sample[i];
            for a in 0..n {
                design[(row, a)] = c[(i, a)] * decay[a];
            }
        }
    }

    let sol = tikhonov_solve(&design, &y, reg_lambda);
    let sigma_max = sol.singular_values.first().copied().unwrap_or(0.0);
    let sigma_min = if rows < n {
        0.0
    } else {
        sol.singular_values.last().copied().unwrap_or(0.0)
    };
    let rcond = if sigma_max > 0.0 { sigma_min / sigma_max } else { 0.0 };
    if reg_lambda == 0.0 && !(rcond >= SINGULAR_RCOND) {
        return Err(Error::SingularSystem { rcond });
    }
    let residual = (&design * &sol.coeffs - &y).norm();
    let estimated = StateCoeffs::from_values(modeset, sol.coeffs.iter().copied().collect())?;

    let samples = trace_samples(modeset);
    let trace_on_gamma = gradient_trace(&estimated, modeset, gamma, samples)?;
    let trace_on_boundary = Side::ALL
        .iter()
        .map(|&side| {
            gradient_trace(
                &estimated,
                modeset,
                &BoundaryRegion::whole_side(domain, side),
                samples,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let errors = truth
        .map(|t| error_norms_with(t, &estimated, modeset, std::slice::from_ref(gamma), quad, norm))
        .transpose()?;

    Ok(ReconstructionResult {
        estimated_coeffs: estimated,
        trace_on_gamma,
        trace_on_boundary,
        err_gamma: errors.map(|e| e.err_gamma),
        err_boundary: errors.map(|e| e.err_boundary),
        regularization: reg_lambda,
        residual,
        rcond,
        norm,
    })
}

/// Trace error norms on `gamma` and on the whole boundary.
pub fn error_norms(
    true_coeffs: &StateCoeffs,
    estimate: &StateCoeffs,
    modeset: &ModeSet,
    gamma: &BoundaryRegion,
    quad: &QuadratureSpec,
) -> Result<ErrorNorms> {
    error_norms_with(
        true_coeffs,
        estimate,
        modeset,
        std::slice::from_ref(gamma),
        quad,
        SurrogateNorm::default(),
    )
}

/// Trace error norms on a union of regions and on the whole boundary. The
/// boundary is cut at every region endpoint and the same pieces feed both
/// sums in the same order, so the region norm never exceeds the boundary
/// norm and equals it when the regions cover every side.
pub fn error_norms_with(
    true_coeffs: &StateCoeffs,
    estimate: &StateCoeffs,
    modeset: &ModeSet,
    regions: &[BoundaryRegion],
    quad: &QuadratureSpec,
    norm: SurrogateNorm,
) -> Result<ErrorNorms> {
    if !true_coeffs.matches(modeset) || !estimate.matches(modeset) {
        return Err(Error::ModeSetMismatch);
    }
    let domain = modeset.domain();
    for r in regions {
        BoundaryRegion::new(domain, r.side(), r.lo(), r.hi())?;
    }
    let weights = norm.weights(modeset);
    let e: Vec<f64> = true_coeffs
        .values()
        .iter()
        .zip(estimate.values())
        .zip(&weights)
        .map(|((t, s), w)| w * (t - s))
        .collect();

    let rule = GaussLegendre::new(quad.line_order);
    let j = modeset.order() as f64;
    let mut on_regions = 0.0;
    let mut on_boundary = 0.0;
    for side in Side::ALL {
        let len = domain.side_length(side);
        let mut cuts = vec![0.0, len];
        for r in regions.iter().filter(|r| r.side() == side) {
            cuts.push(r.lo());
            cuts.push(r.hi());
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let panels = ((2.0 * j * (hi - lo) / len).ceil() as usize).max(1);
            let piece = rule.integrate_composite(lo, hi, panels, |s| {
                let g = gradient_of(&e, modeset, side.point(domain, s));
                g[0] * g[0] + g[1] * g[1]
            });
            let mid = 0.5 * (lo + hi);
            if regions
                .iter()
                .any(|r| r.side() == side && r.lo() <= mid && mid <= r.hi())
            {
                on_regions += piece;
            }
            on_boundary += piece;
        }
    }
    Ok(ErrorNorms {
        err_gamma: on_regions.sqrt(),
        err_boundary: on_boundary.sqrt(),
    })
}
