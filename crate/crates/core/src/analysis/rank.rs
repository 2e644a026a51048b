use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::quadrature::QuadratureSpec;
use crate::sensing::{assemble_g, SensorSuite};
use crate::spectral::{BoundaryRegion, ModeIndex, ModeSet, RectDomain};

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Sensor functionals against one eigenvalue group: `q x r_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GMatrix {
    pub eigenvalue: f64,
    entries: DMatrix<f64>,
    singular_values: Vec<f64>,
}

impl GMatrix {
    pub fn new(eigenvalue: f64, entries: DMatrix<f64>) -> Self {
        let singular_values = singular_values(&entries);
        Self {
            eigenvalue,
            entries,
            singular_values,
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.shape()
    }

    /// Nonincreasing, `min(q, r_n)` values.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// The `r_n`-th singular value; zero when `q < r_n`.
    pub fn sigma_min(&self) -> f64 {
        let r_n = self.entries.ncols();
        if self.entries.nrows() < r_n {
            0.0
        } else {
            self.singular_values.get(r_n - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn numerical_rank(&self, threshold: f64) -> usize {
        self.singular_values.iter().filter(|&&s| s > threshold).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupDiagnostic {
    pub eigenvalue: f64,
    pub modes: Vec<ModeIndex>,
    pub multiplicity: usize,
    pub rank: usize,
    pub sigma_min: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategicVerdict {
    pub strategic: bool,
    pub q: usize,
    /// Largest multiplicity over the truncated spectrum.
    pub r: usize,
    pub order: u32,
    /// Region the completeness assumption is declared on.
    pub gamma: BoundaryRegion,
    pub rank_tol: f64,
    /// Largest singular value over all groups.
    pub sigma_max: f64,
    /// `rank_tol * sigma_max`
    pub threshold: f64,
    pub per_group: Vec<GroupDiagnostic>,
    /// Positions in `per_group` of the groups that failed.
    pub failing_groups: Vec<usize>,
}

impl StrategicVerdict {
    /// Smallest per-group `sigma_min`.
    pub fn sigma_min_overall(&self) -> f64 {
        self.per_group
            .iter()
            .map(|g| g.sigma_min)
            .fold(f64::INFINITY, f64::min)
    }

    /// `1 / sigma_min_overall`: larger means closer to losing observability.
    pub fn observability_margin(&self) -> f64 {
        1.0 / self.sigma_min_overall()
    }
}

pub(crate) fn check_gamma(domain: &RectDomain, gamma: &BoundaryRegion) -> Result<()> {
    BoundaryRegion::new(domain, gamma.side(), gamma.lo(), gamma.hi()).map(|_| ())
}

pub(crate) fn check_rank_tol(rank_tol: f64) -> Result<()> {
    if rank_tol > 0.0 && rank_tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "tolerances.rank_tol",
            reason: format!("must be positive (got {rank_tol})"),
        })
    }
}

/// Assembles `G_n` for every group of the mode set.
pub fn assemble_all(
    suite: &SensorSuite,
    modeset: &ModeSet,
    quad: &QuadratureSpec,
) -> Result<Vec<GMatrix>> {
    modeset
        .groups()
        .iter()
        .map(|g| assemble_g(suite, g, modeset.domain(), quad))
        .collect()
}

/// Per-group rank test: strategic iff `q >= r` and every `G_n` has numerical
/// rank `r_n`, counting singular values above `rank_tol` times the largest
/// singular value over all groups.
pub fn rank_test(
    suite: &SensorSuite,
    modeset: &ModeSet,
    gamma: &BoundaryRegion,
    quad: &QuadratureSpec,
    rank_tol: f64,
) -> Result<StrategicVerdict> {
    check_rank_tol(rank_tol)?;
    check_gamma(modeset.domain(), gamma)?;
    let gs = assemble_all(suite, modeset, quad)?;
    Ok(verdict_from_matrices(suite.len(), modeset, gamma, &gs, rank_tol))
}

pub(crate) fn verdict_from_matrices(
    q: usize,
    modeset: &ModeSet,
    gamma: &BoundaryRegion,
    gs: &[GMatrix],
    rank_tol: f64,
) -> StrategicVerdict {
    let sigma_max = gs.iter().map(GMatrix::sigma_max).fold(0.0, f64::max);
    let threshold = rank_tol * sigma_max;
    let r = modeset.max_multiplicity();
    let mut per_group = Vec::with_capacity(gs.len());
    let mut failing_groups = Vec::new();
    for (k, (group, g)) in modeset.groups().iter().zip(gs).enumerate() {
        let multiplicity = group.multiplicity();
        let rank = if sigma_max > 0.0 {
            g.numerical_rank(threshold)
        } else {
            0
        };
        let pass = rank == multiplicity;
        if !pass {
            failing_groups.push(k);
        }
        per_group.push(GroupDiagnostic {
            eigenvalue: group.eigenvalue,
            modes: group.modes.iter().map(|m| m.index).collect(),
            multiplicity,
            rank,
            sigma_min: g.sigma_min(),
            pass,
        });
    }
    StrategicVerdict {
        strategic: q >= r && failing_groups.is_empty(),
        q,
        r,
        order: modeset.order(),
        gamma: *gamma,
        rank_tol,
        sigma_max,
        threshold,
        per_group,
        failing_groups,
    }
}
